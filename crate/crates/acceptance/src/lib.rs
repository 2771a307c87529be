//! Test-only reference models used by the acceptance suite.

use rand::{Rng, SeedableRng};

/// Saturated slotted DCF with identical success and collision durations,
/// written without any of the simulator's types.
pub fn naive_dcf(n: usize, seconds: f64, seed: u64) -> (f64, f64) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let (cw, m) = (16u64, 5u32);
    let slot = 9e-6;
    let data = 128.0 / 6e6 + (272.0 + 8000.0) / 54e6;
    let ack = (128.0 + 112.0) / 6e6;
    let busy = data + 16e-6 + ack + 34e-6;
    let mut stage = vec![0u32; n];
    let mut counter: Vec<u64> = (0..n).map(|_| rng.gen_range(0..cw)).collect();
    let (mut t, mut bits, mut succ, mut coll) = (0.0, 0.0, 0u64, 0u64);
    while t < seconds {
        let tx: Vec<usize> = (0..n).filter(|&i| counter[i] == 0).collect();
        if tx.is_empty() {
            counter.iter_mut().for_each(|c| *c -= 1);
            t += slot;
            continue;
        }
        t += busy;
        if tx.len() == 1 {
            bits += 8000.0;
            succ += 1;
            stage[tx[0]] = 0;
        } else {
            coll += 1;
            for &i in &tx {
                stage[i] = (stage[i] + 1).min(m);
            }
        }
        for &i in &tx {
            counter[i] = rng.gen_range(0..(cw << stage[i]));
        }
    }
    (bits / t, coll as f64 / (succ + coll) as f64)
}

