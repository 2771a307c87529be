//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fdwlan::engine::{run, run_paired, Mode, SimConfig, SimLength};
use fdwlan::mac::{deterministic_backoff, random_backoff, AccessMode, MacParams};
use fdwlan::metrics::{quantile, throughput, ufd_opportunity_fraction};
use fdwlan::sensitivity::{max_cst, MeasurementTable};
use fdwlan::sweep::{run_points, run_sweep, PointResult, SweepParam, SweepSpec};
use fdwlan::topology::NodeId;

const DROPS: usize = 100;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sweep(base: &SimConfig, param: SweepParam, values: &[f64], seed: u64) -> Vec<PointResult> {
    let spec = SweepSpec { param, values: values.to_vec(), drops: DROPS };
    run_points(&spec, base, seed).expect("sweep runs")
}

fn mean_thetas(points: &[PointResult]) -> Vec<f64> {
    points.iter().map(|p| mean(&p.thetas())).collect()
}

fn fmt(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

/// One cell, no fading, negligible RSI, small radius so no pair of
/// simultaneous frames can capture the receiver.
fn ideal_cell(n: usize) -> SimConfig {
    let mut cfg = SimConfig {
        rings: 0,
        n_per_cell: n,
        cell_radius: 5.0,
        ..SimConfig::default()
    };
    cfg.channel.fading = false;
    cfg.channel.sic_capability_db = 300.0;
    cfg.channel.pathloss_ref_db = 20.0;
    cfg.channel.pathloss_exp = 2.0;
    cfg
}

fn table_one() -> Verdict {
    // (node, A, neighbor, B, expected max CST), C = 5 dB throughout
    let rows: [(usize, f64, usize, f64, f64); 10] = [
        (1, -55.0, 3, -77.0, -72.0),
        (1, -55.0, 4, -55.0, -55.0),
        (2, -45.0, 3, -50.0, -45.0),
        (2, -45.0, 4, -65.0, -60.0),
        (3, -55.0, 1, -80.0, -75.0),
        (3, -55.0, 2, -50.0, -55.0),
        (3, -55.0, 4, -70.0, -65.0),
        (4, -35.0, 1, -55.0, -50.0),
        (4, -35.0, 2, -60.0, -55.0),
        (4, -35.0, 3, -70.0, -65.0),
    ];
    let mut table = MeasurementTable::new(5.0).unwrap();
    for sta in 1..=4 {
        let a = rows.iter().find(|r| r.0 == sta).unwrap().1;
        let heard = rows.iter().filter(|r| r.0 == sta).map(|r| (NodeId(r.2), r.3));
        table.insert(NodeId(sta), a, heard);
    }
    let mut mismatches = Vec::new();
    for &(node, _, neighbor, _, expected) in &rows {
        let a = table.ap_rssi(NodeId(node)).unwrap();
        let b = table.neighbor_rssi(NodeId(node), NodeId(neighbor)).unwrap();
        let got = max_cst(a, b, table.tolerance_db);
        if got != expected {
            mismatches.push(format!("STA{node}/STA{neighbor}: {got} != {expected}"));
        }
    }
    verdict(mismatches.is_empty(), format!("10 cells, mismatches {mismatches:?}"))
}

fn backoff_formulas() -> Verdict {
    let bd = deterministic_backoff(&MacParams { cw_min: 10, ..MacParams::default() });
    let params = MacParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // stage 0: 16 bins, 15 dof; stage 1: 32 bins, 31 dof; critical values at p = 0.01
    let mut chi = Vec::new();
    for (stage, critical) in [(0u32, 30.578), (1, 52.191)] {
        let bins = (params.cw_min << stage) as usize;
        let draws = 100_000;
        let mut counts = vec![0u64; bins];
        for _ in 0..draws {
            counts[random_backoff(stage, &params, &mut rng) as usize] += 1;
        }
        let expected = draws as f64 / bins as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        chi.push((stage, stat, critical));
    }
    let pass = bd == 4 && chi.iter().all(|&(_, s, c)| s < c);
    verdict(pass, format!("B_d(cw_min=10)={bd}, chi-square (stage, stat, critical) {chi:.3?}"))
}

fn collision_free_schedule() -> Verdict {
    let base = SimConfig { mode: Mode::Str, ..ideal_cell(5) };
    let window = |seed: u64| {
        let warm = run(&SimConfig { length: SimLength::Slots(1_000), ..base.clone() }, seed).unwrap();
        let full = run(&SimConfig { length: SimLength::Slots(11_000), ..base.clone() }, seed).unwrap();
        full.counters.collision_slots - warm.counters.collision_slots
    };
    let collisions = window(base.seed);
    let quiet = (0..100).filter(|&s| window(s) == 0).count();
    verdict(
        collisions == 0,
        format!("seed {}: {collisions} collision slots in steps 1000..11000 (seeds 0..100 quiet: {quiet})", base.seed),
    )
}

fn bounds_and_degenerate_cases(max_theta_seen: f64) -> Verdict {
    let ca_only = SimConfig { lambda_eca: 0.0, ..SimConfig::default() };
    let unity = sweep(&ca_only, SweepParam::LambdaEca, &[0.0], 40)[0].thetas();
    let all_one = unity.iter().all(|&t| t == 1.0);

    let ideal: Vec<f64> = (0..10)
        .map(|seed| {
            let p = run_paired(&ideal_cell(5), seed).unwrap();
            throughput(&p.str).unwrap() / throughput(&p.legacy).unwrap()
        })
        .collect();
    let ideal_min = ideal.iter().copied().fold(f64::INFINITY, f64::min);
    let max_theta = ideal.iter().copied().fold(max_theta_seen, f64::max);
    let pass = max_theta <= 2.01 && all_one && ideal_min >= 1.9;
    verdict(
        pass,
        format!("max theta over all runs {max_theta:.4} (<= 2.01), lambda_eca=0 all exactly 1: {all_one}, ideal single cell min {ideal_min:.4} (>= 1.9)"),
    )
}

fn capability_mix_trend(points: &[PointResult]) -> Verdict {
    let p80: Vec<f64> = points.iter().map(|p| quantile(&p.thetas(), 0.8).unwrap()).collect();
    let anchors = [1.62, 1.8, 2.0];
    let increasing = p80.windows(2).all(|w| w[1] > w[0]);
    let top = p80[2] >= 1.7;
    let within = p80.iter().zip(anchors).all(|(v, a)| (v - a).abs() <= 0.25);
    verdict(
        increasing && top && within,
        format!("p80 at lambda_eca 0.5/0.75/1.0 = {} (strictly increasing, last >= 1.7, each within 0.25 of {anchors:?})", fmt(&p80)),
    )
}

fn ufd_radius_trend(natural: &[PointResult], adapted: &[PointResult], radii: &[f64]) -> Verdict {
    let n = mean_thetas(natural);
    let a = mean_thetas(adapted);
    let ordered = n.iter().zip(&a).all(|(n, a)| a > n);
    let small = radii
        .iter()
        .enumerate()
        .filter(|(_, &r)| r <= 20.0)
        .all(|(i, _)| (0.95..=1.1).contains(&n[i]) && a[i] >= 1.3);
    verdict(
        ordered && small,
        format!(
            "radii {radii:?}: natural {} adapted {} (adapted > natural everywhere; at <= 20 m natural in [0.95, 1.1], adapted >= 1.3)",
            fmt(&n),
            fmt(&a)
        ),
    )
}

fn margin_trend(points: &[PointResult]) -> Verdict {
    let f: Vec<f64> = points
        .iter()
        .map(|p| mean(&p.drops.iter().map(|d| ufd_opportunity_fraction(&d.paired.str)).collect::<Vec<_>>()))
        .collect();
    verdict(f[1] < f[0], format!("created-opportunity fraction at C=5/10 dB: {}", fmt(&f)))
}

fn threshold_and_rsi_trend(beta: &[PointResult], rho_one: &PointResult, rho_low: &PointResult) -> Verdict {
    let b = mean_thetas(beta);
    let nonincreasing = b.windows(2).all(|w| w[1] <= w[0]);
    let worse = rho_one
        .drops
        .iter()
        .zip(&rho_low.drops)
        .filter(|(one, low)| low.gain.theta > one.gain.theta)
        .count();
    let paired = rho_one.drops.iter().zip(&rho_low.drops).all(|(a, b)| a.paired.seed == b.paired.seed);
    verdict(
        nonincreasing && worse == 0 && paired,
        format!(
            "theta at beta 10/15/20/25 = {} (nonincreasing); rho 0.6 vs 1: mean {:.3} vs {:.3}, drops where rho 0.6 wins: {worse}",
            fmt(&b),
            mean(&rho_low.thetas()),
            mean(&rho_one.thetas())
        ),
    )
}

fn contention_window_trend(n15: f64, n20: f64, n20_cw32: f64) -> Verdict {
    let pass = n20 <= n15 && (n20_cw32 - n15).abs() <= 0.1;
    verdict(
        pass,
        format!("theta N=15/cw16 {n15:.3}, N=20/cw16 {n20:.3} (<=), N=20/cw32 {n20_cw32:.3} (within 0.1 of N=15)"),
    )
}

fn determinism() -> Verdict {
    let base = SimConfig { length: SimLength::Seconds(0.05), ..SimConfig::default() };
    let spec = SweepSpec { param: SweepParam::LambdaEca, values: vec![0.5, 1.0], drops: 3 };
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let out = dir.path().join(name);
        let files = run_sweep(&spec, &base, 99, &out).unwrap();
        files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>()
    };
    let a = read("a.csv");
    let b = read("b.csv");
    let rows = String::from_utf8_lossy(&a[0]).lines().count();
    verdict(a == b && rows == 7, format!("{} files byte-identical across reruns: {}, rows {rows}", a.len(), a == b))
}

fn ca_oracle() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    for n in [2usize, 5, 10] {
        // n contenders: n - 1 stations plus the AP
        let mut cfg = ideal_cell(n - 1);
        cfg.lambda_eca = 0.0;
        cfg.ap_access = AccessMode::Ca;
        cfg.mode = Mode::Legacy;
        cfg.length = SimLength::Seconds(20.0);
        let r = run(&cfg, 7).unwrap();
        let sim = throughput(&r).unwrap();
        let sim_coll = r.counters.collision_slots as f64 / (r.counters.collision_slots + r.counters.success_slots) as f64;
        let (oracle, oracle_coll) = fdwlan_acceptance::naive_dcf(n, 20.0, 1_000 + n as u64);
        let err = (sim - oracle).abs() / oracle;
        pass &= err <= 0.05;
        let mut line = format!("n={n}: {:.3} vs {:.3} Mb/s ({:.2}%)", sim / 1e6, oracle / 1e6, err * 100.0);
        if n == 5 {
            let cerr = (sim_coll - oracle_coll).abs() / oracle_coll;
            pass &= cerr <= 0.05;
            line += &format!(", collision share {sim_coll:.4} vs {oracle_coll:.4} ({:.2}%)", cerr * 100.0);
        }
        details.push(line);
    }
    verdict(pass, details.join("; "))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut max_theta = 0.0f64;
    let mut track = |points: &[PointResult]| {
        for p in points {
            for t in p.thetas() {
                max_theta = max_theta.max(t);
            }
        }
    };

    results.push((1, "measurement table max CST", table_one()));
    results.push((2, "backoff formulas", backoff_formulas()));
    results.push((3, "collision-free ECA schedule", collision_free_schedule()));

    let default = SimConfig::default();
    let mix = sweep(&default, SweepParam::LambdaEca, &[0.5, 0.75, 1.0], 1);
    track(&mix);

    let radii = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0];
    let ufd = SimConfig { lambda_fd: 0.0, ..SimConfig::default() };
    let natural = sweep(&SimConfig { adaptation: false, ..ufd.clone() }, SweepParam::CellRadius, &radii, 2);
    let adapted = sweep(&SimConfig { adaptation: true, ..ufd.clone() }, SweepParam::CellRadius, &radii, 2);
    track(&natural);
    track(&adapted);

    let margins = sweep(&SimConfig { cell_radius: 35.0, ..ufd }, SweepParam::Tolerance, &[5.0, 10.0], 3);
    track(&margins);

    let beta = sweep(&default, SweepParam::Beta, &[10.0, 15.0, 20.0, 25.0], 4);
    let rho_one = sweep(&default, SweepParam::Rho, &[1.0], 5).remove(0);
    let rho_low = sweep(&default, SweepParam::Rho, &[0.6], 5).remove(0);
    track(&beta);
    track(std::slice::from_ref(&rho_one));
    track(std::slice::from_ref(&rho_low));

    let stations = sweep(&default, SweepParam::NPerCell, &[15.0, 20.0], 6);
    let n20 = SimConfig { n_per_cell: 20, ..SimConfig::default() };
    let wide = sweep(&n20, SweepParam::CwMin, &[32.0], 7);
    track(&stations);
    track(&wide);

    results.push((4, "gain bounds and degenerate cases", bounds_and_degenerate_cases(max_theta)));
    results.push((5, "gain against ECA share", capability_mix_trend(&mix)));
    results.push((6, "UFD gain against cell radius", ufd_radius_trend(&natural, &adapted, &radii)));
    results.push((7, "created opportunities against margin", margin_trend(&margins)));
    results.push((8, "gain against SINR threshold and RSI", threshold_and_rsi_trend(&beta, &rho_one, &rho_low)));
    let st = mean_thetas(&stations);
    results.push((9, "gain against station count and window", contention_window_trend(st[0], st[1], mean_thetas(&wide)[0])));
    results.push((10, "deterministic output", determinism()));
    results.push((11, "CA throughput against naive oracle", ca_oracle()));

    let mut failed = 0;
    for (id, name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} {name}: {}", v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed, {DROPS} drops per point, {:.0} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
