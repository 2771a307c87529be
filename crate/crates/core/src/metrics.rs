//! Throughput, STR gain, empirical CDFs and opportunity statistics.

use crate::engine::SimResult;
use crate::error::{Error, Result};

/// Delivered MAC payload bits per second of virtual time.
pub fn throughput(result: &SimResult) -> Result<f64> {
    let secs = result.elapsed.as_secs_f64();
    if secs <= 0.0 {
        return Err(Error::Domain("throughput of a run with zero elapsed time".into()));
    }
    Ok(result.total_bits() as f64 / secs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainSample {
    pub theta: f64,
    pub chi_str: f64,
    pub chi_legacy: f64,
    pub drop: usize,
}

/// `chi_str / chi_legacy` for one paired drop.
pub fn str_gain(legacy: &SimResult, str: &SimResult, drop: usize) -> Result<GainSample> {
    gain_from_throughputs(throughput(legacy)?, throughput(str)?, drop)
}

pub fn gain_from_throughputs(chi_legacy: f64, chi_str: f64, drop: usize) -> Result<GainSample> {
    if chi_legacy <= 0.0 {
        return Err(Error::Domain(format!("legacy throughput is zero in drop {drop}")));
    }
    Ok(GainSample {
        theta: chi_str / chi_legacy,
        chi_str,
        chi_legacy,
        drop,
    })
}

/// Right-continuous step CDF: one `(value, fraction <= value)` point per
/// distinct sample.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Domain("CDF of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match cdf.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => cdf.push((*v, frac)),
        }
    }
    Ok(cdf)
}

/// Lower empirical quantile: the smallest sample `x` with `F(x) >= q`.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level {q} not in [0, 1]")));
    }
    let cdf = empirical_cdf(samples)?;
    Ok(cdf
        .iter()
        .find(|(_, f)| *f >= q - 1e-12)
        .map(|(v, _)| *v)
        .unwrap_or(cdf[cdf.len() - 1].0))
}

/// Share of predicted primaries for which at least one created-eligible
/// target existed.
pub fn ufd_opportunity_fraction(result: &SimResult) -> f64 {
    let c = &result.counters;
    if c.predicted_primaries == 0 {
        0.0
    } else {
        c.created_opportunities as f64 / c.predicted_primaries as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Counters, TimeByKind};
    use proptest::prelude::*;
    use std::time::Duration;

    fn result(bits: u64, millis: u64) -> SimResult {
        SimResult {
            delivered_bits: vec![bits],
            elapsed: Duration::from_millis(millis),
            time_by_kind: TimeByKind::default(),
            counters: Counters::default(),
        }
    }

    #[test]
    fn throughput_examples() {
        assert!((throughput(&result(1_000_000, 100)).unwrap() - 1e7).abs() < 1e-6);
        assert!(throughput(&result(0, 0)).is_err());
        let a = throughput(&result(1000, 10)).unwrap();
        let b = throughput(&result(2000, 10)).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9);
    }

    #[test]
    fn gain_examples() {
        let g = str_gain(&result(1000, 10), &result(1000, 10), 0).unwrap();
        assert_eq!(g.theta, 1.0);
        let g = str_gain(&result(1000, 10), &result(2000, 10), 3).unwrap();
        assert_eq!((g.theta, g.drop), (2.0, 3));
        assert!(str_gain(&result(0, 10), &result(1000, 10), 0).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[1.0, 1.0, 1.0]).unwrap(), vec![(1.0, 1.0)]);
        assert_eq!(empirical_cdf(&[2.0, 1.0]).unwrap(), vec![(1.0, 0.5), (2.0, 1.0)]);
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn opportunity_fraction_without_primaries_is_zero() {
        assert_eq!(ufd_opportunity_fraction(&result(0, 1)), 0.0);
        let mut r = result(0, 1);
        r.counters.predicted_primaries = 4;
        r.counters.created_opportunities = 1;
        assert_eq!(ufd_opportunity_fraction(&r), 0.25);
    }

    /// Sorted-index oracle: element `ceil(q * n) - 1` of the sorted sample.
    fn sorted_quantile(samples: &[f64], q: f64) -> f64 {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let idx = ((q * s.len() as f64).ceil() as usize).max(1) - 1;
        s[idx]
    }

    #[test]
    fn eightieth_percentile_matches_oracle() {
        let samples: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        assert_eq!(quantile(&samples, 0.8).unwrap(), sorted_quantile(&samples, 0.8));
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.8).unwrap(), 4.0);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_ends_at_one(samples in proptest::collection::vec(0.0f64..3.0, 1..200)) {
            let cdf = empirical_cdf(&samples).unwrap();
            for w in cdf.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
            }
            prop_assert!(cdf.iter().all(|(_, f)| *f > 0.0 && *f <= 1.0));
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        }

        #[test]
        fn quantiles_match_sorted_order(samples in proptest::collection::vec(0.0f64..3.0, 1..200), q in 0.01f64..1.0) {
            prop_assert_eq!(quantile(&samples, q).unwrap(), sorted_quantile(&samples, q));
        }
    }
}
