//! Parameter sweeps and their CSV output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{monte_carlo, DropResult, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{empirical_cdf, ufd_opportunity_fraction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    LambdaEca,
    LambdaFd,
    CellRadius,
    Beta,
    Tolerance,
    CwMin,
    NPerCell,
    Rho,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::LambdaEca,
        SweepParam::LambdaFd,
        SweepParam::CellRadius,
        SweepParam::Beta,
        SweepParam::Tolerance,
        SweepParam::CwMin,
        SweepParam::NPerCell,
        SweepParam::Rho,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LambdaEca => "lambda_eca",
            SweepParam::LambdaFd => "lambda_fd",
            SweepParam::CellRadius => "cell_radius",
            SweepParam::Beta => "beta",
            SweepParam::Tolerance => "tolerance",
            SweepParam::CwMin => "cw_min",
            SweepParam::NPerCell => "n_per_cell",
            SweepParam::Rho => "rho",
        }
    }

    /// `base` with this parameter set to `value`, validated.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut cfg = base.clone();
        let integer = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(Error::config(self.name(), format!("{v} is not a non-negative integer")))
            }
        };
        match self {
            SweepParam::LambdaEca => cfg.lambda_eca = value,
            SweepParam::LambdaFd => cfg.lambda_fd = value,
            SweepParam::CellRadius => cfg.cell_radius = value,
            SweepParam::Beta => cfg.channel.beta_db = value,
            SweepParam::Tolerance => cfg.tolerance_db = value,
            SweepParam::CwMin => cfg.mac.cw_min = integer(value)? as u32,
            SweepParam::NPerCell => cfg.n_per_cell = integer(value)? as usize,
            SweepParam::Rho => cfg.channel.rho = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config("sweep", format!("unknown sweep parameter {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub drops: usize,
}

impl SweepSpec {
    /// Parses `NAME=v1,v2,...`.
    pub fn parse(text: &str, drops: usize) -> Result<Self> {
        let (name, values) = text
            .split_once('=')
            .ok_or_else(|| Error::config("sweep", "expected NAME=v1,v2,..."))?;
        let param: SweepParam = name.trim().parse()?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(param.name(), format!("{v:?} is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = SweepSpec { param, values, drops };
        spec.validate(&SimConfig::default())?;
        Ok(spec)
    }

    pub fn validate(&self, base: &SimConfig) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::config("drops", "must be at least 1"));
        }
        if self.values.is_empty() {
            return Err(Error::config(self.param.name(), "no sweep values"));
        }
        for &v in &self.values {
            self.param.apply(base, v)?;
        }
        Ok(())
    }
}

/// Base seed of sweep point `index`; drop `i` of the point uses this plus `i`.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index as u64 + 1);
    rng.next_u64()
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub value: f64,
    pub seed: u64,
    pub drops: Vec<DropResult>,
}

impl PointResult {
    pub fn thetas(&self) -> Vec<f64> {
        self.drops.iter().map(|d| d.gain.theta).collect()
    }
}

pub fn run_points(spec: &SweepSpec, base: &SimConfig, base_seed: u64) -> Result<Vec<PointResult>> {
    spec.validate(base)?;
    spec.values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let cfg = spec.param.apply(base, value)?;
            let seed = point_seed(base_seed, i);
            let drops = monte_carlo(&cfg, spec.drops, seed)?;
            Ok(PointResult { value, seed, drops })
        })
        .collect()
}

/// One CSV row per (sweep value, drop).
#[derive(Debug, Serialize)]
pub struct Row<'a> {
    pub parameter: &'a str,
    pub value: f64,
    pub seed: u64,
    pub theta: f64,
    pub chi_str: f64,
    pub chi_l: f64,
    pub bfd_count: u64,
    pub ufd_natural: u64,
    pub ufd_created: u64,
    pub opportunity_fraction: f64,
}

impl<'a> Row<'a> {
    pub fn new(parameter: &'a str, value: f64, d: &DropResult) -> Self {
        let s = &d.paired.str;
        Row {
            parameter,
            value,
            seed: d.paired.seed,
            theta: d.gain.theta,
            chi_str: d.gain.chi_str,
            chi_l: d.gain.chi_legacy,
            bfd_count: s.counters.bfd,
            ufd_natural: s.counters.ufd_natural,
            ufd_created: s.counters.ufd_created,
            opportunity_fraction: ufd_opportunity_fraction(s),
        }
    }
}

pub fn write_rows(path: &Path, parameter: &str, points: &[PointResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        for d in &p.drops {
            w.serialize(Row::new(parameter, p.value, d))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `out.csv` -> `out.<param>=<value>.cdf.csv` next to it.
pub fn cdf_path(out: &Path, parameter: &str, value: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{parameter}={value}.cdf.csv"))
}

pub fn write_cdf(path: &Path, thetas: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta", "cdf"])?;
    for (v, f) in empirical_cdf(thetas)? {
        w.write_record([v.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes the per-drop CSV plus one CDF file per value.
/// Returns the paths written.
pub fn run_sweep(spec: &SweepSpec, base: &SimConfig, base_seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let points = run_points(spec, base, base_seed)?;
    let name = spec.param.name();
    write_rows(out, name, &points)?;
    let mut written = vec![out.to_path_buf()];
    for p in &points {
        let path = cdf_path(out, name, p.value);
        write_cdf(&path, &p.thetas())?;
        written.push(path);
    }
    Ok(written)
}
