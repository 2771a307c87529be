use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use fdwlan::engine::{simulate_traced, Scenario, TraceRecord};
use fdwlan::sweep::{run_sweep, write_rows, PointResult, SweepSpec};
use fdwlan::{load_config, monte_carlo, Mode, Result, SimConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Legacy,
    Str,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

/// Multi-cell WLAN simulator comparing legacy operation with simultaneous
/// transmit and receive.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Run configuration (flat key = value file).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mode used for the trace run.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    adaptation: Option<OnOff>,
    /// NAME=v1,v2,... over lambda_eca, lambda_fd, cell_radius, beta,
    /// tolerance, cw_min, n_per_cell or rho.
    #[arg(long)]
    sweep: Option<String>,
    /// Drops (independent topologies) per point.
    #[arg(long, default_value_t = 100)]
    drops: usize,
    /// Base seed; defaults to the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-drop CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-transmission trace of a single run at the base seed.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Node table of the drop at the base seed.
    #[arg(long)]
    dump_topology: Option<PathBuf>,
}

fn write_trace(path: &PathBuf, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_us", "cell", "sender", "receiver", "secondary", "kind", "primary_ok", "secondary_ok"])?;
    for r in records {
        w.write_record([
            r.time_us.to_string(),
            r.cell.to_string(),
            r.sender.0.to_string(),
            r.receiver.0.to_string(),
            r.secondary_target.map(|n| n.0.to_string()).unwrap_or_default(),
            r.secondary_kind.map(|k| k.label().to_string()).unwrap_or_default(),
            r.primary_ok.to_string(),
            r.secondary_ok.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn execute(args: Args) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = match m {
            ModeArg::Legacy => Mode::Legacy,
            ModeArg::Str => Mode::Str,
        };
    }
    if let Some(a) = args.adaptation {
        cfg.adaptation = matches!(a, OnOff::On);
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    cfg.validate()?;

    if args.dump_topology.is_some() || args.trace.is_some() {
        let scenario = Scenario::build(&cfg, seed)?;
        if let Some(path) = &args.dump_topology {
            scenario.topology.write_table(BufWriter::new(File::create(path)?))?;
        }
        if let Some(path) = &args.trace {
            let (result, records) = simulate_traced(&cfg, &scenario, cfg.mode);
            write_trace(path, &records)?;
            eprintln!(
                "trace: {} records, {:.3} Mb/s",
                records.len(),
                result.total_bits() as f64 / result.elapsed.as_secs_f64() / 1e6
            );
        }
    }

    match (&args.sweep, &args.out) {
        (Some(text), Some(out)) => {
            let spec = SweepSpec::parse(text, args.drops)?;
            for path in run_sweep(&spec, &cfg, seed, out)? {
                eprintln!("wrote {}", path.display());
            }
        }
        (Some(_), None) => {
            return Err(fdwlan::Error::config("out", "a sweep needs --out"));
        }
        (None, Some(out)) => {
            let drops = monte_carlo(&cfg, args.drops, seed)?;
            let point = PointResult { value: 0.0, seed, drops };
            write_rows(out, "base", std::slice::from_ref(&point))?;
            eprintln!("wrote {}", out.display());
        }
        (None, None) => {
            if args.trace.is_none() && args.dump_topology.is_none() {
                let drops = monte_carlo(&cfg, args.drops, seed)?;
                let mean = drops.iter().map(|d| d.gain.theta).sum::<f64>() / drops.len() as f64;
                println!("drops={} mean_theta={mean:.4}", drops.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
