//! Run configuration files.
//!
//! A configuration is a flat list of `key = value` lines (TOML syntax).
//! Every key is optional; missing keys keep the defaults of
//! [`SimConfig::default`]. Unknown keys and out-of-domain values are
//! rejected with the offending key in the message.

use std::path::Path;

use serde::Deserialize;

use crate::engine::{Mode, SimConfig, SimLength};
use crate::error::{Error, Result};
use crate::mac::AccessMode;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Switch {
    Bool(bool),
    Word(String),
}

impl Switch {
    fn get(&self, key: &str) -> Result<bool> {
        match self {
            Switch::Bool(b) => Ok(*b),
            Switch::Word(w) => match w.as_str() {
                "on" => Ok(true),
                "off" => Ok(false),
                other => Err(Error::config(key, format!("expected on/off, got {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    rings: Option<u32>,
    cell_radius: Option<f64>,
    ap_spacing: Option<f64>,
    n_per_cell: Option<usize>,

    tx_power: Option<f64>,
    pathloss_ref: Option<f64>,
    pathloss_exp: Option<f64>,
    noise_floor: Option<f64>,
    beta: Option<f64>,
    sic_capability: Option<f64>,
    rho: Option<f64>,
    fading: Option<Switch>,

    cw_min: Option<u32>,
    max_backoff_stage: Option<u32>,
    slot_time_us: Option<f64>,
    sifs_us: Option<f64>,
    difs_us: Option<f64>,
    phy_header_bits: Option<u32>,
    mac_header_bits: Option<u32>,
    ack_bits: Option<u32>,
    payload_bytes: Option<u32>,
    payload_mix: Option<Vec<u32>>,
    data_rate: Option<f64>,
    basic_rate: Option<f64>,

    lambda_eca: Option<f64>,
    lambda_ca: Option<f64>,
    lambda_fd: Option<f64>,
    lambda_hd: Option<f64>,
    tolerance: Option<f64>,
    default_cst: Option<f64>,
    ap_access: Option<String>,
    mode: Option<String>,
    adaptation: Option<Switch>,
    sim_duration: Option<f64>,
    sim_slots: Option<u64>,
    seed: Option<u64>,
}

/// Splits a pair of complementary fractions, deriving whichever is absent.
fn complement(a_key: &str, a: Option<f64>, b_key: &str, b: Option<f64>) -> Result<Option<f64>> {
    let in_unit = |key: &str, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::config(key, format!("{v} not in [0, 1]")))
        }
    };
    match (a, b) {
        (None, None) => Ok(None),
        (Some(a), None) => in_unit(a_key, a).map(Some),
        (None, Some(b)) => in_unit(b_key, b).map(|b| Some(1.0 - b)),
        (Some(a), Some(b)) => {
            in_unit(a_key, a)?;
            in_unit(b_key, b)?;
            if (a + b - 1.0).abs() > 1e-9 {
                return Err(Error::config(b_key, format!("{a_key} + {b_key} = {} must equal 1", a + b)));
            }
            Ok(Some(a))
        }
    }
}

impl RawConfig {
    fn apply(self, cfg: &mut SimConfig) -> Result<()> {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.rings, self.rings);
        set!(cfg.cell_radius, self.cell_radius);
        if self.ap_spacing.is_some() {
            cfg.ap_spacing = self.ap_spacing;
        }
        set!(cfg.n_per_cell, self.n_per_cell);

        let ch = &mut cfg.channel;
        set!(ch.tx_power_dbm, self.tx_power);
        set!(ch.pathloss_ref_db, self.pathloss_ref);
        set!(ch.pathloss_exp, self.pathloss_exp);
        set!(ch.noise_floor_dbm, self.noise_floor);
        set!(ch.beta_db, self.beta);
        set!(ch.sic_capability_db, self.sic_capability);
        set!(ch.rho, self.rho);
        if let Some(f) = self.fading {
            ch.fading = f.get("fading")?;
        }

        let mac = &mut cfg.mac;
        set!(mac.cw_min, self.cw_min);
        set!(mac.max_backoff_stage, self.max_backoff_stage);
        set!(mac.slot_time, self.slot_time_us.map(|v| v * 1e-6));
        set!(mac.sifs, self.sifs_us.map(|v| v * 1e-6));
        set!(mac.difs, self.difs_us.map(|v| v * 1e-6));
        set!(mac.phy_header_bits, self.phy_header_bits);
        set!(mac.mac_header_bits, self.mac_header_bits);
        set!(mac.ack_bits, self.ack_bits);
        set!(mac.payload_bytes, self.payload_bytes);
        set!(mac.data_rate, self.data_rate);
        set!(mac.basic_rate, self.basic_rate);
        set!(cfg.payload_mix, self.payload_mix);

        set!(cfg.lambda_eca, complement("lambda_eca", self.lambda_eca, "lambda_ca", self.lambda_ca)?);
        set!(cfg.lambda_fd, complement("lambda_fd", self.lambda_fd, "lambda_hd", self.lambda_hd)?);
        set!(cfg.tolerance_db, self.tolerance);
        set!(cfg.default_cst_dbm, self.default_cst);
        if let Some(a) = self.ap_access {
            cfg.ap_access = parse_access(&a)?;
        }
        if let Some(m) = self.mode {
            cfg.mode = parse_mode(&m)?;
        }
        if let Some(a) = self.adaptation {
            cfg.adaptation = a.get("adaptation")?;
        }
        match (self.sim_duration, self.sim_slots) {
            (Some(_), Some(_)) => {
                return Err(Error::config("sim_slots", "give either sim_duration or sim_slots, not both"));
            }
            (Some(s), None) => cfg.length = SimLength::Seconds(s),
            (None, Some(k)) => cfg.length = SimLength::Slots(k),
            (None, None) => {}
        }
        set!(cfg.seed, self.seed);
        Ok(())
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "legacy" => Ok(Mode::Legacy),
        "str" => Ok(Mode::Str),
        other => Err(Error::config("mode", format!("expected legacy or str, got {other:?}"))),
    }
}

pub fn parse_access(s: &str) -> Result<AccessMode> {
    match s {
        "eca" => Ok(AccessMode::Eca),
        "ca" => Ok(AccessMode::Ca),
        other => Err(Error::config("ap_access", format!("expected eca or ca, got {other:?}"))),
    }
}

/// Applies the keys present in `text` on top of `base` and validates the
/// result.
pub fn apply_str(base: &SimConfig, text: &str) -> Result<SimConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
    let mut cfg = base.clone();
    raw.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    apply_str(&SimConfig::default(), text)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
