//! Large-scale path loss, Rayleigh block fading, residual self-interference
//! and SINR-threshold reception.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    pub tx_power_dbm: f64,
    /// Path loss at the 1 m reference distance.
    pub pathloss_ref_db: f64,
    pub pathloss_exp: f64,
    pub noise_floor_dbm: f64,
    /// Reception threshold, inclusive.
    pub beta_db: f64,
    /// Self-interference suppression of a full-duplex radio at `rho = 1`.
    pub sic_capability_db: f64,
    /// Fraction of `sic_capability_db` actually achieved, in (0, 1].
    pub rho: f64,
    /// Rayleigh block fading on every link; off gives the deterministic
    /// large-scale channel.
    pub fading: bool,
}

// Thermal floor of a 20 MHz channel; a 35 m cell edge sits about 22 dB
// above it and the -82 dBm carrier-sense range is about 45 m.
impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            tx_power_dbm: 14.0,
            pathloss_ref_db: 46.4,
            pathloss_exp: 3.0,
            noise_floor_dbm: -101.0,
            beta_db: 20.0,
            sic_capability_db: 110.0,
            rho: 1.0,
            fading: true,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::config("tx_power", "must be finite"));
        }
        if !self.pathloss_ref_db.is_finite() {
            return Err(Error::config("pathloss_ref", "must be finite"));
        }
        if !(self.pathloss_exp >= 2.0 && self.pathloss_exp.is_finite()) {
            return Err(Error::config("pathloss_exp", "must be at least 2"));
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(Error::config("noise_floor", "must be finite"));
        }
        if !(self.beta_db >= 0.0 && self.beta_db.is_finite()) {
            return Err(Error::config("beta", "must be a finite, non-negative dB value"));
        }
        if !(self.sic_capability_db > 0.0 && self.sic_capability_db.is_finite()) {
            return Err(Error::config("sic_capability", "must be positive"));
        }
        check_rho(self.rho)
    }

    /// Log-distance path loss; distances below 1 m are clamped to 1 m.
    pub fn path_loss_db(&self, distance: f64) -> Result<f64> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::Domain(format!("distance {distance} must be positive")));
        }
        let d = distance.max(1.0);
        Ok(self.pathloss_ref_db + 10.0 * self.pathloss_exp * d.log10())
    }

    pub fn rssi_dbm(&self, tx_power_dbm: f64, distance: f64, fading: FadingSample) -> Result<f64> {
        Ok(tx_power_dbm - self.path_loss_db(distance)? + fading.db())
    }

    /// Mean received power from a transmitter at the configured power.
    pub fn mean_rx_dbm(&self, distance: f64) -> Result<f64> {
        self.rssi_dbm(self.tx_power_dbm, distance, FadingSample::UNIT)
    }

    /// Self-interference left at a full-duplex node transmitting at the
    /// configured power.
    pub fn rsi_dbm(&self) -> f64 {
        self.tx_power_dbm - self.rho * self.sic_capability_db
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::config("rho", format!("{rho} not in (0, 1]")))
    }
}

pub fn residual_self_interference_dbm(
    tx_power_dbm: f64,
    sic_capability_db: f64,
    rho: f64,
) -> Result<f64> {
    check_rho(rho)?;
    if sic_capability_db.is_nan() || sic_capability_db <= 0.0 {
        return Err(Error::config("sic_capability", "must be positive"));
    }
    Ok(tx_power_dbm - rho * sic_capability_db)
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// SINR in dB. `rsi_dbm` is only present when the receiver is itself
/// transmitting.
pub fn sinr_db(signal_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64, rsi_dbm: Option<f64>) -> f64 {
    let mut denom = dbm_to_mw(noise_dbm);
    denom += interferers_dbm.iter().copied().map(dbm_to_mw).sum::<f64>();
    if let Some(rsi) = rsi_dbm {
        denom += dbm_to_mw(rsi);
    }
    signal_dbm - mw_to_dbm(denom)
}

#[inline]
pub fn reception_success(sinr_db: f64, beta_db: f64) -> bool {
    sinr_db >= beta_db
}

/// Linear power gain of one link for one transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadingSample {
    pub gain: f64,
}

impl FadingSample {
    pub const UNIT: FadingSample = FadingSample { gain: 1.0 };

    pub fn new(gain: f64) -> Result<Self> {
        if gain >= 0.0 && gain.is_finite() {
            Ok(FadingSample { gain })
        } else {
            Err(Error::Domain(format!("fading gain {gain} must be finite and >= 0")))
        }
    }

    /// Unit-mean exponential power gain (Rayleigh amplitude).
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        FadingSample { gain: rng.sample(Exp1) }
    }

    /// Gain in dB; an erased link (`gain == 0`) is `-inf`.
    pub fn db(&self) -> f64 {
        if self.gain == 0.0 {
            f64::NEG_INFINITY
        } else {
            10.0 * self.gain.log10()
        }
    }
}

/// Counter-addressed fading: the gain of the `attempt`-th transmission of
/// `tx` as seen by `rx` is a pure function of the seed, so two runs sharing a
/// seed see the same fading on the same transmission regardless of how many
/// other draws happened in between.
#[derive(Clone, Debug)]
pub struct FadingField {
    base: Option<ChaCha8Rng>,
}

impl FadingField {
    pub fn new(seed: u64, enabled: bool) -> Self {
        FadingField {
            base: enabled.then(|| ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn sample(&self, tx: usize, rx: usize, attempt: u64) -> FadingSample {
        match &self.base {
            None => FadingSample::UNIT,
            Some(base) => {
                let mut rng = base.clone();
                rng.set_stream(((tx as u64) << 32) | rx as u64);
                rng.set_word_pos(u128::from(attempt) * 16);
                FadingSample::draw(&mut rng)
            }
        }
    }
}
