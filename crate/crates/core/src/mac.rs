//! DCF backoff for CSMA/CA and CSMA/ECA, frame timing, and slot outcomes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::topology::NodeId;

#[derive(Clone, Debug, PartialEq)]
pub struct MacParams {
    pub cw_min: u32,
    /// Largest backoff stage `m`; the window never exceeds `2^m * cw_min`.
    pub max_backoff_stage: u32,
    /// Seconds.
    pub slot_time: f64,
    pub sifs: f64,
    pub difs: f64,
    pub phy_header_bits: u32,
    pub mac_header_bits: u32,
    /// ACK MAC frame body, sent at the basic rate after its PHY header.
    pub ack_bits: u32,
    pub payload_bytes: u32,
    /// Bits per second.
    pub data_rate: f64,
    pub basic_rate: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            cw_min: 16,
            max_backoff_stage: 5,
            slot_time: 9e-6,
            sifs: 16e-6,
            difs: 34e-6,
            phy_header_bits: 128,
            mac_header_bits: 272,
            ack_bits: 112,
            payload_bytes: 1000,
            data_rate: 54e6,
            basic_rate: 6e6,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        if self.cw_min < 2 {
            return Err(Error::config("cw_min", "must be at least 2"));
        }
        if self.max_backoff_stage > 16 {
            return Err(Error::config("max_backoff_stage", "must be at most 16"));
        }
        for (key, v) in [
            ("slot_time", self.slot_time),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("data_rate", self.data_rate),
            ("basic_rate", self.basic_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.difs <= self.sifs {
            return Err(Error::config("difs", "must exceed sifs"));
        }
        if self.payload_bytes == 0 {
            return Err(Error::config("payload_bytes", "must be positive"));
        }
        Ok(())
    }

    pub fn payload_bits(&self) -> u64 {
        u64::from(self.payload_bytes) * 8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessMode {
    /// Legacy binary exponential backoff.
    Ca,
    /// Deterministic backoff after success, random after collision.
    Eca,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TxOutcome {
    Success,
    Collision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackoffState {
    pub stage: u32,
    /// Idle slots left before the next attempt.
    pub counter: u32,
    pub mode: AccessMode,
    pub last_outcome: Option<TxOutcome>,
}

impl BackoffState {
    pub fn initial<R: Rng + ?Sized>(mode: AccessMode, params: &MacParams, rng: &mut R) -> Self {
        BackoffState {
            stage: 0,
            counter: random_backoff(0, params, rng),
            mode,
            last_outcome: None,
        }
    }

    /// Consumes one idle slot.
    pub fn tick(&mut self) {
        self.counter = self.counter.saturating_sub(1);
    }

    pub fn ready(&self) -> bool {
        self.counter == 0
    }
}

/// Uniform draw on `[0, 2^stage * cw_min - 1]`.
pub fn random_backoff<R: Rng + ?Sized>(stage: u32, params: &MacParams, rng: &mut R) -> u32 {
    let window = params.cw_min << stage.min(params.max_backoff_stage);
    rng.gen_range(0..window)
}

/// `ceil(cw_min / 2) - 1`.
pub fn deterministic_backoff(params: &MacParams) -> u32 {
    params.cw_min.div_ceil(2) - 1
}

pub fn on_outcome<R: Rng + ?Sized>(
    state: BackoffState,
    outcome: TxOutcome,
    params: &MacParams,
    rng: &mut R,
) -> BackoffState {
    let (stage, counter) = match (outcome, state.mode) {
        (TxOutcome::Success, AccessMode::Eca) => (0, deterministic_backoff(params)),
        (TxOutcome::Success, AccessMode::Ca) => (0, random_backoff(0, params, rng)),
        (TxOutcome::Collision, _) => {
            let stage = (state.stage + 1).min(params.max_backoff_stage);
            (stage, random_backoff(stage, params, rng))
        }
    };
    BackoffState {
        stage,
        counter,
        mode: state.mode,
        last_outcome: Some(outcome),
    }
}

/// Data frame duration in seconds: PHY header at the basic rate, MAC header
/// and payload at the data rate.
pub fn frame_airtime(payload_bits: u64, params: &MacParams) -> f64 {
    f64::from(params.phy_header_bits) / params.basic_rate
        + (f64::from(params.mac_header_bits) + payload_bits as f64) / params.data_rate
}

pub fn ack_airtime(params: &MacParams) -> f64 {
    f64::from(params.phy_header_bits + params.ack_bits) / params.basic_rate
}

/// Time from the start of a data frame until its sender gives up on the ACK.
pub fn ack_timeout(t_data: f64, params: &MacParams) -> f64 {
    t_data + params.sifs + ack_airtime(params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Empty,
    Success,
    Collision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DuplexMode {
    /// AP and the primary sender exchange frames.
    Bfd,
    /// AP receives from the primary sender and transmits to a third node.
    Ufd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrAnnotation {
    pub mode: DuplexMode,
    pub secondary_target: NodeId,
    pub primary_ok: bool,
    pub secondary_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotOutcome {
    pub kind: SlotKind,
    pub transmitters: Vec<NodeId>,
    pub str_annotation: Vec<StrAnnotation>,
}
