//! Simultaneous transmit and receive at the AP: next-transmission
//! prediction for CSMA/ECA senders, secondary transmission selection and
//! timing, the `D_next` header hint, and per-link outcome resolution.

use std::collections::VecDeque;

use rand::Rng;

use crate::channel::{reception_success, sinr_db, ChannelParams};
use crate::error::{Error, Result};
use crate::mac::{deterministic_backoff, frame_airtime, BackoffState, DuplexMode, MacParams, TxOutcome};
use crate::sensitivity::CreatedTarget;
use crate::topology::NodeId;

/// Advertised once at association.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub fd: bool,
    pub eca: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameHeader {
    /// Duration field, seconds; overhearing nodes set their NAV from it.
    pub duration: f64,
    /// Airtime of the sender's next queued frame, carried in a reserved
    /// field. Legacy receivers ignore it.
    pub d_next: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SecondaryKind {
    Bfd,
    NaturalUfd,
    CreatedUfd,
}

impl SecondaryKind {
    pub fn mode(self) -> DuplexMode {
        match self {
            SecondaryKind::Bfd => DuplexMode::Bfd,
            _ => DuplexMode::Ufd,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SecondaryKind::Bfd => "BFD",
            SecondaryKind::NaturalUfd => "UFD-natural",
            SecondaryKind::CreatedUfd => "UFD-created",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimaryTx {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub start: f64,
    pub duration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondaryTx {
    pub sender: NodeId,
    pub target: NodeId,
    pub start_offset: f64,
    pub duration: f64,
    pub kind: SecondaryKind,
}

impl SecondaryTx {
    pub fn mode(&self) -> DuplexMode {
        self.kind.mode()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmissionPlan {
    pub primary: PrimaryTx,
    pub secondary: Option<SecondaryTx>,
}

const TIME_EPS: f64 = 1e-12;

impl TransmissionPlan {
    /// Checks the end-time rule of the secondary's mode and its target.
    pub fn check(&self) -> Result<()> {
        let Some(s) = &self.secondary else {
            return Ok(());
        };
        let primary_end = self.primary.duration;
        let secondary_end = s.start_offset + s.duration;
        if s.start_offset < -TIME_EPS {
            return Err(Error::Domain("secondary starts before the primary".into()));
        }
        match s.mode() {
            DuplexMode::Bfd => {
                if s.target != self.primary.sender {
                    return Err(Error::Domain("BFD secondary must target the primary sender".into()));
                }
                if secondary_end > primary_end + TIME_EPS {
                    return Err(Error::Domain("BFD secondary outlasts the primary".into()));
                }
            }
            DuplexMode::Ufd => {
                if s.target == self.primary.sender {
                    return Err(Error::Domain("UFD secondary cannot target the primary sender".into()));
                }
                if (secondary_end - primary_end).abs() > TIME_EPS {
                    return Err(Error::Domain("UFD secondary must end with the primary".into()));
                }
            }
        }
        Ok(())
    }
}

/// Idle slots until an ECA sender whose last attempt succeeded transmits
/// again. `None` when the sender's timing is not deterministic.
pub fn predict_next_tx(caps: Capabilities, state: &BackoffState, params: &MacParams) -> Option<u32> {
    (caps.eca && state.last_outcome == Some(TxOutcome::Success)).then(|| deterministic_backoff(params))
}

/// The AP's countdown towards one station's predicted transmission, advanced
/// on the slots the AP itself senses idle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Prediction {
    remaining: Option<u32>,
}

impl Prediction {
    pub fn arm(&mut self, idle_slots: u32) {
        self.remaining = Some(idle_slots);
    }

    pub fn disarm(&mut self) {
        self.remaining = None;
    }

    /// Whether the station is expected to transmit in the slot about to start.
    pub fn due(&self) -> bool {
        self.remaining == Some(0)
    }

    pub fn armed(&self) -> bool {
        self.remaining.is_some()
    }

    pub fn idle_slot(&mut self) {
        if let Some(r) = self.remaining.as_mut() {
            *r = r.saturating_sub(1);
        }
    }
}

/// Where packet sizes come from.
#[derive(Clone, Debug, PartialEq)]
pub enum PacketSizes {
    Fixed(u32),
    /// Each new packet picks uniformly from the listed byte counts.
    Mix(Vec<u32>),
}

impl PacketSizes {
    pub fn next<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            PacketSizes::Fixed(b) => *b,
            PacketSizes::Mix(sizes) => sizes[rng.gen_range(0..sizes.len())],
        }
    }
}

/// A backlogged queue that is topped up to a fixed depth.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketQueue {
    packets: VecDeque<u32>,
    depth: usize,
}

impl PacketQueue {
    pub fn new<R: Rng + ?Sized>(depth: usize, sizes: &PacketSizes, rng: &mut R) -> Self {
        let mut q = PacketQueue {
            packets: VecDeque::with_capacity(depth),
            depth: depth.max(1),
        };
        q.refill(sizes, rng);
        q
    }

    pub fn from_sizes(sizes: impl IntoIterator<Item = u32>) -> Self {
        let packets: VecDeque<u32> = sizes.into_iter().collect();
        let depth = packets.len().max(1);
        PacketQueue { packets, depth }
    }

    fn refill<R: Rng + ?Sized>(&mut self, sizes: &PacketSizes, rng: &mut R) {
        while self.packets.len() < self.depth {
            self.packets.push_back(sizes.next(rng));
        }
    }

    pub fn head(&self) -> Option<u32> {
        self.packets.front().copied()
    }

    pub fn next_after_head(&self) -> Option<u32> {
        self.packets.get(1).copied()
    }

    /// Index and size of the largest packet whose airtime fits `limit`.
    pub fn longest_fitting(&self, limit: f64, params: &MacParams) -> Option<(usize, u32)> {
        self.packets
            .iter()
            .enumerate()
            .filter(|(_, &b)| frame_airtime(u64::from(b) * 8, params) <= limit + TIME_EPS)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, &b)| (i, b))
    }

    pub fn remove<R: Rng + ?Sized>(&mut self, index: usize, sizes: &PacketSizes, rng: &mut R) -> Option<u32> {
        let p = self.packets.remove(index);
        self.refill(sizes, rng);
        p
    }
}

/// `D_next` for an ECA sender: airtime of the packet queued behind the one
/// being sent, at the current MCS.
pub fn embed_next_duration(caps: Capabilities, next_payload_bytes: Option<u32>, params: &MacParams) -> Option<f64> {
    if !caps.eca {
        return None;
    }
    next_payload_bytes.map(|b| frame_airtime(u64::from(b) * 8, params))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub target: NodeId,
    /// Predicted `A - B` at the target; larger is safer.
    pub margin_db: f64,
}

impl From<&CreatedTarget> for Candidate {
    fn from(c: &CreatedTarget) -> Self {
        Candidate {
            target: c.target,
            margin_db: c.margin_db,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondaryChoice {
    pub kind: SecondaryKind,
    pub target: NodeId,
    pub queue_index: usize,
    pub payload_bytes: u32,
    pub duration: f64,
}

/// What the AP knows when a predicted primary is about to start.
pub struct SelectionInput<'a, Q: Fn(NodeId) -> Option<&'a PacketQueue>> {
    pub ap_fd: bool,
    pub primary: NodeId,
    pub primary_caps: Capabilities,
    /// Duration the secondary must fit in (the primary's `D_next`).
    pub d_primary: f64,
    pub natural: &'a [Candidate],
    pub created: &'a [Candidate],
    pub queue: Q,
}

/// Picks the secondary transmission, preferring BFD, then natural UFD
/// targets, then created ones. Within a class the longest fitting packet
/// wins, then the larger predicted margin, then the lower node id.
pub fn select_secondary<'a, Q>(input: &SelectionInput<'a, Q>, params: &MacParams) -> Option<SecondaryChoice>
where
    Q: Fn(NodeId) -> Option<&'a PacketQueue>,
{
    if !input.ap_fd {
        return None;
    }
    let fit = |target: NodeId| -> Option<(usize, u32)> {
        (input.queue)(target).and_then(|q| q.longest_fitting(input.d_primary, params))
    };
    let choice = |kind, target, (queue_index, payload_bytes): (usize, u32)| SecondaryChoice {
        kind,
        target,
        queue_index,
        payload_bytes,
        duration: frame_airtime(u64::from(payload_bytes) * 8, params),
    };

    if input.primary_caps.fd {
        if let Some(f) = fit(input.primary) {
            return Some(choice(SecondaryKind::Bfd, input.primary, f));
        }
    }
    for (kind, class) in [
        (SecondaryKind::NaturalUfd, input.natural),
        (SecondaryKind::CreatedUfd, input.created),
    ] {
        let best = class
            .iter()
            .filter(|c| c.target != input.primary)
            .filter_map(|c| fit(c.target).map(|f| (c, f)))
            .max_by(|(a, fa), (b, fb)| {
                fa.1.cmp(&fb.1)
                    .then(a.margin_db.total_cmp(&b.margin_db))
                    .then(b.target.cmp(&a.target))
            });
        if let Some((c, f)) = best {
            return Some(choice(kind, c.target, f));
        }
    }
    None
}

/// Start offset of the secondary relative to the primary.
pub fn schedule_secondary(d_primary: f64, d_secondary: f64, mode: DuplexMode) -> Result<f64> {
    if d_secondary > d_primary + TIME_EPS {
        return Err(Error::Domain(format!(
            "secondary of {d_secondary:e} s does not fit in primary of {d_primary:e} s"
        )));
    }
    Ok(match mode {
        DuplexMode::Bfd => 0.0,
        DuplexMode::Ufd => (d_primary - d_secondary).max(0.0),
    })
}

/// Instantaneous received power for the transmissions of the current slot.
pub trait Propagation {
    fn rx_dbm(&self, tx: NodeId, rx: NodeId) -> f64;
}

/// SINR test of one link. Every transmitter in `active` other than the two
/// endpoints interferes; `rx_transmitting` adds the receiver's residual
/// self-interference.
pub fn link_succeeds<P: Propagation>(
    tx: NodeId,
    rx: NodeId,
    rx_transmitting: bool,
    active: &[NodeId],
    channel: &ChannelParams,
    prop: &P,
) -> bool {
    let interferers: Vec<f64> = active
        .iter()
        .filter(|&&u| u != tx && u != rx)
        .map(|&u| prop.rx_dbm(u, rx))
        .collect();
    let rsi = rx_transmitting.then(|| channel.rsi_dbm());
    let sinr = sinr_db(prop.rx_dbm(tx, rx), &interferers, channel.noise_floor_dbm, rsi);
    reception_success(sinr, channel.beta_db)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkFlags {
    pub primary: bool,
    pub secondary: Option<bool>,
}

/// Resolves both links of a plan against the other transmitters of the
/// slot. Carrier-sense thresholds play no part here: energy above or below
/// a node's CST interferes alike.
pub fn resolve_str_outcome<P: Propagation>(
    plan: &TransmissionPlan,
    others: &[NodeId],
    channel: &ChannelParams,
    prop: &P,
) -> LinkFlags {
    let p = plan.primary;
    let mut active: Vec<NodeId> = others.to_vec();
    active.push(p.sender);
    if let Some(s) = &plan.secondary {
        active.push(s.sender);
    }
    let primary = link_succeeds(p.sender, p.receiver, plan.secondary.is_some(), &active, channel, prop);
    let secondary = plan.secondary.map(|s| {
        let target_transmitting = s.target == p.sender;
        link_succeeds(s.sender, s.target, target_transmitting, &active, channel, prop)
    });
    LinkFlags { primary, secondary }
}
