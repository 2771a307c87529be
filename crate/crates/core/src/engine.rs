//! Slot-synchronous simulation of a multi-cell WLAN.
//!
//! Every node contends in globally aligned slots. A slot in which no backoff
//! counter expires is empty and lasts one slot time; otherwise every node
//! whose counter expired transmits, the slot lasts until the longest frame
//! has been acknowledged (or timed out) plus DIFS, and each remaining node
//! freezes its counter if it sensed any of the transmissions at or above its
//! current CST, or consumes one idle slot if it did not.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ChannelParams, FadingField};
use crate::duplex::{
    embed_next_duration, link_succeeds, resolve_str_outcome, schedule_secondary, select_secondary, Candidate,
    Capabilities, PacketQueue, PacketSizes, Prediction, PrimaryTx, Propagation, SecondaryKind, SecondaryTx,
    SelectionInput, TransmissionPlan,
};
use crate::error::{Error, Result};
use crate::mac::{
    ack_airtime, deterministic_backoff, frame_airtime, on_outcome, AccessMode, BackoffState, MacParams, SlotKind,
    TxOutcome,
};
use crate::metrics::{str_gain, GainSample};
use crate::sensitivity::{collect_reports, created_eligible_targets, natural_targets, CstState, MeasurementTable};
use crate::topology::{generate_hex_grid, generate_hex_grid_with_spacing, place_stations, NodeId, Role, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Half-duplex operation everywhere.
    Legacy,
    /// The AP adds secondary transmissions to predicted primaries.
    Str,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimLength {
    /// Virtual seconds; the slot that crosses the limit completes.
    Seconds(f64),
    Slots(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub rings: u32,
    pub cell_radius: f64,
    /// Overrides the default `sqrt(3) * cell_radius` AP spacing.
    pub ap_spacing: Option<f64>,
    pub n_per_cell: usize,
    pub channel: ChannelParams,
    pub mac: MacParams,
    /// Extra payload sizes (bytes) drawn uniformly per packet; empty means
    /// every packet carries `mac.payload_bytes`.
    pub payload_mix: Vec<u32>,
    pub lambda_eca: f64,
    pub lambda_fd: f64,
    pub tolerance_db: f64,
    pub default_cst_dbm: f64,
    pub ap_access: AccessMode,
    pub mode: Mode,
    pub adaptation: bool,
    pub length: SimLength,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rings: 2,
            cell_radius: 35.0,
            ap_spacing: None,
            n_per_cell: 15,
            channel: ChannelParams::default(),
            mac: MacParams::default(),
            payload_mix: Vec::new(),
            lambda_eca: 1.0,
            lambda_fd: 1.0,
            tolerance_db: 5.0,
            default_cst_dbm: crate::sensitivity::DEFAULT_CST_DBM,
            ap_access: AccessMode::Eca,
            mode: Mode::Str,
            adaptation: true,
            length: SimLength::Seconds(2.0),
            seed: 1,
        }
    }
}

fn check_fraction(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(key, format!("{v} not in [0, 1]")))
    }
}

impl SimConfig {
    pub fn lambda_ca(&self) -> f64 {
        1.0 - self.lambda_eca
    }

    pub fn lambda_hd(&self) -> f64 {
        1.0 - self.lambda_fd
    }

    pub fn validate(&self) -> Result<()> {
        if self.rings > 2 {
            return Err(Error::config("rings", format!("{} not in {{0, 1, 2}}", self.rings)));
        }
        if !(self.cell_radius > 0.0 && self.cell_radius.is_finite()) {
            return Err(Error::config("cell_radius", "must be positive"));
        }
        if let Some(s) = self.ap_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("ap_spacing", "must be positive"));
            }
        }
        if self.n_per_cell == 0 {
            return Err(Error::config("n_per_cell", "must be at least 1"));
        }
        self.channel.validate()?;
        self.mac.validate()?;
        if self.payload_mix.contains(&0) {
            return Err(Error::config("payload_mix", "sizes must be positive"));
        }
        check_fraction("lambda_eca", self.lambda_eca)?;
        check_fraction("lambda_fd", self.lambda_fd)?;
        if !(self.tolerance_db > 0.0 && self.tolerance_db.is_finite()) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        if !self.default_cst_dbm.is_finite() {
            return Err(Error::config("default_cst", "must be finite"));
        }
        match self.length {
            SimLength::Seconds(s) if !(s >= 0.0 && s.is_finite()) => {
                Err(Error::config("sim_duration", "must be a non-negative number of seconds"))
            }
            _ => Ok(()),
        }
    }

    pub fn packet_sizes(&self) -> PacketSizes {
        if self.payload_mix.is_empty() {
            PacketSizes::Fixed(self.mac.payload_bytes)
        } else {
            PacketSizes::Mix(self.payload_mix.clone())
        }
    }
}

// Independent random streams per seed.
const STREAM_TOPOLOGY: u64 = 1;
const STREAM_ECA: u64 = 2;
const STREAM_FD: u64 = 3;
const BACKOFF_SALT: u64 = 0x6261_636b_6f66_6621;
const PACKET_SALT: u64 = 0x7061_636b_6574_7321;
const FADING_SALT: u64 = 0x6661_6469_6e67_2121;

fn stream(seed: u64, salt: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    rng.set_stream(id);
    rng
}

/// First `floor(lambda * n)` entries of a seeded shuffle get the capability.
fn assign(n: usize, lambda: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = ((lambda * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut flags = vec![false; n];
    for &i in &order[..k.min(n)] {
        flags[i] = true;
    }
    flags
}

/// Everything about a drop that is shared by the legacy and STR runs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub seed: u64,
    pub topology: Topology,
    pub caps: Vec<Capabilities>,
    /// Large-scale received power, row-major `[tx * n + rx]`.
    mean_rx: Vec<f64>,
    pub tables: Vec<MeasurementTable>,
    natural: Vec<Vec<Candidate>>,
    created: Vec<Vec<Candidate>>,
    created_cst: Vec<Vec<(NodeId, f64)>>,
}

impl Scenario {
    pub fn build(config: &SimConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let grid = match config.ap_spacing {
            Some(s) => generate_hex_grid_with_spacing(config.rings, s)?,
            None => generate_hex_grid(config.rings, config.cell_radius)?,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_TOPOLOGY);
        let topology = place_stations(&grid, config.n_per_cell, config.cell_radius, &mut rng)?;
        Self::from_topology(config, topology, seed)
    }

    pub fn from_topology(config: &SimConfig, topology: Topology, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = topology.n_nodes();
        let ap_caps = Capabilities {
            fd: true,
            eca: config.ap_access == AccessMode::Eca,
        };
        let mut caps = vec![ap_caps; n];
        let mut eca_rng = ChaCha8Rng::seed_from_u64(seed);
        eca_rng.set_stream(STREAM_ECA);
        let mut fd_rng = ChaCha8Rng::seed_from_u64(seed);
        fd_rng.set_stream(STREAM_FD);
        for cell in 0..topology.n_cells() {
            let stas: Vec<NodeId> = topology.stas_in_cell(cell).collect();
            let eca = assign(stas.len(), config.lambda_eca, &mut eca_rng);
            let fd = assign(stas.len(), config.lambda_fd, &mut fd_rng);
            for (i, sta) in stas.iter().enumerate() {
                caps[sta.0] = Capabilities { fd: fd[i], eca: eca[i] };
            }
        }

        let positions = topology.positions();
        let mut mean_rx = vec![f64::NEG_INFINITY; n * n];
        for tx in 0..n {
            for rx in 0..n {
                if tx != rx {
                    mean_rx[tx * n + rx] = config.channel.mean_rx_dbm(positions[tx].distance(&positions[rx]))?;
                }
            }
        }

        let mut tables = Vec::with_capacity(topology.n_cells());
        let mut natural = vec![Vec::new(); n];
        let mut created = vec![Vec::new(); n];
        let mut created_cst = vec![Vec::new(); n];
        for cell in 0..topology.n_cells() {
            let table = collect_reports(
                &topology,
                &config.channel,
                cell,
                config.default_cst_dbm,
                config.tolerance_db,
            )?;
            for primary in topology.stas_in_cell(cell) {
                natural[primary.0] = natural_targets(&table, primary, config.default_cst_dbm)
                    .into_iter()
                    .map(|t| Candidate {
                        target: t,
                        margin_db: table.ap_rssi(t).unwrap_or(f64::NEG_INFINITY) - mean_rx[primary.0 * n + t.0],
                    })
                    .collect();
                for ct in created_eligible_targets(&table, primary) {
                    // only ECA-aware stations learn of the predicted primary
                    if caps[ct.target.0].eca {
                        created[primary.0].push(Candidate::from(&ct));
                        created_cst[primary.0].push((ct.target, ct.adapted_cst_dbm));
                    }
                }
            }
            tables.push(table);
        }

        Ok(Scenario {
            seed,
            topology,
            caps,
            mean_rx,
            tables,
            natural,
            created,
            created_cst,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    pub fn mean_rx_dbm(&self, tx: NodeId, rx: NodeId) -> f64 {
        self.mean_rx[tx.0 * self.n_nodes() + rx.0]
    }

    pub fn natural_targets(&self, primary: NodeId) -> &[Candidate] {
        &self.natural[primary.0]
    }

    pub fn created_targets(&self, primary: NodeId) -> &[Candidate] {
        &self.created[primary.0]
    }

    /// Stations the AP can serve as secondaries, given the adaptation setting.
    fn rideable(&self, sta: NodeId, adaptation: bool) -> bool {
        let cell = self.topology.cell_of(sta);
        let c = self.caps[sta.0];
        if c.fd && c.eca {
            return true;
        }
        self.topology.stas_in_cell(cell).any(|p| {
            p != sta
                && self.caps[p.0].eca
                && (self.natural[p.0].iter().any(|t| t.target == sta)
                    || (adaptation && self.created[p.0].iter().any(|t| t.target == sta)))
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub empty_slots: u64,
    pub success_slots: u64,
    pub collision_slots: u64,
    /// Uplink frames sent by stations.
    pub primaries: u64,
    pub primary_successes: u64,
    /// Downlink frames the AP sent through contention.
    pub downlink_attempts: u64,
    pub downlink_successes: u64,
    /// Delivered secondaries by kind.
    pub bfd: u64,
    pub ufd_natural: u64,
    pub ufd_created: u64,
    pub secondary_attempts: u64,
    pub secondary_failures: u64,
    /// Predicted primaries that started alone in their cell.
    pub predicted_primaries: u64,
    /// Predicted primaries with at least one created-eligible target.
    pub created_opportunities: u64,
    /// Predictions that fell due but met a collision or no transmission.
    pub lost_opportunities: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeByKind {
    pub empty: Duration,
    pub success: Duration,
    pub collision: Duration,
}

impl TimeByKind {
    pub fn total(&self) -> Duration {
        self.empty + self.success + self.collision
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    /// Payload bits delivered, credited to the sender.
    pub delivered_bits: Vec<u64>,
    pub elapsed: Duration,
    pub time_by_kind: TimeByKind,
    pub counters: Counters,
}

impl SimResult {
    pub fn total_bits(&self) -> u64 {
        self.delivered_bits.iter().sum()
    }
}

/// One contention frame (and its secondary, if any) as it went on air.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    /// Slot start, microseconds.
    pub time_us: f64,
    pub cell: usize,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub secondary_target: Option<NodeId>,
    pub secondary_kind: Option<SecondaryKind>,
    pub primary_ok: bool,
    pub secondary_ok: Option<bool>,
}

fn secs_to_duration(s: f64) -> Duration {
    Duration::from_nanos((s * 1e9).round() as u64)
}

struct SlotPropagation<'a> {
    scenario: &'a Scenario,
    fading: &'a FadingField,
    attempts: &'a [u64],
}

impl Propagation for SlotPropagation<'_> {
    fn rx_dbm(&self, tx: NodeId, rx: NodeId) -> f64 {
        let g = self.fading.sample(tx.0, rx.0, self.attempts[tx.0]);
        self.scenario.mean_rx_dbm(tx, rx) + g.db()
    }
}

#[derive(Clone, Copy)]
struct Frame {
    sender: NodeId,
    receiver: NodeId,
    queue_index: usize,
    bytes: u32,
    airtime: f64,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    sc: &'a Scenario,
    mode: Mode,
    sizes: PacketSizes,
    backoff: Vec<BackoffState>,
    contending: Vec<bool>,
    cst: Vec<CstState>,
    attempts: Vec<u64>,
    /// Uplink queue of each station.
    uplink: Vec<Option<PacketQueue>>,
    /// The AP's queue towards each station.
    downlink: Vec<Option<PacketQueue>>,
    /// Destinations each AP serves through its own contention.
    residual: Vec<Vec<NodeId>>,
    round_robin: Vec<usize>,
    predictions: Vec<Prediction>,
    d_next: Vec<Option<f64>>,
    backoff_rng: Vec<ChaCha8Rng>,
    packet_rng: Vec<ChaCha8Rng>,
    fading: FadingField,
    delivered: Vec<u64>,
    counters: Counters,
    time: TimeByKind,
    now: Duration,
    slot: Duration,
    tail: f64,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig, sc: &'a Scenario, mode: Mode) -> Self {
        let n = sc.n_nodes();
        let topo = &sc.topology;
        let sizes = cfg.packet_sizes();
        let mut backoff_rng: Vec<ChaCha8Rng> = (0..n).map(|i| stream(sc.seed, BACKOFF_SALT, i as u64)).collect();
        let mut packet_rng: Vec<ChaCha8Rng> = (0..n).map(|i| stream(sc.seed, PACKET_SALT, i as u64)).collect();

        let mut backoff = Vec::with_capacity(n);
        for (i, rng) in backoff_rng.iter_mut().enumerate() {
            let access = if sc.caps[i].eca { AccessMode::Eca } else { AccessMode::Ca };
            backoff.push(BackoffState::initial(access, &cfg.mac, rng));
        }

        let mut uplink = vec![None; n];
        let mut downlink = vec![None; n];
        for sta in (topo.n_cells()..n).map(NodeId) {
            uplink[sta.0] = Some(PacketQueue::new(2, &sizes, &mut packet_rng[sta.0]));
            let ap = topo.ap(topo.cell_of(sta));
            downlink[sta.0] = Some(PacketQueue::new(4, &sizes, &mut packet_rng[ap.0]));
        }

        let residual: Vec<Vec<NodeId>> = (0..topo.n_cells())
            .map(|cell| {
                topo.stas_in_cell(cell)
                    .filter(|&s| mode == Mode::Legacy || !sc.rideable(s, cfg.adaptation))
                    .collect()
            })
            .collect();
        let mut contending = vec![true; n];
        for (cell, r) in residual.iter().enumerate() {
            contending[topo.ap(cell).0] = !r.is_empty();
        }

        let mac = &cfg.mac;
        Sim {
            cfg,
            sc,
            mode,
            sizes,
            backoff,
            contending,
            cst: vec![CstState::new(cfg.default_cst_dbm); n],
            attempts: vec![0; n],
            uplink,
            downlink,
            round_robin: vec![0; topo.n_cells()],
            residual,
            predictions: vec![Prediction::default(); n],
            d_next: vec![None; n],
            backoff_rng,
            packet_rng,
            fading: FadingField::new(sc.seed ^ FADING_SALT, cfg.channel.fading),
            delivered: vec![0; n],
            counters: Counters::default(),
            time: TimeByKind::default(),
            now: Duration::ZERO,
            slot: secs_to_duration(mac.slot_time),
            tail: mac.sifs + ack_airtime(mac) + mac.difs,
        }
    }

    fn str_mode(&self) -> bool {
        self.mode == Mode::Str
    }

    fn frame_for(&self, sender: NodeId) -> Frame {
        let topo = &self.sc.topology;
        let (receiver, bytes) = match topo.role(sender) {
            Role::Sta => {
                let q = self.uplink[sender.0].as_ref().expect("station queue");
                (topo.ap(topo.cell_of(sender)), q.head().expect("backlogged"))
            }
            Role::Ap => {
                let dests = &self.residual[sender.0];
                let dest = dests[self.round_robin[sender.0] % dests.len()];
                let q = self.downlink[dest.0].as_ref().expect("downlink queue");
                (dest, q.head().expect("backlogged"))
            }
        };
        Frame {
            sender,
            receiver,
            queue_index: 0,
            bytes,
            airtime: frame_airtime(u64::from(bytes) * 8, &self.cfg.mac),
        }
    }

    fn run(mut self, mut trace: Option<&mut Vec<TraceRecord>>) -> SimResult {
        let mut steps = 0u64;
        loop {
            let done = match self.cfg.length {
                SimLength::Seconds(s) => self.now >= secs_to_duration(s),
                SimLength::Slots(k) => steps >= k,
            };
            if done {
                break;
            }
            self.step(trace.as_deref_mut());
            steps += 1;
        }
        SimResult {
            delivered_bits: self.delivered,
            elapsed: self.now,
            time_by_kind: self.time,
            counters: self.counters,
        }
    }

    fn step(&mut self, trace: Option<&mut Vec<TraceRecord>>) {
        let n = self.sc.n_nodes();
        let ready: Vec<NodeId> = (0..n)
            .filter(|&i| self.contending[i] && self.backoff[i].ready())
            .map(NodeId)
            .collect();

        if ready.is_empty() {
            self.empty_slot();
            return;
        }

        let topo = &self.sc.topology;
        let mac = &self.cfg.mac;
        let frames: Vec<Frame> = ready.iter().map(|&s| self.frame_for(s)).collect();
        let n_cells = topo.n_cells();
        let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
        for (i, f) in frames.iter().enumerate() {
            per_cell[topo.cell_of(f.sender)].push(i);
        }

        // Secondary transmissions riding on predicted primaries.
        let mut plans: Vec<(usize, SecondaryTx, usize, u32)> = Vec::new();
        let slot_start = self.now.as_secs_f64();
        if self.str_mode() {
            for cell in 0..n_cells {
                let due: Vec<NodeId> = topo.stas_in_cell(cell).filter(|s| self.predictions[s.0].due()).collect();
                for p in due {
                    self.predictions[p.0].disarm();
                    let alone = per_cell[cell].len() == 1 && frames[per_cell[cell][0]].sender == p;
                    if !alone {
                        self.counters.lost_opportunities += 1;
                        continue;
                    }
                    self.counters.predicted_primaries += 1;
                    let created = self.sc.created_targets(p);
                    if !created.is_empty() {
                        self.counters.created_opportunities += 1;
                    }
                    let fi = per_cell[cell][0];
                    let primary = frames[fi];
                    let d_primary = self.d_next[p.0].unwrap_or(primary.airtime);
                    if self.cfg.adaptation {
                        let until = slot_start + primary.airtime;
                        for &(t, cst) in &self.sc.created_cst[p.0] {
                            self.cst[t.0].adapt(cst, until);
                        }
                    }
                    let downlink = &self.downlink;
                    let input = SelectionInput {
                        ap_fd: self.sc.caps[topo.ap(cell).0].fd,
                        primary: p,
                        primary_caps: self.sc.caps[p.0],
                        d_primary,
                        natural: self.sc.natural_targets(p),
                        created: if self.cfg.adaptation { created } else { &[] },
                        queue: |t: NodeId| downlink[t.0].as_ref(),
                    };
                    if let Some(choice) = select_secondary(&input, mac) {
                        let offset = schedule_secondary(primary.airtime, choice.duration, choice.kind.mode())
                            .expect("selected secondary fits");
                        let secondary = SecondaryTx {
                            sender: topo.ap(cell),
                            target: choice.target,
                            start_offset: offset,
                            duration: choice.duration,
                            kind: choice.kind,
                        };
                        plans.push((fi, secondary, choice.queue_index, choice.payload_bytes));
                    }
                }
            }
        }

        // Everyone on air this slot.
        for f in &frames {
            self.attempts[f.sender.0] += 1;
        }
        for (_, s, _, _) in &plans {
            self.attempts[s.sender.0] += 1;
        }
        let mut active: Vec<NodeId> = frames.iter().map(|f| f.sender).collect();
        active.extend(plans.iter().map(|(_, s, _, _)| s.sender));

        let prop = SlotPropagation {
            scenario: self.sc,
            fading: &self.fading,
            attempts: &self.attempts,
        };
        let mut frame_ok = vec![false; frames.len()];
        let mut secondary_of = vec![None; frames.len()];
        for (k, (fi, s, _, _)) in plans.iter().enumerate() {
            let f = frames[*fi];
            let plan = TransmissionPlan {
                primary: PrimaryTx {
                    sender: f.sender,
                    receiver: f.receiver,
                    start: slot_start,
                    duration: f.airtime,
                },
                secondary: Some(*s),
            };
            debug_assert!(plan.check().is_ok(), "{plan:?}");
            let others: Vec<NodeId> = active.iter().copied().filter(|&u| u != f.sender && u != s.sender).collect();
            let flags = resolve_str_outcome(&plan, &others, &self.cfg.channel, &prop);
            frame_ok[*fi] = flags.primary;
            secondary_of[*fi] = Some((k, flags.secondary.unwrap_or(false)));
        }
        for (i, f) in frames.iter().enumerate() {
            if secondary_of[i].is_some() {
                continue;
            }
            // Unplanned overlap is half duplex: a transmitting receiver hears nothing.
            let rx_busy = active.contains(&f.receiver);
            frame_ok[i] = !rx_busy && link_succeeds(f.sender, f.receiver, false, &active, &self.cfg.channel, &prop);
        }

        // Slot length: longest frame on air, then SIFS + ACK (or the
        // equivalent ACK timeout) and DIFS.
        let mut end = frames.iter().map(|f| f.airtime).fold(0.0, f64::max);
        for (_, s, _, _) in &plans {
            end = end.max(s.start_offset + s.duration);
        }
        let duration = secs_to_duration(end + self.tail);
        let collided = frame_ok.iter().any(|ok| !ok);

        if let Some(trace) = trace {
            for (i, f) in frames.iter().enumerate() {
                let sec = secondary_of[i].map(|(k, ok)| (plans[k].1, ok));
                trace.push(TraceRecord {
                    time_us: slot_start * 1e6,
                    cell: topo.cell_of(f.sender),
                    sender: f.sender,
                    receiver: f.receiver,
                    secondary_target: sec.map(|(s, _)| s.target),
                    secondary_kind: sec.map(|(s, _)| s.kind),
                    primary_ok: frame_ok[i],
                    secondary_ok: sec.map(|(_, ok)| ok),
                });
            }
        }

        // Carrier sense and countdown of everyone who stayed silent.
        let sensed_busy: Vec<bool> = (0..n)
            .map(|v| {
                active.contains(&NodeId(v))
                    || active
                        .iter()
                        .any(|&u| self.cst[v].senses_busy(self.sc.mean_rx_dbm(u, NodeId(v))))
            })
            .collect();
        for (v, &busy) in sensed_busy.iter().enumerate() {
            if self.contending[v] && !busy {
                self.backoff[v].tick();
            }
        }
        if self.str_mode() {
            for cell in 0..n_cells {
                if !sensed_busy[topo.ap(cell).0] {
                    for sta in topo.stas_in_cell(cell) {
                        self.predictions[sta.0].idle_slot();
                    }
                }
            }
        }

        // Outcomes.
        for (i, f) in frames.iter().enumerate() {
            let outcome = if frame_ok[i] { TxOutcome::Success } else { TxOutcome::Collision };
            let state = self.backoff[f.sender.0];
            self.backoff[f.sender.0] = on_outcome(state, outcome, mac, &mut self.backoff_rng[f.sender.0]);
            let is_sta = topo.role(f.sender) == Role::Sta;
            if is_sta {
                self.counters.primaries += 1;
            } else {
                self.counters.downlink_attempts += 1;
            }
            if !frame_ok[i] {
                continue;
            }
            self.delivered[f.sender.0] += u64::from(f.bytes) * 8;
            if is_sta {
                self.counters.primary_successes += 1;
                let q = self.uplink[f.sender.0].as_mut().expect("station queue");
                q.remove(f.queue_index, &self.sizes, &mut self.packet_rng[f.sender.0]);
                let caps = self.sc.caps[f.sender.0];
                self.d_next[f.sender.0] = embed_next_duration(caps, q.head(), mac);
                if self.str_mode() && caps.eca {
                    self.predictions[f.sender.0].arm(deterministic_backoff(mac));
                }
            } else {
                self.counters.downlink_successes += 1;
                let ap = f.sender.0;
                let q = self.downlink[f.receiver.0].as_mut().expect("downlink queue");
                q.remove(f.queue_index, &self.sizes, &mut self.packet_rng[ap]);
                self.round_robin[ap] = (self.round_robin[ap] + 1) % self.residual[ap].len();
            }
        }
        for (k, (_, s, qi, bytes)) in plans.iter().enumerate() {
            self.counters.secondary_attempts += 1;
            let ok = secondary_of.iter().flatten().any(|&(kk, ok)| kk == k && ok);
            if !ok {
                self.counters.secondary_failures += 1;
                continue;
            }
            self.delivered[s.sender.0] += u64::from(*bytes) * 8;
            let q = self.downlink[s.target.0].as_mut().expect("downlink queue");
            q.remove(*qi, &self.sizes, &mut self.packet_rng[s.sender.0]);
            match s.kind {
                SecondaryKind::Bfd => self.counters.bfd += 1,
                SecondaryKind::NaturalUfd => self.counters.ufd_natural += 1,
                SecondaryKind::CreatedUfd => self.counters.ufd_created += 1,
            }
        }

        let kind = if collided { SlotKind::Collision } else { SlotKind::Success };
        self.advance(kind, duration);
        let now = self.now.as_secs_f64();
        for c in &mut self.cst {
            c.revert_if_due(now);
        }
    }

    fn empty_slot(&mut self) {
        for v in 0..self.sc.n_nodes() {
            if self.contending[v] {
                self.backoff[v].tick();
            }
        }
        if self.str_mode() {
            for p in self.predictions.iter_mut() {
                if p.due() {
                    // the station did not show up when expected
                    p.disarm();
                    self.counters.lost_opportunities += 1;
                } else {
                    p.idle_slot();
                }
            }
        }
        self.advance(SlotKind::Empty, self.slot);
    }

    fn advance(&mut self, kind: SlotKind, d: Duration) {
        match kind {
            SlotKind::Empty => {
                self.counters.empty_slots += 1;
                self.time.empty += d;
            }
            SlotKind::Success => {
                self.counters.success_slots += 1;
                self.time.success += d;
            }
            SlotKind::Collision => {
                self.counters.collision_slots += 1;
                self.time.collision += d;
            }
        }
        self.now += d;
    }
}

/// Simulates one mode on a prepared scenario.
pub fn simulate(config: &SimConfig, scenario: &Scenario, mode: Mode) -> SimResult {
    Sim::new(config, scenario, mode).run(None)
}

pub fn simulate_traced(config: &SimConfig, scenario: &Scenario, mode: Mode) -> (SimResult, Vec<TraceRecord>) {
    let mut trace = Vec::new();
    let result = Sim::new(config, scenario, mode).run(Some(&mut trace));
    (result, trace)
}

/// Runs `config.mode` on a fresh drop.
pub fn run(config: &SimConfig, seed: u64) -> Result<SimResult> {
    let scenario = Scenario::build(config, seed)?;
    Ok(simulate(config, &scenario, config.mode))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedResult {
    pub seed: u64,
    pub legacy: SimResult,
    pub str: SimResult,
}

/// Legacy and STR runs over the same drop, capabilities, backoff streams
/// and fading field.
pub fn run_paired(config: &SimConfig, seed: u64) -> Result<PairedResult> {
    let scenario = Scenario::build(config, seed)?;
    Ok(PairedResult {
        seed,
        legacy: simulate(config, &scenario, Mode::Legacy),
        str: simulate(config, &scenario, Mode::Str),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DropResult {
    pub drop: usize,
    pub paired: PairedResult,
    pub gain: GainSample,
}

/// Independent drops with seeds `base_seed + i`, evaluated in parallel and
/// returned in drop order.
pub fn monte_carlo(config: &SimConfig, n_drops: usize, base_seed: u64) -> Result<Vec<DropResult>> {
    if n_drops == 0 {
        return Err(Error::config("drops", "must be at least 1"));
    }
    config.validate()?;
    (0..n_drops)
        .into_par_iter()
        .map(|i| {
            let paired = run_paired(config, base_seed.wrapping_add(i as u64))?;
            let gain = str_gain(&paired.legacy, &paired.str, i)?;
            Ok(DropResult { drop: i, paired, gain })
        })
        .collect()
}
