//! Measurement reports, UFD eligibility and carrier-sense threshold (CST)
//! adaptation.
//!
//! A station `t` can be made deaf to a primary sender `p` while still
//! hearing its AP by raising its CST to `min(B + C, A)`, where `A` is the
//! AP's RSSI at `t`, `B` is `p`'s RSSI at `t` and `C` is the tolerance
//! margin. Stations for which `B + C > A` would lose the AP as well and are
//! excluded.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

pub const DEFAULT_CST_DBM: f64 = -82.0;

#[derive(Clone, Debug, PartialEq)]
pub struct StaReport {
    /// Link measurement: RSSI of the serving AP.
    pub ap_rssi_dbm: f64,
    /// Frame measurement: RSSI of every neighbor heard at or above the
    /// default CST.
    pub neighbors: BTreeMap<NodeId, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementTable {
    pub reports: BTreeMap<NodeId, StaReport>,
    pub tolerance_db: f64,
}

impl MeasurementTable {
    pub fn new(tolerance_db: f64) -> Result<Self> {
        if !(tolerance_db > 0.0 && tolerance_db.is_finite()) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        Ok(MeasurementTable {
            reports: BTreeMap::new(),
            tolerance_db,
        })
    }

    pub fn insert<I>(&mut self, sta: NodeId, ap_rssi_dbm: f64, neighbors: I)
    where
        I: IntoIterator<Item = (NodeId, f64)>,
    {
        self.reports.insert(
            sta,
            StaReport {
                ap_rssi_dbm,
                neighbors: neighbors.into_iter().collect(),
            },
        );
    }

    /// RSSI of `from` as reported by `at`, if `at` hears it.
    pub fn neighbor_rssi(&self, at: NodeId, from: NodeId) -> Option<f64> {
        self.reports.get(&at)?.neighbors.get(&from).copied()
    }

    pub fn ap_rssi(&self, at: NodeId) -> Option<f64> {
        self.reports.get(&at).map(|r| r.ap_rssi_dbm)
    }

    /// Rows `Node A Neighbor B C MaxCST`, one per reported neighbor.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node\tA_dbm\tneighbor\tB_dbm\tC_db\tmax_cst_dbm")?;
        for (sta, report) in &self.reports {
            for (nb, b) in &report.neighbors {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    sta,
                    report.ap_rssi_dbm,
                    nb,
                    b,
                    self.tolerance_db,
                    max_cst(report.ap_rssi_dbm, *b, self.tolerance_db)
                )?;
            }
        }
        Ok(())
    }
}

/// Builds the table the AP of `cell` assembles from its stations' reports,
/// using large-scale received power only. Only same-cell stations are
/// listed as neighbors.
pub fn collect_reports(
    topology: &Topology,
    channel: &ChannelParams,
    cell: usize,
    default_cst_dbm: f64,
    tolerance_db: f64,
) -> Result<MeasurementTable> {
    let mut table = MeasurementTable::new(tolerance_db)?;
    let ap = topology.ap(cell);
    let stas: Vec<NodeId> = topology.stas_in_cell(cell).collect();
    for &sta in &stas {
        let a = channel.mean_rx_dbm(topology.distance(sta, ap))?;
        let mut neighbors = Vec::new();
        for &other in &stas {
            if other == sta {
                continue;
            }
            let b = channel.mean_rx_dbm(topology.distance(sta, other))?;
            if b >= default_cst_dbm {
                neighbors.push((other, b));
            }
        }
        table.insert(sta, a, neighbors);
    }
    Ok(table)
}

/// `min(B + C, A)`.
pub fn max_cst(a_dbm: f64, b_dbm: f64, c_db: f64) -> f64 {
    (b_dbm + c_db).min(a_dbm)
}

/// Ordered `(primary, target)` pairs where the target cannot hear the
/// primary at the default threshold.
pub fn natural_eligible_pairs(table: &MeasurementTable, default_cst_dbm: f64) -> BTreeSet<(NodeId, NodeId)> {
    let mut pairs = BTreeSet::new();
    for &primary in table.reports.keys() {
        for target in natural_targets(table, primary, default_cst_dbm) {
            pairs.insert((primary, target));
        }
    }
    pairs
}

pub fn natural_targets(table: &MeasurementTable, primary: NodeId, default_cst_dbm: f64) -> Vec<NodeId> {
    table
        .reports
        .iter()
        .filter(|(&t, _)| t != primary)
        .filter(|(_, r)| r.neighbors.get(&primary).is_none_or(|&b| b < default_cst_dbm))
        .map(|(&t, _)| t)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CreatedTarget {
    pub target: NodeId,
    pub adapted_cst_dbm: f64,
    /// `A - B`: how far the primary sits below the AP at the target.
    pub margin_db: f64,
}

/// Stations that hear `primary` but can raise their CST above it without
/// losing the AP (`B + C <= A`).
pub fn created_eligible_targets(table: &MeasurementTable, primary: NodeId) -> Vec<CreatedTarget> {
    let c = table.tolerance_db;
    table
        .reports
        .iter()
        .filter(|(&t, _)| t != primary)
        .filter_map(|(&t, r)| {
            let b = *r.neighbors.get(&primary)?;
            (b + c <= r.ap_rssi_dbm).then(|| CreatedTarget {
                target: t,
                adapted_cst_dbm: max_cst(r.ap_rssi_dbm, b, c),
                margin_db: r.ap_rssi_dbm - b,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CstState {
    pub default_cst_dbm: f64,
    pub current_cst_dbm: f64,
    /// Virtual time (seconds) at which the CST returns to its default.
    pub revert_at: Option<f64>,
}

impl CstState {
    pub fn new(default_cst_dbm: f64) -> Self {
        CstState {
            default_cst_dbm,
            current_cst_dbm: default_cst_dbm,
            revert_at: None,
        }
    }

    /// Raises the threshold until `until`. Concurrent adaptations keep the
    /// highest threshold and the earliest revert time.
    pub fn adapt(&mut self, cst_dbm: f64, until: f64) {
        match self.revert_at {
            Some(t) => {
                self.current_cst_dbm = self.current_cst_dbm.max(cst_dbm);
                self.revert_at = Some(t.min(until));
            }
            None => {
                self.current_cst_dbm = cst_dbm.max(self.default_cst_dbm);
                self.revert_at = Some(until);
            }
        }
    }

    pub fn revert_if_due(&mut self, now: f64) {
        if self.revert_at.is_some_and(|t| now >= t) {
            self.revert();
        }
    }

    pub fn revert(&mut self) {
        self.current_cst_dbm = self.default_cst_dbm;
        self.revert_at = None;
    }

    /// Carrier sense: busy iff the received power reaches the threshold.
    pub fn senses_busy(&self, power_dbm: f64) -> bool {
        power_dbm >= self.current_cst_dbm
    }
}

/// Applies the adaptation triggered by `primary` starting at `t_start` to
/// every ECA-capable created target, reverting at `t_end`. Returns the
/// nodes that adapted.
pub fn apply_and_revert<F>(
    states: &mut BTreeMap<NodeId, CstState>,
    table: &MeasurementTable,
    primary: NodeId,
    eca_capable: F,
    t_start: f64,
    t_end: f64,
) -> Vec<NodeId>
where
    F: Fn(NodeId) -> bool,
{
    let mut adapted = Vec::new();
    for ct in created_eligible_targets(table, primary) {
        if !eca_capable(ct.target) {
            continue;
        }
        if let Some(state) = states.get_mut(&ct.target) {
            state.revert_if_due(t_start);
            state.adapt(ct.adapted_cst_dbm, t_end);
            adapted.push(ct.target);
        }
    }
    adapted
}

#[cfg(test)]
pub(crate) mod table1 {
    use super::*;

    pub const STA1: NodeId = NodeId(1);
    pub const STA2: NodeId = NodeId(2);
    pub const STA3: NodeId = NodeId(3);
    pub const STA4: NodeId = NodeId(4);

    type Row = (NodeId, f64, &'static [(NodeId, f64, f64)]);

    /// The four-station example: (node, A, [(neighbor, B, MaxCST)]).
    pub const ROWS: [Row; 4] = [
        (STA1, -55.0, &[(STA3, -77.0, -72.0), (STA4, -55.0, -55.0)]),
        (STA2, -45.0, &[(STA3, -50.0, -45.0), (STA4, -65.0, -60.0)]),
        (STA3, -55.0, &[(STA1, -80.0, -75.0), (STA2, -50.0, -55.0), (STA4, -70.0, -65.0)]),
        (STA4, -35.0, &[(STA1, -55.0, -50.0), (STA2, -60.0, -55.0), (STA3, -70.0, -65.0)]),
    ];

    pub fn table() -> MeasurementTable {
        let mut t = MeasurementTable::new(5.0).unwrap();
        for (sta, a, nbs) in ROWS {
            t.insert(sta, a, nbs.iter().map(|&(n, b, _)| (n, b)));
        }
        t
    }
}
