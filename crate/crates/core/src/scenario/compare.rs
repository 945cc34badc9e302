use super::presets::{ExpectedMarker, Quantity};
use super::RunRecord;
use crate::error::{Error, Result};
use crate::junction::{macro_merge, MacroCoupling};
use crate::network::{Coupling, RoadSnapshot};

/// Profiles with a smaller spread have no shock to locate.
const MIN_JUMP: f64 = 1e-3;
/// Snapshot times closer than this count as equal.
const TIME_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct RoadComparison {
    /// 1-based road number.
    pub road: usize,
    pub l1: f64,
    pub linf: f64,
    pub trace_a: f64,
    pub trace_b: f64,
    pub shock_a: Option<f64>,
    pub shock_b: Option<f64>,
}

impl RoadComparison {
    /// `shock_a - shock_b` when both profiles have one.
    pub fn shock_offset(&self) -> Option<f64> {
        Some(self.shock_a? - self.shock_b?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotComparison {
    pub time: f64,
    pub roads: Vec<RoadComparison>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkerOutcome {
    pub marker: ExpectedMarker,
    /// `None` when neither run provides the quantity.
    pub observed: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub snapshots: Vec<SnapshotComparison>,
    pub markers: Vec<MarkerOutcome>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.markers.iter().all(|m| m.passed)
    }
}

/// Density next to the junction: last cell on the incoming roads (0, 1),
/// first cell on the outgoing road (2).
pub fn junction_trace(road: usize, snap: &RoadSnapshot) -> f64 {
    if road < 2 {
        *snap.rho.last().expect("roads are never empty")
    } else {
        snap.rho[0]
    }
}

/// Position where the density crosses halfway between its extremes, taken
/// at the steepest such crossing and interpolated linearly.
pub fn shock_position(x: &[f64], rho: &[f64]) -> Option<f64> {
    let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo).is_nan() || hi - lo < MIN_JUMP {
        return None;
    }
    let level = 0.5 * (lo + hi);
    (0..rho.len() - 1)
        .filter(|&i| (rho[i] - level) * (rho[i + 1] - level) <= 0.0 && rho[i] != rho[i + 1])
        .max_by(|&i, &j| {
            (rho[i + 1] - rho[i])
                .abs()
                .total_cmp(&(rho[j + 1] - rho[j]).abs())
        })
        .map(|i| {
            let s = (level - rho[i]) / (rho[i + 1] - rho[i]);
            x[i] + s * (x[i + 1] - x[i])
        })
}

fn compare_road(road: usize, a: &RoadSnapshot, b: &RoadSnapshot) -> Result<RoadComparison> {
    if a.x != b.x {
        return Err(Error::Comparison(format!(
            "road {} has {} cells in one run and {} in the other, or different centres",
            road + 1,
            a.x.len(),
            b.x.len()
        )));
    }
    let dx = 1.0 / a.x.len() as f64;
    let diff = a.rho.iter().zip(&b.rho).map(|(p, q)| (p - q).abs());
    let (l1, linf) = diff.fold((0.0, 0.0f64), |(s, m), d| (s + d * dx, m.max(d)));
    Ok(RoadComparison {
        road: road + 1,
        l1,
        linf,
        trace_a: junction_trace(road, a),
        trace_b: junction_trace(road, b),
        shock_a: shock_position(&a.x, &a.rho),
        shock_b: shock_position(&b.x, &b.rho),
    })
}

fn observe(
    marker: &ExpectedMarker,
    runs: [&RunRecord; 2],
    last: Option<&SnapshotComparison>,
) -> Option<f64> {
    let idx = |road: usize| road.checked_sub(1).filter(|&r| r < 3);
    let Some(model) = marker.model else {
        let Quantity::L1Distance { road } = marker.quantity else {
            return None;
        };
        return last?.roads.get(idx(road)?).map(|r| r.l1);
    };
    let run = runs.into_iter().find(|r| r.config.model == model)?;
    let final_roads = &run.snapshots.last()?.roads;
    match marker.quantity {
        Quantity::JunctionTrace { road } => {
            Some(junction_trace(idx(road)?, final_roads.get(idx(road)?)?))
        }
        Quantity::ShockPosition { road } => {
            let r = final_roads.get(idx(road)?)?;
            shock_position(&r.x, &r.rho)
        }
        Quantity::CouplingFlux { road } => {
            let mode = match run.config.coupling {
                Coupling::MacroFair => MacroCoupling::Fair,
                Coupling::MacroPriority => MacroCoupling::Priority,
                _ => return None,
            };
            let m = macro_merge(&run.config.diagram, run.config.initial_densities, mode);
            Some(m.fluxes[idx(road)?])
        }
        Quantity::L1Distance { .. } => None,
    }
}

/// Distances between two runs on the same grid, snapshot by snapshot, and
/// the markers checked against the final snapshot.
pub fn compare_runs(
    a: &RunRecord,
    b: &RunRecord,
    markers: &[ExpectedMarker],
) -> Result<ComparisonReport> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::Comparison(format!(
            "{} snapshots against {}",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    let mut snapshots = Vec::with_capacity(a.snapshots.len());
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if (sa.time - sb.time).abs() > TIME_TOL {
            return Err(Error::Comparison(format!(
                "snapshot at t = {} against t = {}",
                sa.time, sb.time
            )));
        }
        if sa.roads.len() != sb.roads.len() {
            return Err(Error::Comparison(format!(
                "{} roads against {}",
                sa.roads.len(),
                sb.roads.len()
            )));
        }
        let roads = sa
            .roads
            .iter()
            .zip(&sb.roads)
            .enumerate()
            .map(|(k, (ra, rb))| compare_road(k, ra, rb))
            .collect::<Result<_>>()?;
        snapshots.push(SnapshotComparison {
            time: sa.time,
            roads,
        });
    }
    let markers = markers
        .iter()
        .map(|m| {
            let observed = observe(m, [a, b], snapshots.last());
            MarkerOutcome {
                marker: *m,
                observed,
                passed: observed.is_some_and(|v| (v - m.value).abs() <= m.tolerance),
            }
        })
        .collect();
    Ok(ComparisonReport { snapshots, markers })
}
