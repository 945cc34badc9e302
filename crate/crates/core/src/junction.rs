//! Coupling conditions at a node with two incoming roads (1, 2) and one
//! outgoing road (3).
//!
//! Kinetic conditions prescribe the characteristic variables entering the
//! roads from the node: `w^1`, `w^2` on the incoming roads and `Z^3` on the
//! outgoing road, given the traces `Z^1`, `Z^2`, `w^3` leaving the roads.
//! Macroscopic conditions prescribe the fluxes `C^i` from the demand of the
//! incoming roads and the supply of the outgoing one.

use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};
use crate::kinetic::{CellState, InterfaceFlux};

const CLAMP_TOL: f64 = 1e-13;

/// Known traces at the junction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JunctionTrace {
    pub z_hat_1: f64,
    pub z_hat_2: f64,
    pub w_hat_3: f64,
}

impl JunctionTrace {
    pub fn new(z_hat_1: f64, z_hat_2: f64, w_hat_3: f64) -> Result<Self> {
        for (what, v) in [
            ("z_hat_1", z_hat_1),
            ("z_hat_2", z_hat_2),
            ("w_hat_3", w_hat_3),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    what,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self {
            z_hat_1,
            z_hat_2,
            w_hat_3,
        })
    }

    /// Traces from the last cells of roads 1, 2 and the first cell of road 3.
    pub fn from_cells(last_1: &CellState, last_2: &CellState, first_3: &CellState) -> Self {
        Self {
            z_hat_1: last_1.z(),
            z_hat_2: last_2.z(),
            w_hat_3: first_3.w(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KineticCase {
    FairRegular,
    FairDegenerate,
    PriorityI,
    PriorityII,
    PriorityIII,
}

/// Resolved kinetic unknowns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticMergeOutcome {
    pub w_1: f64,
    pub w_2: f64,
    pub z_3: f64,
    pub case_label: KineticCase,
}

impl KineticMergeOutcome {
    /// `Z^1 (1 - w^1) + Z^2 (1 - w^2) - Z^3 (1 - w^3)`.
    pub fn flux_imbalance(&self, trace: &JunctionTrace) -> f64 {
        trace.z_hat_1 * (1.0 - self.w_1) + trace.z_hat_2 * (1.0 - self.w_2)
            - self.z_3 * (1.0 - trace.w_hat_3)
    }
}

fn unit(x: f64) -> f64 {
    debug_assert!(x > -CLAMP_TOL && x < 1.0 + CLAMP_TOL, "{x} outside [0,1]");
    x.clamp(0.0, 1.0)
}

/// Fair merge: both incoming roads see the free space of road 3 minus the
/// driving cars coming from the other road.
pub fn kinetic_fair_merge(trace: &JunctionTrace) -> KineticMergeOutcome {
    let JunctionTrace {
        z_hat_1: z1,
        z_hat_2: z2,
        w_hat_3: w3,
    } = *trace;
    let det = 1.0 - z1 * z2;
    let (alpha_1, alpha_2, mut label) = if det > 0.0 {
        ((1.0 - z2) / det, (1.0 - z1) / det, KineticCase::FairRegular)
    } else {
        // Z^1 = Z^2 = 1: any split is admissible, take the symmetric one.
        (0.5, 0.5, KineticCase::FairDegenerate)
    };
    let z_3 = unit(alpha_1 * z1 + alpha_2 * z2);
    if w3 >= 1.0 {
        label = KineticCase::FairDegenerate;
        return KineticMergeOutcome {
            w_1: 1.0,
            w_2: 1.0,
            z_3,
            case_label: label,
        };
    }
    KineticMergeOutcome {
        w_1: unit(1.0 - alpha_1 * (1.0 - w3)),
        w_2: unit(1.0 - alpha_2 * (1.0 - w3)),
        z_3,
        case_label: label,
    }
}

/// Priority merge: road 1 drives unhindered, road 2 takes what is left.
pub fn kinetic_priority_merge(trace: &JunctionTrace) -> KineticMergeOutcome {
    priority_with_capacity(trace, 0.0)
}

/// Priority merge with the outgoing ratio capped at `1 - delta`.
pub fn kinetic_priority_merge_truncated(
    trace: &JunctionTrace,
    delta: f64,
    diagram: &FundamentalDiagram,
) -> Result<KineticMergeOutcome> {
    let delta_bar = diagram.delta_bar();
    if !(0.0..=delta_bar).contains(&delta) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            lo: 0.0,
            hi: delta_bar,
        });
    }
    Ok(priority_with_capacity(trace, delta))
}

fn priority_with_capacity(trace: &JunctionTrace, delta: f64) -> KineticMergeOutcome {
    let JunctionTrace {
        z_hat_1: z1,
        z_hat_2: z2,
        w_hat_3: w3,
    } = *trace;
    let z_cap = 1.0 - delta;
    let room = (1.0 - w3) * z_cap;
    if room >= z1 && z1 + z2 >= room {
        let free_2 = if z2 > 0.0 { (room - z1) / z2 } else { 0.0 };
        KineticMergeOutcome {
            w_1: 0.0,
            w_2: 1.0 - free_2.clamp(0.0, 1.0),
            z_3: z_cap,
            case_label: KineticCase::PriorityI,
        }
    } else if room <= z1 {
        let free_1 = if z1 > 0.0 { room / z1 } else { 0.0 };
        KineticMergeOutcome {
            w_1: 1.0 - free_1.clamp(0.0, 1.0),
            w_2: 1.0,
            z_3: z_cap,
            case_label: KineticCase::PriorityII,
        }
    } else {
        let z_3 = if w3 < 1.0 {
            (z1 + z2) / (1.0 - w3)
        } else {
            0.0
        };
        KineticMergeOutcome {
            w_1: 0.0,
            w_2: 0.0,
            z_3: z_3.clamp(0.0, 1.0),
            case_label: KineticCase::PriorityIII,
        }
    }
}

/// Kinetic coupling families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KineticCoupling {
    Fair,
    Priority,
    PriorityTruncated(f64),
}

/// Resolved kinetic outcome together with the three junction fluxes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticJunctionFluxes {
    pub outcome: KineticMergeOutcome,
    /// Fluxes at the junction-side interface of roads 1, 2 and 3.
    pub fluxes: [InterfaceFlux; 3],
}

/// Evaluates the coupling and the Godunov flux at each junction interface.
///
/// The ghost of incoming road `i` is `(w^i, Z^i_hat)`, the ghost of road 3 is
/// `(w^3_hat, Z^3)`; the interface flux only reads `Z` of the upstream state
/// and `w` of the downstream state, so it is formed from the invariants
/// directly.
pub fn kinetic_junction_fluxes(
    trace: &JunctionTrace,
    mode: KineticCoupling,
    diagram: &FundamentalDiagram,
) -> Result<KineticJunctionFluxes> {
    let outcome = match mode {
        KineticCoupling::Fair => kinetic_fair_merge(trace),
        KineticCoupling::Priority => kinetic_priority_merge(trace),
        KineticCoupling::PriorityTruncated(delta) => {
            kinetic_priority_merge_truncated(trace, delta, diagram)?
        }
    };
    let fluxes = [
        InterfaceFlux::from_middle(outcome.w_1, trace.z_hat_1),
        InterfaceFlux::from_middle(outcome.w_2, trace.z_hat_2),
        InterfaceFlux::from_middle(trace.w_hat_3, outcome.z_3),
    ];
    Ok(KineticJunctionFluxes { outcome, fluxes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MacroCase {
    A,
    B,
    C,
    D,
}

/// Resolved macroscopic fluxes with the caps they were derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroMergeOutcome {
    /// Demand of roads 1, 2 and supply of road 3.
    pub caps: [f64; 3],
    pub fluxes: [f64; 3],
    pub case_label: MacroCase,
}

/// Macroscopic coupling families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacroCoupling {
    Fair,
    Priority,
}

fn caps(diagram: &FundamentalDiagram, rho_b: [f64; 3]) -> [f64; 3] {
    [
        diagram.demand(rho_b[0]),
        diagram.demand(rho_b[1]),
        diagram.supply(rho_b[2]),
    ]
}

/// Fair supply-demand merge: symmetric split when both roads exceed half
/// the supply, otherwise only the larger one is reduced.
pub fn macro_fair_merge(diagram: &FundamentalDiagram, rho_b: [f64; 3]) -> MacroMergeOutcome {
    let c = caps(diagram, rho_b);
    let half = 0.5 * c[2];
    let (c1, c2, case_label) = if c[0] + c[1] <= c[2] {
        (c[0], c[1], MacroCase::A)
    } else {
        let reserved = c[0].min(c[1]).min(half);
        let c1 = c[0].min(c[2] - reserved);
        let c2 = c[1].min(c[2] - reserved);
        let label = match (c[0] >= half, c[1] >= half) {
            (true, true) => MacroCase::B,
            (true, false) => MacroCase::C,
            _ => MacroCase::D,
        };
        (c1, c2, label)
    };
    MacroMergeOutcome {
        caps: c,
        fluxes: [c1, c2, c1 + c2],
        case_label,
    }
}

/// Priority supply-demand merge: road 1 takes up to the full supply.
pub fn macro_priority_merge(diagram: &FundamentalDiagram, rho_b: [f64; 3]) -> MacroMergeOutcome {
    let c = caps(diagram, rho_b);
    let (c1, c2, case_label) = if c[0] + c[1] <= c[2] {
        (c[0], c[1], MacroCase::A)
    } else if c[0] >= c[2] {
        (c[2], 0.0, MacroCase::B)
    } else {
        (c[0], c[2] - c[0], MacroCase::C)
    };
    MacroMergeOutcome {
        caps: c,
        fluxes: [c1, c2, c1 + c2],
        case_label,
    }
}

pub fn macro_merge(
    diagram: &FundamentalDiagram,
    rho_b: [f64; 3],
    mode: MacroCoupling,
) -> MacroMergeOutcome {
    match mode {
        MacroCoupling::Fair => macro_fair_merge(diagram, rho_b),
        MacroCoupling::Priority => macro_priority_merge(diagram, rho_b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn trace(z1: f64, z2: f64, w3: f64) -> JunctionTrace {
        JunctionTrace::new(z1, z2, w3).unwrap()
    }

    #[test]
    fn fair_examples() {
        let o = kinetic_fair_merge(&trace(0.0, 0.0, 0.4));
        assert!(close(o.w_1, 0.4, 1e-15) && close(o.w_2, 0.4, 1e-15) && o.z_3 == 0.0);

        let o = kinetic_fair_merge(&trace(0.5, 0.5, 0.0));
        assert!(close(o.w_1, 1.0 / 3.0, 1e-15) && close(o.w_2, 1.0 / 3.0, 1e-15));
        assert!(close(o.z_3, 2.0 / 3.0, 1e-15));
        assert_eq!(o.case_label, KineticCase::FairRegular);

        let t = trace(0.3, 0.5, 1.0);
        let o = kinetic_fair_merge(&t);
        assert_eq!((o.w_1, o.w_2), (1.0, 1.0));
        assert!(close(o.z_3, 0.5 / 0.85, 1e-15));
        assert_eq!(o.flux_imbalance(&t), 0.0);
    }

    #[test]
    fn fair_both_saturated_splits_evenly() {
        let t = trace(1.0, 1.0, 0.2);
        let o = kinetic_fair_merge(&t);
        assert_eq!(o.case_label, KineticCase::FairDegenerate);
        assert!(close(o.w_1, 0.6, 1e-15) && close(o.w_2, 0.6, 1e-15));
        assert_eq!(o.z_3, 1.0);
        assert!(o.flux_imbalance(&t).abs() < 1e-15);
    }

    #[test]
    fn priority_examples() {
        let o = kinetic_priority_merge(&trace(0.5, 0.4, 0.2));
        assert_eq!(o.case_label, KineticCase::PriorityI);
        assert!(o.w_1 == 0.0 && o.z_3 == 1.0 && close(o.w_2, 0.25, 1e-15));

        let o = kinetic_priority_merge(&trace(0.3, 0.4, 0.2));
        assert_eq!(o.case_label, KineticCase::PriorityIII);
        assert!(o.w_1 == 0.0 && o.w_2 == 0.0 && close(o.z_3, 0.875, 1e-15));

        let o = kinetic_priority_merge(&trace(0.0, 0.0, 0.0));
        assert_eq!(o.case_label, KineticCase::PriorityIII);
        assert_eq!(o.z_3, 0.0);

        let o = kinetic_priority_merge(&trace(0.9, 0.4, 0.3));
        assert_eq!(o.case_label, KineticCase::PriorityII);
        assert!(o.w_2 == 1.0 && close(1.0 - o.w_1, 0.7 / 0.9, 1e-15));
    }

    #[test]
    fn priority_guards() {
        // Case I region with Z^2 = 0 sits on the line w^3 + Z^1 = 1.
        let o = kinetic_priority_merge(&trace(0.4, 0.0, 0.6));
        assert_eq!(o.w_2, 1.0);
        // A jammed outgoing road closes road 2 whatever the case.
        let o = kinetic_priority_merge(&trace(0.0, 0.3, 1.0));
        assert_eq!((o.case_label, o.w_2), (KineticCase::PriorityI, 1.0));
        let o = kinetic_priority_merge(&trace(0.5, 0.3, 1.0));
        assert_eq!(
            (o.case_label, o.w_1, o.w_2),
            (KineticCase::PriorityII, 1.0, 1.0)
        );
        assert!(o.flux_imbalance(&trace(0.0, 0.3, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn truncated_examples() {
        let d = FundamentalDiagram::lwr();
        assert_eq!(d.delta_bar(), 0.5);
        let t = trace(0.6, 0.1, 0.2);
        let o = kinetic_priority_merge_truncated(&t, 0.5, &d).unwrap();
        assert_eq!(o.case_label, KineticCase::PriorityII);
        assert!(o.w_2 == 1.0 && o.z_3 == 0.5 && close(1.0 - o.w_1, 2.0 / 3.0, 1e-15));
        assert!(kinetic_priority_merge_truncated(&t, 0.6, &d).is_err());
        assert!(kinetic_priority_merge_truncated(&t, -0.1, &d).is_err());
        assert_eq!(
            kinetic_priority_merge_truncated(&t, 0.0, &d).unwrap(),
            kinetic_priority_merge(&t)
        );
    }

    #[test]
    fn macro_fair_examples() {
        let d = FundamentalDiagram::lwr();
        let o = macro_fair_merge(&d, [0.1, 0.15, 0.2]);
        assert_eq!(o.case_label, MacroCase::A);
        assert!(close(o.fluxes[0], 0.09, 1e-15) && close(o.fluxes[1], 0.1275, 1e-15));
        assert!(close(o.fluxes[2], 0.2175, 1e-15));

        let o = macro_fair_merge(&d, [0.7, 0.6, 0.2]);
        assert_eq!(o.case_label, MacroCase::B);
        assert_eq!(o.fluxes, [0.125, 0.125, 0.25]);

        let o = macro_fair_merge(&d, [0.05, 0.6, 0.2]);
        assert_eq!(o.case_label, MacroCase::D);
        assert!(close(o.fluxes[0], 0.0475, 1e-15) && close(o.fluxes[1], 0.2025, 1e-15));
    }

    #[test]
    fn macro_priority_examples() {
        let d = FundamentalDiagram::lwr();
        let o = macro_priority_merge(&d, [0.6, 0.7, 0.2]);
        assert_eq!(o.case_label, MacroCase::B);
        assert_eq!(o.fluxes, [0.25, 0.0, 0.25]);

        let o = macro_priority_merge(&d, [0.1, 0.5, 0.2]);
        assert_eq!(o.case_label, MacroCase::C);
        assert!(close(o.fluxes[0], 0.09, 1e-12) && close(o.fluxes[1], 0.16, 1e-12));

        let o = macro_priority_merge(&d, [0.0, 0.0, 0.9]);
        assert_eq!(o.fluxes, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn junction_fluxes_vacuum_and_balance() {
        let d = FundamentalDiagram::lwr();
        let v = CellState::VACUUM;
        let t = JunctionTrace::from_cells(&v, &v, &v);
        let j = kinetic_junction_fluxes(&t, KineticCoupling::Fair, &d).unwrap();
        assert!(j.fluxes.iter().all(|f| f.mass_flux == 0.0));

        let cells = [0.1, 0.15, 0.2].map(|r| CellState::equilibrium(&d, r));
        let t = JunctionTrace::from_cells(&cells[0], &cells[1], &cells[2]);
        let j = kinetic_junction_fluxes(&t, KineticCoupling::Fair, &d).unwrap();
        let f = j.fluxes.map(|f| f.mass_flux);
        assert!((f[0] + f[1] - f[2]).abs() < 1e-15);

        let cells = [0.3, 0.0, 0.2].map(|r| CellState::equilibrium(&d, r));
        let t = JunctionTrace::from_cells(&cells[0], &cells[1], &cells[2]);
        for mode in [
            KineticCoupling::Priority,
            KineticCoupling::PriorityTruncated(0.5),
        ] {
            let j = kinetic_junction_fluxes(&t, mode, &d).unwrap();
            assert_eq!(j.fluxes[1].mass_flux, 0.0);
        }
    }
}
