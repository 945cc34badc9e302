use std::fmt;

use super::{Interval, Side};
use crate::diagram::{bisect_increasing, FundamentalDiagram};
use crate::error::{Error, Result};

/// Fluxes this close to `sigma` are treated as the sonic row.
const SONIC_TOL: f64 = 1e-14;

/// Fixpoints of the layer ODE for a given flux and their stability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixpointReport {
    pub side: Side,
    pub flux: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub stable: f64,
    pub unstable: Option<f64>,
    /// Initial values attracted by `stable`.
    pub basin: Interval,
}

pub fn classify_fixpoints(
    diagram: &FundamentalDiagram,
    side: Side,
    flux: f64,
) -> Result<FixpointReport> {
    let c = diagram.check_flux("C", flux)?;
    let rho_star = diagram.rho_star();
    let rho_minus = diagram.rho_minus_unchecked(c);
    let rho_plus = diagram.rho_plus_unchecked(c);
    let sonic = c >= diagram.sigma() - SONIC_TOL;
    let (stable, unstable, basin) = match side {
        Side::Left if c == 0.0 => (1.0, Some(0.0), Interval::with_ends(0.0, 1.0, false, true)),
        Side::Left if sonic => (
            rho_star,
            None,
            Interval::with_ends(rho_star, 1.0, true, false),
        ),
        Side::Left => (rho_plus, Some(rho_minus), Interval::open(rho_minus, 1.0)),
        Side::Right if c == 0.0 => (0.0, Some(1.0), Interval::with_ends(0.0, 1.0, true, false)),
        Side::Right if sonic => (rho_star, None, Interval::closed(0.0, rho_star)),
        Side::Right => (
            rho_minus,
            Some(rho_plus),
            Interval::with_ends(0.0, rho_plus, true, false),
        ),
    };
    let (rho_minus, rho_plus) = if sonic {
        (rho_star, rho_star)
    } else {
        (rho_minus, rho_plus)
    };
    Ok(FixpointReport {
        side,
        flux: c,
        rho_minus,
        rho_plus,
        stable,
        unstable,
        basin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RpLabel {
    Rp1,
    Rp2,
}

impl fmt::Display for RpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RpLabel::Rp1 => "RP1",
            RpLabel::Rp2 => "RP2",
        })
    }
}

/// States `rho_K` reachable from the trace `rho_B` with waves entering the
/// road.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfRiemannClass {
    pub side: Side,
    pub rp_label: RpLabel,
    pub admissible_k: Vec<Interval>,
}

impl HalfRiemannClass {
    pub fn admits(&self, rho_k: f64) -> bool {
        self.admissible_k.iter().any(|i| i.contains(rho_k))
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value: x,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

pub fn classify_half_riemann(
    diagram: &FundamentalDiagram,
    side: Side,
    rho_b: f64,
) -> Result<HalfRiemannClass> {
    check_unit("rho_B", rho_b)?;
    let rho_star = diagram.rho_star();
    let (rp_label, admissible_k) = match side {
        Side::Left if rho_b <= rho_star => (RpLabel::Rp1, vec![Interval::closed(0.0, rho_star)]),
        Side::Left => (
            RpLabel::Rp2,
            vec![
                Interval::closed(0.0, diagram.tau(rho_b)),
                Interval::point(rho_b),
            ],
        ),
        Side::Right if rho_b >= rho_star => (RpLabel::Rp1, vec![Interval::closed(rho_star, 1.0)]),
        Side::Right => (
            RpLabel::Rp2,
            vec![
                Interval::point(rho_b),
                Interval::closed(diagram.tau(rho_b), 1.0),
            ],
        ),
    };
    Ok(HalfRiemannClass {
        side,
        rp_label,
        admissible_k,
    })
}

/// Ingoing flow (1a/1b, unstable layer), transonic flow (2) or outgoing
/// flow (3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCase {
    Case1a,
    Case1b,
    Case2,
    Case3,
}

impl fmt::Display for BoundaryCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCase::Case1a => "1a",
            BoundaryCase::Case1b => "1b",
            BoundaryCase::Case2 => "2",
            BoundaryCase::Case3 => "3",
        })
    }
}

/// Macroscopic boundary data derived from one kinetic boundary value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryCondition {
    pub flux: f64,
    /// Asymptotic layer state, the boundary value seen by the scalar law.
    pub rho_k: f64,
    /// Kinetic density at the boundary itself.
    pub rho_0: f64,
    pub case: BoundaryCase,
}

/// Left boundary with prescribed `Z`.
pub fn left_boundary_condition(
    diagram: &FundamentalDiagram,
    z_in: f64,
    rho_b: f64,
) -> Result<BoundaryCondition> {
    check_unit("Z_in", z_in)?;
    check_unit("rho_B", rho_b)?;
    let rho_star = diagram.rho_star();
    let sigma = diagram.sigma();
    let unstable = |hi: f64, case| {
        let rho = bisect_increasing(|r| diagram.z_of_rho(r), 0.0, hi, z_in);
        BoundaryCondition {
            flux: diagram.flux(rho),
            rho_k: rho,
            rho_0: rho,
            case,
        }
    };
    if rho_b <= rho_star {
        if z_in <= diagram.z_of_rho(rho_star) {
            Ok(unstable(rho_star, BoundaryCase::Case1a))
        } else {
            Ok(BoundaryCondition {
                flux: sigma,
                rho_k: rho_star,
                rho_0: 1.0 + sigma - sigma / z_in,
                case: BoundaryCase::Case2,
            })
        }
    } else {
        let tau_b = diagram.tau(rho_b);
        if z_in <= diagram.z_of_rho(tau_b) {
            Ok(unstable(tau_b, BoundaryCase::Case1b))
        } else {
            let c = diagram.flux(rho_b);
            Ok(BoundaryCondition {
                flux: c,
                rho_k: rho_b,
                rho_0: (1.0 + c - c / z_in).clamp(0.0, 1.0),
                case: BoundaryCase::Case3,
            })
        }
    }
}

/// Right boundary with prescribed `w`.
pub fn right_boundary_condition(
    diagram: &FundamentalDiagram,
    w_in: f64,
    rho_b: f64,
) -> Result<BoundaryCondition> {
    check_unit("w_in", w_in)?;
    check_unit("rho_B", rho_b)?;
    let rho_star = diagram.rho_star();
    let sigma = diagram.sigma();
    let stopped = |r: f64| r - diagram.flux(r);
    let unstable = |lo: f64, case| {
        let rho = bisect_increasing(stopped, lo, 1.0, w_in);
        BoundaryCondition {
            flux: diagram.flux(rho),
            rho_k: rho,
            rho_0: rho,
            case,
        }
    };
    if rho_b >= rho_star {
        if w_in >= stopped(rho_star) {
            Ok(unstable(rho_star, BoundaryCase::Case1a))
        } else {
            Ok(BoundaryCondition {
                flux: sigma,
                rho_k: rho_star,
                rho_0: w_in + sigma,
                case: BoundaryCase::Case2,
            })
        }
    } else {
        let tau_b = diagram.tau(rho_b);
        if w_in >= stopped(tau_b) {
            Ok(unstable(tau_b, BoundaryCase::Case1b))
        } else {
            let c = diagram.flux(rho_b);
            Ok(BoundaryCondition {
                flux: c,
                rho_k: rho_b,
                rho_0: w_in + c,
                case: BoundaryCase::Case3,
            })
        }
    }
}
