use super::{classify_fixpoints, Side};
use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};

/// Distance to a fixpoint that counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Consecutive accepted steps inside `CONVERGENCE_TOL`.
const CONVERGENCE_WINDOW: usize = 10;
const ABS_TOL: f64 = 1e-10;
/// Leaving `[0, 1]` by more than this is divergence.
const BAND_TOL: f64 = 1e-9;
/// Initial values this close to a fixpoint stay on it.
const FIXPOINT_SNAP: f64 = 1e-12;
const JAC_STEP: f64 = 1e-7;
/// Bound on `h |f'(rho)|`, inside the real stability interval of the
/// tableau (about 3.3).
const STIFF_LIMIT: f64 = 3.0;

/// Stationary layer with constant flux `C` and boundary density `rho0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerProblem {
    pub side: Side,
    pub flux: f64,
    pub rho0: f64,
}

impl LayerProblem {
    pub fn new(diagram: &FundamentalDiagram, side: Side, flux: f64, rho0: f64) -> Result<Self> {
        let flux = diagram.check_flux("C", flux)?;
        if !(0.0..=1.0).contains(&rho0) {
            return Err(Error::OutOfRange {
                what: "rho0",
                value: rho0,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { side, flux, rho0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerOutcome {
    /// Stayed within `CONVERGENCE_TOL` of `fixpoint` from `y` on.
    Converged { fixpoint: f64, y: f64 },
    /// Left `[0, 1]`, or settled on the inadmissible state `rho = 1`.
    Diverged { y: f64 },
    /// Neither within the integration range.
    Unsettled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerTrajectory {
    pub y: Vec<f64>,
    pub rho: Vec<f64>,
    pub outcome: LayerOutcome,
}

impl LayerTrajectory {
    pub fn last(&self) -> f64 {
        *self.rho.last().expect("trajectory is never empty")
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One step of size `h`; returns the fifth-order value and the error
/// estimate. The right-hand side is autonomous, so the stage abscissae
/// only enter through the increments.
fn dopri_step(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let k1 = f(x);
    let k2 = f(x + h * A21 * k1);
    let k3 = f(x + h * (A31 * k1 + A32 * k2));
    let k4 = f(x + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = f(x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let next = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(next);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (next, err.abs())
}

/// Integrates the layer ODE on `[0, y_max]` with at most `steps` accepted
/// steps.
pub fn integrate_layer(
    problem: &LayerProblem,
    diagram: &FundamentalDiagram,
    y_max: f64,
    steps: usize,
) -> Result<LayerTrajectory> {
    if y_max.is_nan() || y_max <= 0.0 || steps == 0 {
        return Err(Error::OutOfRange {
            what: "y_max",
            value: y_max,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    let report = classify_fixpoints(diagram, problem.side, problem.flux)?;
    let c = report.flux;
    let rho0 = problem.rho0;
    let fixpoints = [report.rho_minus, report.rho_plus];

    if let Some(&fp) = fixpoints
        .iter()
        .find(|&&fp| (rho0 - fp).abs() <= FIXPOINT_SNAP)
    {
        return Ok(LayerTrajectory {
            y: vec![0.0, y_max],
            rho: vec![rho0, rho0],
            outcome: LayerOutcome::Converged {
                fixpoint: fp,
                y: 0.0,
            },
        });
    }
    if c == 0.0 {
        // The layer collapses onto the stable state immediately.
        let target = report.stable;
        return Ok(LayerTrajectory {
            y: vec![0.0, 0.0, y_max],
            rho: vec![rho0, target, target],
            outcome: LayerOutcome::Converged {
                fixpoint: target,
                y: 0.0,
            },
        });
    }

    let sign = match problem.side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    let rhs = |rho: f64| {
        let r = rho.clamp(0.0, 1.0);
        sign * (1.0 - rho) * (diagram.flux(r) - c) / c
    };

    let mut ys = vec![0.0];
    let mut rhos = vec![rho0];
    let (mut y, mut rho) = (0.0, rho0);
    let mut h = (y_max / steps as f64).min(1e-2 * c);
    let mut streak = 0usize;
    let mut streak_target = f64::NAN;
    let mut streak_start = 0.0;
    let mut accepted = 0usize;
    let candidates = [report.rho_minus, report.rho_plus, 1.0];

    while y < y_max && accepted < steps {
        h = h.min(y_max - y);
        // Near an attracting fixpoint the amplification factor of a capped
        // step lies in (0, 1), so the discrete solution stays monotone.
        let jac = (rhs(rho + JAC_STEP) - rhs(rho - JAC_STEP)) / (2.0 * JAC_STEP);
        if jac < 0.0 {
            h = h.min(STIFF_LIMIT / -jac);
        }
        let (next, err) = dopri_step(&rhs, rho, h);
        if err > ABS_TOL && h > 1e-14 {
            h *= (0.9 * (ABS_TOL / err).powf(0.2)).clamp(0.1, 1.0);
            continue;
        }
        y += h;
        rho = next;
        accepted += 1;
        ys.push(y);
        rhos.push(rho);
        if !(-BAND_TOL..=1.0 + BAND_TOL).contains(&rho) || rho.is_nan() {
            return Ok(LayerTrajectory {
                y: ys,
                rho: rhos,
                outcome: LayerOutcome::Diverged { y },
            });
        }
        let nearest = candidates
            .iter()
            .copied()
            .min_by(|a, b| (rho - a).abs().total_cmp(&(rho - b).abs()))
            .unwrap_or(f64::NAN);
        if (rho - nearest).abs() < CONVERGENCE_TOL {
            if streak == 0 || nearest != streak_target {
                streak = 0;
                streak_target = nearest;
                streak_start = y;
            }
            streak += 1;
        } else {
            streak = 0;
        }
        let growth = if err > 0.0 {
            (0.9 * (ABS_TOL / err).powf(0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= growth;
    }

    let outcome = if streak >= CONVERGENCE_WINDOW {
        if fixpoints.contains(&streak_target) {
            LayerOutcome::Converged {
                fixpoint: streak_target,
                y: streak_start,
            }
        } else {
            LayerOutcome::Diverged { y: streak_start }
        }
    } else {
        LayerOutcome::Unsettled
    };
    Ok(LayerTrajectory {
        y: ys,
        rho: rhos,
        outcome,
    })
}
