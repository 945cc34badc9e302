//! Fundamental diagrams and the scalar maps derived from them.
//!
//! A diagram is a strictly concave flux `F: [0,1] -> [0,1]` with
//! `F(0) = F(1) = 0`, `F' <= 1` and `F(rho) <= rho`. Its maximum `sigma`
//! is attained at the critical density `rho_star`. Every other module
//! consumes the diagram only through the maps defined here.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-12;
/// Iteration cap for bisection.
pub const ROOT_MAX_ITER: usize = 200;
/// Sample count used to validate user supplied diagrams.
pub const VALIDATION_SAMPLES: usize = 1001;

const CHECK_TOL: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Concave density-flux relation with its critical point.
#[derive(Clone)]
pub struct FundamentalDiagram {
    flux: ScalarFn,
    derivative: ScalarFn,
    rho_star: f64,
    sigma: f64,
}

impl fmt::Debug for FundamentalDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FundamentalDiagram")
            .field("rho_star", &self.rho_star)
            .field("sigma", &self.sigma)
            .finish_non_exhaustive()
    }
}

impl FundamentalDiagram {
    /// The classical LWR diagram `F(rho) = rho (1 - rho)`.
    pub fn lwr() -> Self {
        Self::from_parts_unchecked(|r| r * (1.0 - r), |r| 1.0 - 2.0 * r, 0.5, 0.25)
    }

    /// Builds a diagram and validates it on [`VALIDATION_SAMPLES`] points.
    pub fn new<F, D>(flux: F, derivative: D, rho_star: f64, sigma: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let diagram = Self::from_parts_unchecked(flux, derivative, rho_star, sigma);
        diagram.validate(VALIDATION_SAMPLES)?;
        Ok(diagram)
    }

    /// Builds a diagram without any validation. Intended for test stubs
    /// that deliberately break the diagram assumptions.
    pub fn from_parts_unchecked<F, D>(flux: F, derivative: D, rho_star: f64, sigma: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            flux: Arc::new(flux),
            derivative: Arc::new(derivative),
            rho_star,
            sigma,
        }
    }

    /// Checks the diagram assumptions on a uniform grid of `samples` points.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDiagram(msg));
        if samples < 3 {
            return bad(format!("need at least 3 samples, got {samples}"));
        }
        if !(0.0..=1.0).contains(&self.rho_star) || !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad(format!(
                "critical point ({}, {}) outside (0,1]x(0,1]",
                self.rho_star, self.sigma
            ));
        }
        if self.flux(0.0).abs() > CHECK_TOL || self.flux(1.0).abs() > CHECK_TOL {
            return bad("flux must vanish at rho = 0 and rho = 1".into());
        }
        if (self.flux(self.rho_star) - self.sigma).abs() > CHECK_TOL {
            return bad(format!(
                "flux(rho_star) = {} differs from sigma = {}",
                self.flux(self.rho_star),
                self.sigma
            ));
        }
        let grid: Vec<f64> = (0..samples)
            .map(|k| k as f64 / (samples - 1) as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|&r| self.flux(r)).collect();
        for (&r, &f) in grid.iter().zip(&values) {
            if f < -CHECK_TOL || f > r + CHECK_TOL {
                return bad(format!("flux({r}) = {f} leaves the triangle 0 <= q <= rho"));
            }
            if f > self.sigma + CHECK_TOL {
                return bad(format!("flux({r}) = {f} exceeds sigma = {}", self.sigma));
            }
            if self.derivative(r) > 1.0 + CHECK_TOL {
                return bad(format!("derivative({r}) = {} > 1", self.derivative(r)));
            }
        }
        // Strict concavity: midpoint above the chord for every dyadic stride.
        let mut stride = 1;
        while 2 * stride < samples {
            for i in 0..samples - 2 * stride {
                let chord = 0.5 * (values[i] + values[i + 2 * stride]);
                if values[i + stride] <= chord {
                    return bad(format!(
                        "not strictly concave on [{}, {}]",
                        grid[i],
                        grid[i + 2 * stride]
                    ));
                }
            }
            stride *= 2;
        }
        Ok(())
    }

    #[inline]
    pub fn flux(&self, rho: f64) -> f64 {
        (self.flux)(rho)
    }

    #[inline]
    pub fn derivative(&self, rho: f64) -> f64 {
        (self.derivative)(rho)
    }

    #[inline]
    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Largest characteristic speed `|F'|` over `[0,1]`; attained at an
    /// endpoint since `F'` is decreasing.
    pub fn max_wave_speed(&self) -> f64 {
        self.derivative(0.0).abs().max(self.derivative(1.0).abs())
    }

    /// Upper bound `1 / (1 - F'(1))` for the truncation parameter of the
    /// truncated priority merge.
    pub fn delta_bar(&self) -> f64 {
        1.0 / (1.0 - self.derivative(1.0))
    }

    /// Limit of `F(rho) / (1 - rho)` as `rho -> 1`, i.e. `-F'(1)`.
    pub fn jam_ratio_limit(&self) -> f64 {
        -self.derivative(1.0)
    }

    /// The other density carrying the same flux. Fixed at `rho_star`.
    pub fn tau(&self, rho: f64) -> f64 {
        let c = self.flux(rho).clamp(0.0, self.sigma);
        if rho < self.rho_star {
            self.rho_plus_unchecked(c)
        } else if rho > self.rho_star {
            self.rho_minus_unchecked(c)
        } else {
            self.rho_star
        }
    }

    /// Subcritical root of `F(rho) = c`.
    pub fn rho_minus(&self, c: f64) -> Result<f64> {
        let c = self.check_flux("C", c)?;
        Ok(self.rho_minus_unchecked(c))
    }

    /// Supercritical root of `F(rho) = c`.
    pub fn rho_plus(&self, c: f64) -> Result<f64> {
        let c = self.check_flux("C", c)?;
        Ok(self.rho_plus_unchecked(c))
    }

    pub(crate) fn rho_minus_unchecked(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        if c >= self.sigma {
            return self.rho_star;
        }
        bisect_increasing(|r| self.flux(r), 0.0, self.rho_star, c)
    }

    pub(crate) fn rho_plus_unchecked(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 1.0;
        }
        if c >= self.sigma {
            return self.rho_star;
        }
        bisect_increasing(|r| -self.flux(r), self.rho_star, 1.0, -c)
    }

    /// Accepts fluxes in `[0, sigma]`, absorbing round-off just outside.
    pub(crate) fn check_flux(&self, what: &'static str, c: f64) -> Result<f64> {
        let slack = 1e-14;
        if c.is_nan() || c < -slack || c > self.sigma + slack {
            return Err(Error::OutOfRange {
                what,
                value: c,
                lo: 0.0,
                hi: self.sigma,
            });
        }
        Ok(c.clamp(0.0, self.sigma))
    }

    /// Equilibrium value of the Riemann invariant `Z = F / (1 - rho + F)`.
    /// At `rho = 1` the quotient is `0/0`; full congestion maps to 1.
    pub fn z_of_rho(&self, rho: f64) -> f64 {
        let f = self.flux(rho);
        let denom = 1.0 - rho + f;
        if denom <= 0.0 {
            1.0
        } else {
            f / denom
        }
    }

    /// Flux an incoming road can deliver.
    pub fn demand(&self, rho_b: f64) -> f64 {
        if rho_b <= self.rho_star {
            self.flux(rho_b)
        } else {
            self.sigma
        }
    }

    /// Flux an outgoing road can absorb.
    pub fn supply(&self, rho_b: f64) -> f64 {
        if rho_b <= self.rho_star {
            self.sigma
        } else {
            self.flux(rho_b)
        }
    }

    /// Tests `-F/(1-rho) <= F' <= 1` on a uniform grid. The endpoint
    /// `rho = 1` uses the limit `F/(1-rho) -> -F'(1)`.
    pub fn check_subcharacteristic(&self, samples: usize) -> bool {
        let samples = samples.max(2);
        (0..samples).all(|k| {
            let rho = k as f64 / (samples - 1) as f64;
            let slope = self.derivative(rho);
            let ratio = if rho < 1.0 {
                self.flux(rho) / (1.0 - rho)
            } else {
                -self.derivative(1.0)
            };
            -ratio <= slope + CHECK_TOL && slope <= 1.0 + CHECK_TOL
        })
    }
}

/// Root of `f(x) = target` for `f` non-decreasing on `[lo, hi]`.
/// Returns the nearer endpoint when the target is not bracketed.
pub(crate) fn bisect_increasing(f: impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    if f(a) >= target {
        return a;
    }
    if f(b) <= target {
        return b;
    }
    for _ in 0..ROOT_MAX_ITER {
        if b - a <= ROOT_TOL {
            break;
        }
        let mid = 0.5 * (a + b);
        if f(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lwr_values() {
        let d = FundamentalDiagram::lwr();
        assert_eq!(d.flux(0.5), 0.25);
        assert_eq!(d.flux(0.0), 0.0);
        assert_eq!(d.flux(1.0), 0.0);
        assert!(close(d.flux(0.1), 0.09, 1e-15));
        assert!(d.validate(VALIDATION_SAMPLES).is_ok());
    }

    #[test]
    fn tau_examples() {
        let d = FundamentalDiagram::lwr();
        assert!(close(d.tau(0.3), 0.7, 1e-10));
        assert!(close(d.tau(0.8), 0.2, 1e-10));
        assert_eq!(d.tau(0.5), 0.5);
    }

    #[test]
    fn rho_pm_examples() {
        let d = FundamentalDiagram::lwr();
        assert!(close(d.rho_minus(0.2175).unwrap(), 0.31972, 1e-4));
        assert_eq!(d.rho_minus(0.25).unwrap(), 0.5);
        assert_eq!(d.rho_plus(0.25).unwrap(), 0.5);
        assert!(close(d.rho_plus(0.125).unwrap(), 0.853553, 1e-6));
        assert_eq!(d.rho_minus(0.0).unwrap(), 0.0);
        assert_eq!(d.rho_plus(0.0).unwrap(), 1.0);
    }

    #[test]
    fn rho_pm_out_of_range() {
        let d = FundamentalDiagram::lwr();
        assert!(matches!(d.rho_minus(0.3), Err(Error::OutOfRange { .. })));
        assert!(matches!(d.rho_plus(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn z_examples() {
        let d = FundamentalDiagram::lwr();
        assert!(close(d.z_of_rho(0.5), 1.0 / 3.0, 1e-15));
        assert_eq!(d.z_of_rho(0.0), 0.0);
        assert!(close(d.z_of_rho(0.1), 0.09 / 0.99, 1e-15));
        assert_eq!(d.z_of_rho(1.0), 1.0);
    }

    #[test]
    fn supply_demand_examples() {
        let d = FundamentalDiagram::lwr();
        assert!(close(d.demand(0.1), 0.09, 1e-15));
        assert_eq!(d.supply(0.2), 0.25);
        assert_eq!(d.demand(0.5), d.sigma());
        assert_eq!(d.supply(0.5), d.sigma());
        assert!(close(d.supply(0.8), 0.16, 1e-15));
    }

    #[test]
    fn subcharacteristic() {
        assert!(FundamentalDiagram::lwr().check_subcharacteristic(1001));
        let zero = FundamentalDiagram::from_parts_unchecked(|_| 0.0, |_| 0.0, 0.5, 0.0);
        assert!(zero.check_subcharacteristic(11));
        let steep = FundamentalDiagram::from_parts_unchecked(|r| r, |_| 2.0, 0.5, 0.25);
        assert!(!steep.check_subcharacteristic(11));
    }

    #[test]
    fn rejects_invalid_diagrams() {
        // Convex piece.
        assert!(FundamentalDiagram::new(
            |r| r * r * (1.0 - r),
            |r| 2.0 * r - 3.0 * r * r,
            2.0 / 3.0,
            4.0 / 27.0
        )
        .is_err());
        // Flux above the diagonal.
        assert!(
            FundamentalDiagram::new(|r| 2.0 * r * (1.0 - r), |r| 2.0 - 4.0 * r, 0.5, 0.5).is_err()
        );
        // Wrong sigma.
        assert!(FundamentalDiagram::new(|r| r * (1.0 - r), |r| 1.0 - 2.0 * r, 0.5, 0.2).is_err());
    }

    #[test]
    fn accepts_skewed_concave_diagram() {
        // F(rho) = rho (1 - rho^2) / 2 is strictly concave with F' <= 1/2.
        let rs = 1.0 / 3f64.sqrt();
        let d = FundamentalDiagram::new(
            |r| 0.5 * r * (1.0 - r * r),
            |r| 0.5 * (1.0 - 3.0 * r * r),
            rs,
            0.5 * rs * (1.0 - rs * rs),
        )
        .unwrap();
        assert!(close(d.flux(d.tau(0.3)), d.flux(0.3), 1e-12));
        assert!(d.check_subcharacteristic(501));
        assert!(close(d.delta_bar(), 1.0 / 2.0, 1e-15));
    }

    #[test]
    fn lwr_delta_bar() {
        assert_eq!(FundamentalDiagram::lwr().delta_bar(), 0.5);
    }
}
