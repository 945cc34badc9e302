//! Godunov scheme for `rho_t + F(rho)_x = 0` with supply-demand fluxes.

use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};

/// One cell of the scalar model.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ScalarCell {
    pub rho: f64,
}

impl ScalarCell {
    pub fn new(rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::OutOfRange {
                what: "rho",
                value: rho,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { rho })
    }
}

/// `min(demand(rho_l), supply(rho_r))`.
#[inline]
pub fn scalar_godunov_flux(diagram: &FundamentalDiagram, rho_l: f64, rho_r: f64) -> f64 {
    diagram.demand(rho_l).min(diagram.supply(rho_r))
}

/// Largest admissible step `cfl * dx / max |F'|`.
pub fn stable_dt(diagram: &FundamentalDiagram, dx: f64, cfl: f64) -> f64 {
    cfl * dx / diagram.max_wave_speed().max(f64::MIN_POSITIVE)
}

/// Conservative update with the two boundary fluxes injected directly.
pub fn scalar_step(
    diagram: &FundamentalDiagram,
    cells: &[ScalarCell],
    left_flux: f64,
    right_flux: f64,
    dt: f64,
    dx: f64,
) -> Result<Vec<ScalarCell>> {
    let limit = dx / diagram.max_wave_speed();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let n = cells.len();
    let ratio = dt / dx;
    let mut out = Vec::with_capacity(n);
    let mut flux_in = left_flux;
    for i in 0..n {
        let flux_out = if i + 1 < n {
            scalar_godunov_flux(diagram, cells[i].rho, cells[i + 1].rho)
        } else {
            right_flux
        };
        let rho = cells[i].rho - ratio * (flux_out - flux_in);
        // Only round-off can push a monotone update out of [0, 1].
        out.push(ScalarCell {
            rho: rho.clamp(0.0, 1.0),
        });
        flux_in = flux_out;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_examples() {
        let d = FundamentalDiagram::lwr();
        assert!((scalar_godunov_flux(&d, 0.1, 0.1) - 0.09).abs() < 1e-15);
        assert_eq!(scalar_godunov_flux(&d, 0.5, 0.5), 0.25);
        assert_eq!(scalar_godunov_flux(&d, 0.7, 0.2), 0.25);
        assert_eq!(scalar_godunov_flux(&d, 1.0, 0.0), 0.25);
    }

    #[test]
    fn uniform_field_is_steady() {
        let d = FundamentalDiagram::lwr();
        let cells = vec![ScalarCell { rho: 0.3 }; 8];
        let f = d.flux(0.3);
        let out = scalar_step(&d, &cells, f, f, 5e-3, 1e-2).unwrap();
        assert!(out.iter().all(|c| (c.rho - 0.3).abs() < 1e-15));
    }

    #[test]
    fn riemann_mass_identity() {
        let d = FundamentalDiagram::lwr();
        let dx = 0.01;
        let mut cells = vec![ScalarCell { rho: 0.1 }; 10];
        cells.extend(vec![ScalarCell { rho: 0.9 }; 10]);
        let (fin, fout) = (d.flux(0.1), d.flux(0.9));
        let dt = stable_dt(&d, dx, 0.9);
        let out = scalar_step(&d, &cells, fin, fout, dt, dx).unwrap();
        let before: f64 = cells.iter().map(|c| c.rho).sum();
        let after: f64 = out.iter().map(|c| c.rho).sum();
        assert!((after - before - dt / dx * (fin - fout)).abs() < 1e-14);
    }

    #[test]
    fn dam_break_opens_at_sonic_flux() {
        let d = FundamentalDiagram::lwr();
        let dx = 0.01;
        let mut cells = vec![ScalarCell { rho: 1.0 }; 5];
        cells.extend(vec![ScalarCell { rho: 0.0 }; 5]);
        let dt = 0.5 * dx;
        let out = scalar_step(&d, &cells, 0.0, 0.0, dt, dx).unwrap();
        // Only the two cells adjacent to the jump change, by sigma * dt/dx.
        assert!((out[4].rho - (1.0 - 0.25 * 0.5)).abs() < 1e-15);
        assert!((out[5].rho - 0.25 * 0.5).abs() < 1e-15);
        assert_eq!(out[3].rho, 1.0);
        assert_eq!(out[6].rho, 0.0);
    }

    #[test]
    fn cfl_violation() {
        let d = FundamentalDiagram::lwr();
        let cells = vec![ScalarCell { rho: 0.5 }; 3];
        assert!(matches!(
            scalar_step(&d, &cells, 0.25, 0.25, 0.02, 0.01),
            Err(Error::Cfl { .. })
        ));
    }
}
