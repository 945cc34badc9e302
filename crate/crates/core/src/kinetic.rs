//! Two-velocity kinetic relaxation model in conservative form.
//!
//! The conserved variables are the density `rho` and the Riemann invariant
//! `Z = q / (1 - rho + q)`. Both characteristic fields are linearly
//! degenerate, so the interface Riemann problem is solved exactly by two
//! contact waves: `Z` is carried from the left at speed 1 and the stopped
//! density `w = rho - q` is carried from the right at speed `-Z/(1-Z)`.

use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};

/// Round-off excursions from the invariant region below this are clamped.
pub const CLAMP_TOL: f64 = 1e-13;
/// Guard used for the first eigenvalue when `Z = 1`.
pub const LAMBDA_GUARD: f64 = 1e-12;
/// Default CFL number for the adaptive step.
pub const DEFAULT_CFL: f64 = 0.45;

/// One cell of the kinetic model.
///
/// Stored as `(rho, Z)` with `0 <= Z <= rho <= 1`, which is the image of the
/// simplex `0 <= q <= rho <= 1`. On the edge `rho = 1` every `Z < 1`
/// describes the fully stopped state `f0 = 1`; the point `Z = 1, rho = 1`
/// is read back as fully stopped as well.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellState {
    rho: f64,
    z: f64,
}

impl CellState {
    pub const VACUUM: CellState = CellState { rho: 0.0, z: 0.0 };

    /// From density and flux. Requires `0 <= q <= rho <= 1`.
    pub fn from_rho_q(rho: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) || !(0.0..=rho).contains(&q) {
            return Err(Error::Domain { rho, q });
        }
        let denom = 1.0 - rho + q;
        let z = if denom > 0.0 { q / denom } else { 1.0 };
        Ok(Self { rho, z })
    }

    /// From kinetic densities of stopped and driving cars.
    pub fn from_f(f0: f64, f1: f64) -> Result<Self> {
        if f0 < 0.0 || f1 < 0.0 {
            return Err(Error::Domain {
                rho: f0 + f1,
                q: f1,
            });
        }
        Self::from_rho_q(f0 + f1, f1)
    }

    /// From the two Riemann invariants, both in `[0, 1]`.
    pub fn from_w_z(w: f64, z: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&w) && (0.0..=1.0).contains(&z));
        let q = z * (1.0 - w);
        Self {
            rho: (w + q).min(1.0),
            z,
        }
    }

    /// From conserved variables; `Z <= rho` is required.
    pub fn from_rho_z(rho: f64, z: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) || !(0.0..=rho).contains(&z) {
            return Err(Error::Domain { rho, q: f64::NAN });
        }
        Ok(Self { rho, z })
    }

    /// Equilibrium state `q = F(rho)`. At `rho = 1` the ratio `Z` takes
    /// its limit along the diagram, `-F'(1) / (1 - F'(1))`.
    pub fn equilibrium(diagram: &FundamentalDiagram, rho: f64) -> Self {
        let rho = rho.clamp(0.0, 1.0);
        let z = if rho < 1.0 {
            diagram.z_of_rho(rho)
        } else {
            let r = diagram.jam_ratio_limit();
            r / (1.0 + r)
        };
        Self { rho, z: z.min(rho) }
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Flux `q = f1 = Z (1 - rho) / (1 - Z)`.
    #[inline]
    pub fn q(&self) -> f64 {
        if self.z >= 1.0 {
            0.0
        } else {
            (self.z * (1.0 - self.rho) / (1.0 - self.z)).min(self.rho)
        }
    }

    /// Stopped cars `w = f0 = rho - q`.
    #[inline]
    pub fn w(&self) -> f64 {
        (self.rho - self.q()).max(0.0)
    }

    #[inline]
    pub fn f0(&self) -> f64 {
        self.w()
    }

    #[inline]
    pub fn f1(&self) -> f64 {
        self.q()
    }

    /// Characteristic speeds `(-q/(1-rho), 1)`. The first one equals
    /// `-Z/(1-Z)`, which stays finite on the jam edge except at `Z = 1`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let lambda1 = if self.z >= 1.0 {
            -1.0 / LAMBDA_GUARD
        } else {
            -self.z / (1.0 - self.z)
        };
        (lambda1, 1.0)
    }
}

/// Numerical flux of `(rho, Z)` through one interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceFlux {
    pub mass_flux: f64,
    pub z_flux: f64,
}

impl InterfaceFlux {
    pub const ZERO: InterfaceFlux = InterfaceFlux {
        mass_flux: 0.0,
        z_flux: 0.0,
    };

    /// Flux through an interface whose middle state is `(w, Z)`.
    #[inline]
    pub fn from_middle(w: f64, z: f64) -> Self {
        Self {
            mass_flux: z * (1.0 - w),
            z_flux: z,
        }
    }
}

/// Middle state of the Riemann problem sampled at the interface.
pub fn interface_state(left: &CellState, right: &CellState) -> CellState {
    CellState::from_w_z(right.w(), left.z())
}

/// Godunov flux of the conservative kinetic system.
#[inline]
pub fn godunov_flux(left: &CellState, right: &CellState) -> InterfaceFlux {
    InterfaceFlux::from_middle(right.w(), left.z())
}

/// Exact solution of the relaxation ODE at frozen density.
///
/// With `r = Z/(1-Z) = q/(1-rho)` the source reads
/// `dr/dt = -(r - F(rho)/(1-rho))/eps`, which has a finite limit on the jam
/// edge `rho = 1`. For `rho < 1` this is the same as
/// `q <- F + (q - F) exp(-dt/eps)`.
pub fn relax_exact(
    state: &CellState,
    dt: f64,
    epsilon: f64,
    diagram: &FundamentalDiagram,
) -> CellState {
    debug_assert!(epsilon > 0.0 && dt >= 0.0);
    if dt == 0.0 || state.z >= 1.0 {
        return *state;
    }
    let rho = state.rho;
    let decay = (-dt / epsilon).exp();
    let z = if rho < 1.0 {
        let f = diagram.flux(rho);
        let q = f + (state.q() - f) * decay;
        let denom = 1.0 - rho + q;
        if denom > 0.0 {
            q / denom
        } else {
            1.0
        }
    } else {
        let r_eq = diagram.jam_ratio_limit();
        let r = state.z / (1.0 - state.z);
        let r_new = r_eq + (r - r_eq) * decay;
        r_new / (1.0 + r_new)
    };
    CellState {
        rho,
        z: z.clamp(0.0, rho),
    }
}

/// Largest `|lambda_1|` over the cells, at least the free-flow speed 1.
pub fn max_wave_speed(cells: &[CellState]) -> f64 {
    cells.iter().map(|c| -c.eigenvalues().0).fold(1.0, f64::max)
}

/// CFL-limited time step `cfl * dx / max(1, max |lambda_1|)`.
pub fn stable_dt(cells: &[CellState], dx: f64, cfl: f64) -> f64 {
    cfl * dx / max_wave_speed(cells)
}

/// Conservative update with prescribed boundary fluxes.
pub fn transport_step_with_fluxes(
    cells: &[CellState],
    left_flux: InterfaceFlux,
    right_flux: InterfaceFlux,
    dt: f64,
    dx: f64,
) -> Result<Vec<CellState>> {
    let limit = dx / max_wave_speed(cells);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let n = cells.len();
    let ratio = dt / dx;
    let mut out = Vec::with_capacity(n);
    let mut flux_in = left_flux;
    for i in 0..n {
        let flux_out = if i + 1 < n {
            godunov_flux(&cells[i], &cells[i + 1])
        } else {
            right_flux
        };
        let rho = cells[i].rho - ratio * (flux_out.mass_flux - flux_in.mass_flux);
        let z = cells[i].z - ratio * (flux_out.z_flux - flux_in.z_flux);
        out.push(clamp_cell(i, rho, z)?);
        flux_in = flux_out;
    }
    Ok(out)
}

/// Conservative update with ghost states on both ends.
pub fn transport_step(
    cells: &[CellState],
    left_ghost: &CellState,
    right_ghost: &CellState,
    dt: f64,
    dx: f64,
) -> Result<Vec<CellState>> {
    let (Some(first), Some(last)) = (cells.first(), cells.last()) else {
        return Ok(Vec::new());
    };
    transport_step_with_fluxes(
        cells,
        godunov_flux(left_ghost, first),
        godunov_flux(last, right_ghost),
        dt,
        dx,
    )
}

fn clamp_cell(cell: usize, rho: f64, z: f64) -> Result<CellState> {
    let excess = (-rho).max(rho - 1.0).max(-z).max(z - rho.min(1.0));
    if excess > CLAMP_TOL || rho.is_nan() || z.is_nan() {
        return Err(Error::InvariantViolation {
            cell,
            rho,
            z,
            excess,
        });
    }
    let rho = rho.clamp(0.0, 1.0);
    Ok(CellState {
        rho,
        z: z.clamp(0.0, rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn from_rho_q_examples() {
        let s = CellState::from_rho_q(0.5, 0.25).unwrap();
        assert!(close(s.f0(), 0.25, 1e-15) && close(s.f1(), 0.25, 1e-15));
        assert!(close(s.z(), 1.0 / 3.0, 1e-15));
        let v = CellState::from_rho_q(0.0, 0.0).unwrap();
        assert_eq!((v.f0(), v.f1()), (0.0, 0.0));
        let jam = CellState::from_rho_q(1.0, 0.0).unwrap();
        assert_eq!((jam.f0(), jam.f1(), jam.z()), (1.0, 0.0, 1.0));
        assert!(CellState::from_rho_q(0.4, 0.5).is_err());
        assert!(CellState::from_rho_q(1.2, 0.1).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        let s = CellState::from_rho_q(0.5, 0.25).unwrap();
        assert!(close(s.eigenvalues().0, -0.5, 1e-15));
        assert_eq!(
            CellState::from_rho_q(0.3, 0.0).unwrap().eigenvalues(),
            (0.0, 1.0)
        );
        let s = CellState::from_rho_q(0.75, 0.25).unwrap();
        assert!(close(s.eigenvalues().0, -1.0, 1e-15));
        let jam = CellState::from_rho_q(1.0, 0.0).unwrap();
        assert_eq!(jam.eigenvalues().0, -1.0 / LAMBDA_GUARD);
    }

    #[test]
    fn interface_state_examples() {
        let s = CellState::from_rho_q(0.5, 0.25).unwrap();
        let m = interface_state(&s, &s);
        assert!(close(m.rho(), 0.5, 1e-15) && close(m.q(), 0.25, 1e-15));

        let left = CellState::from_w_z(0.2, 0.5);
        let right = CellState::from_w_z(0.5, 0.1);
        let m = interface_state(&left, &right);
        assert!(close(m.q(), 0.25, 1e-15) && close(m.rho(), 0.75, 1e-15));

        let m = interface_state(&CellState::VACUUM, &right);
        assert!(close(m.q(), 0.0, 1e-15) && close(m.rho(), right.w(), 1e-15));
    }

    #[test]
    fn godunov_flux_examples() {
        let d = FundamentalDiagram::lwr();
        let eq = CellState::equilibrium(&d, 0.5);
        let f = godunov_flux(&eq, &eq);
        assert!(close(f.mass_flux, 0.25, 1e-15) && close(f.z_flux, 1.0 / 3.0, 1e-15));
        let f = godunov_flux(&CellState::VACUUM, &eq);
        assert_eq!(f, InterfaceFlux::ZERO);
        let f = godunov_flux(
            &CellState::from_w_z(0.1, 0.5),
            &CellState::from_w_z(0.5, 0.3),
        );
        assert!(close(f.mass_flux, 0.25, 1e-15) && f.z_flux == 0.5);
    }

    #[test]
    fn relax_examples() {
        let d = FundamentalDiagram::lwr();
        let eq = CellState::equilibrium(&d, 0.3);
        let r = relax_exact(&eq, 0.1, 1e-3, &d);
        assert!(close(r.q(), eq.q(), 1e-15));
        let s = CellState::from_rho_q(0.5, 0.1).unwrap();
        let r = relax_exact(&s, 1e-3, 1e-3, &d);
        assert!(close(r.q(), 0.25 - 0.15 * (-1f64).exp(), 1e-12));
        assert!(close(r.q(), 0.19482, 1e-5));
        assert_eq!(relax_exact(&s, 0.0, 1e-3, &d), s);
    }

    #[test]
    fn relax_on_jam_edge_tends_to_limit() {
        let d = FundamentalDiagram::lwr();
        let jam = CellState::from_rho_z(1.0, 0.2).unwrap();
        let r = relax_exact(&jam, 1.0, 1e-3, &d);
        // r_eq = -F'(1) = 1, so Z -> 1/2.
        assert!(close(r.z(), 0.5, 1e-14));
        assert_eq!(r.q(), 0.0);
    }

    #[test]
    fn uniform_state_is_steady() {
        let d = FundamentalDiagram::lwr();
        let s = CellState::equilibrium(&d, 0.37);
        let cells = vec![s; 10];
        let out = transport_step(&cells, &s, &s, 4e-4, 1e-3).unwrap();
        for c in out {
            assert!(close(c.rho(), s.rho(), 1e-15) && close(c.z(), s.z(), 1e-15));
        }
    }

    #[test]
    fn single_cell_flux_balance() {
        let s = CellState::from_rho_q(0.5, 0.25).unwrap();
        let flux = InterfaceFlux {
            mass_flux: 0.25,
            z_flux: s.z(),
        };
        let out = transport_step_with_fluxes(&[s], flux, flux, 1e-3, 1e-2).unwrap();
        assert_eq!(out[0].rho(), 0.5);
    }

    #[test]
    fn riemann_step_conserves_mass() {
        let d = FundamentalDiagram::lwr();
        let dx = 1e-2;
        let mut cells = vec![CellState::equilibrium(&d, 0.1); 20];
        cells.extend(vec![CellState::equilibrium(&d, 0.9); 20]);
        let dt = stable_dt(&cells, dx, DEFAULT_CFL);
        let (lg, rg) = (cells[0], cells[39]);
        let out = transport_step(&cells, &lg, &rg, dt, dx).unwrap();
        let inflow = godunov_flux(&lg, &cells[0]).mass_flux;
        let outflow = godunov_flux(&cells[39], &rg).mass_flux;
        let before: f64 = cells.iter().map(|c| c.rho()).sum();
        let after: f64 = out.iter().map(|c| c.rho()).sum();
        assert!(close(after - before, dt / dx * (inflow - outflow), 1e-14));
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let d = FundamentalDiagram::lwr();
        let cells = vec![CellState::equilibrium(&d, 0.4); 5];
        let err = transport_step(&cells, &cells[0], &cells[4], 0.02, 1e-2).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }
}
