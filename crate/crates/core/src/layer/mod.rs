//! Stationary boundary layers of the kinetic model and the macroscopic
//! boundary and coupling conditions obtained by matching them with
//! half-Riemann problems of the scalar limit.
//!
//! A layer with constant flux `C` solves
//! `rho' = (1 - rho)(F(rho) - C)/C` at a left boundary and the same with a
//! sign change at a right boundary, in the stretched variable `y >= 0`.

mod boundary;
mod matching;
mod ode;

pub use boundary::{
    classify_fixpoints, classify_half_riemann, left_boundary_condition, right_boundary_condition,
    BoundaryCase, BoundaryCondition, FixpointReport, HalfRiemannClass, RpLabel,
};
pub use matching::{
    enumerate_layer_couplings, match_fair_merge, signature_string, write_match_table,
    CouplingVerdict, JunctionDensity, MatchCase, MatchResult,
};
pub use ode::{integrate_layer, LayerOutcome, LayerProblem, LayerTrajectory, CONVERGENCE_TOL};

use std::fmt;

/// Which end of a road the layer sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Stability of the layer solution: `U` is the constant solution sitting on
/// an unstable fixpoint, `S` a solution attracted by the stable one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    U,
    S,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::U => "U",
            Stability::S => "S",
        })
    }
}

/// Interval of densities with open or closed ends. A single point is the
/// closed interval `[a, a]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    pub fn with_ends(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi && self.lo_closed && self.hi_closed {
            return write!(f, "{{{}}}", self.lo);
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}
