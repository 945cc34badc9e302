//! Matching of coupled junction layers with the half-Riemann problems of
//! the three roads under the fair kinetic merge.
//!
//! Incoming roads 1, 2 see the junction as their right boundary, the
//! outgoing road 3 as its left boundary.

use std::fmt;
use std::io::Write;

use super::Stability::{self, S, U};
use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};

/// Flux sums this close to the capacity count as ties.
const TIE_TOL: f64 = 1e-14;

/// Combination of half-Riemann problems and subcase, in listing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchCase {
    Case1,
    Case2,
    Case3a,
    Case3b,
    Case4a,
    Case4b,
    Case5a,
    Case5b,
    Case6a,
    Case6b,
    Case7a,
    Case7b,
    Case7c,
    Case7d,
    Case8a,
    Case8b,
    Case8c,
    Case8d,
}

impl MatchCase {
    /// The RP1/RP2 combination, e.g. `RP1-2-1`.
    pub fn rp_combination(&self) -> &'static str {
        use MatchCase::*;
        match self {
            Case1 => "RP1-1-1",
            Case2 => "RP1-1-2",
            Case3a | Case3b => "RP1-2-1",
            Case4a | Case4b => "RP2-1-1",
            Case5a | Case5b => "RP1-2-2",
            Case6a | Case6b => "RP2-1-2",
            Case7a | Case7b | Case7c | Case7d => "RP2-2-1",
            Case8a | Case8b | Case8c | Case8d => "RP2-2-2",
        }
    }
}

impl fmt::Display for MatchCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{self:?}");
        f.write_str(&s["Case".len()..])
    }
}

/// Common kinetic density of the three roads at the junction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JunctionDensity {
    Point(f64),
    /// Not determined by the layers; any value in `[lo, hi]` is consistent.
    Interval {
        lo: f64,
        hi: f64,
    },
}

impl JunctionDensity {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            JunctionDensity::Point(x) => (x, x),
            JunctionDensity::Interval { lo, hi } => (lo, hi),
        }
    }

    pub fn point(&self) -> Option<f64> {
        match *self {
            JunctionDensity::Point(x) => Some(x),
            JunctionDensity::Interval { .. } => None,
        }
    }
}

impl fmt::Display for JunctionDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JunctionDensity::Point(x) => write!(f, "{x}"),
            JunctionDensity::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchResult {
    pub fluxes: [f64; 3],
    pub rho_k: [f64; 3],
    pub rho_0: JunctionDensity,
    pub rp_case: MatchCase,
    pub stability_signature: [Stability; 3],
}

pub fn signature_string(sig: &[Stability; 3]) -> String {
    sig.iter().map(|s| s.to_string()).collect()
}

/// Resolves the fair merge for boundary traces `rho_b` through the layer
/// and half-Riemann analysis.
pub fn match_fair_merge(diagram: &FundamentalDiagram, rho_b: [f64; 3]) -> Result<MatchResult> {
    for (i, &r) in rho_b.iter().enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutOfRange {
                what: ["rho_B_1", "rho_B_2", "rho_B_3"][i],
                value: r,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let rs = diagram.rho_star();
    let sigma = diagram.sigma();
    let plus = |c: f64| diagram.rho_plus_unchecked(c);
    let minus = |c: f64| diagram.rho_minus_unchecked(c);
    let [b1, b2, b3] = rho_b;
    let [f1, f2, f3] = rho_b.map(|r| diagram.flux(r));
    let half_s = 0.5 * sigma;

    // Templates shared by several cases.
    let uus = |c3: f64, k3: f64, case| MatchResult {
        fluxes: [0.5 * c3, 0.5 * c3, c3],
        rho_k: [plus(0.5 * c3), plus(0.5 * c3), k3],
        rho_0: JunctionDensity::Point(plus(0.5 * c3)),
        rp_case: case,
        stability_signature: [U, U, S],
    };
    // Road 2 outgoing at its trace, road 1 takes the rest.
    let uss = |c3: f64, k3: f64, case| {
        let c1 = c3 - f2;
        assert!(c1 <= sigma + TIE_TOL, "c1 = {c1} exceeds capacity");
        MatchResult {
            fluxes: [c1, f2, c3],
            rho_k: [plus(c1), b2, k3],
            rho_0: JunctionDensity::Point(plus(c1)),
            rp_case: case,
            stability_signature: [U, S, S],
        }
    };
    let sus = |c3: f64, k3: f64, case| {
        let c2 = c3 - f1;
        assert!(c2 <= sigma + TIE_TOL, "c2 = {c2} exceeds capacity");
        MatchResult {
            fluxes: [f1, c2, c3],
            rho_k: [b1, plus(c2), k3],
            rho_0: JunctionDensity::Point(plus(c2)),
            rp_case: case,
            stability_signature: [S, U, S],
        }
    };
    let ssu = |capacity: f64, case| {
        let c3 = f1 + f2;
        let k3 = minus(c3);
        if (c3 - capacity).abs() <= TIE_TOL {
            MatchResult {
                fluxes: [f1, f2, c3],
                rho_k: [b1, b2, k3],
                rho_0: JunctionDensity::Interval {
                    lo: k3,
                    hi: plus(f1).min(plus(f2)),
                },
                rp_case: case,
                stability_signature: [S, S, S],
            }
        } else {
            MatchResult {
                fluxes: [f1, f2, c3],
                rho_k: [b1, b2, k3],
                rho_0: JunctionDensity::Point(k3),
                rp_case: case,
                stability_signature: [S, S, U],
            }
        }
    };

    use MatchCase::*;
    let result = if b1 >= rs && b2 >= rs && b3 <= rs {
        uus(sigma, rs, Case1)
    } else if b1 >= rs && b2 >= rs && b3 >= rs {
        uus(f3, b3, Case2)
    } else if b1 >= rs && b2 <= rs && b3 <= rs {
        if f2 >= half_s {
            uus(sigma, rs, Case3a)
        } else {
            uss(sigma, rs, Case3b)
        }
    } else if b1 <= rs && b2 >= rs && b3 <= rs {
        if f1 >= half_s {
            uus(sigma, rs, Case4a)
        } else {
            sus(sigma, rs, Case4b)
        }
    } else if b1 >= rs && b2 <= rs && b3 >= rs {
        if f3 <= 2.0 * f2 {
            uus(f3, b3, Case5a)
        } else {
            uss(f3, b3, Case5b)
        }
    } else if b1 <= rs && b2 >= rs && b3 >= rs {
        if f3 <= 2.0 * f1 {
            uus(f3, b3, Case6a)
        } else {
            sus(f3, b3, Case6b)
        }
    } else if b3 <= rs {
        if f1 + f2 <= sigma {
            ssu(sigma, Case7a)
        } else if f1 >= half_s && f2 >= half_s {
            uus(sigma, rs, Case7b)
        } else if f1 >= half_s {
            uss(sigma, rs, Case7c)
        } else {
            sus(sigma, rs, Case7d)
        }
    } else if f3 <= 2.0 * f1 && f3 <= 2.0 * f2 {
        uus(f3, b3, Case8a)
    } else if f3 >= 2.0 * f2 && f1 + f2 >= f3 {
        uss(f3, b3, Case8b)
    } else if f3 >= 2.0 * f1 && f1 + f2 >= f3 {
        sus(f3, b3, Case8c)
    } else {
        ssu(f3, Case8d)
    };
    Ok(result)
}

/// Outcome of coupling three layers of given stability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingVerdict {
    Inadmissible,
    Admissible {
        fluxes: [f64; 3],
        rho_0: JunctionDensity,
    },
}

/// Couples three layers with the prescribed stability pattern under the
/// fair merge. Only the fluxes that the pattern leaves free are read:
/// `C^3` for UUS, `C^2, C^3` for USS, `C^1, C^3` for SUS and `C^1, C^2`
/// for SSU and SSS.
pub fn enumerate_layer_couplings(
    diagram: &FundamentalDiagram,
    signature: [Stability; 3],
    fluxes: [f64; 3],
) -> Result<CouplingVerdict> {
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = diagram.check_flux("C", fluxes[i])?;
    }
    let sigma = diagram.sigma();
    let plus = |x: f64| diagram.rho_plus_unchecked(x);
    let minus = |x: f64| diagram.rho_minus_unchecked(x);
    let verdict = match signature {
        [U, U, U] | [S, U, U] | [U, S, U] => CouplingVerdict::Inadmissible,
        [U, U, S] => CouplingVerdict::Admissible {
            fluxes: [0.5 * c[2], 0.5 * c[2], c[2]],
            rho_0: JunctionDensity::Point(plus(0.5 * c[2])),
        },
        [U, S, S] => {
            if 2.0 * c[1] <= c[2] {
                CouplingVerdict::Admissible {
                    fluxes: [c[2] - c[1], c[1], c[2]],
                    rho_0: JunctionDensity::Point(plus(c[2] - c[1])),
                }
            } else {
                CouplingVerdict::Inadmissible
            }
        }
        [S, U, S] => {
            if 2.0 * c[0] <= c[2] {
                CouplingVerdict::Admissible {
                    fluxes: [c[0], c[2] - c[0], c[2]],
                    rho_0: JunctionDensity::Point(plus(c[2] - c[0])),
                }
            } else {
                CouplingVerdict::Inadmissible
            }
        }
        [S, S, U] => {
            let c3 = c[0] + c[1];
            if c3 <= sigma {
                CouplingVerdict::Admissible {
                    fluxes: [c[0], c[1], c3],
                    rho_0: JunctionDensity::Point(minus(c3)),
                }
            } else {
                CouplingVerdict::Inadmissible
            }
        }
        [S, S, S] => {
            let c3 = c[0] + c[1];
            if c3 <= sigma {
                CouplingVerdict::Admissible {
                    fluxes: [c[0], c[1], c3],
                    rho_0: JunctionDensity::Interval {
                        lo: minus(c3),
                        hi: plus(c[0]).min(plus(c[1])),
                    },
                }
            } else {
                CouplingVerdict::Inadmissible
            }
        }
    };
    Ok(verdict)
}

/// Writes the matching result on a uniform `n^3` grid of boundary traces
/// as comma-separated rows.
pub fn write_match_table(
    diagram: &FundamentalDiagram,
    n: usize,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(
        out,
        "rho_b1,rho_b2,rho_b3,case,signature,c1,c2,c3,rho_k1,rho_k2,rho_k3,rho_0_lo,rho_0_hi"
    )?;
    let n = n.max(2);
    let grid = |k: usize| k as f64 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let b = [grid(i), grid(j), grid(k)];
                let m = match_fair_merge(diagram, b).expect("grid lies in [0,1]");
                let (lo, hi) = m.rho_0.bounds();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    b[0],
                    b[1],
                    b[2],
                    m.rp_case,
                    signature_string(&m.stability_signature),
                    m.fluxes[0],
                    m.fluxes[1],
                    m.fluxes[2],
                    m.rho_k[0],
                    m.rho_k[1],
                    m.rho_k[2],
                    lo,
                    hi
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::macro_fair_merge;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn light_traffic_is_case_7a() {
        let d = FundamentalDiagram::lwr();
        let m = match_fair_merge(&d, [0.1, 0.15, 0.2]).unwrap();
        assert_eq!(m.rp_case, MatchCase::Case7a);
        assert_eq!(m.stability_signature, [S, S, U]);
        assert!(close(m.fluxes[0], 0.09, 1e-15) && close(m.fluxes[1], 0.1275, 1e-15));
        assert!(close(m.rho_k[2], 0.31972, 1e-5));
        assert!(close(m.rho_0.point().unwrap(), 0.3197, 1e-4));
    }

    #[test]
    fn congested_examples() {
        let d = FundamentalDiagram::lwr();
        let m = match_fair_merge(&d, [0.7, 0.6, 0.2]).unwrap();
        assert_eq!(m.rp_case, MatchCase::Case1);
        assert!(close(
            m.rho_0.point().unwrap(),
            0.5 * (1.0 + 0.5f64.sqrt()),
            1e-11
        ));

        let m = match_fair_merge(&d, [0.05, 0.6, 0.2]).unwrap();
        assert_eq!(m.rp_case, MatchCase::Case4b);
        assert_eq!(m.stability_signature, [S, U, S]);
        assert!(close(m.rho_0.point().unwrap(), 0.71794, 1e-4));

        let m = match_fair_merge(&d, [0.2, 0.5, 0.8]).unwrap();
        assert_eq!(m.stability_signature, [U, U, S]);
        assert!(matches!(m.rp_case, MatchCase::Case6a | MatchCase::Case8a));
        assert!(close(m.rho_0.point().unwrap(), 0.91231, 1e-4));
    }

    #[test]
    fn exact_capacity_tie_is_an_interval() {
        let d = FundamentalDiagram::lwr();
        // F(0.5 - sqrt(0.125)) = 0.125 on both roads.
        let b = 0.5 - 0.125f64.sqrt();
        let m = match_fair_merge(&d, [b, b, 0.1]).unwrap();
        assert_eq!(m.rp_case, MatchCase::Case7a);
        assert_eq!(m.stability_signature, [S, S, S]);
        let (lo, hi) = m.rho_0.bounds();
        assert!(close(lo, 0.5, 1e-7) && close(hi, 1.0 - b, 1e-10));
    }

    #[test]
    fn agrees_with_supply_demand_on_coarse_grid() {
        let d = FundamentalDiagram::lwr();
        for i in 0..=10 {
            for j in 0..=10 {
                for k in 0..=10 {
                    let b = [i as f64 / 10.0, j as f64 / 10.0, k as f64 / 10.0];
                    let m = match_fair_merge(&d, b).unwrap();
                    let s = macro_fair_merge(&d, b);
                    for r in 0..3 {
                        assert!(close(m.fluxes[r], s.fluxes[r], 1e-12), "{b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn coupling_enumeration() {
        let d = FundamentalDiagram::lwr();
        for sig in [[U, U, U], [S, U, U], [U, S, U]] {
            assert_eq!(
                enumerate_layer_couplings(&d, sig, [0.1, 0.1, 0.2]).unwrap(),
                CouplingVerdict::Inadmissible
            );
        }
        match enumerate_layer_couplings(&d, [U, U, S], [0.0, 0.0, 0.2]).unwrap() {
            CouplingVerdict::Admissible { fluxes, rho_0 } => {
                assert_eq!(fluxes, [0.1, 0.1, 0.2]);
                assert!(close(
                    rho_0.point().unwrap(),
                    d.rho_plus(0.1).unwrap(),
                    1e-15
                ));
            }
            v => panic!("{v:?}"),
        }
        match enumerate_layer_couplings(&d, [S, S, U], [0.09, 0.1275, 0.0]).unwrap() {
            CouplingVerdict::Admissible { rho_0, .. } => {
                assert!(close(rho_0.point().unwrap(), 0.31972, 1e-5));
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(
            enumerate_layer_couplings(&d, [U, S, S], [0.0, 0.15, 0.2]).unwrap(),
            CouplingVerdict::Inadmissible
        );
        assert_eq!(
            enumerate_layer_couplings(&d, [S, S, U], [0.2, 0.1, 0.0]).unwrap(),
            CouplingVerdict::Inadmissible
        );
    }

    #[test]
    fn match_table_has_header_and_rows() {
        let d = FundamentalDiagram::lwr();
        let mut buf = Vec::new();
        write_match_table(&d, 3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 27);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,7a,SSU"));
    }
}
