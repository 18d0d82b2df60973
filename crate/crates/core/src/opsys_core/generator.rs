use serde::{Deserialize, Serialize};

use super::element::VElement;
use super::space::{SpaceKind, SpaceRef};
use crate::error::{Error, Result};

/// A named generator element of the initial cone. Indices are 1-based.
///
/// `BasisProj(k)` and `BasisProjPerp(k)` refer to the space's named
/// projections: `p_k` for SIC, and for MUB the label `p_i^x` with
/// `k = (x−1)·d + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSpec {
    BasisProj(usize),
    BasisProjPerp(usize),
    /// `(p_i − λe) + (1/n) p_j + t p_j^⊥`.
    XPlus {
        i: usize,
        j: usize,
        n: usize,
        t: f64,
    },
    /// `−(p_i − λe) + (1/n) p_j + t p_j^⊥`.
    XMinus {
        i: usize,
        j: usize,
        n: usize,
        t: f64,
    },
    /// `(p_i^x − μe) + (1/n) p_j^y + t (p_j^y)^⊥`.
    YPlus {
        x: usize,
        i: usize,
        y: usize,
        j: usize,
        n: usize,
        t: f64,
    },
    /// `−(p_i^x − μe) + (1/n) p_j^y + t (p_j^y)^⊥`.
    YMinus {
        x: usize,
        i: usize,
        y: usize,
        j: usize,
        n: usize,
        t: f64,
    },
}

fn check_nt(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "generator index n must be at least 1".into(),
        ));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

/// `s(a − c·e) + (1/n) b + t (e − b)`.
fn relation_generator(
    space: &SpaceRef,
    s: f64,
    a: &VElement,
    b: &VElement,
    n: usize,
    t: f64,
) -> VElement {
    let e = VElement::unit(space);
    a.axpy(-space.constant, &e)
        .scale(s)
        .axpy(1.0 / n as f64, b)
        .axpy(t, &e.sub(b))
}

pub fn make_generator(space: &SpaceRef, spec: &GeneratorSpec) -> Result<VElement> {
    match *spec {
        GeneratorSpec::BasisProj(k) => VElement::projection(space, k),
        GeneratorSpec::BasisProjPerp(k) => VElement::projection_perp(space, k),
        GeneratorSpec::XPlus { i, j, n, t } | GeneratorSpec::XMinus { i, j, n, t } => {
            if space.kind != SpaceKind::Sic {
                return Err(Error::InvalidGenerator(
                    "x± generators live in SIC spaces".into(),
                ));
            }
            if i == j {
                return Err(Error::InvalidGenerator(format!(
                    "x± needs i ≠ j, got i = j = {i}"
                )));
            }
            check_nt(n, t)?;
            let s = if matches!(spec, GeneratorSpec::XPlus { .. }) {
                1.0
            } else {
                -1.0
            };
            let a = VElement::projection(space, i)?;
            let b = VElement::projection(space, j)?;
            Ok(relation_generator(space, s, &a, &b, n, t))
        }
        GeneratorSpec::YPlus { x, i, y, j, n, t } | GeneratorSpec::YMinus { x, i, y, j, n, t } => {
            if space.kind != SpaceKind::Mub {
                return Err(Error::InvalidGenerator(
                    "y± generators live in MUB spaces".into(),
                ));
            }
            if x == y {
                return Err(Error::InvalidGenerator(format!(
                    "y± needs x ≠ y, got x = y = {x}"
                )));
            }
            check_nt(n, t)?;
            let s = if matches!(spec, GeneratorSpec::YPlus { .. }) {
                1.0
            } else {
                -1.0
            };
            let a = VElement::projection(space, space.mub_index(x, i)?)?;
            let b = VElement::projection(space, space.mub_index(y, j)?)?;
            Ok(relation_generator(space, s, &a, &b, n, t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opsys_core::space::{build_mub_space, build_sic_space};

    #[test]
    fn xplus_expansion_d2() {
        let s = build_sic_space(2).unwrap();
        let g = make_generator(
            &s,
            &GeneratorSpec::XPlus {
                i: 1,
                j: 2,
                n: 1,
                t: 9.0,
            },
        )
        .unwrap();
        // independent expansion: p_j^⊥ = e − p_j with e = (1/2, 1/2, 1/2, 1/2)
        let lam = 1.0 / 3.0;
        let (d, t, n) = (2.0, 9.0, 1.0);
        let expect = [
            1.0 - lam / d + t / d,
            1.0 / n - lam / d - t * (1.0 - 1.0 / d),
            -lam / d + t / d,
            -lam / d + t / d,
        ];
        let exact = [16.0 / 3.0, -11.0 / 3.0, 13.0 / 3.0, 13.0 / 3.0];
        for k in 0..4 {
            assert!((g.coeffs[k] - expect[k]).abs() < 1e-13);
            assert!((g.coeffs[k] - exact[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn basis_perp_d2() {
        let s = build_sic_space(2).unwrap();
        let g = make_generator(&s, &GeneratorSpec::BasisProjPerp(1)).unwrap();
        assert_eq!(g.coeffs, vec![-0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn equal_indices_rejected() {
        let s = build_sic_space(2).unwrap();
        let r = make_generator(
            &s,
            &GeneratorSpec::XPlus {
                i: 1,
                j: 1,
                n: 1,
                t: 1.0,
            },
        );
        assert!(matches!(r, Err(Error::InvalidGenerator(_))));
        let m = build_mub_space(2).unwrap();
        let r = make_generator(
            &m,
            &GeneratorSpec::YPlus {
                x: 2,
                i: 1,
                y: 2,
                j: 2,
                n: 1,
                t: 1.0,
            },
        );
        assert!(matches!(r, Err(Error::InvalidGenerator(_))));
    }

    #[test]
    fn nonpositive_t_rejected() {
        let s = build_sic_space(2).unwrap();
        let r = make_generator(
            &s,
            &GeneratorSpec::XMinus {
                i: 1,
                j: 2,
                n: 1,
                t: 0.0,
            },
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn plus_minus_sum_cancels_relation_part() {
        for d in 2..=4 {
            let s = build_sic_space(d).unwrap();
            for (i, j, n, t) in [(1, 2, 1, 9.0), (2, 1, 3, 4.5), (d * d, 1, 7, 100.0)] {
                let p = make_generator(&s, &GeneratorSpec::XPlus { i, j, n, t }).unwrap();
                let m = make_generator(&s, &GeneratorSpec::XMinus { i, j, n, t }).unwrap();
                let pj = VElement::projection(&s, j).unwrap();
                let perp = VElement::projection_perp(&s, j).unwrap();
                let expect = pj.scale(2.0 / n as f64).axpy(2.0 * t, &perp);
                for (a, b) in p.add(&m).coeffs.iter().zip(&expect.coeffs) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + t));
                }
            }
        }
    }

    #[test]
    fn mub_generator_uses_labels() {
        let s = build_mub_space(3).unwrap();
        let g = make_generator(
            &s,
            &GeneratorSpec::YPlus {
                x: 1,
                i: 3,
                y: 2,
                j: 1,
                n: 2,
                t: 5.0,
            },
        )
        .unwrap();
        let a = s.mub_label(1, 3).unwrap();
        let b = s.mub_label(2, 1).unwrap();
        for k in 0..s.dim {
            let e = s.unit_coeffs[k];
            let expect = (a[k] - e / 3.0) + 0.5 * b[k] + 5.0 * (e - b[k]);
            assert!((g.coeffs[k] - expect).abs() < 1e-13);
        }
    }
}
