use nalgebra::DMatrix;

use super::instance::QuantumInstance;
use crate::cone_engine::membership::SEPARATOR_VALUE_TOL;
use crate::cone_engine::{Certificate, ConeOracle, Diagnostics, MembershipResult, Query, Verdict};
use crate::error::{Error, Result};
use crate::json::JMat;
use crate::numerics::eig::{herm_eig, min_eigenvalue};
use crate::numerics::linalg::{c, frob, identity, inner, kron, CMat};
use crate::numerics::sdp::{solve_shift, SdpOptions, SdpStatus, ShiftProblem};
use crate::opsys_core::{HermLevel, SpaceKind, SpaceRef};

const DECIDE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// The cone `{x : π_n(x) ⪰ 0}` pulled back through a linear map
/// `π: V → M_m` given by the images of the basis.
#[derive(Debug, Clone)]
pub struct ConcreteOracle {
    space: SpaceRef,
    images: Vec<CMat>,
    /// `π(e)^{-1/2}`, so margins are measured in units of the order unit.
    unit_isqrt: CMat,
    label: String,
}

/// Images of the space's basis: SIC `p_i ↦ P_i`; MUB `e ↦ I`, `p_i^x ↦ P_i^x`.
pub fn basis_images(space: &SpaceRef, inst: &QuantumInstance) -> Result<Vec<CMat>> {
    if space.kind != inst.kind || space.d != inst.d {
        return Err(Error::InvalidInput(format!(
            "{} space in dimension {} does not match a {} instance in dimension {}",
            space.kind, space.d, inst.kind, inst.d
        )));
    }
    let d = inst.d;
    Ok(match space.kind {
        SpaceKind::Sic => inst.projections.clone(),
        SpaceKind::Mub => {
            let mut out = vec![identity(d)];
            for x in 0..=d {
                for i in 0..d - 1 {
                    out.push(inst.projections[x * d + i].clone());
                }
            }
            out
        }
    })
}

impl ConcreteOracle {
    pub fn new(space: &SpaceRef, inst: &QuantumInstance) -> Result<Self> {
        let images = basis_images(space, inst)?;
        Self::from_images(space, images, format!("concrete({} d={})", inst.kind, inst.d))
    }

    pub fn from_images(space: &SpaceRef, images: Vec<CMat>, label: String) -> Result<Self> {
        if images.len() != space.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} images for a space of dimension {}",
                images.len(),
                space.dim
            )));
        }
        let m = images[0].nrows();
        if images.iter().any(|a| a.nrows() != m || a.ncols() != m) {
            return Err(Error::DimensionMismatch("images must share one square shape".into()));
        }
        let unit = images
            .iter()
            .zip(&space.unit_coeffs)
            .fold(CMat::zeros(m, m), |acc, (a, &w)| acc + a * c(w, 0.0));
        let eig = herm_eig(&unit)?;
        if eig.eigenvalues.iter().any(|&l| !(l > 1e-9)) {
            return Err(Error::InvalidInput("the image of e is not positive definite".into()));
        }
        let inv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            m,
            eig.eigenvalues.iter().map(|l| c(1.0 / l.sqrt(), 0.0)),
        ));
        let unit_isqrt = &eig.eigenvectors * inv * eig.eigenvectors.adjoint();
        Ok(Self {
            space: space.clone(),
            images,
            unit_isqrt,
            label,
        })
    }

    pub fn images(&self) -> &[CMat] {
        &self.images
    }

    /// `π_n(x) = Σ_k A_k ⊗ π(b_k)`.
    pub fn image(&self, x: &HermLevel) -> CMat {
        let m = self.images[0].nrows();
        let mut out = CMat::zeros(x.n * m, x.n * m);
        for (a, p) in x.blocks().iter().zip(&self.images) {
            out += kron(a, p);
        }
        out
    }

    fn normalized(&self, n: usize, m: &CMat) -> CMat {
        let w = kron(&identity(n), &self.unit_isqrt);
        &w * m * &w
    }
}

fn psd_within(m: &CMat, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol * (1.0 + frob(m))
}

fn columns(v: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(v.nrows(), idx.len(), |i, j| v[(i, idx[j])])
}

/// `a0 + t·a1 ⪰ 0` for a PSD `a1`, by the Schur complement on the kernel of
/// `a1`: Outside when `a0` fails on that kernel, else the least `t`.
fn single_pad(a0: &CMat, a1: &CMat, slack: f64, eps: f64) -> Result<MembershipResult> {
    let e1 = herm_eig(a1)?;
    let top = e1.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let (range, kernel): (Vec<usize>, Vec<usize>) =
        (0..a1.nrows()).partition(|&i| e1.eigenvalues[i] > 1e-9 * top.max(1e-300));
    let diagnostics = Diagnostics {
        solver: "schur".into(),
        residual: 0.0,
        iterations: 1,
    };
    let vr = columns(&e1.eigenvectors, &range);
    let vk = columns(&e1.eigenvectors, &kernel);
    let mut s = vr.adjoint() * a0 * &vr;
    if !kernel.is_empty() {
        let akk = vk.adjoint() * a0 * &vk;
        let ek = herm_eig(&akk)?;
        if ek.eigenvalues[0] < -slack {
            let u = &vk * ek.eigenvectors.column(0);
            return Ok(MembershipResult {
                verdict: Verdict::Outside,
                epsilon_used: eps,
                certificate: Certificate::ConcreteSeparator {
                    functional: JMat(&u * u.adjoint()),
                },
                diagnostics,
            });
        }
        let inv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            kernel.len(),
            ek.eigenvalues.iter().map(|l| c(1.0 / l.max(slack), 0.0)),
        ));
        let akk_inv = &ek.eigenvectors * inv * ek.eigenvectors.adjoint();
        let ark = vr.adjoint() * a0 * &vk;
        s -= &ark * akk_inv * ark.adjoint();
    }
    let t = if range.is_empty() {
        0.0
    } else {
        let dinv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            range.len(),
            range.iter().map(|&i| c(1.0 / e1.eigenvalues[i].sqrt(), 0.0)),
        ));
        let scaled = &dinv * s * &dinv;
        (-min_eigenvalue(&scaled)).max(0.0)
    };
    Ok(MembershipResult {
        verdict: Verdict::Inside,
        epsilon_used: eps,
        certificate: Certificate::ConcretePsd {
            pad_weights: vec![t * (1.0 + 1e-9) + slack],
        },
        diagnostics,
    })
}

impl ConeOracle for ConcreteOracle {
    fn space(&self) -> &SpaceRef {
        &self.space
    }

    fn name(&self) -> String {
        self.label.clone()
    }

    fn query(&self, q: &Query) -> Result<MembershipResult> {
        q.check()?;
        if !q.target.space.same_as(&self.space) {
            return Err(Error::DimensionMismatch("query lives in a different space".into()));
        }
        let a0 = self.image(&q.shifted_target());
        let slack = DECIDE_TOL * (1.0 + frob(&a0));
        if q.pads.is_empty() {
            let eig = herm_eig(&a0)?;
            let lmin = eig.eigenvalues[0];
            let diagnostics = Diagnostics {
                solver: "eigen".into(),
                residual: lmin,
                iterations: 1,
            };
            if lmin >= -slack {
                return Ok(MembershipResult {
                    verdict: Verdict::Inside,
                    epsilon_used: q.eps,
                    certificate: Certificate::ConcretePsd { pad_weights: vec![] },
                    diagnostics,
                });
            }
            let v = eig.eigenvectors.column(0).into_owned();
            let out = MembershipResult {
                verdict: Verdict::Outside,
                epsilon_used: q.eps,
                certificate: Certificate::ConcreteSeparator {
                    functional: JMat(&v * v.adjoint()),
                },
                diagnostics,
            };
            return Ok(if self.validate(q, &out) {
                out
            } else {
                MembershipResult::unknown(q.eps, out.diagnostics)
            });
        }

        if q.pads.len() == 1 {
            let a1 = self.image(&q.pads[0]);
            if psd_within(&a1, 1e-12) {
                let out = single_pad(&a0, &a1, slack, q.eps)?;
                return Ok(if self.validate(q, &out) {
                    out
                } else {
                    MembershipResult::unknown(q.eps, out.diagnostics)
                });
            }
        }
        let n = q.level() * self.images[0].nrows();
        let unit = self.image(&HermLevel::unit(&self.space, q.level()));
        let prob = ShiftProblem {
            n,
            gmat: DMatrix::from_element(1, 1, 1.0),
            target: vec![self.image(&q.target)],
            unit: vec![unit],
            pads: q.pads.iter().map(|p| vec![self.image(p)]).collect(),
        };
        let r = solve_shift(&prob, Some(q.eps + slack), &SdpOptions::default())?;
        let diagnostics = Diagnostics {
            solver: "interior-point".into(),
            residual: r.primal_residual,
            iterations: r.iterations,
        };
        let out = match r.status {
            SdpStatus::Member { pad_weights, .. } => MembershipResult {
                verdict: Verdict::Inside,
                epsilon_used: q.eps,
                certificate: Certificate::ConcretePsd {
                    pad_weights: pad_weights.iter().map(|t| t.max(0.0)).collect(),
                },
                diagnostics,
            },
            SdpStatus::Separated { functional, .. } => MembershipResult {
                verdict: Verdict::Outside,
                epsilon_used: q.eps,
                certificate: Certificate::ConcreteSeparator {
                    functional: JMat(functional[0].clone()),
                },
                diagnostics,
            },
            SdpStatus::Undecided => return Ok(MembershipResult::unknown(q.eps, diagnostics)),
        };
        Ok(if self.validate(q, &out) {
            out
        } else {
            MembershipResult::unknown(q.eps, out.diagnostics)
        })
    }

    fn validate(&self, q: &Query, r: &MembershipResult) -> bool {
        match (&r.verdict, &r.certificate) {
            (Verdict::Unknown, _) => true,
            (Verdict::Inside, Certificate::ConcretePsd { pad_weights }) => {
                pad_weights.len() == q.pads.len()
                    && pad_weights.iter().all(|t| *t >= 0.0 && t.is_finite())
                    && psd_within(&self.image(&q.realized(pad_weights)), PSD_TOL)
            }
            (Verdict::Outside, Certificate::ConcreteSeparator { functional }) => {
                let f = &functional.0;
                let m = q.level() * self.images[0].nrows();
                if f.nrows() != m || f.ncols() != m {
                    return false;
                }
                let norm = frob(f);
                if !(norm > 0.0) || min_eigenvalue(f) < -PSD_TOL * norm {
                    return false;
                }
                let pads_ok = q.pads.iter().all(|p| {
                    let a = self.image(p);
                    inner(f, &a) / norm <= PSD_TOL * (1.0 + frob(&a))
                });
                pads_ok && inner(f, &self.image(&q.shifted_target())) / norm <= -SEPARATOR_VALUE_TOL
            }
            _ => false,
        }
    }

    /// `λ_min` of the unit-normalized image.
    fn margin(&self, x: &HermLevel) -> Option<f64> {
        let m = self.normalized(x.n, &self.image(x));
        Some(min_eigenvalue(&m))
    }

    fn margin_supergradient(&self, x: &HermLevel) -> Option<(f64, HermLevel)> {
        let eig = herm_eig(&self.normalized(x.n, &self.image(x))).ok()?;
        let lmin = eig.eigenvalues[0];
        let w = kron(&identity(x.n), &self.unit_isqrt) * eig.eigenvectors.column(0);
        let d = self.images[0].nrows();
        let wm = CMat::from_fn(x.n, d, |i, a| w[i * d + a]);
        let grads: Vec<CMat> = self
            .images
            .iter()
            .map(|b| &wm * b.map(|z| z.conj()) * wm.adjoint())
            .collect();
        Some((lmin, HermLevel::new(&self.space, &grads).ok()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::herm_coords;
    use crate::opsys_core::{build_mub_space, build_sic_space, VElement};
    use crate::quantum_instances::{mub_generate, sic_search};
    use crate::rng::Rng64;

    fn sic2() -> (SpaceRef, ConcreteOracle) {
        let s = build_sic_space(2).unwrap();
        let inst = sic_search(2, 20, 2_000, 0).unwrap();
        let o = ConcreteOracle::new(&s, &inst).unwrap();
        (s, o)
    }

    fn coords(x: &HermLevel) -> Vec<f64> {
        let mut v = Vec::new();
        for b in x.blocks() {
            herm_coords(&b, &mut v);
        }
        v
    }

    #[test]
    fn unit_maps_to_identity() {
        let (s, o) = sic2();
        let img = o.image(&HermLevel::unit(&s, 2));
        assert!(frob(&(img - identity(4))) < 1e-6);
        let m = build_mub_space(3).unwrap();
        let om = ConcreteOracle::new(&m, &mub_generate(3).unwrap()).unwrap();
        let p = VElement::projection(&m, 6).unwrap().to_level();
        let img = om.image(&p);
        assert!((frob(&(&img * &img - &img))) < 1e-12);
    }

    #[test]
    fn projections_inside_and_negatives_outside() {
        let (s, o) = sic2();
        let p = VElement::projection(&s, 1).unwrap().to_level();
        assert!(o.member(&p, 0.0).unwrap().is_inside());
        let r = o.member(&p.scale(-1.0), 1e-3).unwrap();
        assert!(r.is_outside());
        assert!(o.validate(&Query::plain(p.scale(-1.0), 1e-3), &r));
    }

    #[test]
    fn pads_are_found() {
        let (s, o) = sic2();
        let p1 = VElement::projection(&s, 1).unwrap();
        let perp = VElement::projection_perp(&s, 1).unwrap();
        let q = Query {
            target: p1.scale(-1.0).to_level(),
            pads: vec![perp.to_level()],
            eps: 0.0,
        };
        assert!(o.query(&q).unwrap().is_outside());
        let p2 = VElement::projection(&s, 2).unwrap();
        let lambda = s.constant;
        let x = p2.axpy(-lambda, &VElement::unit(&s)).axpy(0.01, &p1);
        let q = Query {
            target: x.to_level(),
            pads: vec![perp.to_level()],
            eps: 0.0,
        };
        let r = o.query(&q).unwrap();
        assert!(r.is_inside(), "{r:?}");
        assert!(o.validate(&q, &r));
    }

    #[test]
    fn supergradient_bounds_margin() {
        let (s, o) = sic2();
        let mut rng = Rng64::new(5);
        for _ in 0..20 {
            let blocks: Vec<CMat> = (0..4).map(|_| rng.hermitian(2)).collect();
            let x = HermLevel::new(&s, &blocks).unwrap();
            let blocks: Vec<CMat> = (0..4).map(|_| rng.hermitian(2)).collect();
            let y = HermLevel::new(&s, &blocks).unwrap();
            let (m, g) = o.margin_supergradient(&x).unwrap();
            let lin: f64 = coords(&g)
                .iter()
                .zip(coords(&y.sub(&x).unwrap()))
                .map(|(a, b)| a * b)
                .sum();
            assert!(o.margin(&y).unwrap() <= m + lin + 1e-9);
            let shifted = x.axpy(-m, &HermLevel::unit(&s, 2)).unwrap();
            assert!(o.margin(&shifted).unwrap().abs() < 1e-6);
        }
    }
}
