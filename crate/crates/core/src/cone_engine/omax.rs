use num_complex::Complex64;

use super::cone::GeneratorCone;
use super::lp::lp_query;
use super::membership::{
    validate_blocks, validate_separator, Certificate, Diagnostics, MembershipResult, Query, Verdict,
};
use crate::error::{Error, Result};
use crate::json::{wrap, JMat};
use crate::numerics::dykstra::{
    check_separator, dykstra_psd_feasibility, AffineSystem, FeasOptions, FeasStatus,
};
use crate::numerics::eig::herm_eig;
use crate::numerics::linalg::{c, identity, outer, CMat};
use crate::numerics::nnls::nnls_solve;
use crate::numerics::sdp::{solve_shift, SdpOptions, SdpStatus, ShiftProblem};
use crate::opsys_core::HermLevel;

#[derive(Debug, Clone, Copy)]
pub struct OmaxOptions {
    pub sdp: SdpOptions,
    /// Fallback splitting solver, used when the interior-point run is undecided.
    pub feas: FeasOptions,
    /// Try compressions to level 1 before running the SDP feasibility solver.
    pub screen: bool,
}

impl Default for OmaxOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            feas: FeasOptions {
                max_iter: 5000,
                ..FeasOptions::default()
            },
            screen: true,
        }
    }
}

/// Unit vectors tried by the level-1 screen: basis vectors, normalized
/// sums and differences of pairs (real and imaginary), and the
/// eigenvectors of the trace-weighted combination of the blocks.
fn screen_vectors(q: &Query) -> Vec<Vec<Complex64>> {
    let n = q.level();
    let zero = c(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for i in 0..n {
        let mut v = vec![zero; n];
        v[i] = c(1.0, 0.0);
        out.push(v);
    }
    for i in 0..n {
        for j in i + 1..n {
            for w in [c(h, 0.0), c(-h, 0.0), c(0.0, h), c(0.0, -h)] {
                let mut v = vec![zero; n];
                v[i] = c(h, 0.0);
                v[j] = w;
                out.push(v);
            }
        }
    }
    let x = q.shifted_target();
    let e = &x.space.unit_coeffs;
    let mut m = CMat::zeros(n, n);
    for (k, &w) in e.iter().enumerate() {
        m += x.block(k) * c(w, 0.0);
    }
    if let Ok(eig) = herm_eig(&m) {
        for k in 0..n {
            out.push(eig.eigenvectors.column(k).iter().copied().collect());
        }
    }
    out
}

fn compress_query(q: &Query, alpha: &CMat) -> Result<Query> {
    Ok(Query {
        target: q.target.compress(alpha)?,
        pads: q
            .pads
            .iter()
            .map(|p| p.compress(alpha))
            .collect::<Result<_>>()?,
        eps: q.eps,
    })
}

/// Level-1 screen: a separator for `v* x v` lifts to `Y_k = f_k · v v*`.
fn screen(cone: &GeneratorCone, q: &Query) -> Result<Option<MembershipResult>> {
    for v in screen_vectors(q) {
        let alpha = CMat::from_column_slice(v.len(), 1, &v);
        let cq = compress_query(q, &alpha)?;
        let r = lp_query(cone, &cq)?;
        if let (Verdict::Outside, Certificate::Separator { functional }) =
            (&r.verdict, &r.certificate)
        {
            let vv = outer(&v);
            let lifted: Vec<JMat> = functional.iter().map(|f| JMat(&vv * f.0[(0, 0)])).collect();
            let res = MembershipResult {
                verdict: Verdict::Outside,
                epsilon_used: q.eps,
                certificate: Certificate::Separator { functional: lifted },
                diagnostics: Diagnostics {
                    solver: "omax-screen".into(),
                    ..r.diagnostics
                },
            };
            if validate_omax(cone, q, &res) {
                return Ok(Some(res));
            }
        }
    }
    Ok(None)
}

/// Membership in the maximal matrix ordering over the level-1 cone:
/// is `target + Σ t_i pad_i + eps·(I ⊗ e) = Σ_j Q_j ⊗ g_j` with `Q_j ⪰ 0`?
pub fn omax_query(cone: &GeneratorCone, q: &Query, opts: &OmaxOptions) -> Result<MembershipResult> {
    q.check()?;
    if !q.target.space.same_as(&cone.space) {
        return Err(Error::DimensionMismatch(
            "query and cone live in different spaces".into(),
        ));
    }
    if q.level() == 1 {
        return lp_query(cone, q);
    }
    if opts.screen {
        if let Some(r) = screen(cone, q)? {
            return Ok(r);
        }
    }
    if let Some(r) = interior_point(cone, q, &opts.sdp)? {
        return Ok(r);
    }
    let n = q.level();
    let rhs = q.shifted_target().blocks();
    let pads = q.pads.iter().map(HermLevel::blocks).collect();
    let sys = AffineSystem::new(n, cone.gmat().clone(), rhs, pads)?;
    let res = dykstra_psd_feasibility(&sys, &opts.feas)?;
    let diagnostics = Diagnostics {
        solver: "dykstra".into(),
        residual: res.residual,
        iterations: res.iterations,
    };
    let out = match res.status {
        FeasStatus::Feasible {
            blocks,
            pad_weights,
        } => MembershipResult {
            verdict: Verdict::Inside,
            epsilon_used: q.eps,
            certificate: Certificate::OmaxBlocks {
                blocks: wrap(&blocks),
                pad_weights,
            },
            diagnostics,
        },
        FeasStatus::InfeasibleEvidence { separator, .. }
            if check_separator(&sys, &separator, opts.feas.sep_tol).is_some() =>
        {
            MembershipResult {
                verdict: Verdict::Outside,
                epsilon_used: q.eps,
                certificate: Certificate::Separator {
                    functional: wrap(&separator),
                },
                diagnostics,
            }
        }
        _ => return Ok(MembershipResult::unknown(q.eps, diagnostics)),
    };
    if validate_omax(cone, q, &out) {
        Ok(out)
    } else {
        Ok(MembershipResult::unknown(q.eps, out.diagnostics))
    }
}

/// Nonnegative weights `u` with `e = Σ_j u_j g_j`.
fn unit_weights(cone: &GeneratorCone) -> Result<Option<Vec<f64>>> {
    let e = nalgebra::DVector::from_column_slice(&cone.space.unit_coeffs);
    let r = nnls_solve(cone.gmat(), &e, 1e-12)?;
    Ok((r.residual <= 1e-10).then_some(r.coeffs.iter().copied().collect()))
}

/// Minimal unit shift via the interior-point solver. A primal point with
/// shift `s ≤ eps` becomes an `OmaxBlocks` certificate after adding
/// `(eps − s)·u_j·I` to each block.
fn interior_point(
    cone: &GeneratorCone,
    q: &Query,
    opts: &SdpOptions,
) -> Result<Option<MembershipResult>> {
    let Some(u) = unit_weights(cone)? else {
        return Ok(None);
    };
    let n = q.level();
    let space = &cone.space;
    let prob = ShiftProblem {
        n,
        gmat: cone.gmat().clone(),
        target: q.target.blocks(),
        unit: space
            .unit_coeffs
            .iter()
            .map(|&w| identity(n) * c(w, 0.0))
            .collect(),
        pads: q.pads.iter().map(HermLevel::blocks).collect(),
    };
    let res = solve_shift(&prob, Some(q.eps), opts)?;
    let diagnostics = Diagnostics {
        solver: "interior-point".into(),
        residual: res.primal_residual,
        iterations: res.iterations,
    };
    let out = match res.status {
        SdpStatus::Member {
            blocks,
            pad_weights,
            shift,
        } => {
            let blocks: Vec<CMat> = blocks
                .iter()
                .zip(&u)
                .map(|(b, &w)| b + identity(n) * c((q.eps - shift) * w, 0.0))
                .collect();
            MembershipResult {
                verdict: Verdict::Inside,
                epsilon_used: q.eps,
                certificate: Certificate::OmaxBlocks {
                    blocks: wrap(&blocks),
                    pad_weights,
                },
                diagnostics,
            }
        }
        SdpStatus::Separated { functional, .. } => MembershipResult {
            verdict: Verdict::Outside,
            epsilon_used: q.eps,
            certificate: Certificate::Separator {
                functional: wrap(&functional),
            },
            diagnostics,
        },
        SdpStatus::Undecided => return Ok(None),
    };
    Ok(validate_omax(cone, q, &out).then_some(out))
}

/// Minus the minimal unit shift of `x` (clamped below at −1) with the dual
/// functional as a supergradient; `None` when the solver does not converge.
pub fn omax_margin(
    cone: &GeneratorCone,
    x: &HermLevel,
    opts: &OmaxOptions,
) -> Result<Option<(f64, Option<HermLevel>)>> {
    if !x.space.same_as(&cone.space) {
        return Err(Error::DimensionMismatch("element and cone live in different spaces".into()));
    }
    let n = x.n;
    let prob = ShiftProblem {
        n,
        gmat: cone.gmat().clone(),
        target: x.blocks(),
        unit: cone.space.unit_coeffs.iter().map(|&w| identity(n) * c(w, 0.0)).collect(),
        pads: vec![],
    };
    let r = solve_shift(&prob, None, &opts.sdp)?;
    if !(r.upper.is_finite() && r.upper - r.lower <= 1e-6) {
        return Ok(None);
    }
    let grad = match r.dual {
        Some(f) => Some(HermLevel::new(&cone.space, &f)?),
        None => None,
    };
    Ok(Some((-r.upper.max(-1.0), grad)))
}

pub fn validate_omax(cone: &GeneratorCone, q: &Query, r: &MembershipResult) -> bool {
    let gens = cone.generator_levels();
    match (&r.verdict, &r.certificate) {
        (Verdict::Unknown, _) => true,
        (
            Verdict::Inside,
            Certificate::OmaxBlocks {
                blocks,
                pad_weights,
            },
        ) => validate_blocks(&gens, q, &crate::json::unwrap(blocks), pad_weights),
        (
            Verdict::Inside,
            Certificate::ConeCoeffs {
                coeffs,
                pad_weights,
            },
        ) if q.level() == 1 => {
            let blocks: Vec<CMat> = coeffs
                .iter()
                .map(|&w| CMat::from_element(1, 1, c(w, 0.0)))
                .collect();
            validate_blocks(&gens, q, &blocks, pad_weights)
        }
        (Verdict::Outside, Certificate::Separator { functional }) => {
            validate_separator(&gens, q, &crate::json::unwrap(functional))
        }
        _ => false,
    }
}

pub fn omax_member(
    cone: &GeneratorCone,
    x: &HermLevel,
    eps: f64,
    opts: &OmaxOptions,
) -> Result<MembershipResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    omax_query(cone, &Query::plain(x.clone(), eps), opts)
}
