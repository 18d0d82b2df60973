use nalgebra::{DMatrix, DVector};

use super::cone::GeneratorCone;
use super::membership::{
    validate_blocks, validate_separator, Certificate, Diagnostics, MembershipResult, Query, Verdict,
};
use crate::error::{Error, Result};
use crate::json::JMat;
use crate::numerics::linalg::c;
use crate::numerics::nnls::nnls_solve;
use crate::numerics::CMat;
use crate::opsys_core::VElement;

const INSIDE_TOL: f64 = 1e-9;

fn level1_column(x: &crate::opsys_core::HermLevel) -> Vec<f64> {
    (0..x.dim()).map(|k| x.block(k)[(0, 0)].re).collect()
}

/// Level-1 membership of a padded query by nonnegative least squares.
pub fn lp_query(cone: &GeneratorCone, q: &Query) -> Result<MembershipResult> {
    q.check()?;
    if q.level() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "LP membership needs level 1, got {}",
            q.level()
        )));
    }
    let dim = cone.space.dim;
    let g = cone.len();
    let m = q.pads.len();
    let pad_cols: Vec<Vec<f64>> = q.pads.iter().map(level1_column).collect();
    let a = DMatrix::from_fn(dim, g + m, |k, j| {
        if j < g {
            cone.gmat()[(k, j)]
        } else {
            -pad_cols[j - g][k]
        }
    });
    let b = DVector::from_vec(level1_column(&q.shifted_target()));
    let sol = nnls_solve(&a, &b, 1e-12)?;
    let diagnostics = Diagnostics {
        solver: "nnls".into(),
        residual: sol.residual,
        iterations: sol.iterations,
    };
    let scale = 1.0f64.max(b.norm());
    if sol.residual <= INSIDE_TOL * scale {
        let coeffs = sol.coeffs.iter().take(g).copied().collect();
        let pad_weights = sol.coeffs.iter().skip(g).copied().collect();
        return Ok(MembershipResult {
            verdict: Verdict::Inside,
            epsilon_used: q.eps,
            certificate: Certificate::ConeCoeffs {
                coeffs,
                pad_weights,
            },
            diagnostics,
        });
    }
    let r = &sol.residual_vec;
    let norm = r.norm();
    let functional: Vec<JMat> = r
        .iter()
        .map(|&v| JMat(CMat::from_element(1, 1, c(-v / norm, 0.0))))
        .collect();
    let cert = Certificate::Separator { functional };
    let res = MembershipResult {
        verdict: Verdict::Outside,
        epsilon_used: q.eps,
        certificate: cert,
        diagnostics,
    };
    if validate_lp(cone, q, &res) {
        Ok(res)
    } else {
        Ok(MembershipResult::unknown(q.eps, res.diagnostics))
    }
}

/// Independent check of an LP certificate.
pub fn validate_lp(cone: &GeneratorCone, q: &Query, r: &MembershipResult) -> bool {
    let gens = cone.generator_levels();
    match (&r.verdict, &r.certificate) {
        (Verdict::Unknown, _) => true,
        (
            Verdict::Inside,
            Certificate::ConeCoeffs {
                coeffs,
                pad_weights,
            },
        ) => {
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

/// Is `y + eps·e` a nonnegative combination of the cone's generators?
pub fn lp_member(cone: &GeneratorCone, y: &VElement, eps: f64) -> Result<MembershipResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    lp_query(cone, &Query::plain(y.to_level(), eps))
}
