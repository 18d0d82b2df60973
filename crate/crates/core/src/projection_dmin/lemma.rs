use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::eig::min_eigenvalue;
use crate::numerics::linalg::{c, frob, identity, is_hermitian, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "result")]
pub enum LemmaVerdict {
    Witness { t: f64 },
    Refuted,
}

const SMALLEST_T_EXP: i32 = -20;

/// Smallest power of two `t ≤ t_max` with `T + εP + t P^⊥ ⪰ 0` (to 1e−10).
pub fn lemma_compression_witness(p: &CMat, t: &CMat, eps: f64, t_max: f64) -> Result<LemmaVerdict> {
    let n = p.nrows();
    if p.ncols() != n || t.nrows() != n || t.ncols() != n {
        return Err(Error::InvalidInput("P and T must be square of equal size".into()));
    }
    if frob(&(p * p - p)) > 1e-10 || !is_hermitian(p, 1e-10) {
        return Err(Error::InvalidInput("P is not an orthogonal projection".into()));
    }
    if !is_hermitian(t, 1e-10) {
        return Err(Error::InvalidInput("T is not Hermitian".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let perp = identity(n) - p;
    let base = t + p * c(eps, 0.0);
    let mut k = SMALLEST_T_EXP;
    loop {
        let tk = 2f64.powi(k);
        if tk > t_max {
            return Ok(LemmaVerdict::Refuted);
        }
        if min_eigenvalue(&(&base + &perp * c(tk, 0.0))) >= -1e-10 {
            return Ok(LemmaVerdict::Witness { t: tk });
        }
        k += 1;
    }
}
