use serde::Serialize;

use crate::error::{Error, Result};

/// Lower bounds on `t_n` that make all generator pairs of the initial SIC
/// cone have nonnegative inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub d: usize,
    pub lambda: f64,
    pub beta: f64,
    pub alpha_c: f64,
    pub gamma: f64,
    /// Needed for `⟨p_k, x*⟩ ≥ 0`.
    pub bound1: f64,
    /// Needed for `⟨p_k^⊥, x*⟩ ≥ 0`.
    pub bound2: f64,
    /// Needed for `⟨x*, x*⟩ ≥ 0`.
    pub bound3: f64,
    pub t_star: f64,
}

pub fn t_thresholds(d: usize) -> Result<Thresholds> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "d must be at least 2, got {d}"
        )));
    }
    let df = d as f64;
    let lambda = 1.0 / (df + 1.0);
    let beta = ((lambda * lambda * df - 2.0 * lambda + 2.0) / df).sqrt();
    let alpha_c = (df - 2.0 + lambda) / df;
    let gamma = (df - 1.0).sqrt() * beta / df.sqrt();
    let bound1 = df.sqrt() * beta / (1.0 - lambda);
    let bound2 = (df * df - df).sqrt() * beta / (df - 2.0 + lambda);
    let bound3 = (2.0 * gamma + (4.0 * gamma * gamma + 4.0 * alpha_c * beta * beta).sqrt())
        / (2.0 * alpha_c);
    let t_star = bound1.max(bound2).max(bound3);
    Ok(Thresholds {
        d,
        lambda,
        beta,
        alpha_c,
        gamma,
        bound1,
        bound2,
        bound3,
        t_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d2_values() {
        let t = t_thresholds(2).unwrap();
        assert!((t.beta - 7f64.sqrt() / 3.0).abs() < 1e-12);
        assert!((t.alpha_c - 1.0 / 6.0).abs() < 1e-12);
        assert!((t.gamma - 0.623610).abs() < 1e-6);
        assert!((t.t_star - 8.0622).abs() < 1e-3);
        assert_eq!(t.t_star, t.bound3);
    }

    #[test]
    fn identities_hold() {
        for d in 2..=6 {
            let t = t_thresholds(d).unwrap();
            let df = d as f64;
            let l = t.lambda;
            assert!((t.beta * t.beta - (l * l * df - 2.0 * l + 2.0) / df).abs() < 1e-14);
            assert!(t.bound3 >= t.gamma / t.alpha_c);
            assert!(t.t_star > 0.0);
            assert!(t.t_star >= t.bound1 && t.t_star >= t.bound2 && t.t_star >= t.bound3);
        }
    }

    #[test]
    fn d1_rejected() {
        assert!(t_thresholds(1).is_err());
    }
}
