use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strictly increasing positive sequence `t_1 < t_2 < …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "params", rename_all = "lowercase")]
pub enum TSequence {
    /// `t_n = t0 + slope·(n−1)`.
    Affine { t0: f64, slope: f64 },
    /// `t_n = t0·ratio^(n−1)`.
    Geometric { t0: f64, ratio: f64 },
    /// Listed values, continued affinely with the last difference.
    Explicit { values: Vec<f64> },
}

impl TSequence {
    pub fn affine(t0: f64, slope: f64) -> Result<Self> {
        let s = TSequence::Affine { t0, slope };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            TSequence::Affine { t0, slope } => {
                if !(t0.is_finite() && *t0 > 0.0) {
                    return bad(format!("t0 must be positive, got {t0}"));
                }
                if !(slope.is_finite() && *slope > 0.0) {
                    return bad(format!(
                        "slope must be positive for an increasing sequence, got {slope}"
                    ));
                }
            }
            TSequence::Geometric { t0, ratio } => {
                if !(t0.is_finite() && *t0 > 0.0) {
                    return bad(format!("t0 must be positive, got {t0}"));
                }
                if !(ratio.is_finite() && *ratio > 1.0) {
                    return bad(format!("ratio must exceed 1, got {ratio}"));
                }
            }
            TSequence::Explicit { values } => {
                if values.len() < 2 {
                    return bad("explicit sequences need at least two values".into());
                }
                if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                    return bad("explicit values must be positive and finite".into());
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("explicit values must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    /// `t_n` for `n ≥ 1`.
    pub fn t(&self, n: usize) -> f64 {
        let n = n.max(1);
        match self {
            TSequence::Affine { t0, slope } => t0 + slope * (n - 1) as f64,
            TSequence::Geometric { t0, ratio } => t0 * ratio.powi((n - 1) as i32),
            TSequence::Explicit { values } => {
                if n <= values.len() {
                    values[n - 1]
                } else {
                    let last = values[values.len() - 1];
                    let step = last - values[values.len() - 2];
                    last + step * (n - values.len()) as f64
                }
            }
        }
    }
}
