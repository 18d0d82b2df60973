use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::JMat;
use crate::numerics::dykstra::{check_separator, AffineSystem};
use crate::numerics::eig::min_eigenvalue;
use crate::numerics::linalg::{c, frob, CMat};
use crate::opsys_core::{HermLevel, SpaceRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Inside,
    Outside,
    Unknown,
}

/// Does some choice of `t_i ≥ 0` put `target + Σ t_i pad_i + eps·(I ⊗ e)`
/// in the cone?
#[derive(Debug, Clone)]
pub struct Query {
    pub target: HermLevel,
    pub pads: Vec<HermLevel>,
    pub eps: f64,
}

impl Query {
    pub fn plain(target: HermLevel, eps: f64) -> Self {
        Self {
            target,
            pads: Vec::new(),
            eps,
        }
    }

    pub fn level(&self) -> usize {
        self.target.n
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be nonnegative, got {}",
                self.eps
            )));
        }
        for p in &self.pads {
            if p.n != self.target.n || !p.space.same_as(&self.target.space) {
                return Err(Error::DimensionMismatch(
                    "pad does not match the target level".into(),
                ));
            }
        }
        Ok(())
    }

    /// `target + eps·(I ⊗ e)`.
    pub fn shifted_target(&self) -> HermLevel {
        let unit = HermLevel::unit(&self.target.space, self.target.n);
        self.target
            .axpy(self.eps, &unit)
            .expect("unit matches target")
    }

    /// `target + Σ t_i pad_i + eps·(I ⊗ e)`.
    pub fn realized(&self, weights: &[f64]) -> HermLevel {
        let mut x = self.shifted_target();
        for (p, &w) in self.pads.iter().zip(weights) {
            x = x.axpy(w, p).expect("pads match target");
        }
        x
    }
}

/// How a stage oracle reduced a query to its predecessor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Route {
    /// Same query against the previous stage.
    Nested,
    /// Projection step: doubled query at twice the level.
    Doubled,
    /// Compression by `alpha` to the previous stage's level-`d` cone.
    Compressed { alpha: JMat },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    None,
    /// Nonnegative generator weights (level 1).
    ConeCoeffs {
        coeffs: Vec<f64>,
        pad_weights: Vec<f64>,
    },
    /// One PSD matrix per generator (level n).
    OmaxBlocks {
        blocks: Vec<JMat>,
        pad_weights: Vec<f64>,
    },
    /// Functional `f(x) = Σ_k Re tr(Y_k A_k)` in dual coordinates.
    Separator {
        functional: Vec<JMat>,
    },
    /// Concrete model: the image is PSD after adding the pads with these weights.
    ConcretePsd {
        pad_weights: Vec<f64>,
    },
    /// Concrete model: `F ⪰ 0` with `⟨F, π(·)⟩` separating.
    ConcreteSeparator {
        functional: JMat,
    },
    /// Certificate of the reduced query at the previous stage.
    Reduced {
        route: Route,
        inner: Box<MembershipResult>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: String,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub verdict: Verdict,
    pub epsilon_used: f64,
    pub certificate: Certificate,
    pub diagnostics: Diagnostics,
}

impl MembershipResult {
    pub fn unknown(eps: f64, diagnostics: Diagnostics) -> Self {
        Self {
            verdict: Verdict::Unknown,
            epsilon_used: eps,
            certificate: Certificate::None,
            diagnostics,
        }
    }

    pub fn is_inside(&self) -> bool {
        self.verdict == Verdict::Inside
    }

    pub fn is_outside(&self) -> bool {
        self.verdict == Verdict::Outside
    }

    /// Pad weights of an Inside certificate. Reduced certificates report the
    /// innermost list, whose leading entries belong to the outer pads.
    pub fn pad_weights(&self) -> Option<&[f64]> {
        match &self.certificate {
            Certificate::ConeCoeffs { pad_weights, .. }
            | Certificate::OmaxBlocks { pad_weights, .. }
            | Certificate::ConcretePsd { pad_weights } => Some(pad_weights),
            Certificate::Reduced { inner, .. } => inner.pad_weights(),
            _ => None,
        }
    }
}

/// A membership oracle for one matrix ordering, answering padded queries at
/// any level it supports, with certificates it can re-check.
pub trait ConeOracle: Send + Sync {
    fn space(&self) -> &SpaceRef;

    fn name(&self) -> String;

    fn query(&self, q: &Query) -> Result<MembershipResult>;

    /// Independent re-check of a result's certificate. Unknown results are
    /// vacuously valid.
    fn validate(&self, q: &Query, r: &MembershipResult) -> bool;

    /// Minus the smallest `s` with `x + s·(I ⊗ e)` in the cone, if the oracle
    /// can compute it. Nonnegative exactly on members of the closure.
    fn margin(&self, _x: &HermLevel) -> Option<f64> {
        None
    }

    /// `margin` with a supergradient `g`: `margin(x') ≤ margin(x) + ⟨g, x' − x⟩`.
    fn margin_supergradient(&self, _x: &HermLevel) -> Option<(f64, HermLevel)> {
        None
    }

    fn member(&self, x: &HermLevel, eps: f64) -> Result<MembershipResult> {
        self.query(&Query::plain(x.clone(), eps))
    }
}

pub const RECOMBINE_TOL: f64 = 1e-7;
pub const SEPARATOR_GEN_TOL: f64 = 1e-9;
pub const SEPARATOR_VALUE_TOL: f64 = 1e-7;

/// Checks `Σ_j Q_j ⊗ g_j − Σ_i t_i pad_i = target + eps·unit` with all
/// `Q_j ⪰ 0` and `t_i ≥ 0`. Level-1 weights are `1×1` blocks.
pub fn validate_blocks(
    gens: &[HermLevel],
    q: &Query,
    blocks: &[CMat],
    pad_weights: &[f64],
) -> bool {
    if blocks.len() != gens.len() || pad_weights.len() != q.pads.len() {
        return false;
    }
    let n = q.level();
    if pad_weights.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return false;
    }
    for b in blocks {
        if b.nrows() != n || b.ncols() != n {
            return false;
        }
        if min_eigenvalue(b) < -1e-9 * (1.0 + frob(b)) {
            return false;
        }
    }
    let b = q.shifted_target();
    let dim = b.dim();
    let mut scale = 1.0f64.max(b.norm());
    let mut err = 0.0;
    for k in 0..dim {
        let mut r = -b.block(k);
        for (g, qb) in gens.iter().zip(blocks) {
            let w = g.block(k)[(0, 0)].re;
            if w != 0.0 {
                r += qb * c(w, 0.0);
            }
        }
        for (p, &t) in q.pads.iter().zip(pad_weights) {
            if t != 0.0 {
                let pk = p.block(k);
                scale = scale.max(t * frob(&pk));
                r -= pk * c(t, 0.0);
            }
        }
        err += frob(&r).powi(2);
    }
    err.sqrt() <= RECOMBINE_TOL * scale
}

/// Checks a dual-coordinate separator against level-1 generators: each
/// `F_j = Σ_k g_jk Y_k` PSD, `f(pad_i) ≤ 0` and `f(target + eps·unit) < 0`,
/// all after normalizing `‖Y‖ = 1`.
pub fn validate_separator(gens: &[HermLevel], q: &Query, functional: &[CMat]) -> bool {
    let n = q.level();
    let dim = q.target.dim();
    if functional.len() != dim || functional.iter().any(|y| y.nrows() != n || y.ncols() != n) {
        return false;
    }
    let gmat = nalgebra::DMatrix::from_fn(dim, gens.len(), |k, j| gens[j].block(k)[(0, 0)].re);
    let rhs = q.shifted_target().blocks();
    let pads = q.pads.iter().map(HermLevel::blocks).collect();
    let Ok(sys) = AffineSystem::new(n, gmat, rhs, pads) else {
        return false;
    };
    check_separator(&sys, functional, SEPARATOR_GEN_TOL).is_some_and(|v| v <= -SEPARATOR_VALUE_TOL)
}
