use crate::cone_engine::probe::DEFAULT_EPS_SCHEDULE;
use crate::cone_engine::{Certificate, ConeOracle, Diagnostics, MembershipResult, Query, Route, Verdict};
use crate::error::{Error, Result};
use crate::numerics::linalg::identity;
use crate::opsys_core::{HermLevel, VElement};

/// Checks `0 ≤ p ≤ e` at level 1 at the smallest scheduled ε.
pub fn check_effect(oracle: &dyn ConeOracle, p: &VElement) -> Result<()> {
    let eps = DEFAULT_EPS_SCHEDULE[DEFAULT_EPS_SCHEDULE.len() - 1];
    let perp = VElement::unit(&p.space).sub(p);
    for (what, y) in [("p", p), ("e − p", &perp)] {
        let r = oracle.member(&y.to_level(), eps)?;
        if !r.is_inside() {
            return Err(Error::Precondition(format!(
                "{what} is not certified positive by {} ({:?})",
                oracle.name(),
                r.verdict
            )));
        }
    }
    Ok(())
}

/// `diag(Iₙ ⊗ a, Iₙ ⊗ b)`.
fn diag_pair(n: usize, a: &VElement, b: &VElement) -> Result<HermLevel> {
    let id = identity(n);
    HermLevel::kron_scalar(&id, a).direct_sum(&HermLevel::kron_scalar(&id, b))
}

/// Level-2n query `[[y, y], [y, y]] + δ·diag(Iₙ⊗p, Iₙ⊗p^⊥) + t·diag(Iₙ⊗p^⊥, Iₙ⊗p)`
/// with `t` as an extra pad after the doubled original pads.
fn doubled(y: &HermLevel, pads: &[HermLevel], p: &VElement, delta: f64) -> Result<Query> {
    if !p.space.same_as(&y.space) {
        return Err(Error::DimensionMismatch("projection lives in a different space".into()));
    }
    let n = y.n;
    let perp = VElement::unit(&p.space).sub(p);
    let target = y.doubled().axpy(delta, &diag_pair(n, p, &perp)?)?;
    let mut dpads: Vec<HermLevel> = pads.iter().map(HermLevel::doubled).collect();
    dpads.push(diag_pair(n, &perp, p)?);
    Ok(Query {
        target,
        pads: dpads,
        eps: 0.0,
    })
}

/// Reduces "`target + Σ t_i pad_i + ε(I⊗e)` ∈ `C_n(p)`" to one query at
/// level `2n`, splitting ε evenly between the unit shift and the projection
/// slack.
pub fn doubled_query(q: &Query, p: &VElement) -> Result<Query> {
    q.check()?;
    let half = 0.5 * q.eps;
    let y = q
        .target
        .axpy(half, &HermLevel::unit(&q.target.space, q.level()))?;
    doubled(&y, &q.pads, p, half)
}

fn cnp_query(x: &HermLevel, p: &VElement, eps: f64) -> Result<Query> {
    doubled(x, &[], p, eps)
}

/// Membership of `x` in `C_n(p)` at slack ε through a level-2n oracle.
pub fn cnp_member(
    oracle_2n: &dyn ConeOracle,
    x: &HermLevel,
    p: &VElement,
    eps: f64,
    t_max: f64,
) -> Result<MembershipResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    check_effect(oracle_2n, p)?;
    let dq = cnp_query(x, p, eps)?;
    let inner = oracle_2n.query(&dq)?;
    Ok(wrap_doubled(inner, eps, t_max))
}

/// Wraps a doubled-query answer; Inside answers needing `t > t_max` and
/// answers the oracle cannot re-check become Unknown.
pub(crate) fn wrap_doubled(inner: MembershipResult, eps: f64, t_max: f64) -> MembershipResult {
    let diagnostics = Diagnostics {
        solver: format!("doubled/{}", inner.diagnostics.solver),
        ..inner.diagnostics.clone()
    };
    let verdict = match inner.verdict {
        Verdict::Inside => match inner.pad_weights().and_then(|w| w.last().copied()) {
            Some(t) if t <= t_max => Verdict::Inside,
            _ => return MembershipResult::unknown(eps, diagnostics),
        },
        v => v,
    };
    if verdict == Verdict::Unknown {
        return MembershipResult::unknown(eps, diagnostics);
    }
    MembershipResult {
        verdict,
        epsilon_used: eps,
        certificate: Certificate::Reduced {
            route: Route::Doubled,
            inner: Box::new(inner),
        },
        diagnostics,
    }
}

/// Re-checks a [`cnp_member`] answer against the same oracle.
pub fn validate_cnp(
    oracle_2n: &dyn ConeOracle,
    x: &HermLevel,
    p: &VElement,
    eps: f64,
    t_max: f64,
    r: &MembershipResult,
) -> bool {
    if r.verdict == Verdict::Unknown {
        return true;
    }
    let Certificate::Reduced {
        route: Route::Doubled,
        inner,
    } = &r.certificate
    else {
        return false;
    };
    let Ok(dq) = cnp_query(x, p, eps) else {
        return false;
    };
    if inner.verdict != r.verdict || !oracle_2n.validate(&dq, inner) {
        return false;
    }
    r.verdict != Verdict::Inside
        || inner
            .pad_weights()
            .and_then(|w| w.last().copied())
            .is_some_and(|t| t <= t_max)
}
