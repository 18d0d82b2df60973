use serde::{Deserialize, Serialize};

use super::cnp::check_effect;
use crate::cone_engine::{ConeOracle, MembershipResult, Query, Verdict};
use crate::error::{Error, Result};
use crate::opsys_core::VElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Holds {
    Yes,
    No,
    Unknown,
}

/// One `(ε, sign)` query: is `s(x − τe) + εp + t p^⊥` Inside for some `t`?
#[derive(Debug, Clone, Serialize)]
pub struct RelationStep {
    pub eps: f64,
    pub sign: i8,
    pub verdict: Verdict,
    pub t: Option<f64>,
    pub result: MembershipResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationVerdict {
    pub holds: Holds,
    pub tau: f64,
    pub results: Vec<RelationStep>,
    /// `(ε, t)` for every Inside step.
    pub witnesses: Vec<(f64, f64)>,
}

/// The query behind one relation step, with `t` as a pad.
pub fn relation_query(p: &VElement, x: &VElement, tau: f64, eps: f64, sign: f64) -> Query {
    let e = VElement::unit(&p.space);
    let target = x.axpy(-tau, &e).scale(sign).axpy(eps, p);
    Query {
        target: target.to_level(),
        pads: vec![e.sub(p).to_level()],
        eps: 0.0,
    }
}

/// Decides `p(x − τe)p = 0` abstractly over the ε schedule: Yes when both
/// signs are witnessed at every ε, No when some step is Outside.
pub fn relation_check(
    oracle_1: &dyn ConeOracle,
    p: &VElement,
    x: &VElement,
    tau: f64,
    schedule: &[f64],
    t_max: f64,
) -> Result<RelationVerdict> {
    if !p.space.same_as(&x.space) || !p.space.same_as(oracle_1.space()) {
        return Err(Error::DimensionMismatch("relation elements live in different spaces".into()));
    }
    if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("the ε schedule must be nonempty and positive".into()));
    }
    check_effect(oracle_1, p)?;
    let mut results = Vec::new();
    let mut witnesses = Vec::new();
    for &eps in schedule {
        for sign in [1i8, -1] {
            let q = relation_query(p, x, tau, eps, sign as f64);
            let r = oracle_1.query(&q)?;
            let t = r.pad_weights().and_then(|w| w.first().copied());
            let verdict = match r.verdict {
                Verdict::Inside if t.is_some_and(|t| t <= t_max) => Verdict::Inside,
                Verdict::Inside => Verdict::Unknown,
                v => v,
            };
            if verdict == Verdict::Inside {
                witnesses.push((eps, t.unwrap_or(0.0)));
            }
            results.push(RelationStep {
                eps,
                sign,
                verdict,
                t,
                result: r,
            });
        }
    }
    let holds = if results.iter().any(|s| s.verdict == Verdict::Outside) {
        Holds::No
    } else if results.iter().all(|s| s.verdict == Verdict::Inside) {
        Holds::Yes
    } else {
        Holds::Unknown
    };
    Ok(RelationVerdict {
        holds,
        tau,
        results,
        witnesses,
    })
}
