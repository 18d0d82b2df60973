use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::cone_engine::{Certificate, ConeOracle, MembershipResult, Query, Route, Verdict};
use crate::error::Result;
use crate::json::JMat;
use crate::numerics::linalg::{frob, CMat};
use crate::opsys_core::{HermLevel, SpaceRef, VElement};
use crate::projection_dmin::cnp::wrap_doubled;
use crate::projection_dmin::dmin::axis_compressions;
use crate::projection_dmin::{compressed_query, doubled_query, T_MAX};
use crate::rng::Rng64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step")]
pub enum StepKind {
    /// Projection step onto the named projection `p_j` (1-based label).
    Projection { j: usize },
    DMin,
}

/// Step `k` builds stage `k+1`: even `k = 2m` projects onto label
/// `(m mod L) + 1` for `L` named projections, odd `k` d-minimalizes.
pub fn step_schedule(k: usize, space: &SpaceRef) -> StepKind {
    if k % 2 == 1 {
        StepKind::DMin
    } else {
        StepKind::Projection {
            j: (k / 2) % space.num_projections() + 1,
        }
    }
}

/// Memo of answered queries keyed by the exact bit patterns of the query.
#[derive(Debug, Default)]
pub struct QueryCache {
    map: Mutex<HashMap<Vec<u64>, MembershipResult>>,
}

fn push_level(key: &mut Vec<u64>, x: &HermLevel) {
    for b in x.blocks() {
        for j in 0..b.ncols() {
            for i in 0..=j {
                key.push(b[(i, j)].re.to_bits());
                key.push(b[(i, j)].im.to_bits());
            }
        }
    }
}

fn cache_key(q: &Query) -> Vec<u64> {
    let mut key = vec![q.level() as u64, q.eps.to_bits(), q.pads.len() as u64];
    push_level(&mut key, &q.target);
    for p in &q.pads {
        push_level(&mut key, p);
    }
    key
}

impl QueryCache {
    pub fn get_or_insert(&self, q: &Query, f: impl FnOnce() -> Result<MembershipResult>) -> Result<MembershipResult> {
        let key = cache_key(q);
        if let Some(r) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(r.clone());
        }
        let r = f()?;
        self.map.lock().expect("cache lock").insert(key, r.clone());
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn nested(inner: MembershipResult, eps: f64) -> MembershipResult {
    MembershipResult {
        verdict: inner.verdict,
        epsilon_used: eps,
        diagnostics: inner.diagnostics.clone(),
        certificate: Certificate::Reduced {
            route: Route::Nested,
            inner: Box::new(inner),
        },
    }
}

/// Wraps any oracle with a query cache.
pub struct CachedOracle {
    inner: Arc<dyn ConeOracle>,
    cache: QueryCache,
}

impl CachedOracle {
    pub fn new(inner: Arc<dyn ConeOracle>) -> Self {
        Self {
            inner,
            cache: QueryCache::default(),
        }
    }
}

impl ConeOracle for CachedOracle {
    fn space(&self) -> &SpaceRef {
        self.inner.space()
    }

    fn name(&self) -> String {
        self.inner.name()
    }

    fn query(&self, q: &Query) -> Result<MembershipResult> {
        self.cache.get_or_insert(q, || self.inner.query(q))
    }

    fn validate(&self, q: &Query, r: &MembershipResult) -> bool {
        self.inner.validate(q, r)
    }

    fn margin(&self, x: &HermLevel) -> Option<f64> {
        self.inner.margin(x)
    }

    fn margin_supergradient(&self, x: &HermLevel) -> Option<(f64, HermLevel)> {
        self.inner.margin_supergradient(x)
    }
}

/// `D^{(k+1)} = D^{(k)}(p)`: nested membership first, then the doubled
/// query at twice the level while that stays within `2d`.
pub struct ProjectionStage {
    pub index: usize,
    pub label: usize,
    prev: Arc<dyn ConeOracle>,
    p: VElement,
    cache: QueryCache,
}

impl ProjectionStage {
    pub fn new(index: usize, prev: Arc<dyn ConeOracle>, label: usize) -> Result<Self> {
        let p = VElement::projection(prev.space(), label)?;
        crate::projection_dmin::check_effect(prev.as_ref(), &p)?;
        Ok(Self {
            index,
            label,
            prev,
            p,
            cache: QueryCache::default(),
        })
    }

    fn doubles(&self, level: usize) -> bool {
        level <= self.p.space.d
    }

    fn answer(&self, q: &Query) -> Result<MembershipResult> {
        let first = self.prev.query(q)?;
        if first.is_inside() || !self.doubles(q.level()) {
            return Ok(if first.is_inside() {
                nested(first, q.eps)
            } else {
                MembershipResult::unknown(q.eps, first.diagnostics)
            });
        }
        let dq = doubled_query(q, &self.p)?;
        let inner = self.prev.query(&dq)?;
        Ok(wrap_doubled(inner, q.eps, T_MAX))
    }
}

impl ConeOracle for ProjectionStage {
    fn space(&self) -> &SpaceRef {
        self.prev.space()
    }

    fn name(&self) -> String {
        format!("stage {} = projection(p{}) over {}", self.index, self.label, self.prev.name())
    }

    fn query(&self, q: &Query) -> Result<MembershipResult> {
        q.check()?;
        self.cache.get_or_insert(q, || self.answer(q))
    }

    fn validate(&self, q: &Query, r: &MembershipResult) -> bool {
        if r.verdict == Verdict::Unknown {
            return true;
        }
        let Certificate::Reduced { route, inner } = &r.certificate else {
            return false;
        };
        if inner.verdict != r.verdict {
            return false;
        }
        match route {
            Route::Nested => r.verdict == Verdict::Inside && self.prev.validate(q, inner),
            Route::Doubled => {
                let Ok(dq) = doubled_query(q, &self.p) else {
                    return false;
                };
                self.doubles(q.level())
                    && self.prev.validate(&dq, inner)
                    && (r.verdict != Verdict::Inside
                        || inner
                            .pad_weights()
                            .and_then(|w| w.get(q.pads.len()).copied())
                            .is_some_and(|t| t <= T_MAX))
            }
            Route::Compressed { .. } => false,
        }
    }
}

/// `D^{(k+1)} = (D^{(k)})^{d-min}`: unchanged at levels `≤ d`; above `d`,
/// Inside by nesting and Outside through a compression to level `d`.
pub struct DMinStage {
    pub index: usize,
    prev: Arc<dyn ConeOracle>,
    random_compressions: usize,
    seed: u64,
    cache: QueryCache,
}

impl DMinStage {
    pub fn new(index: usize, prev: Arc<dyn ConeOracle>, random_compressions: usize, seed: u64) -> Self {
        Self {
            index,
            prev,
            random_compressions,
            seed,
            cache: QueryCache::default(),
        }
    }

    fn answer(&self, q: &Query) -> Result<MembershipResult> {
        let d = self.space().d;
        let first = self.prev.query(q)?;
        if q.level() <= d || first.is_inside() {
            return Ok(nested(first, q.eps));
        }
        let mut alphas = axis_compressions(q.level(), d);
        let mut rng = Rng64::split(self.seed, self.index as u64);
        for _ in 0..self.random_compressions {
            let a = rng.complex_matrix(q.level(), d);
            let f = frob(&a);
            alphas.push(a.map(|z| z / f));
        }
        for alpha in alphas {
            let cq = compressed_query(q, &alpha)?;
            let inner = self.prev.query(&cq)?;
            if inner.is_outside() {
                return Ok(MembershipResult {
                    verdict: Verdict::Outside,
                    epsilon_used: q.eps,
                    diagnostics: inner.diagnostics.clone(),
                    certificate: Certificate::Reduced {
                        route: Route::Compressed { alpha: JMat(alpha) },
                        inner: Box::new(inner),
                    },
                });
            }
        }
        Ok(MembershipResult::unknown(q.eps, first.diagnostics))
    }
}

impl ConeOracle for DMinStage {
    fn space(&self) -> &SpaceRef {
        self.prev.space()
    }

    fn name(&self) -> String {
        format!("stage {} = dmin over {}", self.index, self.prev.name())
    }

    fn query(&self, q: &Query) -> Result<MembershipResult> {
        q.check()?;
        self.cache.get_or_insert(q, || self.answer(q))
    }

    fn validate(&self, q: &Query, r: &MembershipResult) -> bool {
        if r.verdict == Verdict::Unknown {
            return true;
        }
        let Certificate::Reduced { route, inner } = &r.certificate else {
            return false;
        };
        if inner.verdict != r.verdict {
            return false;
        }
        let d = self.space().d;
        match route {
            Route::Nested => {
                (q.level() <= d || r.verdict == Verdict::Inside) && self.prev.validate(q, inner)
            }
            Route::Compressed { alpha } => {
                let a: &CMat = &alpha.0;
                if q.level() <= d
                    || r.verdict != Verdict::Outside
                    || a.nrows() != q.level()
                    || a.ncols() != d
                    || (frob(a) - 1.0).abs() > 1e-9
                {
                    return false;
                }
                compressed_query(q, a).is_ok_and(|cq| self.prev.validate(&cq, inner))
            }
            Route::Doubled => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_engine::{build_initial_cone, BaseOracle, OmaxOptions, TSequence};
    use crate::opsys_core::{build_mub_space, build_sic_space};

    fn base(d: usize) -> Arc<dyn ConeOracle> {
        let s = build_sic_space(d).unwrap();
        let cone = build_initial_cone(&s, &TSequence::affine(8.07, 1.0).unwrap(), 2).unwrap();
        Arc::new(CachedOracle::new(Arc::new(BaseOracle::new(cone, OmaxOptions::default()))))
    }

    #[test]
    fn schedule_alternates_and_wraps() {
        let s = build_sic_space(2).unwrap();
        assert_eq!(step_schedule(0, &s), StepKind::Projection { j: 1 });
        assert_eq!(step_schedule(1, &s), StepKind::DMin);
        assert_eq!(step_schedule(2, &s), StepKind::Projection { j: 2 });
        assert_eq!(step_schedule(8, &s), StepKind::Projection { j: 1 });
        let m = build_mub_space(2).unwrap();
        assert_eq!(step_schedule(10, &m), StepKind::Projection { j: 6 });
        assert_eq!(step_schedule(12, &m), StepKind::Projection { j: 1 });
    }

    #[test]
    fn dmin_is_identity_up_to_level_d() {
        let b = base(2);
        let dm = DMinStage::new(1, b.clone(), 1, 0);
        let s = b.space().clone();
        let mut rng = Rng64::new(3);
        for n in [1, 2] {
            for _ in 0..4 {
                let blocks: Vec<CMat> = (0..s.dim).map(|_| rng.hermitian(n)).collect();
                let x = HermLevel::new(&s, &blocks).unwrap().axpy(2.0, &HermLevel::unit(&s, n)).unwrap();
                let a = b.member(&x, 1e-3).unwrap();
                let r = dm.member(&x, 1e-3).unwrap();
                assert_eq!(a.verdict, r.verdict);
                assert!(dm.validate(&Query::plain(x, 1e-3), &r));
            }
        }
    }

    #[test]
    fn dmin_refutes_above_d_by_compression() {
        let b = base(2);
        let dm = DMinStage::new(1, b.clone(), 0, 0);
        let x = HermLevel::unit(b.space(), 4).scale(-1.0);
        let q = Query::plain(x, 1e-3);
        let r = dm.query(&q).unwrap();
        assert!(r.is_outside());
        assert!(matches!(&r.certificate, Certificate::Reduced { route: Route::Compressed { .. }, .. }));
        assert!(dm.validate(&q, &r));
        let mut forged = r.clone();
        forged.verdict = Verdict::Inside;
        assert!(!dm.validate(&q, &forged));
    }

    #[test]
    fn projection_stage_certificates_validate() {
        let b = base(2);
        let st = ProjectionStage::new(1, b.clone(), 1).unwrap();
        let s = b.space().clone();
        let p1 = VElement::projection(&s, 1).unwrap().to_level();
        let inside = Query::plain(p1.clone(), 1e-4);
        let r = st.query(&inside).unwrap();
        assert!(r.is_inside());
        assert!(st.validate(&inside, &r));
        let outside = Query::plain(p1.scale(-1.0), 1e-4);
        let r = st.query(&outside).unwrap();
        assert!(r.is_outside());
        assert!(matches!(&r.certificate, Certificate::Reduced { route: Route::Doubled, .. }));
        assert!(st.validate(&outside, &r));
        let mut forged = r.clone();
        forged.certificate = Certificate::None;
        assert!(!st.validate(&outside, &forged));
    }

    #[test]
    fn cache_answers_repeated_queries() {
        let b = base(2);
        let st = ProjectionStage::new(1, b.clone(), 2).unwrap();
        let x = HermLevel::unit(b.space(), 1);
        let first = st.member(&x, 1e-3).unwrap();
        let before = st.cache.len();
        let again = st.member(&x, 1e-3).unwrap();
        assert_eq!(first, again);
        assert_eq!(st.cache.len(), before);
        st.member(&x, 2e-3).unwrap();
        assert_eq!(st.cache.len(), before + 1);
    }
}
