use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::membership::{ConeOracle, MembershipResult};
use crate::error::{Error, Result};
use crate::numerics::linalg::{herm_coords, herm_from_coords};
use crate::opsys_core::{HermLevel, SpaceRef};
use crate::rng::Rng64;

pub const DEFAULT_EPS_SCHEDULE: [f64; 3] = [1e-2, 1e-4, 1e-6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBudget {
    /// Random unit directions tried after the basis directions.
    pub directions: usize,
    /// Cutting-plane rounds per ascent start.
    pub ascent_steps: usize,
    pub ascent_starts: usize,
    pub eps_schedule: Vec<f64>,
    pub seed: u64,
}

impl Default for ProbeBudget {
    fn default() -> Self {
        Self { directions: 200, ascent_steps: 120, ascent_starts: 3, eps_schedule: DEFAULT_EPS_SCHEDULE.to_vec(), seed: 0 }
    }
}

impl ProbeBudget {
    /// A budget that spends nothing.
    pub fn empty() -> Self {
        Self { directions: 0, ascent_steps: 0, ascent_starts: 0, ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "result")]
pub enum ProbeResult {
    LinealityFound { direction: HermLevel, plus: MembershipResult, minus: MembershipResult, probes: usize },
    NoneFound { probes: usize, best_margin: Option<f64> },
}

impl ProbeResult {
    pub fn is_lineality(&self) -> bool {
        matches!(self, ProbeResult::LinealityFound { .. })
    }

    pub fn probes(&self) -> usize {
        match self {
            ProbeResult::LinealityFound { probes, .. } | ProbeResult::NoneFound { probes, .. } => *probes,
        }
    }
}

fn real_dim(space: &SpaceRef, level: usize) -> usize {
    space.dim * level * level
}

/// Unit-norm element with the given real coordinates (orthonormal
/// Hermitian coordinates per space coordinate).
fn from_coords(space: &SpaceRef, level: usize, v: &[f64]) -> Result<HermLevel> {
    let nb = level * level;
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("zero probe direction".into()));
    }
    let blocks: Vec<_> = v.chunks(nb).map(|ch| herm_from_coords(level, ch)).collect();
    let x = HermLevel::new(space, &blocks)?;
    Ok(x.scale(1.0 / x.norm()))
}

fn random_coords(seed: u64, idx: u64, len: usize) -> Vec<f64> {
    let mut rng = Rng64::split(seed, idx);
    (0..len).map(|_| rng.normal()).collect()
}

/// Both `±y` Inside at every ε of the schedule; returns the certificates
/// at the smallest ε.
fn lineality_check(
    oracle: &dyn ConeOracle,
    y: &HermLevel,
    schedule: &[f64],
) -> Result<Option<(MembershipResult, MembershipResult)>> {
    let minus = y.scale(-1.0);
    let mut found = None;
    for &eps in schedule {
        let p = oracle.member(y, eps)?;
        if !p.is_inside() {
            return Ok(None);
        }
        let m = oracle.member(&minus, eps)?;
        if !m.is_inside() {
            return Ok(None);
        }
        found = Some((p, m));
    }
    Ok(found)
}

/// Score `min(margin(y), margin(−y))`; `None` when the oracle has no margin.
fn score(oracle: &dyn ConeOracle, y: &HermLevel) -> Option<f64> {
    let a = oracle.margin(y)?;
    let b = oracle.margin(&y.scale(-1.0))?;
    Some(a.min(b))
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / n).collect()
}

fn coords_of(x: &HermLevel) -> Vec<f64> {
    let mut v = Vec::new();
    for b in x.blocks() {
        herm_coords(&b, &mut v);
    }
    v
}

/// Score with the supergradients of `margin(y)` and `margin(−y)` as
/// functions of `y`.
struct Eval {
    score: f64,
    plus: Option<Vec<f64>>,
    minus: Option<Vec<f64>>,
}

fn eval_sg(oracle: &dyn ConeOracle, space: &SpaceRef, level: usize, v: &[f64]) -> Option<Eval> {
    let y = from_coords(space, level, v).ok()?;
    let side = |x: &HermLevel, sign: f64| -> Option<(f64, Option<Vec<f64>>)> {
        match oracle.margin_supergradient(x) {
            Some((m, g)) => Some((m, Some(coords_of(&g).into_iter().map(|a| sign * a).collect()))),
            None => oracle.margin(x).map(|m| (m, None)),
        }
    };
    let (mp, plus) = side(&y, 1.0)?;
    let (mm, minus) = side(&y.scale(-1.0), -1.0)?;
    Some(Eval { score: mp.min(mm), plus, minus })
}

const CUT_BOX: f64 = 1e3;
const CUT_BOUND_TOL: f64 = 1e-9;

/// Maximizes `τ` subject to `⟨h, y⟩ ≥ τ` for every cut, `⟨y, center⟩ = 1`
/// and `|y − center|_∞ ≤ CUT_BOX`. The margin is positively homogeneous
/// and bounded by every cut, so `τ` bounds the score on this region.
fn cutting_plane_step(center: &[f64], cuts: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = center.iter().map(|&c| lp.add_var(0.0, (c - CUT_BOX, c + CUT_BOX))).collect();
    let tau = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for h in cuts {
        let mut row: Vec<_> = vars.iter().zip(h).map(|(&v, &a)| (v, a)).collect();
        row.push((tau, -1.0));
        lp.add_constraint(&row[..], ComparisonOp::Ge, 0.0);
    }
    let norm: Vec<_> = vars.iter().zip(center).map(|(&v, &a)| (v, a)).collect();
    lp.add_constraint(&norm[..], ComparisonOp::Eq, 1.0);
    let sol = lp.solve().ok()?;
    Some((vars.iter().map(|&v| sol[v]).collect(), sol[tau]))
}

struct Candidate {
    coords: Vec<f64>,
    score: Option<f64>,
}

/// Searches for a unit-norm `y` with both `±y` in the cone at level
/// `level`: every basis direction, seeded random directions, then
/// cutting-plane ascent on the margin from the best candidates.
pub fn properness_probe(oracle: &dyn ConeOracle, level: usize, budget: &ProbeBudget) -> Result<ProbeResult> {
    if level == 0 {
        return Err(Error::InvalidParameter("probe level must be at least 1".into()));
    }
    let space = oracle.space().clone();
    let len = real_dim(&space, level);
    let max_eps = budget.eps_schedule.iter().cloned().fold(0.0, f64::max);
    let mut probes = 0usize;
    if budget.directions == 0 && budget.ascent_steps == 0 {
        return Ok(ProbeResult::NoneFound { probes, best_margin: None });
    }

    let mut dirs: Vec<Vec<f64>> = (0..len)
        .map(|i| {
            let mut v = vec![0.0; len];
            v[i] = 1.0;
            v
        })
        .collect();
    dirs.extend((0..budget.directions).map(|i| random_coords(budget.seed, i as u64, len)));

    let evaluate = |v: &Vec<f64>| -> Result<(Candidate, Option<(HermLevel, MembershipResult, MembershipResult)>)> {
        let y = from_coords(&space, level, v)?;
        let s = score(oracle, &y);
        let promising = s.map_or(true, |s| s >= -max_eps);
        let hit = if promising { lineality_check(oracle, &y, &budget.eps_schedule)?.map(|(p, m)| (y, p, m)) } else { None };
        Ok((Candidate { coords: v.clone(), score: s }, hit))
    };

    let evaluated: Vec<_> = dirs.par_iter().map(evaluate).collect::<Result<_>>()?;
    let mut candidates = Vec::with_capacity(evaluated.len());
    for (cand, hit) in evaluated {
        probes += 1;
        if let Some((direction, plus, minus)) = hit {
            return Ok(ProbeResult::LinealityFound { direction, plus, minus, probes });
        }
        candidates.push(cand);
    }

    let mut best_margin = candidates.iter().filter_map(|c| c.score).fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    if best_margin.is_none() || budget.ascent_steps == 0 {
        return Ok(ProbeResult::NoneFound { probes, best_margin });
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].score.partial_cmp(&candidates[a].score).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

    for &ci in order.iter().take(budget.ascent_starts) {
        let center = unit(&candidates[ci].coords);
        let mut cur = center.clone();
        let mut cuts: Vec<Vec<f64>> = Vec::new();
        for _ in 0..budget.ascent_steps {
            let Some(e) = eval_sg(oracle, &space, level, &cur) else { break };
            probes += 1;
            best_margin = Some(best_margin.map_or(e.score, |b: f64| b.max(e.score)));
            if e.score >= -max_eps {
                let y = from_coords(&space, level, &cur)?;
                if let Some((plus, minus)) = lineality_check(oracle, &y, &budget.eps_schedule)? {
                    return Ok(ProbeResult::LinealityFound { direction: y, plus, minus, probes });
                }
            }
            let (Some(gp), Some(gm)) = (e.plus, e.minus) else { break };
            cuts.push(gp);
            cuts.push(gm);
            match cutting_plane_step(&center, &cuts) {
                Some((y, bound)) if bound > -CUT_BOUND_TOL => cur = unit(&y),
                _ => break,
            }
        }
    }
    Ok(ProbeResult::NoneFound { probes, best_margin })
}

/// Angle between the lines spanned by two elements, in radians.
pub fn line_angle(a: &HermLevel, b: &HermLevel) -> f64 {
    let ab: f64 = a.blocks().iter().zip(b.blocks()).map(|(x, y)| crate::numerics::linalg::inner(x, &y)).sum();
    let cos = (ab.abs() / (a.norm() * b.norm())).min(1.0);
    cos.acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_engine::cone::build_initial_cone;
    use crate::cone_engine::omax::OmaxOptions;
    use crate::cone_engine::oracle::BaseOracle;
    use crate::cone_engine::thresholds::t_thresholds;
    use crate::cone_engine::tseq::TSequence;
    use crate::opsys_core::{build_sic_space, VElement};

    fn base(extra: Vec<VElement>) -> BaseOracle {
        let s = build_sic_space(2).unwrap();
        let t = t_thresholds(2).unwrap().t_star;
        let cone = build_initial_cone(&s, &TSequence::affine(t, 1.0).unwrap(), 3).unwrap();
        let cone = if extra.is_empty() { cone } else { cone.with_extra(&extra).unwrap() };
        BaseOracle::new(cone, OmaxOptions::default())
    }

    #[test]
    fn zero_budget_spends_nothing() {
        let r = properness_probe(&base(vec![]), 1, &ProbeBudget::empty()).unwrap();
        assert!(matches!(r, ProbeResult::NoneFound { probes: 0, .. }));
    }

    #[test]
    fn initial_cone_is_proper() {
        let budget = ProbeBudget { directions: 60, ascent_steps: 30, ..Default::default() };
        let r = properness_probe(&base(vec![]), 1, &budget).unwrap();
        assert!(!r.is_lineality());
    }

    #[test]
    fn planted_lineality_is_recovered() {
        let oracle0 = base(vec![]);
        let s = oracle0.cone.space.clone();
        let y0 = VElement::new(&s, vec![0.3, -0.7, 0.2, 0.5]).unwrap();
        let oracle = base(vec![y0.clone(), y0.scale(-1.0)]);
        let r = properness_probe(&oracle, 1, &ProbeBudget::default()).unwrap();
        match r {
            ProbeResult::LinealityFound { direction, .. } => {
                let angle = line_angle(&direction, &y0.to_level());
                assert!(angle <= 1e-3, "angle {angle}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probe_is_seed_reproducible() {
        let budget = ProbeBudget { directions: 20, ascent_steps: 5, seed: 3, ..Default::default() };
        let a = properness_probe(&base(vec![]), 1, &budget).unwrap();
        let b = properness_probe(&base(vec![]), 1, &budget).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
