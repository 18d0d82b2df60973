use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stage::{step_schedule, CachedOracle, DMinStage, ProjectionStage, StepKind};
use crate::cone_engine::{
    build_initial_cone, properness_probe, BaseOracle, ConeOracle, MembershipResult, OmaxOptions, ProbeBudget,
    ProbeResult, TSequence, Verdict,
};
use crate::error::{Error, Result};
use crate::opsys_core::{build_space, HermLevel, SpaceKind, SpaceRef, VElement};
use crate::projection_dmin::relation::relation_query;
use crate::projection_dmin::{relation_check, Holds, T_MAX};
use crate::rng::Rng64;

/// Slack used when certifying and re-certifying ledger elements.
pub const LEDGER_EPS: f64 = 1e-6;
/// Slack used for the limit verdicts of tracked elements.
pub const LIMIT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub kind: SpaceKind,
    pub d: usize,
    pub tseq: TSequence,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub stages: usize,
    pub probe: ProbeBudget,
    pub seed: u64,
    /// Related pairs spot-checked per stage.
    pub relation_samples: usize,
    /// Random compressions tried per Outside query above level `d`.
    pub random_compressions: usize,
    /// Generators appended to the initial cone.
    #[serde(default)]
    pub extra_generators: Vec<VElement>,
}

impl IterationConfig {
    pub fn new(kind: SpaceKind, d: usize, tseq: TSequence, n_max: usize, stages: usize, seed: u64) -> Self {
        Self {
            kind,
            d,
            tseq,
            n_max,
            stages,
            probe: ProbeBudget { seed, ..ProbeBudget::default() },
            seed,
            relation_samples: 2,
            random_compressions: 2,
            extra_generators: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSpot {
    pub p: usize,
    pub x: usize,
    pub tau: f64,
    pub holds: Holds,
    pub witnesses: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub index: usize,
    /// `None` for the initial cone.
    pub step: Option<StepKind>,
    pub oracle: String,
    pub probe: ProbeResult,
    pub ledger_size: usize,
    pub recertified: usize,
    /// Ledger ids the stage failed to re-certify.
    pub nesting_failures: Vec<usize>,
    pub relations: Vec<RelationSpot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: usize,
    pub label: String,
    /// Stage that first certified the element.
    pub stage: usize,
    pub eps: f64,
    pub element: HermLevel,
    pub certificate: MembershipResult,
    /// Verdicts at stages `stage, stage+1, ...`.
    pub verdicts: Vec<Verdict>,
}

impl LedgerEntry {
    pub fn ever_inside(&self) -> bool {
        self.verdicts.contains(&Verdict::Inside)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub label: String,
    pub level: usize,
    pub eps: f64,
    pub verdict: Verdict,
    /// First stage certifying Inside, or the final stage for Outside.
    pub stage: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Outcome {
    Completed,
    LinealityFound { stage: usize },
    Failed { stage: usize, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationReport {
    pub config: IterationConfig,
    pub stages_completed: usize,
    pub outcome: Outcome,
    pub stages: Vec<StageReport>,
    pub ledger: Vec<LedgerEntry>,
    pub limit_verdicts: Vec<LimitVerdict>,
}

impl IterationReport {
    pub fn nesting_holds(&self) -> bool {
        self.stages.iter().all(|s| s.nesting_failures.is_empty())
    }

    pub fn all_probes_clean(&self) -> bool {
        self.stages.iter().all(|s| !s.probe.is_lineality())
    }
}

/// A finished iteration: the deterministic report, the stage oracles
/// (index 0 is the initial cone) and the wall-clock seconds per stage.
pub struct IterationRun {
    pub report: IterationReport,
    pub oracles: Vec<Arc<dyn ConeOracle>>,
    pub stage_seconds: Vec<f64>,
}

fn related_pairs(space: &SpaceRef) -> Vec<(usize, usize)> {
    let m = space.num_projections();
    let basis = |k: usize| (k - 1) / space.d;
    let mut pairs = Vec::new();
    for i in 1..=m {
        for j in 1..=m {
            let related = match space.kind {
                SpaceKind::Sic => i != j,
                SpaceKind::Mub => basis(i) != basis(j),
            };
            if related {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn seed_entries(space: &SpaceRef, base: &BaseOracle, seed: u64) -> Result<Vec<(String, HermLevel)>> {
    let d = space.d;
    let mut out = vec![("e".to_string(), HermLevel::unit(space, 1))];
    for k in 1..=space.num_projections() {
        out.push((format!("p{k}"), VElement::projection(space, k)?.to_level()));
        out.push((format!("p{k}^perp"), VElement::projection_perp(space, k)?.to_level()));
    }
    let mut rng = Rng64::split(seed, u64::MAX);
    let gens = &base.cone.generators;
    for _ in 0..4 {
        let i = rng.below(gens.len());
        out.push((format!("generator {i}"), gens[i].to_level()));
    }
    let p1 = VElement::projection(space, 1)?;
    out.push((format!("I_{d} ⊗ e"), HermLevel::unit(space, d)));
    out.push((format!("I_{d} ⊗ p1"), HermLevel::kron_scalar(&crate::numerics::linalg::identity(d), &p1)));
    out.push((format!("Q ⊗ p1 (rank one, level {d})"), HermLevel::kron_scalar(&rng.psd(d, 1), &p1)));
    out.push((format!("I_{} ⊗ e", 2 * d), HermLevel::unit(space, 2 * d)));
    Ok(out)
}

fn tracked_elements(space: &SpaceRef) -> Result<Vec<(String, HermLevel)>> {
    let d = space.d;
    let p1 = VElement::projection(space, 1)?.to_level();
    Ok(vec![
        ("e".into(), HermLevel::unit(space, 1)),
        ("-e".into(), HermLevel::unit(space, 1).scale(-1.0)),
        ("p1".into(), p1.clone()),
        ("-p1".into(), p1.scale(-1.0)),
        (format!("I_{d} ⊗ e"), HermLevel::unit(space, d)),
        (format!("-I_{d} ⊗ e"), HermLevel::unit(space, d).scale(-1.0)),
    ])
}

fn spot_relations(
    oracle: &dyn ConeOracle,
    space: &SpaceRef,
    n_max: usize,
    samples: usize,
    rng: &mut Rng64,
) -> Result<(Vec<RelationSpot>, Vec<(String, HermLevel, MembershipResult)>)> {
    let pairs = related_pairs(space);
    let schedule = [0.5, 1.0 / n_max as f64];
    let tau = space.constant;
    let mut spots = Vec::new();
    let mut witnesses = Vec::new();
    for _ in 0..samples.min(pairs.len()) {
        let (i, j) = pairs[rng.below(pairs.len())];
        let p = VElement::projection(space, i)?;
        let x = VElement::projection(space, j)?;
        let v = relation_check(oracle, &p, &x, tau, &schedule, T_MAX)?;
        for step in &v.results {
            if step.verdict == Verdict::Inside {
                let q = relation_query(&p, &x, tau, step.eps, step.sign as f64);
                let t = step.t.unwrap_or(0.0);
                let label = format!("relation p{i} (p{j} - τe) p{i}, sign {}, ε = {}", step.sign, step.eps);
                witnesses.push((label, q.realized(&[t]), step.result.clone()));
            }
        }
        spots.push(RelationSpot { p: i, x: j, tau, holds: v.holds, witnesses: v.witnesses });
    }
    Ok((spots, witnesses))
}

/// First stage certifying `x + ε·unit` Inside, else the final stage's
/// Outside, else Unknown.
pub fn limit_member_at(oracles: &[Arc<dyn ConeOracle>], x: &HermLevel, eps: f64) -> Result<(MembershipResult, Option<usize>)> {
    let Some(last) = oracles.len().checked_sub(1) else {
        return Err(Error::Precondition("no stage oracles".into()));
    };
    let mut final_result = None;
    for (k, o) in oracles.iter().enumerate() {
        let r = o.member(x, eps)?;
        if r.is_inside() {
            return Ok((r, Some(k)));
        }
        if k == last {
            final_result = Some(r);
        }
    }
    let r = final_result.expect("last stage queried");
    if r.is_outside() {
        Ok((r, Some(last)))
    } else {
        Ok((MembershipResult::unknown(eps, r.diagnostics), None))
    }
}

pub fn limit_member(run: &IterationRun, x: &HermLevel, eps: f64) -> Result<MembershipResult> {
    if run.report.stages_completed == 0 {
        return Err(Error::Precondition("the iteration completed no stage".into()));
    }
    limit_member_at(&run.oracles, x, eps).map(|(r, _)| r)
}

pub fn run_iteration(
    space: &SpaceRef,
    tseq: &TSequence,
    n_max: usize,
    stages: usize,
    probe_budget: &ProbeBudget,
    seed: u64,
) -> Result<IterationRun> {
    let mut cfg = IterationConfig::new(space.kind, space.d, tseq.clone(), n_max, stages, seed);
    cfg.probe = probe_budget.clone();
    run_iteration_with(&cfg)
}

fn build_stage(k: usize, step: StepKind, prev: Arc<dyn ConeOracle>, cfg: &IterationConfig) -> Result<Arc<dyn ConeOracle>> {
    Ok(match step {
        StepKind::Projection { j } => Arc::new(ProjectionStage::new(k, prev, j)?),
        StepKind::DMin => Arc::new(DMinStage::new(k, prev, cfg.random_compressions, cfg.seed)),
    })
}

pub fn run_iteration_with(cfg: &IterationConfig) -> Result<IterationRun> {
    if cfg.stages == 0 {
        return Err(Error::InvalidParameter("stages must be at least 1".into()));
    }
    let space = build_space(cfg.kind, cfg.d)?;
    let cone = build_initial_cone(&space, &cfg.tseq, cfg.n_max)?;
    let cone = if cfg.extra_generators.is_empty() { cone } else { cone.with_extra(&cfg.extra_generators)? };
    let base = BaseOracle::new(cone, OmaxOptions::default());
    let seeds = seed_entries(&space, &base, cfg.seed)?;
    let base: Arc<dyn ConeOracle> = Arc::new(CachedOracle::new(Arc::new(base)));

    let mut oracles = vec![base];
    let mut ledger: Vec<LedgerEntry> = Vec::new();
    let mut stages = Vec::new();
    let mut stage_seconds = Vec::new();
    let mut outcome = Outcome::Completed;

    for (label, element) in seeds {
        let r = oracles[0].member(&element, LEDGER_EPS)?;
        let id = ledger.len();
        ledger.push(LedgerEntry { id, label, stage: 0, eps: LEDGER_EPS, element, verdicts: vec![r.verdict], certificate: r });
    }

    for k in 0..=cfg.stages {
        let start = Instant::now();
        let step = if k == 0 { None } else { Some(step_schedule(k - 1, &space)) };
        if let Some(step) = step {
            match build_stage(k, step, oracles[k - 1].clone(), cfg) {
                Ok(o) => oracles.push(o),
                Err(e) => {
                    outcome = Outcome::Failed { stage: k, message: e.to_string() };
                    break;
                }
            }
        }
        let oracle = oracles[k].clone();

        let mut nesting_failures = Vec::new();
        let mut recertified = 0;
        if k > 0 {
            for entry in ledger.iter_mut() {
                let r = oracle.member(&entry.element, entry.eps)?;
                if r.is_inside() {
                    recertified += 1;
                } else {
                    nesting_failures.push(entry.id);
                }
                entry.verdicts.push(r.verdict);
            }
        }

        let probe = properness_probe(oracle.as_ref(), 1, &cfg.probe)?;
        let lineality = probe.is_lineality();

        let mut rng = Rng64::split(cfg.seed, k as u64);
        let (relations, witnesses) = if lineality {
            (Vec::new(), Vec::new())
        } else {
            spot_relations(oracle.as_ref(), &space, cfg.n_max, cfg.relation_samples, &mut rng)?
        };
        for (label, element, _) in witnesses {
            let r = oracle.member(&element, LEDGER_EPS)?;
            if !r.is_inside() {
                continue;
            }
            let id = ledger.len();
            ledger.push(LedgerEntry { id, label, stage: k, eps: LEDGER_EPS, element, verdicts: vec![r.verdict], certificate: r });
        }

        stages.push(StageReport {
            index: k,
            step,
            oracle: oracle.name(),
            probe,
            ledger_size: ledger.len(),
            recertified,
            nesting_failures,
            relations,
        });
        stage_seconds.push(start.elapsed().as_secs_f64());
        if lineality {
            outcome = Outcome::LinealityFound { stage: k };
            break;
        }
    }

    let mut limit_verdicts = Vec::new();
    for (label, x) in tracked_elements(&space)? {
        let (r, stage) = limit_member_at(&oracles, &x, LIMIT_EPS)?;
        limit_verdicts.push(LimitVerdict { label, level: x.n, eps: LIMIT_EPS, verdict: r.verdict, stage });
    }

    let report = IterationReport {
        config: cfg.clone(),
        stages_completed: oracles.len() - 1,
        outcome,
        stages,
        ledger,
        limit_verdicts,
    };
    Ok(IterationRun { report, oracles, stage_seconds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(stages: usize) -> IterationConfig {
        let mut cfg = IterationConfig::new(SpaceKind::Sic, 2, TSequence::affine(8.07, 1.0).unwrap(), 2, stages, 11);
        cfg.probe = ProbeBudget { directions: 4, ascent_steps: 10, ascent_starts: 1, seed: 11, ..ProbeBudget::default() };
        cfg.relation_samples = 1;
        cfg
    }

    #[test]
    fn zero_stages_rejected() {
        assert!(matches!(run_iteration_with(&small(0)), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn short_run_nests_and_tracks() {
        let run = run_iteration_with(&small(2)).unwrap();
        let rep = &run.report;
        assert_eq!(rep.outcome, Outcome::Completed);
        assert_eq!(rep.stages_completed, 2);
        assert_eq!(rep.stages.len(), 3);
        assert!(rep.nesting_holds());
        assert!(rep.all_probes_clean());
        assert!(rep.ledger.iter().all(|e| e.verdicts.iter().all(|v| *v == Verdict::Inside)));
        let find = |l: &str| rep.limit_verdicts.iter().find(|v| v.label == l).unwrap();
        assert_eq!(find("e").verdict, Verdict::Inside);
        assert_eq!(find("e").stage, Some(0));
        assert_eq!(find("-e").verdict, Verdict::Outside);
        assert_eq!(find("-e").stage, Some(2));

        let g = VElement::projection_perp(&build_space(SpaceKind::Sic, 2).unwrap(), 3).unwrap().to_level();
        let (r, k) = limit_member_at(&run.oracles, &g, 1e-6).unwrap();
        assert!(r.is_inside());
        assert_eq!(k, Some(0));
        assert!(limit_member(&run, &g, 1e-6).unwrap().is_inside());
    }

    #[test]
    fn same_seed_same_report() {
        let a = run_iteration_with(&small(1)).unwrap();
        let b = run_iteration_with(&small(1)).unwrap();
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    }

    #[test]
    fn planted_lineality_aborts() {
        let mut cfg = small(2);
        let s = build_space(SpaceKind::Sic, 2).unwrap();
        let y0 = VElement::projection(&s, 1).unwrap().sub(&VElement::projection(&s, 2).unwrap());
        cfg.extra_generators = vec![y0.clone(), y0.scale(-1.0)];
        cfg.probe.directions = 16;
        let run = run_iteration_with(&cfg).unwrap();
        match run.report.outcome {
            Outcome::LinealityFound { stage } => assert!(stage <= 1),
            ref o => panic!("expected lineality, got {o:?}"),
        }
        assert!(run.report.stages.last().unwrap().probe.is_lineality());
    }

    #[test]
    fn related_pairs_count() {
        assert_eq!(related_pairs(&build_space(SpaceKind::Sic, 2).unwrap()).len(), 12);
        assert_eq!(related_pairs(&build_space(SpaceKind::Mub, 3).unwrap()).len(), 12 * 9);
    }
}
