use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use super::args::{Command, ConeArgs, ElementArgs, ProbeArgs, SpaceArgs};
use crate::cone_engine::{
    build_initial_cone, gram_matrix, properness_probe, t_thresholds, BaseOracle, ConeOracle, GeneratorCone,
    OmaxOptions, ProbeBudget, Query, TSequence,
};
use crate::error::{Error, Result};
use crate::iterate::{run_iteration_with, IterationConfig, IterationReport};
use crate::numerics::linalg::identity;
use crate::opsys_core::{build_space, HermLevel, SpaceRef, VElement};
use crate::projection_dmin::{cnp_member, dmin_refute, relation_check, validate_cnp, SearchBudget, T_MAX};
use crate::quantum_instances::sic::SIC_TOL;
use crate::quantum_instances::{
    mub_generate, pi_positivity_check, sic_search_best, soundness_check, verify_instance, ConcreteOracle,
    QuantumInstance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerificationFailed,
    Lineality,
}

pub struct Outcome {
    pub result: Value,
    pub status: Status,
    pub csv: Option<String>,
    /// Seconds per stage, for iteration runs.
    pub stage_seconds: Option<Vec<f64>>,
}

impl Outcome {
    fn ok(result: impl Serialize) -> Result<Self> {
        Self::with(result, Status::Ok)
    }

    fn with(result: impl Serialize, status: Status) -> Result<Self> {
        Ok(Self { result: serde_json::to_value(result)?, status, csv: None, stage_seconds: None })
    }
}

fn space(a: &SpaceArgs) -> Result<SpaceRef> {
    build_space(a.kind, a.d)
}

fn tseq(d: usize, t0: Option<f64>, slope: f64) -> Result<TSequence> {
    let t0 = match t0 {
        Some(t) => t,
        None => t_thresholds(d)?.t_star,
    };
    TSequence::affine(t0, slope)
}

fn cone(a: &ConeArgs) -> Result<GeneratorCone> {
    let s = space(&a.space)?;
    build_initial_cone(&s, &tseq(a.space.d, a.t0, a.slope)?, a.nmax)
}

fn base_oracle(a: &ConeArgs) -> Result<BaseOracle> {
    Ok(BaseOracle::new(cone(a)?, OmaxOptions::default()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

/// Reads a JSON file, unwrapping the `result` of a report envelope.
fn read_payload(path: &Path) -> Result<Value> {
    let v: Value = serde_json::from_str(&read(path)?)?;
    Ok(match v.get("result") {
        Some(r) if v.get("schema").is_some() => r.clone(),
        _ => v,
    })
}

fn read_instance(path: &Path) -> Result<QuantumInstance> {
    let v = read_payload(path)?;
    let v = v.get("instance").cloned().unwrap_or(v);
    QuantumInstance::from_json(&v.to_string())
}

fn instance_value(inst: &QuantumInstance) -> Result<Value> {
    Ok(serde_json::from_str(&inst.to_json()?)?)
}

fn element(s: &SpaceRef, a: &ElementArgs) -> Result<HermLevel> {
    if a.level == 0 {
        return Err(Error::InvalidParameter("level must be at least 1".into()));
    }
    match (&a.coeffs, &a.element) {
        (Some(c), None) => {
            let v = VElement::new(s, c.clone())?;
            Ok(HermLevel::kron_scalar(&identity(a.level), &v))
        }
        (None, Some(path)) => {
            let x: HermLevel = serde_json::from_value(read_payload(path)?)?;
            if !x.space.same_as(s) {
                return Err(Error::DimensionMismatch("element lives in a different space".into()));
            }
            Ok(x)
        }
        _ => Err(Error::InvalidInput("give exactly one of --coeffs and --element".into())),
    }
}

fn budget(p: &ProbeArgs, seed: u64) -> ProbeBudget {
    ProbeBudget {
        directions: p.directions,
        ascent_steps: p.ascent_steps,
        ascent_starts: p.ascent_starts,
        seed,
        ..ProbeBudget::default()
    }
}

fn gram_csv(g: &crate::cone_engine::Gram) -> String {
    let mut out = g.space.basis_labels.join(",");
    out.push('\n');
    for i in 0..g.matrix.nrows() {
        let row: Vec<String> = (0..g.matrix.ncols()).map(|j| format!("{:e}", g.matrix[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn margins_csv(r: &crate::quantum_instances::PiPositivityReport) -> Result<String> {
    let mut out = String::from("generator,margin,t_used,t_min\n");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    for g in &r.generators {
        let spec = serde_json::to_string(&g.spec)?.replace('"', "'");
        out.push_str(&format!("\"{spec}\",{:e},{},{}\n", g.margin, opt(g.t_used), opt(g.t_min)));
    }
    Ok(out)
}

pub fn execute(cmd: &Command, seed: u64) -> Result<Outcome> {
    match cmd {
        Command::Gram { space: a } => {
            let g = gram_matrix(&space(a)?);
            let mut o = Outcome::ok(g.to_json())?;
            o.csv = Some(gram_csv(&g));
            Ok(o)
        }
        Command::Thresholds { d } => Outcome::ok(t_thresholds(*d)?),
        Command::BuildCone { cone: a } => {
            let c = cone(a)?;
            let generators: Vec<Value> = c
                .generators
                .iter()
                .zip(&c.specs)
                .map(|(g, s)| json!({ "spec": s, "coeffs": g.coeffs }))
                .collect();
            Outcome::ok(json!({ "cone": c.describe(), "generators": generators }))
        }
        Command::Member { cone: a, element: e } => {
            let o = base_oracle(a)?;
            let x = element(o.space(), e)?;
            let q = Query::plain(x, e.eps);
            let r = o.query(&q)?;
            let validated = o.validate(&q, &r);
            let status = if validated { Status::Ok } else { Status::VerificationFailed };
            Outcome::with(json!({ "level": q.level(), "result": r, "validated": validated }), status)
        }
        Command::Relation { cone: a, p, x, tau, schedule } => {
            let o = base_oracle(a)?;
            let s = o.space().clone();
            let tau = tau.unwrap_or(s.constant);
            let schedule = schedule.clone().unwrap_or_else(|| vec![0.5, 1.0 / a.nmax as f64]);
            let v = relation_check(&o, &VElement::projection(&s, *p)?, &VElement::projection(&s, *x)?, tau, &schedule, T_MAX)?;
            Outcome::ok(v)
        }
        Command::Cnp { cone: a, element: e, p } => {
            let o = base_oracle(a)?;
            let x = element(o.space(), e)?;
            let pv = VElement::projection(o.space(), *p)?;
            let r = cnp_member(&o, &x, &pv, e.eps, T_MAX)?;
            let validated = validate_cnp(&o, &x, &pv, e.eps, T_MAX, &r);
            let status = if validated { Status::Ok } else { Status::VerificationFailed };
            Outcome::with(json!({ "level": x.n, "p": p, "result": r, "validated": validated }), status)
        }
        Command::DminRefute { cone: a, element: e, instance, restarts, steps, .. } => {
            let oracle: Arc<dyn ConeOracle> = match instance {
                Some(path) => {
                    let inst = read_instance(path)?;
                    Arc::new(ConcreteOracle::new(&build_space(inst.kind, inst.d)?, &inst)?)
                }
                None => Arc::new(base_oracle(a)?),
            };
            let x = element(oracle.space(), e)?;
            let out = dmin_refute(oracle.as_ref(), &x, e.eps, &SearchBudget { restarts: *restarts, steps: *steps, seed })?;
            Outcome::ok(json!({ "oracle": oracle.name(), "level": x.n, "outcome": out }))
        }
        Command::Probe { cone: a, probe, level, plant, .. } => {
            let mut c = cone(a)?;
            if let Some(y) = plant {
                let y = VElement::new(&c.space, y.clone())?;
                c = c.with_extra(&[y.clone(), y.scale(-1.0)])?;
            }
            let o = BaseOracle::new(c, OmaxOptions::default());
            let r = properness_probe(&o, *level, &budget(probe, seed))?;
            let status = if r.is_lineality() { Status::Lineality } else { Status::Ok };
            Outcome::with(r, status)
        }
        Command::Iterate { cone: a, probe, stages, relation_samples, compressions, .. } => {
            let cfg = IterationConfig {
                kind: a.space.kind,
                d: a.space.d,
                tseq: tseq(a.space.d, a.t0, a.slope)?,
                n_max: a.nmax,
                stages: *stages,
                probe: budget(probe, seed),
                seed,
                relation_samples: *relation_samples,
                random_compressions: *compressions,
                extra_generators: Vec::new(),
            };
            let run = run_iteration_with(&cfg)?;
            let status = match run.report.outcome {
                crate::iterate::Outcome::LinealityFound { .. } => Status::Lineality,
                crate::iterate::Outcome::Failed { .. } => Status::VerificationFailed,
                crate::iterate::Outcome::Completed if !run.report.nesting_holds() => Status::VerificationFailed,
                crate::iterate::Outcome::Completed => Status::Ok,
            };
            let mut o = Outcome::with(&run.report, status)?;
            o.stage_seconds = Some(run.stage_seconds);
            Ok(o)
        }
        Command::SicSearch { d, restarts, iters, .. } => {
            let inst = sic_search_best(*d, *restarts, *iters, seed)?;
            let passed = inst.max_overlap_error <= SIC_TOL;
            let status = if passed { Status::Ok } else { Status::VerificationFailed };
            Outcome::with(
                json!({ "instance": instance_value(&inst)?, "max_overlap_error": inst.max_overlap_error, "tol": SIC_TOL, "passed": passed }),
                status,
            )
        }
        Command::MubGen { d } => {
            let inst = mub_generate(*d)?;
            Outcome::ok(json!({ "instance": instance_value(&inst)?, "max_overlap_error": inst.max_overlap_error }))
        }
        Command::Verify { instance, tol } => {
            let r = verify_instance(&read_instance(instance)?, *tol)?;
            let status = if r.passed { Status::Ok } else { Status::VerificationFailed };
            Outcome::with(r, status)
        }
        Command::PiCheck { instance, t0, slope, nmax, tol } => {
            let inst = read_instance(instance)?;
            let s = build_space(inst.kind, inst.d)?;
            let r = pi_positivity_check(&s, &inst, &tseq(inst.d, *t0, *slope)?, *nmax, *tol)?;
            let status = if r.passed { Status::Ok } else { Status::VerificationFailed };
            let csv = margins_csv(&r)?;
            let mut o = Outcome::with(r, status)?;
            o.csv = Some(csv);
            Ok(o)
        }
        Command::Soundness { report, instance } => {
            let rep: IterationReport = serde_json::from_value(read_payload(report)?)?;
            let r = soundness_check(&rep, &read_instance(instance)?)?;
            let status = if r.passed { Status::Ok } else { Status::VerificationFailed };
            Outcome::with(r, status)
        }
    }
}
