use std::time::{Duration, Instant};

use opsys::cli::{run_with, EXIT_OK};
use opsys::cone_engine::probe::line_angle;
use opsys::cone_engine::{
    build_initial_cone, gram_matrix, properness_probe, t_thresholds, BaseOracle, Certificate, ConeOracle,
    OmaxOptions, ProbeBudget, ProbeResult, Query, TSequence, Verdict,
};
use opsys::iterate::{IterationReport, Outcome};
use opsys::numerics::eig::min_eigenvalue;
use opsys::numerics::linalg::{c, herm_coords, kron, CMat};
use opsys::opsys_core::{build_space, make_generator, GeneratorSpec, HermLevel, SpaceKind, SpaceRef, VElement};
use opsys::projection_dmin::{dmin_refute, lemma_compression_witness, validate_compression, DminOutcome, LemmaVerdict, SearchBudget, T_MAX};
use opsys::quantum_instances::{
    mub_generate, pi_positivity_check, sic_search, soundness_check, verify_instance, ConcreteOracle, QuantumInstance,
};
use opsys::rng::Rng64;
use serde_json::Value;

struct Outcome_ {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Outcome_ {
    Outcome_ { passed, detail: detail.into() }
}

fn sic(d: usize) -> SpaceRef {
    build_space(SpaceKind::Sic, d).unwrap()
}

fn t_star_seq(d: usize) -> TSequence {
    TSequence::affine(t_thresholds(d).unwrap().t_star, 1.0).unwrap()
}

fn criterion_1_gram() -> Outcome_ {
    let mut worst = 0.0f64;
    let mut ranks_ok = true;
    for d in 2..=6 {
        let s = sic(d);
        let g = gram_matrix(&s);
        let (df, l) = (d as f64, s.constant);
        let e = VElement::unit(&s);
        let p = |i| VElement::projection(&s, i).unwrap();
        let q = |i| VElement::projection_perp(&s, i).unwrap();
        let mut dev = |got: f64, want: f64| worst = worst.max((got - want).abs());
        dev(g.inner(&e, &e), 1.0);
        for i in 1..=s.dim {
            for j in 1..=s.dim {
                let same = i == j;
                dev(g.inner(&p(i), &p(j)), if same { 1.0 / df } else { l / df });
                dev(g.inner(&p(i), &q(j)), if same { 0.0 } else { (1.0 - l) / df });
                dev(g.inner(&q(i), &q(j)), if same { (df - 1.0) / df } else { (df - 2.0 + l) / df });
            }
            let y = e.scale(l).sub(&p(i));
            dev(g.norm_sq(&y), (l * l * df - 2.0 * l + 1.0) / df);
        }
        for k in 1..=s.dim.min(4) {
            for i in (1..=s.dim).filter(|&i| i != k) {
                for n in [1, 2, 7] {
                    for spec in [GeneratorSpec::XPlus { i, j: k, n, t: 3.0 }, GeneratorSpec::XMinus { i, j: k, n, t: 3.0 }] {
                        let x = make_generator(&s, &spec).unwrap();
                        // ⟨p_k, x_{i,k,n}^±⟩ = 1/(nd), independent of t
                        dev(g.inner(&p(k), &x) - 3.0 * g.inner(&p(k), &q(k)), 1.0 / (n as f64 * df));
                    }
                }
            }
        }
        ranks_ok &= g.rank == d * d;
    }
    verdict(worst <= 1e-12 && ranks_ok, format!("max deviation {worst:.2e}, ranks d² for d = 2..6: {ranks_ok}"))
}

/// The paper's three sufficient conditions, solved by bisection on the
/// inequalities themselves rather than their closed forms.
fn rederived_t_star(d: usize) -> f64 {
    let df = d as f64;
    let l = 1.0 / (df + 1.0);
    let beta = ((l * l * df - 2.0 * l + 2.0) / df).sqrt();
    let alpha = (df - 2.0 + l) / df;
    let gamma = (df - 1.0).sqrt() * beta / df.sqrt();
    let conds: [Box<dyn Fn(f64) -> bool>; 3] = [
        Box::new(move |t| t * (1.0 - l) / df - beta / df.sqrt() >= 0.0),
        Box::new(move |t| t * alpha - (df - 1.0).sqrt() * beta / df.sqrt() >= 0.0),
        Box::new(move |t| t * t * alpha - 2.0 * t * gamma - beta * beta >= 0.0),
    ];
    conds
        .iter()
        .map(|ok| {
            let (mut lo, mut hi) = (0.0, 1e3);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        })
        .fold(0.0, f64::max)
}

fn criterion_2_thresholds() -> Outcome_ {
    let mut worst = f64::INFINITY;
    let mut pairs_d3 = 0usize;
    for d in [2, 3, 4] {
        let s = sic(d);
        let cone = build_initial_cone(&s, &t_star_seq(d), 10).unwrap();
        let g = gram_matrix(&s);
        let x = cone.gmat();
        let prod = x.transpose() * &g.matrix * x;
        let n = prod.nrows();
        for i in 0..n {
            for j in i..n {
                worst = worst.min(prod[(i, j)]);
            }
        }
        if d == 3 {
            pairs_d3 = n * (n + 1) / 2;
        }
    }
    let t2 = t_thresholds(2).unwrap().t_star;
    let indep = rederived_t_star(2);
    let spot = (t2 - 8.0622).abs() <= 1e-3 && (t2 - indep).abs() <= 1e-9;
    verdict(
        worst >= -1e-10 && pairs_d3 >= 10_000 && spot,
        format!("min pairwise inner product {worst:.3e}, {pairs_d3} pairs at d=3, t_star(2) = {t2:.6} (re-derived {indep:.6})"),
    )
}

fn criterion_3_properness() -> Outcome_ {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2, 3] {
        let s = sic(d);
        let cone = build_initial_cone(&s, &t_star_seq(d), 3).unwrap();
        let budget = ProbeBudget { directions: 2000, seed: d as u64, ..ProbeBudget::default() };
        let clean = properness_probe(&BaseOracle::new(cone.clone(), OmaxOptions::default()), 1, &budget).unwrap();
        let none = matches!(clean, ProbeResult::NoneFound { .. });

        let y0 = VElement::projection(&s, 1).unwrap().sub(&VElement::projection(&s, 2).unwrap());
        let planted = cone.with_extra(&[y0.clone(), y0.scale(-1.0)]).unwrap();
        let found = properness_probe(&BaseOracle::new(planted, OmaxOptions::default()), 1, &ProbeBudget { directions: 200, seed: 1, ..ProbeBudget::default() }).unwrap();
        let err = match &found {
            ProbeResult::LinealityFound { direction, .. } => line_angle(direction, &y0.to_level()),
            _ => f64::INFINITY,
        };
        ok &= none && err <= 1e-3;
        notes.push(format!("d={d}: clean {} after {} probes, planted direction error {err:.1e}", if none { "NoneFound" } else { "LinealityFound" }, clean.probes()));
    }
    verdict(ok, notes.join("; "))
}

fn criterion_4_lemma() -> Outcome_ {
    let mut rng = Rng64::new(2024);
    let mut agree = 0;
    for k in 0..200 {
        let n = 2 + k % 3;
        let rank = 1 + rng.below(n - 1);
        let q = rng.complex_matrix(n, n).qr().q();
        let v = q.columns(0, rank).into_owned();
        let p = &v * v.adjoint();
        let t = rng.hermitian(n);
        let eps = 0.05 + 0.2 * rng.uniform();
        let direct = min_eigenvalue(&(v.adjoint() * (&t + &p * c(eps, 0.0)) * &v)) > 0.0;
        let lemma = matches!(lemma_compression_witness(&p, &t, eps, T_MAX).unwrap(), LemmaVerdict::Witness { .. });
        agree += usize::from(direct == lemma);
    }
    verdict(agree == 200, format!("{agree}/200 agree"))
}

fn criterion_5_sic() -> Outcome_ {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2, 3, 4] {
        match sic_search(d, 20, 2_000, 0) {
            Ok(inst) => {
                let r = verify_instance(&inst, 1e-8).unwrap();
                ok &= inst.max_overlap_error <= 1e-6 && r.passed && r.trace_error <= 1e-8 && r.pair_trace_error <= 1e-8;
                notes.push(format!("d={d}: overlap {:.1e}, verify {}", inst.max_overlap_error, r.passed));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("d={d}: {e}"));
            }
        }
    }
    verdict(ok, notes.join("; "))
}

fn criterion_6_mub() -> Outcome_ {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2, 3, 5, 7] {
        let inst = mub_generate(d).unwrap();
        let r = verify_instance(&inst, 1e-10).unwrap();
        // τ(P_a^x P_b^y P_a^x) = 1/d² checked directly on two unbiased bases
        let (a, b) = (&inst.projections[0], &inst.projections[d]);
        let tau = (a * b * a).trace().re / d as f64;
        let direct = (tau - 1.0 / (d * d) as f64).abs();
        ok &= r.passed && r.pair_trace_error <= 1e-10 && direct <= 1e-10;
        notes.push(format!("d={d}: verify {}, τ error {direct:.1e}", r.passed));
    }
    verdict(ok, notes.join("; "))
}

fn criterion_7_pi() -> Outcome_ {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2, 3] {
        let s = sic(d);
        let inst = sic_search(d, 20, 2_000, 0).unwrap();
        let good = pi_positivity_check(&s, &inst, &t_star_seq(d), 5, 1e-9).unwrap();
        let bad = pi_positivity_check(&s, &inst, &TSequence::affine(0.01, 0.01).unwrap(), 5, 1e-9).unwrap();
        ok &= good.passed && good.min_margin >= -1e-9 && bad.violations > 0;
        notes.push(format!("d={d}: min eigenvalue {:.1e}, t=0.01 violations {}", good.min_margin, bad.violations));
    }
    verdict(ok, notes.join("; "))
}

fn recombination_error(o: &BaseOracle, q: &Query, blocks: &[CMat], pads: &[f64]) -> f64 {
    let mut sum = HermLevel::zero(o.space(), q.level());
    for (g, b) in o.cone.generators.iter().zip(blocks) {
        sum = sum.add(&HermLevel::kron_scalar(b, g)).unwrap();
    }
    for (p, &t) in q.pads.iter().zip(pads) {
        sum = sum.axpy(-t, p).unwrap();
    }
    let target = q.shifted_target();
    sum.sub(&target).unwrap().norm() / (1.0 + target.norm())
}

fn criterion_8_omax() -> Outcome_ {
    let s = sic(2);
    let o = BaseOracle::new(build_initial_cone(&s, &t_star_seq(2), 3).unwrap(), OmaxOptions::default());
    let mut rng = Rng64::new(88);
    let (mut inside, mut worst, mut unvalidated) = (0, 0.0f64, 0);
    for k in 0..100 {
        let n = 1 + k % 4;
        let mut x = HermLevel::zero(&s, n);
        for _ in 0..3 {
            let g = &o.cone.generators[rng.below(o.cone.len())];
            let rank = 1 + rng.below(n);
            x = x.add(&HermLevel::kron_scalar(&rng.psd(n, rank), g)).unwrap();
        }
        let q = Query::plain(x, 1e-6);
        let r = o.query(&q).unwrap();
        if r.is_outside() && !o.validate(&q, &r) {
            unvalidated += 1;
        }
        if let (Verdict::Inside, Certificate::OmaxBlocks { blocks, pad_weights }) = (&r.verdict, &r.certificate) {
            let b: Vec<CMat> = blocks.iter().map(|m| m.0.clone()).collect();
            worst = worst.max(recombination_error(&o, &q, &b, pad_weights));
            inside += usize::from(o.validate(&q, &r));
        } else if let (Verdict::Inside, Certificate::ConeCoeffs { coeffs, pad_weights }) = (&r.verdict, &r.certificate) {
            let b: Vec<CMat> = coeffs.iter().map(|&w| CMat::from_element(1, 1, c(w, 0.0))).collect();
            worst = worst.max(recombination_error(&o, &q, &b, pad_weights));
            inside += usize::from(o.validate(&q, &r));
        }
    }
    let mut outside = 0;
    for k in 0..20 {
        let n = 1 + k % 4;
        let base = HermLevel::unit(&s, n).add(&HermLevel::new(&s, &(0..s.dim).map(|_| rng.hermitian(n).map(|z| z * 0.1)).collect::<Vec<_>>()).unwrap()).unwrap();
        let v = rng.unit_vector(n);
        let vv = CMat::from_fn(n, n, |i, j| v[i] * v[j].conj());
        let shift = 2.0 * (1.0 + base.norm());
        let x = base.sub(&HermLevel::kron_scalar(&vv, &VElement::unit(&s)).scale(shift)).unwrap();
        let q = Query::plain(x, 1e-6);
        let r = o.query(&q).unwrap();
        if r.is_outside() {
            if o.validate(&q, &r) {
                outside += 1;
            } else {
                unvalidated += 1;
            }
        }
    }
    verdict(
        inside == 100 && worst <= 1e-7 && outside == 20 && unvalidated == 0,
        format!("{inside}/100 planted members certified (worst recombination {worst:.1e}), {outside}/20 non-members separated, {unvalidated} unvalidated Outside"),
    )
}

fn pull_back(s: &SpaceRef, o: &ConcreteOracle, n: usize, m: &CMat) -> HermLevel {
    let d = s.d;
    let cols: Vec<Vec<f64>> = o
        .images()
        .iter()
        .map(|p| {
            let mut v = Vec::new();
            herm_coords(p, &mut v);
            v
        })
        .collect();
    let inv = nalgebra::DMatrix::from_fn(d * d, d * d, |i, j| cols[j][i]).try_inverse().unwrap();
    let mut blocks = vec![CMat::zeros(n, n); d * d];
    for i in 0..n {
        for j in 0..n {
            let sub = CMat::from_fn(d, d, |a, b| m[(i * d + a, j * d + b)]);
            let herm = (&sub + sub.adjoint()).map(|z| z * 0.5);
            let anti = (&sub - sub.adjoint()).map(|z| z * c(0.0, -0.5));
            for (part, w) in [(herm, c(1.0, 0.0)), (anti, c(0.0, 1.0))] {
                let mut v = Vec::new();
                herm_coords(&part, &mut v);
                let coeffs = &inv * nalgebra::DVector::from_vec(v);
                for k in 0..d * d {
                    blocks[k][(i, j)] += w * coeffs[k];
                }
            }
        }
    }
    HermLevel::new(s, &blocks).unwrap()
}

fn planted(rng: &mut Rng64, dim: usize, negative: Option<f64>) -> CMat {
    let q = rng.complex_matrix(dim, dim).qr().q();
    let mut m = CMat::zeros(dim, dim);
    for k in 0..dim {
        let lam = match negative {
            Some(neg) if k == 0 => -neg,
            _ => 0.2 + rng.uniform(),
        };
        let v = q.column(k);
        m += (&v * v.adjoint()).map(|z| z * lam);
    }
    m
}

fn criterion_9_dmin() -> Outcome_ {
    let (mut refuted, mut false_refutations, mut total) = (0, 0, 0);
    for d in [2, 3] {
        let s = sic(d);
        let inst = sic_search(d, 20, 2_000, 0).unwrap();
        let o = ConcreteOracle::new(&s, &inst).unwrap();
        let n = d + 1;
        let mut rng = Rng64::new(900 + d as u64);
        for trial in 0..25u64 {
            let budget = SearchBudget { seed: trial, ..SearchBudget::default() };
            let neg = 0.05 + 0.45 * rng.uniform();
            let bad = planted(&mut rng, n * d, Some(neg));
            let x = pull_back(&s, &o, n, &bad);
            total += 1;
            if let DminOutcome::Refutation { cert } = dmin_refute(&o, &x, 0.0, &budget).unwrap() {
                let a = kron(&cert.alpha.0, &opsys::numerics::linalg::identity(d));
                if validate_compression(&o, &x, 0.0, &cert) && min_eigenvalue(&(a.adjoint() * &bad * &a)) < 0.0 {
                    refuted += 1;
                }
            }
            let good = pull_back(&s, &o, n, &planted(&mut rng, n * d, None));
            if matches!(dmin_refute(&o, &good, 0.0, &budget).unwrap(), DminOutcome::Refutation { .. }) {
                false_refutations += 1;
            }
        }
    }
    verdict(refuted >= 48 && false_refutations == 0, format!("{refuted}/{total} refuted, {false_refutations} false refutations"))
}

const GOLDEN: &str = include_str!("golden/iterate_sic_d2_verdicts.json");

/// Verdict fields of an iteration report, without certificates or timings.
fn verdict_summary(r: &IterationReport) -> Value {
    serde_json::json!({
        "stages_completed": r.stages_completed,
        "outcome": r.outcome,
        "stages": r.stages.iter().map(|s| serde_json::json!({
            "index": s.index,
            "step": s.step,
            "probe": match &s.probe { ProbeResult::NoneFound { probes, .. } => format!("NoneFound({probes})"), ProbeResult::LinealityFound { probes, .. } => format!("LinealityFound({probes})") },
            "ledger_size": s.ledger_size,
            "recertified": s.recertified,
            "nesting_failures": s.nesting_failures,
            "relations": s.relations.iter().map(|x| serde_json::json!([x.p, x.x, x.holds])).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "ledger": r.ledger.iter().map(|e| serde_json::json!([e.label, e.stage, e.verdicts])).collect::<Vec<_>>(),
        "limit_verdicts": r.limit_verdicts.iter().map(|l| serde_json::json!([l.label, l.verdict, l.stage])).collect::<Vec<_>>(),
    })
}

fn criterion_10_iteration() -> Outcome_ {
    let args = ["opsys", "iterate", "--kind", "sic", "-d", "2", "--t0", "8.07", "--slope", "1", "--nmax", "5", "--stages", "6", "--seed", "7"];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(args, &mut out, &mut err);
    if code != EXIT_OK {
        return verdict(false, format!("iterate exited {code}: {}", String::from_utf8_lossy(&err)));
    }
    let envelope: Value = serde_json::from_slice(&out).unwrap();
    let report: IterationReport = serde_json::from_value(envelope["result"].clone()).unwrap();
    let probes_clean = report.stages.len() == 7 && report.all_probes_clean();
    let completed = report.outcome == Outcome::Completed && report.stages_completed == 6;
    let nesting = report.nesting_holds();
    let inst: QuantumInstance = sic_search(2, 20, 2_000, 0).unwrap();
    let sound = soundness_check(&report, &inst).unwrap();
    let golden: Value = serde_json::from_str(GOLDEN).unwrap();
    let matches_golden = verdict_summary(&report) == golden;
    verdict(
        completed && probes_clean && nesting && sound.passed && sound.violations == 0 && matches_golden,
        format!(
            "{} stages, probes clean {probes_clean}, nesting {nesting}, soundness {}/{} ({} violations), golden match {matches_golden}",
            report.stages_completed,
            sound.checked - sound.violations,
            sound.checked,
            sound.violations
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, Duration, fn() -> Outcome_); 10] = [
        ("Gram identities", Duration::from_secs(1), criterion_1_gram),
        ("threshold positivity", Duration::from_secs(30), criterion_2_thresholds),
        ("properness", Duration::from_secs(120), criterion_3_properness),
        ("compression-lemma oracle equivalence", Duration::from_secs(10), criterion_4_lemma),
        ("SIC instances", Duration::from_secs(120), criterion_5_sic),
        ("MUB instances", Duration::from_secs(5), criterion_6_mub),
        ("π-positivity", Duration::from_secs(10), criterion_7_pi),
        ("OMAX certificates", Duration::from_secs(180), criterion_8_omax),
        ("d-min refutation", Duration::from_secs(120), criterion_9_dmin),
        ("iteration soundness", Duration::from_secs(600), criterion_10_iteration),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let passed = r.passed && in_time;
        println!(
            "{} criterion {:>2} {name}: {} [{:.2}s, limit {}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            r.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        if !passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
