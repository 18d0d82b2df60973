use serde::Serialize;

use super::instance::QuantumInstance;
use crate::error::{Error, Result};
use crate::numerics::eig::eigenvalues;
use crate::numerics::linalg::{frob, identity, CMat};
use crate::opsys_core::SpaceKind;

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub kind: SpaceKind,
    pub d: usize,
    pub tol: f64,
    /// `‖Σ P_i − dI‖` (SIC) or the worst `‖Σ_a P_a^x − I‖` (MUB).
    pub resolution_error: f64,
    /// Worst `‖P P' P − c·P‖` over constrained pairs.
    pub relation_error: f64,
    /// Worst `|τ(P) − 1/d|` with `τ = Tr/d`.
    pub trace_error: f64,
    /// Worst deviation of `τ(P_i P_j)` from `λ/d` (SIC) or of
    /// `τ(P_a^x P_b^y P_a^x)` from `1/d²` (MUB).
    pub pair_trace_error: f64,
    /// Worst distance of a spectrum from `(1, 0, …, 0)`.
    pub rank_one_error: f64,
    pub passed: bool,
}

fn ntrace(m: &CMat) -> f64 {
    m.trace().re / m.nrows() as f64
}

pub fn verify_instance(inst: &QuantumInstance, tol: f64) -> Result<VerificationReport> {
    let d = inst.d;
    let count = match inst.kind {
        SpaceKind::Sic => d * d,
        SpaceKind::Mub => d * (d + 1),
    };
    if inst.projections.len() != count
        || inst.projections.iter().any(|p| p.nrows() != d || p.ncols() != d)
    {
        return Err(Error::InvalidInput(format!(
            "{} instance needs {count} projections of size {d}",
            inst.kind
        )));
    }
    let ps = &inst.projections;
    let c = inst.constant();
    let df = d as f64;

    let resolution_error = match inst.kind {
        SpaceKind::Sic => {
            let sum = ps.iter().fold(CMat::zeros(d, d), |acc, p| acc + p);
            frob(&(sum - identity(d).map(|z| z * df)))
        }
        SpaceKind::Mub => ps
            .chunks(d)
            .map(|basis| {
                let sum = basis.iter().fold(CMat::zeros(d, d), |acc, p| acc + p);
                frob(&(sum - identity(d)))
            })
            .fold(0.0, f64::max),
    };

    let constrained = |i: usize, j: usize| match inst.kind {
        SpaceKind::Sic => i != j,
        SpaceKind::Mub => i / d != j / d,
    };
    let mut relation_error = 0.0f64;
    let mut pair_trace_error = 0.0f64;
    for i in 0..ps.len() {
        for j in 0..ps.len() {
            if !constrained(i, j) {
                continue;
            }
            let pqp = &ps[i] * &ps[j] * &ps[i];
            relation_error = relation_error.max(frob(&(&pqp - ps[i].map(|z| z * c))));
            let pair = match inst.kind {
                SpaceKind::Sic => (ntrace(&(&ps[i] * &ps[j])) - c / df).abs(),
                SpaceKind::Mub => (ntrace(&pqp) - 1.0 / (df * df)).abs(),
            };
            pair_trace_error = pair_trace_error.max(pair);
        }
    }
    let trace_error = ps
        .iter()
        .map(|p| (ntrace(p) - 1.0 / df).abs())
        .fold(0.0, f64::max);
    let rank_one_error = ps
        .iter()
        .map(|p| {
            let ev = eigenvalues(p);
            let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let rest = ev.iter().map(|x| x.abs()).sum::<f64>() - top.abs();
            (top - 1.0).abs().max(rest)
        })
        .fold(0.0, f64::max);
    let passed = resolution_error <= tol
        && relation_error <= tol
        && trace_error <= tol
        && pair_trace_error <= tol;
    Ok(VerificationReport {
        kind: inst.kind,
        d,
        tol,
        resolution_error,
        relation_error,
        trace_error,
        pair_trace_error,
        rank_one_error,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_instances::{mub_generate, sic_search};
    use num_complex::Complex64;

    #[test]
    fn qubit_sic_traces() {
        let s = sic_search(2, 20, 2_000, 0).unwrap();
        let r = verify_instance(&s, 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
        let p = &s.projections;
        assert!((ntrace(&p[0]) - 0.5).abs() < 1e-12);
        assert!((ntrace(&(&p[0] * &p[1])) - 1.0 / 6.0).abs() < 1e-6);
        assert!(r.rank_one_error < 1e-8);
    }

    #[test]
    fn qutrit_mub_traces() {
        let m = mub_generate(3).unwrap();
        let r = verify_instance(&m, 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        let p = &m.projections;
        assert!((ntrace(&(&p[0] * &p[3] * &p[0])) - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_vector_fails_relation() {
        let s = sic_search(2, 20, 2_000, 0).unwrap();
        let mut v = s.vectors.clone();
        v[0][1] += Complex64::new(1e-2, 0.0);
        let bad = QuantumInstance::from_vectors(s.kind, 2, v, None).unwrap();
        let r = verify_instance(&bad, 1e-6).unwrap();
        assert!(!r.passed);
        assert!(r.relation_error > 1e-4 && r.relation_error < 1e-1, "{}", r.relation_error);
    }

    #[test]
    fn relation_and_overlap_checks_agree() {
        for d in [2, 3] {
            let s = sic_search(d, 20, 2_000, 1).unwrap();
            let r = verify_instance(&s, 1e-6).unwrap();
            assert_eq!(r.passed, s.max_overlap_error <= 1e-6);
        }
    }
}
