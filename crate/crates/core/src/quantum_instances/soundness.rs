use serde::{Deserialize, Serialize};

use super::concrete::ConcreteOracle;
use super::instance::QuantumInstance;
use crate::error::{Error, Result};
use crate::iterate::IterationReport;
use crate::numerics::eig::min_eigenvalue;
use crate::opsys_core::{build_space, HermLevel, SpaceKind};

pub const SOUNDNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementSoundness {
    pub id: usize,
    pub label: String,
    pub stage: usize,
    pub level: usize,
    /// `λ_min(π_n(x + ε·unit))`.
    pub min_eigenvalue: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub kind: SpaceKind,
    pub d: usize,
    pub checked: usize,
    pub violations: usize,
    pub elements: Vec<ElementSoundness>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

/// `λ_min(π_n(x + ε·unit)) ≥ −tol·(1 + ‖x‖)` for one element.
pub fn element_soundness(oracle: &ConcreteOracle, x: &HermLevel, eps: f64) -> Result<(f64, f64)> {
    let unit = HermLevel::unit(&x.space, x.n);
    let shifted = x.axpy(eps, &unit)?;
    let m = min_eigenvalue(&oracle.image(&shifted));
    Ok((m, -SOUNDNESS_TOL * (1.0 + x.norm())))
}

/// Maps every ledger element with an Inside verdict through the inflated
/// concrete map and flags the ones whose image is not PSD.
pub fn soundness_check(report: &IterationReport, inst: &QuantumInstance) -> Result<SoundnessReport> {
    let cfg = &report.config;
    if cfg.kind != inst.kind || cfg.d != inst.d {
        return Err(Error::InvalidInput(format!(
            "iteration is {:?} d={} but the instance is {:?} d={}",
            cfg.kind, cfg.d, inst.kind, inst.d
        )));
    }
    let space = build_space(cfg.kind, cfg.d)?;
    let oracle = ConcreteOracle::new(&space, inst)?;
    let mut elements = Vec::new();
    for entry in report.ledger.iter().filter(|e| e.ever_inside()) {
        let (m, threshold) = element_soundness(&oracle, &entry.element, entry.eps)?;
        elements.push(ElementSoundness {
            id: entry.id,
            label: entry.label.clone(),
            stage: entry.stage,
            level: entry.element.n,
            min_eigenvalue: m,
            threshold,
            passed: m >= threshold,
        });
    }
    let violations = elements.iter().filter(|e| !e.passed).count();
    let mut warnings = Vec::new();
    if elements.is_empty() {
        warnings.push("the ledger holds no Inside-certified element; the check is vacuous".into());
    }
    Ok(SoundnessReport {
        kind: cfg.kind,
        d: cfg.d,
        checked: elements.len(),
        violations,
        elements,
        warnings,
        passed: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_engine::{ProbeBudget, TSequence, Verdict};
    use crate::iterate::{run_iteration_with, IterationConfig, LedgerEntry};
    use crate::quantum_instances::sic_search;

    fn short_report() -> IterationReport {
        let mut cfg = IterationConfig::new(SpaceKind::Sic, 2, TSequence::affine(8.07, 1.0).unwrap(), 2, 2, 5);
        cfg.probe = ProbeBudget { directions: 2, ascent_steps: 5, ascent_starts: 1, seed: 5, ..ProbeBudget::default() };
        cfg.relation_samples = 1;
        run_iteration_with(&cfg).unwrap().report
    }

    #[test]
    fn ledger_is_sound_and_planted_entry_is_flagged() {
        let inst = sic_search(2, 20, 2_000, 0).unwrap();
        let mut rep = short_report();
        let ok = soundness_check(&rep, &inst).unwrap();
        assert!(ok.passed, "{:?}", ok.elements.iter().filter(|e| !e.passed).collect::<Vec<_>>());
        assert_eq!(ok.checked, rep.ledger.len());

        let template = rep.ledger[0].clone();
        let space = build_space(SpaceKind::Sic, 2).unwrap();
        rep.ledger.push(LedgerEntry {
            id: 9_999,
            label: "planted".into(),
            element: HermLevel::unit(&space, 1).scale(-1.0),
            verdicts: vec![Verdict::Inside],
            ..template
        });
        let bad = soundness_check(&rep, &inst).unwrap();
        assert!(!bad.passed);
        assert_eq!(bad.violations, 1);
        assert_eq!(bad.elements.iter().find(|e| !e.passed).unwrap().id, 9_999);
    }

    #[test]
    fn empty_ledger_passes_with_warning() {
        let inst = sic_search(2, 20, 2_000, 0).unwrap();
        let mut rep = short_report();
        rep.ledger.clear();
        let r = soundness_check(&rep, &inst).unwrap();
        assert!(r.passed);
        assert_eq!(r.checked, 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let rep = short_report();
        let inst = crate::quantum_instances::mub_generate(2).unwrap();
        assert!(matches!(soundness_check(&rep, &inst), Err(Error::InvalidInput(_))));
    }
}
