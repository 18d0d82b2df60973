use serde::Serialize;

use super::concrete::ConcreteOracle;
use super::instance::QuantumInstance;
use crate::cone_engine::cone::initial_generator_specs;
use crate::cone_engine::TSequence;
use crate::error::{Error, Result};
use crate::numerics::eig::min_eigenvalue;
use crate::numerics::linalg::{c, CMat};
use crate::opsys_core::{make_generator, GeneratorSpec, SpaceRef, VElement};

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorImage {
    pub spec: GeneratorSpec,
    /// `λ_min(π(g))`.
    pub margin: f64,
    /// The `t` the generator was built with, for relation generators.
    pub t_used: Option<f64>,
    /// Smallest `t` making the image PSD; `None` when no `t ≤ 2⁴⁰` does.
    pub t_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PiPositivityReport {
    pub kind: crate::opsys_core::SpaceKind,
    pub d: usize,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub tol: f64,
    pub generator_count: usize,
    pub min_margin: f64,
    pub violations: usize,
    pub generators: Vec<GeneratorImage>,
    pub passed: bool,
}

/// Smallest `t ≥ 0` with `a + t·q ⪰ 0`, by doubling then bisection.
pub fn minimal_t(a: &CMat, q: &CMat) -> Option<f64> {
    let at = |t: f64| min_eigenvalue(&(a + q * c(t, 0.0)));
    if at(0.0) >= 0.0 {
        return Some(0.0);
    }
    let mut hi = 1.0;
    while at(hi) < 0.0 {
        hi *= 2.0;
        if hi > 2f64.powi(40) {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Some(hi)
}

fn padded_label(space: &SpaceRef, spec: &GeneratorSpec) -> Option<(usize, f64)> {
    let d = space.d;
    match *spec {
        GeneratorSpec::XPlus { j, t, .. } | GeneratorSpec::XMinus { j, t, .. } => Some((j, t)),
        GeneratorSpec::YPlus { y, j, t, .. } | GeneratorSpec::YMinus { y, j, t, .. } => {
            Some(((y - 1) * d + j, t))
        }
        _ => None,
    }
}

/// Maps every initial generator through `π` and checks `λ_min ≥ −tol`.
pub fn pi_positivity_check(
    space: &SpaceRef,
    inst: &QuantumInstance,
    tseq: &TSequence,
    n_max: usize,
    tol: f64,
) -> Result<PiPositivityReport> {
    if space.kind != inst.kind || space.d != inst.d {
        return Err(Error::InvalidInput(format!(
            "{} space does not match a {} instance",
            space.kind, inst.kind
        )));
    }
    tseq.validate()?;
    let oracle = ConcreteOracle::new(space, inst)?;
    let specs = initial_generator_specs(space, tseq, n_max);
    let mut generators = Vec::with_capacity(specs.len());
    for spec in specs {
        let g = make_generator(space, &spec)?;
        let img = oracle.image(&g.to_level());
        let margin = min_eigenvalue(&img);
        let (t_used, t_min) = match padded_label(space, &spec) {
            Some((k, t)) => {
                let q = oracle.image(&VElement::projection_perp(space, k)?.to_level());
                let a = &img - &q * c(t, 0.0);
                (Some(t), minimal_t(&a, &q))
            }
            None => (None, None),
        };
        generators.push(GeneratorImage {
            spec,
            margin,
            t_used,
            t_min,
        });
    }
    let min_margin = generators.iter().map(|g| g.margin).fold(f64::INFINITY, f64::min);
    let violations = generators.iter().filter(|g| g.margin < -tol).count();
    Ok(PiPositivityReport {
        kind: space.kind,
        d: space.d,
        n_max,
        tol,
        generator_count: generators.len(),
        min_margin,
        violations,
        generators,
        passed: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_engine::t_thresholds;
    use crate::opsys_core::{build_mub_space, build_sic_space};
    use crate::quantum_instances::{mub_generate, sic_search};

    #[test]
    fn threshold_sequence_is_positive() {
        let s = build_sic_space(2).unwrap();
        let inst = sic_search(2, 20, 2_000, 0).unwrap();
        let t_star = t_thresholds(2).unwrap().t_star;
        let r = pi_positivity_check(&s, &inst, &TSequence::affine(t_star, 1.0).unwrap(), 5, 1e-9).unwrap();
        assert!(r.passed);
        for g in &r.generators {
            if let (Some(t), Some(tm)) = (g.t_used, g.t_min) {
                assert!(g.margin > 0.0 && t > tm, "{g:?}");
            }
        }
    }

    #[test]
    fn tiny_t_violates() {
        let s = build_sic_space(2).unwrap();
        let inst = sic_search(2, 20, 2_000, 0).unwrap();
        let r = pi_positivity_check(&s, &inst, &TSequence::affine(0.01, 0.01).unwrap(), 3, 1e-9).unwrap();
        assert!(!r.passed && r.violations > 0);
        let perp = r
            .generators
            .iter()
            .filter(|g| matches!(g.spec, GeneratorSpec::BasisProjPerp(_)));
        assert!(perp.clone().count() == 4 && perp.into_iter().all(|g| g.margin > -1e-12));
    }

    #[test]
    fn mub_generators_positive() {
        let s = build_mub_space(3).unwrap();
        let inst = mub_generate(3).unwrap();
        let t_star = t_thresholds(3).unwrap().t_star;
        let r = pi_positivity_check(&s, &inst, &TSequence::affine(t_star, 1.0).unwrap(), 2, 1e-9).unwrap();
        assert!(r.passed, "{}", r.min_margin);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let s = build_mub_space(2).unwrap();
        let inst = sic_search(2, 4, 2_000, 0).unwrap();
        let t = TSequence::affine(9.0, 1.0).unwrap();
        assert!(matches!(pi_positivity_check(&s, &inst, &t, 2, 1e-9), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn minimal_t_closed_form() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.1, 0.0), c(-1.0, 0.0)]));
        let q = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        assert!((minimal_t(&a, &q).unwrap() - 1.0).abs() < 1e-10);
    }
}
