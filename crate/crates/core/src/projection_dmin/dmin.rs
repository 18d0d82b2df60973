use rayon::prelude::*;
use serde::Serialize;

use crate::cone_engine::{ConeOracle, MembershipResult, Query, Verdict};
use crate::error::{Error, Result};
use crate::json::JMat;
use crate::numerics::linalg::{c, frob, CMat};
use crate::opsys_core::HermLevel;
use crate::rng::Rng64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 32,
            steps: 200,
            seed: 0,
        }
    }
}

/// `α` with `‖α‖_F = 1` such that `α*(x + ε(Iₙ⊗e))α` is Outside at level d.
#[derive(Debug, Clone, Serialize)]
pub struct CompressionCert {
    pub alpha: JMat,
    pub compressed: HermLevel,
    pub violation: MembershipResult,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result")]
pub enum DminOutcome {
    Refutation { cert: Box<CompressionCert> },
    NoneFound { tried: usize },
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result")]
pub enum SampleOutcome {
    SurvivedSamples { count: usize },
    Refutation { cert: Box<CompressionCert> },
}

/// Compresses a query by `α`: target `α*(target + ε·unit)α`, pads
/// `α* pad α`, slack 0.
pub fn compressed_query(q: &Query, alpha: &CMat) -> Result<Query> {
    q.check()?;
    Ok(Query {
        target: q.shifted_target().compress(alpha)?,
        pads: q
            .pads
            .iter()
            .map(|p| p.compress(alpha))
            .collect::<Result<_>>()?,
        eps: 0.0,
    })
}

fn normalized(a: CMat) -> CMat {
    let f = frob(&a);
    a.map(|z| z / f)
}

/// Column selections `[e_{i_1} … e_{i_d}]/√d`, or `[Iₙ 0]/√n` when `n ≤ d`.
pub fn axis_compressions(n: usize, d: usize) -> Vec<CMat> {
    const MAX_SUBSETS: usize = 256;
    if n <= d {
        return vec![normalized(CMat::from_fn(n, d, |i, j| c((i == j) as u8 as f64, 0.0)))];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        out.push(normalized(CMat::from_fn(n, d, |i, j| c((idx[j] == i) as u8 as f64, 0.0))));
        if out.len() >= MAX_SUBSETS {
            break;
        }
        let Some(pos) = (0..d).rev().find(|&k| idx[k] < n - d + k) else {
            break;
        };
        idx[pos] += 1;
        for k in pos + 1..d {
            idx[k] = idx[k - 1] + 1;
        }
    }
    out
}

fn check_inputs(oracle: &dyn ConeOracle, x: &HermLevel, eps: f64) -> Result<HermLevel> {
    if !x.space.same_as(oracle.space()) {
        return Err(Error::DimensionMismatch("element and oracle live in different spaces".into()));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    x.axpy(eps, &HermLevel::unit(&x.space, x.n))
}

/// Queries the compression and keeps it only if the oracle returns a
/// validated Outside.
fn try_alpha(oracle: &dyn ConeOracle, xe: &HermLevel, alpha: &CMat) -> Result<Option<CompressionCert>> {
    let compressed = xe.compress(alpha)?;
    let q = Query::plain(compressed.clone(), 0.0);
    let r = oracle.query(&q)?;
    if r.is_outside() && oracle.validate(&q, &r) {
        return Ok(Some(CompressionCert {
            alpha: JMat(alpha.clone()),
            compressed,
            violation: r,
        }));
    }
    Ok(None)
}

/// Independent re-check of a compression certificate for `x` at slack ε.
pub fn validate_compression(oracle: &dyn ConeOracle, x: &HermLevel, eps: f64, cert: &CompressionCert) -> bool {
    let alpha = &cert.alpha.0;
    if alpha.nrows() != x.n || alpha.ncols() != oracle.space().d || (frob(alpha) - 1.0).abs() > 1e-9 {
        return false;
    }
    let Ok(xe) = check_inputs(oracle, x, eps) else {
        return false;
    };
    let Ok(expected) = xe.compress(alpha) else {
        return false;
    };
    let Ok(diff) = expected.sub(&cert.compressed) else {
        return false;
    };
    let q = Query::plain(cert.compressed.clone(), 0.0);
    diff.norm() <= 1e-9 * (1.0 + expected.norm())
        && cert.violation.verdict == Verdict::Outside
        && oracle.validate(&q, &cert.violation)
}

/// `∇_α margin(α* x α) = 2 Σ_k X_k α g_k`.
fn alpha_gradient(xe: &HermLevel, alpha: &CMat, g: &HermLevel) -> CMat {
    let mut grad = CMat::zeros(alpha.nrows(), alpha.ncols());
    for (xk, gk) in xe.blocks().iter().zip(g.blocks()) {
        grad += xk * alpha * gk;
    }
    grad.map(|z| z * 2.0)
}

const DESCENT_STOP: f64 = 1e-6;

/// Local descent of the compressed margin from `alpha`; returns the final
/// point and its margin.
fn descend(oracle: &dyn ConeOracle, xe: &HermLevel, alpha: CMat, steps: usize) -> Result<(CMat, f64)> {
    let Some((mut m, mut g)) = oracle.margin_supergradient(&xe.compress(&alpha)?) else {
        return Ok((alpha, f64::INFINITY));
    };
    let mut alpha = alpha;
    let mut h = 0.5;
    let stop = -DESCENT_STOP * (1.0 + xe.norm());
    for _ in 0..steps {
        if m < stop || h < 1e-10 {
            break;
        }
        let grad = alpha_gradient(xe, &alpha, &g);
        let radial = alpha.dotc(&grad).re;
        let tangent = &grad - &alpha * c(radial, 0.0);
        let norm = frob(&tangent);
        if !(norm > 1e-14) {
            break;
        }
        let trial = normalized(&alpha - tangent * c(h / norm, 0.0));
        match oracle.margin_supergradient(&xe.compress(&trial)?) {
            Some((mt, gt)) if mt < m => {
                alpha = trial;
                m = mt;
                g = gt;
                h = (h * 1.5).min(1.0);
            }
            _ => h *= 0.5,
        }
    }
    Ok((alpha, m))
}

fn random_alpha(n: usize, d: usize, rng: &mut Rng64) -> CMat {
    normalized(rng.complex_matrix(n, d))
}

/// Searches compressions `α ∈ M_{n,d}` for a validated Outside image at
/// level d: axis-aligned choices first, then seeded restarts of local
/// descent on the compressed margin.
pub fn dmin_refute(oracle_d: &dyn ConeOracle, x: &HermLevel, eps: f64, search: &SearchBudget) -> Result<DminOutcome> {
    let xe = check_inputs(oracle_d, x, eps)?;
    let d = oracle_d.space().d;
    let axes = axis_compressions(x.n, d);
    for alpha in &axes {
        if let Some(cert) = try_alpha(oracle_d, &xe, alpha)? {
            return Ok(DminOutcome::Refutation { cert: Box::new(cert) });
        }
    }
    let found: Vec<Option<CompressionCert>> = (0..search.restarts as u64)
        .into_par_iter()
        .map(|r| -> Result<Option<CompressionCert>> {
            let mut rng = Rng64::split(search.seed, r);
            let start = random_alpha(x.n, d, &mut rng);
            let (alpha, m) = descend(oracle_d, &xe, start, search.steps)?;
            if m.is_finite() && m >= 0.0 {
                return Ok(None);
            }
            try_alpha(oracle_d, &xe, &alpha)
        })
        .collect::<Result<_>>()?;
    Ok(match found.into_iter().flatten().next() {
        Some(cert) => DminOutcome::Refutation { cert: Box::new(cert) },
        None => DminOutcome::NoneFound {
            tried: axes.len() + search.restarts,
        },
    })
}

/// Tests all axis-aligned compressions and `samples` seeded random ones,
/// then descends from the worst sample. Survival is evidence only.
pub fn dmin_sampled_certify(
    oracle_d: &dyn ConeOracle,
    x: &HermLevel,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<SampleOutcome> {
    let xe = check_inputs(oracle_d, x, eps)?;
    let d = oracle_d.space().d;
    let axes = axis_compressions(x.n, d);
    for alpha in &axes {
        if let Some(cert) = try_alpha(oracle_d, &xe, alpha)? {
            return Ok(SampleOutcome::Refutation { cert: Box::new(cert) });
        }
    }
    let scored: Vec<(CMat, Option<f64>)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<(CMat, Option<f64>)> {
            let alpha = random_alpha(x.n, d, &mut Rng64::split(seed, i));
            let m = oracle_d.margin(&xe.compress(&alpha)?);
            Ok((alpha, m))
        })
        .collect::<Result<_>>()?;
    let mut worst: Option<(f64, &CMat)> = None;
    for (alpha, m) in &scored {
        let probe = match m {
            Some(m) => *m < 0.0,
            None => true,
        };
        if probe {
            if let Some(cert) = try_alpha(oracle_d, &xe, alpha)? {
                return Ok(SampleOutcome::Refutation { cert: Box::new(cert) });
            }
        }
        if let Some(m) = m {
            if worst.is_none_or(|(w, _)| *m < w) {
                worst = Some((*m, alpha));
            }
        }
    }
    if let Some((_, alpha)) = worst {
        let (alpha, m) = descend(oracle_d, &xe, alpha.clone(), SearchBudget::default().steps)?;
        if m < 0.0 {
            if let Some(cert) = try_alpha(oracle_d, &xe, &alpha)? {
                return Ok(SampleOutcome::Refutation { cert: Box::new(cert) });
            }
        }
    }
    Ok(SampleOutcome::SurvivedSamples {
        count: axes.len() + samples,
    })
}
