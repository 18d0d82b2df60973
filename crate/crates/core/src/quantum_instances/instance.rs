use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{c, outer, CMat};
use crate::opsys_core::SpaceKind;

/// Rank-one projections of a concrete SIC or MUB system in `M_d`.
///
/// SIC: `d²` vectors `φ_a`. MUB: `d(d+1)` vectors ordered basis-major, so
/// vector `(x−1)·d + (i−1)` is `φ_i^x`, matching the space's projection labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumInstance {
    pub kind: SpaceKind,
    pub d: usize,
    pub vectors: Vec<Vec<Complex64>>,
    pub projections: Vec<CMat>,
    pub max_overlap_error: f64,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    overlap_error: f64,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    d: usize,
    kind: SpaceKind,
    vectors: Vec<Vec<[f64; 2]>>,
    meta: Meta,
}

impl QuantumInstance {
    /// Normalizes the vectors, builds their projections and measures the
    /// overlap error against `1/(d+1)` (SIC) or `1/d` (MUB).
    pub fn from_vectors(
        kind: SpaceKind,
        d: usize,
        vectors: Vec<Vec<Complex64>>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let expected = match kind {
            SpaceKind::Sic => d * d,
            SpaceKind::Mub => d * (d + 1),
        };
        if d < 2 || vectors.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{kind} instance in dimension {d} needs {expected} vectors, got {}",
                vectors.len()
            )));
        }
        let mut normalized = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != d || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "vectors must be finite and of length {d}"
                )));
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidInput("zero vector in instance".into()));
            }
            normalized.push(v.into_iter().map(|z| z / norm).collect::<Vec<_>>());
        }
        let projections = normalized.iter().map(|v| outer(v)).collect();
        let max_overlap_error = overlap_error(kind, d, &normalized);
        Ok(Self {
            kind,
            d,
            vectors: normalized,
            projections,
            max_overlap_error,
            seed,
        })
    }

    /// `λ = 1/(d+1)` for SIC, `μ = 1/d` for MUB.
    pub fn constant(&self) -> f64 {
        match self.kind {
            SpaceKind::Sic => 1.0 / (self.d as f64 + 1.0),
            SpaceKind::Mub => 1.0 / self.d as f64,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let j = InstanceJson {
            d: self.d,
            kind: self.kind,
            vectors: self
                .vectors
                .iter()
                .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            meta: Meta {
                overlap_error: self.max_overlap_error,
                seed: self.seed,
            },
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    /// Loads an instance; the overlap error is recomputed, not trusted.
    pub fn from_json(s: &str) -> Result<Self> {
        let j: InstanceJson = serde_json::from_str(s)?;
        let vectors = j
            .vectors
            .into_iter()
            .map(|v| v.into_iter().map(|z| c(z[0], z[1])).collect())
            .collect();
        Self::from_vectors(j.kind, j.d, vectors, j.meta.seed)
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest deviation of `|⟨φ_a, φ_b⟩|²` from its target over the pairs the
/// system constrains.
pub fn overlap_error(kind: SpaceKind, d: usize, vectors: &[Vec<Complex64>]) -> f64 {
    let mut err = 0.0f64;
    for a in 0..vectors.len() {
        for b in a + 1..vectors.len() {
            let o = inner(&vectors[a], &vectors[b]).norm_sqr();
            let target = match kind {
                SpaceKind::Sic => 1.0 / (d as f64 + 1.0),
                SpaceKind::Mub if a / d == b / d => 0.0,
                SpaceKind::Mub => 1.0 / d as f64,
            };
            err = err.max((o - target).abs());
        }
    }
    err
}
