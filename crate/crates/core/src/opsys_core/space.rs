use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Sic,
    Mub,
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpaceKind::Sic => "sic",
            SpaceKind::Mub => "mub",
        })
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sic" => Ok(SpaceKind::Sic),
            "mub" => Ok(SpaceKind::Mub),
            other => Err(Error::InvalidInput(format!("unknown space kind '{other}'"))),
        }
    }
}

/// A finite-dimensional *-vector space with a self-adjoint basis, an order
/// unit `e`, and a family of named projection elements.
///
/// SIC kind: the basis is `p_1..p_{d²}` and `e = d⁻¹ Σ p_i`.
/// MUB kind: the basis is `e` followed by `p_i^x` for `i ≤ d−1`,
/// `x ≤ d+1`; the dependent labels are `p_d^x = e − Σ_{i<d} p_i^x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarSpace {
    pub kind: SpaceKind,
    pub d: usize,
    pub dim: usize,
    pub basis_labels: Vec<String>,
    pub unit_coeffs: Vec<f64>,
    /// λ = 1/(d+1) for SIC, μ = 1/d for MUB.
    pub constant: f64,
    proj_labels: Vec<String>,
    proj_coeffs: Vec<Vec<f64>>,
    /// MUB only: diagonal of the concrete `d²×d²` image of each basis element.
    model: Vec<Vec<f64>>,
}

pub type SpaceRef = Arc<StarSpace>;

pub fn build_space(kind: SpaceKind, d: usize) -> Result<SpaceRef> {
    match kind {
        SpaceKind::Sic => build_sic_space(d),
        SpaceKind::Mub => build_mub_space(d),
    }
}

pub fn build_sic_space(d: usize) -> Result<SpaceRef> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "d must be at least 2, got {d}"
        )));
    }
    let dim = d * d;
    let labels: Vec<String> = (1..=dim).map(|i| format!("p{i}")).collect();
    let proj_coeffs = (0..dim)
        .map(|i| {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            v
        })
        .collect();
    Ok(Arc::new(StarSpace {
        kind: SpaceKind::Sic,
        d,
        dim,
        basis_labels: labels.clone(),
        unit_coeffs: vec![1.0 / d as f64; dim],
        constant: 1.0 / (d as f64 + 1.0),
        proj_labels: labels,
        proj_coeffs,
        model: Vec::new(),
    }))
}

pub fn build_mub_space(d: usize) -> Result<SpaceRef> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "d must be at least 2, got {d}"
        )));
    }
    let dim = d * d;
    let mut basis_labels = vec!["e".to_string()];
    for x in 1..=d + 1 {
        for i in 1..d {
            basis_labels.push(format!("p{i}^{x}"));
        }
    }
    debug_assert_eq!(basis_labels.len(), dim);

    let mut unit_coeffs = vec![0.0; dim];
    unit_coeffs[0] = 1.0;

    let mut proj_labels = Vec::new();
    let mut proj_coeffs = Vec::new();
    for x in 1..=d + 1 {
        for i in 1..=d {
            proj_labels.push(format!("p{i}^{x}"));
            let mut v = vec![0.0; dim];
            if i < d {
                v[mub_coord(d, x, i)] = 1.0;
            } else {
                v[0] = 1.0;
                for i2 in 1..d {
                    v[mub_coord(d, x, i2)] = -1.0;
                }
            }
            proj_coeffs.push(v);
        }
    }

    // concrete model: p_i^x = (E_i ⊗ E_x) ⊕ 0 on C^{(d−1)(d+1)} ⊕ C, e = I
    let mut model = vec![vec![1.0; dim]];
    for x in 1..=d + 1 {
        for i in 1..d {
            let mut diag = vec![0.0; dim];
            diag[(i - 1) * (d + 1) + (x - 1)] = 1.0;
            model.push(diag);
        }
    }

    Ok(Arc::new(StarSpace {
        kind: SpaceKind::Mub,
        d,
        dim,
        basis_labels,
        unit_coeffs,
        constant: 1.0 / d as f64,
        proj_labels,
        proj_coeffs,
        model,
    }))
}

fn mub_coord(d: usize, x: usize, i: usize) -> usize {
    1 + (x - 1) * (d - 1) + (i - 1)
}

impl StarSpace {
    /// Number of named projections: `d²` for SIC, `d(d+1)` for MUB.
    pub fn num_projections(&self) -> usize {
        self.proj_coeffs.len()
    }

    /// Coefficients of the `k`-th named projection (1-based).
    pub fn projection(&self, k: usize) -> Result<&[f64]> {
        if k == 0 || k > self.proj_coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "projection index {k} outside 1..={}",
                self.proj_coeffs.len()
            )));
        }
        Ok(&self.proj_coeffs[k - 1])
    }

    pub fn projection_label(&self, k: usize) -> &str {
        &self.proj_labels[k - 1]
    }

    /// 1-based index of `p_i^x` in the projection list of a MUB space.
    pub fn mub_index(&self, x: usize, i: usize) -> Result<usize> {
        if self.kind != SpaceKind::Mub {
            return Err(Error::InvalidInput("mub_index on a SIC space".into()));
        }
        if x == 0 || x > self.d + 1 || i == 0 || i > self.d {
            return Err(Error::InvalidInput(format!(
                "no label p{i}^{x} for d={}",
                self.d
            )));
        }
        Ok((x - 1) * self.d + i)
    }

    /// Coefficients of `p_i^x` (MUB only).
    pub fn mub_label(&self, x: usize, i: usize) -> Result<&[f64]> {
        self.projection(self.mub_index(x, i)?)
    }

    /// Concrete diagonal image of an element in the MUB model.
    pub fn mub_model_diag(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if self.kind != SpaceKind::Mub {
            return Err(Error::InvalidInput(
                "the diagonal model exists for MUB spaces only".into(),
            ));
        }
        let mut out = vec![0.0; self.dim];
        for (c, diag) in coeffs.iter().zip(&self.model) {
            for (o, v) in out.iter_mut().zip(diag) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    pub fn same_as(&self, other: &StarSpace) -> bool {
        self.kind == other.kind && self.d == other.d
    }
}
