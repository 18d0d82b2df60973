use nalgebra::DMatrix;
use serde::Serialize;

use crate::opsys_core::{SpaceKind, SpaceRef, VElement};

/// The inner product on `V_h` fixed by its values on the basis.
#[derive(Debug, Clone)]
pub struct Gram {
    pub space: SpaceRef,
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

#[derive(Serialize)]
pub struct GramJson {
    pub kind: SpaceKind,
    pub d: usize,
    pub dim: usize,
    pub rank: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl Gram {
    pub fn inner(&self, a: &VElement, b: &VElement) -> f64 {
        let mut s = 0.0;
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                s += x * self.matrix[(i, j)] * y;
            }
        }
        s
    }

    pub fn norm_sq(&self, a: &VElement) -> f64 {
        self.inner(a, a)
    }

    pub fn to_json(&self) -> GramJson {
        GramJson {
            kind: self.space.kind,
            d: self.space.d,
            dim: self.space.dim,
            rank: self.rank,
            matrix: (0..self.matrix.nrows())
                .map(|i| self.matrix.row(i).iter().copied().collect())
                .collect(),
        }
    }
}

/// Normalized Hilbert–Schmidt values on the named projections:
/// SIC `⟨p_i, p_j⟩ = 1/d` or `λ/d`; MUB `⟨p_i^x, p_j^y⟩ = 1/d` on equal
/// labels, `0` within a basis, `1/d²` across bases.
pub fn gram_matrix(space: &SpaceRef) -> Gram {
    let d = space.d as f64;
    let dim = space.dim;
    let matrix = match space.kind {
        SpaceKind::Sic => {
            DMatrix::from_fn(
                dim,
                dim,
                |i, j| if i == j { 1.0 / d } else { space.constant / d },
            )
        }
        SpaceKind::Mub => {
            // basis: e, then p_i^x (i < d) grouped by x
            let group = |k: usize| (k - 1) / (space.d - 1);
            DMatrix::from_fn(dim, dim, |i, j| match (i, j) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 1.0 / d,
                _ if i == j => 1.0 / d,
                _ if group(i) == group(j) => 0.0,
                _ => 1.0 / (d * d),
            })
        }
    };
    let sv = matrix.clone().svd(false, false).singular_values;
    let rank = sv.iter().filter(|&&s| s > 1e-9).count();
    Gram {
        space: space.clone(),
        matrix,
        rank,
    }
}
