use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::space::{build_space, SpaceKind, SpaceRef};
use crate::error::{Error, Result};
use crate::numerics::linalg::{c, frob, CMat};

/// A self-adjoint element of `V` as real coordinates over the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct VElement {
    pub space: SpaceRef,
    pub coeffs: Vec<f64>,
}

impl VElement {
    pub fn new(space: &SpaceRef, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                space.dim
            )));
        }
        if coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericInput(
                "element has non-finite coefficients".into(),
            ));
        }
        Ok(Self {
            space: Arc::clone(space),
            coeffs,
        })
    }

    pub fn zero(space: &SpaceRef) -> Self {
        Self {
            space: Arc::clone(space),
            coeffs: vec![0.0; space.dim],
        }
    }

    pub fn unit(space: &SpaceRef) -> Self {
        Self {
            space: Arc::clone(space),
            coeffs: space.unit_coeffs.clone(),
        }
    }

    /// The `k`-th named projection (1-based).
    pub fn projection(space: &SpaceRef, k: usize) -> Result<Self> {
        Ok(Self {
            space: Arc::clone(space),
            coeffs: space.projection(k)?.to_vec(),
        })
    }

    /// `e − p_k`.
    pub fn projection_perp(space: &SpaceRef, k: usize) -> Result<Self> {
        Ok(Self::unit(space).sub(&Self::projection(space, k)?))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + a * y)
            .collect();
        Self {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|x| a * x).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_level(&self) -> HermLevel {
        HermLevel {
            space: Arc::clone(&self.space),
            n: 1,
            blocks: self
                .coeffs
                .iter()
                .map(|&x| HermMat::from_real_scalar(x))
                .collect(),
        }
    }
}

/// A Hermitian matrix stored as its packed upper triangle (row-major), with
/// the diagonal kept real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMat {
    n: usize,
    upper: Vec<Complex64>,
}

impl HermMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![c(0.0, 0.0); n * (n + 1) / 2],
        }
    }

    pub fn from_real_scalar(x: f64) -> Self {
        Self {
            n: 1,
            upper: vec![c(x, 0.0)],
        }
    }

    /// Reads the upper triangle of `m`; the imaginary part of the diagonal is dropped.
    pub fn from_cmat(m: &CMat) -> Self {
        let n = m.nrows();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            upper.push(c(m[(i, i)].re, 0.0));
            for j in i + 1..n {
                upper.push(m[(i, j)]);
            }
        }
        Self { n, upper }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn offset(&self, i: usize) -> usize {
        i * self.n - i * i.saturating_sub(1) / 2
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i <= j {
            self.upper[self.offset(i) + (j - i)]
        } else {
            self.upper[self.offset(j) + (i - j)].conj()
        }
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.upper
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `x = Σ_k A_k ⊗ p_k` in `M_n(V)_h`, scalar leg first.
#[derive(Debug, Clone, PartialEq)]
pub struct HermLevel {
    pub space: SpaceRef,
    pub n: usize,
    blocks: Vec<HermMat>,
}

impl HermLevel {
    /// Builds from full matrices; only their upper triangles are read.
    pub fn new(space: &SpaceRef, blocks: &[CMat]) -> Result<Self> {
        if blocks.len() != space.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for a space of dimension {}",
                blocks.len(),
                space.dim
            )));
        }
        let n = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        if n == 0 || blocks.iter().any(|b| b.nrows() != n || b.ncols() != n) {
            return Err(Error::DimensionMismatch(
                "blocks must be square and of equal size".into(),
            ));
        }
        let blocks: Vec<HermMat> = blocks.iter().map(HermMat::from_cmat).collect();
        if !blocks.iter().all(HermMat::is_finite) {
            return Err(Error::NumericInput(
                "level element has non-finite entries".into(),
            ));
        }
        Ok(Self {
            space: Arc::clone(space),
            n,
            blocks,
        })
    }

    pub fn zero(space: &SpaceRef, n: usize) -> Self {
        Self {
            space: Arc::clone(space),
            n,
            blocks: vec![HermMat::zeros(n); space.dim],
        }
    }

    /// `I_n ⊗ e`.
    pub fn unit(space: &SpaceRef, n: usize) -> Self {
        Self::kron_scalar(&CMat::identity(n, n), &VElement::unit(space))
    }

    /// `Q ⊗ v`.
    pub fn kron_scalar(q: &CMat, v: &VElement) -> Self {
        let blocks = v
            .coeffs
            .iter()
            .map(|&w| HermMat::from_cmat(&(q * c(w, 0.0))))
            .collect();
        Self {
            space: Arc::clone(&v.space),
            n: q.nrows(),
            blocks,
        }
    }

    pub fn block(&self, k: usize) -> CMat {
        self.blocks[k].to_cmat()
    }

    pub fn blocks(&self) -> Vec<CMat> {
        self.blocks.iter().map(HermMat::to_cmat).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn to_velement(&self) -> Result<VElement> {
        if self.n != 1 {
            return Err(Error::DimensionMismatch(format!(
                "level {} element is not a scalar",
                self.n
            )));
        }
        VElement::new(
            &self.space,
            self.blocks.iter().map(|b| b.get(0, 0).re).collect(),
        )
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.space.same_as(&other.space) || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "cannot combine level {} and level {} elements",
                self.n, other.n
            )));
        }
        Ok(())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let blocks: Vec<CMat> = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| x.to_cmat() + y.to_cmat() * c(a, 0.0))
            .collect();
        Self::new(&self.space, &blocks)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> Self {
        let blocks: Vec<CMat> = self.blocks().into_iter().map(|b| b * c(a, 0.0)).collect();
        Self::new(&self.space, &blocks).expect("scaling preserves shape")
    }

    /// Frobenius norm of the coordinate stack.
    pub fn norm(&self) -> f64 {
        self.blocks()
            .iter()
            .map(|b| frob(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `α* x α = Σ_k (α* A_k α) ⊗ p_k`.
    pub fn compress(&self, alpha: &CMat) -> Result<Self> {
        if alpha.nrows() != self.n || alpha.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "compression matrix is {}x{}, element has level {}",
                alpha.nrows(),
                alpha.ncols(),
                self.n
            )));
        }
        let adj = alpha.adjoint();
        let blocks: Vec<CMat> = self.blocks().iter().map(|a| &adj * a * alpha).collect();
        Self::new(&self.space, &blocks)
    }

    /// Block-diagonal `diag(self, other)`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if !self.space.same_as(&other.space) {
            return Err(Error::DimensionMismatch("direct sum across spaces".into()));
        }
        let blocks: Vec<CMat> = self
            .blocks()
            .iter()
            .zip(other.blocks())
            .map(|(a, b)| crate::numerics::linalg::direct_sum(a, &b))
            .collect();
        Self::new(&self.space, &blocks)
    }

    /// `[[x, x], [x, x]]`.
    pub fn doubled(&self) -> Self {
        let n = self.n;
        let blocks: Vec<CMat> = self
            .blocks()
            .iter()
            .map(|a| {
                let mut out = CMat::zeros(2 * n, 2 * n);
                for (r, s) in [(0, 0), (0, n), (n, 0), (n, n)] {
                    out.view_mut((r, s), (n, n)).copy_from(a);
                }
                out
            })
            .collect();
        Self::new(&self.space, &blocks).expect("doubling preserves shape")
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceTag {
    kind: SpaceKind,
    d: usize,
}

#[derive(Serialize, Deserialize)]
struct LevelJson {
    space: SpaceTag,
    level: usize,
    blocks: Vec<Vec<[f64; 2]>>,
}

impl Serialize for HermLevel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut row = Vec::with_capacity(self.n * self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        let z = b.get(i, j);
                        row.push([z.re, z.im]);
                    }
                }
                row
            })
            .collect();
        LevelJson {
            space: SpaceTag {
                kind: self.space.kind,
                d: self.space.d,
            },
            level: self.n,
            blocks,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermLevel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = LevelJson::deserialize(de)?;
        let space = build_space(j.space.kind, j.space.d).map_err(D::Error::custom)?;
        let n = j.level;
        let blocks: Vec<CMat> = j
            .blocks
            .iter()
            .map(|b| {
                if b.len() != n * n {
                    return Err(D::Error::custom(format!(
                        "block has {} entries, expected {}",
                        b.len(),
                        n * n
                    )));
                }
                Ok(CMat::from_fn(n, n, |i, k| {
                    c(b[i * n + k][0], b[i * n + k][1])
                }))
            })
            .collect::<std::result::Result<_, _>>()?;
        HermLevel::new(&space, &blocks).map_err(D::Error::custom)
    }
}

impl Serialize for VElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_level().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VElement {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        HermLevel::deserialize(de)?
            .to_velement()
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig::min_eigenvalue;
    use crate::numerics::linalg::identity;
    use crate::opsys_core::space::{build_mub_space, build_sic_space};
    use crate::rng::Rng64;

    fn random_level(rng: &mut Rng64, space: &SpaceRef, n: usize) -> HermLevel {
        let blocks: Vec<CMat> = (0..space.dim).map(|_| rng.hermitian(n)).collect();
        HermLevel::new(space, &blocks).unwrap()
    }

    #[test]
    fn packed_storage_round_trip() {
        let mut rng = Rng64::new(3);
        for n in 1..6 {
            let h = rng.hermitian(n);
            let m = HermMat::from_cmat(&h);
            assert!(frob(&(m.to_cmat() - &h)) < 1e-15);
        }
    }

    #[test]
    fn lower_triangle_is_ignored() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(1.0, 2.0);
        m[(1, 0)] = c(7.0, 7.0);
        let h = HermMat::from_cmat(&m);
        assert_eq!(h.get(1, 0), c(1.0, -2.0));
    }

    #[test]
    fn level_one_round_trip_exact() {
        let s = build_sic_space(3).unwrap();
        let v = VElement::new(&s, (0..9).map(|i| i as f64 * 0.37 - 1.1).collect()).unwrap();
        assert_eq!(v.to_level().to_velement().unwrap(), v);
    }

    #[test]
    fn identity_compression_is_noop() {
        let s = build_sic_space(2).unwrap();
        let mut rng = Rng64::new(9);
        let x = random_level(&mut rng, &s, 3);
        let y = x.compress(&identity(3)).unwrap();
        assert!(x.sub(&y).unwrap().norm() < 1e-14);
    }

    #[test]
    fn first_column_compression_is_corner() {
        let s = build_sic_space(2).unwrap();
        let mut rng = Rng64::new(10);
        let x = random_level(&mut rng, &s, 3);
        let alpha = CMat::from_fn(3, 1, |i, _| c(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        let v = x.compress(&alpha).unwrap().to_velement().unwrap();
        for k in 0..4 {
            assert_eq!(v.coeffs[k], x.block(k)[(0, 0)].re);
        }
    }

    #[test]
    fn compression_shape_error() {
        let s = build_sic_space(2).unwrap();
        let x = HermLevel::unit(&s, 2);
        assert!(matches!(
            x.compress(&identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn compressed_concrete_image_stays_psd() {
        // MUB diagonal model: π(x) = Σ A_k ⊗ diag(model_k).
        let s = build_mub_space(2).unwrap();
        let mut rng = Rng64::new(11);
        for _ in 0..20 {
            let q = rng.psd(3, 2);
            let k = 1 + rng.below(s.num_projections());
            let x = HermLevel::kron_scalar(&q, &VElement::projection(&s, k).unwrap());
            let alpha = rng.complex_matrix(3, 2);
            let y = x.compress(&alpha).unwrap();
            let mut img = CMat::zeros(2 * s.dim, 2 * s.dim);
            for kk in 0..s.dim {
                let mut e = vec![0.0; s.dim];
                e[kk] = 1.0;
                let diag = s.mub_model_diag(&e).unwrap();
                let dm = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                    s.dim,
                    diag.iter().map(|&v| c(v, 0.0)),
                ));
                img += crate::numerics::linalg::kron(&y.block(kk), &dm);
            }
            assert!(min_eigenvalue(&img) >= -1e-10);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = build_mub_space(3).unwrap();
        let mut rng = Rng64::new(12);
        let x = random_level(&mut rng, &s, 2);
        let js = serde_json::to_string(&x).unwrap();
        let back: HermLevel = serde_json::from_str(&js).unwrap();
        assert_eq!(back, x);
        assert!(js.starts_with("{\"space\":{\"kind\":\"mub\",\"d\":3},\"level\":2,\"blocks\":"));
    }

    #[test]
    fn doubled_and_direct_sum_shapes() {
        let s = build_sic_space(2).unwrap();
        let x = HermLevel::unit(&s, 2);
        assert_eq!(x.doubled().n, 4);
        assert_eq!(x.direct_sum(&x).unwrap().n, 4);
    }
}
