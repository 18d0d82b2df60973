//! Dykstra alternating projections for affine slices of a product of PSD cones.
//!
//! Unknowns are Hermitian `n×n` blocks `Q_1..Q_g` and nonnegative scalars
//! `t_1..t_m`. The affine system has one Hermitian equation per coordinate `k`:
//!
//! ```text
//! Σ_j G[k, j] Q_j − Σ_i t_i P_i[k] = B[k]
//! ```
//!
//! Because `G` is real the block part decouples entrywise, so the affine
//! projection only needs `(G Gᵀ)⁻¹` plus a rank-`m` Woodbury correction for
//! the scalar unknowns.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::eig::psd_project;
use super::linalg::{frob, inner, CMat};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AffineSystem {
    pub n: usize,
    /// `dim × g` real coefficient matrix.
    pub gmat: DMatrix<f64>,
    /// Right-hand side, one Hermitian `n×n` block per coordinate.
    pub rhs: Vec<CMat>,
    /// Each pad is a list of `dim` Hermitian blocks entering with weight `−t_i`.
    pub pads: Vec<Vec<CMat>>,
}

impl AffineSystem {
    pub fn new(n: usize, gmat: DMatrix<f64>, rhs: Vec<CMat>, pads: Vec<Vec<CMat>>) -> Result<Self> {
        let dim = gmat.nrows();
        if n == 0 || dim == 0 || gmat.ncols() == 0 {
            return Err(Error::DimensionMismatch("empty affine system".into()));
        }
        if rhs.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} rhs blocks for {dim} coordinates",
                rhs.len()
            )));
        }
        let ok_block = |b: &CMat| b.nrows() == n && b.ncols() == n;
        if !rhs.iter().all(ok_block) {
            return Err(Error::DimensionMismatch(format!(
                "rhs blocks must be {n}x{n}"
            )));
        }
        for p in &pads {
            if p.len() != dim || !p.iter().all(ok_block) {
                return Err(Error::DimensionMismatch(
                    "pad shape does not match the system".into(),
                ));
            }
        }
        if gmat.iter().any(|x| !x.is_finite())
            || rhs
                .iter()
                .flatten()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NumericInput(
                "affine system has non-finite entries".into(),
            ));
        }
        Ok(Self { n, gmat, rhs, pads })
    }

    pub fn dim(&self) -> usize {
        self.gmat.nrows()
    }

    pub fn num_blocks(&self) -> usize {
        self.gmat.ncols()
    }

    /// `Σ_j G[k,j] Q_j − Σ_i t_i P_i[k] − B[k]` for every `k`.
    pub fn residual_blocks(&self, q: &[CMat], t: &[f64]) -> Vec<CMat> {
        let n = self.n;
        (0..self.dim())
            .map(|k| {
                let mut r = -self.rhs[k].clone();
                for (j, qj) in q.iter().enumerate() {
                    let w = self.gmat[(k, j)];
                    if w != 0.0 {
                        r.zip_apply(qj, |a, b| *a += b * w);
                    }
                }
                for (i, pad) in self.pads.iter().enumerate() {
                    if t[i] != 0.0 {
                        r.zip_apply(&pad[k], |a, b| *a -= b * t[i]);
                    }
                }
                debug_assert_eq!(r.nrows(), n);
                r
            })
            .collect()
    }

    pub fn residual(&self, q: &[CMat], t: &[f64]) -> f64 {
        self.residual_blocks(q, t)
            .iter()
            .map(|b| frob(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeasOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Separator candidates are tested every this many iterations.
    pub check_every: usize,
    /// Minimum eigenvalue allowed on a normalized separator's generator blocks.
    pub sep_tol: f64,
    pub record_gaps: bool,
    /// Face-restricted exact correction is attempted every this many
    /// iterations; 0 disables it.
    pub polish_every: usize,
}

impl Default for FeasOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol: 1e-8,
            check_every: 25,
            sep_tol: 1e-9,
            record_gaps: false,
            polish_every: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub enum FeasStatus {
    Feasible {
        blocks: Vec<CMat>,
        pad_weights: Vec<f64>,
    },
    /// `separator` is a unit-norm stack `Y` of `dim` Hermitian blocks.
    InfeasibleEvidence {
        gap: f64,
        separator: Vec<CMat>,
    },
    Budget,
}

#[derive(Debug, Clone)]
pub struct FeasResult {
    pub status: FeasStatus,
    pub iterations: usize,
    /// Affine residual of the last PSD iterate.
    pub residual: f64,
    pub gaps: Vec<f64>,
}

struct Projector<'a> {
    sys: &'a AffineSystem,
    k_inv: DMatrix<f64>,
    /// `M⁻¹ Π e_i` for each pad.
    w: Vec<Vec<CMat>>,
    s_chol: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl<'a> Projector<'a> {
    fn new(sys: &'a AffineSystem) -> Self {
        let ggt = &sys.gmat * sys.gmat.transpose();
        let k_inv = ggt
            .clone()
            .pseudo_inverse(1e-12 * ggt.norm().max(1.0))
            .unwrap_or(ggt);
        let w: Vec<Vec<CMat>> = sys
            .pads
            .iter()
            .map(|p| Self::apply_k(&k_inv, p).into_iter().map(|b| -b).collect())
            .collect();
        let m = sys.pads.len();
        let s_chol = if m > 0 {
            let s = DMatrix::from_fn(m, m, |i, j| {
                let v: f64 = (0..sys.dim())
                    .map(|k| -inner(&sys.pads[i][k], &w[j][k]))
                    .sum();
                v + if i == j { 1.0 } else { 0.0 }
            });
            Cholesky::new(s)
        } else {
            None
        };
        Self {
            sys,
            k_inv,
            w,
            s_chol,
        }
    }

    fn apply_k(k_inv: &DMatrix<f64>, r: &[CMat]) -> Vec<CMat> {
        let dim = r.len();
        (0..dim)
            .map(|k| {
                let mut out = CMat::zeros(r[0].nrows(), r[0].ncols());
                for l in 0..dim {
                    let w = k_inv[(k, l)];
                    if w != 0.0 {
                        out.zip_apply(&r[l], |a, b| *a += b * w);
                    }
                }
                out
            })
            .collect()
    }

    /// `(A Aᵀ)⁻¹ r`.
    fn solve(&self, r: &[CMat]) -> Vec<CMat> {
        let mut u = Self::apply_k(&self.k_inv, r);
        if let Some(ch) = &self.s_chol {
            let m = self.sys.pads.len();
            let pu = DVector::from_fn(m, |i, _| {
                (0..r.len())
                    .map(|k| -inner(&self.sys.pads[i][k], &u[k]))
                    .sum::<f64>()
            });
            let s = ch.solve(&pu);
            for i in 0..m {
                for (uk, wk) in u.iter_mut().zip(&self.w[i]) {
                    uk.zip_apply(wk, |a, b| *a -= b * s[i]);
                }
            }
        }
        u
    }

    /// Subtract `Aᵀ y` from `(q, t)`.
    fn sub_adjoint(&self, y: &[CMat], q: &mut [CMat], t: &mut [f64]) {
        let g = &self.sys.gmat;
        for (j, qj) in q.iter_mut().enumerate() {
            for (k, yk) in y.iter().enumerate() {
                let w = g[(k, j)];
                if w != 0.0 {
                    qj.zip_apply(yk, |a, b| *a -= b * w);
                }
            }
        }
        for (i, ti) in t.iter_mut().enumerate() {
            let v: f64 = y
                .iter()
                .zip(&self.sys.pads[i])
                .map(|(yk, pk)| -inner(pk, yk))
                .sum();
            *ti -= v;
        }
    }

    fn project_affine(&self, q: &mut [CMat], t: &mut [f64]) {
        let r = self.sys.residual_blocks(q, t);
        let y = self.solve(&r);
        self.sub_adjoint(&y, q, t);
    }
}

fn project_psd_block(q: &CMat) -> CMat {
    if q.nrows() == 1 {
        return CMat::from_element(1, 1, Complex64::new(q[(0, 0)].re.max(0.0), 0.0));
    }
    if is_positive_definite(q) {
        return q.clone();
    }
    psd_project(q)
}

/// Cholesky attempt on the upper triangle; true iff every pivot is positive.
fn is_positive_definite(q: &CMat) -> bool {
    let n = q.nrows();
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut diag = q[(j, j)].re;
        for k in 0..j {
            diag -= l[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) {
            return false;
        }
        let ljj = diag.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = q[(j, i)].conj();
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    true
}

/// Validate a separator candidate `Y` for the system: every generator block
/// `Σ_k G[k,j] Y_k` PSD to `−sep_tol`, `⟨Y, P_i⟩ ≤ sep_tol` for each pad, and
/// `⟨Y, B⟩ < 0`. Returns `⟨Y, B⟩` on success.
pub fn check_separator(sys: &AffineSystem, y: &[CMat], sep_tol: f64) -> Option<f64> {
    let norm = y.iter().map(|b| frob(b).powi(2)).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    let fb: f64 = y
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| inner(a, b))
        .sum::<f64>()
        / norm;
    if fb >= -1e-7 {
        return None;
    }
    for pad in &sys.pads {
        let v: f64 = y.iter().zip(pad).map(|(a, b)| inner(a, b)).sum::<f64>() / norm;
        if v > sep_tol {
            return None;
        }
    }
    for j in 0..sys.num_blocks() {
        let mut f = CMat::zeros(sys.n, sys.n);
        for (k, yk) in y.iter().enumerate() {
            let w = sys.gmat[(k, j)];
            if w != 0.0 {
                f.zip_apply(yk, |a, b| *a += b * (w / norm));
            }
        }
        if super::eig::min_eigenvalue(&f) < -sep_tol {
            return None;
        }
    }
    Some(fb)
}

/// Real coordinates of a Hermitian matrix: diagonal, then real and
/// imaginary parts of the strict upper triangle.
fn herm_coords(m: &CMat, out: &mut Vec<f64>) {
    let n = m.nrows();
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
}

/// The Hermitian basis matrix with real coordinate `idx` (inverse of `herm_coords`
/// up to the factor 2 on off-diagonal pairs).
fn herm_basis(r: usize, idx: usize) -> CMat {
    let mut m = CMat::zeros(r, r);
    if idx < r {
        m[(idx, idx)] = Complex64::new(1.0, 0.0);
        return m;
    }
    let mut k = r;
    for i in 0..r {
        for j in i + 1..r {
            if k == idx {
                m[(i, j)] = Complex64::new(1.0, 0.0);
                m[(j, i)] = Complex64::new(1.0, 0.0);
                return m;
            }
            if k + 1 == idx {
                m[(i, j)] = Complex64::new(0.0, 1.0);
                m[(j, i)] = Complex64::new(0.0, -1.0);
                return m;
            }
            k += 2;
        }
    }
    unreachable!("coordinate index out of range")
}

/// Face-restricted correction: keep each block's dominant eigenspace `V_j`,
/// solve the affine system exactly for a least-norm update of the form
/// `V_j U_j V_j*` (and of the active pad weights), and accept the result if
/// it stays PSD.
fn polish(
    sys: &AffineSystem,
    q: &[CMat],
    t: &[f64],
    rel: f64,
    tol: f64,
) -> Option<(Vec<CMat>, Vec<f64>)> {
    let n = sys.n;
    let eigs: Vec<super::eig::EigResult> = q
        .iter()
        .map(|b| super::eig::herm_eig(b).ok())
        .collect::<Option<_>>()?;
    let scale = eigs
        .iter()
        .flat_map(|e| e.eigenvalues.iter().copied())
        .chain(t.iter().copied())
        .fold(0.0f64, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let cut = rel * scale;
    let mut faces: Vec<(usize, CMat, CMat)> = Vec::new();
    let mut q0: Vec<CMat> = vec![CMat::zeros(n, n); q.len()];
    for (j, e) in eigs.iter().enumerate() {
        let keep: Vec<usize> = (0..n).filter(|&k| e.eigenvalues[k] > cut).collect();
        if keep.is_empty() {
            continue;
        }
        let v = CMat::from_fn(n, keep.len(), |a, b| e.eigenvectors[(a, keep[b])]);
        let m0 = CMat::from_fn(keep.len(), keep.len(), |a, b| {
            if a == b {
                Complex64::new(e.eigenvalues[keep[a]], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        q0[j] = &v * &m0 * v.adjoint();
        faces.push((j, v, m0));
    }
    let pads: Vec<usize> = (0..t.len()).filter(|&i| t[i] > cut).collect();
    let t0: Vec<f64> = t.iter().map(|&x| if x > cut { x } else { 0.0 }).collect();

    let r = sys.residual_blocks(&q0, &t0);
    let mut rhs = Vec::new();
    for rk in &r {
        herm_coords(&(-rk), &mut rhs);
    }
    let rows = rhs.len();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut owners: Vec<(usize, usize)> = Vec::new();
    for (f, (j, v, _)) in faces.iter().enumerate() {
        let rj = v.ncols();
        for idx in 0..rj * rj {
            let img = v * herm_basis(rj, idx) * v.adjoint();
            let mut col = Vec::with_capacity(rows);
            for k in 0..sys.dim() {
                herm_coords(&(&img * Complex64::new(sys.gmat[(k, *j)], 0.0)), &mut col);
            }
            cols.push(col);
            owners.push((f, idx));
        }
    }
    for &i in &pads {
        let mut col = Vec::with_capacity(rows);
        for k in 0..sys.dim() {
            herm_coords(&(-&sys.pads[i][k]), &mut col);
        }
        cols.push(col);
        owners.push((usize::MAX, i));
    }
    if cols.is_empty() {
        return None;
    }
    let l = DMatrix::from_fn(rows, cols.len(), |a, b| cols[b][a]);
    let llt = &l * l.transpose();
    let w = llt
        .clone()
        .pseudo_inverse(1e-13 * llt.norm().max(1e-300))
        .ok()?
        * DVector::from_vec(rhs);
    let u = l.transpose() * w;

    let mut q1 = q0;
    let mut t1 = t0;
    let mut updates: Vec<CMat> = faces
        .iter()
        .map(|(_, v, _)| CMat::zeros(v.ncols(), v.ncols()))
        .collect();
    for (c, &(f, idx)) in owners.iter().enumerate() {
        if f == usize::MAX {
            t1[idx] += u[c];
        } else {
            let rj = faces[f].1.ncols();
            updates[f] += herm_basis(rj, idx) * Complex64::new(u[c], 0.0);
        }
    }
    for (f, (j, v, m0)) in faces.iter().enumerate() {
        let m = m0 + &updates[f];
        if super::eig::min_eigenvalue(&m) < 0.0 {
            return None;
        }
        q1[*j] = v * m * v.adjoint();
    }
    if t1.iter().any(|&x| x < 0.0) {
        return None;
    }
    (sys.residual(&q1, &t1) <= tol).then_some((q1, t1))
}

/// Find PSD blocks and nonnegative pad weights satisfying the affine system,
/// or evidence that none exist.
pub fn dykstra_psd_feasibility(sys: &AffineSystem, opts: &FeasOptions) -> Result<FeasResult> {
    let n = sys.n;
    let g = sys.num_blocks();
    let m = sys.pads.len();
    let proj = Projector::new(sys);

    let mut x_q = vec![CMat::zeros(n, n); g];
    let mut x_t = vec![0.0; m];
    let mut c_q = vec![CMat::zeros(n, n); g];
    let mut c_t = vec![0.0; m];
    let mut gaps = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;

    for it in 1..=opts.max_iter {
        let mut y_q = x_q.clone();
        let mut y_t = x_t.clone();
        proj.project_affine(&mut y_q, &mut y_t);
        for j in 0..g {
            let pre = &y_q[j] + &c_q[j];
            x_q[j] = project_psd_block(&pre);
            c_q[j] = pre - &x_q[j];
        }
        for i in 0..m {
            let pre = y_t[i] + c_t[i];
            x_t[i] = pre.max(0.0);
            c_t[i] = pre - x_t[i];
        }
        residual = sys.residual(&x_q, &x_t);
        if opts.record_gaps {
            gaps.push(residual);
        }
        if residual <= opts.tol {
            return Ok(FeasResult {
                status: FeasStatus::Feasible {
                    blocks: x_q,
                    pad_weights: x_t,
                },
                iterations: it,
                residual,
                gaps,
            });
        }
        history.push(residual);
        if opts.polish_every > 0 && it % opts.polish_every == 0 {
            for rel in [1e-3, 1e-6, 1e-9] {
                if let Some((blocks, pad_weights)) = polish(sys, &x_q, &x_t, rel, opts.tol) {
                    let residual = sys.residual(&blocks, &pad_weights);
                    return Ok(FeasResult {
                        status: FeasStatus::Feasible {
                            blocks,
                            pad_weights,
                        },
                        iterations: it,
                        residual,
                        gaps,
                    });
                }
            }
        }
        if it % opts.check_every.max(1) == 0 && it >= 2 * opts.check_every {
            let r = sys.residual_blocks(&x_q, &x_t);
            let y = proj.solve(&r);
            let norm = y.iter().map(|b| frob(b).powi(2)).sum::<f64>().sqrt();
            if norm > 0.0 {
                let y: Vec<CMat> = y
                    .into_iter()
                    .map(|b| b / Complex64::new(norm, 0.0))
                    .collect();
                let stalled = it >= 1000 && {
                    let old = history[it - 500];
                    old - residual <= 1e-7 * residual
                };
                if stalled || check_separator(sys, &y, opts.sep_tol).is_some() {
                    return Ok(FeasResult {
                        status: FeasStatus::InfeasibleEvidence {
                            gap: residual,
                            separator: y,
                        },
                        iterations: it,
                        residual,
                        gaps,
                    });
                }
            }
        }
    }
    Ok(FeasResult {
        status: FeasStatus::Budget,
        iterations: opts.max_iter,
        residual,
        gaps,
    })
}
