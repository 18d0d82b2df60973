//! Cyclic Jacobi eigendecomposition for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `h_pq` with a diagonal
//! unitary and then applies a real Givens rotation, so the iteration works on
//! the full complex matrix without a real embedding. Only the upper triangle
//! of the input is read.

use num_complex::Complex64;

use super::linalg::CMat;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: CMat,
}

impl EigResult {
    pub fn reconstruct(&self) -> CMat {
        let n = self.eigenvalues.len();
        let mut out = CMat::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += v[i] * v[j].conj() * lam;
                }
            }
        }
        out
    }
}

/// Row-major dense working copy, Hermitian completion from the upper triangle.
fn load_upper(h: &CMat) -> Vec<Complex64> {
    let n = h.nrows();
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        a[i * n + i] = Complex64::new(h[(i, i)].re, 0.0);
        for j in i + 1..n {
            a[i * n + j] = h[(i, j)];
            a[j * n + i] = h[(i, j)].conj();
        }
    }
    a
}

fn jacobi(a: &mut [Complex64], n: usize, mut vecs: Option<&mut [Complex64]>) {
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return;
    }
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= 1e-300 || r <= 1e-18 * scale {
                    a[p * n + q] = Complex64::new(0.0, 0.0);
                    a[q * n + p] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let u = apq / r;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // U restricted to (p, q): [[c, s], [-s conj(u), c conj(u)]]
                let upp = Complex64::new(cs, 0.0);
                let upq = Complex64::new(sn, 0.0);
                let uqp = -u.conj() * sn;
                let uqq = u.conj() * cs;
                for k in 0..n {
                    let hp = a[k * n + p];
                    let hq = a[k * n + q];
                    a[k * n + p] = hp * upp + hq * uqp;
                    a[k * n + q] = hp * upq + hq * uqq;
                }
                for k in 0..n {
                    let hp = a[p * n + k];
                    let hq = a[q * n + k];
                    a[p * n + k] = upp.conj() * hp + uqp.conj() * hq;
                    a[q * n + k] = upq.conj() * hp + uqq.conj() * hq;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vp = v[k * n + p];
                        let vq = v[k * n + q];
                        v[k * n + p] = vp * upp + vq * uqp;
                        v[k * n + q] = vp * upq + vq * uqq;
                    }
                }
            }
        }
    }
}

fn check_input(h: &CMat) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Full spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending. Each eigenvector is rephased so that its
/// largest-modulus component (first one on ties) is real and positive.
pub fn herm_eig(h: &CMat) -> Result<EigResult> {
    check_input(h)?;
    let n = h.nrows();
    let mut a = load_upper(h);
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    jacobi(&mut a, n, Some(&mut v));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues = order.iter().map(|&i| a[i * n + i].re).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut best = 0;
        let mut best_mod = -1.0;
        for k in 0..n {
            let m = v[k * n + src].norm();
            if m > best_mod * (1.0 + 1e-12) {
                best_mod = m;
                best = k;
            }
        }
        let pivot = v[best * n + src];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for k in 0..n {
            eigenvectors[(k, col)] = v[k * n + src] * phase;
        }
    }
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending. Panics on non-square input.
pub fn eigenvalues(h: &CMat) -> Vec<f64> {
    assert!(h.is_square());
    let n = h.nrows();
    let mut a = load_upper(h);
    jacobi(&mut a, n, None);
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(h: &CMat) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    eigenvalues(h)[0]
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to zero.
pub fn psd_project(h: &CMat) -> CMat {
    let n = h.nrows();
    let mut a = load_upper(h);
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    jacobi(&mut a, n, Some(&mut v));
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        let lam = a[k * n + k].re;
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = v[i * n + k] * lam;
            for j in 0..n {
                out[(i, j)] += vi * v[j * n + k].conj();
            }
        }
    }
    out
}
