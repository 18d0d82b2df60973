//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NnlsResult {
    pub coeffs: DVector<f64>,
    /// `‖A c − b‖₂`.
    pub residual: f64,
    /// `b − A c`.
    pub residual_vec: DVector<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit; `coeffs` is then the best iterate.
    pub converged: bool,
}

fn lstsq_on(a: &DMatrix<f64>, cols: &[usize], b: &DVector<f64>) -> DVector<f64> {
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, 1e-13 * smax.max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(cols.len()))
}

/// Minimize `‖A c − b‖₂` over `c ≥ 0`.
pub fn nnls_solve(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<NnlsResult> {
    let (m, g) = a.shape();
    if m == 0 || g == 0 {
        return Err(Error::InvalidDimension(format!(
            "nnls needs a nonempty matrix, got {m}x{g}"
        )));
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, expected {m}",
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NumericInput(
            "nnls input has non-finite entries".into(),
        ));
    }
    let scale = a.norm().max(1.0) * b.norm().max(1.0);
    let wtol = tol.max(1e-14) * scale;

    let mut x = DVector::<f64>::zeros(g);
    let mut passive = vec![false; g];
    let mut blocked = vec![false; g];
    let cap = 3 * g + 50;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cap {
        iterations += 1;
        let r = b - a * &x;
        let w = a.transpose() * &r;
        let mut best = None;
        let mut wmax = wtol;
        for j in 0..g {
            if !passive[j] && !blocked[j] && w[j] > wmax {
                wmax = w[j];
                best = Some(j);
            }
        }
        let Some(enter) = best else {
            converged = true;
            break;
        };
        passive[enter] = true;

        let mut inner = 0;
        loop {
            inner += 1;
            let cols: Vec<usize> = (0..g).filter(|&j| passive[j]).collect();
            let z = lstsq_on(a, &cols, b);
            if cols.iter().zip(z.iter()).all(|(_, &zj)| zj > 0.0) {
                for (k, &j) in cols.iter().enumerate() {
                    x[j] = z[k];
                }
                blocked.iter_mut().for_each(|f| *f = false);
                break;
            }
            if inner == 1 {
                // entering column is dependent on the passive set
                if let Some(k) = cols.iter().position(|&j| j == enter) {
                    if z[k] <= 0.0 && x[enter] == 0.0 {
                        passive[enter] = false;
                        blocked[enter] = true;
                        break;
                    }
                }
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in cols.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = x[j] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in cols.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
            }
            for &j in &cols {
                if x[j] <= 1e-15 * x.amax().max(1.0) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if inner > g + 5 || !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    let residual_vec = b - a * &x;
    Ok(NnlsResult {
        residual: residual_vec.norm(),
        coeffs: x,
        residual_vec,
        iterations,
        converged,
    })
}
