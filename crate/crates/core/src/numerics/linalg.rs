use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of `tr(a* b)`, the real inner product on Hermitian matrices.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && frob(&(m - m.adjoint())) <= tol * (1.0 + frob(m))
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Outer product `v v*`.
pub fn outer(v: &[Complex64]) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

/// Coordinates `Re tr(E_c K)` against the orthonormal Hermitian basis:
/// diagonal units, then `(E_ab + E_ba)/√2` and `i(E_ab − E_ba)/√2` for `a < b`.
pub fn herm_coords(k: &CMat, out: &mut Vec<f64>) {
    let n = k.nrows();
    let s = std::f64::consts::SQRT_2;
    for a in 0..n {
        out.push(k[(a, a)].re);
    }
    for a in 0..n {
        for b in a + 1..n {
            out.push((k[(a, b)].re + k[(b, a)].re) / s);
            out.push((k[(a, b)].im - k[(b, a)].im) / s);
        }
    }
}

/// Inverse of `herm_coords` on Hermitian matrices.
pub fn herm_from_coords(n: usize, v: &[f64]) -> CMat {
    let s = std::f64::consts::SQRT_2;
    let mut m = CMat::zeros(n, n);
    for a in 0..n {
        m[(a, a)] = c(v[a], 0.0);
    }
    let mut k = n;
    for a in 0..n {
        for b in a + 1..n {
            let z = c(v[k], v[k + 1]) / s;
            m[(a, b)] = z;
            m[(b, a)] = z.conj();
            k += 2;
        }
    }
    m
}
