//! Primal-dual interior-point solver for the minimal unit shift
//!
//! ```text
//! min s  s.t.  Σ_j G[k,j] Q_j − Σ_i t_i P_i[k] − s U[k] = X[k],  Q_j ⪰ 0, t_i ≥ 0, s ≥ −1
//! ```
//!
//! `s* ≤ eps` means `X + eps·U` lies in the cone generated by the `Q ⊗ g_j`
//! (with pad weights), otherwise the dual multiplier is a separating
//! functional. The search direction is HKM with a Mehrotra
//! predictor-corrector step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::eig::herm_eig;
use super::linalg::{frob, herm_coords, herm_from_coords, inner, CMat};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ShiftProblem {
    pub n: usize,
    /// `dim × g` generator coordinates.
    pub gmat: DMatrix<f64>,
    /// Element to shift, one block per coordinate.
    pub target: Vec<CMat>,
    /// Unit direction `U`, one block per coordinate.
    pub unit: Vec<CMat>,
    pub pads: Vec<Vec<CMat>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub max_iter: usize,
    /// Relative feasibility tolerance for accepting a primal point.
    pub feas_tol: f64,
    pub gap_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iter: 80,
            feas_tol: 1e-9,
            gap_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SdpStatus {
    /// `target + shift·U = Σ Q_j ⊗ g_j − Σ t_i pad_i` with `shift ≤ eps`.
    Member {
        blocks: Vec<CMat>,
        pad_weights: Vec<f64>,
        shift: f64,
    },
    /// Dual functional `f` (one block per coordinate) with `f ⪰ 0` on
    /// generators, `f(pad) ≤ 0`, and `f(target + eps·U) < 0`.
    Separated { functional: Vec<CMat>, value: f64 },
    /// Neither side reached the decision tolerance.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub iterations: usize,
    /// Best lower and upper bounds found for the optimal shift.
    pub lower: f64,
    pub upper: f64,
    pub primal_residual: f64,
    /// Functional `f = −Y` attaining `lower`: `f(target) = −lower` up to the
    /// gap, `f(U) ≤ 1`, nonnegative on generators and nonpositive on pads.
    pub dual: Option<Vec<CMat>>,
}

struct Basis {
    n: usize,
}

impl Basis {
    fn len(&self) -> usize {
        self.n * self.n
    }

    fn coords(&self, k: &CMat, out: &mut Vec<f64>) {
        herm_coords(k, out);
    }

    fn from_coords(&self, v: &[f64]) -> CMat {
        herm_from_coords(self.n, v)
    }

    fn element(&self, c: usize) -> CMat {
        let mut v = vec![0.0; self.len()];
        v[c] = 1.0;
        self.from_coords(&v)
    }
}

/// Primal or dual variable: PSD blocks, pad scalars and the shift slack.
#[derive(Debug, Clone)]
struct Var {
    q: Vec<CMat>,
    t: Vec<f64>,
    s: f64,
}

impl Var {
    fn axpy(&self, a: f64, d: &Var) -> Var {
        Var {
            q: self
                .q
                .iter()
                .zip(&d.q)
                .map(|(x, y)| x + y * Complex64::new(a, 0.0))
                .collect(),
            t: self.t.iter().zip(&d.t).map(|(x, y)| x + a * y).collect(),
            s: self.s + a * d.s,
        }
    }

    fn dot(&self, o: &Var) -> f64 {
        self.q
            .iter()
            .zip(&o.q)
            .map(|(a, b)| inner(a, b))
            .sum::<f64>()
            + self.t.iter().zip(&o.t).map(|(a, b)| a * b).sum::<f64>()
            + self.s * o.s
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

struct Ops<'a> {
    p: &'a ShiftProblem,
    basis: Basis,
    /// Coordinates of `−P_i` and `−U` stacked over `k`.
    pad_cols: Vec<DVector<f64>>,
    unit_col: DVector<f64>,
    b: DVector<f64>,
}

impl<'a> Ops<'a> {
    fn new(p: &'a ShiftProblem) -> Self {
        let basis = Basis { n: p.n };
        let stack = |blocks: &[CMat], sign: f64| {
            let mut v = Vec::new();
            for b in blocks {
                basis.coords(&(b * Complex64::new(sign, 0.0)), &mut v);
            }
            DVector::from_vec(v)
        };
        let pad_cols = p.pads.iter().map(|pd| stack(pd, -1.0)).collect();
        let unit_col = stack(&p.unit, -1.0);
        // s = σ − 1, so the right-hand side is X − U
        let shifted: Vec<CMat> = p.target.iter().zip(&p.unit).map(|(x, u)| x - u).collect();
        let b = stack(&shifted, 1.0);
        Self {
            p,
            basis,
            pad_cols,
            unit_col,
            b,
        }
    }

    fn m(&self) -> usize {
        self.p.gmat.nrows() * self.basis.len()
    }

    fn apply(&self, x: &Var) -> DVector<f64> {
        let dim = self.p.gmat.nrows();
        let mut v = Vec::with_capacity(self.m());
        for k in 0..dim {
            let mut h = CMat::zeros(self.p.n, self.p.n);
            for (j, q) in x.q.iter().enumerate() {
                let w = self.p.gmat[(k, j)];
                if w != 0.0 {
                    h += q * Complex64::new(w, 0.0);
                }
            }
            self.basis.coords(&h, &mut v);
        }
        let mut out = DVector::from_vec(v);
        for (col, &t) in self.pad_cols.iter().zip(&x.t) {
            out.axpy(t, col, 1.0);
        }
        out.axpy(x.s, &self.unit_col, 1.0);
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> Var {
        let dim = self.p.gmat.nrows();
        let nb = self.basis.len();
        let yk: Vec<CMat> = (0..dim)
            .map(|k| self.basis.from_coords(&y.as_slice()[k * nb..(k + 1) * nb]))
            .collect();
        let q = (0..self.p.gmat.ncols())
            .map(|j| {
                let mut h = CMat::zeros(self.p.n, self.p.n);
                for (k, ykm) in yk.iter().enumerate() {
                    let w = self.p.gmat[(k, j)];
                    if w != 0.0 {
                        h += ykm * Complex64::new(w, 0.0);
                    }
                }
                h
            })
            .collect();
        Var {
            q,
            t: self.pad_cols.iter().map(|c| c.dot(y)).collect(),
            s: self.unit_col.dot(y),
        }
    }

    fn cost(&self) -> Var {
        Var {
            q: vec![CMat::zeros(self.p.n, self.p.n); self.p.gmat.ncols()],
            t: vec![0.0; self.p.pads.len()],
            s: 1.0,
        }
    }

    /// Schur complement `M_ab = ⟨A_a, X A_b Z⁻¹⟩`.
    fn schur(
        &self,
        xhalf: &[CMat],
        zhalf_inv: &[CMat],
        x: &Var,
        zt: &[f64],
        zs: f64,
    ) -> DMatrix<f64> {
        let dim = self.p.gmat.nrows();
        let nb = self.basis.len();
        let m = self.m();
        let mut out = DMatrix::zeros(m, m);
        let elems: Vec<CMat> = (0..nb).map(|c| self.basis.element(c)).collect();
        for (j, (a, b)) in xhalf.iter().zip(zhalf_inv).enumerate() {
            // S[c, c'] = Re tr(K_c* K_c') with K_c = X^½ E_c Z^-½
            let mut kmat = CMat::zeros(nb, nb);
            for (col, e) in elems.iter().enumerate() {
                let k = a * e * b;
                for (r, v) in k.iter().enumerate() {
                    kmat[(r, col)] = *v;
                }
            }
            let s = (kmat.adjoint() * &kmat).map(|v| v.re);
            let ks: Vec<usize> = (0..dim).filter(|&k| self.p.gmat[(k, j)] != 0.0).collect();
            for &k in &ks {
                for &l in &ks {
                    let w = self.p.gmat[(k, j)] * self.p.gmat[(l, j)];
                    let mut view = out.view_mut((k * nb, l * nb), (nb, nb));
                    view += &s * w;
                }
            }
        }
        for ((col, &xt), &z) in self.pad_cols.iter().zip(&x.t).zip(zt) {
            out.ger(xt / z, col, col, 1.0);
        }
        out.ger(x.s / zs, &self.unit_col, &self.unit_col, 1.0);
        out
    }
}

fn sym(k: &CMat) -> CMat {
    (k + k.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest step `α ≤ 1/0.95` keeping `x + α d ⪰ 0`, scaled by 0.95.
fn step_length(x: &Var, d: &Var) -> f64 {
    let mut amax = f64::INFINITY;
    for (xb, db) in x.q.iter().zip(&d.q) {
        let Some(scale) = herm_pow(xb, -0.5) else {
            return 0.0;
        };
        let lmin = super::eig::min_eigenvalue(&sym(&(&scale * db * &scale)));
        if lmin < 0.0 {
            amax = amax.min(-1.0 / lmin);
        }
    }
    for (&xv, &dv) in x.t.iter().zip(&d.t).chain(std::iter::once((&x.s, &d.s))) {
        if dv < 0.0 {
            amax = amax.min(-xv / dv);
        }
    }
    (0.95 * amax).min(1.0)
}

/// `m^p` for a positive definite Hermitian `m`.
fn herm_pow(m: &CMat, p: f64) -> Option<CMat> {
    let e = herm_eig(m).ok()?;
    if !(e.eigenvalues[0] > 0.0) {
        return None;
    }
    let v = &e.eigenvectors;
    let d = CMat::from_diagonal(&DVector::from_iterator(
        e.eigenvalues.len(),
        e.eigenvalues.iter().map(|l| Complex64::new(l.powf(p), 0.0)),
    ));
    Some(sym(&(v * d * v.adjoint())))
}

/// Cholesky factor of the Schur complement with escalating diagonal
/// regularization.
fn factor(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = m.diagonal().amax().max(1e-300);
    [0.0, 1e-14, 1e-12, 1e-10, 1e-8].iter().find_map(|&r| {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += r * scale;
        }
        Cholesky::new(shifted)
    })
}

/// Checks the dual candidate `f = −Y` directly on the problem data and
/// returns `f(target + eps·U)` normalized by `‖Y‖` if it separates.
pub fn separator_value(p: &ShiftProblem, f: &[CMat], eps: f64, gen_tol: f64) -> Option<f64> {
    let norm = f.iter().map(|b| frob(b).powi(2)).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    let val: f64 = f
        .iter()
        .zip(p.target.iter().zip(&p.unit))
        .map(|(fk, (xk, uk))| inner(fk, xk) + eps * inner(fk, uk))
        .sum::<f64>()
        / norm;
    if !(val < -1e-7) {
        return None;
    }
    for pad in &p.pads {
        let v: f64 = f.iter().zip(pad).map(|(a, b)| inner(a, b)).sum::<f64>() / norm;
        if v > gen_tol {
            return None;
        }
    }
    for j in 0..p.gmat.ncols() {
        let mut h = CMat::zeros(p.n, p.n);
        for (k, fk) in f.iter().enumerate() {
            let w = p.gmat[(k, j)];
            if w != 0.0 {
                h += fk * Complex64::new(w / norm, 0.0);
            }
        }
        if super::eig::min_eigenvalue(&h) < -gen_tol {
            return None;
        }
    }
    Some(val)
}

/// Decide whether `target + eps·U` is in the cone, stopping as soon as a
/// primal point with shift `≤ eps` or a separating dual is found. With
/// `eps = None` the solver runs to optimality and reports bounds only.
pub fn solve_shift(p: &ShiftProblem, eps: Option<f64>, opts: &SdpOptions) -> Result<SdpResult> {
    let dim = p.gmat.nrows();
    if p.target.len() != dim || p.unit.len() != dim || p.pads.iter().any(|pd| pd.len() != dim) {
        return Err(Error::DimensionMismatch(
            "shift problem blocks do not match the coordinate count".into(),
        ));
    }
    if p.n == 1 {
        return solve_shift_scalar(p, eps, opts);
    }
    let ops = Ops::new(p);
    let g = p.gmat.ncols();
    let mp = p.pads.len();
    let n = p.n;
    let nvar = (g * n + mp + 1) as f64;
    let bnorm = ops.b.norm();
    let xi = 10.0f64.max(bnorm.sqrt() * 10.0);
    let mut x = Var {
        q: vec![CMat::identity(n, n) * Complex64::new(xi, 0.0); g],
        t: vec![xi; mp],
        s: xi,
    };
    let mut z = Var {
        q: vec![CMat::identity(n, n) * Complex64::new(10.0, 0.0); g],
        t: vec![10.0; mp],
        s: 10.0,
    };
    let mut y = DVector::<f64>::zeros(ops.m());
    let c = ops.cost();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut primal_residual = f64::INFINITY;
    let mut short_steps = 0;
    let mut dual: Option<DVector<f64>> = None;

    let nb = n * n;
    let functional = |y: &DVector<f64>| -> Vec<CMat> {
        (0..dim)
            .map(|k| herm_from_coords(n, &y.as_slice()[k * nb..(k + 1) * nb]) * Complex64::new(-1.0, 0.0))
            .collect()
    };
    let mut iterations_done = 0;
    for it in 1..=opts.max_iter {
        iterations_done = it;
        let rp = &ops.b - ops.apply(&x);
        let aty = ops.adjoint(&y);
        let rd = c.axpy(-1.0, &aty).axpy(-1.0, &z);
        primal_residual = rp.norm();
        let mu = x.dot(&z) / nvar;

        let pfeas = primal_residual <= opts.feas_tol * (1.0 + bnorm);
        if pfeas {
            upper = upper.min(x.s - 1.0);
        }
        let dfeas = rd.norm() <= opts.feas_tol;
        if dfeas && ops.b.dot(&y) - 1.0 > lower {
            lower = ops.b.dot(&y) - 1.0;
            dual = Some(y.clone());
        }
        if let Some(eps) = eps {
            if pfeas && x.s - 1.0 <= eps {
                return Ok(SdpResult {
                    status: SdpStatus::Member {
                        blocks: x.q.clone(),
                        pad_weights: x.t.clone(),
                        shift: x.s - 1.0,
                    },
                    iterations: it,
                    lower,
                    upper,
                    primal_residual,
                    dual: dual.as_ref().map(functional),
                });
            }
            if ops.b.dot(&y) - 1.0 > eps {
                let nb = n * n;
                let f: Vec<CMat> = (0..dim)
                    .map(|k| {
                        ops.basis.from_coords(&y.as_slice()[k * nb..(k + 1) * nb])
                            * Complex64::new(-1.0, 0.0)
                    })
                    .collect();
                if let Some(value) = separator_value(p, &f, eps, 1e-9) {
                    return Ok(SdpResult {
                        status: SdpStatus::Separated {
                            functional: f,
                            value,
                        },
                        iterations: it,
                        lower,
                        upper,
                        primal_residual,
                        dual: dual.as_ref().map(functional),
                    });
                }
            }
        }
        if pfeas && dfeas && mu * nvar <= opts.gap_tol * (1.0 + upper.abs()) {
            return Ok(SdpResult {
                status: SdpStatus::Undecided,
                iterations: it,
                lower,
                upper,
                primal_residual,
                dual: dual.as_ref().map(functional),
            });
        }

        let (Some(xhalf), Some(zhalf_inv)) = (
            x.q.iter()
                .map(|q| herm_pow(q, 0.5))
                .collect::<Option<Vec<_>>>(),
            z.q.iter()
                .map(|q| herm_pow(q, -0.5))
                .collect::<Option<Vec<_>>>(),
        ) else {
            break;
        };
        let zinv: Vec<CMat> = zhalf_inv.iter().map(|h| h * h).collect();
        let schur = ops.schur(&xhalf, &zhalf_inv, &x, &z.t, z.s);
        let Some(chol) = factor(&schur) else { break };
        let solve = |rhs: &DVector<f64>| {
            let mut dy = chol.solve(rhs);
            for _ in 0..3 {
                let r = rhs - &schur * &dy;
                dy += chol.solve(&r);
            }
            dy
        };

        // complementarity residual R_c (per block) and its combination with rd
        let direction = |rc: &Var| -> (DVector<f64>, Var, Var) {
            let mut tmp = Var {
                q: rc
                    .q
                    .iter()
                    .zip(&x.q)
                    .zip(&rd.q)
                    .zip(&zinv)
                    .map(|(((r, xq), d), w)| r - sym(&(xq * d * w)))
                    .collect(),
                t: rc
                    .t
                    .iter()
                    .zip(&x.t)
                    .zip(&rd.t)
                    .zip(&z.t)
                    .map(|(((r, xv), d), zv)| r - xv * d / zv)
                    .collect(),
                s: rc.s - x.s * rd.s / z.s,
            };
            let rhs = &rp - ops.apply(&tmp);
            let dy = solve(&rhs);
            let atdy = ops.adjoint(&dy);
            let dz = rd.axpy(-1.0, &atdy);
            tmp.q = tmp
                .q
                .iter()
                .zip(&x.q)
                .zip(&atdy.q)
                .zip(&zinv)
                .map(|(((t0, xq), a), w)| t0 + sym(&(xq * a * w)))
                .collect();
            tmp.t = tmp
                .t
                .iter()
                .zip(&x.t)
                .zip(&atdy.t)
                .zip(&z.t)
                .map(|(((t0, xv), a), zv)| t0 + xv * a / zv)
                .collect();
            tmp.s += x.s * atdy.s / z.s;
            (dy, tmp, dz)
        };

        let rc_aff = Var {
            q: x.q.iter().map(|q| -q).collect(),
            t: x.t.iter().map(|v| -v).collect(),
            s: -x.s,
        };
        let (_, dx_a, dz_a) = direction(&rc_aff);
        let ap = step_length(&x, &dx_a);
        let ad = step_length(&z, &dz_a);
        let mu_aff = x.axpy(ap, &dx_a).dot(&z.axpy(ad, &dz_a)) / nvar;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let rc = Var {
            q: x.q
                .iter()
                .zip(&zinv)
                .zip(dx_a.q.iter().zip(&dz_a.q))
                .map(|((q, w), (dxa, dza))| {
                    w * Complex64::new(sigma * mu, 0.0) - q - sym(&(dxa * dza * w))
                })
                .collect(),
            t: x.t
                .iter()
                .zip(&z.t)
                .zip(dx_a.t.iter().zip(&dz_a.t))
                .map(|((xv, zv), (a, b))| sigma * mu / zv - xv - a * b / zv)
                .collect(),
            s: sigma * mu / z.s - x.s - dx_a.s * dz_a.s / z.s,
        };
        let (dy, dx, dz) = direction(&rc);
        let ap = step_length(&x, &dx);
        let ad = step_length(&z, &dz);
        short_steps = if ap.min(ad) < 1e-2 {
            short_steps + 1
        } else {
            0
        };
        if short_steps >= 3 {
            break;
        }
        x = x.axpy(ap, &dx);
        z = z.axpy(ad, &dz);
        y.axpy(ad, &dy, 1.0);
        for q in x.q.iter_mut().chain(z.q.iter_mut()) {
            *q = sym(q);
        }
        if !(x.norm().is_finite() && z.norm().is_finite()) {
            break;
        }
    }
    Ok(SdpResult {
        status: SdpStatus::Undecided,
        iterations: iterations_done,
        lower,
        upper,
        primal_residual,
        dual: dual.as_ref().map(functional),
    })
}

/// Largest step keeping `v + α dv ≥ 0`, scaled by 0.95 and capped at 1.
fn step_length_vec(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let amax = v.iter().zip(dv.iter()).filter(|(_, &d)| d < 0.0).map(|(&a, &d)| -a / d).fold(f64::INFINITY, f64::min);
    (0.95 * amax).min(1.0)
}

/// Level-1 specialization: every block is a scalar, so the problem is a
/// linear program over `v = (q, t, σ) ≥ 0` with columns `[G | −P | −U]`.
fn solve_shift_scalar(p: &ShiftProblem, eps: Option<f64>, opts: &SdpOptions) -> Result<SdpResult> {
    let dim = p.gmat.nrows();
    let g = p.gmat.ncols();
    let mp = p.pads.len();
    let nv = g + mp + 1;
    let mut a = DMatrix::<f64>::zeros(dim, nv);
    a.view_mut((0, 0), (dim, g)).copy_from(&p.gmat);
    for (i, pad) in p.pads.iter().enumerate() {
        for k in 0..dim {
            a[(k, g + i)] = -pad[k][(0, 0)].re;
        }
    }
    for k in 0..dim {
        a[(k, nv - 1)] = -p.unit[k][(0, 0)].re;
    }
    let b = DVector::from_fn(dim, |k, _| p.target[k][(0, 0)].re - p.unit[k][(0, 0)].re);
    let mut cost = DVector::<f64>::zeros(nv);
    cost[nv - 1] = 1.0;
    let bnorm = b.norm();
    let xi = 10.0f64.max(bnorm.sqrt() * 10.0);
    let mut v = DVector::from_element(nv, xi);
    let mut z = DVector::from_element(nv, 10.0);
    let mut y = DVector::<f64>::zeros(dim);
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut primal_residual = f64::INFINITY;
    let mut dual: Option<DVector<f64>> = None;
    let mut short_steps = 0;
    let scalar = |x: f64| CMat::from_element(1, 1, Complex64::new(x, 0.0));
    let functional = |y: &DVector<f64>| -> Vec<CMat> { y.iter().map(|&w| scalar(-w)).collect() };
    let done = |status, it, lower, upper, primal_residual, dual: &Option<DVector<f64>>| SdpResult {
        status,
        iterations: it,
        lower,
        upper,
        primal_residual,
        dual: dual.as_ref().map(functional),
    };
    let mut iterations_done = 0;
    for it in 1..=opts.max_iter {
        iterations_done = it;
        let rp = &b - &a * &v;
        let rd = &cost - a.transpose() * &y - &z;
        primal_residual = rp.norm();
        let mu = v.dot(&z) / nv as f64;
        let pfeas = primal_residual <= opts.feas_tol * (1.0 + bnorm);
        let dfeas = rd.norm() <= opts.feas_tol;
        if pfeas {
            upper = upper.min(v[nv - 1] - 1.0);
        }
        if dfeas && b.dot(&y) - 1.0 > lower {
            lower = b.dot(&y) - 1.0;
            dual = Some(y.clone());
        }
        if let Some(eps) = eps {
            if pfeas && v[nv - 1] - 1.0 <= eps {
                let status = SdpStatus::Member {
                    blocks: v.rows(0, g).iter().map(|&w| scalar(w)).collect(),
                    pad_weights: v.rows(g, mp).iter().copied().collect(),
                    shift: v[nv - 1] - 1.0,
                };
                return Ok(done(status, it, lower, upper, primal_residual, &dual));
            }
            if b.dot(&y) - 1.0 > eps {
                let f = functional(&y);
                if let Some(value) = separator_value(p, &f, eps, 1e-9) {
                    let status = SdpStatus::Separated { functional: f, value };
                    return Ok(done(status, it, lower, upper, primal_residual, &dual));
                }
            }
        }
        if pfeas && dfeas && mu * nv as f64 <= opts.gap_tol * (1.0 + upper.abs()) {
            return Ok(done(SdpStatus::Undecided, it, lower, upper, primal_residual, &dual));
        }
        let dvec = v.component_div(&z);
        let mut schur = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..nv {
            let col = a.column(j);
            schur.ger(dvec[j], &col, &col, 1.0);
        }
        let Some(chol) = factor(&schur) else { break };
        let direction = |rc: &DVector<f64>| {
            let tmp = rc - dvec.component_mul(&rd);
            let dy = chol.solve(&(&rp - &a * &tmp));
            let dz = &rd - a.transpose() * &dy;
            let dv = tmp + dvec.component_mul(&(a.transpose() * &dy));
            (dy, dv, dz)
        };
        let (_, dv_a, dz_a) = direction(&(-&v));
        let ap = step_length_vec(&v, &dv_a);
        let ad = step_length_vec(&z, &dz_a);
        let mu_aff = (&v + &dv_a * ap).dot(&(&z + &dz_a * ad)) / nv as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc = DVector::from_fn(nv, |j, _| (sigma * mu - dv_a[j] * dz_a[j]) / z[j] - v[j]);
        let (dy, dv, dz) = direction(&rc);
        let ap = step_length_vec(&v, &dv);
        let ad = step_length_vec(&z, &dz);
        v += &dv * ap;
        z += &dz * ad;
        y += &dy * ad;
        short_steps = if ap.min(ad) < 1e-2 { short_steps + 1 } else { 0 };
        if short_steps >= 3 || !(v.norm().is_finite() && z.norm().is_finite()) {
            break;
        }
    }
    Ok(done(SdpStatus::Undecided, iterations_done, lower, upper, primal_residual, &dual))
}
