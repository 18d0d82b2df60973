use num_complex::Complex64;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::instance::{overlap_error, QuantumInstance};
use crate::error::{Error, Result};
use crate::opsys_core::SpaceKind;
use crate::rng::Rng64;

pub const SIC_TOL: f64 = 1e-6;
const INITIAL_STEP: f64 = 0.05;
const MIN_STEP: f64 = 1e-16;
const POLISH_ITERS: usize = 50;

/// Off-diagonal frame potential `Σ_{a≠b} |⟨φ_a, φ_b⟩|⁴`.
pub fn frame_potential(vectors: &[Vec<Complex64>]) -> f64 {
    let mut total = 0.0;
    for a in 0..vectors.len() {
        for b in a + 1..vectors.len() {
            total += 2.0 * dot(&vectors[a], &vectors[b]).norm_sqr().powi(2);
        }
    }
    total
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Tangent component of `∂/∂φ̄_a` of the potential for every `a`.
fn gradient(vectors: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let m = vectors.len();
    let d = vectors[0].len();
    let mut grads = vec![vec![Complex64::new(0.0, 0.0); d]; m];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let z = dot(&vectors[b], &vectors[a]);
            let w = 4.0 * z.norm_sqr() * z;
            for (g, y) in grads[a].iter_mut().zip(&vectors[b]) {
                *g += w * y;
            }
        }
        let radial = dot(&vectors[a], &grads[a]).re;
        for (g, y) in grads[a].iter_mut().zip(&vectors[a]) {
            *g -= radial * y;
        }
    }
    grads
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
}

/// One projected-gradient run from a Haar-random start.
fn descend(d: usize, max_iters: usize, rng: &mut Rng64) -> Vec<Vec<Complex64>> {
    let mut vectors: Vec<Vec<Complex64>> = (0..d * d).map(|_| rng.unit_vector(d)).collect();
    let mut value = frame_potential(&vectors);
    let mut iter = 0;
    while iter < max_iters {
        if overlap_error(SpaceKind::Sic, d, &vectors) <= SIC_TOL * 1e-3 {
            break;
        }
        let grads = gradient(&vectors);
        let mut step = INITIAL_STEP;
        loop {
            iter += 1;
            let trial: Vec<Vec<Complex64>> = vectors
                .iter()
                .zip(&grads)
                .map(|(v, g)| {
                    let mut t: Vec<Complex64> = v.iter().zip(g).map(|(x, y)| x - step * y).collect();
                    normalize(&mut t);
                    t
                })
                .collect();
            let tv = frame_potential(&trial);
            if tv < value {
                vectors = trial;
                value = tv;
                break;
            }
            step *= 0.5;
            if iter >= max_iters || step <= MIN_STEP {
                return vectors;
            }
        }
    }
    vectors
}

/// Levenberg–Marquardt on the equations `|⟨φ_a, φ_b⟩|² = 1/(d+1)` and
/// `‖φ_a‖² = 1`, over the real and imaginary parts of all entries.
fn polish(vectors: &mut Vec<Vec<Complex64>>, iters: usize) {
    let m = vectors.len();
    let d = vectors[0].len();
    let lambda = 1.0 / (d as f64 + 1.0);
    let nvar = 2 * d * m;
    let residuals = |v: &[Vec<Complex64>]| -> DVector<f64> {
        let mut r = Vec::with_capacity(m * (m + 1) / 2);
        for a in 0..m {
            r.push(v[a].iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0);
            for b in a + 1..m {
                r.push(dot(&v[a], &v[b]).norm_sqr() - lambda);
            }
        }
        DVector::from_vec(r)
    };
    let mut mu = 1e-3;
    let mut r = residuals(vectors);
    for _ in 0..iters {
        if r.amax() <= 1e-14 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(r.len(), nvar);
        let var = |a: usize, k: usize, imag: usize| 2 * (a * d + k) + imag;
        let mut row = 0;
        for a in 0..m {
            for k in 0..d {
                let z = vectors[a][k];
                jac[(row, var(a, k, 0))] = 2.0 * z.re;
                jac[(row, var(a, k, 1))] = 2.0 * z.im;
            }
            row += 1;
            for b in a + 1..m {
                let zc = dot(&vectors[a], &vectors[b]).conj();
                for k in 0..d {
                    let pb = vectors[b][k];
                    let pa = vectors[a][k].conj();
                    jac[(row, var(a, k, 0))] = 2.0 * (zc * pb).re;
                    jac[(row, var(a, k, 1))] = 2.0 * (zc * pb * Complex64::new(0.0, -1.0)).re;
                    jac[(row, var(b, k, 0))] = 2.0 * (zc * pa).re;
                    jac[(row, var(b, k, 1))] = 2.0 * (zc * pa * Complex64::new(0.0, 1.0)).re;
                }
                row += 1;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let norm = r.norm();
        let mut improved = false;
        for _ in 0..20 {
            let mut lhs = jtj.clone();
            for i in 0..nvar {
                lhs[(i, i)] += mu;
            }
            let Some(ch) = lhs.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let delta = ch.solve(&g);
            let trial: Vec<Vec<Complex64>> = (0..m)
                .map(|a| {
                    (0..d)
                        .map(|k| {
                            vectors[a][k]
                                - Complex64::new(delta[var(a, k, 0)], delta[var(a, k, 1)])
                        })
                        .collect()
                })
                .collect();
            let tr = residuals(&trial);
            if tr.norm() < norm {
                *vectors = trial;
                r = tr;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    for v in vectors.iter_mut() {
        normalize(v);
    }
}

/// Best instance over `restarts` seeded runs, whether or not it meets the
/// tolerance.
pub fn sic_search_best(d: usize, restarts: usize, max_iters: usize, seed: u64) -> Result<QuantumInstance> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d must be at least 2, got {d}")));
    }
    let runs: Vec<Vec<Vec<Complex64>>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut v = descend(d, max_iters, &mut Rng64::split(seed, r));
            if max_iters > 0 {
                polish(&mut v, POLISH_ITERS);
            }
            v
        })
        .collect();
    let best = runs
        .into_iter()
        .map(|v| (overlap_error(SpaceKind::Sic, d, &v), v))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    QuantumInstance::from_vectors(SpaceKind::Sic, d, best.1, Some(seed))
}

/// Numerical SIC by frame-potential minimization; fails unless the best
/// restart reaches overlap error `≤ 1e-6`.
pub fn sic_search(d: usize, restarts: usize, max_iters: usize, seed: u64) -> Result<QuantumInstance> {
    let best = sic_search_best(d, restarts, max_iters, seed)?;
    if best.max_overlap_error > SIC_TOL {
        return Err(Error::SearchFailed {
            best_error: best.max_overlap_error,
        });
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_difference() {
        let mut rng = Rng64::new(3);
        let v: Vec<Vec<Complex64>> = (0..4).map(|_| rng.unit_vector(2)).collect();
        let g = gradient(&v);
        let dir: Vec<Vec<Complex64>> = (0..4)
            .map(|a| {
                let u = rng.unit_vector(2);
                let radial = dot(&v[a], &u).re;
                u.iter().zip(&v[a]).map(|(x, y)| x - radial * y).collect()
            })
            .collect();
        let h = 1e-6;
        let shifted = |s: f64| -> Vec<Vec<Complex64>> {
            v.iter()
                .zip(&dir)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
                .collect()
        };
        let fd = (frame_potential(&shifted(h)) - frame_potential(&shifted(-h))) / (2.0 * h);
        let mut analytic = 0.0;
        for a in 0..4 {
            analytic += 2.0 * dot(&g[a], &dir[a]).re;
        }
        assert!((fd - analytic).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} vs {analytic}");
    }

    #[test]
    fn qubit_sic_potential() {
        let s = sic_search(2, 20, 2_000, 0).unwrap();
        assert!(s.max_overlap_error <= SIC_TOL);
        assert!((frame_potential(&s.vectors) - 4.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn qutrit_and_ququart_sic_overlaps() {
        for d in [3, 4] {
            let s = sic_search(d, 20, 2_000, 0).unwrap();
            assert!(s.max_overlap_error <= SIC_TOL, "d={d}: {}", s.max_overlap_error);
            let l = 1.0 / (d as f64 + 1.0);
            let pot = (d * d * (d * d - 1)) as f64 * l * l;
            assert!((frame_potential(&s.vectors) - pot).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_iterations_fail() {
        match sic_search(2, 3, 0, 1) {
            Err(Error::SearchFailed { best_error }) => assert!(best_error > SIC_TOL),
            other => panic!("expected SearchFailed, got {other:?}"),
        }
    }
}
