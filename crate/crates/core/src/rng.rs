//! Seeded randomness. Every randomized routine takes a `u64` seed; parallel
//! work derives per-task streams with [`Rng64::split`] so results do not depend
//! on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use crate::numerics::CMat;

#[derive(Debug, Clone)]
pub struct Rng64 {
    inner: SplitMix64,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Independent stream for task `index` under `seed`.
    pub fn split(seed: u64, index: u64) -> Self {
        let mut base = SplitMix64::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mix: u64 = base
            .gen::<u64>()
            .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        Self::new(mix)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }

    /// Haar-random unit vector in C^n.
    pub fn unit_vector(&mut self, n: usize) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..n).map(|_| self.complex_normal()).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        v
    }

    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| self.complex_normal())
    }

    pub fn hermitian(&mut self, n: usize) -> CMat {
        let m = self.complex_matrix(n, n);
        (&m + m.adjoint()).map(|z| z * 0.5)
    }

    /// Random PSD matrix `G G*` with unit Frobenius norm.
    pub fn psd(&mut self, n: usize, rank: usize) -> CMat {
        let g = self.complex_matrix(n, rank.max(1));
        let p = &g * g.adjoint();
        let f = crate::numerics::linalg::frob(&p);
        p.map(|z| z / f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_streams() {
        let a: Vec<f64> = (0..5)
            .map({
                let mut r = Rng64::new(42);
                move |_| r.uniform()
            })
            .collect();
        let b: Vec<f64> = (0..5)
            .map({
                let mut r = Rng64::new(42);
                move |_| r.uniform()
            })
            .collect();
        assert_eq!(a, b);
        let mut s0 = Rng64::split(42, 0);
        let mut s1 = Rng64::split(42, 1);
        assert_ne!(s0.uniform(), s1.uniform());
    }
}
