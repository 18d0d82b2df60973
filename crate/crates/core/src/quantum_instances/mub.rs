use num_complex::Complex64;

use super::instance::QuantumInstance;
use crate::error::{Error, Result};
use crate::numerics::linalg::c;
use crate::opsys_core::SpaceKind;

fn is_prime(d: usize) -> bool {
    d >= 2 && (2..).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

/// Standard basis plus `d` quadratic-phase bases for prime `d`; the three
/// Pauli eigenbases for `d = 2`.
pub fn mub_generate(d: usize) -> Result<QuantumInstance> {
    if !is_prime(d) {
        return Err(Error::UnsupportedDimension(format!(
            "MUB generation needs a prime dimension, got {d}"
        )));
    }
    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(d * (d + 1));
    for a in 0..d {
        let mut v = vec![c(0.0, 0.0); d];
        v[a] = c(1.0, 0.0);
        vectors.push(v);
    }
    if d == 2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vectors.push(vec![c(h, 0.0), c(h, 0.0)]);
        vectors.push(vec![c(h, 0.0), c(-h, 0.0)]);
        vectors.push(vec![c(h, 0.0), c(0.0, h)]);
        vectors.push(vec![c(h, 0.0), c(0.0, -h)]);
    } else {
        let s = 1.0 / (d as f64).sqrt();
        for x in 1..=d {
            for a in 0..d {
                vectors.push(
                    (0..d)
                        .map(|k| {
                            let phase = ((x * k * k + a * k) % d) as f64 / d as f64;
                            Complex64::from_polar(s, 2.0 * std::f64::consts::PI * phase)
                        })
                        .collect(),
                );
            }
        }
    }
    QuantumInstance::from_vectors(SpaceKind::Mub, d, vectors, None)
}
