//! JSON forms for complex matrices: row-major lists of `[re, im]` pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::linalg::{c, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct JMat(pub CMat);

#[derive(Serialize, Deserialize)]
struct Raw {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for JMat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m = &self.0;
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Raw {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JMat {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = Raw::deserialize(de)?;
        if r.data.len() != r.rows * r.cols {
            return Err(D::Error::custom(
                "matrix data length does not match its shape",
            ));
        }
        Ok(JMat(CMat::from_fn(r.rows, r.cols, |i, j| {
            let z = r.data[i * r.cols + j];
            c(z[0], z[1])
        })))
    }
}

pub fn wrap(ms: &[CMat]) -> Vec<JMat> {
    ms.iter().cloned().map(JMat).collect()
}

pub fn unwrap(ms: &[JMat]) -> Vec<CMat> {
    ms.iter().map(|m| m.0.clone()).collect()
}
