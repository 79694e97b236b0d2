use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Data of `min c·x + max_h min_y d·y  s.t.  A x + B y(h) ≥ h, x, y ≥ 0`.
///
/// `a` and `b` are `m × n`, stored as rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl Instance {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let m = a.len();
        let n = c.len();
        let inst = Self { m, n, a, b, c, d };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let shape = |rows: &Vec<Vec<f64>>| rows.len() == m && rows.iter().all(|r| r.len() == n);
        if !shape(&self.a) || !shape(&self.b) || self.c.len() != n || self.d.len() != n {
            return Err(Error::InvalidDescriptor(format!("instance shapes inconsistent with m={m}, n={n}")));
        }
        let finite = |v: &f64| v.is_finite();
        if !self.a.iter().flatten().all(finite)
            || !self.b.iter().flatten().all(finite)
            || !self.c.iter().all(finite)
            || !self.d.iter().all(finite)
        {
            return Err(Error::InvalidDescriptor("instance has non-finite entries".into()));
        }
        if self.a.iter().flatten().any(|v| *v < 0.0) {
            return Err(Error::InvalidDescriptor("A must be nonnegative".into()));
        }
        if self.c.iter().chain(&self.d).any(|v| *v < 0.0) {
            return Err(Error::InvalidDescriptor("c and d must be nonnegative".into()));
        }
        Ok(())
    }

    /// Divide row `i` of `A` and `B` by `lambda[i]`.
    pub fn scale_rows(&self, lambda: &[f64]) -> Result<Self> {
        if lambda.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: lambda.len() });
        }
        if lambda.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::NonPositiveScale);
        }
        let scale = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter().zip(lambda).map(|(r, l)| r.iter().map(|v| v / l).collect()).collect()
        };
        Ok(Self { a: scale(&self.a), b: scale(&self.b), ..self.clone() })
    }

    /// Largest shortfall of `A x + B y ≥ h` (positive means violated).
    pub fn cover_violation(&self, x: &[f64], y: &[f64], h: &[f64]) -> f64 {
        (0..self.m)
            .map(|j| h[j] - dot(&self.a[j], x) - dot(&self.b[j], y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn cost(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.c, x) + dot(&self.d, y)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Matrix {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl Matrix {
    fn into_rows(self, m: usize, n: usize) -> std::result::Result<Vec<Vec<f64>>, String> {
        match self {
            Matrix::Nested(rows) => Ok(rows),
            Matrix::Flat(v) if v.len() == m * n => Ok(v.chunks(n.max(1)).map(|c| c.to_vec()).collect()),
            Matrix::Flat(v) => Err(format!("flat matrix has {} entries, expected {}", v.len(), m * n)),
        }
    }
}

#[derive(Deserialize)]
struct RawInstance {
    m: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawInstance::deserialize(de)?;
        let a = raw.a.into_rows(raw.m, raw.n).map_err(D::Error::custom)?;
        let b = raw.b.into_rows(raw.m, raw.n).map_err(D::Error::custom)?;
        let inst = Instance { m: raw.m, n: raw.n, a, b, c: raw.c, d: raw.d };
        inst.validate().map_err(|e| D::Error::custom(e.to_string()))?;
        Ok(inst)
    }
}
