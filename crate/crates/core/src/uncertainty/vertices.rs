use nalgebra::{DMatrix, DVector};

use super::{Family, Hull, UncertaintySet};
use crate::error::{Error, Result};

pub const VERTEX_LIMIT: usize = 1_000_000;
const ENUMERATION_MAX_DIM: usize = 8;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn indicator(m: usize, idx: &[usize], value: f64) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for &i in idx {
        v[i] = value;
    }
    v
}

impl UncertaintySet {
    /// Extreme points of the set, for the families where they are finite
    /// and cheap to list.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.m;
        match &self.family {
            Family::Budget { k } => {
                if k.fract() != 0.0 {
                    return Err(Error::VerticesUnavailable);
                }
                let b = (*k as usize).min(m);
                let total: f64 = (0..=b).map(|j| binomial(m, j)).sum();
                if total > VERTEX_LIMIT as f64 {
                    return Err(Error::CombinatorialBlowup { limit: VERTEX_LIMIT });
                }
                let mut out = Vec::with_capacity(total as usize);
                for j in 0..=b {
                    for_each_subset(m, j, |idx| out.push(indicator(m, idx, 1.0)));
                }
                Ok(out)
            }
            Family::ExplicitConvHull(Hull::Vertices(vs)) => {
                let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
                for v in vs {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Ok(out)
            }
            Family::ExplicitConvHull(Hull::PermutedNu { r, value }) => {
                let total = binomial(m, *r) + m as f64 + 1.0;
                if total > VERTEX_LIMIT as f64 {
                    return Err(Error::CombinatorialBlowup { limit: VERTEX_LIMIT });
                }
                let mut out = vec![vec![0.0; m]];
                for i in 0..m {
                    out.push(indicator(m, &[i], 1.0));
                }
                for_each_subset(m, *r, |idx| {
                    let v = indicator(m, idx, *value);
                    if !out.contains(&v) {
                        out.push(v)
                    }
                });
                Ok(out)
            }
            Family::ExplicitPolytope { .. } | Family::BudgetIntersection { .. } | Family::GeneralizedBudget { .. }
                if m <= ENUMERATION_MAX_DIM =>
            {
                self.enumerate_basic_points()
            }
            _ => Err(Error::VerticesUnavailable),
        }
    }

    /// Intersect every `m` of the defining hyperplanes and keep the feasible
    /// intersection points.
    fn enumerate_basic_points(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.m;
        let rep = self.linear_rep().expect("polyhedral family");
        let mut planes: Vec<(Vec<f64>, f64)> = rep.rows.clone();
        for i in 0..m {
            let e = indicator(m, &[i], 1.0);
            if rep.h_upper.is_finite() {
                planes.push((e.clone(), rep.h_upper));
            }
            planes.push((e.iter().map(|v| -v).collect(), 0.0));
        }
        if binomial(planes.len(), m) > 50.0 * VERTEX_LIMIT as f64 {
            return Err(Error::CombinatorialBlowup { limit: VERTEX_LIMIT });
        }
        let tol = 1e-9;
        let mut out: Vec<Vec<f64>> = Vec::new();
        for_each_subset(planes.len(), m, |pick| {
            let a = DMatrix::from_fn(m, m, |r, c| planes[pick[r]].0[c]);
            let b = DVector::from_iterator(m, pick.iter().map(|&i| planes[i].1));
            let lu = a.lu();
            if lu.u().diagonal().iter().any(|d| d.abs() < 1e-10) {
                return;
            }
            let Some(x) = lu.solve(&b) else { return };
            if x.iter().any(|v| !v.is_finite()) {
                return;
            }
            let x: Vec<f64> = x.iter().map(|v| if v.abs() < 1e-12 { 0.0 } else { *v }).collect();
            let feasible = planes.iter().all(|(row, rhs)| super::dot(row, &x) <= rhs + tol);
            if feasible && !out.iter().any(|o| o.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
                out.push(x);
            }
        });
        if out.len() > VERTEX_LIMIT {
            return Err(Error::CombinatorialBlowup { limit: VERTEX_LIMIT });
        }
        Ok(out)
    }
}
