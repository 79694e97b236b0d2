//! Adjustable solutions over simplices, the piecewise affine policy, an
//! affine baseline and an exact vertex oracle.

mod affine;
mod conic;

use pap_lp::{solve_lp, Constraint, LinearProgramSpec, Status};
use serde::Serialize;

use crate::domination::{max_plus_sum, DominatingSimplex, Provenance, Strategy};
use crate::error::{Error, Result};
use crate::instance::{dot, Instance};
use crate::uncertainty::UncertaintySet;

pub use affine::{solve_affine, solve_affine_with, AffineMethod, AffinePolicy, DEFAULT_AFFINE_TOL};

/// Largest `|V|·n` accepted by [`exact_ar`].
pub const EXACT_LIMIT: usize = 100_000;
/// Largest dense tableau (rows × columns) [`exact_ar`] will build.
pub const EXACT_TABLEAU_LIMIT: usize = 40_000_000;

/// Optimal first stage and per-vertex recourse of the adjustable problem over
/// a finite vertex list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// Worst second-stage cost `max_v d·y_v`.
    pub z: f64,
}

/// [`VertexSolution`] over the simplex vertices `β e_1, …, β e_m, β v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexArSolution {
    pub objective: f64,
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<Vec<f64>>,
    pub z: f64,
}

/// `min c·x + z` s.t. `z ≥ d·y_v`, `A x + B y_v ≥ h_v` for every listed `h_v`.
pub fn exact_ar(instance: &Instance, vertices: &[Vec<f64>]) -> Result<VertexSolution> {
    let (m, n) = (instance.m, instance.n);
    if vertices.len() * n > EXACT_LIMIT {
        return Err(Error::CombinatorialBlowup { limit: EXACT_LIMIT });
    }
    let rows = vertices.len() * (m + 1);
    if rows.saturating_mul(rows + n + vertices.len() * n + 1) > EXACT_TABLEAU_LIMIT {
        return Err(Error::CombinatorialBlowup { limit: EXACT_LIMIT });
    }
    if let Some(bad) = vertices.iter().find(|h| h.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
    }
    let nv = vertices.len();
    let z_at = n + nv * n;
    let nvars = z_at + 1;
    let mut obj = vec![0.0; nvars];
    obj[..n].copy_from_slice(&instance.c);
    obj[z_at] = 1.0;
    let mut spec = LinearProgramSpec::new(obj);
    let d_zero = instance.d.iter().all(|v| *v == 0.0);
    if d_zero {
        spec.set_bounds(z_at, 0.0, 0.0);
    }
    for (k, h) in vertices.iter().enumerate() {
        let y_at = n + k * n;
        if !d_zero {
            let mut row = vec![0.0; nvars];
            row[z_at] = 1.0;
            for (r, dj) in row[y_at..y_at + n].iter_mut().zip(&instance.d) {
                *r = -dj;
            }
            spec.push(Constraint::ge(row, 0.0));
        }
        for j in 0..m {
            if h[j] <= 0.0 && instance.a[j].iter().all(|v| *v >= 0.0) && instance.b[j].iter().all(|v| *v >= 0.0) {
                continue;
            }
            let mut row = vec![0.0; nvars];
            row[..n].copy_from_slice(&instance.a[j]);
            row[y_at..y_at + n].copy_from_slice(&instance.b[j]);
            spec.push(Constraint::ge(row, h[j]));
        }
    }
    let sol = solve_lp(&spec)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(Error::LpStatus("infeasible")),
        Status::Unbounded => return Err(Error::LpStatus("unbounded")),
    }
    let clip = |s: &[f64]| s.iter().map(|v| v.max(0.0)).collect::<Vec<f64>>();
    let x = clip(&sol.x[..n]);
    let y: Vec<Vec<f64>> = (0..nv).map(|k| clip(&sol.x[n + k * n..n + (k + 1) * n])).collect();
    let z = y.iter().map(|yv| dot(&instance.d, yv)).fold(0.0, f64::max);
    Ok(VertexSolution { objective: sol.objective, x, y, z })
}

/// The adjustable problem over the simplex's own vertices.
pub fn solve_simplex_ar(instance: &Instance, simplex: &DominatingSimplex) -> Result<SimplexArSolution> {
    if simplex.dim() != instance.m {
        return Err(Error::DimensionMismatch { expected: instance.m, got: simplex.dim() });
    }
    let sol = exact_ar(instance, &simplex.vertices())?;
    Ok(SimplexArSolution { objective: sol.objective, x_hat: sol.x, y_hat: sol.y, z: sol.z })
}

/// How a policy maps `h` to recourse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolicyKind {
    /// `x = 2x̂`, `y(h) = (1/β) Σ (h_i − βv_i)⁺ ŷ_i + ŷ_{m+1}`.
    Doubled,
    /// `x = x̂`, `y(h)` interpolated at the convex weights of the dominating
    /// point of `h` in the simplex.
    Interpolated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewisePolicy {
    pub kind: PolicyKind,
    pub x: Vec<f64>,
    pub beta: f64,
    pub v: Vec<f64>,
    pub y_hat: Vec<Vec<f64>>,
    /// `z_AR` over the simplex.
    pub simplex_objective: f64,
    #[serde(skip)]
    pub simplex: DominatingSimplex,
}

impl PiecewisePolicy {
    pub fn new(simplex: &DominatingSimplex, sol: &SimplexArSolution) -> Self {
        let kind = match simplex.provenance {
            Provenance::AppendixG | Provenance::AppendixH => PolicyKind::Interpolated,
            _ => PolicyKind::Doubled,
        };
        let x = match kind {
            PolicyKind::Doubled => sol.x_hat.iter().map(|v| 2.0 * v).collect(),
            PolicyKind::Interpolated => sol.x_hat.clone(),
        };
        Self {
            kind,
            x,
            beta: simplex.beta,
            v: simplex.v.clone(),
            y_hat: sol.y_hat.clone(),
            simplex_objective: sol.objective,
            simplex: simplex.clone(),
        }
    }

    /// Certified upper bound on the worst-case cost over the dominated set.
    pub fn guarantee(&self) -> f64 {
        match self.kind {
            PolicyKind::Doubled => 2.0 * self.simplex_objective,
            PolicyKind::Interpolated => self.simplex_objective,
        }
    }

    /// Weights on `ŷ_1, …, ŷ_{m+1}` used for `h`.
    fn weights(&self, h: &[f64]) -> Result<Vec<f64>> {
        let m = self.v.len();
        match self.kind {
            PolicyKind::Doubled => {
                let mut w: Vec<f64> =
                    h.iter().zip(&self.v).map(|(hi, vi)| (hi - self.beta * vi).max(0.0) / self.beta).collect();
                w.push(1.0);
                Ok(w)
            }
            PolicyKind::Interpolated => {
                let mut w = self.simplex.dominating_point(h)?.weights;
                let assigned: f64 = w[..m].iter().sum();
                w[m] = w[m].max(1.0 - assigned);
                Ok(w)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }
}

pub fn pap_recourse(policy: &PiecewisePolicy, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != policy.v.len() {
        return Err(Error::DimensionMismatch { expected: policy.v.len(), got: h.len() });
    }
    let w = policy.weights(h)?;
    let n = policy.x.len();
    let mut y = vec![0.0; n];
    for (wk, yk) in w.iter().zip(&policy.y_hat) {
        if *wk != 0.0 {
            for (a, b) in y.iter_mut().zip(yk) {
                *a += wk * b;
            }
        }
    }
    Ok(y)
}

/// `c·x + d·y(h)`.
pub fn pap_cost(policy: &PiecewisePolicy, instance: &Instance, h: &[f64]) -> Result<f64> {
    Ok(dot(&instance.c, &policy.x) + dot(&instance.d, &pap_recourse(policy, h)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstCost {
    /// Exact worst case when `exact`, otherwise the best sampled cost.
    pub value: f64,
    pub upper_bound: f64,
    pub exact: bool,
}

const FALLBACK_SAMPLES: usize = 2000;

/// Worst-case cost of the policy over `set`.
///
/// The cost is `const + Σ w_i (h_i − βv_i)⁺`, so one max-plus-sum gives it
/// exactly. When no strategy applies, returns the sampled maximum together
/// with the certified bound.
pub fn pap_worst_cost(policy: &PiecewisePolicy, instance: &Instance, set: &UncertaintySet) -> Result<WorstCost> {
    let m = policy.v.len();
    if set.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: set.dim() });
    }
    let cx = dot(&instance.c, &policy.x);
    let dy: Vec<f64> = policy.y_hat.iter().map(|y| dot(&instance.d, y)).collect();
    let base = cx + dy[m];
    let u: Vec<f64> = policy.v.iter().map(|x| policy.beta * x).collect();
    let w: Option<Vec<f64>> = match (policy.kind, policy.simplex.provenance) {
        (PolicyKind::Doubled, _) => Some(dy[..m].iter().map(|c| c / policy.beta).collect()),
        // a negative weight is never worth paying for: lower that h_i instead
        (PolicyKind::Interpolated, Provenance::AppendixG) => {
            Some(dy[..m].iter().map(|c| (c - dy[m]).max(0.0) / policy.beta).collect())
        }
        _ => None,
    };
    let upper = policy.guarantee();
    if let Some(w) = w {
        match max_plus_sum(set, &u, &w, Strategy::Auto) {
            Ok(r) => {
                let value = base + r.value;
                return Ok(WorstCost { value, upper_bound: value, exact: true });
            }
            Err(Error::StrategyUnavailable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut value = base;
    for h in set.sample(FALLBACK_SAMPLES, 0xC057) {
        value = value.max(pap_cost(policy, instance, &h)?);
    }
    Ok(WorstCost { value, upper_bound: upper, exact: false })
}
