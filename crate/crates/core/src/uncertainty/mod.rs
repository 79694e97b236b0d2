//! Uncertainty set families and their oracles.

mod json;
mod support;
mod vertices;

use pap_lp::{solve_lp, Constraint, LinearProgramSpec, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::instance::Instance;

pub use json::default_theta;
pub use support::SupportResult;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Hull {
    Vertices(Vec<Vec<f64>>),
    /// `conv(0, e_1, …, e_m, ν)` over every permutation `ν` of a vector with
    /// `r` entries equal to `value` and the rest zero. Kept implicit because
    /// the number of permutations explodes.
    PermutedNu { r: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `{h ≥ 0 : ‖h‖_p ≤ radius}`
    PNormBall { p: f64, radius: f64 },
    /// Nonnegative part of the unit Euclidean ball.
    Hypersphere,
    /// `{h ≥ 0 : ‖h‖_p ≤ 1, ‖h‖_q ≤ r}`
    TwoNormBalls { p: f64, q: f64, r: f64 },
    /// `{h ∈ [0,1]^m : Σ h ≤ k}`
    Budget { k: f64 },
    /// `{h ∈ [0,1]^m : α h ≤ 1}` with `α ≥ 0` of size `L × m`.
    BudgetIntersection { alpha: Vec<Vec<f64>> },
    /// `{h ∈ [0,1]^m : Σ h ≤ 1 + θ (h_i + h_j) for all i ≠ j}`
    GeneralizedBudget { theta: f64 },
    /// `{h ≥ 0 : (1−a)‖h‖² + a (Σ h)² ≤ 1}`
    PiEllipsoid { a: f64 },
    /// `diag(λ) · inner` for a permutation invariant `inner`.
    ScaledSpi { lambda: Vec<f64>, inner: Box<UncertaintySet> },
    /// `{h ≥ 0 : rows · h ≤ rhs}`
    ExplicitPolytope { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
    ExplicitConvHull(Hull),
}

/// An uncertainty set of dimension `m`.
///
/// Membership answers for the down-monotone completion of the set; support
/// maximizes over the set itself. The two only differ for the hull and the
/// generalized budget families, which are not down-monotone as written.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintySet {
    m: usize,
    family: Family,
}

fn check_dim(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::ParameterOutOfRange("dimension must be positive".into()));
    }
    Ok(())
}

fn out_of_range(msg: impl Into<String>) -> Error {
    Error::ParameterOutOfRange(msg.into())
}

impl UncertaintySet {
    pub fn p_norm_ball(m: usize, p: f64, radius: f64) -> Result<Self> {
        check_dim(m)?;
        if !(p >= 1.0 && p.is_finite()) {
            return Err(out_of_range(format!("p-norm ball needs finite p ≥ 1, got {p}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(out_of_range(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { m, family: Family::PNormBall { p, radius } })
    }

    pub fn hypersphere(m: usize) -> Result<Self> {
        check_dim(m)?;
        Ok(Self { m, family: Family::Hypersphere })
    }

    pub fn two_norm_balls(m: usize, p: f64, q: f64, r: f64) -> Result<Self> {
        check_dim(m)?;
        if !(p > q && q >= 1.0 && p.is_finite()) {
            return Err(out_of_range(format!("two norm balls need p > q ≥ 1, got p={p}, q={q}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(out_of_range(format!("radius must be positive, got {r}")));
        }
        Ok(Self { m, family: Family::TwoNormBalls { p, q, r } })
    }

    pub fn budget(m: usize, k: f64) -> Result<Self> {
        check_dim(m)?;
        if !(k >= 1.0 && k.is_finite()) {
            return Err(out_of_range(format!("budget must be at least 1, got {k}")));
        }
        Ok(Self { m, family: Family::Budget { k } })
    }

    pub fn budget_intersection(alpha: Vec<Vec<f64>>) -> Result<Self> {
        let m = alpha.first().map_or(0, |r| r.len());
        check_dim(m)?;
        if alpha.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidDescriptor("budget rows have unequal lengths".into()));
        }
        if alpha.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(out_of_range("budget coefficients must be finite and nonnegative"));
        }
        Ok(Self { m, family: Family::BudgetIntersection { alpha } })
    }

    pub fn generalized_budget(m: usize, theta: f64) -> Result<Self> {
        check_dim(m)?;
        if m < 2 || !(theta >= 0.0 && theta.is_finite()) {
            return Err(out_of_range(format!("generalized budget needs m ≥ 2 and θ ≥ 0, got m={m}, θ={theta}")));
        }
        Ok(Self { m, family: Family::GeneralizedBudget { theta } })
    }

    pub fn pi_ellipsoid(m: usize, a: f64) -> Result<Self> {
        check_dim(m)?;
        if !(0.0..=1.0).contains(&a) {
            return Err(out_of_range(format!("ellipsoid parameter must lie in [0,1], got {a}")));
        }
        Ok(Self { m, family: Family::PiEllipsoid { a } })
    }

    pub fn scaled_spi(lambda: Vec<f64>, inner: UncertaintySet) -> Result<Self> {
        if lambda.len() != inner.m {
            return Err(Error::DimensionMismatch { expected: inner.m, got: lambda.len() });
        }
        if lambda.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::NonPositiveScale);
        }
        if !inner.is_permutation_invariant() {
            return Err(Error::NotPermutationInvariant);
        }
        Ok(Self { m: inner.m, family: Family::ScaledSpi { lambda, inner: Box::new(inner) } })
    }

    /// `{h ≥ 0 : Σ r_i h_i² ≤ 1}`, a diagonal scaling of the hypersphere.
    pub fn weighted_ellipsoid(r: &[f64]) -> Result<Self> {
        if r.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositiveScale);
        }
        Self::scaled_spi(r.iter().map(|v| 1.0 / v.sqrt()).collect(), Self::hypersphere(r.len())?)
    }

    pub fn explicit_polytope(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.len());
        check_dim(m)?;
        if rows.len() != rhs.len() || rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidDescriptor("polytope rows and right-hand sides disagree".into()));
        }
        if rows.iter().flatten().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDescriptor("polytope has non-finite entries".into()));
        }
        Ok(Self { m, family: Family::ExplicitPolytope { rows, rhs } })
    }

    pub fn explicit_conv_hull(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let m = vertices.first().map_or(0, |r| r.len());
        check_dim(m)?;
        if vertices.iter().any(|v| v.len() != m) {
            return Err(Error::InvalidDescriptor("hull vertices have unequal lengths".into()));
        }
        if vertices.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(out_of_range("hull vertices must be finite and nonnegative"));
        }
        Ok(Self { m, family: Family::ExplicitConvHull(Hull::Vertices(vertices)) })
    }

    /// `conv(0, e_i, every permutation of value·(1 repeated r times, 0, …))`.
    pub fn permuted_nu_hull(m: usize, r: usize, value: f64) -> Result<Self> {
        check_dim(m)?;
        if r > m || !(value >= 0.0 && value.is_finite()) {
            return Err(out_of_range(format!("ν needs r ≤ m and value ≥ 0, got r={r}, value={value}")));
        }
        Ok(Self { m, family: Family::ExplicitConvHull(Hull::PermutedNu { r, value }) })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_permutation_invariant(&self) -> bool {
        matches!(
            self.family,
            Family::PNormBall { .. }
                | Family::Hypersphere
                | Family::TwoNormBalls { .. }
                | Family::Budget { .. }
                | Family::GeneralizedBudget { .. }
                | Family::PiEllipsoid { .. }
                | Family::ExplicitConvHull(Hull::PermutedNu { .. })
        )
    }

    /// Copy with the p-norm radius rescaled to 1 so that `e_i` lies on the
    /// boundary. Other families are returned unchanged.
    pub fn normalized(&self) -> Self {
        match self.family {
            Family::PNormBall { p, .. } => Self { m: self.m, family: Family::PNormBall { p, radius: 1.0 } },
            _ => self.clone(),
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: v.len() });
        }
        Ok(())
    }

    /// Whether `h` lies in the down-monotone completion of the set, with
    /// defining inequalities relaxed by `tol`.
    pub fn membership(&self, h: &[f64], tol: f64) -> Result<bool> {
        self.check_len(h)?;
        if h.iter().any(|v| !v.is_finite() || *v < -tol) {
            return Ok(false);
        }
        match &self.family {
            Family::GeneralizedBudget { theta } => {
                if self.contains_core(h, tol) {
                    return Ok(true);
                }
                generalized_budget_completion(h, *theta, tol)
            }
            Family::ExplicitConvHull(_) => self.hull_membership(h, tol),
            _ => Ok(self.contains_core(h, tol)),
        }
    }

    /// Direct check of the defining inequalities (no completion). Hulls are
    /// answered through the completion since they have no inequalities.
    fn contains_core(&self, h: &[f64], tol: f64) -> bool {
        if h.iter().any(|v| *v < -tol) {
            return false;
        }
        let hp: Vec<f64> = h.iter().map(|v| v.max(0.0)).collect();
        let boxed = || hp.iter().all(|v| *v <= 1.0 + tol);
        match &self.family {
            Family::PNormBall { p, radius } => norm_p(&hp, *p) <= radius + tol,
            Family::Hypersphere => norm_p(&hp, 2.0) <= 1.0 + tol,
            Family::TwoNormBalls { p, q, r } => norm_p(&hp, *p) <= 1.0 + tol && norm_p(&hp, *q) <= r + tol,
            Family::Budget { k } => boxed() && hp.iter().sum::<f64>() <= k + tol,
            Family::BudgetIntersection { alpha } => {
                boxed() && alpha.iter().all(|row| dot(row, &hp) <= 1.0 + tol)
            }
            Family::GeneralizedBudget { theta } => {
                let mut s = hp.clone();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                boxed() && hp.iter().sum::<f64>() - theta * (s[0] + s[1]) <= 1.0 + tol
            }
            Family::PiEllipsoid { a } => {
                let sq: f64 = hp.iter().map(|v| v * v).sum();
                let s: f64 = hp.iter().sum();
                (1.0 - a) * sq + a * s * s <= 1.0 + tol
            }
            Family::ScaledSpi { lambda, inner } => {
                let g: Vec<f64> = hp.iter().zip(lambda).map(|(v, l)| v / l).collect();
                inner.contains_core(&g, tol)
            }
            Family::ExplicitPolytope { rows, rhs } => rows.iter().zip(rhs).all(|(r, b)| dot(r, &hp) <= b + tol),
            Family::ExplicitConvHull(_) => self.hull_membership(&hp, tol).unwrap_or(false),
        }
    }

    /// Column generation on `min t : Σ λ_v v + t ≥ h, Σ λ_v = 1, λ, t ≥ 0`,
    /// pricing vertices with the support oracle.
    fn hull_membership(&self, h: &[f64], tol: f64) -> Result<bool> {
        let m = self.m;
        let mut columns: Vec<Vec<f64>> = vec![self.support(h)?.argmax];
        if let Family::ExplicitConvHull(Hull::PermutedNu { .. }) = self.family {
            columns.push(vec![0.0; m]);
        }
        for _ in 0..10_000 {
            let k = columns.len();
            let mut obj = vec![0.0; k + 1];
            obj[k] = 1.0;
            let mut spec = LinearProgramSpec::new(obj);
            for i in 0..m {
                let mut row: Vec<f64> = columns.iter().map(|c| c[i]).collect();
                row.push(1.0);
                spec.push(Constraint::ge(row, h[i]));
            }
            let mut conv = vec![1.0; k];
            conv.push(0.0);
            spec.push(Constraint::eq(conv, 1.0));
            let sol = solve_lp(&spec)?;
            if sol.status != Status::Optimal {
                return Err(Error::LpStatus("infeasible"));
            }
            if sol.objective <= tol {
                return Ok(true);
            }
            let duals = sol.duals.expect("optimal solutions carry duals");
            let y: Vec<f64> = duals[..m].iter().map(|v| v.max(0.0)).collect();
            let mu = duals[m];
            let best = self.support(&y)?;
            if best.value + mu <= 1e-10 {
                return Ok(false);
            }
            if columns.iter().any(|c| c == &best.argmax) {
                return Ok(sol.objective <= tol);
            }
            columns.push(best.argmax);
        }
        Err(Error::NonConvergence(10_000))
    }

    /// `(1/k)` times the largest sum of `k` coordinates over the set.
    pub fn gamma(&self, k: usize) -> Result<f64> {
        if !self.is_permutation_invariant() {
            return Err(Error::NotPermutationInvariant);
        }
        if k == 0 || k > self.m {
            return Err(out_of_range(format!("γ(k) needs 1 ≤ k ≤ {}, got {k}", self.m)));
        }
        let kf = k as f64;
        Ok(match &self.family {
            Family::PNormBall { p, radius } => radius * kf.powf(-1.0 / p),
            Family::Hypersphere => 1.0 / kf.sqrt(),
            Family::TwoNormBalls { p, q, r } => kf.powf(-1.0 / p).min(r * kf.powf(-1.0 / q)),
            Family::Budget { k: b } => (b / kf).min(1.0),
            Family::PiEllipsoid { a } => 1.0 / (a * kf * kf + (1.0 - a) * kf).sqrt(),
            _ => return self.gamma_oracle(k),
        })
    }

    /// γ(k) evaluated through the support oracle only.
    pub fn gamma_oracle(&self, k: usize) -> Result<f64> {
        if !self.is_permutation_invariant() {
            return Err(Error::NotPermutationInvariant);
        }
        if k == 0 || k > self.m {
            return Err(out_of_range(format!("γ(k) needs 1 ≤ k ≤ {}, got {k}", self.m)));
        }
        let mut w = vec![0.0; self.m];
        w[..k].iter_mut().for_each(|v| *v = 1.0);
        Ok(self.support(&w)?.value / k as f64)
    }

    /// `count` members, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_one(&mut rng)).collect()
    }

    fn sample_one(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let m = self.m;
        if let Family::ExplicitConvHull(hull) = &self.family {
            return sample_hull(hull, m, rng);
        }
        let u: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        if self.contains_core(&u, 0.0) {
            return u;
        }
        // shrink toward the origin until the ray re-enters the set
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let p: Vec<f64> = u.iter().map(|v| v * mid).collect();
            if self.contains_core(&p, 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = if rng.gen_bool(0.5) { lo } else { lo * rng.gen::<f64>() };
        u.iter().map(|v| v * t).collect()
    }

    /// Inner set and instance with rows rescaled so that the inner set is
    /// permutation invariant.
    pub fn unwrap_scaled(&self, instance: &Instance) -> Result<(Instance, UncertaintySet)> {
        match &self.family {
            Family::ScaledSpi { lambda, inner } => Ok((instance.scale_rows(lambda)?, (**inner).clone())),
            _ => Err(Error::InvalidDescriptor("unwrap_scaled needs a scaled permutation invariant set".into())),
        }
    }

    /// Linear description of the set (or of its completion, lifted with
    /// auxiliary variables for hulls): rows over `(h, aux)` of the form
    /// `row · (h, aux) ≤ rhs`, plus an upper bound on every `h_i`.
    pub(crate) fn linear_rep(&self) -> Option<LinearRep> {
        let m = self.m;
        let ones = || vec![1.0; m];
        match &self.family {
            Family::Budget { k } => Some(LinearRep { aux: 0, rows: vec![(ones(), *k)], h_upper: 1.0, aux_eq: None }),
            Family::BudgetIntersection { alpha } => Some(LinearRep {
                aux: 0,
                rows: alpha.iter().map(|r| (r.clone(), 1.0)).collect(),
                h_upper: 1.0,
                aux_eq: None,
            }),
            Family::GeneralizedBudget { theta } => {
                let mut rows = Vec::with_capacity(m * (m - 1) / 2);
                for i in 0..m {
                    for j in i + 1..m {
                        let mut r = ones();
                        r[i] -= theta;
                        r[j] -= theta;
                        rows.push((r, 1.0));
                    }
                }
                Some(LinearRep { aux: 0, rows, h_upper: 1.0, aux_eq: None })
            }
            Family::ExplicitPolytope { rows, rhs } => Some(LinearRep {
                aux: 0,
                rows: rows.iter().cloned().zip(rhs.iter().copied()).collect(),
                h_upper: f64::INFINITY,
                aux_eq: None,
            }),
            Family::ExplicitConvHull(Hull::Vertices(vs)) => {
                // h_i − Σ_v λ_v v_i ≤ 0, Σ λ_v = 1
                let k = vs.len();
                let rows = (0..m)
                    .map(|i| {
                        let mut r = vec![0.0; m + k];
                        r[i] = 1.0;
                        for (j, v) in vs.iter().enumerate() {
                            r[m + j] = -v[i];
                        }
                        (r, 0.0)
                    })
                    .collect();
                let upper = vs.iter().flatten().fold(0.0, |a: f64, b| a.max(*b));
                Some(LinearRep { aux: k, rows, h_upper: upper, aux_eq: Some(1.0) })
            }
            _ => None,
        }
    }
}

/// Rows `row · (h, aux) ≤ rhs`; when `aux_eq` is set the auxiliaries also
/// satisfy `Σ aux = aux_eq`.
pub(crate) struct LinearRep {
    pub aux: usize,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub h_upper: f64,
    pub aux_eq: Option<f64>,
}

impl LinearRep {
    /// Append this description to `spec`, with `h` at columns `h_at..h_at+m`
    /// and the auxiliaries at `aux_at..`.
    pub fn append_to(&self, spec: &mut LinearProgramSpec, m: usize, h_at: usize, aux_at: usize) {
        let n = spec.num_vars();
        for i in 0..m {
            spec.set_bounds(h_at + i, 0.0, self.h_upper);
        }
        for (row, rhs) in &self.rows {
            let mut full = vec![0.0; n];
            full[h_at..h_at + m].copy_from_slice(&row[..m]);
            full[aux_at..aux_at + self.aux].copy_from_slice(&row[m..]);
            spec.push(Constraint::le(full, *rhs));
        }
        if let Some(total) = self.aux_eq {
            let mut full = vec![0.0; n];
            full[aux_at..aux_at + self.aux].iter_mut().for_each(|v| *v = 1.0);
            spec.push(Constraint::eq(full, total));
        }
    }
}

fn generalized_budget_completion(h: &[f64], theta: f64, tol: f64) -> Result<bool> {
    let m = h.len();
    if h.iter().any(|v| *v > 1.0 + tol) {
        return Ok(false);
    }
    let mut spec = LinearProgramSpec::new(vec![0.0; m]);
    for (i, v) in h.iter().enumerate() {
        spec.set_bounds(i, v.max(0.0).min(1.0), 1.0);
    }
    for i in 0..m {
        for j in i + 1..m {
            let mut r = vec![1.0; m];
            r[i] -= theta;
            r[j] -= theta;
            spec.push(Constraint::le(r, 1.0 + tol));
        }
    }
    Ok(solve_lp(&spec)?.status == Status::Optimal)
}

fn sample_hull(hull: &Hull, m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pick = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        match hull {
            Hull::Vertices(vs) => vs[rng.gen_range(0..vs.len())].clone(),
            Hull::PermutedNu { r, value } => {
                let mut v = vec![0.0; m];
                match rng.gen_range(0..4) {
                    0 => {}
                    1 => v[rng.gen_range(0..m)] = 1.0,
                    _ => {
                        let idx = rand::seq::index::sample(rng, m, *r);
                        for i in idx.iter() {
                            v[i] = *value;
                        }
                    }
                }
                v
            }
        }
    };
    let k = rng.gen_range(1..=m + 1);
    let weights: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut h = vec![0.0; m];
    for w in weights {
        let v = pick(rng);
        for (hi, vi) in h.iter_mut().zip(&v) {
            *hi += w / total * vi;
        }
    }
    h
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm_p(h: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        return h.iter().map(|v| v.abs()).sum();
    }
    let mx = h.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
    if mx == 0.0 {
        return 0.0;
    }
    mx * h.iter().map(|v| (v.abs() / mx).powf(p)).sum::<f64>().powf(1.0 / p)
}

#[cfg(test)]
mod tests;
