use pap_lp::{solve_lp, LinearProgramSpec, Status};
use serde::{Deserialize, Serialize};

use super::{dot, norm_p, Family, Hull, UncertaintySet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportResult {
    pub value: f64,
    pub argmax: Vec<f64>,
}

impl SupportResult {
    fn from_point(w: &[f64], argmax: Vec<f64>) -> Self {
        Self { value: dot(w, &argmax), argmax }
    }
}

impl UncertaintySet {
    /// Maximize `w·h` over the set.
    pub fn support(&self, w: &[f64]) -> Result<SupportResult> {
        self.check_len(w)?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDescriptor("support direction has non-finite entries".into()));
        }
        let m = self.m;
        let argmax = match &self.family {
            Family::PNormBall { p, radius } => p_ball_argmax(w, *p, *radius),
            Family::Hypersphere => p_ball_argmax(w, 2.0, 1.0),
            Family::TwoNormBalls { p, q, r } => two_balls_argmax(w, *p, *q, *r),
            Family::Budget { k } => budget_argmax(w, *k),
            Family::PiEllipsoid { a } => ellipsoid_argmax(w, *a),
            Family::ScaledSpi { lambda, inner } => {
                let lw: Vec<f64> = w.iter().zip(lambda).map(|(a, b)| a * b).collect();
                let g = inner.support(&lw)?.argmax;
                g.iter().zip(lambda).map(|(a, b)| a * b).collect()
            }
            Family::ExplicitConvHull(Hull::Vertices(vs)) => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (j, v) in vs.iter().enumerate() {
                    let val = dot(w, v);
                    if val > best_val {
                        best_val = val;
                        best = j;
                    }
                }
                vs[best].clone()
            }
            Family::ExplicitConvHull(Hull::PermutedNu { r, value }) => nu_argmax(w, m, *r, *value),
            Family::BudgetIntersection { .. } | Family::GeneralizedBudget { .. } | Family::ExplicitPolytope { .. } => {
                return self.lp_support(w)
            }
        };
        Ok(SupportResult::from_point(w, argmax))
    }

    fn lp_support(&self, w: &[f64]) -> Result<SupportResult> {
        let m = self.m;
        let rep = self.linear_rep().expect("polyhedral family");
        let mut obj: Vec<f64> = w.iter().map(|v| -v).collect();
        obj.resize(m + rep.aux, 0.0);
        let mut spec = LinearProgramSpec::new(obj);
        rep.append_to(&mut spec, m, 0, m);
        let sol = solve_lp(&spec)?;
        match sol.status {
            Status::Optimal => {
                let argmax: Vec<f64> = sol.x[..m].iter().map(|v| v.max(0.0)).collect();
                Ok(SupportResult::from_point(w, argmax))
            }
            Status::Unbounded => Err(Error::LpStatus("unbounded")),
            Status::Infeasible => Err(Error::LpStatus("infeasible")),
        }
    }
}

fn positive(w: &[f64]) -> Vec<f64> {
    w.iter().map(|v| v.max(0.0)).collect()
}

fn first_argmax(w: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in w.iter().enumerate() {
        if *v > w[best] {
            best = i;
        }
    }
    best
}

/// Hölder equality case on the positive part of `w`.
pub(super) fn p_ball_argmax(w: &[f64], p: f64, radius: f64) -> Vec<f64> {
    let wp = positive(w);
    let m = w.len();
    if wp.iter().all(|v| *v == 0.0) {
        return vec![0.0; m];
    }
    if p == 1.0 {
        let mut h = vec![0.0; m];
        h[first_argmax(&wp)] = radius;
        return h;
    }
    let q = p / (p - 1.0);
    let nq = norm_p(&wp, q);
    wp.iter().map(|v| radius * (v / nq).powf(q - 1.0)).collect()
}

fn budget_argmax(w: &[f64], k: f64) -> Vec<f64> {
    let m = w.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap().then(i.cmp(&j)));
    let mut h = vec![0.0; m];
    let mut left = k;
    for i in order {
        if w[i] <= 0.0 || left <= 0.0 {
            break;
        }
        h[i] = left.min(1.0);
        left -= h[i];
    }
    h
}

/// Active-set iteration: on support `S` the maximizer is proportional to
/// `w_S − c_S e` with `c_S = a Σ_S w / (1 − a + a|S|)`; coordinates with
/// `w_i ≤ c_S` leave `S` until none does.
fn ellipsoid_argmax(w: &[f64], a: f64) -> Vec<f64> {
    let m = w.len();
    let mut h = vec![0.0; m];
    if w.iter().all(|v| *v <= 0.0) {
        return h;
    }
    if a >= 1.0 - 1e-12 {
        h[first_argmax(w)] = 1.0;
        return h;
    }
    let mut active: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0).collect();
    let c = loop {
        let s: f64 = active.iter().map(|&i| w[i]).sum();
        let c = a * s / (1.0 - a + a * active.len() as f64);
        let keep: Vec<usize> = active.iter().copied().filter(|&i| w[i] > c).collect();
        if keep.len() == active.len() {
            break c;
        }
        active = keep;
    };
    for &i in &active {
        h[i] = w[i] - c;
    }
    let sq: f64 = h.iter().map(|v| v * v).sum();
    let sum: f64 = h.iter().sum();
    let scale = ((1.0 - a) * sq + a * sum * sum).sqrt();
    h.iter_mut().for_each(|v| *v /= scale);
    h
}

fn two_balls_argmax(w: &[f64], p: f64, q: f64, r: f64) -> Vec<f64> {
    let wp = positive(w);
    let m = w.len();
    if wp.iter().all(|v| *v == 0.0) {
        return vec![0.0; m];
    }
    let hp = p_ball_argmax(&wp, p, 1.0);
    if norm_p(&hp, q) <= r * (1.0 + 1e-12) {
        return hp;
    }
    let hq = p_ball_argmax(&wp, q, r);
    if norm_p(&hq, p) <= 1.0 + 1e-12 {
        return hq;
    }
    // Both balls bind: w_i = λ (h_i^{p−1} + ρ h_i^{q−1}). For fixed ρ pick λ
    // so that ‖h‖_p = 1, then bisect ρ until ‖h‖_q = r.
    let point = |rho: f64| -> Vec<f64> {
        let at = |lam: f64| -> Vec<f64> { wp.iter().map(|&wi| scalar_root(wi / lam, p, q, rho)).collect() };
        let mut hi = 1.0_f64;
        while norm_p(&at(hi), p) > 1.0 {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        while norm_p(&at(lo), p) < 1.0 && lo > 1e-300 {
            lo /= 2.0;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if norm_p(&at(mid), p) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while norm_p(&point(hi), q) > r && hi < 1e12 {
        lo = hi;
        hi *= 4.0;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if norm_p(&point(mid), q) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = point(hi);
    let s = (1.0 / norm_p(&h, p)).min(r / norm_p(&h, q)).min(1.0);
    h.iter().map(|v| v * s).collect()
}

/// Solve `h^{p−1} + ρ h^{q−1} = t` for `h ≥ 0` (`p > q ≥ 1`).
fn scalar_root(t: f64, p: f64, q: f64, rho: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return (t - rho).max(0.0).powf(1.0 / (p - 1.0));
    }
    let g = |h: f64| h.powf(p - 1.0) + rho * h.powf(q - 1.0);
    let (mut lo, mut hi) = (0.0_f64, t.powf(1.0 / (p - 1.0)));
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn nu_argmax(w: &[f64], m: usize, r: usize, value: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap().then(i.cmp(&j)));
    let mut best = vec![0.0; m];
    let mut best_val = 0.0;
    let i = order[0];
    if w[i] > best_val {
        best = vec![0.0; m];
        best[i] = 1.0;
        best_val = w[i];
    }
    let top: f64 = order[..r].iter().map(|&i| w[i]).sum::<f64>() * value;
    if r > 0 && top > best_val {
        best = vec![0.0; m];
        for &i in &order[..r] {
            best[i] = value;
        }
    }
    best
}
