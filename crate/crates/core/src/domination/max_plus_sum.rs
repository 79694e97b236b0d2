//! `max_{h ∈ U} Σ_i w_i (h_i − u_i)⁺` for nonnegative `w`.

use pap_lp::{solve_lp, Constraint, LinearProgramSpec, Status};

use crate::error::{Error, Result};
use crate::uncertainty::UncertaintySet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Uniform `u` and `w` on a permutation-invariant set: enumerate `k`.
    PiEnumeration,
    /// Branch and bound on the big-M mixed-integer program; needs an H-rep.
    Milp,
    /// Enumerate the subsets of positive coordinates through the support
    /// function; needs at most 20 active coordinates.
    SubsetOracle,
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxPlusSum {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub strategy: Strategy,
}

pub const SUBSET_ORACLE_MAX: usize = 20;
const NODE_LIMIT: usize = 200_000;
const PRUNE_TOL: f64 = 1e-9;

fn objective(h: &[f64], u: &[f64], w: &[f64]) -> f64 {
    h.iter().zip(u).zip(w).map(|((h, u), w)| w * (h - u).max(0.0)).sum()
}

fn uniform(v: &[f64]) -> bool {
    v.iter().all(|x| (x - v[0]).abs() <= 1e-12 * (1.0 + v[0].abs()))
}

pub fn max_plus_sum(set: &UncertaintySet, u: &[f64], w: &[f64], strategy: Strategy) -> Result<MaxPlusSum> {
    let m = set.dim();
    for v in [u, w] {
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: v.len() });
        }
    }
    if u.iter().chain(w).any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::ParameterOutOfRange("u and w must be finite and nonnegative".into()));
    }
    let pi_ok = set.is_permutation_invariant() && uniform(u) && uniform(w);
    match strategy {
        Strategy::PiEnumeration if pi_ok => pi_enumeration(set, u[0], w[0]),
        Strategy::PiEnumeration => {
            Err(Error::StrategyUnavailable("enumeration needs a permutation-invariant set and uniform u, w".into()))
        }
        Strategy::Milp => milp(set, u, w),
        Strategy::SubsetOracle => subset_oracle(set, u, w),
        Strategy::Auto if pi_ok => pi_enumeration(set, u[0], w[0]),
        Strategy::Auto if set.linear_rep().is_some() => milp(set, u, w),
        Strategy::Auto => subset_oracle(set, u, w),
    }
}

fn pi_enumeration(set: &UncertaintySet, u: f64, w: f64) -> Result<MaxPlusSum> {
    let m = set.dim();
    let mut best = (0.0, 0, 0.0);
    for k in 1..=m {
        let g = set.gamma(k)?;
        let val = k as f64 * (g - u).max(0.0) * w;
        if val > best.0 {
            best = (val, k, g);
        }
    }
    let (value, k, g) = best;
    let argmax = (0..m).map(|i| if i < k { g } else { 0.0 }).collect();
    Ok(MaxPlusSum { value, argmax, strategy: Strategy::PiEnumeration })
}

fn upper_bounds(set: &UncertaintySet) -> Result<Vec<f64>> {
    let m = set.dim();
    (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            Ok(set.support(&e)?.value)
        })
        .collect()
}

fn subset_oracle(set: &UncertaintySet, u: &[f64], w: &[f64]) -> Result<MaxPlusSum> {
    let m = set.dim();
    let ub = upper_bounds(set)?;
    let active: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0 && u[i] < ub[i]).collect();
    if active.len() > SUBSET_ORACLE_MAX {
        return Err(Error::StrategyUnavailable(format!(
            "subset enumeration over {} coordinates exceeds {SUBSET_ORACLE_MAX}",
            active.len()
        )));
    }
    let mut best = MaxPlusSum { value: 0.0, argmax: vec![0.0; m], strategy: Strategy::SubsetOracle };
    let mut ws = vec![0.0; m];
    for mask in 1u32..(1u32 << active.len()) {
        let mut shift = 0.0;
        for (bit, &i) in active.iter().enumerate() {
            ws[i] = if mask >> bit & 1 == 1 { w[i] } else { 0.0 };
            shift += ws[i] * u[i];
        }
        let s = set.support(&ws)?;
        if s.value - shift > best.value {
            best.value = s.value - shift;
            best.argmax = s.argmax;
        }
    }
    best.value = best.value.max(objective(&best.argmax, u, w));
    Ok(best)
}

/// Branch and bound on
/// `max Σ w_i z_i` s.t. `z_i ≤ h_i − u_i + M_i(1 − x_i)`, `z_i ≤ M_i x_i`,
/// `z_i ≤ h_i − u_i x_i`, `z_i ≤ (ub_i − u_i) x_i`, `x ∈ {0,1}`, `h ∈ U`,
/// over the coordinates that can contribute.
fn milp(set: &UncertaintySet, u: &[f64], w: &[f64]) -> Result<MaxPlusSum> {
    let m = set.dim();
    let rep = set.linear_rep().ok_or(Error::RequiresHRep)?;
    let ub = upper_bounds(set)?;
    let active: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0 && u[i] < ub[i] - 1e-12).collect();
    let na = active.len();
    let z_at = m + rep.aux;
    let x_at = z_at + na;
    let nvars = x_at + na;

    let mut obj = vec![0.0; nvars];
    for (j, &i) in active.iter().enumerate() {
        obj[z_at + j] = -w[i];
    }
    let mut base = LinearProgramSpec::new(obj);
    rep.append_to(&mut base, m, 0, m);
    for (j, &i) in active.iter().enumerate() {
        let (z, x) = (z_at + j, x_at + j);
        let big_m = ub[i].max(1.0);
        let mut row = vec![0.0; nvars];
        row[z] = 1.0;
        row[i] = -1.0;
        row[x] = big_m;
        base.push(Constraint::le(row, big_m - u[i]));
        let mut row = vec![0.0; nvars];
        row[z] = 1.0;
        row[x] = -big_m;
        base.push(Constraint::le(row, 0.0));
        let mut row = vec![0.0; nvars];
        row[z] = 1.0;
        row[i] = -1.0;
        row[x] = u[i];
        base.push(Constraint::le(row, 0.0));
        let mut row = vec![0.0; nvars];
        row[z] = 1.0;
        row[x] = -(ub[i] - u[i]);
        base.push(Constraint::le(row, 0.0));
        base.set_bounds(x, 0.0, 1.0);
    }

    let mut best = MaxPlusSum { value: 0.0, argmax: vec![0.0; m], strategy: Strategy::Milp };
    let mut stack: Vec<Vec<Option<bool>>> = vec![vec![None; na]];
    let mut nodes = 0;
    while let Some(fix) = stack.pop() {
        nodes += 1;
        if nodes > NODE_LIMIT {
            return Err(Error::NonConvergence(NODE_LIMIT));
        }
        let mut spec = base.clone();
        for (j, f) in fix.iter().enumerate() {
            if let Some(b) = f {
                let v = if *b { 1.0 } else { 0.0 };
                spec.set_bounds(x_at + j, v, v);
            }
        }
        let sol = solve_lp(&spec)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded => return Err(Error::LpStatus("unbounded")),
        }
        let bound = -sol.objective;
        let h: Vec<f64> = sol.x[..m].iter().map(|v| v.max(0.0)).collect();
        let value = objective(&h, u, w);
        if value > best.value {
            best.value = value;
            best.argmax = h;
        }
        if bound <= best.value + PRUNE_TOL {
            continue;
        }
        let branch = (0..na)
            .filter(|&j| fix[j].is_none())
            .map(|j| (j, sol.x[x_at + j]))
            .filter(|(_, x)| *x > 1e-7 && *x < 1.0 - 1e-7)
            .min_by(|a, b| (a.1 - 0.5).abs().partial_cmp(&(b.1 - 0.5).abs()).unwrap());
        let Some((j, _)) = branch else { continue };
        for b in [false, true] {
            let mut child = fix.clone();
            child[j] = Some(b);
            stack.push(child);
        }
    }
    Ok(best)
}

