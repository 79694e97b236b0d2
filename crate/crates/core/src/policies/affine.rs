use log::{debug, warn};
use pap_lp::{Constraint, LinearProgramSpec, Simplex, Status};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{dot, Instance};
use crate::uncertainty::UncertaintySet;

pub const DEFAULT_AFFINE_TOL: f64 = 1e-6;

/// `y(h) = P h + q` with first stage `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffinePolicy {
    pub x: Vec<f64>,
    /// `n × m`.
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    /// `max_{h ∈ U} d·(P h + q)`.
    pub z: f64,
    /// `c·x + z`.
    pub objective: f64,
    /// Master objective; a lower bound on the affine optimum.
    pub master_objective: f64,
    pub cuts: usize,
    pub max_violation: f64,
    pub method: AffineMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AffineMethod {
    /// Interior-point solve of the exact counterpart when the set admits one,
    /// cutting planes otherwise.
    Auto,
    CuttingPlane,
    Conic,
}

impl AffinePolicy {
    pub fn recourse(&self, h: &[f64]) -> Vec<f64> {
        self.p.iter().zip(&self.q).map(|(row, qi)| dot(row, h) + qi).collect()
    }
}

pub(super) struct Layout {
    pub n: usize,
    pub m: usize,
}

impl Layout {
    pub fn p(&self, i: usize, k: usize) -> usize {
        self.n + i * self.m + k
    }
    pub fn q(&self, i: usize) -> usize {
        self.n + self.n * self.m + i
    }
    pub fn z(&self) -> usize {
        self.n + self.n * self.m + self.n
    }
    pub fn len(&self) -> usize {
        self.z() + 1
    }
}

/// The three semi-infinite row families: covering row `j`, nonnegativity of
/// recourse `i`, and the epigraph of the second-stage cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Family {
    Cover(usize),
    Nonneg(usize),
    Objective,
}

impl Family {
    pub fn all(m: usize, n: usize, d_zero: bool) -> Vec<Family> {
        (0..m).map(Family::Cover).chain((0..n).map(Family::Nonneg)).chain((!d_zero).then_some(Family::Objective)).collect()
    }
}

fn cut_row(inst: &Instance, lay: &Layout, cut: Family, h: &[f64]) -> Constraint {
    let (n, m) = (lay.n, lay.m);
    let mut row = vec![0.0; lay.len()];
    match cut {
        Family::Cover(j) => {
            row[..n].copy_from_slice(&inst.a[j]);
            for i in 0..n {
                let b = inst.b[j][i];
                if b != 0.0 {
                    for k in 0..m {
                        row[lay.p(i, k)] = b * h[k];
                    }
                    row[lay.q(i)] = b;
                }
            }
            Constraint::ge(row, h[j])
        }
        Family::Nonneg(i) => {
            for k in 0..m {
                row[lay.p(i, k)] = h[k];
            }
            row[lay.q(i)] = 1.0;
            Constraint::ge(row, 0.0)
        }
        Family::Objective => {
            for i in 0..n {
                let d = inst.d[i];
                if d != 0.0 {
                    for k in 0..m {
                        row[lay.p(i, k)] = -d * h[k];
                    }
                    row[lay.q(i)] = -d;
                }
            }
            row[lay.z()] = 1.0;
            Constraint::ge(row, 0.0)
        }
    }
}

struct Separation {
    /// Most violated `h` and its violation, per family.
    rows: Vec<(Family, Vec<f64>, f64)>,
    max_violation: f64,
    z: f64,
}

/// Exact separation of `θ = (x, P, q, z)` through the support function.
fn separate(instance: &Instance, set: &UncertaintySet, lay: &Layout, theta: &[f64], d_zero: bool) -> Result<Separation> {
    let (m, n) = (lay.m, lay.n);
    let p: Vec<&[f64]> = (0..n).map(|i| &theta[lay.p(i, 0)..lay.p(i, 0) + m]).collect();
    let q: Vec<f64> = (0..n).map(|i| theta[lay.q(i)]).collect();
    let x = &theta[..n];
    let mut dp = vec![0.0; m];
    for i in 0..n {
        for k in 0..m {
            dp[k] += instance.d[i] * p[i][k];
        }
    }
    let mut rows = Vec::new();
    let mut max_violation: f64 = 0.0;
    let mut z = 0.0;
    for f in Family::all(m, n, d_zero) {
        let (w, offset) = match f {
            Family::Cover(j) => {
                let mut w = vec![0.0; m];
                w[j] = 1.0;
                for i in 0..n {
                    let b = instance.b[j][i];
                    if b != 0.0 {
                        for k in 0..m {
                            w[k] -= b * p[i][k];
                        }
                    }
                }
                (w, -(dot(&instance.a[j], x) + dot(&instance.b[j], &q)))
            }
            Family::Nonneg(i) => (p[i].iter().map(|v| -v).collect(), -q[i]),
            Family::Objective => (dp.clone(), dot(&instance.d, &q) - theta[lay.z()]),
        };
        let s = set.support(&w)?;
        let violation = s.value + offset;
        if f == Family::Objective {
            z = s.value + dot(&instance.d, &q);
        }
        max_violation = max_violation.max(violation);
        rows.push((f, s.argmax, violation));
    }
    Ok(Separation { rows, max_violation, z })
}

fn policy_from(
    instance: &Instance,
    lay: &Layout,
    theta: &[f64],
    sep: &Separation,
    master_objective: f64,
    cuts: usize,
    method: AffineMethod,
) -> AffinePolicy {
    let (m, n) = (lay.m, lay.n);
    let x: Vec<f64> = theta[..n].to_vec();
    let p = (0..n).map(|i| theta[lay.p(i, 0)..lay.p(i, 0) + m].to_vec()).collect();
    let q = (0..n).map(|i| theta[lay.q(i)]).collect();
    let objective = dot(&instance.c, &x) + sep.z;
    AffinePolicy { x, p, q, z: sep.z, objective, master_objective, cuts, max_violation: sep.max_violation, method }
}

/// Affine policy `y(h) = P h + q` minimizing the worst-case cost over `set`.
///
/// Uses the interior-point counterpart when the set has one and falls back to
/// constraint generation; either way the returned policy is checked by exact
/// separation and `objective` is the certified worst-case cost.
pub fn solve_affine(instance: &Instance, set: &UncertaintySet, tol: f64) -> Result<AffinePolicy> {
    solve_affine_with(instance, set, tol, AffineMethod::Auto)
}

pub fn solve_affine_with(instance: &Instance, set: &UncertaintySet, tol: f64, method: AffineMethod) -> Result<AffinePolicy> {
    let (m, n) = (instance.m, instance.n);
    if set.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: set.dim() });
    }
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange("tolerance must be positive".into()));
    }
    let lay = Layout { n, m };
    let d_zero = instance.d.iter().all(|v| *v == 0.0);
    let mut extra_seeds = Vec::new();
    if method != AffineMethod::CuttingPlane {
        match super::conic::solve(instance, set, &lay, d_zero)? {
            Some(mut theta) => {
                for v in &mut theta[..n] {
                    *v = v.max(0.0);
                }
                let sep = separate(instance, set, &lay, &theta, d_zero)?;
                let objective = dot(&instance.c, &theta[..n]) + theta[lay.z()];
                if sep.max_violation <= tol {
                    return Ok(policy_from(instance, &lay, &theta, &sep, objective, 0, AffineMethod::Conic));
                }
                warn!("interior-point policy violates a row by {:.3e}; refining with cuts", sep.max_violation);
                extra_seeds = sep.rows.into_iter().map(|(_, h, _)| h).collect();
            }
            None if method == AffineMethod::Conic => {
                return Err(Error::StrategyUnavailable("no conic description of this set".into()));
            }
            None => {}
        }
    }
    cutting_plane(instance, set, &lay, tol, d_zero, extra_seeds)
}

/// Constraint generation: the master LP over `(x, P, q, z)` holds the rows
/// only at finitely many `h`; each round adds the most violated `h` of every
/// family until no row is violated by more than `tol`.
fn cutting_plane(
    instance: &Instance,
    set: &UncertaintySet,
    lay: &Layout,
    tol: f64,
    d_zero: bool,
    extra_seeds: Vec<Vec<f64>>,
) -> Result<AffinePolicy> {
    let (m, n) = (lay.m, lay.n);
    let mut obj = vec![0.0; lay.len()];
    obj[..n].copy_from_slice(&instance.c);
    obj[lay.z()] = 1.0;
    let mut spec = LinearProgramSpec::new(obj);
    for i in 0..n {
        for k in 0..m {
            spec.set_free(lay.p(i, k));
        }
        spec.set_free(lay.q(i));
    }
    if d_zero {
        spec.set_bounds(lay.z(), 0.0, 0.0);
    }
    let mut seeds = vec![vec![0.0; m]];
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        if set.membership(&e, 1e-9)? {
            seeds.push(e);
        }
    }
    seeds.extend(extra_seeds);
    let families = Family::all(m, n, d_zero);
    for h in &seeds {
        for f in &families {
            spec.push(cut_row(instance, lay, *f, h));
        }
    }
    let cap = 200 * m;
    let mut cuts = 0;
    let mut lp = Simplex::new(spec)?;
    let mut sol = lp.solve()?;
    let mut rounds = 0;
    loop {
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(Error::LpStatus("infeasible")),
            Status::Unbounded => return Err(Error::LpStatus("unbounded")),
        }
        let mut theta = sol.x.clone();
        for v in &mut theta[..n] {
            *v = v.max(0.0);
        }
        let sep = separate(instance, set, lay, &theta, d_zero)?;
        if sep.max_violation <= tol {
            debug!("affine cuts: {rounds} rounds, {cuts} cuts");
            return Ok(policy_from(instance, lay, &theta, &sep, sol.objective, cuts, AffineMethod::CuttingPlane));
        }
        let new_rows: Vec<Constraint> =
            sep.rows.iter().filter(|r| r.2 > tol).map(|(f, h, _)| cut_row(instance, lay, *f, h)).collect();
        if cuts + new_rows.len() > cap {
            let objective = dot(&instance.c, &theta[..n]) + sep.z;
            return Err(Error::IterationCapExceeded { cuts, objective, violation: sep.max_violation });
        }
        cuts += new_rows.len();
        rounds += 1;
        sol = lp.resolve_with_rows(&new_rows)?;
    }
}
