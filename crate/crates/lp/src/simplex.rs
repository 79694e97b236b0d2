use nalgebra::DMatrix;

use crate::model::{Constraint, LinearProgramSpec, LpSolution, Status};
use crate::LpError;

/// Absolute tolerance on row and bound residuals of a returned solution.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Tolerance on reduced costs used by pricing.
pub const OPTIMALITY_TOL: f64 = 1e-8;

const PRIMAL_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 1000;
const REFRESH_EVERY: usize = 100;
const MAX_REFACTORS: usize = 3;

/// Solve `spec` from scratch.
pub fn solve_lp(spec: &LinearProgramSpec) -> Result<LpSolution, LpError> {
    Simplex::new(spec.clone())?.solve()
}

/// Solve `spec` augmented with `new_rows`.
pub fn resolve_with_rows(spec: &LinearProgramSpec, new_rows: &[Constraint]) -> Result<LpSolution, LpError> {
    let mut aug = spec.clone();
    aug.constraints.extend_from_slice(new_rows);
    solve_lp(&aug)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Done,
    Infeasible,
    Unbounded,
}

struct Ratio {
    row: Option<usize>,
    theta: f64,
    target: f64,
}

/// Stateful solver. Rows can be appended after a solve and the problem
/// re-optimized from the previous basis.
///
/// Every row `i` owns a logical variable `s_i = a_i·x` whose bounds come from
/// the relation. The tableau expresses each basic variable as a linear
/// combination of the `n` nonbasic ones; there is no right-hand side because
/// all row data lives in the logical bounds.
#[derive(Clone, Debug)]
pub struct Simplex {
    spec: LinearProgramSpec,
    n: usize,
    m: usize,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    t: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    since_refresh: usize,
    degenerate_run: usize,
    bland: bool,
}

impl Simplex {
    pub fn new(spec: LinearProgramSpec) -> Result<Self, LpError> {
        spec.validate()?;
        let n = spec.num_vars();
        let mut s = Self {
            n,
            m: 0,
            lo: spec.lower.clone(),
            up: spec.upper.clone(),
            x: Vec::with_capacity(n),
            basis: Vec::new(),
            nonbasic: (0..n).collect(),
            t: Vec::new(),
            d: spec.objective.clone(),
            iterations: 0,
            since_refresh: 0,
            degenerate_run: 0,
            bland: false,
            spec: LinearProgramSpec { constraints: Vec::new(), ..spec.clone() },
        };
        for j in 0..n {
            let v = if s.lo[j].is_finite() {
                s.lo[j]
            } else if s.up[j].is_finite() {
                s.up[j]
            } else {
                0.0
            };
            s.x.push(v);
        }
        s.append(&spec.constraints);
        Ok(s)
    }

    pub fn spec(&self) -> &LinearProgramSpec {
        &self.spec
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    /// Pivots performed by the last call to `solve`/`resolve_with_rows`.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        self.run()
    }

    /// Append rows and re-optimize, warm-starting from the current basis.
    pub fn resolve_with_rows(&mut self, rows: &[Constraint]) -> Result<LpSolution, LpError> {
        for (i, r) in rows.iter().enumerate() {
            if r.coeffs.len() != self.n {
                return Err(LpError::InvalidSpec(format!("new row {i} has wrong width")));
            }
            if !r.rhs.is_finite() || r.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(LpError::InvalidSpec(format!("new row {i} has a non-finite entry")));
            }
        }
        self.append(rows);
        self.run()
    }

    fn append(&mut self, rows: &[Constraint]) {
        let n = self.n;
        for r in rows {
            let mut trow: Vec<f64> = self
                .nonbasic
                .iter()
                .map(|&j| if j < n { r.coeffs[j] } else { 0.0 })
                .collect();
            for i in 0..self.m {
                let b = self.basis[i];
                if b < n && r.coeffs[b] != 0.0 {
                    let f = r.coeffs[b];
                    let src = &self.t[i * n..(i + 1) * n];
                    for (dst, v) in trow.iter_mut().zip(src) {
                        *dst += f * v;
                    }
                }
            }
            let act: f64 = r.coeffs.iter().zip(&self.x[..n]).map(|(a, b)| a * b).sum();
            let (lo, up) = r.range();
            self.t.extend_from_slice(&trow);
            self.lo.push(lo);
            self.up.push(up);
            self.x.push(act);
            self.basis.push(n + self.m);
            self.spec.constraints.push(r.clone());
            self.m += 1;
        }
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        self.iterations = 0;
        self.degenerate_run = 0;
        self.bland = false;
        let cap = 50 * (self.m + self.n).max(1);
        let mut refactors = 0;
        loop {
            let outcome = self.optimize(cap)?;
            match outcome {
                Outcome::Infeasible => return Ok(LpSolution::without_point(Status::Infeasible, self.n)),
                Outcome::Unbounded => return Ok(LpSolution::without_point(Status::Unbounded, self.n)),
                Outcome::Done => {}
            }
            let (primal, dual) = self.residuals();
            if primal <= 1e-8 && dual <= 1e-7 {
                return Ok(self.extract());
            }
            if refactors == MAX_REFACTORS {
                if primal <= FEASIBILITY_TOL && dual <= 1e-6 {
                    return Ok(self.extract());
                }
                return Err(LpError::NumericalBreakdown { iterations: self.iterations });
            }
            refactors += 1;
            self.refactor()?;
        }
    }

    fn optimize(&mut self, cap: usize) -> Result<Outcome, LpError> {
        if self.max_infeasibility() > PRIMAL_TOL {
            if self.dual_feasible() {
                if self.dual(cap)? == Outcome::Infeasible && !self.phase1(cap)? {
                    return Ok(Outcome::Infeasible);
                }
            } else if !self.phase1(cap)? {
                return Ok(Outcome::Infeasible);
            }
        }
        self.phase2(cap)
    }

    fn max_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| (self.lo[b] - self.x[b]).max(self.x[b] - self.up[b]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn dual_feasible(&self) -> bool {
        self.nonbasic.iter().zip(&self.d).all(|(&j, &dk)| {
            !((dk < -OPTIMALITY_TOL && self.x[j] < self.up[j]) || (dk > OPTIMALITY_TOL && self.x[j] > self.lo[j]))
        })
    }

    fn tick(&mut self, cap: usize, theta: f64) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > cap {
            return Err(LpError::NumericalBreakdown { iterations: self.iterations });
        }
        if theta.abs() <= DEGENERATE_STEP {
            self.degenerate_run += 1;
            if self.degenerate_run >= BLAND_AFTER {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh();
        }
        Ok(())
    }

    /// Returns false when the problem is infeasible.
    fn phase1(&mut self, cap: usize) -> Result<bool, LpError> {
        let n = self.n;
        let mut d1 = vec![0.0; n];
        loop {
            d1.iter_mut().for_each(|v| *v = 0.0);
            let mut any = false;
            for i in 0..self.m {
                let b = self.basis[i];
                let sign = if self.x[b] < self.lo[b] - PRIMAL_TOL {
                    -1.0
                } else if self.x[b] > self.up[b] + PRIMAL_TOL {
                    1.0
                } else {
                    continue;
                };
                any = true;
                let row = &self.t[i * n..(i + 1) * n];
                for (dst, v) in d1.iter_mut().zip(row) {
                    *dst += sign * v;
                }
            }
            if !any {
                return Ok(true);
            }
            let Some((q, dir)) = self.price(&d1) else {
                return Ok(false);
            };
            let Some(r) = self.ratio_test(q, dir, true) else {
                // cannot happen while an infeasible row pushes back; treat as stall
                return Err(LpError::NumericalBreakdown { iterations: self.iterations });
            };
            self.step(q, dir, &r);
            self.tick(cap, r.theta)?;
        }
    }

    fn phase2(&mut self, cap: usize) -> Result<Outcome, LpError> {
        loop {
            let d = std::mem::take(&mut self.d);
            let choice = self.price(&d);
            self.d = d;
            let Some((q, dir)) = choice else {
                return Ok(Outcome::Done);
            };
            let Some(r) = self.ratio_test(q, dir, false) else {
                return Ok(Outcome::Unbounded);
            };
            self.step(q, dir, &r);
            self.tick(cap, r.theta)?;
        }
    }

    fn dual(&mut self, cap: usize) -> Result<Outcome, LpError> {
        let n = self.n;
        loop {
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let b = self.basis[i];
                let inf = (self.lo[b] - self.x[b]).max(self.x[b] - self.up[b]);
                if inf <= PRIMAL_TOL {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((p, best)) => {
                        if self.bland {
                            b < self.basis[p]
                        } else {
                            inf > best
                        }
                    }
                };
                if better {
                    leave = Some((i, inf));
                }
            }
            let Some((p, _)) = leave else {
                return Ok(Outcome::Done);
            };
            let b = self.basis[p];
            let (target, sgn) = if self.x[b] < self.lo[b] { (self.lo[b], 1.0) } else { (self.up[b], -1.0) };
            let row = &self.t[p * n..(p + 1) * n];
            let mut bound = f64::INFINITY;
            for k in 0..n {
                let a = row[k] * sgn;
                if let Some(dir) = self.dual_dir(k, a) {
                    let r = ((self.d[k] * dir).max(0.0) + OPTIMALITY_TOL) / a.abs();
                    bound = bound.min(r);
                }
            }
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for k in 0..n {
                let a = row[k] * sgn;
                let Some(dir) = self.dual_dir(k, a) else { continue };
                let r = (self.d[k] * dir).max(0.0) / a.abs();
                if self.bland {
                    let better = match enter {
                        None => true,
                        Some(e) => r < best_ratio - 1e-12 || (r <= best_ratio + 1e-12 && self.nonbasic[k] < self.nonbasic[e]),
                    };
                    if better {
                        best_ratio = r;
                        enter = Some(k);
                    }
                } else if r <= bound {
                    let better = match enter {
                        None => true,
                        Some(e) => a.abs() > (row[e]).abs(),
                    };
                    if better {
                        best_ratio = r;
                        enter = Some(k);
                    }
                }
            }
            let Some(q) = enter else {
                return Ok(Outcome::Infeasible);
            };
            let delta = (target - self.x[b]) / self.t[p * n + q];
            let e = self.nonbasic[q];
            self.x[e] += delta;
            for i in 0..self.m {
                let a = self.t[i * n + q];
                if a != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] += a * delta;
                }
            }
            self.x[b] = target;
            self.pivot(p, q);
            self.tick(cap, best_ratio)?;
        }
    }

    /// Direction in which nonbasic column `k` may move so that the leaving
    /// row changes in the wanted sense (`a` already carries that sign).
    fn dual_dir(&self, k: usize, a: f64) -> Option<f64> {
        if a.abs() <= PIVOT_TOL {
            return None;
        }
        let j = self.nonbasic[k];
        if a > 0.0 && self.x[j] < self.up[j] {
            Some(1.0)
        } else if a < 0.0 && self.x[j] > self.lo[j] {
            Some(-1.0)
        } else {
            None
        }
    }

    fn price(&self, d: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_val = OPTIMALITY_TOL;
        for (k, &dk) in d.iter().enumerate() {
            let j = self.nonbasic[k];
            let dir = if dk < -OPTIMALITY_TOL && self.x[j] < self.up[j] {
                1.0
            } else if dk > OPTIMALITY_TOL && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                if best.map_or(true, |(b, _)| j < self.nonbasic[b]) {
                    best = Some((k, dir));
                }
            } else if dk.abs() > best_val {
                best_val = dk.abs();
                best = Some((k, dir));
            }
        }
        best
    }

    /// Bound a basic variable in row `i` runs into when moving with slope
    /// `alpha`, or `None` if it never blocks.
    fn blocking_bound(&self, i: usize, alpha: f64, phase1: bool) -> Option<f64> {
        let b = self.basis[i];
        let (xb, lo, up) = (self.x[b], self.lo[b], self.up[b]);
        let below = phase1 && xb < lo - PRIMAL_TOL;
        let above = phase1 && xb > up + PRIMAL_TOL;
        let target = if alpha > 0.0 {
            if below {
                lo
            } else if above {
                return None;
            } else {
                up
            }
        } else if above {
            up
        } else if below {
            return None;
        } else {
            lo
        };
        target.is_finite().then_some(target)
    }

    fn ratio_test(&self, q: usize, dir: f64, phase1: bool) -> Option<Ratio> {
        let n = self.n;
        let e = self.nonbasic[q];
        let flip = if dir > 0.0 { self.up[e] - self.x[e] } else { self.x[e] - self.lo[e] };

        let mut theta_max = f64::INFINITY;
        if !self.bland {
            for i in 0..self.m {
                let alpha = self.t[i * n + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some(target) = self.blocking_bound(i, alpha, phase1) {
                    let slack = if alpha > 0.0 { HARRIS_TOL } else { -HARRIS_TOL };
                    let r = (target + slack - self.x[self.basis[i]]) / alpha;
                    theta_max = theta_max.min(r);
                }
            }
        }

        let mut pick: Option<(usize, f64, f64, f64)> = None;
        for i in 0..self.m {
            let alpha = self.t[i * n + q] * dir;
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let Some(target) = self.blocking_bound(i, alpha, phase1) else { continue };
            let r = ((target - self.x[self.basis[i]]) / alpha).max(0.0);
            if !self.bland && r > theta_max.max(0.0) {
                continue;
            }
            let better = match pick {
                None => true,
                Some((p, pr, pa, _)) => {
                    if self.bland {
                        r < pr - 1e-12 || (r <= pr + 1e-12 && self.basis[i] < self.basis[p])
                    } else {
                        alpha.abs() > pa
                    }
                }
            };
            if better {
                pick = Some((i, r, alpha.abs(), target));
            }
        }

        match pick {
            Some((i, r, _, target)) if r < flip => Some(Ratio { row: Some(i), theta: r, target }),
            _ if flip.is_finite() => Some(Ratio { row: None, theta: flip, target: 0.0 }),
            _ => None,
        }
    }

    fn step(&mut self, q: usize, dir: f64, r: &Ratio) {
        let n = self.n;
        let e = self.nonbasic[q];
        let delta = dir * r.theta;
        if delta != 0.0 {
            self.x[e] += delta;
            for i in 0..self.m {
                let a = self.t[i * n + q];
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] += a * delta;
                }
            }
        }
        match r.row {
            None => self.x[e] = if dir > 0.0 { self.up[e] } else { self.lo[e] },
            Some(p) => {
                let l = self.basis[p];
                self.x[l] = r.target;
                self.pivot(p, q);
            }
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let n = self.n;
        let inv = 1.0 / self.t[p * n + q];
        let mut prow = self.t[p * n..(p + 1) * n].to_vec();
        for v in prow.iter_mut() {
            *v *= -inv;
        }
        prow[q] = inv;
        self.t[p * n..(p + 1) * n].copy_from_slice(&prow);
        let nz: Vec<usize> = (0..n).filter(|&k| prow[k] != 0.0).collect();
        let sparse = nz.len() * 3 < n;
        for i in 0..self.m {
            if i == p {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            row[q] = 0.0;
            if sparse {
                for &k in &nz {
                    row[k] += f * prow[k];
                }
            } else {
                for (dst, v) in row.iter_mut().zip(&prow) {
                    *dst += f * v;
                }
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            self.d[q] = 0.0;
            for &k in &nz {
                self.d[k] += f * prow[k];
            }
        }
        let l = self.basis[p];
        self.basis[p] = self.nonbasic[q];
        self.nonbasic[q] = l;
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.spec.objective[j]
        } else {
            0.0
        }
    }

    /// Recompute basic values and reduced costs from the tableau.
    fn refresh(&mut self) {
        self.since_refresh = 0;
        let n = self.n;
        let xn: Vec<f64> = self.nonbasic.iter().map(|&j| self.x[j]).collect();
        let mut d: Vec<f64> = self.nonbasic.iter().map(|&j| self.cost(j)).collect();
        for i in 0..self.m {
            let row = &self.t[i * n..(i + 1) * n];
            let b = self.basis[i];
            self.x[b] = row.iter().zip(&xn).map(|(a, v)| a * v).sum();
            let cb = self.cost(b);
            if cb != 0.0 {
                for (dst, v) in d.iter_mut().zip(row) {
                    *dst += cb * v;
                }
            }
        }
        self.d = d;
    }

    /// Rebuild the tableau from the original rows by factorizing the basis.
    fn refactor(&mut self) -> Result<(), LpError> {
        let n = self.n;
        let breakdown = LpError::NumericalBreakdown { iterations: self.iterations };
        let s_pos: Vec<usize> = (0..self.m).filter(|&i| self.basis[i] < n).collect();
        let s_var: Vec<usize> = s_pos.iter().map(|&i| self.basis[i]).collect();
        let r_row: Vec<usize> = self.nonbasic.iter().filter(|&&j| j >= n).map(|&j| j - n).collect();
        let k = s_var.len();
        if k != r_row.len() {
            return Err(breakdown);
        }
        let coef = |row: usize, j: usize| self.spec.constraints[row].coeffs[j];
        let mut w = DMatrix::<f64>::zeros(k, n);
        if k > 0 {
            let mmat = DMatrix::from_fn(k, k, |a, b| coef(r_row[a], s_var[b]));
            let mut rhs = DMatrix::<f64>::zeros(k, n);
            for col in 0..n {
                let j = self.nonbasic[col];
                if j >= n {
                    let a = r_row.iter().position(|&r| r == j - n).ok_or(breakdown.clone())?;
                    rhs[(a, col)] = 1.0;
                } else {
                    for a in 0..k {
                        rhs[(a, col)] = -coef(r_row[a], j);
                    }
                }
            }
            w = mmat.lu().solve(&rhs).ok_or(breakdown.clone())?;
        }
        for (b, &pos) in s_pos.iter().enumerate() {
            for col in 0..n {
                self.t[pos * n + col] = w[(b, col)];
            }
        }
        let q_pos: Vec<usize> = (0..self.m).filter(|&i| self.basis[i] >= n).collect();
        if !q_pos.is_empty() {
            let aqs = DMatrix::from_fn(q_pos.len(), k, |a, b| coef(self.basis[q_pos[a]] - n, s_var[b]));
            let prod = &aqs * &w;
            for (a, &pos) in q_pos.iter().enumerate() {
                let row = self.basis[pos] - n;
                for col in 0..n {
                    let j = self.nonbasic[col];
                    let direct = if j < n { coef(row, j) } else { 0.0 };
                    self.t[pos * n + col] = direct + prod[(a, col)];
                }
            }
        }
        self.refresh();
        Ok(())
    }

    /// Largest primal residual against the original rows and bounds, and the
    /// largest sign violation of the reduced costs recomputed from the duals.
    fn residuals(&self) -> (f64, f64) {
        let n = self.n;
        let x = &self.x[..n];
        let mut primal: f64 = 0.0;
        for j in 0..n {
            primal = primal.max(self.lo[j] - x[j]).max(x[j] - self.up[j]);
        }
        for (i, c) in self.spec.constraints.iter().enumerate() {
            let act: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let (lo, up) = (self.lo[n + i], self.up[n + i]);
            primal = primal.max(lo - act).max(act - up);
        }
        let y = self.duals();
        let mut dual: f64 = 0.0;
        let mut red = self.spec.objective.clone();
        for (c, yi) in self.spec.constraints.iter().zip(&y) {
            if *yi != 0.0 {
                for (r, a) in red.iter_mut().zip(&c.coeffs) {
                    *r -= yi * a;
                }
            }
        }
        for j in 0..n {
            let can_up = x[j] < self.up[j];
            let can_down = x[j] > self.lo[j];
            if can_up {
                dual = dual.max(-red[j]);
            }
            if can_down {
                dual = dual.max(red[j]);
            }
        }
        for (i, yi) in y.iter().enumerate() {
            let s = self.x[n + i];
            if s < self.up[n + i] {
                dual = dual.max(-yi);
            }
            if s > self.lo[n + i] {
                dual = dual.max(*yi);
            }
        }
        (primal, dual)
    }

    fn duals(&self) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; self.m];
        for (k, &j) in self.nonbasic.iter().enumerate() {
            if j >= n {
                y[j - n] = self.d[k];
            }
        }
        y
    }

    fn extract(&self) -> LpSolution {
        let x = self.x[..self.n].to_vec();
        let objective = self.spec.objective_at(&x);
        LpSolution { status: Status::Optimal, x, objective, duals: Some(self.duals()) }
    }
}
