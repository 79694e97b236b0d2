//! Exact affine counterpart for sets whose support function has a compact
//! conic or linear description, solved with an interior-point method.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use log::warn;

use super::affine::{Family as Row, Layout};
use crate::error::Result;
use crate::instance::Instance;
use crate::uncertainty::{Family, Hull, UncertaintySet};

/// `Σ coef·θ_col + constant`.
#[derive(Clone, Debug, Default)]
struct Expr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Expr {
    fn var(col: usize) -> Self {
        Self { terms: vec![(col, 1.0)], constant: 0.0 }
    }
    fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }
    fn add(mut self, col: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push((col, coef));
        }
        self
    }
    fn plus(mut self, other: &Expr, scale: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|(c, v)| (*c, v * scale)));
        self.constant += other.constant * scale;
        self
    }
    fn scaled(&self, s: f64) -> Self {
        Expr::default().plus(self, s)
    }
}

/// Rows `s = expr ∈ K`, grouped into consecutive cones.
struct Builder {
    cols: usize,
    rows: usize,
    ti: Vec<usize>,
    tj: Vec<usize>,
    tv: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Builder {
    fn new(cols: usize) -> Self {
        Self { cols, rows: 0, ti: Vec::new(), tj: Vec::new(), tv: Vec::new(), b: Vec::new(), cones: Vec::new() }
    }

    fn var(&mut self) -> usize {
        self.cols += 1;
        self.cols - 1
    }

    fn vars(&mut self, k: usize) -> Vec<usize> {
        (0..k).map(|_| self.var()).collect()
    }

    fn push_rows(&mut self, exprs: &[Expr]) {
        for e in exprs {
            for &(c, v) in &e.terms {
                self.ti.push(self.rows);
                self.tj.push(c);
                self.tv.push(-v);
            }
            self.b.push(e.constant);
            self.rows += 1;
        }
    }

    fn nonneg(&mut self, e: Expr) {
        self.push_rows(&[e]);
        match self.cones.last_mut() {
            Some(SupportedConeT::NonnegativeConeT(k)) => *k += 1,
            _ => self.cones.push(SupportedConeT::NonnegativeConeT(1)),
        }
    }

    fn zero(&mut self, e: Expr) {
        self.push_rows(&[e]);
        match self.cones.last_mut() {
            Some(SupportedConeT::ZeroConeT(k)) => *k += 1,
            _ => self.cones.push(SupportedConeT::ZeroConeT(1)),
        }
    }

    fn soc(&mut self, exprs: Vec<Expr>) {
        let k = exprs.len();
        self.push_rows(&exprs);
        self.cones.push(SupportedConeT::SecondOrderConeT(k));
    }

    fn power(&mut self, alpha: f64, exprs: [Expr; 3]) {
        self.push_rows(&exprs);
        self.cones.push(SupportedConeT::PowerConeT(alpha));
    }

    /// `support_U(w) ≤ t`; `false` if the family has no compact description.
    fn support_le(&mut self, set: &UncertaintySet, w: &[Expr], t: &Expr) -> bool {
        let m = w.len();
        match set.family() {
            Family::Hypersphere => self.norm_le(w, t, 2.0),
            Family::PNormBall { p, radius } => self.norm_le(w, &t.scaled(1.0 / radius), *p),
            Family::Budget { k } => {
                // max over the budget set = min k·λ + Σ μ_i with μ_i ≥ w_i − λ
                let lam = self.var();
                let mu = self.vars(m);
                self.nonneg(Expr::var(lam));
                let mut rhs = Expr::default().add(lam, k.min(m as f64));
                for i in 0..m {
                    self.nonneg(Expr::var(mu[i]));
                    self.nonneg(Expr::var(mu[i]).add(lam, 1.0).plus(&w[i], -1.0));
                    rhs = rhs.add(mu[i], 1.0);
                }
                self.nonneg(t.clone().plus(&rhs, -1.0));
                true
            }
            Family::ExplicitConvHull(Hull::PermutedNu { r, value }) => {
                // max(0, max_i w_i, value · top-r sum of w)
                self.nonneg(t.clone());
                for wi in w {
                    self.nonneg(t.clone().plus(wi, -1.0));
                }
                let lam = self.var();
                let mu = self.vars(m);
                let mut top = Expr::default().add(lam, *r as f64);
                for i in 0..m {
                    self.nonneg(Expr::var(mu[i]));
                    self.nonneg(Expr::var(mu[i]).add(lam, 1.0).plus(&w[i], -1.0));
                    top = top.add(mu[i], 1.0);
                }
                self.nonneg(t.clone().plus(&top, -value));
                true
            }
            _ => match set.linear_rep() {
                Some(rep) => {
                    // LP dual of max w·h over the linear description
                    let pi = self.vars(rep.rows.len());
                    let sigma = if rep.h_upper.is_finite() { self.vars(m) } else { Vec::new() };
                    let nu = rep.aux_eq.map(|_| self.var());
                    let mut dual_obj = Expr::default();
                    for (l, (_, rhs)) in rep.rows.iter().enumerate() {
                        self.nonneg(Expr::var(pi[l]));
                        dual_obj = dual_obj.add(pi[l], *rhs);
                    }
                    for (k, wk) in w.iter().enumerate() {
                        let mut e = Expr::default().plus(wk, -1.0);
                        for (l, (row, _)) in rep.rows.iter().enumerate() {
                            e = e.add(pi[l], row[k]);
                        }
                        if !sigma.is_empty() {
                            self.nonneg(Expr::var(sigma[k]));
                            e = e.add(sigma[k], 1.0);
                            dual_obj = dual_obj.add(sigma[k], rep.h_upper);
                        }
                        self.nonneg(e);
                    }
                    for a in 0..rep.aux {
                        let mut e = Expr::default();
                        for (l, (row, _)) in rep.rows.iter().enumerate() {
                            e = e.add(pi[l], row[m + a]);
                        }
                        if let Some(nu) = nu {
                            e = e.add(nu, 1.0);
                        }
                        self.nonneg(e);
                    }
                    if let (Some(nu), Some(total)) = (nu, rep.aux_eq) {
                        dual_obj = dual_obj.add(nu, total);
                    }
                    self.nonneg(t.clone().plus(&dual_obj, -1.0));
                    true
                }
                None => false,
            },
        }
    }

    /// `‖w⁺‖_r ≤ t` with `r` the dual exponent of `p`.
    fn norm_le(&mut self, w: &[Expr], t: &Expr, p: f64) -> bool {
        let m = w.len();
        if p <= 1.0 {
            self.nonneg(t.clone());
            for wi in w {
                self.nonneg(t.clone().plus(wi, -1.0));
            }
            return true;
        }
        let s = self.vars(m);
        for i in 0..m {
            self.nonneg(Expr::var(s[i]).plus(&w[i], -1.0));
        }
        if (p - 2.0).abs() < 1e-12 {
            let mut block = vec![t.clone()];
            block.extend(s.iter().map(|&c| Expr::var(c)));
            self.soc(block);
        } else {
            let r = p / (p - 1.0);
            let rho = self.vars(m);
            let mut total = t.clone().scaled(-1.0);
            for i in 0..m {
                total = total.add(rho[i], 1.0);
                self.power(1.0 / r, [Expr::var(rho[i]), t.clone(), Expr::var(s[i])]);
            }
            self.zero(total);
        }
        true
    }
}

/// Solve for `(x, P, q, z)`; `None` when the set has no compact description
/// or the solver does not reach an optimum.
pub(super) fn solve(instance: &Instance, set: &UncertaintySet, lay: &Layout, d_zero: bool) -> Result<Option<Vec<f64>>> {
    let (m, n) = (lay.m, lay.n);
    let mut bld = Builder::new(lay.len());
    for j in 0..n {
        bld.nonneg(Expr::var(j));
    }
    if d_zero {
        bld.zero(Expr::var(lay.z()));
    }
    for row in Row::all(m, n, d_zero) {
        let (w, t) = match row {
            Row::Cover(j) => {
                let w: Vec<Expr> = (0..m)
                    .map(|k| {
                        let mut e = Expr::constant(if k == j { 1.0 } else { 0.0 });
                        for i in 0..n {
                            e = e.add(lay.p(i, k), -instance.b[j][i]);
                        }
                        e
                    })
                    .collect();
                let mut t = Expr::default();
                for i in 0..n {
                    t = t.add(i, instance.a[j][i]).add(lay.q(i), instance.b[j][i]);
                }
                (w, t)
            }
            Row::Nonneg(i) => ((0..m).map(|k| Expr::default().add(lay.p(i, k), -1.0)).collect(), Expr::var(lay.q(i))),
            Row::Objective => {
                let w: Vec<Expr> = (0..m)
                    .map(|k| (0..n).fold(Expr::default(), |e, i| e.add(lay.p(i, k), instance.d[i])))
                    .collect();
                let t = (0..n).fold(Expr::var(lay.z()), |e, i| e.add(lay.q(i), -instance.d[i]));
                (w, t)
            }
        };
        if !bld.support_le(set, &w, &t) {
            return Ok(None);
        }
    }
    let cols = bld.cols;
    let mut q = vec![0.0; cols];
    q[..n].copy_from_slice(&instance.c);
    q[lay.z()] = 1.0;
    let a = CscMatrix::new_from_triplets(bld.rows, cols, bld.ti, bld.tj, bld.tv);
    let p = CscMatrix::zeros((cols, cols));
    let settings = DefaultSettings { verbose: false, ..DefaultSettings::default() };
    let mut solver = DefaultSolver::new(&p, &q, &a, &bld.b, &bld.cones, settings);
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(Some(solver.solution.x[..lay.len()].to_vec())),
        other => {
            warn!("interior-point affine solve ended with {other:?}");
            Ok(None)
        }
    }
}
