use crate::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    /// Row activity bounds `(lo, up)` implied by the relation.
    pub(crate) fn range(&self) -> (f64, f64) {
        match self.relation {
            Relation::Ge => (self.rhs, f64::INFINITY),
            Relation::Le => (f64::NEG_INFINITY, self.rhs),
            Relation::Eq => (self.rhs, self.rhs),
        }
    }

    /// Signed violation of the row at `x` (positive means violated).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.relation {
            Relation::Ge => self.rhs - act,
            Relation::Le => act - self.rhs,
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A minimization problem `min c·x` over rows and variable bounds.
///
/// Lower bounds default to 0 and may be `-inf` for free variables; upper
/// bounds default to `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgramSpec {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgramSpec {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, c: Constraint) -> &mut Self {
        self.constraints.push(c);
        self
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, up: f64) -> &mut Self {
        self.lower[j] = lo;
        self.upper[j] = up;
        self
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidSpec("bound vectors do not match variable count".into()));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::InvalidSpec("non-finite objective coefficient".into()));
        }
        for (j, (&lo, &up)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || up.is_nan() || lo == f64::INFINITY || up == f64::NEG_INFINITY {
                return Err(LpError::InvalidSpec(format!("bad bounds on variable {j}")));
            }
            if lo > up {
                return Err(LpError::InvalidSpec(format!("lower bound exceeds upper bound on variable {j}")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::InvalidSpec(format!("row {i} has length {} (expected {n})", c.coeffs.len())));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(LpError::InvalidSpec(format!("row {i} has a non-finite entry")));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Dual objective for multipliers `y` (one per row), with reduced costs
    /// charged against whichever variable bound makes them feasible.
    ///
    /// Returns `-inf` when a reduced cost has no finite bound to pair with.
    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        let n = self.num_vars();
        let mut val: f64 = self.constraints.iter().zip(y).map(|(c, yi)| c.rhs * yi).sum();
        for j in 0..n {
            let red = self.objective[j]
                - self
                    .constraints
                    .iter()
                    .zip(y)
                    .map(|(c, yi)| c.coeffs[j] * yi)
                    .sum::<f64>();
            if red == 0.0 {
                continue;
            }
            let bound = if red > 0.0 { self.lower[j] } else { self.upper[j] };
            if !bound.is_finite() {
                if red.abs() > 1e-9 {
                    return f64::NEG_INFINITY;
                }
                continue;
            }
            val += red * bound;
        }
        val
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers; nonnegative on `≥` rows and nonpositive on `≤` rows.
    pub duals: Option<Vec<f64>>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn without_point(status: Status, n: usize) -> Self {
        let objective = match status {
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            Status::Optimal => 0.0,
        };
        Self { status, x: vec![0.0; n], objective, duals: None }
    }
}
