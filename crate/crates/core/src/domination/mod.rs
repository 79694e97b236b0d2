//! Dominating simplices `β·conv(e_1, …, e_m, v)` and their construction.

mod algorithm1;
mod closed_form;
mod max_plus_sum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::UncertaintySet;

pub use algorithm1::{algorithm1, Algorithm1Output, ALGORITHM1_SLACK};
pub use closed_form::{beta_pi, closed_form_simplex, numeric_pi_simplex, worstcase_simplex, PiBeta};
pub use max_plus_sum::{max_plus_sum, MaxPlusSum, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    ClosedForm,
    NumericPi,
    Algorithm1,
    AppendixG,
    AppendixH,
}

/// How the simplex dominates the set.
///
/// `Doubled` means only `2β·conv(e_i, v)` is known to dominate (the
/// structural inequality route); `Direct` means the stored simplex itself
/// dominates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    Direct,
    Doubled,
}

impl Factor {
    pub fn multiplier(self) -> f64 {
        match self {
            Factor::Direct => 1.0,
            Factor::Doubled => 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominatingSimplex {
    pub beta: f64,
    pub v: Vec<f64>,
    pub provenance: Provenance,
    #[serde(default = "default_factor")]
    pub factor: Factor,
}

fn default_factor() -> Factor {
    Factor::Doubled
}

/// Dominating point of `h` and the weights certifying where it lies.
///
/// For the lifted hull `ĥ = Σ w_i V_i` exactly; for the generalized budget
/// `ĥ = Σ w_i V_i` with the weights summing to at most one; otherwise
/// `ĥ ≤ βv + Σ w_i V_i`, i.e. `ĥ` lies in the completion of `2·Û`.
#[derive(Clone, Debug, PartialEq)]
pub struct DominatingPoint {
    pub h_hat: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Result of [`verify_domination`]; `witness` is a violating `h` on failure.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub ok: bool,
    pub max_plus_sum: f64,
    pub witness: Option<Vec<f64>>,
}

impl DominatingSimplex {
    pub fn new(beta: f64, v: Vec<f64>, provenance: Provenance, factor: Factor) -> Result<Self> {
        let s = Self { beta, v, provenance, factor };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 1.0 - 1e-12 && self.beta.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!("β must be at least 1, got {}", self.beta)));
        }
        if self.v.is_empty() || self.v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::ParameterOutOfRange("v must be a nonempty nonnegative vector".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// The `m+1` vertices: `β e_1, …, β e_m, β v` (or `β(e_i + v)` and
    /// `β v` for the lifted hull).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        let bv: Vec<f64> = self.v.iter().map(|x| self.beta * x).collect();
        let mut out: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut p = if self.provenance == Provenance::AppendixG { bv.clone() } else { vec![0.0; m] };
                p[i] += self.beta;
                p
            })
            .collect();
        out.push(bv);
        out
    }

    /// Vertices of the simplex that dominates the set on its own.
    pub fn dominating_vertices(&self) -> Vec<Vec<f64>> {
        let k = self.factor.multiplier();
        self.vertices().into_iter().map(|p| p.into_iter().map(|x| k * x).collect()).collect()
    }

    /// `(1/β) Σ (h_i − β v_i)⁺` for each coordinate.
    fn excess(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.v).map(|(hi, vi)| (hi - self.beta * vi).max(0.0) / self.beta).collect()
    }

    /// The dominating point of `h` with its certificate weights.
    pub fn dominating_point(&self, h: &[f64]) -> Result<DominatingPoint> {
        let m = self.dim();
        if h.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: h.len() });
        }
        if self.provenance == Provenance::AppendixH {
            return Ok(self.sorted_weight_point(h));
        }
        let s = self.excess(h);
        let total: f64 = s.iter().sum();
        let h_hat: Vec<f64> = h.iter().zip(&self.v).map(|(hi, vi)| (self.beta * vi).max(*hi)).collect();
        let mut weights = s;
        weights.push(1.0 - total);
        Ok(DominatingPoint { h_hat, weights })
    }

    /// Sort `h` ascending; the two smallest entries set the weight on `v`.
    fn sorted_weight_point(&self, h: &[f64]) -> DominatingPoint {
        let m = self.dim();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| h[i].partial_cmp(&h[j]).unwrap().then(i.cmp(&j)));
        let pair = if m >= 2 { 0.5 * (h[order[0]] + h[order[1]]) } else { 0.0 };
        let c = self.v[0];
        let mut weights = vec![0.0; m + 1];
        weights[order[0]] = h[order[0]].max(0.0);
        for &i in &order[1..] {
            weights[i] = (h[i] - pair).max(0.0);
        }
        weights[m] = if c > 0.0 { pair.max(0.0) / c } else { 0.0 };
        let h_hat = (0..m).map(|i| weights[i] + weights[m] * self.v[i]).collect();
        DominatingPoint { h_hat, weights }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("simplex serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let out: Self = serde_json::from_str(s)?;
        out.validate()?;
        Ok(out)
    }
}

/// Check the structural inequality `max Σ (h_i − β v_i)⁺ ≤ β`; with
/// `factor = 2` also check the dominating-point certificate on 1000 samples.
pub fn verify_domination(set: &UncertaintySet, simplex: &DominatingSimplex, factor: u8) -> Result<Verification> {
    let m = set.dim();
    if simplex.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: simplex.dim() });
    }
    if factor != 1 && factor != 2 {
        return Err(Error::ParameterOutOfRange(format!("factor must be 1 or 2, got {factor}")));
    }
    let u: Vec<f64> = simplex.v.iter().map(|x| simplex.beta * x).collect();
    let mps = max_plus_sum(set, &u, &vec![1.0; m], Strategy::Auto)?;
    if mps.value > simplex.beta + 1e-6 {
        return Ok(Verification { ok: false, max_plus_sum: mps.value, witness: Some(mps.argmax) });
    }
    if factor == 2 {
        for h in set.sample(1000, 0x5eed) {
            if let Some(bad) = certificate_violation(simplex, &h, 1e-7)? {
                return Ok(Verification { ok: false, max_plus_sum: mps.value, witness: Some(bad) });
            }
        }
    }
    Ok(Verification { ok: true, max_plus_sum: mps.value, witness: None })
}

/// `Some(h)` when the dominating point of `h` fails its certificate.
pub fn certificate_violation(simplex: &DominatingSimplex, h: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
    let p = simplex.dominating_point(h)?;
    let m = simplex.dim();
    let nonneg = p.weights.iter().all(|w| *w >= -tol);
    let sum: f64 = p.weights.iter().sum();
    let dominates = p.h_hat.iter().zip(h).all(|(a, b)| *a >= b - tol);
    let verts = simplex.vertices();
    let mut combo = vec![0.0; m];
    for (w, vert) in p.weights.iter().zip(&verts) {
        for (c, x) in combo.iter_mut().zip(vert) {
            *c += w * x;
        }
    }
    let offset = match simplex.provenance {
        Provenance::AppendixG | Provenance::AppendixH => 0.0,
        _ => simplex.beta,
    };
    let covered = (0..m).all(|i| p.h_hat[i] <= offset * simplex.v[i] + combo[i] + tol);
    if nonneg && sum <= 1.0 + tol && dominates && covered {
        Ok(None)
    } else {
        Ok(Some(h.to_vec()))
    }
}

/// Wrap the simplex vertices as an explicit hull set.
pub fn simplex_as_set(simplex: &DominatingSimplex) -> Result<UncertaintySet> {
    UncertaintySet::explicit_conv_hull(simplex.vertices())
}

/// Lifted hull `β·conv(v, e_1 + v, …, e_m + v)` for a pair satisfying the
/// structural inequality.
pub fn appendix_g_simplex(set: &UncertaintySet, beta: f64, v: Vec<f64>) -> Result<DominatingSimplex> {
    let simplex = DominatingSimplex::new(beta, v, Provenance::AppendixG, Factor::Direct)?;
    let u: Vec<f64> = simplex.v.iter().map(|x| beta * x).collect();
    let mps = max_plus_sum(set, &u, &vec![1.0; set.dim()], Strategy::Auto)?;
    if mps.value > beta + 1e-6 {
        return Err(Error::StructuralInequalityUnverified { value: mps.value, beta });
    }
    Ok(simplex)
}
