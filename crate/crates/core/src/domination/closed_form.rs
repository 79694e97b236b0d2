use log::info;

use super::{DominatingSimplex, Factor, Provenance};
use crate::error::{Error, Result};
use crate::uncertainty::{Family, Hull, UncertaintySet};

#[derive(Clone, Debug, PartialEq)]
pub struct PiBeta {
    /// `max(raw, 1)`.
    pub beta: f64,
    pub raw: f64,
    pub k_star: usize,
    pub v: Vec<f64>,
}

/// `β = max_k γ(k) / (γ(m) + 1/k)` with `v = γ(m)·e`.
pub fn beta_pi(set: &UncertaintySet) -> Result<PiBeta> {
    if !set.is_permutation_invariant() {
        return Err(Error::NotPermutationInvariant);
    }
    let m = set.dim();
    let gm = set.gamma(m)?;
    let mut raw = f64::NEG_INFINITY;
    let mut k_star = 1;
    for k in 1..=m {
        let r = set.gamma(k)? / (gm + 1.0 / k as f64);
        if r > raw {
            raw = r;
            k_star = k;
        }
    }
    let beta = if raw < 1.0 {
        info!("β = {raw} below 1 for m = {m}; using 1");
        1.0
    } else {
        raw
    };
    Ok(PiBeta { beta, raw, k_star, v: vec![gm; m] })
}

pub fn numeric_pi_simplex(set: &UncertaintySet) -> Result<DominatingSimplex> {
    let pb = beta_pi(set)?;
    DominatingSimplex::new(pb.beta, pb.v, Provenance::NumericPi, Factor::Doubled)
}

fn clamp_one(beta: f64, what: &str) -> f64 {
    if beta < 1.0 {
        info!("{what}: β = {beta} below 1; using 1");
        1.0
    } else {
        beta
    }
}

/// The known closed-form simplex of each family.
pub fn closed_form_simplex(set: &UncertaintySet) -> Result<DominatingSimplex> {
    let m = set.dim();
    let mf = m as f64;
    let uniform = |x: f64| vec![x; m];
    let cf = |beta: f64, v: Vec<f64>, factor| DominatingSimplex::new(beta, v, Provenance::ClosedForm, factor);
    match set.family() {
        Family::Hypersphere => cf(clamp_one(mf.powf(0.25) / 2.0, "hypersphere"), uniform(mf.powf(-0.5)), Factor::Doubled),
        Family::PNormBall { p, radius } => {
            if *radius != 1.0 {
                return Err(Error::ParameterOutOfRange("the p-norm closed form needs radius 1".into()));
            }
            let p = *p;
            let beta = (1.0 / p) * (p - 1.0).powf((p - 1.0) / p) * mf.powf((p - 1.0) / (p * p));
            cf(clamp_one(beta, "p-norm ball"), uniform(mf.powf(-1.0 / p)), Factor::Doubled)
        }
        Family::TwoNormBalls { p, q, r } => {
            let (p, q, r) = (*p, *q, *r);
            if !(r >= 1.0 && r <= mf.powf(1.0 / q - 1.0 / p)) {
                return Err(Error::ParameterOutOfRange(format!("two-ball closed form needs 1 ≤ r ≤ m^(1/q − 1/p), got r = {r}")));
            }
            let b1 = r.powf((1.0 - p) / p) * mf.powf((p - 1.0) / (p * q));
            let b2 = r.powf(1.0 / q) * mf.powf((q - 1.0) / (q * q));
            cf(clamp_one(b1.min(b2), "two norm balls"), uniform(r * mf.powf(-1.0 / q)), Factor::Direct)
        }
        Family::Budget { k } => {
            let k = k.min(mf);
            cf(clamp_one(k.min(mf / k), "budget"), uniform(k / mf), Factor::Direct)
        }
        Family::PiEllipsoid { a } => {
            let a = *a;
            let q = a * mf * mf + (1.0 - a) * mf;
            let beta = 1.0 / (a / 2.0 + (1.0 - a).sqrt() / q.powf(0.25));
            cf(clamp_one(beta, "ellipsoid"), uniform(1.0 / q.sqrt()), Factor::Direct)
        }
        Family::GeneralizedBudget { theta } => {
            let denom = mf - 1.0 - 2.0 * theta;
            if denom <= 0.0 {
                return Err(Error::ParameterOutOfRange(format!(
                    "generalized budget closed form needs θ < (m−1)/2, got θ = {theta}; use algorithm 1"
                )));
            }
            DominatingSimplex::new(1.0, uniform(1.0 / denom), Provenance::AppendixH, Factor::Direct)
        }
        Family::ExplicitConvHull(Hull::PermutedNu { .. }) => worstcase_simplex(set),
        Family::ScaledSpi { .. } => {
            Err(Error::ParameterOutOfRange("rescale the instance and use the inner set for a closed form".into()))
        }
        _ => Err(Error::ParameterOutOfRange("no closed form for this family".into())),
    }
}

/// For `conv(0, e_i, ν-permutations)` with `r` entries of `value`:
/// `β = m/r`, `v = (r/m)·value·e`.
pub fn worstcase_simplex(set: &UncertaintySet) -> Result<DominatingSimplex> {
    let Family::ExplicitConvHull(Hull::PermutedNu { r, value }) = set.family() else {
        return Err(Error::ParameterOutOfRange("expected a permuted-ν hull".into()));
    };
    let m = set.dim() as f64;
    let r = *r as f64;
    if r < 1.0 {
        return Err(Error::ParameterOutOfRange("ν support must be nonempty".into()));
    }
    DominatingSimplex::new(m / r, vec![value * r / m; set.dim()], Provenance::ClosedForm, Factor::Direct)
}
