use super::{max_plus_sum, DominatingSimplex, Factor, Provenance, Strategy};
use crate::error::{Error, Result};
use crate::uncertainty::UncertaintySet;

/// Termination slack on `max Σ (h_i − u_i)⁺ ≤ t`.
pub const ALGORITHM1_SLACK: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Algorithm1Output {
    pub simplex: DominatingSimplex,
    /// The point `h^t` added at each iteration, after zeroing saturated entries.
    pub trace: Vec<Vec<f64>>,
    /// `u^t` after each iteration.
    pub u_trace: Vec<Vec<f64>>,
}

/// Grow `u` by maximizers of `Σ (h_i − u_i)⁺` until the sum is at most the
/// iteration count `t`; returns `β = t` and `v = u / t`.
pub fn algorithm1(set: &UncertaintySet, strategy: Strategy) -> Result<Algorithm1Output> {
    let m = set.dim();
    if set.linear_rep().is_none() && strategy != Strategy::SubsetOracle {
        return Err(Error::RequiresHRep);
    }
    let cap = (2.0 * (m as f64).sqrt()).ceil() as usize + 2;
    let ones = vec![1.0; m];
    let mut u = vec![0.0; m];
    let mut t = 0usize;
    let mut trace = Vec::new();
    let mut u_trace = Vec::new();
    loop {
        let mps = max_plus_sum(set, &u, &ones, strategy)?;
        if mps.value <= t as f64 + ALGORITHM1_SLACK {
            break;
        }
        if t >= cap {
            return Err(Error::NonConvergence(cap));
        }
        let mut h = mps.argmax;
        for (hi, ui) in h.iter_mut().zip(&u) {
            if *ui >= 1.0 {
                *hi = 0.0;
            }
        }
        for (ui, hi) in u.iter_mut().zip(&h) {
            *ui = (*ui + hi).min(1.0);
        }
        t += 1;
        trace.push(h);
        u_trace.push(u.clone());
    }
    let beta = t as f64;
    let v = u.iter().map(|x| x / beta).collect();
    let simplex = DominatingSimplex::new(beta, v, Provenance::Algorithm1, Factor::Doubled)?;
    Ok(Algorithm1Output { simplex, trace, u_trace })
}
