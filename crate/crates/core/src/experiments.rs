//! Random instances, the affine worst-case instance, and the ratio sweep
//! `z_Aff / z_pap`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::domination::{
    algorithm1, appendix_g_simplex, closed_form_simplex, numeric_pi_simplex, worstcase_simplex, DominatingSimplex, Strategy,
};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::policies::{exact_ar, solve_affine, solve_simplex_ar, DEFAULT_AFFINE_TOL};
use crate::uncertainty::{default_theta, UncertaintySet};

/// Set families of the random sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SetFamily {
    Hypersphere,
    PNorm(f64),
    Budget,
    Intersection(usize),
    /// `None` uses `0.4·(m−1)`.
    GeneralizedBudget(Option<f64>),
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFamily::Hypersphere => write!(f, "hypersphere"),
            SetFamily::PNorm(p) => write!(f, "pnorm-{p}"),
            SetFamily::Budget => write!(f, "budget"),
            SetFamily::Intersection(l) => write!(f, "intersection-{l}"),
            SetFamily::GeneralizedBudget(None) => write!(f, "generalized-budget"),
            SetFamily::GeneralizedBudget(Some(t)) => write!(f, "generalized-budget-{t}"),
        }
    }
}

impl FromStr for SetFamily {
    type Err = Error;

    /// `hypersphere`, `pnorm-<p>`, `budget`, `intersection-<L>`,
    /// `generalized-budget` or `generalized-budget-<θ>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDescriptor(format!("unknown family `{s}`"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        match s {
            "hypersphere" => Ok(SetFamily::Hypersphere),
            "budget" => Ok(SetFamily::Budget),
            "generalized-budget" => Ok(SetFamily::GeneralizedBudget(None)),
            _ => {
                if let Some(p) = s.strip_prefix("pnorm-") {
                    let p = num(p)?;
                    if p < 1.0 {
                        return Err(Error::ParameterOutOfRange("p must be at least 1".into()));
                    }
                    Ok(SetFamily::PNorm(p))
                } else if let Some(l) = s.strip_prefix("intersection-") {
                    let l: usize = l.parse().map_err(|_| bad())?;
                    if l == 0 {
                        return Err(Error::ParameterOutOfRange("need at least one budget row".into()));
                    }
                    Ok(SetFamily::Intersection(l))
                } else if let Some(t) = s.strip_prefix("generalized-budget-") {
                    Ok(SetFamily::GeneralizedBudget(Some(num(t)?)))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl SetFamily {
    /// Divisor `s` in `G_ij = |Y_ij| / s`: `m^{1/p}` for p-balls, `√m` otherwise.
    fn scale(&self, m: usize) -> f64 {
        let m = m as f64;
        match self {
            SetFamily::PNorm(p) => m.powf(1.0 / p),
            _ => m.sqrt(),
        }
    }
}

fn rng_for(seed: u64, m: usize, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) | id as u64);
    rng
}

fn gen_b(rng: &mut ChaCha8Rng, m: usize, s: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let y: f64 = StandardNormal.sample(rng);
                    y.abs() / s + if i == j { 1.0 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// `n = m`, `c = d = e`, `A = B = I + G` with `G_ij = |Y_ij|/s`.
pub fn gen_instance(family: SetFamily, m: usize, seed: u64) -> Result<Instance> {
    Ok(gen_case(family, m, seed, 0)?.0)
}

/// Instance `id` of a sweep together with its set; the set's random
/// parameters (budget `k = c√m`, `α` rows) come from the same stream.
pub fn gen_case(family: SetFamily, m: usize, seed: u64, id: usize) -> Result<(Instance, UncertaintySet)> {
    if m < 2 {
        return Err(Error::ParameterOutOfRange("m must be at least 2".into()));
    }
    let mut rng = rng_for(seed, m, id);
    let b = gen_b(&mut rng, m, family.scale(m));
    let inst = Instance::new(b.clone(), b, vec![1.0; m], vec![1.0; m])?;
    let set = match family {
        SetFamily::Hypersphere => UncertaintySet::hypersphere(m)?,
        SetFamily::PNorm(p) => UncertaintySet::p_norm_ball(m, p, 1.0)?,
        SetFamily::Budget => {
            let c: f64 = rng.gen_range(1.0..=2.0);
            UncertaintySet::budget(m, c * (m as f64).sqrt())?
        }
        SetFamily::Intersection(l) => {
            let alpha = (0..l)
                .map(|_| {
                    let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).map(|y: f64| y.abs()).collect();
                    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    g.into_iter().map(|x| x / norm).collect()
                })
                .collect();
            UncertaintySet::budget_intersection(alpha)?
        }
        SetFamily::GeneralizedBudget(theta) => {
            UncertaintySet::generalized_budget(m, theta.unwrap_or_else(|| default_theta(m)))?
        }
    };
    Ok((inst, set))
}

/// Default dominating simplex: the closed form when there is one, the
/// numeric PI construction for other permutation invariant sets, else the
/// lifted hull around the iterative construction. Also returns the time
/// spent in the iterative construction when it ran.
pub fn sweep_simplex(set: &UncertaintySet) -> Result<(DominatingSimplex, Option<f64>)> {
    match closed_form_simplex(set) {
        Ok(s) => Ok((s, None)),
        Err(Error::ParameterOutOfRange(_)) if set.is_permutation_invariant() && set.linear_rep().is_none() => {
            Ok((numeric_pi_simplex(set)?, None))
        }
        Err(Error::ParameterOutOfRange(_)) if set.linear_rep().is_some() => {
            let t0 = Instant::now();
            let out = algorithm1(set, Strategy::Auto)?;
            let simplex = appendix_g_simplex(set, out.simplex.beta, out.simplex.v)?;
            Ok((simplex, Some(ms(t0))))
        }
        Err(e) => Err(e),
    }
}

fn ms(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

/// Cost of the piecewise affine policy as reported by the sweep: the
/// adjustable value over the set that dominates on its own.
pub fn z_pap(instance: &Instance, simplex: &DominatingSimplex) -> Result<f64> {
    Ok(simplex.factor.multiplier() * solve_simplex_ar(instance, simplex)?.objective)
}

/// The instance with `B_ii = 1`, `B_ij = 1/√m`, `A = B`, `c = e/15`, `d = e`
/// and `U = conv(0, e_i, ν)` where `ν` ranges over vectors with `m − √m`
/// entries equal to `1/√m`.
pub fn build_worstcase_instance(m: usize) -> Result<(Instance, UncertaintySet)> {
    let s = (m as f64).sqrt().round() as usize;
    if m < 4 || s * s != m {
        return Err(Error::ParameterOutOfRange(format!("m must be a perfect square ≥ 4, got {m}")));
    }
    let off = 1.0 / s as f64;
    let b: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { off }).collect()).collect();
    let inst = Instance::new(b.clone(), b, vec![1.0 / 15.0; m], vec![1.0; m])?;
    let set = UncertaintySet::permuted_nu_hull(m, m - s, off)?;
    Ok((inst, set))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstCaseReport {
    pub m: usize,
    pub beta: f64,
    pub z_pap: f64,
    pub z_aff: f64,
    pub ratio: f64,
    /// Exact adjustable value when the vertex LP fits.
    pub z_ar: Option<f64>,
}

pub fn worstcase_report(m: usize, tol: f64) -> Result<WorstCaseReport> {
    let (inst, set) = build_worstcase_instance(m)?;
    let simplex = worstcase_simplex(&set)?;
    let z_pap = z_pap(&inst, &simplex)?;
    let z_aff = solve_affine(&inst, &set, tol)?.objective;
    let z_ar = match set.vertices().and_then(|vs| exact_ar(&inst, &vs)) {
        Ok(sol) => Some(sol.objective),
        Err(Error::CombinatorialBlowup { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(WorstCaseReport { m, beta: simplex.beta, z_pap, z_aff, ratio: z_aff / z_pap, z_ar })
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: SetFamily,
    pub m_list: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
    pub affine_tol: f64,
    /// Largest `m` for which the affine baseline runs.
    pub affine_max_m: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(family: SetFamily, m_list: Vec<usize>) -> Self {
        Self {
            family,
            m_list,
            instances: 50,
            seed: 7,
            affine_tol: DEFAULT_AFFINE_TOL,
            affine_max_m: 30,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() || self.m_list.iter().any(|m| *m < 2) {
            return Err(Error::ParameterOutOfRange("every m must be at least 2".into()));
        }
        if self.instances == 0 {
            return Err(Error::ParameterOutOfRange("need at least one instance".into()));
        }
        if !(self.affine_tol > 0.0) {
            return Err(Error::ParameterOutOfRange("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub family: String,
    pub m: usize,
    pub instance_id: usize,
    pub z_pap: Option<f64>,
    pub z_aff: Option<f64>,
    pub ratio: Option<f64>,
    pub t_pap_ms: Option<f64>,
    pub t_aff_ms: Option<f64>,
    pub t_alg1_ms: Option<f64>,
    /// `ok`, `pap_only`, or `failed: <reason>`.
    pub status: String,
}

impl Record {
    pub fn failed(&self) -> bool {
        self.status.starts_with("failed")
    }
}

/// Statistics of `r = z_Aff / z_pap` for one `m`. Quantile `qX` is the
/// value exceeded by a fraction `X` of the instances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStats {
    pub m: usize,
    pub count: usize,
    pub failures: usize,
    pub avg: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q10: f64,
    pub q25: f64,
    pub q50: f64,
    pub t_pap_ms: f64,
    pub t_aff_ms: f64,
    pub t_alg1_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioStats {
    pub family: String,
    pub cells: Vec<CellStats>,
    pub records: Vec<Record>,
}

impl RatioStats {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    pub fn cell(&self, m: usize) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.m == m)
    }
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn cell_stats(m: usize, recs: &[&Record]) -> CellStats {
    let mut r: Vec<f64> = recs.iter().filter_map(|x| x.ratio).collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let failures = recs.iter().filter(|x| x.failed()).count();
    let pick = |f: &dyn Fn(&Record) -> Option<f64>| mean(recs.iter().filter_map(|x| f(x)));
    let (avg, min, max, q05, q10, q25, q50) = if r.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            mean(r.iter().copied()),
            r[0],
            r[r.len() - 1],
            quantile(&r, 0.95),
            quantile(&r, 0.90),
            quantile(&r, 0.75),
            quantile(&r, 0.50),
        )
    };
    let alg1 = recs.iter().any(|x| x.t_alg1_ms.is_some()).then(|| pick(&|x| x.t_alg1_ms));
    CellStats {
        m,
        count: r.len(),
        failures,
        avg,
        min,
        max,
        q05,
        q10,
        q25,
        q50,
        t_pap_ms: pick(&|x| x.t_pap_ms),
        t_aff_ms: pick(&|x| x.t_aff_ms),
        t_alg1_ms: alg1,
    }
}

fn run_one(config: &ExperimentConfig, m: usize, id: usize) -> Record {
    let mut rec = Record {
        family: config.family.to_string(),
        m,
        instance_id: id,
        z_pap: None,
        z_aff: None,
        ratio: None,
        t_pap_ms: None,
        t_aff_ms: None,
        t_alg1_ms: None,
        status: String::new(),
    };
    let outcome = (|| -> Result<()> {
        let (inst, set) = gen_case(config.family, m, config.seed, id)?;
        let t0 = Instant::now();
        let (simplex, t_alg1) = sweep_simplex(&set)?;
        rec.t_alg1_ms = t_alg1;
        let zp = z_pap(&inst, &simplex)?;
        rec.t_pap_ms = Some(ms(t0));
        rec.z_pap = Some(zp);
        if m > config.affine_max_m {
            rec.status = "pap_only".into();
            return Ok(());
        }
        let t1 = Instant::now();
        let aff = solve_affine(&inst, &set, config.affine_tol)?;
        rec.t_aff_ms = Some(ms(t1));
        rec.z_aff = Some(aff.objective);
        rec.ratio = Some(aff.objective / zp);
        rec.status = "ok".into();
        Ok(())
    })();
    if let Err(e) = outcome {
        warn!("{} m={m} instance {id}: {e}", config.family);
        rec.status = format!("failed: {e}");
    }
    rec
}

/// Run the sweep and write the CSV when `config.output` is set. Instances
/// run in parallel; records come back ordered by `(m, instance_id)`.
pub fn run_comparison(config: &ExperimentConfig) -> Result<RatioStats> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> =
        config.m_list.iter().flat_map(|&m| (0..config.instances).map(move |id| (m, id))).collect();
    let mut records: Vec<Record> = jobs.par_iter().map(|&(m, id)| run_one(config, m, id)).collect();
    records.sort_by_key(|r| (r.m, r.instance_id));
    let mut ms_seen: Vec<usize> = config.m_list.clone();
    ms_seen.sort_unstable();
    ms_seen.dedup();
    let cells: Vec<CellStats> = ms_seen
        .iter()
        .map(|&m| {
            let recs: Vec<&Record> = records.iter().filter(|r| r.m == m).collect();
            let c = cell_stats(m, &recs);
            info!("{} m={m}: avg {:.4} over {} ({} failed)", config.family, c.avg, c.count, c.failures);
            c
        })
        .collect();
    let stats = RatioStats { family: config.family.to_string(), cells, records };
    if let Some(path) = &config.output {
        write_csv(path, &stats.records)?;
    }
    Ok(stats)
}

pub fn write_csv(path: &std::path::Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
