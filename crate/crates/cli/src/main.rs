use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pap_core::domination::{
    algorithm1, appendix_g_simplex, closed_form_simplex, numeric_pi_simplex, verify_domination, DominatingSimplex,
    Strategy,
};
use pap_core::experiments::{run_comparison, sweep_simplex, worstcase_report, z_pap, ExperimentConfig, SetFamily};
use pap_core::policies::{
    exact_ar, pap_worst_cost, solve_affine, solve_simplex_ar, PiecewisePolicy, DEFAULT_AFFINE_TOL,
};
use pap_core::{Instance, UncertaintySet};

const FAMILY_HELP: &str = "hypersphere | pnorm-<p> | budget | intersection-<L> | generalized-budget[-<theta>]. \
The generalized budget set defaults to theta = 0.4(m-1). Its closed-form simplex needs theta < (m-1)/2; \
larger theta falls back to the iterative construction.";

#[derive(Parser)]
#[command(name = "pap", version, about = "Piecewise affine policies for two-stage adjustable robust covering LPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Closed form, numeric for other permutation invariant sets, iterative otherwise.
    Auto,
    ClosedForm,
    Numeric,
    /// The iterative construction; the raw simplex dominates after doubling.
    Iterative,
    /// The iterative construction lifted to a hull that dominates directly.
    Lifted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Pap,
    Affine,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Print a dominating simplex for a set descriptor as JSON.
    Dominate {
        set: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
    },
    /// Solve an instance over a set with the chosen policy.
    Solve {
        instance: PathBuf,
        set: PathBuf,
        #[arg(long, value_enum, default_value = "pap")]
        policy: Policy,
        /// Simplex JSON to use instead of constructing one.
        #[arg(long)]
        simplex: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_AFFINE_TOL)]
        tol: f64,
    },
    /// Check that a simplex dominates a set. Exits with 2 when it does not.
    Verify {
        set: PathBuf,
        simplex: PathBuf,
        /// 1 checks the structural inequality; 2 also checks sampled certificates.
        #[arg(long, default_value_t = 2)]
        factor: u8,
    },
    /// Ratio sweep of the affine baseline against the piecewise affine policy.
    Compare {
        #[arg(long, help = FAMILY_HELP)]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_AFFINE_TOL)]
        tol: f64,
        /// Skip the affine baseline above this m.
        #[arg(long, default_value_t = 30)]
        affine_max_m: usize,
    },
    /// Both policies on the instance where affine policies are far from optimal (m a perfect square).
    Worstcase {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_AFFINE_TOL)]
        tol: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_set(path: &Path) -> Result<UncertaintySet> {
    Ok(UncertaintySet::from_json(&read(path)?)?)
}

fn load_instance(path: &Path) -> Result<Instance> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn dominate(set: &UncertaintySet, method: Method) -> Result<DominatingSimplex> {
    Ok(match method {
        Method::Auto => sweep_simplex(set)?.0,
        Method::ClosedForm => closed_form_simplex(set)?,
        Method::Numeric => numeric_pi_simplex(set)?,
        Method::Iterative => algorithm1(set, Strategy::Auto)?.simplex,
        Method::Lifted => {
            let s = algorithm1(set, Strategy::Auto)?.simplex;
            appendix_g_simplex(set, s.beta, s.v)?
        }
    })
}

fn emit(text: &str) {
    // a closed pipe (e.g. `| head`) is not an error
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("json"));
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Dominate { set, method } => {
            let s = dominate(&load_set(&set)?, method)?;
            emit(&s.to_json());
        }
        Command::Solve { instance, set, policy, simplex, tol } => {
            let inst = load_instance(&instance)?;
            let set = load_set(&set)?;
            match policy {
                Policy::Pap => {
                    let s = match simplex {
                        Some(p) => DominatingSimplex::from_json(&read(&p)?)?,
                        None => dominate(&set, Method::Auto)?,
                    };
                    let sol = solve_simplex_ar(&inst, &s)?;
                    let pol = PiecewisePolicy::new(&s, &sol);
                    let worst = pap_worst_cost(&pol, &inst, &set)?;
                    print(&json!({
                        "z_pap": z_pap(&inst, &s)?,
                        "worst_case": worst,
                        "simplex": s,
                        "policy": pol,
                    }));
                }
                Policy::Affine => print(&serde_json::to_value(solve_affine(&inst, &set, tol)?)?),
                Policy::Exact => {
                    let sol = exact_ar(&inst, &set.vertices()?)?;
                    print(&json!({"objective": sol.objective, "x": sol.x, "z": sol.z}));
                }
            }
        }
        Command::Verify { set, simplex, factor } => {
            let set = load_set(&set)?;
            let s = DominatingSimplex::from_json(&read(&simplex)?)?;
            let v = verify_domination(&set, &s, factor)?;
            print(&json!({"ok": v.ok, "max_plus_sum": v.max_plus_sum, "beta": s.beta, "witness": v.witness}));
            if !v.ok {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Compare { family, m_list, instances, seed, out, tol, affine_max_m } => {
            let mut cfg = ExperimentConfig::new(family.parse::<SetFamily>()?, m_list);
            cfg.instances = instances;
            cfg.seed = seed;
            cfg.output = out;
            cfg.affine_tol = tol;
            cfg.affine_max_m = affine_max_m;
            let stats = run_comparison(&cfg)?;
            print(&json!({"family": stats.family, "failures": stats.failures(), "cells": stats.cells}));
            if stats.failures() > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Worstcase { m, tol } => print(&serde_json::to_value(worstcase_report(m, tol)?)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
