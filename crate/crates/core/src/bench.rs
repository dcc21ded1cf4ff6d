//! Solver × problem benchmark grid and Dolan–Moré performance profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{classical_subgradient, gradient_sampling, GsParams, StepRule};
use crate::outer::{solve_with, Hooks, Target};
use crate::params::SolverParams;
use crate::problems::{random_start, relative_error, Problem, ProblemKind};
use crate::report::{RunReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Subopt,
    /// Main solver with bundle reset.
    SuboptReset,
    Subg,
    Gs,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Subopt,
        SolverKind::SuboptReset,
        SolverKind::Subg,
        SolverKind::Gs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Subopt => "subopt",
            SolverKind::SuboptReset => "subopt-reset",
            SolverKind::Subg => "subg",
            SolverKind::Gs => "gs",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown solver '{0}' (expected subopt, subopt-reset, subg or gs)")]
pub struct UnknownSolver(pub String);

impl FromStr for SolverKind {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownSolver(s.to_string()))
    }
}

/// One row of a benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub problem: String,
    pub solver: String,
    pub n: usize,
    pub seed: u64,
    /// `#Fun + #Sub`
    pub cost_evals: u64,
    /// Seconds spent inside the solver call.
    pub cost_time: f64,
    pub success: bool,
    pub f_end: f64,
    #[serde(rename = "E_end")]
    pub e_end: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub problems: Vec<ProblemKind>,
    pub solvers: Vec<SolverKind>,
    pub n: usize,
    pub seeds: Vec<u64>,
    /// Success threshold on the relative error.
    pub tol: f64,
    /// Iteration cap shared by all solvers.
    pub max_iters: u64,
    pub params: SolverParams,
}

impl SuiteConfig {
    pub fn new(problems: Vec<ProblemKind>, solvers: Vec<SolverKind>, n: usize, seeds: Vec<u64>) -> Self {
        Self {
            problems,
            solvers,
            n,
            seeds,
            tol: 5e-4,
            max_iters: 10_000,
            params: SolverParams::default(),
        }
    }
}

/// Runs one solver on one problem from `random_start(·, n, seed)`, stopping
/// early once the relative error drops below `cfg.tol`.
pub fn run_one(kind: ProblemKind, solver: SolverKind, seed: u64, cfg: &SuiteConfig) -> BenchResult {
    let mut row = BenchResult {
        problem: kind.name().to_string(),
        solver: solver.name().to_string(),
        n: cfg.n,
        seed,
        cost_evals: 0,
        cost_time: 0.0,
        success: false,
        f_end: f64::NAN,
        e_end: f64::NAN,
        status: String::new(),
    };
    let problem = match Problem::new(kind, cfg.n) {
        Ok(p) => p,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    let spec = problem.spec();
    let f_star = spec.f_star.reference().filter(|v| v.is_finite());
    let target = f_star.map(|f_star| Target { f_star, tol: cfg.tol });
    let x0 = random_start(&spec.default_start, cfg.n, seed);

    let outcome = match solver {
        SolverKind::Subopt | SolverKind::SuboptReset => {
            let params = SolverParams {
                max_inner_iters: cfg.max_iters,
                reset_enabled: solver == SolverKind::SuboptReset,
                ..cfg.params.clone()
            };
            let mut hooks = Hooks {
                observer: None,
                target,
            };
            solve_with(&problem, &x0, &params, &mut hooks)
        }
        SolverKind::Subg => classical_subgradient(&problem, &x0, StepRule::default_for(&x0), cfg.max_iters, target),
        SolverKind::Gs => {
            let params = GsParams {
                max_iters: cfg.max_iters,
                seed,
                ..GsParams::default()
            };
            gradient_sampling(&problem, &x0, &params, target)
        }
    };
    match outcome {
        Ok(report) => fill(&mut row, &report, f_star, cfg.tol),
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

fn fill(row: &mut BenchResult, r: &RunReport, f_star: Option<f64>, tol: f64) {
    row.cost_evals = r.fun_evals + r.sub_evals;
    row.cost_time = r.wall_time;
    row.f_end = r.f_end;
    row.e_end = f_star.map_or(f64::NAN, |fs| relative_error(r.f_end, fs));
    row.success = row.e_end < tol && r.status != Status::IterCapReached;
    row.status = r.status.to_string();
}

/// Every (problem, solver, seed) triple in config order, run in parallel.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<BenchResult> {
    let jobs: Vec<(ProblemKind, SolverKind, u64)> = cfg
        .problems
        .iter()
        .flat_map(|&p| {
            cfg.solvers
                .iter()
                .flat_map(move |&s| cfg.seeds.iter().map(move |&seed| (p, s, seed)))
        })
        .collect();
    jobs.into_par_iter()
        .map(|(p, s, seed)| run_one(p, s, seed, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Evals,
    Time,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "evals" => Ok(Metric::Evals),
            "time" => Ok(Metric::Time),
            other => Err(format!("unknown profile metric '{other}' (expected evals or time)")),
        }
    }
}

/// Performance ratios `r_{p,s}` per solver, one entry per problem instance
/// (`+∞` for failures).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub solvers: Vec<String>,
    pub ratios: Vec<Vec<f64>>,
}

impl Profile {
    pub fn problem_count(&self) -> usize {
        self.ratios.first().map_or(0, Vec::len)
    }

    /// `ρ_s(τ) = |{p : r_{p,s} ≤ τ}| / |P|`
    pub fn rho(&self, solver: usize, tau: f64) -> f64 {
        let r = &self.ratios[solver];
        if r.is_empty() {
            return 0.0;
        }
        r.iter().filter(|&&v| v <= tau).count() as f64 / r.len() as f64
    }

    /// Largest finite ratio over all solvers (1 when there is none).
    pub fn max_ratio(&self) -> f64 {
        self.ratios
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(1.0, f64::max)
    }

    /// `ρ_s` at `samples` values of τ spaced log-uniformly on
    /// `[1, max_ratio]`, endpoints included.
    pub fn sample(&self, samples: usize) -> Vec<ProfilePoint> {
        let hi = self.max_ratio();
        let taus: Vec<f64> = (0..samples)
            .map(|i| {
                if samples == 1 || i == 0 {
                    1.0
                } else if i + 1 == samples {
                    hi
                } else {
                    hi.powf(i as f64 / (samples - 1) as f64)
                }
            })
            .collect();
        self.solvers
            .iter()
            .enumerate()
            .flat_map(|(s, name)| {
                taus.iter().map(move |&tau| ProfilePoint {
                    solver: name.clone(),
                    tau,
                    rho: self.rho(s, tau),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub solver: String,
    pub tau: f64,
    pub rho: f64,
}

/// Builds ratios from results; a problem instance is a (problem, n, seed)
/// triple and solvers are taken in order of first appearance.
pub fn performance_profile(results: &[BenchResult], metric: Metric) -> Profile {
    let mut solvers: Vec<String> = Vec::new();
    for r in results {
        if !solvers.contains(&r.solver) {
            solvers.push(r.solver.clone());
        }
    }
    let mut costs: BTreeMap<(String, usize, u64), Vec<f64>> = BTreeMap::new();
    for r in results {
        let s = solvers.iter().position(|x| *x == r.solver).unwrap_or(0);
        let cost = if !r.success {
            f64::INFINITY
        } else {
            match metric {
                Metric::Evals => r.cost_evals as f64,
                Metric::Time => r.cost_time,
            }
        };
        let row = costs
            .entry((r.problem.clone(), r.n, r.seed))
            .or_insert_with(|| vec![f64::INFINITY; solvers.len()]);
        row[s] = row[s].min(cost);
    }
    let mut ratios = vec![Vec::with_capacity(costs.len()); solvers.len()];
    for row in costs.values() {
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        for (s, c) in row.iter().enumerate() {
            let r = if c.is_finite() {
                // zero-cost successes (timer resolution) tie with the best
                if best > 0.0 { c / best } else { 1.0 }
            } else {
                f64::INFINITY
            };
            ratios[s].push(r);
        }
    }
    Profile { solvers, ratios }
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the header even when `rows` is empty.
pub fn write_results(path: impl AsRef<Path>, rows: &[BenchResult]) -> Result<(), csv::Error> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "problem", "solver", "n", "seed", "cost_evals", "cost_time", "success", "f_end", "E_end",
            "status",
        ])?;
        w.flush().map_err(csv::Error::from)
    } else {
        write_csv(path, rows)
    }
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}
