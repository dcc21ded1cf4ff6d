//! `subopt`: run the solver on test problems, benchmark grids and the two
//! application objectives.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subopt::apps::cheby::{alternation_check, cheby_objective, ChebyTarget, PolyCoeffs, Sampling};
use subopt::apps::cluster::{assign_clusters, cluster_objective, load_points_csv, random_centers, CenterMatrix};
use subopt::bench::{performance_profile, run_suite, write_csv, write_results, Metric, SolverKind, SuiteConfig};
use subopt::problems::{random_start, relative_error, Problem, ProblemKind};
use subopt::trace::CsvTrace;
use subopt::{solve_with, Hooks, SolverParams, Status};

const SUCCESS_TOL: f64 = 5e-4;
const PROFILE_SAMPLES: usize = 200;

#[derive(Parser, Debug)]
#[command(name = "subopt", version, about = "Descent subgradient solver for nonsmooth objectives")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file mirroring the subcommand's flags; flags given on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize one test problem.
    Solve(SolveArgs),
    /// Run a solver x problem grid and write one CSV row per run.
    Bench(BenchArgs),
    /// Minimize the clustering objective for a CSV data set.
    Cluster(ClusterArgs),
    /// Best uniform polynomial approximation of a target function.
    Cheby(ChebyArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1e-8)]
    eta: f64,
    /// Start from a random point near the default start; without it the
    /// default start is used.
    #[arg(long)]
    seed: Option<u64>,
    /// Enable the bundle reset with this size bound.
    #[arg(long)]
    reset_m: Option<usize>,
    #[arg(long, requires = "reset_m")]
    reset_theta: Option<f64>,
    /// Write the per-iteration trace as CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated problem names, or `all`.
    #[arg(long)]
    problems: String,
    /// Comma-separated solvers: subopt, subopt-reset, subg, gs.
    #[arg(long)]
    solvers: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also write a performance profile to `<out stem>.profile.csv`.
    #[arg(long)]
    profile: Option<Metric>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long, value_name = "CSVPATH")]
    data: PathBuf,
    #[arg(long)]
    kappa: usize,
    #[arg(long, default_value_t = 1e-8)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ChebyArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    degree: usize,
    /// Endpoints; `pi` and `-pi` are accepted.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    interval: Option<Vec<String>>,
    #[arg(long, default_value_t = 1e-8)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

const SUBCOMMANDS: [&str; 4] = ["solve", "bench", "cluster", "cheby"];

/// Finds `--config PATH` or `--config=PATH` anywhere in the arguments.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Parses `key = value` lines into flag tokens. Blank lines and `#` comments
/// are skipped; a value may hold several whitespace-separated words
/// (`interval = -pi pi`).
fn config_tokens(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value, got '{line}'", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key '{key}'", i + 1);
        }
        out.push(OsString::from(format!("--{key}")));
        out.extend(value.split_whitespace().map(OsString::from));
    }
    Ok(out)
}

/// Inserts the config file's flags right after the subcommand so that the
/// explicit flags, parsed later, override them.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config {}", path.display()))?;
    let tokens = config_tokens(&text)?;
    let Some(pos) = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(args);
    };
    let mut merged = args[..=pos].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}

fn parse_endpoint(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "pi" | "+pi" => Ok(std::f64::consts::PI),
        "-pi" => Ok(-std::f64::consts::PI),
        other => other
            .parse::<f64>()
            .map_err(|_| anyhow!("interval endpoint '{s}' is not a number")),
    }
}

fn parse_list<T, E: std::fmt::Display>(list: &str, parse: impl Fn(&str) -> Result<T, E>) -> Result<Vec<T>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).map_err(|e| anyhow!("{e}")))
        .collect()
}

fn params_with_eta(eta: f64) -> Result<SolverParams> {
    Ok(SolverParams {
        eta,
        ..SolverParams::default()
    }
    .validate()?)
}

/// Outcome of a command that got as far as running: `true` when every run
/// succeeded.
type RunOk = bool;

fn run_solve(a: SolveArgs) -> Result<RunOk> {
    let kind: ProblemKind = a.problem.parse()?;
    let problem = Problem::new(kind, a.n)?;
    let spec = problem.spec();
    let mut params = SolverParams {
        eta: a.eta,
        ..SolverParams::default()
    };
    if let Some(m) = a.reset_m {
        params.reset_enabled = true;
        params.reset_m = m;
        params.reset_theta = a.reset_theta.unwrap_or(params.reset_theta);
    }
    let params = params.validate()?;
    let x0 = match a.seed {
        Some(seed) => random_start(&spec.default_start, a.n, seed),
        None => spec.default_start.clone(),
    };

    let mut trace = match &a.trace {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            Some(CsvTrace::new(BufWriter::new(file)))
        }
        None => None,
    };
    let result = {
        let mut hooks = Hooks {
            observer: trace.as_mut().map(|t| t as &mut dyn subopt::trace::Observer),
            target: None,
        };
        solve_with(&problem, &x0, &params, &mut hooks)
    };
    if let Some(t) = trace {
        t.finish().context("writing trace")?;
    }
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("run failed: {e}");
            return Ok(false);
        }
    };

    let f_star = spec.f_star.reference();
    println!("problem      {} (n={})", spec.name, a.n);
    println!("status       {}", report.status);
    println!("f_end        {:.12e}", report.f_end);
    match f_star {
        Some(fs) => {
            println!("f_star       {fs:.12e}");
            println!("E            {:.3e}", relative_error(report.f_end, fs));
        }
        None => println!("f_star       unknown"),
    }
    println!("fun_evals    {}", report.fun_evals);
    println!("sub_evals    {}", report.sub_evals);
    println!("inner_iters  {}", report.inner_iters);
    println!("outer_iters  {}", report.outer_iters);
    println!("max_bundle   {}", report.max_bundle);
    println!("time_s       {:.3}", report.wall_time);

    let within = f_star.is_none_or(|fs| relative_error(report.f_end, fs) < SUCCESS_TOL);
    Ok(report.status != Status::IterCapReached && within)
}

fn profile_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.profile.csv"))
}

fn run_bench(a: BenchArgs) -> Result<RunOk> {
    let problems = if a.problems.trim().eq_ignore_ascii_case("all") {
        ProblemKind::ALL.to_vec()
    } else {
        parse_list(&a.problems, str::parse::<ProblemKind>)?
    };
    let solvers = parse_list(&a.solvers, str::parse::<SolverKind>)?;
    if solvers.is_empty() {
        bail!("no solvers given");
    }
    if a.n < 2 {
        bail!("dimension must be at least 2, got {}", a.n);
    }
    let cfg = SuiteConfig::new(problems, solvers, a.n, vec![a.seed]);
    let results = run_suite(&cfg);
    write_results(&a.out, &results).with_context(|| format!("writing {}", a.out.display()))?;

    for r in &results {
        println!(
            "{:<18} {:<13} {:>8} evals {:>8.3}s  E={:<10.3e} {} {}",
            r.problem,
            r.solver,
            r.cost_evals,
            r.cost_time,
            r.e_end,
            if r.success { "ok" } else { "FAIL" },
            r.status
        );
    }
    if let (Some(metric), false) = (a.profile, results.is_empty()) {
        let points = performance_profile(&results, metric).sample(PROFILE_SAMPLES);
        let path = profile_path(&a.out);
        write_csv(&path, &points).with_context(|| format!("writing {}", path.display()))?;
        println!("profile written to {}", path.display());
    }
    let ok = results.iter().filter(|r| r.success).count();
    println!("{ok}/{} runs successful", results.len());
    Ok(ok == results.len())
}

fn run_cluster(a: ClusterArgs) -> Result<RunOk> {
    let data = load_points_csv(&a.data)?;
    if a.kappa == 0 {
        bail!("kappa must be at least 1");
    }
    let params = params_with_eta(a.eta)?;
    let obj = cluster_objective(&data, a.kappa);
    let x0 = random_centers(&data, a.kappa, a.seed);
    let report = match solve_with(&obj, &x0, &params, &mut Hooks::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("run failed: {e}");
            return Ok(false);
        }
    };
    let centers = CenterMatrix::unflatten(&report.x_end, data.dim());
    let assignment = assign_clusters(&centers, &data);

    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let mut header = vec!["cluster".to_string(), "size".to_string()];
    header.extend((1..=data.dim()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (j, c) in centers.centers.iter().enumerate() {
        let mut row = vec![j.to_string(), assignment.sizes[j].to_string()];
        row.extend(c.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;

    println!("points       {} (dim {})", data.m(), data.dim());
    println!("kappa        {}", a.kappa);
    println!("status       {}", report.status);
    println!("f_end        {:.12e}", report.f_end);
    println!("sizes        {:?}", assignment.sizes);
    if !assignment.empty.is_empty() {
        println!("empty        {:?}", assignment.empty);
    }
    println!("evals        {}", report.fun_evals + report.sub_evals);
    println!("time_s       {:.3}", report.wall_time);
    Ok(report.status != Status::IterCapReached)
}

fn run_cheby(a: ChebyArgs) -> Result<RunOk> {
    let target: ChebyTarget = a.target.parse()?;
    let (lo, hi) = match &a.interval {
        Some(v) => (parse_endpoint(&v[0])?, parse_endpoint(&v[1])?),
        None => target.default_interval(),
    };
    let sampling = Sampling::new(lo, hi);
    let obj = cheby_objective(target, a.degree, sampling)?;
    let params = params_with_eta(a.eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let x0: Vec<f64> = (0..=a.degree).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let report = match solve_with(&obj, &x0, &params, &mut Hooks::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("run failed: {e}");
            return Ok(false);
        }
    };
    let coeffs = PolyCoeffs(report.x_end.clone());
    let alternation = alternation_check(&coeffs, |x| target.eval(x), &sampling, 1e-3);

    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    w.write_record(["power", "coefficient"])?;
    for (i, c) in coeffs.0.iter().enumerate() {
        w.write_record([(a.degree - i).to_string(), c.to_string()])?;
    }
    w.flush()?;

    println!("target       {target} on [{lo}, {hi}]");
    println!("degree       {}", a.degree);
    println!("status       {}", report.status);
    println!("h_end        {:.10}", report.f_end);
    for (i, c) in coeffs.0.iter().enumerate() {
        println!("c{:<11} {c:+.6e}", a.degree - i);
    }
    println!("alternation  {alternation} (need {})", a.degree + 2);
    println!("time_s       {:.3}", report.wall_time);
    Ok(report.status != Status::IterCapReached)
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    // clap exits with 2 on usage errors
    let cli = Cli::parse_from(args);
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Cluster(a) => run_cluster(a),
        Command::Cheby(a) => run_cheby(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
