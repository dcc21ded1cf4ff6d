//! Comparison solvers for the benchmark: the classical subgradient method and
//! a simplified gradient sampling method.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolveError;
use crate::minnorm::{min_norm_point, Bundle, MinNormError};
use crate::oracle::{CountingOracle, Objective};
use crate::outer::Target;
use crate::report::{RunReport, Status};
use crate::vecops::{norm, sample_ball, scale, step};

/// Off-line step sizes `α_k` for the subgradient method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `α_k = a/k`
    Harmonic(f64),
    /// `α_k = a`
    Constant(f64),
}

impl StepRule {
    /// Harmonic rule with `a = ‖x0‖ + 1`.
    pub fn default_for(x0: &[f64]) -> Self {
        StepRule::Harmonic(norm(x0) + 1.0)
    }

    fn alpha(self, k: u64) -> f64 {
        match self {
            StepRule::Harmonic(a) => a / k as f64,
            StepRule::Constant(a) => a,
        }
    }

    fn scale(self) -> f64 {
        match self {
            StepRule::Harmonic(a) | StepRule::Constant(a) => a,
        }
    }
}

fn check_start<O: Objective + ?Sized>(oracle: &O, x0: &[f64]) -> Result<(), SolveError> {
    if x0.len() != oracle.dim() {
        return Err(SolveError::Dimension {
            expected: oracle.dim(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// `x_{k+1} = x_k − α_k ξ_k/‖ξ_k‖`, reporting the best point seen.
///
/// Stops when `ξ_k = 0`, when `target` is reached, or after `max_iters`
/// steps.
pub fn classical_subgradient<O: Objective + ?Sized>(
    oracle: &O,
    x0: &[f64],
    step_rule: StepRule,
    max_iters: u64,
    target: Option<Target>,
) -> Result<RunReport, SolveError> {
    check_start(oracle, x0)?;
    let a = step_rule.scale();
    if !(a > 0.0 && a.is_finite()) {
        return Err(SolveError::Params(crate::ParamError::new(
            "step_rule",
            format!("step scale must be positive, got {a}"),
        )));
    }
    let started = Instant::now();
    let oracle = CountingOracle::new(oracle);
    let f0 = oracle.value(x0);
    if !f0.is_finite() {
        return Err(SolveError::NonFinite);
    }
    let mut report = RunReport::start(x0.to_vec(), f0);
    report.status = Status::IterCapReached;
    let mut x = x0.to_vec();

    if target.is_some_and(|t| t.reached(f0)) {
        report.status = Status::Converged;
        report.target_reached = true;
    } else {
        for k in 1..=max_iters {
            let xi = oracle.subgradient(&x);
            let xi_norm = norm(&xi);
            if xi_norm == 0.0 {
                if oracle.value(&x) <= report.f_end {
                    report.f_end = oracle.value(&x);
                    report.x_end = x.clone();
                }
                report.status = Status::Converged;
                break;
            }
            x = step(&x, -step_rule.alpha(k) / xi_norm, &xi);
            let fx = oracle.value(&x);
            report.inner_iters = k;
            if !fx.is_finite() {
                continue;
            }
            if fx < report.f_end {
                report.f_end = fx;
                report.x_end = x.clone();
            }
            if target.is_some_and(|t| t.reached(report.f_end)) {
                report.status = Status::Converged;
                report.target_reached = true;
                break;
            }
        }
    }

    report.fun_evals = oracle.fun_evals();
    report.sub_evals = oracle.sub_evals();
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Settings for [`gradient_sampling`].
#[derive(Debug, Clone, PartialEq)]
pub struct GsParams {
    /// Points sampled per iteration; `None` means `2n`.
    pub sample_size: Option<usize>,
    pub eps0: f64,
    /// Factor applied to ε when `‖g*‖ ≤ g_tol`.
    pub eps_shrink: f64,
    pub g_tol: f64,
    /// Stop once ε falls to this value.
    pub eps_min: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: u32,
    pub max_iters: u64,
    pub qp_tol: f64,
    pub seed: u64,
}

impl Default for GsParams {
    fn default() -> Self {
        Self {
            sample_size: None,
            eps0: 0.1,
            eps_shrink: 0.1,
            g_tol: 1e-6,
            eps_min: 1e-8,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            max_iters: 10_000,
            qp_tol: 1e-12,
            seed: 0,
        }
    }
}

/// Gradient sampling: the min-norm element of subgradients sampled in
/// `B(x, ε)` gives the direction, Armijo backtracking the step.
///
/// When `‖g*‖ ≤ g_tol` or backtracking fails, ε shrinks by `eps_shrink`; the
/// run converges once ε drops to `eps_min`.
pub fn gradient_sampling<O: Objective + ?Sized>(
    oracle: &O,
    x0: &[f64],
    params: &GsParams,
    target: Option<Target>,
) -> Result<RunReport, SolveError> {
    check_start(oracle, x0)?;
    let started = Instant::now();
    let n = x0.len();
    let sample_size = params.sample_size.unwrap_or(2 * n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let oracle = CountingOracle::new(oracle);

    let mut x = x0.to_vec();
    let mut fx = oracle.value(&x);
    if !fx.is_finite() {
        return Err(SolveError::NonFinite);
    }
    let mut report = RunReport::start(x.clone(), fx);
    report.status = Status::IterCapReached;
    let mut eps = params.eps0;

    let mut k = 0;
    loop {
        if target.is_some_and(|t| t.reached(fx)) {
            report.status = Status::Converged;
            report.target_reached = true;
            break;
        }
        if eps <= params.eps_min {
            report.status = Status::Converged;
            break;
        }
        if k >= params.max_iters {
            break;
        }
        k += 1;

        let mut bundle = Bundle::with_capacity(n, sample_size + 1);
        bundle.push(oracle.subgradient(&x));
        for _ in 0..sample_size {
            let y = sample_ball(&x, eps, &mut rng);
            bundle.push(oracle.subgradient(&y));
        }
        let sol = match min_norm_point(&bundle, bundle.scaled_tol(params.qp_tol)) {
            Ok(s) => s,
            Err(MinNormError::Convergence { best, .. }) => best,
            Err(e) => return Err(e.into()),
        };
        if sol.norm <= params.g_tol {
            eps *= params.eps_shrink;
            continue;
        }

        let d = scale(&sol.g_star, -1.0 / sol.norm);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            let y = step(&x, t, &d);
            let fy = oracle.value(&y);
            if fy <= fx - params.armijo * t * sol.norm {
                accepted = Some((y, fy));
                break;
            }
            t *= params.backtrack;
        }
        match accepted {
            Some((y, fy)) => {
                x = y;
                fx = fy;
            }
            None => eps *= params.eps_shrink,
        }
    }

    report.inner_iters = k;
    report.f_end = fx;
    report.x_end = x;
    report.fun_evals = oracle.fun_evals();
    report.sub_evals = oracle.sub_evals();
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_problem;
    use crate::vecops::{dot, sign};

    struct Abs1(usize);
    impl Objective for Abs1 {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].abs()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            let mut g = vec![0.0; self.0];
            g[0] = sign(x[0]);
            g
        }
    }

    struct SqNorm(usize);
    impl Objective for SqNorm {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &[f64]) -> f64 {
            dot(x, x)
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().map(|v| 2.0 * v).collect()
        }
    }

    struct Linear;
    impl Objective for Linear {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] + x[1]
        }
        fn subgradient(&self, _: &[f64]) -> Vec<f64> {
            vec![1.0, 1.0]
        }
    }

    #[test]
    fn subgradient_abs_harmonic() {
        let r = classical_subgradient(&Abs1(1), &[1.0], StepRule::Harmonic(1.0), 100, None).unwrap();
        assert!(r.f_end <= 0.02);
        assert_eq!(r.fun_evals, 101);
    }

    #[test]
    fn subgradient_matches_hand_recursion() {
        // x₁ = 0.7 − 1 = −0.3, x₂ = −0.3 + 1/2 = 0.2, x₃ = 0.2 − 1/3
        let r = classical_subgradient(&Abs1(1), &[0.7], StepRule::Harmonic(1.0), 3, None).unwrap();
        assert!((r.f_end - 0.2f64.min((0.2f64 - 1.0 / 3.0).abs())).abs() < 1e-15);
        assert_eq!(r.status, Status::IterCapReached);
    }

    #[test]
    fn subgradient_linear_hits_cap() {
        let r = classical_subgradient(&Linear, &[0.0, 0.0], StepRule::Constant(0.1), 50, None).unwrap();
        assert_eq!(r.status, Status::IterCapReached);
        assert_eq!(r.inner_iters, 50);
        assert_eq!((r.fun_evals, r.sub_evals), (51, 50));
    }

    #[test]
    fn subgradient_zero_xi_converges() {
        let r = classical_subgradient(&SqNorm(2), &[0.0, 0.0], StepRule::Constant(1.0), 10, None).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.x_end, vec![0.0, 0.0]);
    }

    #[test]
    fn subgradient_rejects_bad_step() {
        assert!(classical_subgradient(&Linear, &[0.0, 0.0], StepRule::Constant(0.0), 5, None).is_err());
    }

    #[test]
    fn subgradient_target_stops() {
        let (p, spec) = make_problem("MAXQ", 10).unwrap();
        let target = Target { f_star: 0.0, tol: 5e-4 };
        let r = classical_subgradient(&p, &spec.default_start, StepRule::default_for(&spec.default_start), 10_000, Some(target)).unwrap();
        assert!(r.target_reached || r.status == Status::IterCapReached);
        if r.target_reached {
            assert!(r.f_end < 5e-4);
        }
    }

    #[test]
    fn gs_smooth_decreases() {
        let p = GsParams {
            max_iters: 200,
            ..Default::default()
        };
        let r = gradient_sampling(&SqNorm(5), &[1.0, -2.0, 0.5, 0.3, 1.0], &p, None).unwrap();
        assert!(norm(&r.x_end) < 1e-3, "{:?}", r.x_end);
        assert!(r.fun_evals > r.inner_iters);
    }

    #[test]
    fn gs_samples_both_sides_of_kink() {
        // a sample lands left of the kink with the cap probability p of the
        // 4-ball beyond distance r/2; at least one of 2n samples does so with
        // probability 1 − (1 − p)^{2n}
        let n = 4;
        let mut x = vec![0.0; n];
        x[0] = 0.05;
        let density = |t: f64| (1.0 - t * t).powf(1.5);
        let integrate = |a: f64, b: f64| {
            let m = 2000;
            let h = (b - a) / m as f64;
            (0..m).map(|i| density(a + (i as f64 + 0.5) * h) * h).sum::<f64>()
        };
        let p = integrate(0.5, 1.0) / integrate(-1.0, 1.0);
        let expected = 1.0 - (1.0 - p).powi(2 * n as i32);

        let trials = 2000;
        let mut hits = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = Bundle::new(n);
            b.push(Abs1(n).subgradient(&x));
            let mut both = false;
            for _ in 0..2 * n {
                let g = Abs1(n).subgradient(&sample_ball(&x, 0.1, &mut rng));
                both |= g[0] < 0.0;
                b.push(g);
            }
            let s = min_norm_point(&b, 1e-12).unwrap();
            assert_eq!(both, s.norm < 1.0);
            if both {
                assert!(s.norm < 1e-12);
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        let sd = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((freq - expected).abs() < 4.0 * sd, "{freq} vs {expected}");
    }

    #[test]
    fn gs_without_samples_is_steepest_descent() {
        let p = GsParams {
            sample_size: Some(0),
            max_iters: 1,
            ..Default::default()
        };
        let r = gradient_sampling(&SqNorm(2), &[1.0, 0.0], &p, None).unwrap();
        assert_eq!(r.sub_evals, 1);
        // full unit step along −x hits the minimizer
        assert_eq!(r.x_end, vec![0.0, 0.0]);
    }

    #[test]
    fn gs_nonsmooth_progress() {
        let (p, spec) = make_problem("MAXL", 10).unwrap();
        let r = gradient_sampling(&p, &spec.default_start, &GsParams::default(), Some(Target { f_star: 0.0, tol: 5e-4 })).unwrap();
        assert!(r.target_reached, "f_end {}", r.f_end);
    }
}
