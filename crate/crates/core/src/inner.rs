//! Search for a (δ, G_ε(x))-stationary point: a point whose computed bundle
//! has a hull element of norm at most δ.
//!
//! Each pass solves the min-norm subproblem over the bundle, stops if
//! `‖g*‖ ≤ δ`, and otherwise runs the line search along `−g*/‖g*‖`. A descent
//! step moves the iterate and restarts the bundle from the subgradient at the
//! new point; a null step keeps the iterate and appends the returned
//! subgradient.

use crate::error::SolveError;
use crate::linesearch::{two_point_line_search, LineSearchOutcome};
use crate::minnorm::{min_norm_point, min_norm_point_warm, Bundle, MinNormError, MinNormSolution};
use crate::oracle::{CountingOracle, Objective};
use crate::outer::Hooks;
use crate::params::SolverParams;
use crate::report::{RunReport, Status};
use crate::trace::{IterationEvent, LineSearchEvent, StepKind};

/// Where a stationarity search ended.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerExit {
    pub x: Vec<f64>,
    pub f: f64,
    /// `‖g*‖` of the last solved subproblem.
    pub g_norm: f64,
    pub status: Status,
    pub target_reached: bool,
}

/// Runs the stationarity search from `x0` with radius `eps` and tolerance
/// `delta`, counting evaluations and line searches into `report`.
pub fn dg_sp<O: Objective + ?Sized>(
    oracle: &O,
    x0: &[f64],
    eps: f64,
    delta: f64,
    params: &SolverParams,
    report: &mut RunReport,
    hooks: &mut Hooks<'_>,
) -> Result<InnerExit, SolveError> {
    let counted = CountingOracle::new(oracle);
    let f0 = counted.value(x0);
    report.fun_evals += counted.fun_evals();
    run(oracle, x0.to_vec(), f0, eps, delta, params, report, hooks, 0)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run<O: Objective + ?Sized>(
    oracle: &O,
    x0: Vec<f64>,
    f0: f64,
    eps: f64,
    delta: f64,
    params: &SolverParams,
    report: &mut RunReport,
    hooks: &mut Hooks<'_>,
    round: u64,
) -> Result<InnerExit, SolveError> {
    let oracle = CountingOracle::new(oracle);
    let result = search(&oracle, x0, f0, eps, delta, params, report, hooks, round);
    report.fun_evals += oracle.fun_evals();
    report.sub_evals += oracle.sub_evals();
    result
}

#[allow(clippy::too_many_arguments)]
fn search<O: Objective + ?Sized>(
    oracle: &O,
    mut x: Vec<f64>,
    mut fx: f64,
    eps: f64,
    delta: f64,
    params: &SolverParams,
    report: &mut RunReport,
    hooks: &mut Hooks<'_>,
    round: u64,
) -> Result<InnerExit, SolveError> {
    let exit = |x: Vec<f64>, f: f64, g_norm: f64, status: Status, target_reached: bool| InnerExit {
        x,
        f,
        g_norm,
        status,
        target_reached,
    };

    if hooks.target_reached(fx) {
        return Ok(exit(x, fx, f64::NAN, Status::Converged, true));
    }

    let mut bundle = Bundle::singleton(oracle.subgradient(&x));
    let mut warm: Option<Vec<f64>> = None;
    let mut k: u64 = 0;
    // ‖g*‖ before the last null step; the next solve must land strictly below
    let mut after_null: Option<f64> = None;

    loop {
        report.max_bundle = report.max_bundle.max(bundle.len());
        let sol = solve_subproblem(&bundle, warm.as_deref(), delta, params)?;
        if sol.norm <= delta {
            hooks.iteration(&IterationEvent {
                round,
                k,
                eps,
                delta,
                kind: StepKind::Stationary,
                x: &x,
                f: fx,
                bundle: &bundle,
                solution: &sol,
                new_subgradient: None,
                next: None,
                reset: false,
            });
            return Ok(exit(x, fx, sol.norm, Status::Converged, false));
        }
        if after_null.is_some_and(|prev| sol.norm >= prev) {
            // the decrease is below the resolution of ‖g*‖
            return Ok(exit(x, fx, sol.norm, Status::SubproblemStalled, false));
        }
        if report.inner_iters >= params.max_inner_iters {
            return Ok(exit(x, fx, sol.norm, Status::IterCapReached, false));
        }

        let ls = match two_point_line_search(oracle, eps, &x, fx, &sol.g_star, params) {
            Ok(ls) => ls,
            Err(_) => return Ok(exit(x, fx, sol.norm, Status::LineSearchStalled, false)),
        };
        report.inner_iters += 1;
        hooks.line_search(&LineSearchEvent {
            round,
            k,
            eps,
            x: &x,
            fx,
            g_star: &sol.g_star,
            result: &ls,
        });

        match ls.outcome {
            LineSearchOutcome::Descent { point, value, .. } => {
                hooks.iteration(&IterationEvent {
                    round,
                    k,
                    eps,
                    delta,
                    kind: StepKind::Descent,
                    x: &x,
                    f: fx,
                    bundle: &bundle,
                    solution: &sol,
                    new_subgradient: None,
                    next: Some((&point, value)),
                    reset: false,
                });
                x = point;
                fx = value;
                if hooks.target_reached(fx) {
                    return Ok(exit(x, fx, sol.norm, Status::Converged, true));
                }
                bundle = Bundle::singleton(oracle.subgradient(&x));
                warm = None;
                after_null = None;
            }
            LineSearchOutcome::NullStep { subgradient, .. } => {
                let reset = params.reset_enabled && bundle.len() + 1 >= params.reset_m;
                hooks.iteration(&IterationEvent {
                    round,
                    k,
                    eps,
                    delta,
                    kind: StepKind::Null,
                    x: &x,
                    f: fx,
                    bundle: &bundle,
                    solution: &sol,
                    new_subgradient: Some(&subgradient),
                    next: None,
                    reset,
                });
                let mut weights = if reset {
                    bundle = reset_bundle(&bundle, &sol, params.reset_theta, params.reset_m);
                    // g* closes the reduced bundle; start the next solve there
                    let mut w = vec![0.0; bundle.len()];
                    w[bundle.len() - 1] = 1.0;
                    w
                } else {
                    sol.weights
                };
                bundle.push(subgradient);
                weights.push(0.0);
                warm = Some(weights);
                after_null = Some(sol.norm);
            }
        }
        k += 1;
    }
}

fn solve_subproblem(
    bundle: &Bundle,
    warm: Option<&[f64]>,
    delta: f64,
    params: &SolverParams,
) -> Result<MinNormSolution, SolveError> {
    // A null step leaves the previous g* with residual above 0.9‖g*‖² > 0.9δ²,
    // so the tolerance must stay below δ² or the stale point is accepted again.
    let scale = bundle.max_sq_norm().sqrt().max(1.0);
    let tol = bundle.scaled_tol(params.qp_tol).min(params.qp_tol * scale * delta);
    let res = match warm {
        Some(w) => min_norm_point_warm(bundle, tol, w),
        None => min_norm_point(bundle, tol),
    };
    match res {
        Ok(sol) => Ok(sol),
        // round-off floor; the best corral is still a sound direction
        Err(MinNormError::Convergence { best, residual }) if residual <= bundle.scaled_tol(1e-9) => {
                Ok(best)
        }
        Err(e) => Err(e.into()),
    }
}

/// Shrinks a bundle of `M − 1` members before a null step would make it `M`.
///
/// Keeps the members carrying the `l` largest weights, `l` being the smallest
/// count whose weights sum to at least `theta`, and appends `g*`. Ties in
/// weight keep the earlier member. `l` is capped at `M − 2` so that the bundle
/// never exceeds `M` once the new subgradient is appended.
pub fn reset_bundle(bundle: &Bundle, solution: &MinNormSolution, theta: f64, m: usize) -> Bundle {
    let mut order: Vec<usize> = (0..bundle.len()).collect();
    // stable: equal weights keep insertion order
    order.sort_by(|&a, &b| solution.weights[b].total_cmp(&solution.weights[a]));

    let positive = order
        .iter()
        .take_while(|&&j| solution.weights[j] > 0.0)
        .count()
        .max(1);
    let mut keep = positive;
    let mut mass = 0.0;
    for (l, &j) in order.iter().enumerate() {
        mass += solution.weights[j];
        if mass >= theta - 1e-12 {
            keep = (l + 1).min(positive);
            break;
        }
    }
    let keep = keep.min(m.saturating_sub(2)).max(1);

    let mut out = Bundle::with_capacity(bundle.dim(), m);
    for &j in &order[..keep] {
        out.push(bundle.members()[j].clone());
    }
    out.push(solution.g_star.clone());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Observer;
    use crate::vecops::{dot, norm, sign};

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

    struct L1(usize);
    impl Objective for L1 {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().map(|v| v.abs()).sum()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().map(|&v| sign(v)).collect()
        }
    }

    fn solution(weights: &[f64], bundle: &Bundle) -> MinNormSolution {
        let g_star = bundle.combine(weights);
        MinNormSolution {
            norm: norm(&g_star),
            g_star,
            weights: weights.to_vec(),
        }
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let p = SolverParams::default();
        let mut report = RunReport::start(vec![], 0.0);
        let x0 = [0.1, -0.2];
        let delta = 2.0 * norm(&x0) * 1.01;
        let out = dg_sp(&SqNorm(2), &x0, 0.1, delta, &p, &mut report, &mut Hooks::default()).unwrap();
        assert_eq!(out.x, x0.to_vec());
        assert_eq!(out.status, Status::Converged);
        assert_eq!(report.inner_iters, 0);
        assert_eq!((report.fun_evals, report.sub_evals), (1, 1));
    }

    #[test]
    fn l1_reaches_small_value() {
        let p = SolverParams::default();
        let mut report = RunReport::start(vec![], 0.0);
        let out = dg_sp(&L1(2), &[1.0, 1.0], 0.1, 1e-3, &p, &mut report, &mut Hooks::default()).unwrap();
        assert_eq!(out.status, Status::Converged);
        assert!(out.f <= 0.1 * 2.0, "f = {}", out.f);
        assert!(out.g_norm <= 1e-3);
    }

    #[derive(Default)]
    struct Recorder {
        fs: Vec<f64>,
        kinds: Vec<StepKind>,
        null_norms: Vec<(u64, f64)>,
        max_bundle: usize,
    }
    impl Observer for Recorder {
        fn on_iteration(&mut self, ev: &IterationEvent<'_>) {
            self.fs.push(ev.f);
            self.kinds.push(ev.kind);
            self.max_bundle = self.max_bundle.max(ev.bundle.len());
            if ev.kind == StepKind::Null {
                self.null_norms.push((ev.k, ev.solution.norm));
            }
        }
    }

    #[test]
    fn descent_is_monotone_and_null_steps_shrink_g() {
        let p = SolverParams::default();
        let mut report = RunReport::start(vec![], 0.0);
        let mut rec = Recorder::default();
        let mut hooks = Hooks {
            observer: Some(&mut rec),
            target: None,
        };
        dg_sp(&L1(5), &[1.0, -2.0, 0.5, 0.3, -0.1], 0.1, 1e-4, &p, &mut report, &mut hooks).unwrap();
        assert!(rec.fs.windows(2).all(|w| w[1] <= w[0]));
        assert!(rec.kinds.contains(&StepKind::Null));
        // consecutive null steps at the same x strictly decrease ‖g*‖
        for pair in rec.null_norms.windows(2) {
            if pair[1].0 == pair[0].0 + 1 {
                assert!(pair[1].1 < pair[0].1);
            }
        }
    }

    #[test]
    fn reset_keeps_smallest_prefix_reaching_theta() {
        let b = Bundle::from_members(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let s = solution(&[0.7, 0.2, 0.1], &b);
        let r = reset_bundle(&b, &s, 0.9, 4);
        assert_eq!(r.len(), 3);
        assert_eq!(r.members()[0], b.members()[0]);
        assert_eq!(r.members()[1], b.members()[1]);
        assert_eq!(r.members()[2], s.g_star);
    }

    #[test]
    fn reset_with_degenerate_weights() {
        let b = Bundle::from_members(vec![vec![1.0, 2.0], vec![5.0, 1.0], vec![3.0, 3.0]]).unwrap();
        let s = solution(&[1.0, 0.0, 0.0], &b);
        let r = reset_bundle(&b, &s, 0.5, 4);
        assert_eq!(r.members(), &[vec![1.0, 2.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn reset_full_mass_keeps_support() {
        let b = Bundle::from_members(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![4.0, 4.0],
            vec![-1.0, 3.0],
        ])
        .unwrap();
        let s = solution(&[0.25, 0.5, 0.0, 0.25], &b);
        let r = reset_bundle(&b, &s, 1.0, 10);
        assert_eq!(r.len(), 4);
        assert_eq!(r.members()[0], vec![0.0, 1.0]);
        assert_eq!(r.members()[1], vec![1.0, 0.0]);
        assert_eq!(r.members()[2], vec![-1.0, 3.0]);
    }

    #[test]
    fn reset_respects_bound() {
        let members: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, 1.0]).collect();
        let b = Bundle::from_members(members).unwrap();
        let s = solution(&[0.25; 4], &b);
        // θ = 1 would keep all four; M = 5 allows three plus g*
        let r = reset_bundle(&b, &s, 1.0, 5);
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn bundle_never_exceeds_reset_bound() {
        let p = SolverParams {
            reset_enabled: true,
            reset_m: 4,
            ..Default::default()
        };
        let mut report = RunReport::start(vec![], 0.0);
        let mut rec = Recorder::default();
        let mut hooks = Hooks {
            observer: Some(&mut rec),
            target: None,
        };
        dg_sp(&L1(6), &[1.0, -2.0, 0.5, 0.3, -0.1, 0.7], 0.1, 1e-4, &p, &mut report, &mut hooks).unwrap();
        assert!(rec.max_bundle <= 4);
    }
}
