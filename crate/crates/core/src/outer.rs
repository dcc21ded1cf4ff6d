//! Outer loop: shrink (δ, ε) geometrically and run a stationarity search per
//! round until both fall to the optimality tolerance η.

use std::time::Instant;

use crate::error::SolveError;
use crate::inner;
use crate::oracle::{CountingOracle, Objective};
use crate::params::SolverParams;
use crate::problems::relative_error;
use crate::report::{RunReport, Status};
use crate::trace::{IterationEvent, LineSearchEvent, Observer};

/// Early stop once the relative error `|f − f*|/(|f*| + 1)` drops below `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub f_star: f64,
    pub tol: f64,
}

impl Target {
    pub fn reached(&self, f: f64) -> bool {
        relative_error(f, self.f_star) < self.tol
    }
}

/// Optional observer and early-stop target for a run.
#[derive(Default)]
pub struct Hooks<'a> {
    pub observer: Option<&'a mut dyn Observer>,
    pub target: Option<Target>,
}

impl Hooks<'_> {
    pub(crate) fn target_reached(&self, f: f64) -> bool {
        self.target.is_some_and(|t| t.reached(f))
    }

    pub(crate) fn iteration(&mut self, ev: &IterationEvent<'_>) {
        if let Some(o) = self.observer.as_deref_mut() {
            o.on_iteration(ev);
        }
    }

    pub(crate) fn line_search(&mut self, ev: &LineSearchEvent<'_>) {
        if let Some(o) = self.observer.as_deref_mut() {
            o.on_line_search(ev);
        }
    }
}

/// `(δ_ν, ε_ν) = (δ₀·r_δ^ν, ε₀·r_ε^ν)`.
pub fn schedule(params: &SolverParams, nu: u32) -> (f64, f64) {
    let nu = nu as i32;
    (
        params.delta0 * params.reduce_delta.powi(nu),
        params.eps0 * params.reduce_eps.powi(nu),
    )
}

/// Minimizes `oracle` from `x0`.
pub fn solve<O: Objective + ?Sized>(
    oracle: &O,
    x0: &[f64],
    params: &SolverParams,
) -> Result<RunReport, SolveError> {
    solve_with(oracle, x0, params, &mut Hooks::default())
}

/// [`solve`] with an observer and/or early-stop target.
///
/// Round ν runs the stationarity search with `(δ_ν, ε_ν)` from the current
/// iterate and continues from its output; after the round the run stops if
/// `δ_ν ≤ η` and `ε_ν ≤ η`. The returned iterate is the output of the last
/// round. `outer_iters` in the report is the final ν.
pub fn solve_with<O: Objective + ?Sized>(
    oracle: &O,
    x0: &[f64],
    params: &SolverParams,
    hooks: &mut Hooks<'_>,
) -> Result<RunReport, SolveError> {
    let params = params.clone().validate()?;
    if x0.len() != oracle.dim() {
        return Err(SolveError::Dimension {
            expected: oracle.dim(),
            got: x0.len(),
        });
    }
    let started = Instant::now();
    let f0 = {
        let counted = CountingOracle::new(oracle);
        let f0 = counted.value(x0);
        if !f0.is_finite() {
            return Err(SolveError::NonFinite);
        }
        f0
    };
    let mut report = RunReport::start(x0.to_vec(), f0);
    report.fun_evals = 1;

    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut nu: u32 = 0;
    loop {
        let (delta, eps) = schedule(&params, nu);
        let out = inner::run(
            oracle,
            x,
            fx,
            eps,
            delta,
            &params,
            &mut report,
            hooks,
            u64::from(nu),
        )?;
        x = out.x;
        fx = out.f;
        report.status = out.status;
        report.target_reached = out.target_reached;
        if out.status != Status::Converged || out.target_reached {
            break;
        }
        if delta <= params.eta && eps <= params.eta {
            break;
        }
        if nu + 1 >= params.max_outer_iters {
            report.status = Status::IterCapReached;
            break;
        }
        nu += 1;
    }

    report.outer_iters = u64::from(nu);
    report.x_end = x;
    report.f_end = fx;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::CountingOracle;
    use crate::vecops::{dot, norm};
    use approx::assert_abs_diff_eq;

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

    #[test]
    fn schedule_halves() {
        let p = SolverParams::default();
        assert_eq!(schedule(&p, 0), (1.0, 0.1));
        assert_eq!(schedule(&p, 1), (0.5, 0.05));
        let (d, e) = schedule(&p, 10);
        assert_abs_diff_eq!(d, 9.765625e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(e, 9.765625e-5, epsilon = 1e-18);
    }

    #[test]
    fn eta_tenth_stops_after_round_four() {
        let p = SolverParams {
            eta: 0.1,
            ..Default::default()
        };
        let r = solve(&SqNorm(3), &[1.0, 1.0, 1.0], &p).unwrap();
        assert_eq!(r.outer_iters, 4);
        assert_eq!(r.status, Status::Converged);
    }

    #[test]
    fn smooth_convex_sanity() {
        let p = SolverParams {
            eta: 1e-6,
            ..Default::default()
        };
        let o = CountingOracle::new(SqNorm(4));
        let r = solve(&o, &[1.0; 4], &p).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.f_end <= 1e-8, "f_end = {}", r.f_end);
        assert!(norm(&r.x_end) < 1e-4);
        assert_eq!(r.fun_evals, o.fun_evals());
        assert_eq!(r.sub_evals, o.sub_evals());
        assert_eq!(r.f_end, dot(&r.x_end, &r.x_end));
    }

    #[test]
    fn target_stops_early() {
        let mut hooks = Hooks {
            observer: None,
            target: Some(Target {
                f_star: 0.0,
                tol: 1e-2,
            }),
        };
        let r = solve_with(&SqNorm(2), &[1.0, 1.0], &SolverParams::default(), &mut hooks).unwrap();
        assert!(r.target_reached);
        assert!(r.f_end < 1e-2);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let err = solve(&SqNorm(3), &[1.0], &SolverParams::default()).unwrap_err();
        assert!(matches!(err, SolveError::Dimension { expected: 3, got: 1 }));
    }

    #[test]
    fn invalid_params_are_reported() {
        let p = SolverParams {
            beta1: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            solve(&SqNorm(1), &[1.0], &p),
            Err(SolveError::Params(_))
        ));
    }
}
