//! Two-point line search.
//!
//! Two step-length tracks run side by side. The bracketed trial `tᵢ ∈ (0, ε]`
//! probes subgradients that stay inside the ε-ball, while the geometric track
//! `t̄ᵢ = t₀^{i/p}` (starting at 1) looks for sufficient decrease with a step of
//! at least `t̄`. The search ends with either a descent step or a subgradient
//! `ξ` with `ξᵀd ≥ −β₂‖g*‖`, which cannot lie in the current hull.

use thiserror::Error;

use crate::oracle::Objective;
use crate::params::SolverParams;
use crate::vecops::{dot, scale, step};

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearchOutcome {
    /// Sufficient decrease at `point = x + step·d` with `step ≥ t̄`.
    Descent {
        point: Vec<f64>,
        step: f64,
        value: f64,
    },
    /// A subgradient at `x + trial·d` with `ξᵀd ≥ −β₂‖g*‖`.
    NullStep { subgradient: Vec<f64>, trial: f64 },
}

/// State of one loop pass: trial `tᵢ`, geometric step `t̄ᵢ` and the bracket
/// `[tˡᵢ₊₁, tᵘᵢ₊₁]` after the update with `tᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketStep {
    pub trial: f64,
    pub tbar: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub outcome: LineSearchOutcome,
    pub iterations: u32,
    /// Bracket `[tˡ, tᵘ]` when the search returned.
    pub bracket: (f64, f64),
    pub trace: Vec<BracketStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line search did not terminate within {iterations} iterations (bracket [{lower:e}, {upper:e}])")]
pub struct LineSearchStalled {
    pub iterations: u32,
    pub lower: f64,
    pub upper: f64,
}

/// `t̄ᵢ`: 1 for `i = 0`, otherwise `t0^{i/p}`.
pub fn bar_t_schedule(t0: f64, p: u32, i: u32) -> f64 {
    if i == 0 {
        1.0
    } else {
        t0.powf(f64::from(i) / f64::from(p))
    }
}

/// Next bracketed trial: the midpoint, which lies in
/// `[tˡ + ζ(tᵘ−tˡ), tᵘ − ζ(tᵘ−tˡ)]` for every `ζ < 0.5`.
pub fn next_trial(t_l: f64, t_u: f64, zeta: f64) -> f64 {
    let t = 0.5 * (t_l + t_u);
    debug_assert!({
        let w = t_u - t_l;
        t >= t_l + zeta * w - f64::EPSILON * t_u && t <= t_u - zeta * w + f64::EPSILON * t_u
    });
    t
}

/// Runs the line search from `x` along `d = −g*/‖g*‖` within radius `eps`.
///
/// `fx` is `f(x)`, evaluated by the caller. Each pass costs two value
/// evaluations (at `x + tᵢd` and `x + t̄ᵢd`) and one subgradient evaluation.
pub fn two_point_line_search<O: Objective + ?Sized>(
    oracle: &O,
    eps: f64,
    x: &[f64],
    fx: f64,
    g_star: &[f64],
    params: &SolverParams,
) -> Result<LineSearchResult, LineSearchStalled> {
    let g_norm = dot(g_star, g_star).sqrt();
    assert!(g_norm > 0.0, "line search needs a nonzero min-norm vector");
    let d = scale(g_star, -1.0 / g_norm);
    let t_min = params.tbar(eps);
    let t0 = params.t0(eps);

    let mut trial = t0;
    let mut tbar = 1.0;
    let (mut lower, mut upper) = (0.0, eps);
    let mut xi = oracle.subgradient(&step(x, trial, &d));
    let mut trace = Vec::new();

    for i in 0..params.max_linesearch_iters {
        let f_trial = oracle.value(&step(x, trial, &d));
        if f_trial - fx <= -params.beta1 * trial * g_norm {
            lower = trial;
        } else {
            upper = trial;
        }
        trace.push(BracketStep {
            trial,
            tbar,
            lower,
            upper,
        });

        let point = step(x, tbar, &d);
        let f_bar = oracle.value(&point);
        if f_bar - fx <= -params.beta1 * tbar * g_norm && tbar >= t_min {
            return Ok(LineSearchResult {
                outcome: LineSearchOutcome::Descent {
                    point,
                    step: tbar,
                    value: f_bar,
                },
                iterations: i + 1,
                bracket: (lower, upper),
                trace,
            });
        }

        if dot(&xi, &d) >= -params.beta2 * g_norm {
            debug_assert!(trial > 0.0 && trial <= eps);
            return Ok(LineSearchResult {
                outcome: LineSearchOutcome::NullStep {
                    subgradient: xi,
                    trial,
                },
                iterations: i + 1,
                bracket: (lower, upper),
                trace,
            });
        }

        trial = next_trial(lower, upper, params.zeta);
        tbar = bar_t_schedule(t0, params.p, i + 1);
        xi = oracle.subgradient(&step(x, trial, &d));
    }

    Err(LineSearchStalled {
        iterations: params.max_linesearch_iters,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::CountingOracle;
    use crate::vecops::sign;
    use approx::assert_abs_diff_eq;

    struct Square;
    impl Objective for Square {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0]
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![2.0 * x[0]]
        }
    }

    struct Abs;
    impl Objective for Abs {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].abs()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![sign(x[0])]
        }
    }

    struct Linear(Vec<f64>);
    impl Objective for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            dot(&self.0, x)
        }
        fn subgradient(&self, _: &[f64]) -> Vec<f64> {
            self.0.clone()
        }
    }

    #[test]
    fn schedule_values() {
        assert_eq!(bar_t_schedule(0.075, 25, 0), 1.0);
        assert_eq!(bar_t_schedule(0.075, 25, 25), 0.075);
        assert_abs_diff_eq!(bar_t_schedule(0.075, 25, 50), 0.005625, epsilon = 1e-15);
        let mut prev = 1.0;
        for i in 1..100 {
            let t = bar_t_schedule(0.075, 25, i);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn midpoint_trials() {
        assert_eq!(next_trial(0.0, 0.1, 0.25), 0.05);
        assert_abs_diff_eq!(next_trial(0.02, 0.08, 0.25), 0.05, epsilon = 1e-17);
        let t = next_trial(0.05, 0.05 + 1e-15, 0.25);
        assert!(t.is_finite() && (0.05..=0.05 + 1e-15).contains(&t));
    }

    #[test]
    fn square_accepts_unit_step() {
        let p = SolverParams::default();
        let o = CountingOracle::new(Square);
        let r = two_point_line_search(&o, 0.1, &[2.0], 4.0, &[4.0], &p).unwrap();
        match r.outcome {
            LineSearchOutcome::Descent { point, step, value } => {
                assert_eq!(point, vec![1.0]);
                assert_eq!(step, 1.0);
                assert_eq!(value, 1.0);
            }
            other => panic!("expected descent, got {other:?}"),
        }
        assert_eq!(r.iterations, 1);
        assert_eq!((o.fun_evals(), o.sub_evals()), (2, 1));
    }

    #[test]
    fn abs_near_kink_returns_null_step() {
        let p = SolverParams::default();
        let r = two_point_line_search(&Abs, 0.1, &[1e-3], 1e-3, &[1.0], &p).unwrap();
        match r.outcome {
            LineSearchOutcome::NullStep { subgradient, trial } => {
                assert_eq!(subgradient, vec![-1.0]);
                assert_abs_diff_eq!(trial, 0.075, epsilon = 1e-15);
            }
            other => panic!("expected null step, got {other:?}"),
        }
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn linear_objective_takes_full_step() {
        let c = vec![1.0, -2.0, 0.5];
        let p = SolverParams::default();
        let x = vec![0.3, 0.1, -0.7];
        let fx = dot(&c, &x);
        let r = two_point_line_search(&Linear(c.clone()), 0.05, &x, fx, &c, &p).unwrap();
        assert!(matches!(r.outcome, LineSearchOutcome::Descent { step, .. } if step == 1.0));
    }

    #[test]
    fn bracket_nests_and_shrinks() {
        // the unit step overshoots the kink, so the first pass neither descends
        // nor finds a null step
        let p = SolverParams::default();
        let o = CountingOracle::new(Abs);
        let r = two_point_line_search(&o, 0.1, &[0.5], 0.5, &[1.0], &p).unwrap();
        assert!(r.iterations >= 2);
        let (mut lo, mut hi) = (0.0, 0.1);
        for (i, s) in r.trace.iter().enumerate() {
            assert!(s.trial > 0.0 && s.trial <= 0.1);
            assert!(s.trial == s.lower || s.trial == s.upper);
            assert!(lo <= s.lower && s.lower <= s.upper && s.upper <= hi);
            if i >= 1 {
                assert!(s.upper - s.lower <= (1.0 - p.zeta) * (hi - lo));
            }
            lo = s.lower;
            hi = s.upper;
        }
        let iters = u64::from(r.iterations);
        assert_eq!(o.fun_evals(), 2 * iters);
        assert_eq!(o.sub_evals(), iters);
    }

    #[test]
    fn stalls_on_oracle_violating_semismoothness() {
        // value says "no decrease", subgradient claims steep descent
        struct Liar;
        impl Objective for Liar {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn subgradient(&self, _: &[f64]) -> Vec<f64> {
                vec![1.0]
            }
        }
        let p = SolverParams {
            max_linesearch_iters: 30,
            ..Default::default()
        };
        let err = two_point_line_search(&Liar, 0.1, &[0.0], 0.0, &[1.0], &p).unwrap_err();
        assert_eq!(err.iterations, 30);
    }
}
