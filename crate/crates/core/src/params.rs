use crate::error::ParamError;

/// Tunables of the line search, the inner stationarity loop and the outer
/// (δ, ε) schedule.
///
/// The lower step bound is `t̄ = tbar_fraction · ε` and the first trial step of
/// every line search is `t₀ = (t̄ + ε) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Sufficient-decrease constant β₁.
    pub beta1: f64,
    /// Null-step acceptance constant β₂ (β₁ < β₂).
    pub beta2: f64,
    /// Bracket reduction factor ζ ∈ (0, 0.5).
    pub zeta: f64,
    /// Number of line-search iterations for t̄ᵢ to decay from 1 to t₀.
    pub p: u32,
    pub eps0: f64,
    pub delta0: f64,
    pub reduce_eps: f64,
    pub reduce_delta: f64,
    /// Optimality tolerance η: the outer loop stops once δ and ε are both ≤ η.
    pub eta: f64,
    pub tbar_fraction: f64,
    /// Budget of line-search calls summed over the whole run.
    pub max_inner_iters: u64,
    pub max_linesearch_iters: u32,
    /// Upper bound on the number of outer rounds (guards η = 0).
    pub max_outer_iters: u32,
    pub reset_enabled: bool,
    /// Bundle size bound M of the reset strategy (M > 2).
    pub reset_m: usize,
    /// Weight mass θ ∈ (0, 1] retained by a reset.
    pub reset_theta: f64,
    /// Optimality residual tolerance of the min-norm subproblem, relative to
    /// the squared magnitude of the bundle (absolute when members are ≤ 1).
    pub qp_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            beta1: 1e-6,
            beta2: 0.1,
            zeta: 0.25,
            p: 25,
            eps0: 0.1,
            delta0: 1.0,
            reduce_eps: 0.5,
            reduce_delta: 0.5,
            eta: 1e-8,
            tbar_fraction: 0.5,
            max_inner_iters: 10_000,
            max_linesearch_iters: 200,
            max_outer_iters: 1_000,
            reset_enabled: false,
            reset_m: 20,
            reset_theta: 0.9,
            qp_tol: 1e-12,
        }
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<(), ParamError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ParamError::new(field, format!("{field} must lie in (0,1), got {v}")))
    }
}

impl SolverParams {
    /// Checks every parameter domain and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self, ParamError> {
        open_unit("beta1", self.beta1)?;
        open_unit("beta2", self.beta2)?;
        if self.beta1 >= self.beta2 {
            return Err(ParamError::new(
                "beta1",
                format!("beta1 < beta2 violated ({} >= {})", self.beta1, self.beta2),
            ));
        }
        if !(self.zeta > 0.0 && self.zeta < 0.5) {
            return Err(ParamError::new(
                "zeta",
                format!("zeta must lie in (0,0.5), got {}", self.zeta),
            ));
        }
        if self.p == 0 {
            return Err(ParamError::new("p", "p must be a positive integer".into()));
        }
        open_unit("eps0", self.eps0)?;
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(ParamError::new(
                "delta0",
                format!("delta0 must be positive, got {}", self.delta0),
            ));
        }
        open_unit("reduce_eps", self.reduce_eps)?;
        open_unit("reduce_delta", self.reduce_delta)?;
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(ParamError::new(
                "eta",
                format!("eta must be nonnegative, got {}", self.eta),
            ));
        }
        open_unit("tbar_fraction", self.tbar_fraction)?;
        if self.max_inner_iters == 0 {
            return Err(ParamError::new(
                "max_inner_iters",
                "max_inner_iters must be positive".into(),
            ));
        }
        if self.max_linesearch_iters == 0 {
            return Err(ParamError::new(
                "max_linesearch_iters",
                "max_linesearch_iters must be positive".into(),
            ));
        }
        if self.max_outer_iters == 0 {
            return Err(ParamError::new(
                "max_outer_iters",
                "max_outer_iters must be positive".into(),
            ));
        }
        if self.reset_m <= 2 {
            return Err(ParamError::new(
                "reset_m",
                format!("reset_m must exceed 2, got {}", self.reset_m),
            ));
        }
        if !(self.reset_theta > 0.0 && self.reset_theta <= 1.0) {
            return Err(ParamError::new(
                "reset_theta",
                format!("reset_theta must lie in (0,1], got {}", self.reset_theta),
            ));
        }
        if self.qp_tol.is_nan() || self.qp_tol <= 0.0 {
            return Err(ParamError::new("qp_tol", "qp_tol must be positive".into()));
        }
        Ok(self)
    }

    /// Lower bound t̄ on accepted descent steps for radius `eps`.
    pub fn tbar(&self, eps: f64) -> f64 {
        self.tbar_fraction * eps
    }

    /// First bracketed trial step t₀ = (t̄ + ε)/2.
    pub fn t0(&self, eps: f64) -> f64 {
        0.5 * (self.tbar(eps) + eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_accepted() {
        let p = SolverParams::default();
        assert_eq!(p.beta1, 1e-6);
        assert_eq!(p.beta2, 0.1);
        assert_eq!(p.zeta, 0.25);
        assert_eq!(p.p, 25);
        assert_eq!(p.clone().validate().unwrap(), p);
    }

    #[test]
    fn beta_ordering_is_enforced() {
        let p = SolverParams {
            beta1: 0.5,
            beta2: 0.1,
            ..Default::default()
        };
        let err = p.validate().unwrap_err();
        assert_eq!(err.field, "beta1");
        assert!(err.to_string().contains("beta1 < beta2 violated"));
    }

    #[test]
    fn zeta_boundary_is_excluded() {
        let p = SolverParams {
            zeta: 0.5,
            ..Default::default()
        };
        let err = p.validate().unwrap_err();
        assert_eq!(err.field, "zeta");
        assert!(err.to_string().contains("zeta must lie in (0,0.5)"));
    }

    #[test]
    fn each_domain_names_its_field() {
        let cases: Vec<(SolverParams, &str)> = vec![
            (SolverParams { p: 0, ..Default::default() }, "p"),
            (SolverParams { eps0: 1.0, ..Default::default() }, "eps0"),
            (SolverParams { delta0: 0.0, ..Default::default() }, "delta0"),
            (SolverParams { eta: -1.0, ..Default::default() }, "eta"),
            (SolverParams { tbar_fraction: 1.0, ..Default::default() }, "tbar_fraction"),
            (SolverParams { reset_m: 2, ..Default::default() }, "reset_m"),
            (SolverParams { reset_theta: 0.0, ..Default::default() }, "reset_theta"),
            (SolverParams { reduce_eps: 1.0, ..Default::default() }, "reduce_eps"),
        ];
        for (p, field) in cases {
            assert_eq!(p.validate().unwrap_err().field, field);
        }
    }

    #[test]
    fn step_bounds_are_ordered() {
        let p = SolverParams::default();
        for eps in [0.1, 0.05, 1e-6] {
            let (tbar, t0) = (p.tbar(eps), p.t0(eps));
            assert!(0.0 < tbar && tbar < t0 && t0 < eps);
        }
        assert!((p.t0(0.1) - 0.075).abs() < 1e-15);
    }
}
