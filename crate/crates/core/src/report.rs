use std::fmt;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    IterCapReached,
    LineSearchStalled,
    /// A null step failed to shrink `‖g*‖` in floating point.
    SubproblemStalled,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::IterCapReached => "iter_cap",
            Status::LineSearchStalled => "linesearch_stalled",
            Status::SubproblemStalled => "subproblem_stalled",
        })
    }
}

/// Counters and final state of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// `#Fun`
    pub fun_evals: u64,
    /// `#Sub`
    pub sub_evals: u64,
    /// Line-search calls (null and descent steps) summed over all rounds.
    pub inner_iters: u64,
    /// Final value of the outer index ν.
    pub outer_iters: u64,
    /// Largest bundle handed to the min-norm subproblem.
    pub max_bundle: usize,
    pub f_end: f64,
    pub x_end: Vec<f64>,
    pub status: Status,
    /// Set when a [`Target`](crate::Target) stopped the run early.
    pub target_reached: bool,
    /// Seconds.
    pub wall_time: f64,
}

impl RunReport {
    pub(crate) fn start(x: Vec<f64>, f: f64) -> Self {
        Self {
            fun_evals: 0,
            sub_evals: 0,
            inner_iters: 0,
            outer_iters: 0,
            max_bundle: 0,
            f_end: f,
            x_end: x,
            status: Status::Converged,
            target_reached: false,
            wall_time: 0.0,
        }
    }
}
