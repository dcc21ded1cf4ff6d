//! Per-iteration observation of the solver.

use std::io::Write;

use crate::linesearch::LineSearchResult;
use crate::minnorm::{Bundle, MinNormSolution};

/// What the inner loop did with iterate `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// `‖g*‖ ≤ δ`: the round ends at this iterate.
    Stationary,
    Descent,
    Null,
}

/// One pass of the inner loop. `bundle` and `solution` are the state before
/// the step is applied.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    pub round: u64,
    pub k: u64,
    pub eps: f64,
    pub delta: f64,
    pub kind: StepKind,
    pub x: &'a [f64],
    pub f: f64,
    pub bundle: &'a Bundle,
    pub solution: &'a MinNormSolution,
    /// Null steps only: the subgradient about to join the bundle.
    pub new_subgradient: Option<&'a [f64]>,
    /// Descent steps only: the new iterate and its value.
    pub next: Option<(&'a [f64], f64)>,
    /// A reset shrinks the bundle before the new subgradient is appended.
    pub reset: bool,
}

#[derive(Debug)]
pub struct LineSearchEvent<'a> {
    pub round: u64,
    pub k: u64,
    pub eps: f64,
    pub x: &'a [f64],
    pub fx: f64,
    pub g_star: &'a [f64],
    pub result: &'a LineSearchResult,
}

/// Receives solver events. All methods default to no-ops.
pub trait Observer {
    fn on_iteration(&mut self, _event: &IterationEvent<'_>) {}
    fn on_line_search(&mut self, _event: &LineSearchEvent<'_>) {}
}

/// Writes one CSV row per inner iteration:
/// `round,k,indicator,g_norm,f,bundle_size,reset`.
///
/// `indicator` is 1 for a descent step, 0 for a null step and empty on the
/// stationary iterate that closes a round.
pub struct CsvTrace<W: Write> {
    writer: csv::Writer<W>,
    error: Option<csv::Error>,
}

impl<W: Write> CsvTrace<W> {
    pub fn new(inner: W) -> Self {
        let mut writer = csv::Writer::from_writer(inner);
        let error = writer
            .write_record(["round", "k", "indicator", "g_norm", "f", "bundle_size", "reset"])
            .err();
        Self { writer, error }
    }

    /// Flushes and reports the first write error, if any.
    pub fn finish(mut self) -> Result<W, csv::Error> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))
    }
}

impl<W: Write> Observer for CsvTrace<W> {
    fn on_iteration(&mut self, ev: &IterationEvent<'_>) {
        if self.error.is_some() {
            return;
        }
        let indicator = match ev.kind {
            StepKind::Descent => "1",
            StepKind::Null => "0",
            StepKind::Stationary => "",
        };
        let res = self.writer.write_record([
            ev.round.to_string(),
            ev.k.to_string(),
            indicator.to_string(),
            ev.solution.norm.to_string(),
            ev.f.to_string(),
            ev.bundle.len().to_string(),
            u8::from(ev.reset).to_string(),
        ]);
        self.error = res.err();
    }
}
