//! Best uniform polynomial approximation: minimize
//! `h(c) = max_{x∈[a,b]} |p_c(x) − f(x)|` over the coefficients `c`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::oracle::Objective;
use crate::vecops::sign;

pub const DEFAULT_GRID: usize = 2000;
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;

/// Coefficients `(c_n, …, c_1, c_0)`, highest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs(pub Vec<f64>);

impl PolyCoeffs {
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Named target functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebyTarget {
    /// `sin(2x)`
    Sin2x,
    /// `|x|`
    Abs,
    /// `1/(1 + 25x²)`
    Runge,
}

impl ChebyTarget {
    pub const ALL: [ChebyTarget; 3] = [ChebyTarget::Sin2x, ChebyTarget::Abs, ChebyTarget::Runge];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            ChebyTarget::Sin2x => (2.0 * x).sin(),
            ChebyTarget::Abs => x.abs(),
            ChebyTarget::Runge => 1.0 / (1.0 + 25.0 * x * x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChebyTarget::Sin2x => "sin2x",
            ChebyTarget::Abs => "abs",
            ChebyTarget::Runge => "runge",
        }
    }

    /// Interval used when none is given.
    pub fn default_interval(self) -> (f64, f64) {
        match self {
            ChebyTarget::Sin2x => (-PI, PI),
            ChebyTarget::Abs | ChebyTarget::Runge => (-1.0, 1.0),
        }
    }
}

impl fmt::Display for ChebyTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChebyTarget {
    type Err = ChebyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChebyTarget::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ChebyError::UnknownTarget(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChebyError {
    #[error("unknown target '{0}' (expected sin2x, abs or runge)")]
    UnknownTarget(String),
    #[error("interval [{a}, {b}] is empty or not finite")]
    Interval { a: f64, b: f64 },
    #[error("grid needs at least 2 points, got {0}")]
    Grid(usize),
    #[error("target is not finite at x = {0}")]
    NonFinite(f64),
}

/// Interval, grid and refinement settings shared by the evaluation routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub a: f64,
    pub b: f64,
    pub grid_size: usize,
    pub refine_tol: f64,
}

impl Sampling {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            grid_size: DEFAULT_GRID,
            refine_tol: DEFAULT_REFINE_TOL,
        }
    }

    fn validate(&self) -> Result<(), ChebyError> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(ChebyError::Interval { a: self.a, b: self.b });
        }
        if self.grid_size < 2 {
            return Err(ChebyError::Grid(self.grid_size));
        }
        Ok(())
    }

    fn point(&self, i: usize, count: usize) -> f64 {
        if i + 1 == count {
            self.b
        } else {
            self.a + (self.b - self.a) * i as f64 / (count - 1) as f64
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes `|e|` on `[lo, hi]` by golden section down to width `tol`.
fn golden_max(e: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = e(x1).abs();
    let mut f2 = e(x2).abs();
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = e(x1).abs();
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = e(x2).abs();
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Locates `max |e(x)|` on the grid, then refines by golden section over the
/// two cells adjacent to the best grid point. Returns `(x*, |e(x*)|)`.
pub fn inner_max_of(e: impl Fn(f64) -> f64, s: &Sampling) -> (f64, f64) {
    let n = s.grid_size;
    let (k, best) = (0..n)
        .map(|i| e(s.point(i, n)).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let lo = s.point(k.saturating_sub(1), n);
    let hi = s.point((k + 1).min(n - 1), n);
    let (x, v) = golden_max(&e, lo, hi, s.refine_tol);
    if v > best {
        (x, v)
    } else {
        (s.point(k, n), best)
    }
}

/// [`inner_max_of`] for the error `p_c − f`.
pub fn inner_max(c: &PolyCoeffs, target: impl Fn(f64) -> f64, s: &Sampling) -> (f64, f64) {
    inner_max_of(|x| c.eval(x) - target(x), s)
}

/// `h(c)` as an objective over `c = (c_n, …, c_0)`.
pub struct ChebyObjective<F> {
    target: F,
    degree: usize,
    sampling: Sampling,
}

impl<F: Fn(f64) -> f64> ChebyObjective<F> {
    pub fn new(target: F, degree: usize, sampling: Sampling) -> Result<Self, ChebyError> {
        sampling.validate()?;
        let n = sampling.grid_size;
        if let Some(x) = (0..n)
            .map(|i| sampling.point(i, n))
            .find(|&x| !target(x).is_finite())
        {
            return Err(ChebyError::NonFinite(x));
        }
        Ok(Self {
            target,
            degree,
            sampling,
        })
    }

    pub fn sampling(&self) -> &Sampling {
        &self.sampling
    }

    fn error_fn<'a>(&'a self, c: &'a [f64]) -> impl Fn(f64) -> f64 + 'a {
        move |x| c.iter().fold(0.0, |acc, ci| acc * x + ci) - (self.target)(x)
    }
}

/// Builds the objective for a named target on `[a, b]`.
pub fn cheby_objective(
    target: ChebyTarget,
    degree: usize,
    sampling: Sampling,
) -> Result<ChebyObjective<impl Fn(f64) -> f64>, ChebyError> {
    ChebyObjective::new(move |x| target.eval(x), degree, sampling)
}

impl<F: Fn(f64) -> f64> Objective for ChebyObjective<F> {
    fn dim(&self) -> usize {
        self.degree + 1
    }

    fn value(&self, c: &[f64]) -> f64 {
        inner_max_of(self.error_fn(c), &self.sampling).1
    }

    fn subgradient(&self, c: &[f64]) -> Vec<f64> {
        let e = self.error_fn(c);
        let (x, _) = inner_max_of(&e, &self.sampling);
        let s = sign(e(x));
        let mut g = vec![0.0; c.len()];
        let mut pow = 1.0;
        for gi in g.iter_mut().rev() {
            *gi = s * pow;
            pow *= x;
        }
        g
    }
}

/// Number of alternating-sign extrema of `e = p_c − f` at level
/// `‖e‖_∞ − tol`, scanned on a grid of `10·grid_size` points.
///
/// Candidates are local maxima of `|e|` (endpoints included) within `tol` of
/// the largest; the count is the number of sign runs among them, which is the
/// longest alternating subsequence.
pub fn alternation_check(
    c: &PolyCoeffs,
    target: impl Fn(f64) -> f64,
    s: &Sampling,
    tol: f64,
) -> usize {
    let n = 10 * s.grid_size;
    let e: Vec<f64> = (0..n)
        .map(|i| {
            let x = s.point(i, n);
            c.eval(x) - target(x)
        })
        .collect();
    let top = e.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut count = 0;
    let mut last = 0.0;
    for i in 0..n {
        let v = e[i].abs();
        let left = if i > 0 { e[i - 1].abs() } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { e[i + 1].abs() } else { f64::NEG_INFINITY };
        if v >= left && v >= right && v >= top - tol {
            let sg = sign(e[i]);
            if sg != last {
                count += 1;
                last = sg;
            }
        }
    }
    count
}
