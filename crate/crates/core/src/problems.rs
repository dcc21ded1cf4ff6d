//! Academic nonsmooth test problems with analytic subgradients.
//!
//! All ten problems scale to any dimension `n ≥ 2`. Problems 1–5 are convex,
//! 6–10 nonconvex. Max-type ties resolve to the lowest index (first term) and
//! `sign(0) = +1`, so subgradients are deterministic.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::oracle::Objective;
use crate::vecops::{norm, sample_ball, sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Maxl,
    L1Hilb,
    Maxq,
    MxHilb,
    ChainedCb3II,
    ActiveFaces,
    Brown2,
    ChainedMifflin2,
    ChainedCrescentI,
    ChainedCrescentII,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 10] = [
        ProblemKind::Maxl,
        ProblemKind::L1Hilb,
        ProblemKind::Maxq,
        ProblemKind::MxHilb,
        ProblemKind::ChainedCb3II,
        ProblemKind::ActiveFaces,
        ProblemKind::Brown2,
        ProblemKind::ChainedMifflin2,
        ProblemKind::ChainedCrescentI,
        ProblemKind::ChainedCrescentII,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Maxl => "MAXL",
            ProblemKind::L1Hilb => "L1HILB",
            ProblemKind::Maxq => "MAXQ",
            ProblemKind::MxHilb => "MXHILB",
            ProblemKind::ChainedCb3II => "ChainedCB3II",
            ProblemKind::ActiveFaces => "ActiveFaces",
            ProblemKind::Brown2 => "Brown2",
            ProblemKind::ChainedMifflin2 => "ChainedMifflin2",
            ProblemKind::ChainedCrescentI => "ChainedCrescentI",
            ProblemKind::ChainedCrescentII => "ChainedCrescentII",
        }
    }

    pub fn convex(self) -> bool {
        matches!(
            self,
            ProblemKind::Maxl
                | ProblemKind::L1Hilb
                | ProblemKind::Maxq
                | ProblemKind::MxHilb
                | ProblemKind::ChainedCb3II
        )
    }

    pub fn f_star(self, n: usize) -> FStar {
        match self {
            ProblemKind::ChainedCb3II => FStar::Known(2.0 * (n as f64 - 1.0)),
            ProblemKind::ChainedMifflin2 => FStar::Varies(mifflin2_reference(n)),
            _ => FStar::Known(0.0),
        }
    }

    pub fn default_start(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (1..=n)
            .map(|i| {
                let fi = i as f64;
                match self {
                    ProblemKind::Maxl => {
                        if i % 2 == 1 {
                            fi / nf
                        } else {
                            -fi / nf
                        }
                    }
                    ProblemKind::L1Hilb | ProblemKind::MxHilb | ProblemKind::ActiveFaces => 1.0,
                    ProblemKind::Maxq => {
                        if i <= n / 2 {
                            fi
                        } else {
                            -fi
                        }
                    }
                    ProblemKind::ChainedCb3II => 0.0,
                    ProblemKind::Brown2 => {
                        if i % 2 == 1 {
                            -1.0
                        } else {
                            1.0
                        }
                    }
                    ProblemKind::ChainedMifflin2 => -1.0,
                    ProblemKind::ChainedCrescentI | ProblemKind::ChainedCrescentII => {
                        if i % 2 == 1 {
                            -1.5
                        } else {
                            2.0
                        }
                    }
                }
            })
            .collect()
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown problem '{0}'")]
    Unknown(String),
    #[error("problem dimension must be at least 2, got {0}")]
    Dimension(usize),
}

impl FromStr for ProblemKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .or(match key.as_str() {
                "brownfunction2" => Some(ProblemKind::Brown2),
                _ => None,
            })
            .ok_or_else(|| ProblemError::Unknown(s.to_string()))
    }
}

/// Known optimal value, or a per-dimension reference for problems whose
/// local optimum depends on `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FStar {
    Known(f64),
    Varies(Option<f64>),
}

impl FStar {
    /// Value used for the relative error, when one is available.
    pub fn reference(self) -> Option<f64> {
        match self {
            FStar::Known(v) => Some(v),
            FStar::Varies(v) => v,
        }
    }
}

/// Reference values for Chained Mifflin 2: best of several long runs of the
/// main solver (η ≤ 1e-9, default and randomized starts), frozen here.
pub fn mifflin2_reference(n: usize) -> Option<f64> {
    match n {
        10 => Some(MIFFLIN2_REF_10),
        50 => Some(MIFFLIN2_REF_50),
        100 => Some(MIFFLIN2_REF_100),
        _ => None,
    }
}

const MIFFLIN2_REF_10: f64 = -6.514_614_209_711;
const MIFFLIN2_REF_50: f64 = -34.795_181_409_335;
const MIFFLIN2_REF_100: f64 = -70.150_181_853_897;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub dimension: usize,
    pub f_star: FStar,
    pub convex: bool,
    pub default_start: Vec<f64>,
}

/// A test objective of a given dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Problem {
    pub kind: ProblemKind,
    pub n: usize,
}

/// Looks up a problem by name (case and punctuation insensitive).
pub fn make_problem(name: &str, n: usize) -> Result<(Problem, ProblemSpec), ProblemError> {
    let kind: ProblemKind = name.parse()?;
    Problem::new(kind, n).map(|p| (p, p.spec()))
}

impl Problem {
    pub fn new(kind: ProblemKind, n: usize) -> Result<Self, ProblemError> {
        if n < 2 {
            return Err(ProblemError::Dimension(n));
        }
        Ok(Self { kind, n })
    }

    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            name: self.kind.name(),
            dimension: self.n,
            f_star: self.kind.f_star(self.n),
            convex: self.kind.convex(),
            default_start: self.kind.default_start(self.n),
        }
    }

    /// Distance-like margin from the nearest kink: the gap between the active
    /// and the runner-up piece, or the smallest absolute argument of an
    /// absolute value. Points with a comfortable margin are smooth.
    pub fn smooth_margin(&self, x: &[f64]) -> f64 {
        fn gap(vals: &[f64]) -> f64 {
            let mut v = vals.to_vec();
            v.sort_by(|a, b| b.total_cmp(a));
            if v.len() < 2 {
                f64::INFINITY
            } else {
                v[0] - v[1]
            }
        }
        let n = self.n;
        match self.kind {
            ProblemKind::Maxl => gap(&x.iter().map(|v| v.abs()).collect::<Vec<_>>())
                .min(x.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)),
            ProblemKind::L1Hilb => hilbert_rows(x).iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min),
            ProblemKind::Maxq => gap(&x.iter().map(|v| v * v).collect::<Vec<_>>()),
            ProblemKind::MxHilb => {
                let rows = hilbert_rows(x);
                gap(&rows.iter().map(|r| r.abs()).collect::<Vec<_>>())
                    .min(rows.iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min))
            }
            ProblemKind::ChainedCb3II => gap(&cb3_terms(x)),
            ProblemKind::ActiveFaces => {
                let s: f64 = x.iter().sum();
                let mut t = vec![(s.abs() + 1.0).ln()];
                t.extend(x.iter().map(|v| (v.abs() + 1.0).ln()));
                gap(&t).min(s.abs()).min(x.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
            }
            ProblemKind::Brown2 => x.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min),
            ProblemKind::ChainedMifflin2 => (0..n - 1)
                .map(|i| (x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0).abs())
                .fold(f64::INFINITY, f64::min),
            ProblemKind::ChainedCrescentI => gap(&crescent_sums(x)),
            ProblemKind::ChainedCrescentII => (0..n - 1)
                .map(|i| {
                    let (a, b) = crescent_pair(x[i], x[i + 1]);
                    (a - b).abs()
                })
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Index of the largest value, lowest index on ties.
fn argmax(vals: impl Iterator<Item = f64>) -> (usize, f64) {
    vals.enumerate()
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
}

/// rᵢ = Σⱼ xⱼ/(i+j−1) with 1-based indices.
fn hilbert_rows(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| x[j] / (i + j + 1) as f64).sum())
        .collect()
}

fn cb3_terms(x: &[f64]) -> [f64; 3] {
    let mut t = [0.0; 3];
    for w in x.windows(2) {
        let (a, b) = (w[0], w[1]);
        t[0] += a.powi(4) + b * b;
        t[1] += (2.0 - a).powi(2) + (2.0 - b).powi(2);
        t[2] += 2.0 * (b - a).exp();
    }
    t
}

fn crescent_pair(a: f64, b: f64) -> (f64, f64) {
    let q = a * a + (b - 1.0) * (b - 1.0);
    (q + b - 1.0, -q + b + 1.0)
}

fn crescent_sums(x: &[f64]) -> [f64; 2] {
    x.windows(2).fold([0.0, 0.0], |acc, w| {
        let (p, q) = crescent_pair(w[0], w[1]);
        [acc[0] + p, acc[1] + q]
    })
}

/// |a|^e with 0^0 = 1 handled by `powf`.
fn brown_term(a: f64, b: f64) -> f64 {
    a.abs().powf(b * b + 1.0)
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::Maxl => x.iter().map(|v| v.abs()).fold(0.0, f64::max),
            ProblemKind::L1Hilb => hilbert_rows(x).iter().map(|r| r.abs()).sum(),
            ProblemKind::Maxq => x.iter().map(|v| v * v).fold(0.0, f64::max),
            ProblemKind::MxHilb => hilbert_rows(x).iter().map(|r| r.abs()).fold(0.0, f64::max),
            ProblemKind::ChainedCb3II => {
                let t = cb3_terms(x);
                t[0].max(t[1]).max(t[2])
            }
            ProblemKind::ActiveFaces => {
                let s: f64 = x.iter().sum();
                x.iter()
                    .map(|v| (v.abs() + 1.0).ln())
                    .fold((s.abs() + 1.0).ln(), f64::max)
            }
            ProblemKind::Brown2 => x
                .windows(2)
                .map(|w| brown_term(w[0], w[1]) + brown_term(w[1], w[0]))
                .sum(),
            ProblemKind::ChainedMifflin2 => x
                .windows(2)
                .map(|w| {
                    let q = w[0] * w[0] + w[1] * w[1] - 1.0;
                    -w[0] + 2.0 * q + 1.75 * q.abs()
                })
                .sum(),
            ProblemKind::ChainedCrescentI => {
                let s = crescent_sums(x);
                s[0].max(s[1])
            }
            ProblemKind::ChainedCrescentII => x
                .windows(2)
                .map(|w| {
                    let (a, b) = crescent_pair(w[0], w[1]);
                    a.max(b)
                })
                .sum(),
        }
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n];
        match self.kind {
            ProblemKind::Maxl => {
                let (k, _) = argmax(x.iter().map(|v| v.abs()));
                g[k] = sign(x[k]);
            }
            ProblemKind::L1Hilb => {
                let rows = hilbert_rows(x);
                for (i, r) in rows.iter().enumerate() {
                    let s = sign(*r);
                    for (j, gj) in g.iter_mut().enumerate() {
                        *gj += s / (i + j + 1) as f64;
                    }
                }
            }
            ProblemKind::Maxq => {
                let (k, _) = argmax(x.iter().map(|v| v * v));
                g[k] = 2.0 * x[k];
            }
            ProblemKind::MxHilb => {
                let rows = hilbert_rows(x);
                let (k, _) = argmax(rows.iter().map(|r| r.abs()));
                let s = sign(rows[k]);
                for (j, gj) in g.iter_mut().enumerate() {
                    *gj = s / (k + j + 1) as f64;
                }
            }
            ProblemKind::ChainedCb3II => {
                let (k, _) = argmax(cb3_terms(x).into_iter());
                for i in 0..n - 1 {
                    let (a, b) = (x[i], x[i + 1]);
                    match k {
                        0 => {
                            g[i] += 4.0 * a.powi(3);
                            g[i + 1] += 2.0 * b;
                        }
                        1 => {
                            g[i] -= 2.0 * (2.0 - a);
                            g[i + 1] -= 2.0 * (2.0 - b);
                        }
                        _ => {
                            let e = 2.0 * (b - a).exp();
                            g[i] -= e;
                            g[i + 1] += e;
                        }
                    }
                }
            }
            ProblemKind::ActiveFaces => {
                let s: f64 = x.iter().sum();
                let first = (s.abs() + 1.0).ln();
                let (k, best) = argmax(x.iter().map(|v| (v.abs() + 1.0).ln()));
                if first >= best {
                    // d/dx ln(|−s| + 1) = −sign(−s)/(|s| + 1)
                    let c = -sign(-s) / (s.abs() + 1.0);
                    g.iter_mut().for_each(|gj| *gj = c);
                } else {
                    g[k] = sign(x[k]) / (x[k].abs() + 1.0);
                }
            }
            ProblemKind::Brown2 => {
                for i in 0..n - 1 {
                    let (a, b) = (x[i], x[i + 1]);
                    // |a|^(b²+1)
                    g[i] += (b * b + 1.0) * a.abs().powf(b * b) * sign(a);
                    if a != 0.0 {
                        g[i + 1] += brown_term(a, b) * a.abs().ln() * 2.0 * b;
                    }
                    // |b|^(a²+1)
                    g[i + 1] += (a * a + 1.0) * b.abs().powf(a * a) * sign(b);
                    if b != 0.0 {
                        g[i] += brown_term(b, a) * b.abs().ln() * 2.0 * a;
                    }
                }
            }
            ProblemKind::ChainedMifflin2 => {
                for i in 0..n - 1 {
                    let (a, b) = (x[i], x[i + 1]);
                    let s = sign(a * a + b * b - 1.0);
                    g[i] += -1.0 + 4.0 * a + 3.5 * s * a;
                    g[i + 1] += 4.0 * b + 3.5 * s * b;
                }
            }
            ProblemKind::ChainedCrescentI => {
                let sums = crescent_sums(x);
                let first = sums[0] >= sums[1];
                for i in 0..n - 1 {
                    crescent_grad(first, x[i], x[i + 1], &mut g[i..i + 2]);
                }
            }
            ProblemKind::ChainedCrescentII => {
                for i in 0..n - 1 {
                    let (a, b) = crescent_pair(x[i], x[i + 1]);
                    crescent_grad(a >= b, x[i], x[i + 1], &mut g[i..i + 2]);
                }
            }
        }
        g
    }
}

fn crescent_grad(first: bool, a: f64, b: f64, g: &mut [f64]) {
    if first {
        g[0] += 2.0 * a;
        g[1] += 2.0 * (b - 1.0) + 1.0;
    } else {
        g[0] -= 2.0 * a;
        g[1] += -2.0 * (b - 1.0) + 1.0;
    }
}

/// Uniform sample from the open ball around `default_start` with radius
/// `(‖default_start‖ + 1)/n`.
pub fn random_start(default_start: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let radius = (norm(default_start) + 1.0) / n.max(1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ball(default_start, radius, &mut rng)
}

/// `|f − f*| / (|f*| + 1)`
pub fn relative_error(f_val: f64, f_star: f64) -> f64 {
    (f_val - f_star).abs() / (f_star.abs() + 1.0)
}
