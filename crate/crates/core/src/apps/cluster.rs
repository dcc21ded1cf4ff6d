//! Hard clustering as nonsmooth minimization of the mean squared distance to
//! the nearest center.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::oracle::Objective;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("data file is empty")]
    Empty,
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, field {field}: '{value}' is not a finite number")]
    NotNumeric {
        row: usize,
        field: usize,
        value: String,
    },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("dataset needs at least one point of positive dimension")]
    Shape,
}

/// Points `a_1, …, a_m` of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(DataError::Shape);
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(DataError::Ragged {
                    row: i + 1,
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        Ok(Self { points, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in &self.points {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let m = self.m() as f64;
        c.iter_mut().for_each(|v| *v /= m);
        c
    }
}

/// `κ` centers stored row-major as one decision vector of length `dim·κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterMatrix {
    pub centers: Vec<Vec<f64>>,
}

impl CenterMatrix {
    pub fn flatten(&self) -> Vec<f64> {
        self.centers.concat()
    }

    /// Panics unless `dim` divides `x.len()`.
    pub fn unflatten(x: &[f64], dim: usize) -> Self {
        assert!(dim > 0 && x.len().is_multiple_of(dim), "length {} is not a multiple of {dim}", x.len());
        Self {
            centers: x.chunks(dim).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn kappa(&self) -> usize {
        self.centers.len()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center of `a` among the chunks of `x`, lowest index on ties.
fn nearest(a: &[f64], x: &[f64], dim: usize) -> (usize, f64) {
    x.chunks(dim)
        .map(|c| sq_dist(a, c))
        .enumerate()
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

/// `f_κ(X) = (1/m) Σᵢ minⱼ ‖aᵢ − xⱼ‖²` over the flattened centers `X`.
#[derive(Debug, Clone)]
pub struct ClusterObjective<'a> {
    data: &'a Dataset,
    kappa: usize,
}

/// Panics when `kappa` is zero.
pub fn cluster_objective(data: &Dataset, kappa: usize) -> ClusterObjective<'_> {
    assert!(kappa >= 1, "kappa must be positive");
    ClusterObjective { data, kappa }
}

impl ClusterObjective<'_> {
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    fn check(&self, x: &[f64]) {
        assert_eq!(
            x.len(),
            self.dim(),
            "decision vector must hold {} centers of dimension {}",
            self.kappa,
            self.data.dim
        );
    }
}

impl Objective for ClusterObjective<'_> {
    fn dim(&self) -> usize {
        self.data.dim * self.kappa
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.check(x);
        let total: f64 = self
            .data
            .points
            .iter()
            .map(|a| nearest(a, x, self.data.dim).1)
            .sum();
        total / self.data.m() as f64
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.check(x);
        let d = self.data.dim;
        let scale = 2.0 / self.data.m() as f64;
        let mut g = vec![0.0; x.len()];
        for a in &self.data.points {
            let (j, _) = nearest(a, x, d);
            for k in 0..d {
                g[j * d + k] += scale * (x[j * d + k] - a[k]);
            }
        }
        g
    }
}

/// Nearest-center labels plus the indices of centers that claim no point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    pub empty: Vec<usize>,
}

pub fn assign_clusters(centers: &CenterMatrix, data: &Dataset) -> Assignment {
    let x = centers.flatten();
    let labels: Vec<usize> = data
        .points
        .iter()
        .map(|a| nearest(a, &x, data.dim).0)
        .collect();
    let mut sizes = vec![0; centers.kappa()];
    for &l in &labels {
        sizes[l] += 1;
    }
    let empty = (0..sizes.len()).filter(|&j| sizes[j] == 0).collect();
    Assignment { labels, sizes, empty }
}

/// Reads comma-separated rows of reals, one point per row, no header.
pub fn load_points_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_points(&text)
}

/// [`load_points_csv`] on in-memory text.
pub fn parse_points(text: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    let mut arity = None;
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DataError::Csv {
            row,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let expected = *arity.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(DataError::Ragged {
                row,
                expected,
                found: rec.len(),
            });
        }
        let p = rec
            .iter()
            .enumerate()
            .map(|(k, v)| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| DataError::NotNumeric {
                        row,
                        field: k + 1,
                        value: v.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(DataError::Empty);
    }
    Dataset::new(points)
}

/// Isotropic Gaussian blobs: `per_blob` points around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_blob: usize, sd: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd).expect("standard deviation must be finite and nonnegative");
    let points = centers
        .iter()
        .flat_map(|c| std::iter::repeat_n(c, per_blob))
        .map(|c| c.iter().map(|v| v + normal.sample(&mut rng)).collect())
        .collect();
    Dataset::new(points).expect("blob centers must share a positive dimension")
}

/// `κ` distinct data points chosen uniformly at random, flattened.
pub fn random_centers(data: &Dataset, kappa: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = kappa.min(data.m());
    let mut x: Vec<f64> = index::sample(&mut rng, data.m(), k)
        .into_iter()
        .flat_map(|i| data.points[i].clone())
        .collect();
    // more centers than points: repeat from the start
    for j in k..kappa {
        x.extend_from_slice(&data.points[j % data.m()]);
    }
    x
}
