//! Least-norm point of the convex hull of a finite set of vectors.
//!
//! [`min_norm_point`] runs Wolfe's active-set iteration: major cycles add the
//! member most violating the optimality condition `ξⱼᵀg ≥ ‖g‖²` to a corral of
//! affinely independent members, minor cycles move to the affine minimizer of
//! the corral and drop members whose weight would turn negative.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::vecops::{dist, dot, norm};

/// Finite set of subgradients `G = {ξ₁, …, ξₘ}` sharing one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bundle {
    dim: usize,
    members: Vec<Vec<f64>>,
}

impl Bundle {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            members: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        Self {
            dim,
            members: Vec::with_capacity(capacity),
        }
    }

    /// Builds a bundle, checking that all members share one dimension.
    pub fn from_members(members: Vec<Vec<f64>>) -> Result<Self, MinNormError> {
        let dim = members.first().map_or(0, Vec::len);
        if let Some(bad) = members.iter().position(|m| m.len() != dim) {
            return Err(MinNormError::Dimension {
                expected: dim,
                got: members[bad].len(),
            });
        }
        Ok(Self { dim, members })
    }

    pub fn singleton(member: Vec<f64>) -> Self {
        Self {
            dim: member.len(),
            members: vec![member],
        }
    }

    /// # Panics
    /// If `member` does not have the bundle dimension.
    pub fn push(&mut self, member: Vec<f64>) {
        assert_eq!(member.len(), self.dim, "bundle member dimension mismatch");
        self.members.push(member);
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Vec<f64>> {
        self.members
    }

    /// Largest pairwise distance between members.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }

    pub fn max_sq_norm(&self) -> f64 {
        self.members.iter().map(|m| dot(m, m)).fold(0.0, f64::max)
    }

    /// `tol · max(1, maxⱼ ‖ξⱼ‖²)`, a residual tolerance that follows the
    /// magnitude of the members.
    pub fn scaled_tol(&self, tol: f64) -> f64 {
        tol * self.max_sq_norm().max(1.0)
    }

    /// Σ λⱼ ξⱼ
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (w, m) in weights.iter().zip(&self.members) {
            if *w != 0.0 {
                for (gi, mi) in g.iter_mut().zip(m) {
                    *gi += w * mi;
                }
            }
        }
        g
    }

    fn check(&self) -> Result<(), MinNormError> {
        if self.members.is_empty() {
            return Err(MinNormError::Empty);
        }
        for (j, m) in self.members.iter().enumerate() {
            if let Some(i) = m.iter().position(|v| !v.is_finite()) {
                return Err(MinNormError::NonFinite { member: j, coord: i });
            }
        }
        Ok(())
    }
}

/// Least-norm element `g*` of conv G with simplex weights `λ` over the members.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution {
    pub g_star: Vec<f64>,
    pub weights: Vec<f64>,
    pub norm: f64,
}

impl MinNormSolution {
    /// `maxⱼ (‖g*‖² − ξⱼᵀg*)`; nonpositive exactly at the optimum.
    pub fn residual(&self, bundle: &Bundle) -> f64 {
        let gg = dot(&self.g_star, &self.g_star);
        bundle
            .members()
            .iter()
            .map(|m| gg - dot(m, &self.g_star))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinNormError {
    #[error("bundle is empty")]
    Empty,
    #[error("bundle member {member} has a non-finite coordinate at index {coord}")]
    NonFinite { member: usize, coord: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no convergence: best optimality residual {residual:e}")]
    Convergence {
        best: MinNormSolution,
        residual: f64,
    },
    #[error("bundle of {size} members exceeds the brute-force limit of {max}")]
    TooLarge { size: usize, max: usize },
}

/// Solves `min{‖g‖ : g ∈ conv G}`.
///
/// Returns once the optimality residual `maxⱼ(‖g*‖² − ξⱼᵀg*)` is at most
/// `tol_opt` (absolute). Members tied for selection are taken lowest index
/// first, so the result is deterministic for a given member order.
pub fn min_norm_point(bundle: &Bundle, tol_opt: f64) -> Result<MinNormSolution, MinNormError> {
    bundle.check()?;
    let start = (0..bundle.len())
        .map(|j| (j, dot(&bundle.members[j], &bundle.members[j])))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    Wolfe::new(bundle, tol_opt).run(vec![start], vec![1.0])
}

/// Same as [`min_norm_point`], started from `warm` weights over the first
/// `warm.len()` members (typically the previous solution before new members
/// were appended).
pub fn min_norm_point_warm(
    bundle: &Bundle,
    tol_opt: f64,
    warm: &[f64],
) -> Result<MinNormSolution, MinNormError> {
    bundle.check()?;
    let mut corral = Vec::new();
    let mut lambda = Vec::new();
    for (j, &w) in warm.iter().enumerate().take(bundle.len()) {
        if w > 0.0 {
            corral.push(j);
            lambda.push(w);
        }
    }
    let total: f64 = lambda.iter().sum();
    if corral.is_empty() || !total.is_finite() {
        return min_norm_point(bundle, tol_opt);
    }
    lambda.iter_mut().for_each(|w| *w /= total);
    Wolfe::new(bundle, tol_opt).run(corral, lambda)
}

/// Euclidean distance from `point` to conv G, computed as the least norm over
/// the translated bundle `{ξⱼ − point}`.
pub fn distance_to_hull(point: &[f64], bundle: &Bundle) -> Result<f64, MinNormError> {
    if point.len() != bundle.dim() {
        return Err(MinNormError::Dimension {
            expected: bundle.dim(),
            got: point.len(),
        });
    }
    let shifted = Bundle {
        dim: bundle.dim,
        members: bundle
            .members
            .iter()
            .map(|m| m.iter().zip(point).map(|(a, b)| a - b).collect())
            .collect(),
    };
    // no tolerance: small distances must not be rounded to a corral point
    match min_norm_point(&shifted, 0.0) {
        Ok(sol) => Ok(sol.norm),
        Err(MinNormError::Convergence { best, .. }) => Ok(best.norm),
        Err(e) => Err(e),
    }
}

struct Wolfe<'a> {
    bundle: &'a Bundle,
    tol: f64,
}

impl<'a> Wolfe<'a> {
    fn new(bundle: &'a Bundle, tol: f64) -> Self {
        Self { bundle, tol }
    }

    fn pt(&self, j: usize) -> &[f64] {
        &self.bundle.members[j]
    }

    fn combine(&self, corral: &[usize], lambda: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.bundle.dim];
        for (&j, &w) in corral.iter().zip(lambda) {
            for (xi, pi) in x.iter_mut().zip(self.pt(j)) {
                *xi += w * pi;
            }
        }
        x
    }

    fn finish(&self, corral: &[usize], lambda: &[f64]) -> MinNormSolution {
        let mut weights = vec![0.0; self.bundle.len()];
        let total: f64 = lambda.iter().map(|w| w.max(0.0)).sum();
        for (&j, &w) in corral.iter().zip(lambda) {
            weights[j] = w.max(0.0) / total;
        }
        let g_star = self.bundle.combine(&weights);
        let norm = norm(&g_star);
        MinNormSolution {
            g_star,
            weights,
            norm,
        }
    }

    /// Minimizer of ‖Σ αᵢ pᵢ‖ over the affine hull of the corral (Σ αᵢ = 1).
    fn affine_min(&self, corral: &[usize]) -> Vec<f64> {
        let k = corral.len();
        if k == 1 {
            return vec![1.0];
        }
        let n = self.bundle.dim;
        let p0 = self.pt(corral[0]);
        let q = DMatrix::from_fn(n, k - 1, |r, c| self.pt(corral[c + 1])[r] - p0[r]);
        let b = DVector::from_iterator(n, p0.iter().map(|v| -v));
        // Householder least squares; near-zero pivots (affinely dependent
        // members) get a zero coefficient.
        let qr = q.qr();
        let mut rhs = b;
        qr.q_tr_mul(&mut rhs);
        let r = qr.r();
        let cols = (k - 1).min(n);
        let pivot_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let mut beta = DVector::<f64>::zeros(k - 1);
        for i in (0..cols).rev() {
            if r[(i, i)].abs() <= pivot_max * 1e-13 {
                continue;
            }
            let mut acc = rhs[i];
            for c in i + 1..cols {
                acc -= r[(i, c)] * beta[c];
            }
            beta[i] = acc / r[(i, i)];
        }
        let mut alpha = Vec::with_capacity(k);
        alpha.push(1.0 - beta.sum());
        alpha.extend(beta.iter().copied());
        alpha
    }

    fn run(
        &self,
        mut corral: Vec<usize>,
        mut lambda: Vec<f64>,
    ) -> Result<MinNormSolution, MinNormError> {
        let m = self.bundle.len();
        let max_major = 20 * (m + self.bundle.dim) + 100;
        let mut x = self.combine(&corral, &lambda);
        let mut best: Option<(f64, MinNormSolution)> = None;
        let mut stalls = 0;

        for _ in 0..max_major {
            let xx = dot(&x, &x);
            let (j, xpj) = (0..m)
                .map(|j| (j, dot(&x, self.pt(j))))
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
            let residual = xx - xpj;
            if residual <= self.tol {
                return Ok(self.finish(&corral, &lambda));
            }
            if best.as_ref().is_none_or(|(r, _)| residual < *r) {
                best = Some((residual, self.finish(&corral, &lambda)));
            }
            if corral.contains(&j) {
                // Only round-off can select a corral member; re-solve on the
                // corral once before giving up.
                stalls += 1;
                if stalls > 2 {
                    break;
                }
            } else {
                corral.push(j);
                lambda.push(0.0);
            }

            for _ in 0..=corral.len() + 1 {
                let alpha = self.affine_min(&corral);
                if alpha.iter().all(|&a| a > 0.0) {
                    lambda = alpha;
                    break;
                }
                let mut theta = 1.0_f64;
                let mut leaving = 0;
                for (i, (&a, &l)) in alpha.iter().zip(&lambda).enumerate() {
                    if a <= 0.0 {
                        let t = if l - a > 0.0 { l / (l - a) } else { 0.0 };
                        if t < theta {
                            theta = t;
                            leaving = i;
                        }
                    }
                }
                for (l, a) in lambda.iter_mut().zip(&alpha) {
                    *l = theta * a + (1.0 - theta) * *l;
                }
                lambda[leaving] = 0.0;
                let mut i = 0;
                while i < corral.len() {
                    if lambda[i] <= 0.0 {
                        corral.remove(i);
                        lambda.remove(i);
                    } else {
                        i += 1;
                    }
                }
                let total: f64 = lambda.iter().sum();
                lambda.iter_mut().for_each(|l| *l /= total);
                if corral.len() == 1 {
                    break;
                }
            }
            let x_new = self.combine(&corral, &lambda);
            if dot(&x_new, &x_new) >= xx {
                stalls += 1;
                if stalls > 2 {
                    break;
                }
            }
            x = x_new;
        }

        let last = self.finish(&corral, &lambda);
        let last_res = last.residual(self.bundle);
        if last_res <= self.tol {
            return Ok(last);
        }
        let (residual, best) = match best {
            Some((r, b)) if r < last_res => (r, b),
            _ => (last_res, last),
        };
        Err(MinNormError::Convergence { best, residual })
    }
}

/// Largest bundle accepted by [`min_norm_oracle`].
pub const ORACLE_MAX_MEMBERS: usize = 5;

const ORACLE_GRID_BUDGET: usize = 300_000;

/// Brute-force reference for [`min_norm_point`]: the least-norm point among
/// the simplex-grid combinations `Σ (cⱼ/N) ξⱼ` with `N = round(1/grid_step)`.
///
/// The full grid is enumerated when small enough; otherwise a coarser grid is
/// enumerated exhaustively and refined by pairwise weight transfers with
/// halving transfer sizes down to one grid unit.
pub fn min_norm_oracle(bundle: &Bundle, grid_step: f64) -> Result<Vec<f64>, MinNormError> {
    bundle.check()?;
    let m = bundle.len();
    if m > ORACLE_MAX_MEMBERS {
        return Err(MinNormError::TooLarge {
            size: m,
            max: ORACLE_MAX_MEMBERS,
        });
    }
    let units = (1.0 / grid_step).round().max(1.0) as usize;
    let members = bundle.members();
    let norm2 = |counts: &[usize]| -> f64 {
        let mut g = vec![0.0; bundle.dim()];
        for (c, mbr) in counts.iter().zip(members) {
            let w = *c as f64 / units as f64;
            for (gi, v) in g.iter_mut().zip(mbr) {
                *gi += w * v;
            }
        }
        dot(&g, &g)
    };

    // coarsest stride whose grid fits the budget
    let mut stride = 1;
    while grid_size(units / stride, m) > ORACLE_GRID_BUDGET {
        stride += 1;
    }
    let coarse = units / stride;
    let mut best_counts = vec![0; m];
    let mut best = f64::INFINITY;
    let mut parts = vec![0; m];
    enumerate_compositions(coarse, &mut parts, 0, &mut |p| {
        let mut counts: Vec<usize> = p.iter().map(|c| c * stride).collect();
        counts[m - 1] += units - coarse * stride;
        let v = norm2(&counts);
        if v < best {
            best = v;
            best_counts = counts;
        }
    });

    let mut step = stride;
    loop {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..m {
                for j in 0..m {
                    if i == j || best_counts[i] < step {
                        continue;
                    }
                    best_counts[i] -= step;
                    best_counts[j] += step;
                    let v = norm2(&best_counts);
                    if v < best {
                        best = v;
                        improved = true;
                    } else {
                        best_counts[i] += step;
                        best_counts[j] -= step;
                    }
                }
            }
        }
        if step == 1 {
            break;
        }
        step = step.div_ceil(2);
    }

    let weights: Vec<f64> = best_counts
        .iter()
        .map(|&c| c as f64 / units as f64)
        .collect();
    Ok(bundle.combine(&weights))
}

fn grid_size(total: usize, parts: usize) -> usize {
    // C(total + parts - 1, parts - 1), saturating
    let mut acc: u128 = 1;
    for i in 1..parts as u128 {
        acc = acc * (total as u128 + i) / i;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

fn enumerate_compositions(
    remaining: usize,
    parts: &mut [usize],
    idx: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    if idx == parts.len() - 1 {
        parts[idx] = remaining;
        visit(parts);
        return;
    }
    for c in 0..=remaining {
        parts[idx] = c;
        enumerate_compositions(remaining - c, parts, idx + 1, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bundle(members: &[&[f64]]) -> Bundle {
        Bundle::from_members(members.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    #[test]
    fn singleton_hull() {
        let b = bundle(&[&[3.0, 4.0]]);
        let s = min_norm_point(&b, 1e-12).unwrap();
        assert_eq!(s.g_star, vec![3.0, 4.0]);
        assert_eq!(s.weights, vec![1.0]);
        assert_abs_diff_eq!(s.norm, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn two_unit_vectors() {
        let b = bundle(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let s = min_norm_point(&b, 1e-12).unwrap();
        assert_abs_diff_eq!(s.g_star[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.g_star[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.weights[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.weights[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn three_members_match_grid_oracle() {
        let b = bundle(&[&[2.0, 1.0], &[-1.0, 2.0], &[3.0, 3.0]]);
        let s = min_norm_point(&b, 1e-12).unwrap();
        // optimum lies on the edge [(2,1), (-1,2)] at (0.5, 1.5)
        let brute = min_norm_oracle(&b, 1e-3).unwrap();
        assert!(dist(&s.g_star, &brute) < 1e-6 + 1e-3 * b.diameter());
        // closed form on the edge between the first two members
        let (a, c) = ([2.0, 1.0], [-1.0, 2.0]);
        let d = [c[0] - a[0], c[1] - a[1]];
        let t = -(a[0] * d[0] + a[1] * d[1]) / (d[0] * d[0] + d[1] * d[1]);
        assert_abs_diff_eq!(s.g_star[0], a[0] + t * d[0], epsilon = 1e-12);
        assert_abs_diff_eq!(s.g_star[1], a[1] + t * d[1], epsilon = 1e-12);
        assert_eq!(s.weights[2], 0.0);
    }

    #[test]
    fn origin_inside_hull() {
        let b = bundle(&[&[1.0, 1.0], &[-1.0, 1.0], &[0.0, -1.0]]);
        let s = min_norm_point(&b, 1e-12).unwrap();
        assert!(s.norm < 1e-12);
        assert!(s.weights.iter().all(|&w| w > 0.0));
        assert_abs_diff_eq!(s.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicates_and_dependent_members() {
        let b = bundle(&[&[1.0, 2.0], &[1.0, 2.0], &[2.0, 4.0], &[1.0, -1.0]]);
        let s = min_norm_point(&b, 1e-12).unwrap();
        assert!(s.residual(&b) <= 1e-12);
        let brute = min_norm_oracle(&b, 1e-3).unwrap();
        assert!(dist(&s.g_star, &brute) <= 2e-3 * b.diameter());
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let b = bundle(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5], &[-0.5, -0.2, 1.0], &[0.3, -1.0, 0.4]]);
        let cold = min_norm_point(&b, 1e-12).unwrap();
        let head = Bundle::from_members(b.members()[..2].to_vec()).unwrap();
        let prev = min_norm_point(&head, 1e-12).unwrap();
        let warm = min_norm_point_warm(&b, 1e-12, &prev.weights).unwrap();
        assert!(dist(&cold.g_star, &warm.g_star) < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            min_norm_point(&Bundle::new(2), 1e-12).unwrap_err(),
            MinNormError::Empty
        );
        let b = bundle(&[&[1.0, f64::NAN]]);
        assert_eq!(
            min_norm_point(&b, 1e-12).unwrap_err(),
            MinNormError::NonFinite { member: 0, coord: 1 }
        );
        assert!(matches!(
            Bundle::from_members(vec![vec![1.0], vec![1.0, 2.0]]),
            Err(MinNormError::Dimension { .. })
        ));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(min_norm_oracle(&bundle(&[&[3.0, 4.0]]), 0.1).unwrap(), vec![3.0, 4.0]);
        let g = min_norm_oracle(&bundle(&[&[1.0, 0.0], &[0.0, 1.0]]), 1e-3).unwrap();
        assert!(dist(&g, &[0.5, 0.5]) <= 1e-3);
        let g = min_norm_oracle(&bundle(&[&[0.0, 0.0], &[5.0, 5.0]]), 1e-3).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let big = Bundle::from_members(vec![vec![1.0]; 6]).unwrap();
        assert!(matches!(
            min_norm_oracle(&big, 1e-3),
            Err(MinNormError::TooLarge { size: 6, .. })
        ));
    }

    #[test]
    fn hull_distance_examples() {
        assert_eq!(distance_to_hull(&[1.0, 0.0], &bundle(&[&[1.0, 0.0]])).unwrap(), 0.0);
        let d = distance_to_hull(&[2.0, 0.0], &bundle(&[&[0.0, 0.0], &[0.0, 2.0]])).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_size_counts_compositions() {
        assert_eq!(grid_size(2, 3), 6);
        assert_eq!(grid_size(1000, 1), 1);
        assert_eq!(grid_size(10, 2), 11);
    }
}
