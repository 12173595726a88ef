//! Reduced-set distillation of `N²` rollouts down to `N` weighted rollouts.
//!
//! The outer problem searches over a selection vector `λ ∈ R^{N²}` and the
//! kernel width `σ` with the cross-entropy method. Each candidate `λ`
//! picks the `N` rows with the largest `|λ_t|`; the inner problem then finds
//! weights `β` (summing to one) that make the weighted embedding of those
//! rows closest to the uniform embedding of all rows. The inner problem is
//! an equality-constrained QP solved exactly through its KKT system.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::kernel::{l1, KernelWidth, WEIGHT_SUM_TOL};
use crate::linalg::{lu_solve, Matrix};
use crate::rng;

/// `N²` flattened rollouts stacked row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutMatrix {
    rows: Matrix,
    n: usize,
}

impl RolloutMatrix {
    pub fn new(rows: Matrix) -> Result<Self> {
        let count = rows.rows();
        let n = isqrt(count);
        if count == 0 || n * n != count {
            return Err(Error::NotPerfectSquare(count));
        }
        if rows.cols() == 0 {
            return Err(Error::Empty);
        }
        Ok(RolloutMatrix { rows, n })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    /// `N`, the square root of the row count.
    pub fn sqrt_rows(&self) -> usize {
        self.n
    }

    pub fn row_count(&self) -> usize {
        self.rows.rows()
    }
}

fn isqrt(v: usize) -> usize {
    let mut r = (v as f64).sqrt() as usize;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Selection scores `λ`, one per rollout row.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionVector(Vec<f64>);

impl SelectionVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(invalid("selection vector entries must be finite"));
        }
        Ok(SelectionVector(lambda))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Chosen rows, their weights and the kernel width used to fit them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReducedSet {
    pub indices: Vec<usize>,
    pub beta: Vec<f64>,
    pub sigma: KernelWidth,
    /// Outer objective: MMD² between the weighted reduced set and the full set.
    pub discrepancy: f64,
}

/// Search settings for [`distill`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DistillConfig {
    pub cem_samples: usize,
    pub cem_iters: usize,
    pub cem_elite_frac: f64,
    /// Explicit `(low, high)` bounds on `σ`; `None` anchors them on the
    /// median pairwise L1 distance `m` as `(0.05·m, 20·m)`.
    pub sigma_range: Option<(f64, f64)>,
    pub lambda_init_std: f64,
    pub qp_ridge: f64,
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            cem_samples: 50,
            cem_iters: 8,
            cem_elite_frac: 0.2,
            sigma_range: None,
            lambda_init_std: 1.0,
            qp_ridge: 1e-6,
            seed: 0,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cem_samples == 0 || self.cem_iters == 0 {
            return Err(invalid("cem_samples and cem_iters must be positive"));
        }
        if !(self.cem_elite_frac > 0.0 && self.cem_elite_frac <= 1.0) {
            return Err(invalid("cem_elite_frac must lie in (0, 1]"));
        }
        if !(self.lambda_init_std > 0.0) {
            return Err(invalid("lambda_init_std must be positive"));
        }
        if !(self.qp_ridge > 0.0) {
            return Err(invalid("qp_ridge must be positive"));
        }
        if let Some((lo, hi)) = self.sigma_range {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(invalid("sigma_range must satisfy 0 < low < high"));
            }
        }
        Ok(())
    }
}

/// Bookkeeping from a [`distill`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillStats {
    /// Best discrepancy seen up to and including each CEM iteration.
    pub best_per_iter: Vec<f64>,
    /// Candidates discarded because their inner QP failed.
    pub failed_candidates: usize,
    pub sigma_range: (f64, f64),
}

/// Indices of the `n` rows with the largest `|λ_t|`.
///
/// Rows are stably sorted by ascending `|λ_t|` and the last `n` positions are
/// returned in that sorted order, so equal magnitudes keep their original
/// index order.
pub fn select_reduced_rows(
    lambda: &SelectionVector,
    rollouts: &RolloutMatrix,
    n: usize,
) -> Result<Vec<usize>> {
    let rows = rollouts.row_count();
    if lambda.0.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: lambda.0.len(),
        });
    }
    select_top(&lambda.0, n)
}

fn select_top(lambda: &[f64], n: usize) -> Result<Vec<usize>> {
    if n > lambda.len() {
        return Err(Error::TooManySelected {
            requested: n,
            available: lambda.len(),
        });
    }
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| lambda[a].abs().total_cmp(&lambda[b].abs()));
    Ok(order.split_off(lambda.len() - n))
}

/// Solution of the inner weight problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub beta: Vec<f64>,
    /// Full outer MMD² for this `β` (ridge excluded), clamped at zero.
    pub objective: f64,
}

/// Pairwise L1 distances between all rollout rows, computed once and reused
/// for every kernel width tried by the search.
struct Distances {
    n: usize,
    d: Vec<f64>,
}

impl Distances {
    fn new(m: &Matrix) -> Self {
        let n = m.rows();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = l1(m.row(i), m.row(j));
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Distances { n, d }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    fn median(&self) -> f64 {
        let mut off: Vec<f64> = Vec::with_capacity(self.n * (self.n.saturating_sub(1)) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                off.push(self.get(i, j));
            }
        }
        if off.is_empty() {
            return 0.0;
        }
        off.sort_by(f64::total_cmp);
        let mid = off.len() / 2;
        if off.len() % 2 == 1 {
            off[mid]
        } else {
            0.5 * (off[mid - 1] + off[mid])
        }
    }

    /// `(1/N⁴) Σ_ts K(O_t, O_s)`, the full-set self term.
    fn full_term(&self, sigma: f64) -> f64 {
        let mut upper = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                upper += (-self.get(i, j) / sigma).exp();
            }
        }
        let total = self.n as f64 + 2.0 * upper;
        total / (self.n as f64 * self.n as f64)
    }

    fn solve(&self, indices: &[usize], sigma: f64, ridge: f64) -> Result<InnerSolution> {
        let full = self.full_term(sigma);
        self.solve_with_full(indices, sigma, ridge, full)
    }

    fn solve_with_full(
        &self,
        indices: &[usize],
        sigma: f64,
        ridge: f64,
        full: f64,
    ) -> Result<InnerSolution> {
        let k = indices.len();
        let total = self.n as f64;
        let mut kernel = Matrix::zeros(k, k);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                kernel.set(a, b, (-self.get(i, j) / sigma).exp());
            }
        }
        let q: Vec<f64> = indices
            .iter()
            .map(|&i| {
                (0..self.n)
                    .map(|t| (-self.get(i, t) / sigma).exp())
                    .sum::<f64>()
                    / total
            })
            .collect();

        // [2K + 2ρI, 1; 1ᵀ, 0] [β; ν] = [2q; 1]
        let mut kkt = Matrix::zeros(k + 1, k + 1);
        for a in 0..k {
            for b in 0..k {
                let ridge_term = if a == b { ridge } else { 0.0 };
                kkt.set(a, b, 2.0 * (kernel.get(a, b) + ridge_term));
            }
            kkt.set(a, k, 1.0);
            kkt.set(k, a, 1.0);
        }
        let mut rhs: Vec<f64> = q.iter().map(|v| 2.0 * v).collect();
        rhs.push(1.0);
        let sol = lu_solve(&kkt, &rhs)?;
        let beta = sol[..k].to_vec();

        let kb = kernel.mul_vec(&beta);
        let quad: f64 = beta.iter().zip(&kb).map(|(b, v)| b * v).sum();
        let lin: f64 = beta.iter().zip(&q).map(|(b, v)| b * v).sum();
        let objective = (quad - 2.0 * lin + full).max(0.0);
        Ok(InnerSolution { beta, objective })
    }
}

fn check_indices(indices: &[usize], rows: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::Empty);
    }
    for (a, &i) in indices.iter().enumerate() {
        if i >= rows {
            return Err(invalid("reduced-set index out of range"));
        }
        if indices[..a].contains(&i) {
            return Err(invalid("reduced-set indices must be distinct"));
        }
    }
    Ok(())
}

/// Optimal weights `β` (with `1ᵀβ = 1`) for a fixed selection of rows.
///
/// Minimizes `βᵀ(K_rr + ridge·I)β − 2βᵀq` where `q_l` is the mean kernel
/// value between selected row `l` and all rows. `β` may contain negative
/// entries.
pub fn solve_inner_qp(
    rollouts: &RolloutMatrix,
    indices: &[usize],
    sigma: KernelWidth,
    ridge: f64,
) -> Result<InnerSolution> {
    check_indices(indices, rollouts.row_count())?;
    if !(ridge > 0.0) {
        return Err(invalid("ridge must be positive"));
    }
    Distances::new(rollouts.matrix()).solve(indices, sigma.get(), ridge)
}

/// Outer objective for arbitrary (not necessarily optimal) weights.
pub fn reduced_discrepancy(
    rollouts: &RolloutMatrix,
    indices: &[usize],
    beta: &[f64],
    sigma: KernelWidth,
) -> Result<f64> {
    check_indices(indices, rollouts.row_count())?;
    if beta.len() != indices.len() {
        return Err(Error::DimensionMismatch {
            expected: indices.len(),
            found: beta.len(),
        });
    }
    let dist = Distances::new(rollouts.matrix());
    Ok(discrepancy_with(&dist, indices, beta, sigma.get()))
}

fn discrepancy_with(dist: &Distances, indices: &[usize], beta: &[f64], sigma: f64) -> f64 {
    let total = dist.n as f64;
    let mut quad = 0.0;
    let mut lin = 0.0;
    for (a, &i) in indices.iter().enumerate() {
        for (b, &j) in indices.iter().enumerate() {
            quad += beta[a] * beta[b] * (-dist.get(i, j) / sigma).exp();
        }
        let q: f64 = (0..dist.n)
            .map(|t| (-dist.get(i, t) / sigma).exp())
            .sum::<f64>()
            / total;
        lin += beta[a] * q;
    }
    (quad - 2.0 * lin + dist.full_term(sigma)).max(0.0)
}

/// Kernel-width bounds used by [`distill`] for this rollout matrix.
pub fn sigma_bounds(rollouts: &RolloutMatrix, cfg: &DistillConfig) -> (f64, f64) {
    match cfg.sigma_range {
        Some(r) => r,
        None => median_bounds(Distances::new(rollouts.matrix()).median()),
    }
}

fn median_bounds(median: f64) -> (f64, f64) {
    // identical rows give a zero median; any width is then equally good
    let m = if median > 0.0 && median.is_finite() {
        median
    } else {
        1.0
    };
    (0.05 * m, 20.0 * m)
}

/// Distills `N²` rollouts to a weighted reduced set of `n` rows.
pub fn distill(rollouts: &RolloutMatrix, n: usize, cfg: &DistillConfig) -> Result<ReducedSet> {
    distill_traced(rollouts, n, cfg).map(|(set, _)| set)
}

struct Candidate {
    lambda: Vec<f64>,
    log_sigma: f64,
    score: f64,
}

/// [`distill`] that also reports the best-so-far trace and failure count.
pub fn distill_traced(
    rollouts: &RolloutMatrix,
    n: usize,
    cfg: &DistillConfig,
) -> Result<(ReducedSet, DistillStats)> {
    cfg.validate()?;
    let rows = rollouts.row_count();
    if n == 0 {
        return Err(invalid("reduced-set size must be at least 1"));
    }
    if n > rows {
        return Err(Error::TooManySelected {
            requested: n,
            available: rows,
        });
    }
    let dist = Distances::new(rollouts.matrix());
    let (lo, hi) = match cfg.sigma_range {
        Some(r) => r,
        None => median_bounds(dist.median()),
    };
    let (log_lo, log_hi) = (lo.ln(), hi.ln());

    let mut lambda_mean = vec![0.0; rows];
    let mut lambda_std = vec![cfg.lambda_init_std; rows];
    let mut sigma_mean = 0.5 * (log_lo + log_hi);
    let mut sigma_std = 0.25 * (log_hi - log_lo);

    let elite_count =
        ((cfg.cem_elite_frac * cfg.cem_samples as f64).ceil() as usize).clamp(1, cfg.cem_samples);
    let mut best: Option<ReducedSet> = None;
    let mut best_per_iter = Vec::with_capacity(cfg.cem_iters);
    let mut failures = 0usize;

    for iter in 0..cfg.cem_iters {
        let mut batch: Vec<Candidate> = Vec::with_capacity(cfg.cem_samples);
        for c in 0..cfg.cem_samples {
            let mut r = rng::substream(cfg.seed, &[iter as u64, c as u64]);
            let lambda: Vec<f64> = (0..rows)
                .map(|t| {
                    let g: f64 = StandardNormal.sample(&mut r);
                    lambda_mean[t] + lambda_std[t] * g
                })
                .collect();
            let u: f64 = StandardNormal.sample(&mut r);
            let log_sigma = if iter == 0 {
                // log-uniform over the admissible range on the first pass
                let p: f64 = rand::Rng::random(&mut r);
                log_lo + p * (log_hi - log_lo)
            } else {
                (sigma_mean + sigma_std * u).clamp(log_lo, log_hi)
            };
            let sigma = log_sigma.exp();
            let indices = select_top(&lambda, n)?;
            match dist.solve(&indices, sigma, cfg.qp_ridge) {
                Ok(sol) => {
                    let better = best.as_ref().is_none_or(|b| sol.objective < b.discrepancy);
                    if better {
                        best = Some(ReducedSet {
                            indices,
                            beta: sol.beta,
                            sigma: KernelWidth::new(sigma)?,
                            discrepancy: sol.objective,
                        });
                    }
                    batch.push(Candidate {
                        lambda,
                        log_sigma,
                        score: sol.objective,
                    });
                }
                Err(_) => failures += 1,
            }
        }
        if let Some(b) = &best {
            best_per_iter.push(b.discrepancy);
        }
        if batch.is_empty() {
            continue;
        }
        // stable sort keeps candidate order among equal scores
        batch.sort_by(|a, b| a.score.total_cmp(&b.score));
        let elites = &batch[..elite_count.min(batch.len())];
        let m = elites.len() as f64;
        for t in 0..rows {
            let mean = elites.iter().map(|e| e.lambda[t]).sum::<f64>() / m;
            let var = elites
                .iter()
                .map(|e| (e.lambda[t] - mean).powi(2))
                .sum::<f64>()
                / m;
            lambda_mean[t] = mean;
            lambda_std[t] = var.sqrt().max(1e-3 * cfg.lambda_init_std);
        }
        let mean = elites.iter().map(|e| e.log_sigma).sum::<f64>() / m;
        let var = elites
            .iter()
            .map(|e| (e.log_sigma - mean).powi(2))
            .sum::<f64>()
            / m;
        sigma_mean = mean;
        sigma_std = var.sqrt().max(1e-3);
    }

    let total = cfg.cem_samples * cfg.cem_iters;
    let set = best.ok_or(Error::AllCandidatesFailed { failures: total })?;
    debug_assert!((set.beta.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
    Ok((
        set,
        DistillStats {
            best_per_iter,
            failed_candidates: failures,
            sigma_range: (lo, hi),
        },
    ))
}

/// Best outer discrepancy over `subsets` random uniform-weight subsets of
/// `n` rows, each scored at every width in `sigma_grid`.
///
/// This is the random reduced-set baseline that [`distill`] is measured
/// against.
pub fn random_subset_baseline(
    rollouts: &RolloutMatrix,
    n: usize,
    subsets: usize,
    sigma_grid: &[f64],
    seed: u64,
) -> Result<f64> {
    let rows = rollouts.row_count();
    if n == 0 || n > rows {
        return Err(Error::TooManySelected {
            requested: n,
            available: rows,
        });
    }
    if sigma_grid.is_empty() || subsets == 0 {
        return Err(Error::Empty);
    }
    let dist = Distances::new(rollouts.matrix());
    let beta = vec![1.0 / n as f64; n];
    let mut best = f64::INFINITY;
    for s in 0..subsets {
        let mut r = rng::substream(seed, &[s as u64]);
        let mut pool: Vec<usize> = (0..rows).collect();
        // partial Fisher-Yates
        for i in 0..n {
            let j = rand::Rng::random_range(&mut r, i..rows);
            pool.swap(i, j);
        }
        let indices = &pool[..n];
        for &sigma in sigma_grid {
            best = best.min(discrepancy_with(&dist, indices, &beta, sigma));
        }
    }
    Ok(best)
}

/// `count` log-spaced widths spanning `[lo, hi]`.
pub fn log_sigma_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
