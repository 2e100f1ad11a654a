//! Regularization-path computation and model selection.
//!
//! A [`LambdaGrid`] sweeps `c_lambda` from 1 (where nothing is active)
//! downward on a log scale, warm-starting every solve from the previous
//! point. Each point is scored with GCV and e-BIC on de-biased estimates;
//! k-fold cross-validation adds a third criterion at the cost of `k` extra
//! path sweeps.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::problem::Problem;
use crate::solver::{solve, Solution, SolverConfig};

/// A sweep over `c_lambda` values at fixed mixing `alpha`.
///
/// `lambda_max = ||A^T b||_inf / alpha` is the smallest level at which the
/// solution has no active component, so `c = 1` starts the sweep empty.
#[derive(Clone, Debug)]
pub struct LambdaGrid {
    pub alpha: f64,
    /// Descending sequence in (0, 1]: sparse-to-dense sweep order.
    pub c_values: Vec<f64>,
    pub lambda_max: f64,
    /// Stop the sweep once a solution exceeds this many active features.
    pub max_active: Option<usize>,
}

impl LambdaGrid {
    pub fn penalty(&self, c: f64) -> Result<Penalty> {
        Penalty::from_mixing(self.alpha, c, self.lambda_max)
    }
}

/// Builds a log-spaced grid of `n_points` values from 1 down to `c_min`.
pub fn build_grid(
    prob: &Problem,
    alpha: f64,
    n_points: usize,
    c_min: f64,
    max_active: Option<usize>,
) -> Result<LambdaGrid> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if n_points < 1 {
        return Err(Error::InvalidParameter(
            "the grid needs at least one point".into(),
        ));
    }
    if !(c_min > 0.0 && c_min < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "c_min must lie in (0, 1), got {c_min}"
        )));
    }
    let lambda_max = prob.max_abs_atb() / alpha;
    if lambda_max == 0.0 {
        return Err(Error::DegenerateProblem(
            "A^T b = 0: every penalty level yields the zero solution".into(),
        ));
    }
    let c_values = if n_points == 1 {
        vec![1.0]
    } else {
        let log_min = c_min.ln();
        (0..n_points)
            .map(|i| (log_min * i as f64 / (n_points - 1) as f64).exp())
            .collect()
    };
    Ok(LambdaGrid {
        alpha,
        c_values,
        lambda_max,
        max_active,
    })
}

/// One scored point of a regularization path.
#[derive(Clone, Debug)]
pub struct PathPoint {
    pub c_lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub r: usize,
    /// Residual sum of squares of the de-biased fit on the active set.
    pub rss: f64,
    /// Elastic Net degrees of freedom of the active set.
    pub nu: f64,
    pub gcv: f64,
    pub ebic: f64,
    pub cv_mean: Option<f64>,
    pub cv_se: Option<f64>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub wall_time: f64,
    pub converged: bool,
    pub debias_ridge_fallback: bool,
    pub solution: Solution,
}

/// A full path sweep with per-point scores.
#[derive(Clone, Debug)]
pub struct SelectionReport {
    pub alpha: f64,
    pub lambda_max: f64,
    pub points: Vec<PathPoint>,
    pub truncated_at_max_active: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    Gcv,
    Ebic,
    Cv,
}

impl Criterion {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gcv" => Some(Criterion::Gcv),
            "ebic" | "e-bic" => Some(Criterion::Ebic),
            "cv" => Some(Criterion::Cv),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Gcv => "gcv",
            Criterion::Ebic => "ebic",
            Criterion::Cv => "cv",
        }
    }
}

impl SelectionReport {
    /// Index of the criterion's global minimizer over the sweep, with ties
    /// broken toward the larger `lambda1` (the sparser model). Reordering
    /// the points cannot change the winner.
    pub fn chosen(&self, criterion: Criterion) -> Option<usize> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, pt) in self.points.iter().enumerate() {
            let value = match criterion {
                Criterion::Gcv => pt.gcv,
                Criterion::Ebic => pt.ebic,
                Criterion::Cv => match pt.cv_mean {
                    Some(v) => v,
                    None => continue,
                },
            };
            if value.is_nan() {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bv, bl1)) => value < bv || (value == bv && pt.lambda1 > bl1),
            };
            if better {
                best = Some((i, value, pt.lambda1));
            }
        }
        best.map(|(i, _, _)| i)
    }

    pub fn attach_cv(&mut self, scores: &[CvScore]) {
        for (pt, score) in self.points.iter_mut().zip(scores.iter()) {
            pt.cv_mean = Some(score.mean);
            pt.cv_se = score.se;
        }
    }
}

/// Generalized cross-validation score `rss / (m (1 - nu/m)^2)`.
///
/// Undefined at `nu >= m`; reported as infinity so it ranks last.
pub fn gcv(rss: f64, m: usize, nu: f64) -> f64 {
    let m = m as f64;
    if nu >= m {
        return f64::INFINITY;
    }
    let denom = 1.0 - nu / m;
    rss / (m * denom * denom)
}

/// Extended BIC `log(rss/m) + (nu/m) (log m + log n)`.
pub fn ebic(rss: f64, m: usize, n: usize, nu: f64) -> f64 {
    let m = m as f64;
    (rss / m).ln() + nu / m * (m.ln() + (n as f64).ln())
}

/// Elastic Net degrees of freedom
/// `nu = tr(A_J (A_J^T A_J + lambda2 I_r)^{-1} A_J^T)` evaluated through the
/// singular values of `A_J` as `sum_i d_i^2 / (d_i^2 + lambda2)`, which stays
/// finite for rank-deficient `A_J` even at `lambda2 = 0`.
pub fn degrees_of_freedom(prob: &Problem, indices: &[usize], lambda2: f64) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let aj = prob.a().select_columns(indices.iter());
    let svd = aj.svd(false, false);
    let d_max = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &d| acc.max(d));
    let rank_tol = d_max * f64::EPSILON * prob.m().max(indices.len()) as f64;
    svd.singular_values
        .iter()
        .map(|&d| {
            if d <= rank_tol {
                0.0
            } else {
                d * d / (d * d + lambda2)
            }
        })
        .sum()
}

/// De-biased coefficients on the active set.
#[derive(Clone, Debug)]
pub struct DebiasFit {
    pub coefficients: DVector<f64>,
    /// True when plain least squares was unsafe (`r >= m` or rank-deficient)
    /// and the fit fell back to a ridge with the point's `lambda2`.
    pub ridge_fallback: bool,
}

/// Ordinary least squares of `b` on the selected columns `A_J`. When the
/// system is not comfortably overdetermined (`r >= m` or rank-deficient)
/// the fit falls back to a ridge with penalty `lambda2` (minimum-norm least
/// squares when `lambda2 = 0`) and flags it.
pub fn debias(prob: &Problem, indices: &[usize], lambda2: f64) -> Result<DebiasFit> {
    let r = indices.len();
    if r == 0 {
        return Err(Error::InvalidParameter(
            "de-biasing needs at least one selected feature".into(),
        ));
    }
    let m = prob.m();
    let aj = prob.a().select_columns(indices.iter());
    let svd = aj.svd(true, true);
    let d_max = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &d| acc.max(d));
    let rank_tol = d_max * f64::EPSILON * m.max(r) as f64;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&d| d > rank_tol)
        .count();
    let ridge_fallback = r >= m || rank < r;
    let effective_l2 = if ridge_fallback { lambda2 } else { 0.0 };

    let u = svd.u.as_ref().expect("svd requested u");
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let mut projected = u.tr_mul(prob.b());
    for (i, &d) in svd.singular_values.iter().enumerate() {
        projected[i] *= if d <= rank_tol && effective_l2 == 0.0 {
            0.0
        } else {
            d / (d * d + effective_l2)
        };
    }
    Ok(DebiasFit {
        coefficients: v_t.tr_mul(&projected),
        ridge_fallback,
    })
}

fn score_point(prob: &Problem, c: f64, p: &Penalty, sol: Solution) -> Result<PathPoint> {
    let m = prob.m();
    let n = prob.n();
    let indices = sol.active_set.clone();
    let (rss, ridge_fallback) = if indices.is_empty() {
        (prob.b().norm_squared(), false)
    } else {
        let fit = debias(prob, &indices, p.lambda2())?;
        let aj = prob.a().select_columns(indices.iter());
        let residual = prob.b() - aj * &fit.coefficients;
        (residual.norm_squared(), fit.ridge_fallback)
    };
    let nu = degrees_of_freedom(prob, &indices, p.lambda2());
    Ok(PathPoint {
        c_lambda: c,
        lambda1: p.lambda1(),
        lambda2: p.lambda2(),
        r: indices.len(),
        rss,
        nu,
        gcv: gcv(rss, m, nu),
        ebic: ebic(rss, m, n, nu),
        cv_mean: None,
        cv_se: None,
        outer_iters: sol.outer_iters,
        inner_iters: sol.inner_iters_total,
        wall_time: sol.wall_time,
        converged: sol.converged,
        debias_ridge_fallback: ridge_fallback,
        solution: sol,
    })
}

/// Sweeps the grid with warm starts chained from point to point. The sweep
/// stops once a solution's active set exceeds `grid.max_active`.
///
/// The handed-over `sigma` is the previous point's final value, floored at
/// `100 / lambda2`: the multiplier iteration contracts like
/// `1 / (1 + sigma * lambda2)` per outer step (the ridge term makes the
/// primal `lambda2`-strongly convex), so the floor keeps any warm start
/// within two outer iterations of tolerance. Without it the near-`lambda_max`
/// points, whose solves are too cheap to ramp `sigma`, hand over a cold one.
pub fn path(prob: &Problem, grid: &LambdaGrid, cfg: &SolverConfig) -> Result<SelectionReport> {
    path_with_mode(prob, grid, cfg, true)
}

/// [`path`] with warm starting made explicit; `warm = false` cold-starts
/// every point (used to validate the warm-start chain).
pub fn path_with_mode(
    prob: &Problem,
    grid: &LambdaGrid,
    cfg: &SolverConfig,
    warm: bool,
) -> Result<SelectionReport> {
    let mut points = Vec::with_capacity(grid.c_values.len());
    let mut carry: Option<crate::dual::DualState> = None;
    let mut truncated = false;
    for &c in &grid.c_values {
        let p = grid.penalty(c)?;
        if let Some(state) = carry.as_mut() {
            if p.lambda2() > 0.0 {
                let floor = (100.0 / p.lambda2()).min(cfg.sigma_max);
                state.sigma = state.sigma.max(floor);
            }
        }
        let sol = solve(prob, &p, cfg, carry.take())?;
        if warm {
            carry = Some(sol.state.clone());
        }
        let point = score_point(prob, c, &p, sol)?;
        let r = point.r;
        points.push(point);
        if let Some(cap) = grid.max_active {
            if r > cap {
                truncated = true;
                break;
            }
        }
    }
    Ok(SelectionReport {
        alpha: grid.alpha,
        lambda_max: grid.lambda_max,
        points,
        truncated_at_max_active: truncated,
    })
}

/// Cross-validation score of one grid point.
#[derive(Clone, Copy, Debug)]
pub struct CvScore {
    pub mean: f64,
    /// Standard error over folds; `None` when a single fold was scored.
    pub se: Option<f64>,
}

/// Seed-deterministic partition of `0..m` into `k` near-equal blocks.
pub fn fold_partition(m: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rows: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let base = m / k;
    let extra = m % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(rows[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// k-fold cross-validation of the grid: each fold re-standardizes its
/// training rows, runs the warm-started path, de-biases every point and
/// scores the prediction MSE on the held-out rows (transformed with the
/// training statistics). Folds run in parallel; results are deterministic
/// in the seed.
pub fn kfold_cv(
    prob: &Problem,
    grid: &LambdaGrid,
    k: usize,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Vec<CvScore>> {
    let m = prob.m();
    if k < 2 {
        return Err(Error::InvalidParameter("k-fold CV needs k >= 2".into()));
    }
    if m < k {
        return Err(Error::InvalidParameter(format!(
            "cannot split {m} rows into {k} folds"
        )));
    }
    let folds = fold_partition(m, k, seed);
    let n_points = grid.c_values.len();

    let per_fold: Vec<Result<Vec<f64>>> = folds
        .par_iter()
        .map(|test_rows| fold_errors(prob, grid, cfg, test_rows))
        .collect();

    let mut fold_mse: Vec<Vec<f64>> = Vec::with_capacity(k);
    for res in per_fold {
        fold_mse.push(res?);
    }

    let mut scores = Vec::with_capacity(n_points);
    for point in 0..n_points {
        let values: Vec<f64> = fold_mse.iter().map(|f| f[point]).collect();
        let mean = values.iter().sum::<f64>() / k as f64;
        let se = if k > 1 {
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k as f64 - 1.0);
            Some((var / k as f64).sqrt())
        } else {
            None
        };
        scores.push(CvScore { mean, se });
    }
    Ok(scores)
}

fn fold_errors(
    prob: &Problem,
    grid: &LambdaGrid,
    cfg: &SolverConfig,
    test_rows: &[usize],
) -> Result<Vec<f64>> {
    let m = prob.m();
    let in_test = {
        let mut mask = vec![false; m];
        for &r in test_rows {
            mask[r] = true;
        }
        mask
    };
    let train_rows: Vec<usize> = (0..m).filter(|&r| !in_test[r]).collect();

    let (a_train, b_train) = prob.row_subset_raw(&train_rows);
    let train_ds = Dataset {
        a: a_train,
        b: b_train,
        truth: None,
        provenance: "cv-fold".into(),
    };
    let (train_prob, info) = standardize(&train_ds)?;
    let scale = train_prob.scale_info();

    // test rows transformed with the training statistics
    let (a_test, b_test) = prob.row_subset_raw(test_rows);
    let mut a_test_std = DMatrix::zeros(test_rows.len(), info.kept.len());
    for (c, &j) in info.kept.iter().enumerate() {
        for i in 0..test_rows.len() {
            a_test_std[(i, c)] = (a_test[(i, j)] - scale.column_means[c]) / scale.column_norms[c];
        }
    }

    let mut errors = Vec::with_capacity(grid.c_values.len());
    let mut carry = None;
    for &c in &grid.c_values {
        let p = grid.penalty(c)?;
        let sol = solve(&train_prob, &p, cfg, carry.take())?;
        carry = Some(sol.state.clone());
        let prediction = if sol.active_set.is_empty() {
            DVector::from_element(test_rows.len(), scale.b_mean)
        } else {
            let fit = debias(&train_prob, &sol.active_set, p.lambda2())?;
            let aj_test = a_test_std.select_columns(sol.active_set.iter());
            aj_test * fit.coefficients + DVector::from_element(test_rows.len(), scale.b_mean)
        };
        let mse = (&b_test - prediction).norm_squared() / test_rows.len() as f64;
        errors.push(mse);
    }
    Ok(errors)
}
