//! Augmented Lagrangian outer loop and the public solve entry point.
//!
//! Each outer iteration approximately minimizes the augmented Lagrangian
//! over `(y, z)` with the semi-smooth Newton method, refreshes the
//! multiplier `x+ = x - sigma (A^T y + z)` and raises `sigma` on the
//! geometric schedule. Convergence is declared on the normalized KKT
//! residuals; non-convergence is a flagged result, not an error, so path
//! sweeps keep going.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dual::{dual_objective, kkt_residuals, DualState};
use crate::error::{Error, Result};
use crate::linalg::mat_vec_sparse;
use crate::newton::inner_solve;
use crate::penalty::Penalty;
use crate::problem::Problem;

/// Solver configuration. Defaults: tolerance `1e-6` on both KKT residuals,
/// `sigma0 = 5e-3` raised by a factor of 5 each iteration, Armijo
/// `mu = 0.2`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence tolerance on both normalized KKT residuals.
    pub outer_tol: f64,
    /// Inner tolerance policy: the inner solve at an outer iteration runs to
    /// `max(outer_tol, inner_tol_factor * res3)` with `res3` measured at the
    /// start of the iteration.
    pub inner_tol_factor: f64,
    /// Initial augmented Lagrangian parameter.
    pub sigma0: f64,
    /// Geometric growth factor for `sigma` (> 1).
    pub sigma_factor: f64,
    /// Cap on `sigma`; growing it further only hurts conditioning.
    pub sigma_max: f64,
    /// Armijo slope fraction in `(0, 1/2)`.
    pub mu: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_backtracks: usize,
    /// Dimension above which both direct strategies give way to CG.
    pub cg_threshold: usize,
    /// Relative-residual requirement on direct linear solves; also the floor
    /// for the adaptive CG tolerance.
    pub linear_tol: f64,
    /// Seed forwarded to seed-dependent companions (fold partitions, data
    /// generation); the solve itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-6,
            inner_tol_factor: 0.1,
            sigma0: 5e-3,
            sigma_factor: 5.0,
            sigma_max: 1e8,
            mu: 0.2,
            max_outer: 100,
            max_inner: 100,
            max_backtracks: 50,
            cg_threshold: 10_000,
            linear_tol: 1e-10,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol > 0.0) {
            return Err(Error::InvalidParameter("outer_tol must be positive".into()));
        }
        if !(self.inner_tol_factor > 0.0 && self.inner_tol_factor <= 1.0) {
            return Err(Error::InvalidParameter(
                "inner_tol_factor must lie in (0, 1]".into(),
            ));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::InvalidParameter("sigma0 must be positive".into()));
        }
        if !(self.sigma_factor > 1.0) {
            return Err(Error::InvalidParameter(
                "sigma_factor must exceed 1".into(),
            ));
        }
        if !(self.sigma_max >= self.sigma0) {
            return Err(Error::InvalidParameter(
                "sigma_max must be at least sigma0".into(),
            ));
        }
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::InvalidParameter("mu must lie in (0, 1/2)".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be positive".into(),
            ));
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::InvalidParameter("linear_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Scaling convention for the squared loss. Solvers that divide the loss by
/// the number of observations expect penalties `m` times smaller; mapping
/// them onto the unit scale keeps every solver family on one objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossScale {
    /// `0.5 ||Ax - b||^2`, the native convention here.
    Unit,
    /// `(1/(2m)) ||Ax - b||^2`.
    PerObservation,
}

impl LossScale {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "unit" => Some(LossScale::Unit),
            "per-observation" | "per_observation" => Some(LossScale::PerObservation),
            _ => None,
        }
    }

    /// Penalty on the unit scale equivalent to `p` under this convention.
    pub fn effective_penalty(&self, p: &Penalty, m: usize) -> Result<Penalty> {
        match self {
            LossScale::Unit => Ok(*p),
            LossScale::PerObservation => {
                Penalty::new(p.lambda1() * m as f64, p.lambda2() * m as f64)
            }
        }
    }

    /// Maps a unit-scale objective value back to this convention.
    pub fn scale_objective(&self, objective: f64, m: usize) -> f64 {
        match self {
            LossScale::Unit => objective,
            LossScale::PerObservation => objective / m as f64,
        }
    }
}

/// Geometric `sigma` schedule: multiply by `sigma_factor`, cap at
/// `sigma_max`, never decrease.
pub fn sigma_schedule(sigma: f64, cfg: &SolverConfig) -> f64 {
    if sigma >= cfg.sigma_max {
        sigma
    } else {
        (sigma * cfg.sigma_factor).min(cfg.sigma_max)
    }
}

/// A solved Elastic Net instance.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Nonzero coefficients as 0-based `(index, value)` pairs, sorted by index.
    pub coefficients: Vec<(usize, f64)>,
    /// Active set (support of the coefficients), sorted.
    pub active_set: Vec<usize>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub res_kkt3: f64,
    pub res_kkt1: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub wall_time: f64,
    pub converged: bool,
    /// Final dual state; feed it back as the warm start of a nearby solve.
    pub state: DualState,
}

impl Solution {
    pub fn r(&self) -> usize {
        self.active_set.len()
    }

    /// Duality gap `primal + (h*(y) + p*(z))`; nonnegative up to tolerance.
    pub fn gap(&self) -> f64 {
        self.primal_objective - self.dual_objective
    }

    /// Dense coefficient vector of length `n`.
    pub fn dense_x(&self, n: usize) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        for &(j, v) in &self.coefficients {
            x[j] = v;
        }
        x
    }
}

/// Primal objective `0.5 ||A x - b||^2 + p(x)` with a sparsity-aware product.
pub fn primal_objective(prob: &Problem, p: &Penalty, x: &DVector<f64>) -> f64 {
    let mut residual = mat_vec_sparse(prob.a(), x);
    residual -= prob.b();
    0.5 * residual.norm_squared() + p.value(x)
}

/// Solves the Elastic Net instance by the augmented Lagrangian method,
/// optionally warm-started from a nearby solve's final state.
///
/// Non-convergence within `cfg.max_outer` outer iterations returns the best
/// iterate with `converged = false` rather than an error.
pub fn solve(
    prob: &Problem,
    p: &Penalty,
    cfg: &SolverConfig,
    warm: Option<DualState>,
) -> Result<Solution> {
    cfg.validate()?;
    let start = Instant::now();
    let (m, n) = (prob.m(), prob.n());

    let mut state = match warm {
        Some(s) => {
            if !s.dims_match(prob) {
                return Err(Error::DimensionMismatch(
                    "warm-start state does not match the problem dimensions".into(),
                ));
            }
            if !(s.sigma > 0.0) {
                return Err(Error::InvalidParameter(
                    "warm-start sigma must be positive".into(),
                ));
            }
            s
        }
        None => DualState::zeros(m, n, cfg.sigma0),
    };

    // res3 measured at the start of the current outer iteration; it sets the
    // inner tolerance. The cold start is exactly feasible hence zero.
    let mut res3_current = if state.y.iter().any(|&v| v != 0.0) || state.z.iter().any(|&v| v != 0.0)
    {
        kkt_residuals(&state, prob).res3
    } else {
        0.0
    };

    let mut outer_iters = 0;
    let mut inner_iters_total = 0;
    let mut converged = false;
    let mut last_res = kkt_residuals(&state, prob);

    while outer_iters < cfg.max_outer {
        let inner_tol = (cfg.inner_tol_factor * res3_current).max(cfg.outer_tol);
        let inner = inner_solve(&mut state, prob, p, cfg, inner_tol)?;
        inner_iters_total += inner.newton_iters;

        // multiplier update x+ = x - sigma (A^T y + z) = prox_{sigma p}(w),
        // then the sigma raise; both belong to the same outer step
        let x_next = p.prox(state.sigma, &inner.w);
        let mut diff = &state.x - &x_next;
        diff /= state.sigma;
        let res3_cheap = diff.norm() / (1.0 + state.y.norm() + state.z.norm());
        state.x = x_next;
        state.sigma = sigma_schedule(state.sigma, cfg);
        outer_iters += 1;
        res3_current = res3_cheap;

        let mut grad = mat_vec_sparse(prob.a(), &state.x);
        grad *= -1.0;
        grad += &state.y;
        grad += prob.b();
        let res1 = grad.norm() / (1.0 + prob.b().norm());

        if res3_cheap <= cfg.outer_tol && res1 <= cfg.outer_tol {
            // certify with the full recomputation before declaring victory
            last_res = kkt_residuals(&state, prob);
            if last_res.res3 <= cfg.outer_tol && last_res.res1 <= cfg.outer_tol {
                converged = true;
                break;
            }
            res3_current = last_res.res3;
        }

        if outer_iters >= cfg.max_outer {
            last_res = kkt_residuals(&state, prob);
            break;
        }
    }
    if !converged && outer_iters >= cfg.max_outer {
        last_res = kkt_residuals(&state, prob);
    }

    let coefficients: Vec<(usize, f64)> = state
        .x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| (j, v))
        .collect();
    let active_set: Vec<usize> = coefficients.iter().map(|&(j, _)| j).collect();

    Ok(Solution {
        primal_objective: primal_objective(prob, p, &state.x),
        dual_objective: dual_objective(&state, prob, p),
        res_kkt3: last_res.res3,
        res_kkt1: last_res.res1,
        outer_iters,
        inner_iters_total,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        coefficients,
        active_set,
        state,
    })
}
