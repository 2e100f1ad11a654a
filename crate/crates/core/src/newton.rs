//! Semi-smooth Newton method for the inner dual sub-problem.
//!
//! Each Newton step solves `V d = -grad psi(y)` where
//! `V = I_m + kappa * A_J A_J^T` is a generalized Hessian of `psi`,
//! `J = { j : |w_j| > sigma * lambda1 }` is the active set of
//! `w = x - sigma * A^T y`, and `kappa = sigma / (1 + sigma * lambda2)`.
//! The system is solved by one of three strategies picked from `(m, r)`:
//! a Cholesky factorization of the `m x m` matrix, the Sherman-Morrison-
//! Woodbury reduction to an `r x r` factorization, or matrix-free conjugate
//! gradients when both dimensions are large.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dual::{h_star, psi_from_prox_norm, psi_gradient, psi_value, z_from_w, DualState};
use crate::error::{Error, Result};
use crate::linalg::mat_vec_sparse;
use crate::penalty::Penalty;
use crate::problem::Problem;
use crate::solver::SolverConfig;

/// Active set of the current iterate.
///
/// `indices` are 0-based column indices with `|w_j| > sigma * lambda1`
/// (strict: boundary components stay inactive, which keeps the reduced
/// system as small as the Clarke subdifferential allows).
#[derive(Clone, Debug)]
pub struct ActiveSet {
    indices: Vec<usize>,
    kappa: f64,
}

impl ActiveSet {
    pub fn new(indices: Vec<usize>, kappa: f64) -> Self {
        Self { indices, kappa }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn r(&self) -> usize {
        self.indices.len()
    }

    /// `kappa = sigma / (1 + sigma * lambda2)`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Extracts `J = { j : |w_j| > sigma * lambda1 }` from `w = x - sigma A^T y`.
pub fn extract_active_set(w: &DVector<f64>, sigma: f64, p: &Penalty) -> ActiveSet {
    let threshold = sigma * p.lambda1();
    let indices = (0..w.len()).filter(|&j| w[j].abs() > threshold).collect();
    ActiveSet {
        indices,
        kappa: sigma / (1.0 + sigma * p.lambda2()),
    }
}

/// Linear-system strategy for the Newton direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Factor the `m x m` matrix `I_m + kappa * A_J A_J^T`.
    CholeskyM,
    /// Factor the `r x r` matrix `kappa^{-1} I_r + A_J^T A_J` (Woodbury).
    SmwR,
    /// Matrix-free conjugate gradients on `u -> u + kappa * A_J (A_J^T u)`.
    Cg,
}

/// Picks the cheapest strategy: the reduced `r x r` solve when the active
/// set is the smaller dimension, the `m x m` solve otherwise, and CG once
/// both sides outgrow `cfg.cg_threshold`.
pub fn choose_strategy(m: usize, r: usize, cfg: &SolverConfig) -> Strategy {
    if r < m {
        if r <= cfg.cg_threshold {
            Strategy::SmwR
        } else {
            Strategy::Cg
        }
    } else if m <= cfg.cg_threshold {
        Strategy::CholeskyM
    } else {
        Strategy::Cg
    }
}

fn cholesky_with_jitter(mut g: DMatrix<f64>, jitter: f64, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if jitter > 0.0 {
        for i in 0..g.nrows() {
            g[(i, i)] += jitter;
        }
    }
    Cholesky::new(g).ok_or_else(|| {
        Error::FactorizationFailed(format!("{what} is numerically non-SPD (jitter {jitter:e})"))
    })
}

/// Direct solve of `(I_m + kappa A_J A_J^T) d = -grad` via Cholesky.
pub fn solve_cholesky_m(
    act: &ActiveSet,
    prob: &Problem,
    grad: &DVector<f64>,
    jitter: f64,
) -> Result<DVector<f64>> {
    let m = prob.m();
    let aj = prob.a().select_columns(act.indices.iter());
    let mut v = &aj * aj.transpose();
    v *= act.kappa();
    for i in 0..m {
        v[(i, i)] += 1.0;
    }
    let chol = cholesky_with_jitter(v, jitter, "I + kappa*AJ*AJ'")?;
    Ok(chol.solve(&(-grad)))
}

/// Reduced solve through the Sherman-Morrison-Woodbury identity:
/// `(I + kappa A_J A_J^T)^{-1} = I - A_J (kappa^{-1} I_r + A_J^T A_J)^{-1} A_J^T`.
pub fn solve_smw(
    act: &ActiveSet,
    prob: &Problem,
    grad: &DVector<f64>,
    jitter: f64,
) -> Result<DVector<f64>> {
    let r = act.r();
    let aj = prob.a().select_columns(act.indices.iter());
    let mut g = aj.tr_mul(&aj);
    let kappa_inv = 1.0 / act.kappa();
    for i in 0..r {
        g[(i, i)] += kappa_inv;
    }
    let chol = cholesky_with_jitter(g, jitter, "1/kappa*I + AJ'*AJ")?;
    let rhs = -grad;
    let reduced = chol.solve(&aj.tr_mul(&rhs));
    Ok(&rhs - aj * reduced)
}

/// Conjugate gradients on `V d = -grad` with `V` applied matrix-free.
///
/// Stops at relative residual `tol_rel`; never materializes `A_J`.
pub fn solve_cg(
    act: &ActiveSet,
    prob: &Problem,
    grad: &DVector<f64>,
    tol_rel: f64,
    max_iters: usize,
) -> DVector<f64> {
    let m = prob.m();
    let a = prob.a();
    let kappa = act.kappa();
    let apply = |v: &DVector<f64>, out: &mut DVector<f64>| {
        out.copy_from(v);
        for &j in &act.indices {
            let col = a.column(j);
            out.axpy(kappa * col.dot(v), &col, 1.0);
        }
    };

    let mut d = DVector::zeros(m);
    let mut residual = -grad;
    let target = tol_rel * residual.norm();
    if residual.norm() <= target {
        return d;
    }
    let mut direction = residual.clone();
    let mut vs = DVector::zeros(m);
    let mut rho = residual.norm_squared();
    for _ in 0..max_iters {
        apply(&direction, &mut vs);
        let alpha = rho / direction.dot(&vs);
        d.axpy(alpha, &direction, 1.0);
        residual.axpy(-alpha, &vs, 1.0);
        let rho_next = residual.norm_squared();
        if rho_next.sqrt() <= target {
            break;
        }
        direction = &residual + &direction * (rho_next / rho);
        rho = rho_next;
    }
    d
}

/// Solves the generalized-Hessian system `V d = -grad` with the strategy
/// picked by [`choose_strategy`], retrying once with a `1e-10` diagonal
/// jitter if the factorization reports a non-SPD matrix.
pub fn newton_direction(
    act: &ActiveSet,
    prob: &Problem,
    grad: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<DVector<f64>> {
    if act.r() == 0 {
        // V = I_m
        return Ok(-grad);
    }
    let strategy = choose_strategy(prob.m(), act.r(), cfg);
    let solve = |jitter: f64| match strategy {
        Strategy::CholeskyM => solve_cholesky_m(act, prob, grad, jitter),
        Strategy::SmwR => solve_smw(act, prob, grad, jitter),
        Strategy::Cg => {
            let tol = grad.norm().sqrt().min(0.1).max(cfg.linear_tol);
            Ok(solve_cg(act, prob, grad, tol, prob.m().max(100)))
        }
    };
    match solve(0.0) {
        Ok(d) => Ok(d),
        Err(Error::FactorizationFailed(_)) => solve(1e-10),
        Err(e) => Err(e),
    }
}

/// Backtracking Armijo search shared by [`line_search`] and [`inner_solve`]:
/// halve `s` from 1 until `psi(s) <= psi0 + mu * s * slope`.
fn backtrack(
    psi0: f64,
    slope: f64,
    mut eval: impl FnMut(f64) -> f64,
    mu: f64,
    max_backtracks: usize,
) -> Result<f64> {
    debug_assert!(slope < 0.0, "line search needs a descent direction");
    let mut s = 1.0;
    for _ in 0..=max_backtracks {
        if eval(s) <= psi0 + mu * s * slope {
            return Ok(s);
        }
        s *= 0.5;
    }
    Err(Error::LineSearchStalled {
        backtracks: max_backtracks,
    })
}

/// Armijo line search along `d` from `y` on `psi`, with `mu` in `(0, 1/2)`.
pub fn line_search(
    y: &DVector<f64>,
    d: &DVector<f64>,
    state: &DualState,
    prob: &Problem,
    p: &Penalty,
    mu: f64,
    max_backtracks: usize,
) -> Result<f64> {
    assert!(mu > 0.0 && mu < 0.5, "mu must lie in (0, 1/2), got {mu}");
    let mut probe = state.clone();
    probe.y = y.clone();
    let psi0 = psi_value(&probe, prob, p);
    let slope = psi_gradient(&probe, prob, p).dot(d);
    if slope >= 0.0 {
        return Err(Error::InvalidParameter(
            "line search requires a descent direction".into(),
        ));
    }
    backtrack(
        psi0,
        slope,
        |s| {
            probe.y = y + d * s;
            psi_value(&probe, prob, p)
        },
        mu,
        max_backtracks,
    )
}

/// Result of one inner solve.
#[derive(Clone, Debug)]
pub struct InnerOutcome {
    pub newton_iters: usize,
    pub converged: bool,
    /// `||grad psi(y)|| / (1 + ||b||)` at the returned iterate; this is the
    /// first KKT residual once the multiplier is refreshed.
    pub res1: f64,
    /// Final `w = x - sigma * A^T y`; the caller derives the multiplier
    /// update `prox_{sigma p}(w)` from it without another full product.
    pub w: DVector<f64>,
}

/// Runs semi-smooth Newton steps on `psi` until the scaled gradient norm
/// drops below `inner_tol`, then refreshes `z` in place.
///
/// `A^T y` is maintained incrementally: each iteration spends one full
/// `m x n` product on `A^T d` and reuses it for every backtracking trial.
/// A stalled line search exits with `converged = false` so the outer loop
/// can raise `sigma` and retry.
pub fn inner_solve(
    state: &mut DualState,
    prob: &Problem,
    p: &Penalty,
    cfg: &SolverConfig,
    inner_tol: f64,
) -> Result<InnerOutcome> {
    let n = prob.n();
    let sigma = state.sigma;
    let b_scale = 1.0 + prob.b().norm();
    let mut aty = prob.a().tr_mul(&state.y);
    let mut w = DVector::zeros(n);
    let mut prox_w = DVector::zeros(n);
    let mut w_trial = DVector::zeros(n);

    let mut newton_iters = 0;
    let mut converged = false;
    let mut res1 = f64::INFINITY;
    let mut stalled = false;

    for _ in 0..=cfg.max_inner {
        w.copy_from(&state.x);
        w.axpy(-sigma, &aty, 1.0);
        p.prox_into(sigma, &w, &mut prox_w);

        let mut grad = mat_vec_sparse(prob.a(), &prox_w);
        grad *= -1.0;
        grad += &state.y;
        grad += prob.b();
        res1 = grad.norm() / b_scale;
        if res1 <= inner_tol {
            converged = true;
            break;
        }
        if newton_iters >= cfg.max_inner || stalled {
            break;
        }

        let act = extract_active_set(&w, sigma, p);
        let d = newton_direction(&act, prob, &grad, cfg)?;
        let slope = grad.dot(&d);
        debug_assert!(slope < 0.0, "Newton direction must be a descent direction");

        let atd = prob.a().tr_mul(&d);
        let h0 = h_star(&state.y, prob.b());
        let lin = state.y.dot(&d) + prob.b().dot(&d);
        let quad = 0.5 * d.norm_squared();
        let x_norm_sq = state.x.norm_squared();
        let psi0 = psi_from_prox_norm(h0, prox_w.norm_squared(), x_norm_sq, sigma, p);

        let step = backtrack(
            psi0,
            slope,
            |s| {
                w_trial.copy_from(&w);
                w_trial.axpy(-s * sigma, &atd, 1.0);
                let prox_norm_sq = w_trial
                    .iter()
                    .map(|&v| {
                        let t = p.prox_scalar(sigma, v);
                        t * t
                    })
                    .sum::<f64>();
                psi_from_prox_norm(
                    h0 + s * lin + s * s * quad,
                    prox_norm_sq,
                    x_norm_sq,
                    sigma,
                    p,
                )
            },
            cfg.mu,
            cfg.max_backtracks,
        );
        match step {
            Ok(s) => {
                state.y.axpy(s, &d, 1.0);
                aty.axpy(s, &atd, 1.0);
                newton_iters += 1;
            }
            Err(Error::LineSearchStalled { .. }) => {
                // at the numerical floor for this sigma; let the outer loop
                // raise it and retry
                stalled = true;
            }
            Err(e) => return Err(e),
        }
    }

    w.copy_from(&state.x);
    w.axpy(-sigma, &aty, 1.0);
    state.z = z_from_w(&w, sigma, p);
    Ok(InnerOutcome {
        newton_iters,
        converged,
        res1,
        w,
    })
}
