//! Dual augmented Lagrangian machinery.
//!
//! The dual of the Elastic Net problem constrains `A^T y + z = 0` and the
//! augmented Lagrangian moves the constraint into the objective with
//! multiplier `x` and parameter `sigma`:
//!
//! ```text
//! L_sigma(y, z, x) = h*(y) + p*(z) - x^T (A^T y + z) + (sigma/2) ||A^T y + z||^2
//! ```
//!
//! with `h*(y) = 0.5 * ||y||^2 + b^T y`. Minimizing jointly over `(y, z)`
//! collapses to the smooth function `psi(y)` below; `z` then follows from a
//! single conjugate-prox evaluation. Everything here is pure in the state,
//! so solves over different states can run concurrently.

use nalgebra::DVector;
use serde::Serialize;

use crate::linalg::mat_vec_sparse;
use crate::penalty::Penalty;
use crate::problem::Problem;

/// Dual iterate `(y, z)`, the Lagrange multiplier `x` (the primal iterate),
/// and the augmented Lagrangian parameter `sigma`.
#[derive(Clone, Debug)]
pub struct DualState {
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub x: DVector<f64>,
    pub sigma: f64,
}

impl DualState {
    /// Cold-start state: all vectors zero.
    pub fn zeros(m: usize, n: usize, sigma: f64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive, got {sigma}");
        Self {
            y: DVector::zeros(m),
            z: DVector::zeros(n),
            x: DVector::zeros(n),
            sigma,
        }
    }

    pub fn dims_match(&self, prob: &Problem) -> bool {
        self.y.len() == prob.m() && self.z.len() == prob.n() && self.x.len() == prob.n()
    }
}

/// Conjugate of the least-squares loss: `h*(y) = 0.5 * ||y||^2 + b^T y`.
///
/// Its gradient is `y + b`.
pub fn h_star(y: &DVector<f64>, b: &DVector<f64>) -> f64 {
    debug_assert_eq!(y.len(), b.len());
    0.5 * y.norm_squared() + b.dot(y)
}

/// The shared intermediate `w = x - sigma * A^T y`.
///
/// Every dual operation below is a cheap function of `w`; the inner solver
/// computes it once per iterate and reuses it.
pub(crate) fn w_vector(state: &DualState, prob: &Problem) -> DVector<f64> {
    let mut w = prob.a().tr_mul(&state.y);
    w *= -state.sigma;
    w += &state.x;
    w
}

pub(crate) fn psi_from_prox_norm(
    h_star_y: f64,
    prox_w_norm_sq: f64,
    x_norm_sq: f64,
    sigma: f64,
    p: &Penalty,
) -> f64 {
    h_star_y + (1.0 + sigma * p.lambda2()) / (2.0 * sigma) * prox_w_norm_sq
        - x_norm_sq / (2.0 * sigma)
}

/// `psi(y) = h*(y) + (1 + sigma*lambda2)/(2 sigma) * ||prox_{sigma p}(w)||^2
///           - ||x||^2 / (2 sigma)`, the inner objective in `y` alone.
pub fn psi_value(state: &DualState, prob: &Problem, p: &Penalty) -> f64 {
    let w = w_vector(state, prob);
    let prox_w = p.prox(state.sigma, &w);
    psi_from_prox_norm(
        h_star(&state.y, prob.b()),
        prox_w.norm_squared(),
        state.x.norm_squared(),
        state.sigma,
        p,
    )
}

/// `grad psi(y) = y + b - A * prox_{sigma p}(w)`.
pub fn psi_gradient(state: &DualState, prob: &Problem, p: &Penalty) -> DVector<f64> {
    let w = w_vector(state, prob);
    let prox_w = p.prox(state.sigma, &w);
    let mut grad = mat_vec_sparse(prob.a(), &prox_w);
    grad *= -1.0;
    grad += &state.y;
    grad += prob.b();
    grad
}

/// Closed-form minimizer over `z`: `z = prox_{p*/sigma}(x/sigma - A^T y)`.
pub fn z_update(state: &DualState, prob: &Problem, p: &Penalty) -> DVector<f64> {
    let w = w_vector(state, prob);
    z_from_w(&w, state.sigma, p)
}

pub(crate) fn z_from_w(w: &DVector<f64>, sigma: f64, p: &Penalty) -> DVector<f64> {
    DVector::from_iterator(
        w.len(),
        w.iter().map(|&wi| p.prox_conjugate_scalar(sigma, wi / sigma)),
    )
}

/// Multiplier step `x+ = x - sigma * (A^T y + z)`.
///
/// With `z` from [`z_update`] this equals `prox_{sigma p}(w)` by the Moreau
/// decomposition, so the new multiplier inherits the prox's exact sparsity.
pub fn multiplier_update(state: &DualState, prob: &Problem) -> DVector<f64> {
    let mut step = prob.a().tr_mul(&state.y);
    step += &state.z;
    let mut x = state.x.clone();
    x.axpy(-state.sigma, &step, 1.0);
    x
}

/// Normalized residuals of the first and third KKT equations.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KktResiduals {
    /// `||A^T y + z|| / (1 + ||y|| + ||z||)`; drives outer convergence.
    pub res3: f64,
    /// `||y + b - A x|| / (1 + ||b||)`; drives inner convergence.
    pub res1: f64,
}

pub fn kkt_residuals(state: &DualState, prob: &Problem) -> KktResiduals {
    let mut feas = prob.a().tr_mul(&state.y);
    feas += &state.z;
    let res3 = feas.norm() / (1.0 + state.y.norm() + state.z.norm());

    let mut grad = mat_vec_sparse(prob.a(), &state.x);
    grad *= -1.0;
    grad += &state.y;
    grad += prob.b();
    let res1 = grad.norm() / (1.0 + prob.b().norm());

    KktResiduals { res3, res1 }
}

/// Dual objective `-(h*(y) + p*(z))`; meets the primal objective at the
/// optimum, so the sum of the two is the duality gap.
pub fn dual_objective(state: &DualState, prob: &Problem, p: &Penalty) -> f64 {
    -(h_star(&state.y, prob.b()) + p.conjugate_value(&state.z).as_f64())
}
