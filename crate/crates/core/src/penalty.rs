//! Elastic Net penalty kernels.
//!
//! The penalty is `p(x) = lambda1 * ||x||_1 + (lambda2 / 2) * ||x||_2^2`.
//! This module provides its value, its Fenchel conjugate `p*`, and the two
//! proximal operators `prox_{sigma p}` and `prox_{p*/sigma}` that the dual
//! solver is built on. All kernels are componentwise, allocation-aware and
//! deterministic; `lambda2 = 0` recovers the plain Lasso forms.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Elastic Net penalty weights.
///
/// Invariant: both weights are nonnegative and they are not both zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty {
    lambda1: f64,
    lambda2: f64,
}

/// Value of the conjugate penalty `p*(z)`.
///
/// For `lambda2 = 0` the conjugate is the indicator of the box
/// `||z||_inf <= lambda1`: zero inside, infinite outside. The infinite case
/// is a distinguished variant rather than an IEEE infinity so callers cannot
/// silently propagate it through arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConjugateValue {
    Finite(f64),
    Infinite,
}

impl ConjugateValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, ConjugateValue::Finite(_))
    }

    /// Collapses to an `f64`, mapping `Infinite` to `f64::INFINITY`.
    pub fn as_f64(&self) -> f64 {
        match self {
            ConjugateValue::Finite(v) => *v,
            ConjugateValue::Infinite => f64::INFINITY,
        }
    }
}

/// Soft-thresholding kernel `S(v, t) = sign(v) * max(|v| - t, 0)`.
///
/// Ties `|v| = t` map to exactly zero.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl Penalty {
    /// Builds a penalty from explicit `(lambda1, lambda2)` weights.
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0) || !(lambda2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty weights must be nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        if lambda1 == 0.0 && lambda2 == 0.0 {
            return Err(Error::InvalidParameter(
                "penalty weights must not both be zero".into(),
            ));
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Builds a penalty from the mixing parameterization
    /// `lambda1 = alpha * c_lambda * lambda_max`,
    /// `lambda2 = (1 - alpha) * c_lambda * lambda_max`.
    pub fn from_mixing(alpha: f64, c_lambda: f64, lambda_max: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(c_lambda > 0.0 && c_lambda <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "c_lambda must lie in (0, 1], got {c_lambda}"
            )));
        }
        if !(lambda_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        Self::new(
            alpha * c_lambda * lambda_max,
            (1.0 - alpha) * c_lambda * lambda_max,
        )
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// True when `lambda2 = 0` and the penalty reduces to the Lasso.
    pub fn is_lasso(&self) -> bool {
        self.lambda2 == 0.0
    }

    /// Penalty value `lambda1 * ||x||_1 + (lambda2 / 2) * ||x||_2^2`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let l2: f64 = x.iter().map(|v| v * v).sum();
        self.lambda1 * l1 + 0.5 * self.lambda2 * l2
    }

    /// Conjugate value `p*(z)`.
    ///
    /// For `lambda2 > 0` this is `(1 / (2 lambda2)) * sum_i ((|z_i| - lambda1)_+)^2`,
    /// finite everywhere and zero on the box `||z||_inf <= lambda1`. For
    /// `lambda2 = 0` it is the box indicator.
    pub fn conjugate_value(&self, z: &DVector<f64>) -> ConjugateValue {
        if self.lambda2 == 0.0 {
            let inside = z.iter().all(|v| v.abs() <= self.lambda1);
            return if inside {
                ConjugateValue::Finite(0.0)
            } else {
                ConjugateValue::Infinite
            };
        }
        let mut acc = 0.0;
        for &zi in z.iter() {
            let excess = zi.abs() - self.lambda1;
            if excess > 0.0 {
                acc += excess * excess;
            }
        }
        ConjugateValue::Finite(acc / (2.0 * self.lambda2))
    }

    /// Componentwise proximal kernel of `sigma * p` at a scalar.
    #[inline]
    pub fn prox_scalar(&self, sigma: f64, v: f64) -> f64 {
        soft_threshold(v, sigma * self.lambda1) / (1.0 + sigma * self.lambda2)
    }

    /// Proximal operator `prox_{sigma p}(x)`: soft-thresholding at
    /// `sigma * lambda1` followed by the `1 / (1 + sigma * lambda2)` shrink.
    pub fn prox(&self, sigma: f64, x: &DVector<f64>) -> DVector<f64> {
        assert!(sigma > 0.0, "prox requires sigma > 0, got {sigma}");
        DVector::from_iterator(x.len(), x.iter().map(|&v| self.prox_scalar(sigma, v)))
    }

    /// In-place variant of [`Penalty::prox`] for pre-allocated buffers.
    pub fn prox_into(&self, sigma: f64, x: &DVector<f64>, out: &mut DVector<f64>) {
        assert!(sigma > 0.0, "prox requires sigma > 0, got {sigma}");
        debug_assert_eq!(x.len(), out.len());
        for (o, &v) in out.iter_mut().zip(x.iter()) {
            *o = self.prox_scalar(sigma, v);
        }
    }

    /// Componentwise kernel of `prox_{p*/sigma}` at a scalar.
    ///
    /// `u` follows the evaluation-point convention: the solver calls this at
    /// `u = x / sigma`. For `lambda2 = 0` it clamps onto `[-lambda1, lambda1]`.
    #[inline]
    pub fn prox_conjugate_scalar(&self, sigma: f64, u: f64) -> f64 {
        let shrink = 1.0 + sigma * self.lambda2;
        if u > self.lambda1 {
            (sigma * self.lambda2 * u + self.lambda1) / shrink
        } else if u < -self.lambda1 {
            (sigma * self.lambda2 * u - self.lambda1) / shrink
        } else {
            u
        }
    }

    /// Proximal operator of the scaled conjugate, `prox_{p*/sigma}(u)`.
    ///
    /// Satisfies the Moreau decomposition
    /// `x = prox_{sigma p}(x) + sigma * prox_{p*/sigma}(x / sigma)`.
    pub fn prox_conjugate(&self, sigma: f64, u: &DVector<f64>) -> DVector<f64> {
        assert!(sigma > 0.0, "prox requires sigma > 0, got {sigma}");
        DVector::from_iterator(
            u.len(),
            u.iter().map(|&v| self.prox_conjugate_scalar(sigma, v)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec1(v: f64) -> DVector<f64> {
        DVector::from_vec(vec![v])
    }

    #[test]
    fn penalty_rejects_bad_weights() {
        assert!(Penalty::new(-1.0, 0.0).is_err());
        assert!(Penalty::new(0.0, -1.0).is_err());
        assert!(Penalty::new(0.0, 0.0).is_err());
        assert!(Penalty::new(0.0, 1.0).is_ok());
        assert!(Penalty::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn mixing_parameterization_matches_definition() {
        let p = Penalty::from_mixing(0.6, 0.5, 10.0).unwrap();
        assert_eq!(p.lambda1(), 0.6 * 0.5 * 10.0);
        assert_eq!(p.lambda2(), 0.4 * 0.5 * 10.0);
        assert!(Penalty::from_mixing(0.0, 0.5, 10.0).is_err());
        assert!(Penalty::from_mixing(0.5, 0.0, 10.0).is_err());
        assert!(Penalty::from_mixing(0.5, 0.5, 0.0).is_err());
        // alpha = 1 is pure Lasso
        assert!(Penalty::from_mixing(1.0, 1.0, 3.0).unwrap().is_lasso());
    }

    #[test]
    fn penalty_value_examples() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.value(&DVector::from_vec(vec![0.0, 0.0])), 0.0);
        // 3 + 9/2
        assert_eq!(p.value(&vec1(3.0)), 7.5);
        let lasso = Penalty::new(1.0, 0.0).unwrap();
        assert_eq!(lasso.value(&DVector::from_vec(vec![-2.0, 1.0])), 3.0);
    }

    #[test]
    fn conjugate_value_examples() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.conjugate_value(&vec1(0.5)), ConjugateValue::Finite(0.0));
        assert_eq!(p.conjugate_value(&vec1(3.0)), ConjugateValue::Finite(2.0));
        assert_eq!(p.conjugate_value(&vec1(-3.0)), ConjugateValue::Finite(2.0));
    }

    #[test]
    fn lasso_conjugate_is_box_indicator() {
        let p = Penalty::new(1.0, 0.0).unwrap();
        assert_eq!(
            p.conjugate_value(&DVector::from_vec(vec![0.3, -1.0])),
            ConjugateValue::Finite(0.0)
        );
        let outside = p.conjugate_value(&DVector::from_vec(vec![0.3, -1.5]));
        assert_eq!(outside, ConjugateValue::Infinite);
        assert!(outside.as_f64().is_infinite());
    }

    #[test]
    fn prox_examples() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.prox(1.0, &vec1(3.0))[0], 1.0);
        assert_eq!(p.prox(1.0, &vec1(0.5))[0], 0.0);
        // threshold tie maps to zero
        assert_eq!(p.prox(1.0, &vec1(1.0))[0], 0.0);
        let lasso = Penalty::new(1.0, 0.0).unwrap();
        assert_eq!(lasso.prox(1.0, &vec1(3.0))[0], 2.0);
    }

    #[test]
    fn prox_conjugate_examples() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.prox_conjugate(1.0, &vec1(3.0))[0], 2.0);
        assert_eq!(p.prox_conjugate(1.0, &vec1(0.5))[0], 0.5);
        assert_eq!(p.prox_conjugate(1.0, &vec1(-3.0))[0], -2.0);
        // lambda2 = 0 clamps onto the box
        let lasso = Penalty::new(1.0, 0.0).unwrap();
        assert_eq!(lasso.prox_conjugate(1.0, &vec1(3.0))[0], 1.0);
        assert_eq!(lasso.prox_conjugate(1.0, &vec1(-3.0))[0], -1.0);
    }

    /// Brute-force conjugate: dense 1-D grid supremum of `z*x - p(x)`.
    fn conjugate_grid_sup(p: &Penalty, z: f64) -> f64 {
        // maximizer sits at (|z| - l1)_+ / l2 for l2 > 0; widen well past it
        let reach = if p.lambda2() > 0.0 {
            ((z.abs() - p.lambda1()).max(0.0) / p.lambda2()).max(1.0) * 2.0
        } else {
            4.0
        };
        let steps = 40_000;
        let mut best = f64::NEG_INFINITY;
        for k in 0..=steps {
            let x = -reach + 2.0 * reach * (k as f64) / (steps as f64);
            let val = z * x - p.value(&vec1(x));
            if val > best {
                best = val;
            }
        }
        best
    }

    #[test]
    fn conjugate_matches_grid_supremum() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        for &z in &[0.0, 0.5, 1.0, 1.5, 3.0, -3.0, 7.25] {
            let exact = p.conjugate_value(&vec1(z)).as_f64();
            let grid = conjugate_grid_sup(&p, z);
            assert!(
                (exact - grid).abs() <= 1e-4,
                "z = {z}: exact {exact} vs grid {grid}"
            );
        }
    }

    proptest! {
        #[test]
        fn moreau_decomposition_holds(
            x in -50.0f64..50.0,
            sigma in 1e-3f64..10.0,
            l1 in 0.0f64..5.0,
            l2 in 1e-6f64..5.0,
        ) {
            let p = Penalty::new(l1, l2).unwrap();
            let prox = p.prox_scalar(sigma, x);
            let conj = p.prox_conjugate_scalar(sigma, x / sigma);
            let recon = prox + sigma * conj;
            prop_assert!((recon - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }

        #[test]
        fn fenchel_young_inequality(
            x in -10.0f64..10.0,
            z in -10.0f64..10.0,
            l1 in 0.0f64..3.0,
            l2 in 1e-6f64..3.0,
        ) {
            let p = Penalty::new(l1, l2).unwrap();
            let lhs = p.value(&vec1(x)) + p.conjugate_value(&vec1(z)).as_f64();
            prop_assert!(lhs >= z * x - 1e-10);
        }

        #[test]
        fn fenchel_young_equality_at_subgradient(
            x in prop::collection::vec(0.1f64..10.0, 1..6),
            signs in prop::collection::vec(prop::bool::ANY, 6),
            l1 in 0.0f64..3.0,
            l2 in 1e-3f64..3.0,
        ) {
            let x = DVector::from_iterator(
                x.len(),
                x.iter().zip(signs.iter()).map(|(v, s)| if *s { *v } else { -*v }),
            );
            let p = Penalty::new(l1, l2).unwrap();
            let z = x.map(|v| l1 * v.signum() + l2 * v);
            let gap = p.value(&x) + p.conjugate_value(&z).as_f64() - z.dot(&x);
            prop_assert!(gap.abs() <= 1e-10 * (1.0 + p.value(&x)));
        }

        #[test]
        fn prox_is_monotone_and_contractive(
            a in -20.0f64..20.0,
            b in -20.0f64..20.0,
            sigma in 1e-3f64..10.0,
            l1 in 0.0f64..5.0,
            l2 in 0.0f64..5.0,
        ) {
            prop_assume!(l1 + l2 > 0.0);
            let p = Penalty::new(l1, l2).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (plo, phi) = (p.prox_scalar(sigma, lo), p.prox_scalar(sigma, hi));
            prop_assert!(phi >= plo);
            let lip = 1.0 / (1.0 + sigma * l2);
            prop_assert!(phi - plo <= lip * (hi - lo) + 1e-12);
        }
    }
}
