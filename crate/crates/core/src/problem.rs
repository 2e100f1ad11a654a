//! Regression problem data.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// A least-squares problem `0.5 * ||A x - b||_2^2` on the solver's scale,
/// together with the metadata needed to map coefficients back to the
/// original data scale.
///
/// `column_means` / `column_norms` are the shifts and divisors applied to
/// each design column and `b_mean` the shift applied to the response; a
/// problem built directly from raw arrays carries the identity transform.
#[derive(Clone, Debug)]
pub struct Problem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    column_means: DVector<f64>,
    column_norms: DVector<f64>,
    b_mean: f64,
}

/// Standardization transform of a [`Problem`], exported for reports.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleInfo {
    pub column_means: Vec<f64>,
    pub column_norms: Vec<f64>,
    pub b_mean: f64,
}

impl Problem {
    /// Wraps a design/response pair that is already on the solver's scale.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.ncols();
        Self::with_metadata(a, b, DVector::zeros(n), DVector::from_element(n, 1.0), 0.0)
    }

    /// Wraps a design/response pair plus the transform that produced it.
    pub fn with_metadata(
        a: DMatrix<f64>,
        b: DVector<f64>,
        column_means: DVector<f64>,
        column_norms: DVector<f64>,
        b_mean: f64,
    ) -> Result<Self> {
        let (m, n) = a.shape();
        if m < 2 || n < 1 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 rows and 1 column, got {m}x{n}"
            )));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "design has {m} rows but response has {} entries",
                b.len()
            )));
        }
        if column_means.len() != n || column_norms.len() != n {
            return Err(Error::DimensionMismatch(
                "standardization metadata length must match the column count".into(),
            ));
        }
        for j in 0..n {
            if a.column(j).iter().all(|&v| v == 0.0) {
                return Err(Error::DegenerateProblem(format!(
                    "design column {} is identically zero",
                    j + 1
                )));
            }
        }
        Ok(Self {
            a,
            b,
            column_means,
            column_norms,
            b_mean,
        })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn scale_info(&self) -> ScaleInfo {
        ScaleInfo {
            column_means: self.column_means.iter().copied().collect(),
            column_norms: self.column_norms.iter().copied().collect(),
            b_mean: self.b_mean,
        }
    }

    /// `||A^T b||_inf`, the critical penalty level above which the solution
    /// is identically zero.
    pub fn max_abs_atb(&self) -> f64 {
        self.a
            .tr_mul(&self.b)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Restriction of the problem to a subset of rows (used by
    /// cross-validation). Metadata is reset to the identity transform; the
    /// caller re-standardizes the restricted data.
    pub fn row_subset_raw(&self, rows: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(rows.len(), self.n());
        let mut b = DVector::zeros(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            a.row_mut(i).copy_from(&self.a.row(r));
            b[i] = self.b[r];
        }
        (a, b)
    }

    /// Maps solver-scale coefficients back to the original data scale,
    /// returning `(intercept, coefficients)`.
    pub fn unscale_coefficients(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut coeffs = DVector::zeros(self.n());
        let mut intercept = self.b_mean;
        for j in 0..self.n() {
            let c = x[j] / self.column_norms[j];
            coeffs[j] = c;
            intercept -= c * self.column_means[j];
        }
        (intercept, coeffs)
    }
}
