//! Data tooling: synthetic generation, LIBSVM and CSV ingestion, polynomial
//! basis expansion, standardization, and the collinearity gauge `rho_hat`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{largest_eig_aat, mat_vec_sparse};
use crate::problem::Problem;

/// Synthetic scenario: `b = A x_t + eps` with `A` iid standard normal,
/// `x_t` holding `n0` nonzero entries equal to `x_star`, and the noise scale
/// calibrated so that `var(A x_t) / s_eps^2 = snr`.
#[derive(Clone, Copy, Debug)]
pub struct SimSpec {
    pub m: usize,
    pub n: usize,
    pub n0: usize,
    pub x_star: f64,
    pub snr: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(m: usize, n: usize, n0: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            n0,
            x_star: 5.0,
            snr: 5.0,
            seed,
        }
    }
}

/// The three reference scenarios `(m, n0, alpha)`; `n` is chosen per run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `(500, 100, 0.6)`
    Sim1,
    /// `(500, 20, 0.75)`
    Sim2,
    /// `(500, 5, 0.9)`
    Sim3,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sim1" => Some(Preset::Sim1),
            "sim2" => Some(Preset::Sim2),
            "sim3" => Some(Preset::Sim3),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Sim1 => "sim1",
            Preset::Sim2 => "sim2",
            Preset::Sim3 => "sim3",
        }
    }

    pub fn m(&self) -> usize {
        500
    }

    pub fn n0(&self) -> usize {
        match self {
            Preset::Sim1 => 100,
            Preset::Sim2 => 20,
            Preset::Sim3 => 5,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Preset::Sim1 => 0.6,
            Preset::Sim2 => 0.75,
            Preset::Sim3 => 0.9,
        }
    }

    pub fn spec(&self, n: usize, seed: u64) -> SimSpec {
        SimSpec::new(self.m(), n, self.n0(), seed)
    }
}

/// A design/response pair before standardization, with optional generating
/// truth and a provenance tag.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Sparse generating coefficients as `(index, value)` pairs, when known.
    pub truth: Option<Vec<(usize, f64)>>,
    pub provenance: String,
}

impl Dataset {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Recomputed signal-to-noise ratio `var(A x_t) / var(b - A x_t)`;
    /// available only when the generating truth is recorded.
    pub fn realized_snr(&self) -> Option<f64> {
        let truth = self.truth.as_ref()?;
        let mut xt = DVector::zeros(self.n());
        for &(j, v) in truth {
            xt[j] = v;
        }
        let signal = mat_vec_sparse(&self.a, &xt);
        let noise = &self.b - &signal;
        Some(sample_variance(signal.as_slice()) / sample_variance(noise.as_slice()))
    }
}

fn sample_variance(v: &[f64]) -> f64 {
    let len = v.len();
    if len < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / len as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (len - 1) as f64
}

/// Draws a synthetic dataset. Deterministic per seed: identical specs give
/// bit-identical datasets.
pub fn generate(spec: &SimSpec) -> Result<Dataset> {
    if spec.m < 2 || spec.n < 1 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 2 and n >= 1, got m={}, n={}",
            spec.m, spec.n
        )));
    }
    if spec.n0 > spec.n {
        return Err(Error::InvalidParameter(format!(
            "n0 = {} exceeds n = {}",
            spec.n0, spec.n
        )));
    }
    if spec.n0 == 0 {
        return Err(Error::DegenerateProblem(
            "n0 = 0 leaves a pure-noise response; the snr calibration is undefined".into(),
        ));
    }
    if !(spec.snr > 0.0) {
        return Err(Error::InvalidParameter("snr must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // column-major fill keeps the draw order independent of matrix internals
    let a = DMatrix::from_iterator(
        spec.m,
        spec.n,
        std::iter::repeat_with(|| rng.sample::<f64, _>(StandardNormal)).take(spec.m * spec.n),
    );

    let mut indices: Vec<usize> = (0..spec.n).collect();
    indices.shuffle(&mut rng);
    let mut support: Vec<usize> = indices[..spec.n0].to_vec();
    support.sort_unstable();
    let truth: Vec<(usize, f64)> = support.iter().map(|&j| (j, spec.x_star)).collect();

    let mut signal = DVector::zeros(spec.m);
    for &(j, v) in &truth {
        signal.axpy(v, &a.column(j), 1.0);
    }
    let signal_var = sample_variance(signal.as_slice());
    if signal_var == 0.0 {
        return Err(Error::DegenerateProblem(
            "generated signal has zero variance; cannot calibrate noise".into(),
        ));
    }
    let s_eps = (signal_var / spec.snr).sqrt();
    let b = DVector::from_iterator(
        spec.m,
        (0..spec.m).map(|i| signal[i] + s_eps * rng.sample::<f64, _>(StandardNormal)),
    );

    Ok(Dataset {
        a,
        b,
        truth: Some(truth),
        provenance: format!(
            "sim(m={}, n={}, n0={}, x_star={}, snr={}, seed={})",
            spec.m, spec.n, spec.n0, spec.x_star, spec.snr, spec.seed
        ),
    })
}

/// Reads a LIBSVM-format regression file: one `label idx:val idx:val ...`
/// line per observation with 1-based strictly ascending indices. Absent
/// entries are zero; blank lines are skipped.
pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path)?;
    let reader = BufReader::new(file);

    let mut labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    let parse_err = |line: usize, message: String| Error::Parse {
        path: display.clone(),
        line,
        message,
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let label = match tokens.next() {
            None => continue, // blank line
            Some(tok) => tok.parse::<f64>().map_err(|_| {
                parse_err(lineno, format!("expected a numeric label, got `{tok}`"))
            })?,
        };
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut prev_index = 0usize;
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| {
                parse_err(lineno, format!("expected `index:value`, got `{tok}`"))
            })?;
            let idx: usize = idx_str.parse().map_err(|_| {
                parse_err(lineno, format!("invalid feature index `{idx_str}`"))
            })?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val_str.parse().map_err(|_| {
                parse_err(lineno, format!("invalid feature value `{val_str}`"))
            })?;
            if idx == prev_index {
                return Err(parse_err(lineno, format!("duplicate feature index {idx}")));
            }
            if idx < prev_index {
                return Err(parse_err(
                    lineno,
                    format!("feature indices must ascend, got {idx} after {prev_index}"),
                ));
            }
            prev_index = idx;
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        labels.push(label);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(parse_err(0, "file holds no observations".into()));
    }
    if max_index == 0 {
        return Err(parse_err(0, "file holds no features".into()));
    }

    let m = rows.len();
    let mut a = DMatrix::zeros(m, max_index);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            a[(i, j)] = v;
        }
    }
    Ok(Dataset {
        a,
        b: DVector::from_vec(labels),
        truth: None,
        provenance: format!("libsvm({display})"),
    })
}

/// Reads a comma-separated numeric matrix. A non-numeric first row is
/// treated as a header and skipped.
pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path)?;
    let reader = BufReader::new(file);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if width == 0 {
                    width = values.len();
                } else if values.len() != width {
                    return Err(Error::Parse {
                        path: display,
                        line: lineno,
                        message: format!("expected {width} fields, got {}", values.len()),
                    });
                }
                rows.push(values);
            }
            Err(_) if rows.is_empty() && lineno == 1 => continue, // header
            Err(e) => {
                return Err(Error::Parse {
                    path: display,
                    line: lineno,
                    message: e.to_string(),
                });
            }
        }
    }
    if rows.is_empty() || width == 0 {
        return Err(Error::Parse {
            path: display,
            line: 0,
            message: "no numeric rows".into(),
        });
    }
    let m = rows.len();
    Ok(DMatrix::from_fn(m, width, |i, j| rows[i][j]))
}

/// Reads a plain text vector, one value per line.
pub fn read_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
            path: display.clone(),
            line: lineno + 1,
            message: e.to_string(),
        })?);
    }
    Ok(DVector::from_vec(values))
}

/// Number of monomials of total degree 1..=d over p variables:
/// `C(p + d, d) - 1`.
pub fn poly_expanded_columns(p: usize, degree: usize) -> u128 {
    // C(p + d, d) computed multiplicatively in u128
    let mut c: u128 = 1;
    for k in 1..=degree {
        c = c * (p + k) as u128 / k as u128;
    }
    c - 1
}

/// Iterates the exponent multisets of all monomials of total degree 1..=d
/// in graded-lexicographic order: each item is a nondecreasing list of
/// variable indices whose product forms the monomial.
fn monomial_indices(p: usize, degree: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=degree).flat_map(move |t| {
        let mut current: Option<Vec<usize>> = Some(vec![0; t]);
        std::iter::from_fn(move || {
            let item = current.take()?;
            // advance the nondecreasing odometer
            let mut next = item.clone();
            let mut pos = t;
            while pos > 0 {
                if next[pos - 1] + 1 < p {
                    let v = next[pos - 1] + 1;
                    for slot in next.iter_mut().skip(pos - 1) {
                        *slot = v;
                    }
                    current = Some(next);
                    return Some(item);
                }
                pos -= 1;
            }
            Some(item)
        })
    })
}

/// Expands a design matrix into all monomials of total degree 1..=degree in
/// graded-lexicographic column order, without a constant column.
///
/// The column count is checked against `max_columns` before any allocation.
pub fn poly_expand(a: &DMatrix<f64>, degree: usize, max_columns: usize) -> Result<DMatrix<f64>> {
    if degree < 1 {
        return Err(Error::InvalidParameter(
            "expansion degree must be at least 1".into(),
        ));
    }
    let p = a.ncols();
    let total = poly_expanded_columns(p, degree);
    if total > max_columns as u128 {
        return Err(Error::ExpansionTooLarge {
            degree,
            features: p,
            columns: total,
            cap: max_columns,
        });
    }
    let total = total as usize;
    let m = a.nrows();
    let mut out = DMatrix::zeros(m, total);
    for (col, indices) in monomial_indices(p, degree).enumerate() {
        // product of the source columns named by the exponent multiset
        let mut column = a.column(indices[0]).clone_owned();
        for &j in &indices[1..] {
            column.component_mul_assign(&a.column(j));
        }
        out.set_column(col, &column);
    }
    Ok(out)
}

/// Result of standardization, beyond the [`Problem`] itself.
#[derive(Clone, Debug, Default)]
pub struct StandardizeInfo {
    /// 0-based indices of dropped constant columns (in the original layout).
    pub dropped: Vec<usize>,
    /// Original index of each kept column.
    pub kept: Vec<usize>,
}

/// Standardizes a dataset: every kept column has zero mean and unit standard
/// deviation (divisor `m`), the response is centered, and constant columns
/// are dropped. The metadata stored in the returned [`Problem`] maps
/// solver-scale coefficients back to the original data scale.
pub fn standardize(ds: &Dataset) -> Result<(Problem, StandardizeInfo)> {
    let m = ds.m();
    let n = ds.n();
    if m < 2 {
        return Err(Error::DimensionMismatch(
            "standardization needs at least 2 rows".into(),
        ));
    }

    let mut kept = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    let mut means = Vec::with_capacity(n);
    let mut sds = Vec::with_capacity(n);
    for j in 0..n {
        let col = ds.a.column(j);
        let mean = col.sum() / m as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        let sd = var.sqrt();
        if sd <= 1e-12 * (1.0 + mean.abs()) {
            dropped.push(j);
        } else {
            kept.push(j);
            means.push(mean);
            sds.push(sd);
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateProblem(
            "every design column is constant".into(),
        ));
    }

    let mut a = DMatrix::zeros(m, kept.len());
    for (c, (&j, (&mean, &sd))) in kept.iter().zip(means.iter().zip(sds.iter())).enumerate() {
        let col = ds.a.column(j);
        for i in 0..m {
            a[(i, c)] = (col[i] - mean) / sd;
        }
    }
    let b_mean = ds.b.sum() / m as f64;
    let b = ds.b.map(|v| v - b_mean);

    let prob = Problem::with_metadata(
        a,
        b,
        DVector::from_vec(means),
        DVector::from_vec(sds),
        b_mean,
    )?;
    Ok((prob, StandardizeInfo { dropped, kept }))
}

/// Collinearity gauge: the largest eigenvalue of `A A^T` divided by the
/// number of features, estimated by power iteration (relative tolerance
/// `1e-6`).
pub fn rho_hat(ds: &Dataset) -> f64 {
    largest_eig_aat(&ds.a, 1e-6, 10_000) / ds.n() as f64
}
