//! Timing harness: replicated scenario cells with mean and standard error,
//! plus the `c_lambda` calibration that targets a given active-set size.
//!
//! A cell fixes `(preset, n)`, calibrates the largest `c_lambda` whose
//! solution has the preset's `n0` active components on the first
//! replication, keeps it fixed, and then times one solve per replication on
//! freshly drawn data. The proximal-gradient oracle is timed on the first
//! few replications with a time-to-equal-objective stopping rule: if its
//! iteration cap is hit first, its time is a lower bound and the reported
//! speedup is conservative.

use std::time::Instant;

use crate::data::{generate, rho_hat, standardize, Preset};
use crate::error::{Error, Result};
use crate::oracle::{prox_grad_solve, OracleConfig, OracleMethod};
use crate::problem::Problem;
use crate::select::build_grid;
use crate::solver::{solve, SolverConfig};

/// How a benchmark cell is replicated.
#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    /// Solver replications per cell; each draws fresh data.
    pub reps: usize,
    /// Oracle replications (first `oracle_reps` data draws); 0 skips it.
    pub oracle_reps: usize,
    /// Iteration cap for the oracle; reaching it flags the timing as a
    /// lower bound.
    pub oracle_max_iters: usize,
    /// Override of the preset's `m` (the presets fix `m = 500`).
    pub m: Option<usize>,
    /// Override of the preset's mixing `alpha`.
    pub alpha: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 20,
            oracle_reps: 2,
            oracle_max_iters: 2_000,
            m: None,
            alpha: None,
        }
    }
}

/// One `(scenario, n)` cell of the timing table.
#[derive(Clone, Debug)]
pub struct BenchCell {
    pub preset: &'static str,
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub c_lambda: f64,
    /// Active-set size of the calibration solve.
    pub r: usize,
    pub rho_hat: f64,
    pub solver_times: Vec<f64>,
    pub solver_outer_iters: Vec<usize>,
    pub oracle_times: Vec<f64>,
    /// Relative objective gap oracle-vs-solver on the replications where the
    /// oracle ran (largest observed).
    pub oracle_gap: f64,
    /// False when the oracle hit its iteration cap before matching the
    /// solver's objective, making its timing a lower bound.
    pub oracle_reached_target: bool,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean; `None` below two samples.
pub fn standard_error(values: &[f64]) -> Option<f64> {
    let k = values.len();
    if k < 2 {
        return None;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k as f64 - 1.0);
    Some((var / k as f64).sqrt())
}

impl BenchCell {
    pub fn mean_time(&self) -> f64 {
        mean(&self.solver_times)
    }

    pub fn se_time(&self) -> Option<f64> {
        standard_error(&self.solver_times)
    }

    pub fn oracle_mean_time(&self) -> Option<f64> {
        (!self.oracle_times.is_empty()).then(|| mean(&self.oracle_times))
    }

    pub fn oracle_se_time(&self) -> Option<f64> {
        standard_error(&self.oracle_times)
    }

    /// Oracle mean time over solver mean time; a lower bound when the
    /// oracle was truncated.
    pub fn speedup(&self) -> Option<f64> {
        self.oracle_mean_time().map(|o| o / self.mean_time())
    }
}

/// Calibrated `c_lambda` for a target active-set size.
#[derive(Clone, Copy, Debug)]
pub struct CalibratedC {
    pub c: f64,
    pub r: usize,
}

/// Finds the largest `c_lambda` whose solution has `target_r` active
/// components: a warm-started coarse sweep brackets the boundary of
/// `{ c : r(c) >= target_r }`, then bisection sharpens it. If the active-set
/// size jumps past `target_r`, the closest value from above is returned.
pub fn find_clambda_for_target(
    prob: &Problem,
    alpha: f64,
    target_r: usize,
    cfg: &SolverConfig,
) -> Result<CalibratedC> {
    let grid = build_grid(prob, alpha, 30, 5e-3, None)?;
    let mut carry = None;
    let mut bracket: Option<(f64, f64)> = None; // (c with r < target, c with r >= target)
    let mut found: Option<CalibratedC> = None;
    let mut prev_c = 1.0;
    for &c in &grid.c_values {
        let p = grid.penalty(c)?;
        let sol = solve(prob, &p, cfg, carry.take())?;
        let r = sol.r();
        carry = Some(sol.state);
        if r >= target_r {
            if r == target_r {
                found = Some(CalibratedC { c, r });
            }
            bracket = Some((prev_c, c));
            break;
        }
        prev_c = c;
    }
    let Some((mut hi, mut lo)) = bracket else {
        return Err(Error::DegenerateProblem(format!(
            "no c_lambda above {:.0e} activates {target_r} features",
            grid.c_values.last().unwrap()
        )));
    };

    // push the boundary toward the largest c still reaching the target
    let mut best = found.unwrap_or(CalibratedC { c: lo, r: target_r });
    let mut warm = carry;
    for _ in 0..20 {
        if hi / lo <= 1.0 + 1e-4 {
            break;
        }
        let mid = (hi * lo).sqrt();
        let p = grid.penalty(mid)?;
        let sol = solve(prob, &p, cfg, warm.clone())?;
        let r = sol.r();
        warm = Some(sol.state);
        if r >= target_r {
            lo = mid;
            best = CalibratedC { c: mid, r };
        } else {
            hi = mid;
        }
    }
    if best.r != target_r {
        // report the sharpest bracket point even when r jumps past target
        let p = grid.penalty(lo)?;
        let sol = solve(prob, &p, cfg, warm)?;
        best = CalibratedC { c: lo, r: sol.r() };
    }
    Ok(best)
}

/// Runs one timing cell: calibrate on replication 0, then time a solve per
/// replication on fresh data (the oracle on the first `oracle_reps` of
/// them). Everything except the wall times is seed-deterministic.
pub fn run_cell(
    preset: Preset,
    n: usize,
    bench: &BenchConfig,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<BenchCell> {
    if bench.reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let alpha = bench.alpha.unwrap_or(preset.alpha());
    let target_r = preset.n0();
    let mut spec = preset.spec(n, seed);
    if let Some(m) = bench.m {
        spec.m = m;
    }

    let mut calibrated: Option<CalibratedC> = None;
    let mut rho = 0.0;
    let mut r_first = 0;
    let mut solver_times = Vec::with_capacity(bench.reps);
    let mut solver_outer_iters = Vec::with_capacity(bench.reps);
    let mut oracle_times = Vec::new();
    let mut oracle_gap = 0.0f64;
    let mut oracle_reached_target = true;

    for rep in 0..bench.reps {
        let mut rep_spec = spec;
        rep_spec.seed = seed.wrapping_add(rep as u64);
        let ds = generate(&rep_spec)?;
        if rep == 0 {
            rho = rho_hat(&ds);
        }
        let (prob, _) = standardize(&ds)?;
        drop(ds);

        let cal = match calibrated {
            Some(c) => c,
            None => {
                let c = find_clambda_for_target(&prob, alpha, target_r, cfg)?;
                r_first = c.r;
                calibrated = Some(c);
                c
            }
        };
        let lambda_max = prob.max_abs_atb() / alpha;
        let p = crate::penalty::Penalty::from_mixing(alpha, cal.c, lambda_max)?;

        let t0 = Instant::now();
        let sol = solve(&prob, &p, cfg, None)?;
        solver_times.push(t0.elapsed().as_secs_f64());
        solver_outer_iters.push(sol.outer_iters);

        if rep < bench.oracle_reps {
            let ocfg = OracleConfig {
                max_iters: bench.oracle_max_iters,
                tol: 1e-14,
                method: OracleMethod::ProxGrad,
                target_objective: Some(
                    sol.primal_objective + 1e-6 * (1.0 + sol.primal_objective.abs()),
                ),
            };
            let t0 = Instant::now();
            let orc = prox_grad_solve(&prob, &p, &ocfg)?;
            oracle_times.push(t0.elapsed().as_secs_f64());
            let gap = (orc.objective - sol.primal_objective).abs()
                / (1.0 + sol.primal_objective.abs());
            oracle_gap = oracle_gap.max(gap);
            if !orc.converged {
                oracle_reached_target = false;
            }
        }
    }

    let cal = calibrated.unwrap();
    Ok(BenchCell {
        preset: preset.name(),
        m: spec.m,
        n,
        alpha,
        c_lambda: cal.c,
        r: r_first,
        rho_hat: rho,
        solver_times,
        solver_outer_iters,
        oracle_times,
        oracle_gap,
        oracle_reached_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SimSpec;

    #[test]
    fn mean_and_se() {
        assert_eq!(mean(&[1.0, 3.0]), 2.0);
        assert_eq!(standard_error(&[1.0]), None);
        let se = standard_error(&[1.0, 3.0]).unwrap();
        // sd = sqrt(2), se = sd / sqrt(2) = 1
        assert!((se - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn calibration_hits_target_active_set() {
        let ds = generate(&SimSpec::new(60, 400, 6, 3)).unwrap();
        let (prob, _) = standardize(&ds).unwrap();
        let cfg = SolverConfig::default();
        let cal = find_clambda_for_target(&prob, 0.9, 6, &cfg).unwrap();
        assert_eq!(cal.r, 6, "calibrated r = {}", cal.r);
        // verify the calibration by solving at the returned c
        let p = crate::penalty::Penalty::from_mixing(0.9, cal.c, prob.max_abs_atb() / 0.9)
            .unwrap();
        let sol = solve(&prob, &p, &cfg, None).unwrap();
        assert_eq!(sol.r(), 6);
    }

    #[test]
    fn small_cell_runs_and_reports() {
        let bench = BenchConfig {
            reps: 3,
            oracle_reps: 1,
            oracle_max_iters: 200_000,
            m: Some(40),
            alpha: None,
        };
        let cfg = SolverConfig::default();
        let cell = run_cell(Preset::Sim3, 120, &bench, &cfg, 7).unwrap();
        assert_eq!(cell.solver_times.len(), 3);
        assert_eq!(cell.oracle_times.len(), 1);
        assert!(cell.se_time().is_some());
        assert!(cell.oracle_se_time().is_none());
        assert!(cell.oracle_gap <= 1e-5, "gap {}", cell.oracle_gap);
        assert!(cell.speedup().is_some());
        assert!(cell.r > 0);
    }

    #[test]
    fn single_rep_has_no_se() {
        let bench = BenchConfig {
            reps: 1,
            oracle_reps: 0,
            oracle_max_iters: 100,
            m: Some(30),
            alpha: None,
        };
        let cell = run_cell(Preset::Sim3, 60, &bench, &SolverConfig::default(), 11).unwrap();
        assert!(cell.se_time().is_none());
        assert!(cell.oracle_mean_time().is_none());
        assert!(cell.speedup().is_none());
    }
}
