//! Subcommand implementations. Each emits its result files plus one
//! append-only run record; exit codes are 0 (success), 2 (non-convergence,
//! outputs still written) and 1 (usage or I/O errors, handled in `main`).

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use elnet_core::bench::{run_cell, BenchCell, BenchConfig};
use elnet_core::data::{
    generate, poly_expand, rho_hat, standardize, Dataset, Preset, SimSpec, StandardizeInfo,
};
use elnet_core::oracle::{prox_grad_solve, OracleConfig, OracleMethod};
use elnet_core::select::{
    build_grid, kfold_cv, path_with_mode, Criterion, LambdaGrid, SelectionReport,
};
use elnet_core::solver::LossScale;
use elnet_core::{Penalty, Problem, Solution, SolverConfig};

use crate::config::{resolve, ConfigFile};
use crate::io::{
    write_matrix_bin, write_matrix_csv, write_solution, write_vector, DataSource, Phases,
    RunRecord,
};
use crate::{BenchArgs, DataFlags, GenArgs, PathArgs, SolveArgs, SolverFlags, TuneArgs};

fn resolve_solver(flags: &SolverFlags, file: &ConfigFile) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        outer_tol: resolve(&flags.tol, file, "tol", d.outer_tol)?,
        inner_tol_factor: d.inner_tol_factor,
        sigma0: resolve(&flags.sigma0, file, "sigma0", d.sigma0)?,
        sigma_factor: resolve(&flags.sigma_factor, file, "sigma-factor", d.sigma_factor)?,
        sigma_max: resolve(&flags.sigma_max, file, "sigma-max", d.sigma_max)?,
        mu: resolve(&flags.mu, file, "mu", d.mu)?,
        max_outer: resolve(&flags.max_outer, file, "max-outer", d.max_outer)?,
        max_inner: resolve(&flags.max_inner, file, "max-inner", d.max_inner)?,
        max_backtracks: d.max_backtracks,
        cg_threshold: resolve(&flags.cg_threshold, file, "cg-threshold", d.cg_threshold)?,
        linear_tol: d.linear_tol,
        seed: resolve(&flags.seed, file, "seed", d.seed)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn warn_dropped(info: &StandardizeInfo) {
    if !info.dropped.is_empty() {
        eprintln!(
            "warning: dropped {} constant column(s): {:?}",
            info.dropped.len(),
            info.dropped.iter().map(|j| j + 1).collect::<Vec<_>>()
        );
    }
}

fn load_dataset(flags: &DataFlags, file: &ConfigFile) -> Result<Dataset> {
    let source = DataSource::from_flags(&flags.data, &flags.a, &flags.b, &flags.libsvm)?;
    let mut ds = source.load()?;
    let degree = resolve(&flags.poly_degree, file, "poly-degree", 1usize)?;
    if degree > 1 {
        let cap = resolve(&flags.max_expand_cols, file, "max-expand-cols", 2_000_000usize)?;
        let expanded = poly_expand(&ds.a, degree, cap)?;
        ds.provenance = format!("{} poly{}", ds.provenance, degree);
        ds.a = expanded;
        ds.truth = None;
    }
    Ok(ds)
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

/// Original 1-based column indices for a solution on the standardized
/// problem (standardization may have dropped constant columns).
fn original_indices(sol: &Solution, info: &StandardizeInfo) -> Vec<(usize, f64)> {
    sol.coefficients
        .iter()
        .map(|&(j, v)| (info.kept[j] + 1, v))
        .collect()
}

pub fn gen(args: &GenArgs, file: &ConfigFile) -> Result<i32> {
    let preset = match resolve(&args.preset, file, "preset", String::new())? {
        s if s.is_empty() => None,
        s => Some(Preset::parse(&s).with_context(|| format!("unknown preset `{s}`"))?),
    };
    let seed = resolve(&args.seed, file, "seed", 0u64)?;
    let mut spec = match preset {
        Some(p) => {
            let n = resolve(&args.n, file, "n", 10_000usize)?;
            p.spec(n, seed)
        }
        None => {
            let (Some(m), Some(n), Some(n0)) = (args.m, args.n, args.n0) else {
                bail!("give --preset or all of --m, --n, --n0");
            };
            SimSpec::new(m, n, n0, seed)
        }
    };
    if let Some(m) = args.m {
        spec.m = m;
    }
    if let Some(n0) = args.n0 {
        spec.n0 = n0;
    }
    spec.x_star = resolve(&args.x_star, file, "x-star", spec.x_star)?;
    spec.snr = resolve(&args.snr, file, "snr", spec.snr)?;

    let mut phases = Phases::new();
    let ds = generate(&spec)?;
    phases.mark("generate");
    let snr = ds.realized_snr().unwrap_or(f64::NAN);
    let rho = rho_hat(&ds);
    phases.mark("diagnostics");

    std::fs::create_dir_all(&args.out)?;
    write_matrix_bin(&args.out.join("A.bin"), &ds.a)?;
    if args.csv {
        write_matrix_csv(&args.out.join("A.csv"), &ds.a)?;
    }
    write_vector(&args.out.join("b.txt"), &ds.b)?;
    std::fs::write(args.out.join("provenance.txt"), format!("{}\n", ds.provenance))?;
    let meta = json!({
        "m": spec.m,
        "n": spec.n,
        "n0": spec.n0,
        "x_star": spec.x_star,
        "snr_target": spec.snr,
        "seed": spec.seed,
        "preset": preset.map(|p| p.name()),
        "realized_snr": snr,
        "rho_hat": rho,
        "truth_1based": ds.truth.as_ref().map(|t| {
            t.iter().map(|&(j, v)| (j + 1, v)).collect::<Vec<_>>()
        }),
    });
    std::fs::write(
        args.out.join("meta.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    phases.mark("write");

    println!(
        "generated {} ({} x {}): realized snr = {snr:.4}, rho_hat = {rho:.4}",
        ds.provenance,
        spec.m,
        spec.n
    );

    let (wall, phase_list) = phases.finish();
    RunRecord {
        command: "gen".into(),
        argv: argv(),
        config: meta,
        dataset: ds.provenance.clone(),
        wall_seconds: wall,
        phases: phase_list,
        iterations: json!({}),
        outputs: vec![args.out.join("A.bin").display().to_string()],
    }
    .append(&args.out)?;
    Ok(0)
}

struct PenaltyChoice {
    penalty: Penalty,
    effective: Penalty,
    loss_scale: LossScale,
}

fn resolve_penalty(
    args: &SolveArgs,
    file: &ConfigFile,
    prob: &Problem,
) -> Result<PenaltyChoice> {
    let loss_scale = {
        let name = resolve(&args.loss_scale, file, "loss-scale", "unit".to_string())?;
        LossScale::parse(&name).with_context(|| format!("unknown loss scale `{name}`"))?
    };
    let lambda1 = resolve(&args.lambda1, file, "lambda1", f64::NAN)?;
    let lambda2 = resolve(&args.lambda2, file, "lambda2", f64::NAN)?;
    let alpha = resolve(&args.alpha, file, "alpha", f64::NAN)?;
    let clambda = resolve(&args.clambda, file, "clambda", f64::NAN)?;
    let penalty = match (
        !lambda1.is_nan() || !lambda2.is_nan(),
        !alpha.is_nan() || !clambda.is_nan(),
    ) {
        (true, false) => {
            if lambda1.is_nan() || lambda2.is_nan() {
                bail!("--lambda1 and --lambda2 go together");
            }
            Penalty::new(lambda1, lambda2)?
        }
        (false, true) => {
            if alpha.is_nan() || clambda.is_nan() {
                bail!("--alpha and --clambda go together");
            }
            let lambda_max = prob.max_abs_atb() / alpha;
            Penalty::from_mixing(alpha, clambda, lambda_max)?
        }
        _ => bail!("give either --lambda1/--lambda2 or --alpha/--clambda"),
    };
    let effective = loss_scale.effective_penalty(&penalty, prob.m())?;
    Ok(PenaltyChoice {
        penalty,
        effective,
        loss_scale,
    })
}

pub fn solve(args: &SolveArgs, file: &ConfigFile) -> Result<i32> {
    let cfg = resolve_solver(&args.solver, file)?;
    let mut phases = Phases::new();
    let ds = load_dataset(&args.data, file)?;
    phases.mark("load");
    let (prob, info) = standardize(&ds)?;
    warn_dropped(&info);
    phases.mark("standardize");

    let choice = resolve_penalty(args, file, &prob)?;
    let sol = elnet_core::solve(&prob, &choice.effective, &cfg, None)?;
    phases.mark("solve");

    let oracle = if args.oracle_check {
        let ocfg = OracleConfig {
            max_iters: resolve(&args.oracle_max_iters, file, "oracle-max-iters", 200_000usize)?,
            method: OracleMethod::ProxGrad,
            ..OracleConfig::default()
        };
        let orc = prox_grad_solve(&prob, &choice.effective, &ocfg)?;
        let gap = (sol.primal_objective - orc.objective).abs() / (1.0 + orc.objective.abs());
        println!(
            "oracle check: relative objective gap {gap:.3e} ({} iterations, converged: {})",
            orc.iters, orc.converged
        );
        phases.mark("oracle-check");
        Some(json!({
            "relative_gap": gap,
            "objective": choice.loss_scale.scale_objective(orc.objective, prob.m()),
            "iters": orc.iters,
            "converged": orc.converged,
        }))
    } else {
        None
    };

    std::fs::create_dir_all(&args.out)?;
    let coeffs = original_indices(&sol, &info);
    write_solution(&args.out.join("solution.txt"), &coeffs)?;

    let (intercept, orig_coeffs) = prob.unscale_coefficients(&sol.dense_x(prob.n()));
    let objective = choice.loss_scale.scale_objective(sol.primal_objective, prob.m());
    let summary = json!({
        "command": "solve",
        "dataset": ds.provenance,
        "m": prob.m(),
        "n": prob.n(),
        "dropped_columns_1based": info.dropped.iter().map(|j| j + 1).collect::<Vec<_>>(),
        "lambda1": choice.penalty.lambda1(),
        "lambda2": choice.penalty.lambda2(),
        "loss_scale": format!("{:?}", choice.loss_scale),
        "objective": objective,
        "objective_unit_scale": sol.primal_objective,
        "dual_objective_unit_scale": sol.dual_objective,
        "duality_gap_unit_scale": sol.gap(),
        "r": sol.r(),
        "active_set_1based": coeffs.iter().map(|&(j, _)| j).collect::<Vec<_>>(),
        "res_kkt3": sol.res_kkt3,
        "res_kkt1": sol.res_kkt1,
        "outer_iters": sol.outer_iters,
        "inner_iters": sol.inner_iters_total,
        "wall_time_s": sol.wall_time,
        "converged": sol.converged,
        "intercept_original_scale": intercept,
        "coefficients_original_scale": sol.active_set.iter()
            .map(|&j| (info.kept[j] + 1, orig_coeffs[j]))
            .collect::<Vec<_>>(),
        "oracle_check": oracle,
        "config": cfg,
    });
    std::fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    phases.mark("write");

    println!(
        "solve: objective {objective:.6e}, r = {}, res_kkt3 = {:.2e}, res_kkt1 = {:.2e}, \
         {} outer / {} inner iterations, converged: {}",
        sol.r(),
        sol.res_kkt3,
        sol.res_kkt1,
        sol.outer_iters,
        sol.inner_iters_total,
        sol.converged
    );

    let (wall, phase_list) = phases.finish();
    RunRecord {
        command: "solve".into(),
        argv: argv(),
        config: serde_json::to_value(cfg)?,
        dataset: ds.provenance,
        wall_seconds: wall,
        phases: phase_list,
        iterations: json!({"outer": sol.outer_iters, "inner": sol.inner_iters_total}),
        outputs: vec![
            args.out.join("solution.txt").display().to_string(),
            args.out.join("summary.json").display().to_string(),
        ],
    }
    .append(&args.out)?;
    Ok(if sol.converged { 0 } else { 2 })
}

fn report_rows(report: &SelectionReport) -> Vec<Vec<String>> {
    report
        .points
        .iter()
        .map(|pt| {
            vec![
                format!("{}", report.alpha),
                format!("{}", pt.c_lambda),
                format!("{}", pt.lambda1),
                format!("{}", pt.lambda2),
                format!("{}", pt.r),
                format!("{}", pt.rss),
                format!("{}", pt.nu),
                format!("{}", pt.gcv),
                format!("{}", pt.ebic),
                pt.cv_mean.map(|v| format!("{v}")).unwrap_or_default(),
                pt.cv_se.map(|v| format!("{v}")).unwrap_or_default(),
                format!("{}", pt.outer_iters),
                format!("{}", pt.inner_iters),
                format!("{}", pt.wall_time),
                format!("{}", pt.converged),
                format!("{}", pt.debias_ridge_fallback),
            ]
        })
        .collect()
}

const REPORT_HEADER: [&str; 16] = [
    "alpha",
    "c_lambda",
    "lambda1",
    "lambda2",
    "r",
    "rss",
    "nu",
    "gcv",
    "ebic",
    "cv_mean",
    "cv_se",
    "outer_iters",
    "inner_iters",
    "wall_time_s",
    "converged",
    "debias_ridge_fallback",
];

fn write_report_csv(path: &Path, reports: &[SelectionReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_HEADER)?;
    for report in reports {
        for row in report_rows(report) {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_plot_data(out: &Path, reports: &[SelectionReport]) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    for criterion in [Criterion::Gcv, Criterion::Ebic, Criterion::Cv] {
        let has_any = reports.iter().any(|r| {
            r.points.iter().any(|pt| match criterion {
                Criterion::Cv => pt.cv_mean.is_some(),
                _ => true,
            })
        });
        if !has_any {
            continue;
        }
        let path = out.join(format!("plot_{}.csv", criterion.name()));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["alpha", "c_lambda", "r", criterion.name()])?;
        for report in reports {
            for pt in &report.points {
                let value = match criterion {
                    Criterion::Gcv => Some(pt.gcv),
                    Criterion::Ebic => Some(pt.ebic),
                    Criterion::Cv => pt.cv_mean,
                };
                if let Some(v) = value {
                    w.write_record(&[
                        format!("{}", report.alpha),
                        format!("{}", pt.c_lambda),
                        format!("{}", pt.r),
                        format!("{v}"),
                    ])?;
                }
            }
        }
        w.flush()?;
        outputs.push(path.display().to_string());
    }
    Ok(outputs)
}

fn write_chosen_models(
    out: &Path,
    report: &SelectionReport,
    criteria: &[Criterion],
    info: &StandardizeInfo,
) -> Result<Vec<serde_json::Value>> {
    let mut chosen = Vec::new();
    for &criterion in criteria {
        let Some(idx) = report.chosen(criterion) else {
            continue;
        };
        let pt = &report.points[idx];
        let name = format!(
            "chosen_{}_alpha{}.txt",
            criterion.name(),
            report.alpha
        );
        let coeffs = original_indices(&pt.solution, info);
        write_solution(&out.join(&name), &coeffs)?;
        chosen.push(json!({
            "criterion": criterion.name(),
            "alpha": report.alpha,
            "c_lambda": pt.c_lambda,
            "lambda1": pt.lambda1,
            "lambda2": pt.lambda2,
            "r": pt.r,
            "value": match criterion {
                Criterion::Gcv => pt.gcv,
                Criterion::Ebic => pt.ebic,
                Criterion::Cv => pt.cv_mean.unwrap_or(f64::NAN),
            },
            "file": name,
        }));
    }
    Ok(chosen)
}

pub fn path(args: &PathArgs, file: &ConfigFile) -> Result<i32> {
    let cfg = resolve_solver(&args.solver, file)?;
    let alpha = resolve(&args.alpha, file, "alpha", 0.9f64)?;
    let n_lambda = resolve(&args.n_lambda, file, "n-lambda", 100usize)?;
    let c_min = resolve(&args.c_min, file, "c-min", 0.1f64)?;
    let max_active = match resolve(&args.max_active, file, "max-active", 0usize)? {
        0 => None,
        cap => Some(cap),
    };

    let mut phases = Phases::new();
    let ds = load_dataset(&args.data, file)?;
    phases.mark("load");
    let (prob, info) = standardize(&ds)?;
    warn_dropped(&info);
    phases.mark("standardize");

    let grid = build_grid(&prob, alpha, n_lambda, c_min, max_active)?;
    let report = path_with_mode(&prob, &grid, &cfg, true)?;
    phases.mark("path");

    let cold_gap = if args.cold_check {
        let cold = path_with_mode(&prob, &grid, &cfg, false)?;
        let gap = report
            .points
            .iter()
            .zip(cold.points.iter())
            .map(|(w, c)| {
                (w.solution.primal_objective - c.solution.primal_objective).abs()
                    / (1.0 + c.solution.primal_objective.abs())
            })
            .fold(0.0f64, f64::max);
        println!("cold check: worst warm-vs-cold relative objective gap {gap:.3e}");
        phases.mark("cold-check");
        Some(gap)
    } else {
        None
    };

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("report.csv");
    let reports = vec![report];
    write_report_csv(&csv_path, &reports)?;
    let mut outputs = vec![csv_path.display().to_string()];
    if args.plot_data {
        outputs.extend(write_plot_data(&args.out, &reports)?);
    }
    let report = &reports[0];
    let chosen = write_chosen_models(&args.out, report, &[Criterion::Gcv, Criterion::Ebic], &info)?;

    let all_converged = report.points.iter().all(|pt| pt.converged);
    let summary = json!({
        "command": "path",
        "dataset": ds.provenance,
        "alpha": alpha,
        "lambda_max": report.lambda_max,
        "points": report.points.len(),
        "truncated_at_max_active": report.truncated_at_max_active,
        "all_converged": all_converged,
        "warm_vs_cold_gap": cold_gap,
        "chosen": chosen,
    });
    std::fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    phases.mark("write");

    println!(
        "path: {} points (alpha = {alpha}), truncated: {}, all converged: {}",
        report.points.len(),
        report.truncated_at_max_active,
        all_converged
    );

    let (wall, phase_list) = phases.finish();
    RunRecord {
        command: "path".into(),
        argv: argv(),
        config: serde_json::to_value(cfg)?,
        dataset: ds.provenance.clone(),
        wall_seconds: wall,
        phases: phase_list,
        iterations: json!({
            "outer_total": report.points.iter().map(|p| p.outer_iters).sum::<usize>(),
        }),
        outputs,
    }
    .append(&args.out)?;
    Ok(if all_converged { 0 } else { 2 })
}

pub fn tune(args: &TuneArgs, file: &ConfigFile) -> Result<i32> {
    let cfg = resolve_solver(&args.solver, file)?;
    let alphas = match &args.alpha_list {
        Some(list) => list.clone(),
        None => match file.get::<String>("alpha-list")? {
            Some(raw) => crate::config::parse_f64_list(&raw)
                .map_err(|e| anyhow::anyhow!("config alpha-list: {e}"))?,
            None => vec![0.9, 0.8, 0.6],
        },
    };
    let n_lambda = resolve(&args.n_lambda, file, "n-lambda", 100usize)?;
    let c_min = resolve(&args.c_min, file, "c-min", 0.1f64)?;
    let max_active = match resolve(&args.max_active, file, "max-active", 0usize)? {
        0 => None,
        cap => Some(cap),
    };
    let cv_folds = resolve(&args.cv_folds, file, "cv-folds", 10usize)?;
    let criteria: Vec<Criterion> = {
        let raw = resolve(&args.criteria, file, "criteria", "gcv,ebic,cv".to_string())?;
        let mut list = Vec::new();
        for name in raw.split(',') {
            let c = Criterion::parse(name.trim())
                .with_context(|| format!("unknown criterion `{name}`"))?;
            if !list.contains(&c) {
                list.push(c);
            }
        }
        list
    };

    let mut phases = Phases::new();
    let ds = load_dataset(&args.data, file)?;
    phases.mark("load");
    let (prob, info) = standardize(&ds)?;
    warn_dropped(&info);
    phases.mark("standardize");

    let want_cv = criteria.contains(&Criterion::Cv) && cv_folds >= 2;
    let mut reports = Vec::new();
    for &alpha in &alphas {
        let grid = build_grid(&prob, alpha, n_lambda, c_min, max_active)?;
        let mut report = path_with_mode(&prob, &grid, &cfg, true)?;
        if want_cv {
            // score exactly the points the (possibly truncated) sweep kept
            let cv_grid = LambdaGrid {
                alpha,
                c_values: report.points.iter().map(|pt| pt.c_lambda).collect(),
                lambda_max: grid.lambda_max,
                max_active: None,
            };
            let scores = kfold_cv(&prob, &cv_grid, cv_folds, &cfg, cfg.seed)?;
            report.attach_cv(&scores);
        }
        reports.push(report);
    }
    phases.mark("sweeps");

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("report.csv");
    write_report_csv(&csv_path, &reports)?;
    let mut outputs = vec![csv_path.display().to_string()];
    if args.plot_data {
        outputs.extend(write_plot_data(&args.out, &reports)?);
    }

    let mut chosen_all = Vec::new();
    for report in &reports {
        chosen_all.extend(write_chosen_models(&args.out, report, &criteria, &info)?);
    }
    let all_converged = reports
        .iter()
        .all(|r| r.points.iter().all(|pt| pt.converged));
    let summary = json!({
        "command": "tune",
        "dataset": ds.provenance,
        "alphas": alphas,
        "cv_folds": if want_cv { Some(cv_folds) } else { None },
        "criteria": criteria.iter().map(|c| c.name()).collect::<Vec<_>>(),
        "all_converged": all_converged,
        "chosen": chosen_all,
    });
    std::fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    phases.mark("write");

    println!(
        "tune: {} alpha sweeps, {} grid points each at most, all converged: {}",
        alphas.len(),
        n_lambda,
        all_converged
    );

    let (wall, phase_list) = phases.finish();
    RunRecord {
        command: "tune".into(),
        argv: argv(),
        config: serde_json::to_value(cfg)?,
        dataset: ds.provenance.clone(),
        wall_seconds: wall,
        phases: phase_list,
        iterations: json!({
            "points_total": reports.iter().map(|r| r.points.len()).sum::<usize>(),
        }),
        outputs,
    }
    .append(&args.out)?;
    Ok(if all_converged { 0 } else { 2 })
}

const BENCH_HEADER: [&str; 17] = [
    "preset",
    "m",
    "n",
    "alpha",
    "c_lambda",
    "r",
    "rho_hat",
    "reps",
    "mean_time_s",
    "se_time_s",
    "mean_outer_iters",
    "oracle_reps",
    "oracle_mean_time_s",
    "oracle_se_time_s",
    "oracle_gap",
    "oracle_reached_target",
    "speedup",
];

fn bench_row(cell: &BenchCell, reps: usize) -> Vec<String> {
    let mean_outer = cell
        .solver_outer_iters
        .iter()
        .map(|&v| v as f64)
        .sum::<f64>()
        / cell.solver_outer_iters.len() as f64;
    vec![
        cell.preset.to_string(),
        format!("{}", cell.m),
        format!("{}", cell.n),
        format!("{}", cell.alpha),
        format!("{}", cell.c_lambda),
        format!("{}", cell.r),
        format!("{:.4}", cell.rho_hat),
        format!("{reps}"),
        format!("{:.6}", cell.mean_time()),
        cell.se_time().map(|v| format!("{v:.6}")).unwrap_or_default(),
        format!("{mean_outer:.2}"),
        format!("{}", cell.oracle_times.len()),
        cell.oracle_mean_time()
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default(),
        cell.oracle_se_time()
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default(),
        format!("{:.3e}", cell.oracle_gap),
        format!("{}", cell.oracle_reached_target),
        cell.speedup().map(|v| format!("{v:.2}")).unwrap_or_default(),
    ]
}

pub fn bench(args: &BenchArgs, file: &ConfigFile) -> Result<i32> {
    let cfg = resolve_solver(&args.solver, file)?;
    let presets: Vec<Preset> = {
        let raw = resolve(&args.preset, file, "preset", "sim1".to_string())?;
        raw.split(',')
            .map(|name| {
                Preset::parse(name.trim()).with_context(|| format!("unknown preset `{name}`"))
            })
            .collect::<Result<_>>()?
    };
    let n_list = match &args.n_list {
        Some(list) => list.clone(),
        None => vec![10_000],
    };
    let bench_cfg = BenchConfig {
        reps: resolve(&args.reps, file, "reps", 20usize)?,
        oracle_reps: resolve(&args.oracle_reps, file, "oracle-reps", 2usize)?,
        oracle_max_iters: resolve(&args.oracle_max_iters, file, "oracle-max-iters", 2_000usize)?,
        m: args.m,
        alpha: None,
    };

    let mut phases = Phases::new();
    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("bench.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(BENCH_HEADER)?;
    // cells run sequentially so the wall times stay meaningful
    for &preset in &presets {
        for &n in &n_list {
            let cell = run_cell(preset, n, &bench_cfg, &cfg, cfg.seed)?;
            println!(
                "{} n={}: {:.3}s +/- {} over {} reps ({} outer iters, r = {}, rho_hat = {:.2}){}",
                cell.preset,
                cell.n,
                cell.mean_time(),
                cell.se_time()
                    .map(|v| format!("{v:.3}s"))
                    .unwrap_or_else(|| "-".into()),
                bench_cfg.reps,
                cell.solver_outer_iters
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("/"),
                cell.r,
                cell.rho_hat,
                cell.speedup()
                    .map(|s| format!(
                        ", {:.1}x vs prox-grad{}",
                        s,
                        if cell.oracle_reached_target { "" } else { " (lower bound)" }
                    ))
                    .unwrap_or_default(),
            );
            w.write_record(&bench_row(&cell, bench_cfg.reps))?;
            phases.mark(&format!("{}-n{}", cell.preset, cell.n));
        }
    }
    w.flush()?;
    drop(w);

    let (wall, phase_list) = phases.finish();
    RunRecord {
        command: "bench".into(),
        argv: argv(),
        config: serde_json::to_value(cfg)?,
        dataset: format!(
            "presets {:?} x n {:?}",
            presets.iter().map(|p| p.name()).collect::<Vec<_>>(),
            n_list
        ),
        wall_seconds: wall,
        phases: phase_list,
        iterations: json!({}),
        outputs: vec![csv_path.display().to_string()],
    }
    .append(&args.out)?;
    Ok(0)
}
