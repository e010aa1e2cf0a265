//! Command implementations. Each command loads a strict config, performs
//! its checks or runs, writes CSV/JSON artifacts plus a manifest, and
//! returns an outcome carrying the exit code.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analytic::{
    self, growth_rate, nongeodesic_residual, restoring_force_claimed, ForceFreeParams,
    FlowDerivative, VerticalFlowProfile,
};
use crate::cli::config::{ModelKind, RunConfigFile};
use crate::cli::manifest::RunManifest;
use crate::diagnostics::{
    energy_report_from_series, entropy_bound_check, fit_growth_rate, magnetic_energy,
    reversal_scan, DEFAULT_FIT_WINDOW,
};
use crate::error::{Error, Result};
use crate::fields::{
    eigenmode_check, fmt_f64, write_scalar_csv, Component, Grid, MagneticTwoForm, ScalarField,
    VectorPotentialField,
};
use crate::geometry::{
    christoffel_at, gaussian_curvature_at, gaussian_curvature_fd, metric_at, riemann_1212_at,
    HalfPlanePoint,
};
use crate::solver::{
    advection_term_with, run, stability_bound, AnalyticFamily, BoundaryPolicy, DiffusionSign,
    FlowField, IndexPlacement, SolverConfig,
};

/// Result of a command: the exit code plus a one-line human summary.
#[derive(Debug, Clone)]
pub struct CmdOutcome {
    pub exit_code: i32,
    pub summary: String,
}

/// Map library errors onto the exit-code contract: numerical instability is
/// 3, everything else that escapes a command is a config/usage error (2).
pub fn exit_code_for_error(e: &Error) -> i32 {
    match e {
        Error::NonFinite { .. } => 3,
        _ => 2,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn wants(cfg: &RunConfigFile, format: crate::cli::config::OutputFormat) -> bool {
    cfg.output.formats.contains(&format)
}

/// x positions of the five sampling slices: interior fractions of the span,
/// avoiding both edges (the forced family vanishes identically at x = 0).
fn slice_positions(grid: &Grid) -> [f64; 5] {
    let span = grid.x_max() - grid.x_min();
    [0.1, 0.3, 0.5, 0.7, 0.9].map(|f| grid.x_min() + f * span)
}

// ---------------------------------------------------------------------------
// geometry-check
// ---------------------------------------------------------------------------

pub fn cmd_geometry_check(config_path: &Path, out_dir: &Path) -> Result<CmdOutcome> {
    let cfg = RunConfigFile::load(config_path)?;
    ensure_dir(out_dir)?;
    let geo = &cfg.geometry;

    let mut rng = ChaCha8Rng::seed_from_u64(geo.seed);
    let mut exact_failures = 0usize;
    let mut identity_failures = 0usize;
    let mut fd_breaches = 0usize;
    let mut stencil_clipped = 0usize;
    let mut max_fd_err = 0.0f64;
    let mut max_christoffel_err_scaled = 0.0f64;

    for _ in 0..geo.samples {
        let y = rng.gen_range(geo.y_low..geo.y_high);
        let x = rng.gen_range(-5.0..5.0);
        let p = HalfPlanePoint::with_min_y(x, y, f64::MIN_POSITIVE)?;

        if gaussian_curvature_at(&p) != -1.0 {
            exact_failures += 1;
        }
        let m = metric_at(&p);
        if riemann_1212_at(&p) / (m.sqrt_g * m.sqrt_g) != gaussian_curvature_at(&p) {
            identity_failures += 1;
        }
        match gaussian_curvature_fd(&p, geo.fd_step) {
            Ok(k) => {
                let err = (k + 1.0).abs();
                max_fd_err = max_fd_err.max(err);
                if err > geo.tolerance {
                    fd_breaches += 1;
                }
            }
            Err(_) => stencil_clipped += 1,
        }

        // connection coefficients re-derived from metric differences
        let h = 1e-3 * y;
        let cf = christoffel_at(&p);
        let dg = |yy: f64| {
            let q = HalfPlanePoint::with_min_y(x, yy, f64::MIN_POSITIVE).unwrap();
            metric_at(&q).g11
        };
        let dgdy = (dg(y + h) - dg(y - h)) / (2.0 * h);
        // Γ¹₁₂ = ½ g¹¹ ∂_y g₁₁, Γ²₂₂ the same, Γ²₁₁ = −½ g²² ∂_y g₁₁
        let fd_x_xy = 0.5 * m.g_inv11 * dgdy;
        let fd_y_xx = -0.5 * m.g_inv22 * dgdy;
        let scale = y; // error of the relative-step stencil scales like 1/y
        for (fd, exact) in [
            (fd_x_xy, cf.gamma_x_xy()),
            (fd_x_xy, cf.gamma_y_yy()),
            (fd_y_xx, cf.gamma_y_xx()),
        ] {
            max_christoffel_err_scaled = max_christoffel_err_scaled.max((fd - exact).abs() * scale);
        }
    }

    // relative-step stencil keeps the scaled error ~(1e-3)², allow margin
    let christoffel_ok = max_christoffel_err_scaled <= 1e-4;
    let pass = exact_failures == 0
        && identity_failures == 0
        && fd_breaches == 0
        && stencil_clipped == 0
        && christoffel_ok;

    let report = json!({
        "samples": geo.samples,
        "y_range": [geo.y_low, geo.y_high],
        "fd_step": geo.fd_step,
        "tolerance": geo.tolerance,
        "curvature_exact_failures": exact_failures,
        "curvature_identity_failures": identity_failures,
        "curvature_fd_max_abs_error": max_fd_err,
        "curvature_fd_tolerance_breaches": fd_breaches,
        "curvature_fd_stencil_clipped": stencil_clipped,
        "christoffel_fd_max_scaled_error": max_christoffel_err_scaled,
        "pass": pass,
    });
    let mut manifest = RunManifest::new("geometry-check");
    manifest.config_echo = Some(cfg.to_toml_string());
    if wants(&cfg, crate::cli::config::OutputFormat::Json) {
        fs::write(
            out_dir.join("geometry_report.json"),
            serde_json::to_string_pretty(&report).expect("json"),
        )?;
        manifest.add_artifact(out_dir, "geometry_report.json")?;
    }
    manifest.diagnostics = report;
    manifest.exit_code = if pass { 0 } else { 1 };
    manifest.write(out_dir)?;

    Ok(CmdOutcome {
        exit_code: if pass { 0 } else { 1 },
        summary: format!(
            "geometry-check: exact failures {exact_failures}, fd max err {max_fd_err:.3e} \
             (tol {:.1e}, breaches {fd_breaches}, clipped {stencil_clipped})",
            geo.tolerance
        ),
    })
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

pub fn cmd_evolve(config_path: &Path, out_dir: &Path) -> Result<CmdOutcome> {
    let cfg = RunConfigFile::load(config_path)?;
    ensure_dir(out_dir)?;
    let solver_cfg = cfg.solver_config()?;
    let family = cfg.analytic_family()?;
    let initial = family.sample(&solver_cfg.grid, 0.0)?;

    let mut manifest = RunManifest::new("evolve");
    manifest.config_echo = Some(cfg.to_toml_string());

    let result = match run(&solver_cfg, &initial) {
        Ok(r) => r,
        Err(Error::NonFinite { step }) => {
            manifest.exit_code = 3;
            manifest.diagnostics = json!({ "failed_step": step });
            manifest.write(out_dir)?;
            return Ok(CmdOutcome {
                exit_code: 3,
                summary: format!("evolve: numerical instability at step {step}"),
            });
        }
        Err(e) => return Err(e),
    };

    // norm series CSV
    let series_name = "norm_series.csv";
    if wants(&cfg, crate::cli::config::OutputFormat::Csv) {
        let mut text = String::from("t,l1_norm,energy,divergence_max\n");
        for k in 0..result.times.len() {
            text.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(result.times[k]),
                fmt_f64(result.field_l1_norms[k]),
                fmt_f64(result.energy[k]),
                fmt_f64(result.divergence_max[k]),
            ));
        }
        fs::write(out_dir.join(series_name), text)?;
        manifest.add_artifact(out_dir, series_name)?;
    }

    // field snapshots
    if cfg.output.snapshot_cadence > 0 && wants(&cfg, crate::cli::config::OutputFormat::Csv) {
        if let Some(snaps) = &result.snapshots {
            for (k, snap) in snaps.iter().enumerate() {
                if k % cfg.output.snapshot_cadence != 0 {
                    continue;
                }
                for (suffix, field) in [
                    ("ax", snap.potential.ax()),
                    ("ay", snap.potential.ay()),
                    ("bz", snap.field.bz()),
                ] {
                    let name = format!("snapshot_{k:06}_{suffix}.csv");
                    let mut buf = Vec::new();
                    write_scalar_csv(field, &mut buf)?;
                    fs::write(out_dir.join(&name), buf)?;
                    manifest.add_artifact(out_dir, &name)?;
                }
            }
        }
    }

    // diagnostics summary
    let gamma_est = fit_growth_rate(&result.times, &result.field_l1_norms, DEFAULT_FIT_WINDOW)
        .map(|f| f.gamma_est)
        .ok();
    let gamma_formula = match &family {
        AnalyticFamily::ForceFree(p) => Some(growth_rate(p)),
        AnalyticFamily::Forced(p) => Some(p.gamma),
    };
    let energy_rate = fit_growth_rate(&result.times, &result.energy, DEFAULT_FIT_WINDOW)
        .map(|f| f.gamma_est)
        .ok();
    let entropy = match &family {
        AnalyticFamily::ForceFree(p) if p.k_sep > 0.0 => {
            let est = gamma_est.unwrap_or(f64::NAN);
            entropy_bound_check(p, est, 0.02 * growth_rate(p).abs().max(1.0))
                .ok()
                .map(|c| serde_json::to_value(c).expect("json"))
        }
        _ => None,
    };
    let mut crossings = Vec::new();
    if let Some(final_field) = exterior_of_last(&result, &solver_cfg)? {
        for x in slice_positions(&solver_cfg.grid) {
            let found = reversal_scan(&final_field, x)?;
            crossings.push(json!({
                "x_slice": x,
                "crossings": found.iter().map(|c| json!({
                    "y": c.y,
                    "direction": format!("{:?}", c.direction),
                })).collect::<Vec<_>>(),
            }));
        }
    }
    let div_initial = result.divergence_max.first().copied().unwrap_or(0.0);
    let div_peak = result.divergence_max.iter().copied().fold(0.0f64, f64::max);

    manifest.diagnostics = json!({
        "gamma_est": gamma_est,
        "gamma_formula": gamma_formula,
        "energy_rate_est": energy_rate,
        "entropy_check": entropy,
        "reversal_slices": crossings,
        "divergence_initial_max": div_initial,
        "divergence_peak_max": div_peak,
        "stability_bound": stability_bound(&solver_cfg),
        "steps": result.times.len(),
    });
    manifest.write(out_dir)?;

    Ok(CmdOutcome {
        exit_code: 0,
        summary: format!(
            "evolve: {} diagnostics points, gamma_est {:?}, gamma_formula {:?}",
            result.times.len(),
            gamma_est,
            gamma_formula
        ),
    })
}

/// Field to scan for reversal diagnostics: the last stored snapshot when
/// available, else the boundary family's closed form at the final time.
/// `None` when neither exists (non-analytic boundary, snapshots off).
fn exterior_of_last(
    result: &crate::solver::RunResult,
    cfg: &SolverConfig,
) -> Result<Option<MagneticTwoForm>> {
    if let Some(snaps) = &result.snapshots {
        if let Some(last) = snaps.last() {
            return Ok(Some(last.field.clone()));
        }
    }
    match &cfg.boundary {
        BoundaryPolicy::DirichletAnalytic(family) => {
            let t = *result.times.last().expect("nonempty");
            let a = family.sample(&cfg.grid, t)?;
            Ok(Some(crate::fields::exterior_derivative(&a)))
        }
        _ => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// sweep-eta
// ---------------------------------------------------------------------------

/// dt guard for diffusionless rows: forward-Euler + central advection is
/// weakly unstable at η = 0, so the step is budgeted to keep round-off
/// amplification ≤ e¹² (~10⁻¹¹ relative over the horizon).
fn horizon_dt(grid: &Grid, flow: &FlowField, t_end: f64) -> f64 {
    let u = flow.max_speed(grid);
    if u == 0.0 {
        return f64::INFINITY;
    }
    let h = grid.hx().min(grid.hy());
    24.0 * h * h / (t_end * u * u)
}

fn refine_y(grid: &Grid) -> Result<Grid> {
    Grid::new(
        grid.x_min(),
        grid.x_max(),
        grid.y_min(),
        grid.y_max(),
        grid.nx(),
        2 * grid.ny() - 1,
    )
}

/// One verification run of the force-free family: returns the fitted rate
/// of ∫‖B‖μ over the final half of the horizon.
fn verification_rate(grid: &Grid, params: &ForceFreeParams, dt: f64, t_end: f64) -> Result<f64> {
    let family = AnalyticFamily::ForceFree(*params);
    let cfg = SolverConfig {
        grid: grid.clone(),
        dt,
        t_end,
        eta: params.eta,
        flow: family.natural_flow(),
        diffusion_sign: DiffusionSign::Standard,
        boundary: BoundaryPolicy::DirichletAnalytic(family),
        snapshot_every: (((t_end / dt).round() as usize) / 64).max(1),
        store_snapshots: false,
    };
    let initial = family.sample(grid, 0.0)?;
    let result = run(&cfg, &initial)?;
    Ok(fit_growth_rate(&result.times, &result.field_l1_norms, DEFAULT_FIT_WINDOW)?.gamma_est)
}

fn sweep_row_dt(grid: &Grid, params: &ForceFreeParams, cfg_dt: f64, t_end: f64) -> f64 {
    let family = AnalyticFamily::ForceFree(*params);
    let probe = SolverConfig {
        grid: grid.clone(),
        dt: cfg_dt,
        t_end,
        eta: params.eta,
        flow: family.natural_flow(),
        diffusion_sign: DiffusionSign::Standard,
        boundary: BoundaryPolicy::DirichletAnalytic(family),
        snapshot_every: 1,
        store_snapshots: false,
    };
    let bound = stability_bound(&probe);
    let horizon = if params.eta == 0.0 {
        horizon_dt(grid, &probe.flow, t_end)
    } else {
        f64::INFINITY
    };
    cfg_dt.min(0.8 * bound).min(horizon)
}

pub fn cmd_sweep_eta(
    config_path: &Path,
    out_dir: &Path,
    etas_override: Option<Vec<f64>>,
) -> Result<CmdOutcome> {
    let cfg = RunConfigFile::load(config_path)?;
    ensure_dir(out_dir)?;
    if cfg.params.model != ModelKind::ForceFree {
        return Err(Error::Config("sweep-eta requires model = \"force_free\"".into()));
    }
    let etas = etas_override.unwrap_or_else(|| cfg.sweep.etas.clone());
    if etas.is_empty() {
        return Err(Error::Config("sweep-eta needs a non-empty eta list".into()));
    }
    if etas.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::Config("sweep-eta: every eta must be >= 0".into()));
    }
    let base = cfg.force_free_params()?;
    let grid = cfg.build_grid()?;
    let fine = refine_y(&grid)?;
    let t_end = cfg.solver.t_end;

    let mut csv = String::from("eta,gamma_formula,gamma_est,abs_err\n");
    let mut rows = Vec::new();
    let mut any_fail = false;
    for &eta in &etas {
        let params = ForceFreeParams { eta, ..base };
        let gamma_formula = growth_rate(&params);
        let dt = sweep_row_dt(&grid, &params, cfg.solver.dt, t_end);
        let gamma_est = verification_rate(&grid, &params, dt, t_end)?;
        let gamma_ref = verification_rate(&fine, &params, dt / 4.0, t_end)?;
        let rel_err_vs_ref = (gamma_est - gamma_ref).abs() / gamma_ref.abs().max(1e-9);
        let row_pass = rel_err_vs_ref <= cfg.sweep.rel_tol;
        any_fail |= !row_pass;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(eta),
            fmt_f64(gamma_formula),
            fmt_f64(gamma_est),
            fmt_f64((gamma_est - gamma_formula).abs()),
        ));
        rows.push(json!({
            "eta": eta,
            "dt": dt,
            "gamma_formula": gamma_formula,
            "gamma_est": gamma_est,
            "gamma_reference": gamma_ref,
            "rel_err_vs_reference": rel_err_vs_ref,
            "pass": row_pass,
        }));
    }

    // affine structure of the formula column: slope −λ², intercept V₀K
    let (slope, intercept) = affine_fit(&etas, &etas.iter().map(|&e| {
        growth_rate(&ForceFreeParams { eta: e, ..base })
    }).collect::<Vec<_>>());

    let mut manifest = RunManifest::new("sweep-eta");
    manifest.config_echo = Some(cfg.to_toml_string());
    if wants(&cfg, crate::cli::config::OutputFormat::Csv) {
        fs::write(out_dir.join("sweep_eta.csv"), csv)?;
        manifest.add_artifact(out_dir, "sweep_eta.csv")?;
    }
    manifest.diagnostics = json!({
        "rows": rows,
        "formula_slope": slope,
        "formula_intercept": intercept,
        "expected_slope": -base.lambda * base.lambda,
        "expected_intercept": base.v0 * base.k_sep,
        "rel_tol": cfg.sweep.rel_tol,
    });
    manifest.exit_code = if any_fail { 1 } else { 0 };
    manifest.write(out_dir)?;

    Ok(CmdOutcome {
        exit_code: if any_fail { 1 } else { 0 },
        summary: format!(
            "sweep-eta: {} rows, formula slope {slope:.6} intercept {intercept:.6}{}",
            etas.len(),
            if any_fail { ", FAILURES" } else { "" }
        ),
    })
}

fn affine_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, if n > 0.0 { sy / n } else { 0.0 });
    }
    let slope = (n * sxy - sx * sy) / denom;
    ((slope), (sy - slope * sx) / n)
}

// ---------------------------------------------------------------------------
// reversal
// ---------------------------------------------------------------------------

pub fn cmd_reversal(config_path: &Path, out_dir: &Path) -> Result<CmdOutcome> {
    let cfg = RunConfigFile::load(config_path)?;
    ensure_dir(out_dir)?;
    let grid = cfg.build_grid()?;
    let family = cfg.analytic_family()?;
    let expected = family.reversal_line()?;
    let expected_in_grid =
        expected.filter(|y0| *y0 > grid.y_min() && *y0 < grid.y_max());

    let bz = ScalarField::try_from_fn(grid.clone(), |x, y| family.bz(x, y, 0.0))?;
    let field = MagneticTwoForm::new(bz);

    let mut manifest = RunManifest::new("reversal");
    manifest.config_echo = Some(cfg.to_toml_string());

    let mut slices = Vec::new();
    let mut all_pass = true;
    for (k, x) in slice_positions(&grid).into_iter().enumerate() {
        let crossings = reversal_scan(&field, x)?;
        // plot-ready profile
        let name = format!("bz_slice_{k}.csv");
        if wants(&cfg, crate::cli::config::OutputFormat::Csv) {
            let tx = ((x - grid.x_min()) / grid.hx()).clamp(0.0, (grid.nx() - 1) as f64);
            let i0 = (tx.floor() as usize).min(grid.nx() - 2);
            let fx = tx - i0 as f64;
            let mut text = String::from("y,bz\n");
            for j in 0..grid.ny() {
                let v = (1.0 - fx) * field.bz().value(i0, j) + fx * field.bz().value(i0 + 1, j);
                text.push_str(&format!("{},{}\n", fmt_f64(grid.y(j)), fmt_f64(v)));
            }
            fs::write(out_dir.join(&name), text)?;
            manifest.add_artifact(out_dir, &name)?;
        }

        let profile_scale: f64 = (0..grid.ny())
            .map(|j| {
                let tx = ((x - grid.x_min()) / grid.hx()).clamp(0.0, (grid.nx() - 1) as f64);
                let i0 = (tx.floor() as usize).min(grid.nx() - 2);
                let fx = tx - i0 as f64;
                ((1.0 - fx) * field.bz().value(i0, j) + fx * field.bz().value(i0 + 1, j)).abs()
            })
            .fold(0.0, f64::max);
        let degenerate = profile_scale == 0.0;

        let slice_pass = if degenerate {
            true // identically-zero profile carries no reversal information
        } else {
            match expected_in_grid {
                Some(y0) => {
                    crossings.len() == 1 && (crossings[0].y - y0).abs() <= grid.hy()
                }
                None => crossings.is_empty(),
            }
        };
        all_pass &= slice_pass;
        slices.push(json!({
            "x_slice": x,
            "degenerate": degenerate,
            "crossings": crossings.iter().map(|c| json!({
                "y": c.y, "direction": format!("{:?}", c.direction)
            })).collect::<Vec<_>>(),
            "pass": slice_pass,
        }));
    }

    manifest.diagnostics = json!({
        "closed_form_line": expected,
        "closed_form_line_in_grid": expected_in_grid,
        "physical": expected.is_some(),
        "note": if expected.is_none() { "no physical reversal line for these parameters" } else { "" },
        "slices": slices,
        "hy": grid.hy(),
    });
    manifest.exit_code = if all_pass { 0 } else { 1 };
    manifest.write(out_dir)?;

    Ok(CmdOutcome {
        exit_code: if all_pass { 0 } else { 1 },
        summary: match expected_in_grid {
            Some(y0) => format!("reversal: closed-form line y0 = {y0}, slices pass: {all_pass}"),
            None => "reversal: no physical reversal line in the grid; no crossings expected".into(),
        },
    })
}

// ---------------------------------------------------------------------------
// deviation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct DeviationArgs {
    pub s_end: f64,
    pub n_steps: usize,
    pub j0: f64,
    pub dj0: f64,
    /// Pass threshold on the max relative error against the closed form.
    pub tol: f64,
}

pub fn cmd_deviation(args: &DeviationArgs, out_dir: &Path) -> Result<CmdOutcome> {
    if !(args.s_end > 0.0) || args.n_steps < 10 {
        return Err(Error::Config(format!(
            "deviation needs s_end > 0 and n_steps >= 10, got s_end = {}, n_steps = {}",
            args.s_end, args.n_steps
        )));
    }
    ensure_dir(out_dir)?;
    let sol = crate::diagnostics::integrate_deviation(args.j0, args.dj0, args.s_end, args.n_steps)?;

    let closed = |s: f64| args.j0 * s.cosh() + args.dj0 * s.sinh();
    let mut text = String::from("s,J_numeric,J_closed_form,abs_err\n");
    let mut max_rel = 0.0f64;
    for (s, j) in sol.s.iter().zip(&sol.j) {
        let exact = closed(*s);
        let abs_err = (j - exact).abs();
        max_rel = max_rel.max(abs_err / exact.abs().max(1e-12));
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(*s),
            fmt_f64(*j),
            fmt_f64(exact),
            fmt_f64(abs_err)
        ));
    }
    fs::write(out_dir.join("deviation.csv"), text)?;

    let pass = max_rel <= args.tol;
    let mut manifest = RunManifest::new("deviation");
    manifest.add_artifact(out_dir, "deviation.csv")?;
    manifest.diagnostics = json!({
        "s_end": args.s_end,
        "n_steps": args.n_steps,
        "j0": args.j0,
        "dj0": args.dj0,
        "max_rel_err": max_rel,
        "tolerance": args.tol,
        "pass": pass,
    });
    manifest.exit_code = if pass { 0 } else { 1 };
    manifest.write(out_dir)?;

    Ok(CmdOutcome {
        exit_code: if pass { 0 } else { 1 },
        summary: format!("deviation: max relative error {max_rel:.3e} (tol {:.1e})", args.tol),
    })
}

// ---------------------------------------------------------------------------
// errata: the discrepancy harness
// ---------------------------------------------------------------------------

/// Run every documented-formulation discrepancy experiment and emit a
/// structured ledger. Discrepancies are findings, not failures: the exit
/// code is 0 whenever the config parses.
pub fn cmd_errata(config_path: &Path, out_dir: &Path) -> Result<CmdOutcome> {
    let cfg = RunConfigFile::load(config_path)?;
    ensure_dir(out_dir)?;
    let grid = cfg.build_grid()?;
    let params = match cfg.params.model {
        ModelKind::ForceFree => cfg.force_free_params()?,
        // the harness needs the force-free family; fall back to its
        // canonical parameters when the config describes the forced model
        ModelKind::Forced => ForceFreeParams { a0: 1.0, k_sep: 1.0, lambda: 1.0, eta: 0.1, v0: 2.0 },
    };

    let entries = vec![
        errata_diffusion_sign(&grid)?,
        errata_two_form_prefactor(&grid, &params)?,
        errata_restoring_force()?,
        errata_small_y_energy(&grid, &params)?,
        errata_advection_index(&grid, &params)?,
        errata_eigenvalue_substitution(&grid, &params)?,
    ];

    let ledger = json!({ "entries": entries });
    let mut manifest = RunManifest::new("errata");
    manifest.config_echo = Some(cfg.to_toml_string());
    if wants(&cfg, crate::cli::config::OutputFormat::Json) {
        fs::write(
            out_dir.join("errata_ledger.json"),
            serde_json::to_string_pretty(&ledger).expect("json"),
        )?;
        manifest.add_artifact(out_dir, "errata_ledger.json")?;
    }
    manifest.diagnostics = ledger;
    manifest.write(out_dir)?;

    Ok(CmdOutcome {
        exit_code: 0,
        summary: "errata: 6 discrepancy experiments recorded".into(),
    })
}

fn windowed_vertical_profile(grid: &Grid) -> Result<VectorPotentialField> {
    let (x0, x1) = (grid.x_min(), grid.x_max());
    let (y0, y1) = (grid.y_min(), grid.y_max());
    VectorPotentialField::try_sample(grid.clone(), move |x, y| {
        let wx = (std::f64::consts::PI * (x - x0) / (x1 - x0)).sin().powi(2);
        let wy = (std::f64::consts::PI * (y - y0) / (y1 - y0)).sin().powi(2);
        Ok((0.0, y * y * wx * wy))
    })
}

fn errata_diffusion_sign(grid: &Grid) -> Result<serde_json::Value> {
    let small = Grid::new(grid.x_min(), grid.x_max(), grid.y_min(), grid.y_max(), 24, 32)?;
    let initial = windowed_vertical_profile(&small)?;
    let mut readings = Vec::new();
    for (name, sign) in [("standard", DiffusionSign::Standard), ("reversed", DiffusionSign::Reversed)] {
        let mut cfg = SolverConfig {
            grid: small.clone(),
            dt: 0.0,
            t_end: 0.0,
            eta: 0.05,
            flow: FlowField::quiescent(),
            diffusion_sign: sign,
            boundary: BoundaryPolicy::DirichletZero,
            snapshot_every: 20,
            store_snapshots: false,
        };
        cfg.dt = 0.5 * stability_bound(&cfg);
        cfg.t_end = 200.0 * cfg.dt;
        let r = run(&cfg, &initial)?;
        let first = r.field_l1_norms[0];
        let last = *r.field_l1_norms.last().expect("nonempty");
        let monotone_down = r.field_l1_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let monotone_up = r.field_l1_norms.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        readings.push(json!({
            "name": name,
            "description": match sign {
                DiffusionSign::Standard => "diffusion term +η∇²A on the right-hand side",
                DiffusionSign::Reversed => "diffusion term −η∇²A, as the induction equation is written in one place",
            },
            "first_norm": first,
            "last_norm": last,
            "monotone_nonincreasing": monotone_down,
            "monotone_nondecreasing": monotone_up,
        }));
    }
    Ok(json!({
        "id": "diffusion-sign",
        "location": "induction equation, diffusion term",
        "readings": readings,
        "finding": "the standard sign decays under pure diffusion; the reversed sign anti-diffuses and grows, matching the decaying closed-form time factor only under the standard sign",
    }))
}

fn errata_two_form_prefactor(grid: &Grid, params: &ForceFreeParams) -> Result<serde_json::Value> {
    let gamma = growth_rate(params);
    let t = 0.0;
    let printed = |y: f64| {
        2.0 * params.a0 * (-2.0 / y.powi(3) + 1.0 / y.powi(4))
            * (params.k_sep / (y * y) + gamma * t).exp()
    };
    let alt_literal = |y: f64| {
        2.0 * params.a0 * (-2.0 / y + 1.0 / (y * y))
            * (params.k_sep / (y * y) + gamma * t).exp()
    };
    let cand_upper = |y: f64| {
        // −∂_y Aˣ with the contravariant component differentiated
        2.0 * params.a0 * params.k_sep * y.powi(-3)
            * (params.k_sep / (y * y) + gamma * t).exp()
    };
    let cand_lower = |y: f64| {
        // −∂_y A_x = −∂_y (y⁻²Aˣ)
        params.a0 * (2.0 * y.powi(-3) + 2.0 * params.k_sep * y.powi(-5))
            * (params.k_sep / (y * y) + gamma * t).exp()
    };

    let mut ratio_dev = 0.0f64;
    let mut upper_rel = 0.0f64;
    let mut lower_rel = 0.0f64;
    for j in 0..grid.ny() {
        let y = grid.y(j);
        let p = printed(y);
        if p.abs() > 1e-9 {
            ratio_dev = ratio_dev.max((alt_literal(y) / p / (y * y) - 1.0).abs());
            upper_rel = upper_rel.max((cand_upper(y) - p).abs() / p.abs());
            lower_rel = lower_rel.max((cand_lower(y) - p).abs() / p.abs());
        }
    }
    Ok(json!({
        "id": "two-form-prefactor",
        "location": "force-free magnetic two-form, printed in two prefactor variants",
        "readings": [
            {
                "name": "printed_bracket",
                "description": "coefficient with the (−2y⁻³ + y⁻⁴) bracket, evaluated as the reference",
            },
            {
                "name": "uniform-form_bracket_literal",
                "description": "coefficient with the (−2y⁻¹ + y⁻²) bracket read literally against dx∧dy (ignoring the y⁻² inside the uniform reference form)",
                "ratio_to_printed_over_y2_max_dev": ratio_dev,
            },
            {
                "name": "derivative_of_contravariant",
                "description": "−∂_y Aˣ (upper-index component differentiated)",
                "max_rel_residual_vs_printed": upper_rel,
            },
            {
                "name": "derivative_of_covariant",
                "description": "−∂_y A_x with A_x = y⁻²Aˣ (lowered component differentiated)",
                "max_rel_residual_vs_printed": lower_rel,
            }
        ],
        "finding": "the two printed brackets differ by exactly y² (the uniform reference form carries the missing y⁻²); neither derivative reading reproduces the printed coefficient exactly — both residuals are order one and are recorded rather than resolved",
    }))
}

fn errata_restoring_force() -> Result<serde_json::Value> {
    let ys = [0.5, 1.0, 1.5, 2.0, 3.0];
    let mut chain = Vec::new();
    let mut arc = Vec::new();
    for &y in &ys {
        chain.push(json!({
            "y": y,
            "residual": nongeodesic_residual(
                y,
                VerticalFlowProfile::Parabolic,
                FlowDerivative::FlowParameter,
                restoring_force_claimed(y),
            )?,
        }));
        arc.push(json!({
            "y": y,
            "residual": nongeodesic_residual(
                y,
                VerticalFlowProfile::Parabolic,
                FlowDerivative::ArcLength,
                restoring_force_claimed(y),
            )?,
        }));
    }
    Ok(json!({
        "id": "restoring-force-closure",
        "location": "non-geodesic flow equation with the parabolic vertical profile and the claimed restoring force F(y) = −y",
        "readings": [
            {
                "name": "flow_parameter",
                "description": "d/ds read along the flow parameter (dy/ds = Vʸ): left side is y³, residual y³ + y",
                "residuals": chain,
            },
            {
                "name": "arc_length",
                "description": "d/ds read along metric arc length (dy/ds = Vʸ/|V|): left side is 2y² − y³",
                "residuals": arc,
            }
        ],
        "finding": "under neither reading does the parabolic profile close with the claimed force; at y = 1 the flow-parameter residual is 2",
    }))
}

fn errata_small_y_energy(grid: &Grid, params: &ForceFreeParams) -> Result<serde_json::Value> {
    // closed-form energy series on the grid
    let times: Vec<f64> = (0..7).map(|k| 0.05 * k as f64).collect();
    let mut energies = Vec::new();
    for &t in &times {
        let bz = ScalarField::try_from_fn(grid.clone(), |x, y| {
            analytic::force_free_bz(
                &HalfPlanePoint::with_min_y(x, y, f64::MIN_POSITIVE)?,
                t,
                params,
            )
        })?;
        energies.push(magnetic_energy(&MagneticTwoForm::new(bz)));
    }
    let report = energy_report_from_series(&times, &energies, grid, params)?;
    Ok(json!({
        "id": "small-y-energy",
        "location": "magnetic-energy approximation for y → 0, printed with a stray out-of-plane symbol and a single exponential factor",
        "readings": [
            {
                "name": "literal",
                "description": "−⅓·x·y⁻³·e^{γt} evaluated literally with the stray symbol read as 1",
                "value": report.small_y_literal,
                "probe": { "x": report.probe.0, "y": report.probe.1, "t": report.probe.2 },
            },
            {
                "name": "quadrature",
                "description": "∫B²μ over the small-y band [y_min, 2·y_min], honest trapezoidal quadrature of the closed form",
                "value": report.small_y_quadrature,
            }
        ],
        "measurements": {
            "quadrature_over_literal": report.small_y_ratio,
            "fitted_energy_rate": report.fitted_rate,
            "expected_energy_rate_2gamma": report.expected_rate,
        },
        "finding": "the literal form is negative while the energy integrand is non-negative, and its single exponential disagrees with the e^{2γt} separability of the quadratic functional; the honest energy series fits rate 2γ",
    }))
}

fn errata_advection_index(grid: &Grid, params: &ForceFreeParams) -> Result<serde_json::Value> {
    let family = AnalyticFamily::ForceFree(*params);
    let a = family.sample(grid, 0.0)?;
    let flow = family.natural_flow();
    let (low_x, low_y) = advection_term_with(&a, &flow, IndexPlacement::Lowered)?;
    let (con_x, con_y) = advection_term_with(&a, &flow, IndexPlacement::Contravariant)?;
    let mut max_ratio_dev = 0.0f64;
    let mut max_abs_diff = 0.0f64;
    for i in 0..grid.nx() {
        for j in 0..grid.ny() {
            let y2 = grid.y(j) * grid.y(j);
            for (low, con) in [(&low_x, &con_x), (&low_y, &con_y)] {
                let l = low.value(i, j);
                let c = con.value(i, j);
                max_abs_diff = max_abs_diff.max((c - l).abs());
                if l.abs() > 1e-9 {
                    max_ratio_dev = max_ratio_dev.max((c / (y2 * l) - 1.0).abs());
                }
            }
        }
    }
    Ok(json!({
        "id": "advection-index-placement",
        "location": "advection term U_j(A^{i,j} − A^{j,i}): the flow index is not stated to be lowered or left contravariant",
        "readings": [
            { "name": "lowered", "description": "U_j = g_jk Uᵏ (adopted default)" },
            {
                "name": "contravariant",
                "description": "Uᵏ contracted directly, no lowering",
                "max_abs_difference": max_abs_diff,
                "pointwise_ratio_is_y2_max_dev": max_ratio_dev,
            }
        ],
        "finding": "the two readings differ pointwise by exactly the metric factor y²; the lowered form is adopted because it makes the advection speed the coordinate flow speed",
    }))
}

fn errata_eigenvalue_substitution(grid: &Grid, params: &ForceFreeParams) -> Result<serde_json::Value> {
    let family = AnalyticFamily::ForceFree(*params);
    let a = family.sample(grid, 0.0)?;
    let lambda = params.lambda;
    let interior_max = |f: &ScalarField| {
        let mut m = 0.0f64;
        for i in 2..grid.nx() - 2 {
            for j in 2..grid.ny() - 2 {
                m = m.max(f.value(i, j).abs());
            }
        }
        m
    };
    let res_y = eigenmode_check(&a, lambda, Component::Y);
    let res_x = eigenmode_check(&a, lambda, Component::X);
    let scale_y = interior_max(a.ay());
    let scale_x = interior_max(a.ax());
    Ok(json!({
        "id": "eigenvalue-substitution",
        "location": "component equations assume ∇²Aⁱ = −λ²Aⁱ, but no λ is exhibited for the closed forms",
        "readings": [
            {
                "name": "vertical_component",
                "description": "Aʸ = A⁰y² profile at the nominal λ",
                "interior_residual_max": interior_max(&res_y),
                "field_scale": scale_y,
                "relative": interior_max(&res_y) / scale_y.max(1e-300),
            },
            {
                "name": "horizontal_component",
                "description": "Aˣ = A⁰e^{Ky⁻²} profile at the nominal λ",
                "interior_residual_max": interior_max(&res_x),
                "field_scale": scale_x,
                "relative": interior_max(&res_x) / scale_x.max(1e-300),
            }
        ],
        "finding": "the y² profile is an exact λ = 1 eigenmode of the covariant Laplacian (residual at discretisation level); the exponential profile is not an eigenmode for any constant λ — its residual is order one relative to the field",
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_cfg(dir: &Path, text: &str) -> std::path::PathBuf {
        let path = dir.join("config.toml");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    const FAST_CFG: &str = r#"
[grid]
x_min = 0.0
x_max = 2.0
y_min = 0.25
y_max = 4.0
nx = 24
ny = 48

[params]
model = "force_free"
a0 = 1.0
k_sep = 1.0
lambda = 1.0
eta = 0.1
v0 = 2.0

[solver]
dt = 5e-4
t_end = 0.02
snapshot_every = 5

[output]
directory = "out"
"#;

    #[test]
    fn geometry_check_passes_on_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(dir.path(), FAST_CFG);
        let out = dir.path().join("out");
        let outcome = cmd_geometry_check(&cfg, &out).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);
        crate::cli::manifest::verify_manifest(&out).unwrap();
    }

    #[test]
    fn geometry_check_flags_coarse_fd_step() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{FAST_CFG}\n[geometry]\nfd_step = 0.5\nsamples = 500\n");
        let cfg = write_cfg(dir.path(), &text);
        let outcome = cmd_geometry_check(&cfg, &dir.path().join("out")).unwrap();
        assert_eq!(outcome.exit_code, 1);
    }

    #[test]
    fn geometry_check_rejects_bad_config() {
        let dir = tempfile::tempdir().unwrap();
        let text = FAST_CFG.replace("y_min = 0.25", "y_min = -1.0");
        let cfg = write_cfg(dir.path(), &text);
        let err = cmd_geometry_check(&cfg, &dir.path().join("out")).unwrap_err();
        assert_eq!(exit_code_for_error(&err), 2);
        assert!(err.to_string().contains("y_min"));
    }

    #[test]
    fn evolve_small_run_produces_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(dir.path(), FAST_CFG);
        let out = dir.path().join("out");
        let outcome = cmd_evolve(&cfg, &out).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);
        assert!(out.join("norm_series.csv").exists());
        let manifest = crate::cli::manifest::verify_manifest(&out).unwrap();
        assert!(manifest.diagnostics.get("gamma_est").is_some());
    }

    #[test]
    fn evolve_rejects_unstable_dt() {
        let dir = tempfile::tempdir().unwrap();
        let text = FAST_CFG.replace("dt = 5e-4", "dt = 1.0").replace("t_end = 0.02", "t_end = 2.0");
        let cfg = write_cfg(dir.path(), &text);
        let err = cmd_evolve(&cfg, &dir.path().join("out")).unwrap_err();
        assert_eq!(exit_code_for_error(&err), 2);
        assert!(err.to_string().contains("bound"), "{err}");
    }

    #[test]
    fn deviation_pass_and_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let args = DeviationArgs { s_end: 5.0, n_steps: 10_000, j0: 0.0, dj0: 1.0, tol: 1e-8 };
        let outcome = cmd_deviation(&args, &dir.path().join("out")).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);

        let bad = DeviationArgs { s_end: 0.0, ..args };
        assert!(cmd_deviation(&bad, &dir.path().join("out2")).is_err());
        let bad = DeviationArgs { n_steps: 5, ..args };
        assert!(cmd_deviation(&bad, &dir.path().join("out3")).is_err());
    }

    #[test]
    fn errata_emits_all_entries() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(dir.path(), FAST_CFG);
        let out = dir.path().join("out");
        let outcome = cmd_errata(&cfg, &out).unwrap();
        assert_eq!(outcome.exit_code, 0);
        let ledger: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("errata_ledger.json")).unwrap())
                .unwrap();
        let ids: Vec<&str> = ledger["entries"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["id"].as_str().unwrap())
            .collect();
        for required in [
            "diffusion-sign",
            "two-form-prefactor",
            "restoring-force-closure",
            "small-y-energy",
        ] {
            assert!(ids.contains(&required), "missing {required} in {ids:?}");
        }
    }

    #[test]
    fn reversal_force_free_and_forced() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(dir.path(), FAST_CFG);
        let outcome = cmd_reversal(&cfg, &dir.path().join("outff")).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);

        // forced, physical line at y = 1
        let text = FAST_CFG
            .replace(
                "model = \"force_free\"\na0 = 1.0\nk_sep = 1.0\nlambda = 1.0",
                "model = \"forced\"\ngamma = -1.0",
            )
            .replace("v0 = 2.0", "v0 = -2.0");
        let cfg = write_cfg(dir.path(), &text);
        let outcome = cmd_reversal(&cfg, &dir.path().join("outf")).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);

        // forced, unphysical line: flagged, zero crossings, still exit 0
        let text2 = text.replace("v0 = -2.0", "v0 = 2.0");
        let cfg = write_cfg(dir.path(), &text2);
        let outcome = cmd_reversal(&cfg, &dir.path().join("outu")).unwrap();
        assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);
        assert!(outcome.summary.contains("no physical"));
    }

    #[test]
    fn sweep_rejects_empty_eta_list() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(dir.path(), FAST_CFG);
        let err = cmd_sweep_eta(&cfg, &dir.path().join("out"), Some(vec![])).unwrap_err();
        assert_eq!(exit_code_for_error(&err), 2);
    }
}
