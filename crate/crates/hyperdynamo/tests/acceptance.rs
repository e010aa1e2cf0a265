//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured runtime (visible with `cargo test --test acceptance --
//! --nocapture`). Solver-heavy criteria serialize on a mutex so wall-clock
//! budgets are measured without the tests stealing each other's cores.

use std::sync::Mutex;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use hyperdynamo::analytic::{
    force_free_bz, forced_bz, growth_rate, reversal_line_forced, ForceFreeParams, ForcedParams,
};
use hyperdynamo::diagnostics::{
    entropy_bound_check, fit_growth_rate, integrate_deviation, magnetic_energy, reversal_scan,
};
use hyperdynamo::fields::{
    covariant_divergence, Grid, MagneticTwoForm, ScalarField, VectorPotentialField,
};
use hyperdynamo::geometry::{gaussian_curvature_at, gaussian_curvature_fd, HalfPlanePoint};
use hyperdynamo::solver::{
    run, stability_bound, AnalyticFamily, BoundaryPolicy, DiffusionSign, FlowField, SolverConfig,
};

static HEAVY: Mutex<()> = Mutex::new(());

fn canonical_params() -> ForceFreeParams {
    ForceFreeParams { a0: 1.0, k_sep: 1.0, lambda: 1.0, eta: 0.1, v0: 2.0 }
}

fn default_grid() -> Grid {
    Grid::new(0.0, 2.0, 0.25, 4.0, 128, 256).unwrap()
}

fn sample_force_free_bz(grid: &Grid, params: &ForceFreeParams, t: f64) -> MagneticTwoForm {
    let bz = ScalarField::try_from_fn(grid.clone(), |x, y| {
        force_free_bz(&HalfPlanePoint::with_min_y(x, y, f64::MIN_POSITIVE)?, t, params)
    })
    .unwrap();
    MagneticTwoForm::new(bz)
}

/// A1 — closed-form curvature exactly −1 and the finite-difference oracle
/// within 1e-6 at h = 1e-3 over 10⁴ random points, y ∈ [0.3, 10].
#[test]
fn a1_curvature() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-3;
    let mut max_fd = 0.0f64;
    for _ in 0..10_000 {
        let y = rng.gen_range(0.3..10.0);
        let p = HalfPlanePoint::new(rng.gen_range(-5.0..5.0), y).unwrap();
        assert_eq!(gaussian_curvature_at(&p), -1.0);
        let err = (gaussian_curvature_fd(&p, h).unwrap() + 1.0).abs();
        max_fd = max_fd.max(err);
        assert!(err <= 1e-6, "fd curvature error {err} at y = {y}");
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1.0, "runtime {dt:.2}s exceeds 1s");
    println!("[A1] PASS ({dt:.2}s) — exact K = -1 at 10^4 points; fd max err {max_fd:.2e} <= 1e-6");
}

/// A2 — geodesic deviation integrator against J₀sinh(s): max relative error
/// ≤ 1e-8 on s ∈ [0, 5] with 10⁴ steps, and fourth-order step-doubling
/// ratio 16 ± 20%.
#[test]
fn a2_geodesic_deviation() {
    let t0 = Instant::now();
    let sol = integrate_deviation(0.0, 1.0, 5.0, 10_000).unwrap();
    let mut max_rel = 0.0f64;
    for (s, j) in sol.s.iter().zip(&sol.j) {
        let exact = s.sinh();
        max_rel = max_rel.max((j - exact).abs() / exact.abs().max(1e-12));
    }
    assert!(max_rel <= 1e-8, "max relative error {max_rel}");

    let exact = 5f64.sinh();
    let err = |n: usize| {
        (integrate_deviation(0.0, 1.0, 5.0, n).unwrap().j.last().unwrap() - exact).abs()
    };
    let ratio = err(250) / err(500);
    assert!((12.8..=19.2).contains(&ratio), "convergence ratio {ratio}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1.0, "runtime {dt:.2}s exceeds 1s");
    println!("[A2] PASS ({dt:.2}s) — max rel err {max_rel:.2e} <= 1e-8; doubling ratio {ratio:.2} in [12.8, 19.2]");
}

fn verification_run(grid: Grid, params: &ForceFreeParams, dt: f64, t_end: f64) -> f64 {
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
    assert!(dt <= stability_bound(&cfg), "dt {dt} above bound {}", stability_bound(&cfg));
    let initial = family.sample(&grid, 0.0).unwrap();
    let result = run(&cfg, &initial).unwrap();
    fit_growth_rate(&result.times, &result.field_l1_norms, 0.5).unwrap().gamma_est
}

/// A3 — growth rate of the pinned-boundary force-free run on the default
/// grid agrees with a y-refined reference run within 1%; the deviation of
/// the reference rate from the formula value γ = 1.9 is reported, not
/// asserted (the closed form does not solve the discretised equation
/// exactly, so the reference run is the authoritative oracle).
#[test]
fn a3_growth_rate() {
    let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let params = canonical_params();
    let gamma_formula = growth_rate(&params);
    assert!((gamma_formula - 1.9).abs() < 1e-12);

    let gamma_default = verification_run(default_grid(), &params, 3.2e-5, 0.5);
    // reference: 1.5x the y resolution (all field variation is in y) with a
    // correspondingly smaller step
    let fine = Grid::new(0.0, 2.0, 0.25, 4.0, 128, 384).unwrap();
    let gamma_ref = verification_run(fine, &params, 1.25e-5, 0.5);

    let rel = (gamma_default - gamma_ref).abs() / gamma_ref.abs();
    assert!(rel <= 0.01, "default {gamma_default} vs reference {gamma_ref}: rel {rel}");
    let formula_dev = (gamma_ref - gamma_formula) / gamma_formula;
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "runtime {dt:.1}s exceeds 60s");
    println!(
        "[A3] PASS ({dt:.1}s) — rate {gamma_default:.5} vs reference {gamma_ref:.5} (rel {rel:.4}); \
         reported deviation from formula 1.9: {:.2}%",
        100.0 * formula_dev
    );
}

/// A4 — the force-free two-form has exactly one reversal crossing at
/// y = 0.5 ± hy for 50 random parameter draws.
#[test]
fn a4_reversal_force_free() {
    let t0 = Instant::now();
    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 32, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for draw in 0..50 {
        let params = ForceFreeParams {
            a0: if rng.gen_bool(0.5) { rng.gen_range(0.1..3.0) } else { rng.gen_range(-3.0..-0.1) },
            k_sep: rng.gen_range(0.0..3.0),
            lambda: rng.gen_range(0.2..2.0),
            eta: rng.gen_range(0.0..0.4),
            v0: rng.gen_range(-2.0..2.0),
        };
        let t = rng.gen_range(0.0..0.5);
        let field = sample_force_free_bz(&grid, &params, t);
        let crossings = reversal_scan(&field, 1.0).unwrap();
        assert_eq!(crossings.len(), 1, "draw {draw}: {params:?}");
        assert!(
            (crossings[0].y - 0.5).abs() <= grid.hy(),
            "draw {draw}: crossing at {}",
            crossings[0].y
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 5.0, "runtime {dt:.2}s exceeds 5s");
    println!("[A4] PASS ({dt:.2}s) — 50 draws, single crossing at 0.5 +/- hy");
}

/// A5 — the forced family reverses at y = V₀/(2γ) ± hy when that line is
/// physical; unphysical parameter sets are flagged and yield no crossings.
#[test]
fn a5_reversal_forced() {
    let t0 = Instant::now();
    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 32, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let sample = |params: &ForcedParams, t: f64| {
        let bz = ScalarField::try_from_fn(grid.clone(), |x, y| {
            forced_bz(&HalfPlanePoint::with_min_y(x, y, f64::MIN_POSITIVE)?, t, params)
        })
        .unwrap();
        MagneticTwoForm::new(bz)
    };
    for draw in 0..20 {
        // physical: γ < 0 with V₀ chosen so y₀ sits inside the grid
        let y0 = rng.gen_range(0.4..3.0);
        let gamma = -rng.gen_range(0.2..2.0);
        let params = ForcedParams { gamma, v0: 2.0 * gamma * y0, eta: 0.1 };
        let line = reversal_line_forced(&params).unwrap();
        assert!(line.physical);
        assert!((line.y0 - y0).abs() < 1e-12);
        let field = sample(&params, 0.1);
        for x_slice in [0.7, 1.3] {
            let crossings = reversal_scan(&field, x_slice).unwrap();
            assert_eq!(crossings.len(), 1, "draw {draw} slice {x_slice}");
            assert!(
                (crossings[0].y - y0).abs() <= grid.hy(),
                "draw {draw}: {} vs {y0}",
                crossings[0].y
            );
        }

        // unphysical: flip the flow sign, line falls outside the half-plane
        let params = ForcedParams { gamma, v0: -2.0 * gamma * y0, eta: 0.1 };
        let line = reversal_line_forced(&params).unwrap();
        assert!(!line.physical);
        let field = sample(&params, 0.1);
        for x_slice in [0.7, 1.3] {
            assert!(reversal_scan(&field, x_slice).unwrap().is_empty(), "draw {draw}");
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 5.0, "runtime {dt:.2}s exceeds 5s");
    println!("[A5] PASS ({dt:.2}s) — physical lines located to hy, unphysical sets flagged with no crossings");
}

/// A6 — fast-dynamo limit sweep over η ∈ {0, 0.05, 0.1, 0.2, 0.4}: the
/// formula column is affine (slope −1, intercept 2) to 1e-12 and every
/// estimated rate tracks its y-refined reference run within 2%.
#[test]
fn a6_eta_sweep() {
    let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
[grid]
x_min = 0.0
x_max = 1.0
y_min = 0.5
y_max = 2.5
nx = 32
ny = 128

[params]
model = "force_free"
a0 = 1.0
k_sep = 1.0
lambda = 1.0
eta = 0.1
v0 = 2.0

[solver]
dt = 1e-3
t_end = 0.5
snapshot_every = 100

[output]
directory = "out"

[sweep]
etas = [0.0, 0.05, 0.1, 0.2, 0.4]
rel_tol = 0.02
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let outcome = hyperdynamo::cli::cmd_sweep_eta(&config, &out, None).unwrap();
    assert_eq!(outcome.exit_code, 0, "{}", outcome.summary);

    let manifest = hyperdynamo::cli::verify_manifest(&out).unwrap();
    let d = &manifest.diagnostics;
    let slope = d["formula_slope"].as_f64().unwrap();
    let intercept = d["formula_intercept"].as_f64().unwrap();
    assert!((slope + 1.0).abs() <= 1e-12, "slope {slope}");
    assert!((intercept - 2.0).abs() <= 1e-12, "intercept {intercept}");
    let rows = d["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!(row["pass"].as_bool().unwrap(), "row failed: {row}");
        assert!(row["rel_err_vs_reference"].as_f64().unwrap() <= 0.02);
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 300.0, "runtime {dt:.1}s exceeds 5 min");
    println!(
        "[A6] PASS ({dt:.1}s) — formula affine (slope {slope:.2e}+1, intercept {intercept:.12}); \
         5/5 rows within 2% of reference"
    );
}

/// A7 — entropy-bound flags are internally consistent on a 20×20 (V₀, η)
/// lattice: γ ≥ 0 ⇔ V₀ ≥ ηλ²/K with no exceptions.
#[test]
fn a7_entropy_ordering() {
    let t0 = Instant::now();
    for iv in 0..20 {
        for ie in 0..20 {
            let params = ForceFreeParams {
                a0: 1.0,
                k_sep: 1.0,
                lambda: 1.0,
                eta: ie as f64 / 19.0,
                v0: 3.0 * iv as f64 / 19.0,
            };
            let check = entropy_bound_check(&params, growth_rate(&params), 1e-12).unwrap();
            assert_eq!(check.fast_dynamo, check.v0_above_threshold, "{params:?}");
            assert!(check.htop_lower_bound >= 0.0);
            if check.fast_dynamo {
                assert_eq!(check.htop_lower_bound, check.gamma_formula);
            }
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1.0, "runtime {dt:.2}s exceeds 1s");
    println!("[A7] PASS ({dt:.2}s) — 400 lattice points, fast-dynamo flags equivalent everywhere");
}

/// A8 — the force-free family is discretely solenoidal to 1e-10 (relative)
/// on a 64×64 grid, and the monitored divergence of an evolve run with an
/// honestly nonzero initial gauge violation stays within 10× its initial
/// value. (The pure closed form digitises to exact zeros in x, which would
/// make the 10× clause vacuous, so the run seeds an x-dependent windowed
/// field.)
#[test]
fn a8_solenoidal() {
    let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let params = canonical_params();
    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 64, 64).unwrap();
    let family = AnalyticFamily::ForceFree(params);
    let a = family.sample(&grid, 0.0).unwrap();
    let div = covariant_divergence(&a);
    let scale = a.ax().max_abs().max(a.ay().max_abs());
    let rel = div.max_abs() / scale;
    assert!(rel <= 1e-10, "relative divergence {rel}");

    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 64, 128).unwrap();
    let lx = grid.x_max() - grid.x_min();
    let ly = grid.y_max() - grid.y_min();
    let initial = VectorPotentialField::try_sample(grid.clone(), |x, y| {
        let wx = (std::f64::consts::PI * x / lx).sin().powi(2);
        let wy = (std::f64::consts::PI * (y - 0.25) / ly).sin().powi(2);
        Ok((
            0.1 * (2.0 * std::f64::consts::PI * x / lx).sin() * wx * wy,
            y * y * wx * wy,
        ))
    })
    .unwrap();
    let mut cfg = SolverConfig {
        grid,
        dt: 0.0,
        t_end: 0.12,
        eta: 0.1,
        flow: FlowField::VerticalProfile { v0: 1.0 },
        diffusion_sign: DiffusionSign::Standard,
        boundary: BoundaryPolicy::DirichletZero,
        snapshot_every: 25,
        store_snapshots: false,
    };
    cfg.dt = 0.8 * stability_bound(&cfg);
    let result = run(&cfg, &initial).unwrap();
    let d0 = result.divergence_max[0];
    assert!(d0 > 0.0);
    let peak = result.divergence_max.iter().copied().fold(0.0f64, f64::max);
    assert!(peak <= 10.0 * d0, "divergence grew {}x", peak / d0);
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 5.0, "runtime {dt:.2}s exceeds 5s");
    println!(
        "[A8] PASS ({dt:.2}s) — family divergence {rel:.2e} (rel) <= 1e-10; run divergence peak {:.2}x initial <= 10x",
        peak / d0
    );
}

/// A9 — energy quadrature converges at second order to the exact 1/2 on
/// the unit-constant subdomain, and the closed-form force-free energy
/// series fits rate 2γ within 1%.
#[test]
fn a9_energy() {
    let t0 = Instant::now();
    let exact = 0.5;
    let mut errs = Vec::new();
    for &n in &[9usize, 17, 33] {
        let g = Grid::new(0.0, 1.0, 1.0, 2.0, n, n).unwrap();
        let ones = MagneticTwoForm::new(ScalarField::from_fn(g, |_, _| 1.0).unwrap());
        errs.push((magnetic_energy(&ones) - exact).abs());
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    for &ratio in &ratios {
        assert!((3.5..=4.5).contains(&ratio), "quadrature ratio {ratio}, errs {errs:?}");
    }

    let params = canonical_params();
    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 64, 128).unwrap();
    let times: Vec<f64> = (0..7).map(|k| 0.05 * k as f64).collect();
    let energies: Vec<f64> = times
        .iter()
        .map(|&t| magnetic_energy(&sample_force_free_bz(&grid, &params, t)))
        .collect();
    let fit = fit_growth_rate(&times, &energies, 1.0).unwrap();
    let expected = 2.0 * growth_rate(&params);
    let rel = (fit.gamma_est - expected).abs() / expected.abs();
    assert!(rel <= 0.01, "energy rate {} vs {expected}", fit.gamma_est);
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 10.0, "runtime {dt:.2}s exceeds 10s");
    println!(
        "[A9] PASS ({dt:.2}s) — O(h^2) quadrature (refinement ratios {ratios:.3?}); energy rate {:.6} vs 2γ = {expected} (rel {rel:.2e})",
        fit.gamma_est
    );
}

/// A10 — the discrepancy ledger contains all four documented entries, each
/// with both readings evaluated numerically.
#[test]
fn a10_errata_ledger() {
    let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    std::fs::write(
        &config,
        r#"
[grid]
x_min = 0.0
x_max = 2.0
y_min = 0.25
y_max = 4.0
nx = 48
ny = 96

[params]
model = "force_free"
a0 = 1.0
k_sep = 1.0
lambda = 1.0
eta = 0.1
v0 = 2.0

[solver]
dt = 1e-4
t_end = 0.01
snapshot_every = 10

[output]
directory = "out"
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let outcome = hyperdynamo::cli::cmd_errata(&config, &out).unwrap();
    assert_eq!(outcome.exit_code, 0);

    let ledger: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("errata_ledger.json")).unwrap(),
    )
    .unwrap();
    let entries = ledger["entries"].as_array().unwrap();
    for required in [
        "diffusion-sign",
        "two-form-prefactor",
        "restoring-force-closure",
        "small-y-energy",
    ] {
        let entry = entries
            .iter()
            .find(|e| e["id"] == required)
            .unwrap_or_else(|| panic!("missing entry {required}"));
        let readings = entry["readings"].as_array().unwrap();
        assert!(readings.len() >= 2, "{required} needs both readings");
        // every entry carries concrete numbers, not just prose
        let text = entry.to_string();
        assert!(
            text.matches(|c: char| c.is_ascii_digit()).count() > 8,
            "{required} carries no measurements"
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "runtime {dt:.1}s exceeds 60s");
    println!(
        "[A10] PASS ({dt:.1}s) — {} ledger entries, all four documented discrepancies present with both readings",
        entries.len()
    );
}

/// A11 — two `evolve` invocations with identical config produce
/// byte-identical CSV artifacts, including under different worker-thread
/// settings.
#[test]
fn a11_determinism() {
    let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    std::fs::write(
        &config,
        r#"
[grid]
x_min = 0.0
x_max = 2.0
y_min = 0.25
y_max = 4.0
nx = 48
ny = 64

[params]
model = "force_free"
a0 = 1.0
k_sep = 1.0
lambda = 1.0
eta = 0.1
v0 = 2.0

[solver]
dt = 2e-4
t_end = 0.04
snapshot_every = 20

[output]
directory = "out"
snapshot_cadence = 2
"#,
    )
    .unwrap();

    let run_once = |label: &str, threads: &str| {
        let out = dir.path().join(label);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_hyperdynamo"))
            .args(["evolve", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env("HYPERDYNAMO_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "evolve failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        out
    };
    let out1 = run_once("run1", "1");
    let out2 = run_once("run2", "2");
    let out3 = run_once("run3", "1");

    let mut names: Vec<String> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.len() > 1, "expected snapshot artifacts, got {names:?}");
    for name in &names {
        let b1 = std::fs::read(out1.join(name)).unwrap();
        let b2 = std::fs::read(out2.join(name)).unwrap();
        let b3 = std::fs::read(out3.join(name)).unwrap();
        assert_eq!(b1, b2, "{name} differs across thread counts");
        assert_eq!(b1, b3, "{name} differs across runs");
    }
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "[A11] PASS ({dt:.1}s) — {} CSV artifacts byte-identical across repeat runs and thread counts",
        names.len()
    );
}
