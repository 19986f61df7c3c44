//! Acceptance gate. One test per numbered criterion; each prints a single
//! `ACCEPTANCE <n> …: PASS/FAIL` line (visible with `--nocapture`, and the
//! harness's own per-test ok/FAILED line mirrors it). Tolerances are pinned
//! here and are not to be loosened to make a failing criterion green.
//!
//! The three expensive runs (2-d nonlinear, 3-d nonlinear, 2-d stability
//! triple) execute once and are shared across criteria via `OnceLock`.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use ens_cli::builtins::builtin;
use ens_cli::checks::sweep_g;
use ens_cli::runner::{run, run_with_perturbations, FitOutcome, RunOutput};
use ens_core::initial::{generate, Scenario};
use ens_core::integrator::{StepConfig, Stepper};
use ens_core::lp::{BesovSpec, DyadicPartition, SumExp, BERNSTEIN_CONST};
use ens_core::ops::{divergence, leray_project};
use ens_core::oracles::{direct_besov, explicit_rk4_tiny};
use ens_core::Grid;

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn shared_run(cell: &'static OnceLock<Result<RunOutput, String>>, name: &str) -> &'static RunOutput {
    cell.get_or_init(|| {
        let mut cfg = builtin(name).unwrap_or_else(|| panic!("{name} is a built-in"));
        cfg.output.dir = out_dir(name);
        run(&cfg).map_err(|e| e.to_string())
    })
    .as_ref()
    .unwrap_or_else(|e| panic!("{name} run failed: {e}"))
}

static SD2D: OnceLock<Result<RunOutput, String>> = OnceLock::new();
static SD3D: OnceLock<Result<RunOutput, String>> = OnceLock::new();
static STAB: OnceLock<Result<RunOutput, String>> = OnceLock::new();

fn sd2d() -> &'static RunOutput {
    shared_run(&SD2D, "small-data-2d")
}

fn sd3d() -> &'static RunOutput {
    shared_run(&SD3D, "small-data-3d")
}

/// Stability triple: base plus perturbations of 1e−6 and 5e−7, for the
/// boundedness and linear-response halves of criterion 8.
fn stability() -> &'static RunOutput {
    STAB.get_or_init(|| {
        let mut cfg = builtin("stability-2d").expect("stability-2d is a built-in");
        cfg.output.dir = out_dir("stability-2d");
        cfg.diagnostics.stability_pair = false; // sizes supplied explicitly
        run_with_perturbations(&cfg, &[1e-6, 5e-7]).map_err(|e| e.to_string())
    })
    .as_ref()
    .unwrap_or_else(|e| panic!("stability run failed: {e}"))
}

fn fit<'a>(out: &'a RunOutput, name: &str) -> &'a FitOutcome {
    out.summary
        .fits
        .iter()
        .find(|f| f.name == name)
        .unwrap_or_else(|| panic!("run has a fit named {name}"))
}

fn exponent(out: &RunOutput, name: &str) -> f64 {
    let f = fit(out, name);
    f.exponent.unwrap_or_else(|| panic!("fit {name} refused: {:?}", f.error))
}

fn gate(n: u32, what: &str, pass: bool, detail: &str) {
    println!("ACCEPTANCE {n} {what}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({what}): {detail}");
}

#[test]
fn acceptance_1_semigroup_coupling_bound() {
    let t0 = Instant::now();
    let r = sweep_g(200, 200);
    let secs = t0.elapsed().as_secs_f64();
    let detail = format!(
        "max |g − dense| = {:.2e} at (t,λ)=({:.3},{:.3}); max |g|/(2t e^(-tλ)) = {:.6}; {:.2}s",
        r.max_abs_err, r.err_at.0, r.err_at.1, r.max_ratio, secs
    );
    gate(
        1,
        "damped-coupling closed form vs dense exponential",
        r.max_abs_err <= 1e-10 && r.max_ratio <= 1.0 && secs < 5.0,
        &detail,
    );
}

#[test]
fn acceptance_2_linear_decay_baseline_2d() {
    let mut cfg = builtin("linear-decay-2d").expect("built-in");
    cfg.output.dir = out_dir("linear-decay-2d");
    let out = run(&cfg).expect("linear run");
    let e = exponent(&out, "velocity-l2");
    let secs = out.summary.wallclock_s;
    let detail = format!("fitted exponent {e:+.4} (want −0.50 ± 0.05); {secs:.1}s");
    gate(
        2,
        "linear 2-d velocity decay",
        (-0.55..=-0.45).contains(&e) && secs < 60.0,
        &detail,
    );
}

#[test]
fn acceptance_3_nonlinear_small_data_2d() {
    let out = sd2d();
    let ev = exponent(out, "velocity-l2");
    let ed = exponent(out, "damped-l2");
    let secs = out.summary.wallclock_s;
    let vel_ok = (-0.58..=-0.42).contains(&ev);
    let damp_ok = (-1.15..=-0.85).contains(&ed);
    let detail = format!(
        "velocity {ev:+.4} (band [−0.58,−0.42]) {}; damped {ed:+.4} (band [−1.15,−0.85]) {}; {secs:.0}s",
        if vel_ok { "ok" } else { "OUT" },
        if damp_ok { "ok" } else { "OUT" },
    );
    gate(3, "nonlinear 2-d decay rates", vel_ok && damp_ok && secs < 600.0, &detail);
}

#[test]
fn acceptance_4_nonlinear_small_data_3d() {
    let out = sd3d();
    let ev = exponent(out, "velocity-l2");
    let ed = exponent(out, "damped-l2");
    let secs = out.summary.wallclock_s;
    // floor reporting: every fit records requested vs effective window, and a
    // clipped fit must shrink the window it actually used
    let floor_reported = out.summary.fits.iter().all(|f| {
        !f.floored || (f.window[1] < f.requested_window[1] && f.window[1] > f.window[0])
    });
    let detail = format!(
        "velocity {ev:+.4} (band [−0.90,−0.60]); damped {ed:+.4} (band [−1.75,−1.25]); floors reported: {floor_reported}; {secs:.0}s",
    );
    gate(
        4,
        "nonlinear 3-d decay rates with floor detection",
        (-0.90..=-0.60).contains(&ev)
            && (-1.75..=-1.25).contains(&ed)
            && floor_reported
            && secs < 1800.0,
        &detail,
    );
}

#[test]
fn acceptance_5_besov_rate_3d() {
    let out = sd3d();
    let e = exponent(out, "sigma-mix");
    let detail = format!("shell-weighted velocity sum exponent {e:+.4} (want −1 ± 0.25)");
    gate(5, "3-d regularity-weighted decay", (-1.25..=-0.75).contains(&e), &detail);
}

#[test]
fn acceptance_6_higher_regularity_rates_3d() {
    let out = sd3d();
    // p = 2 reduces to criterion 4's velocity band; the k-shifted functionals
    // must actually have been tracked in the same run
    let e2 = exponent(out, "velocity-l2");
    let einf = exponent(out, "velocity-linf");
    let has_k = {
        let s = ens_cli::series::Series::read(&out.series_path).expect("series readable");
        s.column("lk").is_ok() && s.column("hk").is_ok()
    };
    let detail = format!(
        "L² exponent {e2:+.4} (band [−0.90,−0.60]); sup-norm exponent {einf:+.4} (want −1.5 ± 0.3); shifted functionals recorded: {has_k}"
    );
    gate(
        6,
        "3-d higher-regularity rates (p=2 and p=∞)",
        (-0.90..=-0.60).contains(&e2) && (-1.8..=-1.2).contains(&einf) && has_k,
        &detail,
    );
}

#[test]
fn acceptance_7_property_suites() {
    let t0 = Instant::now();
    let mut all = true;
    let mut lines: Vec<String> = Vec::new();
    let mut sub = |name: &str, pass: bool, detail: String| {
        lines.push(format!("  {} {name}: {detail}", if pass { "ok " } else { "OUT" }));
        all &= pass;
    };

    // partition of unity
    let mut worst = 0.0f64;
    for (d, n, l, n_cut) in [(2usize, 64usize, 8.0f64, 21usize), (3, 16, 4.0, 5)] {
        let grid = Grid::new(d, n, l, n_cut).expect("grid");
        worst = worst.max(DyadicPartition::new(&grid).partition_defect());
    }
    sub("partition-unity", worst <= 1e-10, format!("defect {worst:.2e} ≤ 1e-10"));

    // Bernstein ratios over 100 random fields
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut blocks = 0usize;
    for seed in 0..100u64 {
        let d = if seed % 2 == 0 { 2 } else { 3 };
        let n = if d == 2 { 32 } else { 16 };
        let sc = Scenario::random(d, n, 6.0, n / 3, 1000 + seed);
        let st = generate(&sc).expect("field");
        let p = DyadicPartition::new(st.grid());
        for j in p.j_min()..=p.j_max() {
            if let Some(r) = p.bernstein_ratio(&st.w, j) {
                lo = lo.min(r);
                hi = hi.max(r);
                blocks += 1;
            }
        }
    }
    sub(
        "bernstein-ratios",
        lo >= 0.75 && hi <= BERNSTEIN_CONST && blocks > 100,
        format!("{blocks} blocks in [{lo:.3}, {hi:.3}] ⊂ [0.75, 8/3]"),
    );

    // Leray idempotence and annihilation
    let sc = Scenario::random(3, 16, 4.0, 5, 77);
    let st = generate(&sc).expect("field");
    let pu = leray_project(&st.w);
    let div = divergence(&pu).l2_norm();
    let idem = leray_project(&pu).sub(&pu).l2_norm();
    sub("leray", div <= 1e-12 && idem <= 1e-12, format!("div {div:.2e}, idem {idem:.2e} ≤ 1e-12"));

    // conservation and constraint drifts on the shared 2-d run
    let c = &sd2d().summary.constants;
    sub("mass-drift", c.mass_drift_max <= 1e-12, format!("{:.2e} ≤ 1e-12", c.mass_drift_max));
    sub("div-u", c.div_u_max <= 1e-12, format!("{:.2e} ≤ 1e-12", c.div_u_max));

    // shell-sum norm vs direct definition
    let mut worst = 0.0f64;
    for seed in [5u64, 6, 7] {
        let sc = Scenario::random(2, 32, 8.0, 10, seed);
        let st = generate(&sc).expect("field");
        let p = DyadicPartition::new(st.grid());
        for s in [-1.5, 0.0, 2.0] {
            for r in [SumExp::One, SumExp::Inf] {
                let spec = BesovSpec::all(s, r);
                let a = p.besov_norm(&st.u, &spec);
                let b = direct_besov(&st.u, &spec);
                worst = worst.max((a - b).abs() / b.max(1e-300));
            }
        }
    }
    sub("besov-vs-direct", worst <= 1e-10, format!("rel err {worst:.2e} ≤ 1e-10"));

    // dt-halving order ratio
    let sc = Scenario::random(2, 16, 4.0, 5, 21);
    let st = generate(&sc).expect("field");
    let grid = st.grid().clone();
    let dt = 0.02;
    let reference = explicit_rk4_tiny(&st, dt / 64.0, 128).expect("reference");
    let mut coarse = st.clone();
    let s1 = Stepper::new(&grid, StepConfig { dt, linear_only: false, abort_threshold: 1e12 })
        .expect("stepper");
    s1.step(&mut coarse).and_then(|_| s1.step(&mut coarse)).expect("coarse");
    let mut fine = st.clone();
    let s2 =
        Stepper::new(&grid, StepConfig { dt: dt / 2.0, linear_only: false, abort_threshold: 1e12 })
            .expect("stepper");
    for _ in 0..4 {
        s2.step(&mut fine).expect("fine");
    }
    let err = |a: &ens_core::FluidState| {
        a.rho.sub(&reference.rho).l2_norm()
            + a.w.sub(&reference.w).l2_norm()
            + a.u.sub(&reference.u).l2_norm()
    };
    let ratio = err(&coarse) / err(&fine);
    sub("dt-halving-order", (3.2..=4.8).contains(&ratio), format!("ratio {ratio:.2} ∈ [3.2, 4.8]"));

    // Lyapunov monotonicity on the 2-d run
    let budget = 1e-3 * c.l_initial;
    sub(
        "monotonicity",
        c.monotonicity_max_excess_rate <= budget,
        format!("max dL/dt excess {:.2e} ≤ {budget:.2e}", c.monotonicity_max_excess_rate),
    );

    // weak-norm propagation constant: finite and recorded in the summary file
    let sup_ratio = c.neg_reg_sup_ratio;
    let recorded = std::fs::read_to_string(sd2d().summary_path.clone())
        .map(|s| s.contains("neg_reg_sup_ratio"))
        .unwrap_or(false);
    sub(
        "weak-norm-propagation",
        sup_ratio.is_finite() && sup_ratio > 0.0 && recorded,
        format!("sup ratio {sup_ratio:.3} (finite, reported: {recorded})"),
    );

    let secs = t0.elapsed().as_secs_f64();
    for l in &lines {
        println!("{l}");
    }
    let detail = format!("{} sub-checks, {secs:.1}s", lines.len());
    gate(7, "invariant and property suites", all && secs < 360.0, &detail);
}

#[test]
fn acceptance_8_stability_pair() {
    let out = stability();
    let digest = out.summary.stability.as_ref().expect("stability digest");
    let full = fit(out, "velocity-l2"); // ensures the base run completed its fits
    assert!(full.exponent.is_some() || full.error.is_some());

    // boundedness of the ratio over t ≤ 50
    let trace_a = &out.stability[0];
    let trace_b = &out.stability[1];
    let z0a = trace_a.z_delta[0];
    let sup_ratio = digest.sup_ratio[0];
    let covers = *trace_a.times.last().unwrap() >= 50.0 - 1e-9;

    // linear response: ε vs ε/2 traces should differ by the factor 2 within 5%
    let mut worst = 0.0f64;
    for (za, zb) in trace_a.z_delta.iter().zip(&trace_b.z_delta) {
        let dev = (za - 2.0 * zb).abs() / za.max(1e-300);
        worst = worst.max(dev);
    }
    let detail = format!(
        "Z_δ(0) = {z0a:.2e}, sup ratio {sup_ratio:.3} over t ≤ 50 (covered: {covers}); halving deviation {:.2}% ≤ 5%",
        100.0 * worst
    );
    gate(
        8,
        "two-solution stability and linear response",
        sup_ratio.is_finite() && sup_ratio > 0.0 && covers && worst <= 0.05,
        &detail,
    );
}
