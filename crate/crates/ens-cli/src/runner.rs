//! Scenario execution: generate → step → snapshot diagnostics → decay fits
//! → summary. Streams the time series to CSV as it goes (an abort leaves the
//! partial series and a summary on disk) and is deterministic given the
//! config.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use ens_core::diagnostics::{
    detect_usable_window, fit_decay, lyapunov, lyapunov_k, monotonicity_check, nash_lower_bounds,
    negative_regularity, LyapunovSample, ZAccumulator,
};
use ens_core::dynamics::{conserved_mass, min_density};
use ens_core::initial::{generate, NormalizeMode, RhoStyle, Scenario, VelocityStyle};
use ens_core::integrator::{advective_cfl_bound, Stepper};
use ens_core::lp::{BesovSpec, DyadicPartition, SumExp, BERNSTEIN_CONST};
use ens_core::ops::divergence;
use ens_core::{CoreError, FluidState};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::series::SeriesWriter;
use crate::stateio::export_state;

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub config: RunConfig,
    /// Effective end time (steps × dt; t_end rounded up to a whole step).
    pub t_end_effective: f64,
    pub fits: Vec<FitOutcome>,
    pub constants: Constants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub wallclock_s: f64,
    pub revision: String,
}

/// A decay-fit result; `error` is set (and the numbers absent) when the fit
/// was refused, e.g. on nonpositive values.
#[derive(Clone, Debug, Serialize)]
pub struct FitOutcome {
    pub name: String,
    pub expr: String,
    pub requested_window: [f64; 2],
    pub window: [f64; 2],
    pub floored: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Observed run-level constants and invariant drifts.
#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    pub z0: f64,
    pub z_final: f64,
    /// Z(t_end)/Z(0); the boundedness constant for the smallness functional.
    pub z_growth: f64,
    pub l_initial: f64,
    pub neg_reg_initial: f64,
    pub neg_reg_sup: f64,
    /// sup_t of the weak norm over its initial value (propagation constant).
    pub neg_reg_sup_ratio: f64,
    pub monotonicity_max_excess: f64,
    pub monotonicity_max_excess_rate: f64,
    pub nash_min_ratio_one_minus: f64,
    pub nash_min_ratio_inv: f64,
    pub mass_drift_max: f64,
    pub div_u_max: f64,
    pub min_rho_min: f64,
    pub cfl_bound_min: f64,
    pub steps: usize,
    pub snapshots: usize,
}

/// Compact stability digest for the summary (full traces go to CSV).
#[derive(Clone, Debug, Serialize)]
pub struct StabilityDigest {
    pub sizes: Vec<f64>,
    pub z_delta_initial: Vec<f64>,
    pub z_delta_final: Vec<f64>,
    /// sup_t Z_δ(t)/Z_δ(0) per size.
    pub sup_ratio: Vec<f64>,
}

/// Full perturbation trace, one per requested size.
#[derive(Clone, Debug)]
pub struct StabilityTrace {
    pub size: f64,
    pub times: Vec<f64>,
    pub z_delta: Vec<f64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub series_path: PathBuf,
    pub summary_path: PathBuf,
    pub stability: Vec<StabilityTrace>,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let sizes: Vec<f64> = if cfg.diagnostics.stability_pair {
        vec![cfg.diagnostics.perturbation_size]
    } else {
        vec![]
    };
    run_with_perturbations(cfg, &sizes)
}

/// Evolve the base state plus one perturbed companion per entry of `sizes`
/// in lockstep. The δ-functional per the two-solution stability estimate is
///
/// ```text
///   Z_δ = ‖δρ‖_{Ḃ^{d/2−1}} + ‖δw‖_{Ḃ^{d/2}} + ‖δu‖_{Ḃ^{d/2−1}}
///       + (1/2c_B²)‖δw−δu‖_{Ḃ^{d/2−1}}
/// ```
pub fn run_with_perturbations(cfg: &RunConfig, sizes: &[f64]) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let scenario = cfg.scenario();
    let state0 = generate(&scenario)?;
    let grid = state0.grid().clone();
    let partition = DyadicPartition::new(&grid);

    std::fs::create_dir_all(&cfg.output.dir)?;
    let series_path = cfg.output.dir.join(&cfg.output.series);
    let summary_path = cfg.output.dir.join(&cfg.output.summary);

    // companions
    let mut companions: Vec<FluidState> = Vec::new();
    for &size in sizes {
        if !size.is_finite() || size <= 0.0 {
            return Err(CliError::Config(format!("perturbation size must be positive: {size}")));
        }
        companions.push(perturb(&scenario, &state0, size)?);
    }

    // column layout
    let mut header: Vec<String> = ["t", "l2_w", "l2_u", "l2_diff", "L", "H", "Z", "min_rho"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for b in &cfg.diagnostics.besov_columns {
        header.push(b.column_name());
    }
    let k = scenario.k_extra;
    if k > 0 {
        header.push("lk".into());
        header.push("hk".into());
    }
    if cfg.diagnostics.linf {
        header.push("linf_w".into());
        header.push("linf_u".into());
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut writer = SeriesWriter::create(&series_path, &header_refs)?;

    let stepper = Stepper::new(&grid, cfg.step_config())?;
    let dt = cfg.step.dt;
    let n_steps = ((cfg.step.t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let stride = cfg.step.snapshot_stride;

    let mut state = state0;
    let mut zacc = ZAccumulator::new();
    let mut samples: Vec<LyapunovSample> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut table: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    let mut traces: Vec<StabilityTrace> = sizes
        .iter()
        .map(|&s| StabilityTrace { size: s, times: Vec::new(), z_delta: Vec::new() })
        .collect();

    let mass0 = conserved_mass(&state);
    let mut mass_drift_max = 0.0f64;
    let mut div_u_max = 0.0f64;
    let mut min_rho_min = f64::INFINITY;
    let mut neg_reg_sup = 0.0f64;
    let mut cfl_min = f64::INFINITY;
    let mut snapshots = 0usize;

    let snapshot = |state: &FluidState,
                        companions: &[FluidState],
                        zacc: &mut ZAccumulator,
                        samples: &mut Vec<LyapunovSample>,
                        times: &mut Vec<f64>,
                        table: &mut Vec<Vec<f64>>,
                        traces: &mut Vec<StabilityTrace>,
                        writer: &mut SeriesWriter|
     -> Result<()> {
        let sample =
            if k > 0 { lyapunov_k(state, &partition, k) } else { lyapunov(state, &partition) };
        zacc.push_norms(
            state.t,
            sample.norms["rho_mid"],
            sample.norms["w_lo"],
            sample.norms["w_hi"],
            sample.norms["u_lo"],
            sample.norms["u_hi"],
            sample.norms["diff_lo"],
        );
        let mut row: Vec<f64> = vec![
            state.t,
            state.w.l2_norm(),
            state.u.l2_norm(),
            state.diff().l2_norm(),
            sample.l,
            sample.h,
            zacc.value(),
            min_density(state),
        ];
        for b in &cfg.diagnostics.besov_columns {
            let field = match b.field {
                crate::config::FieldTag::Rho => state.rho.clone(),
                crate::config::FieldTag::W => state.w.clone(),
                crate::config::FieldTag::U => state.u.clone(),
                crate::config::FieldTag::Diff => state.diff(),
            };
            row.push(partition.besov_norm(&field, &b.spec()));
        }
        if k > 0 {
            row.push(sample.lk.unwrap_or(0.0));
            row.push(sample.hk.unwrap_or(0.0));
        }
        if cfg.diagnostics.linf {
            row.push(state.w.linf_norm());
            row.push(state.u.linf_norm());
        }
        writer.write_row(&row)?;
        for (c, v) in row.iter().enumerate() {
            table[c].push(*v);
        }
        times.push(state.t);
        samples.push(sample);
        for (trace, comp) in traces.iter_mut().zip(companions) {
            trace.times.push(state.t);
            trace.z_delta.push(z_delta(state, comp, &partition));
        }
        Ok(())
    };

    // per-snapshot scalar monitors, folded in after each snapshot call
    let monitor = |state: &FluidState,
                       mass_drift_max: &mut f64,
                       div_u_max: &mut f64,
                       min_rho_min: &mut f64,
                       neg_reg_sup: &mut f64,
                       cfl_min: &mut f64| {
        *mass_drift_max = (conserved_mass(state) - mass0).abs().max(*mass_drift_max);
        *div_u_max = divergence(&state.u).l2_norm().max(*div_u_max);
        *min_rho_min = min_density(state).min(*min_rho_min);
        *neg_reg_sup = negative_regularity(state, &partition).max(*neg_reg_sup);
        *cfl_min = advective_cfl_bound(state, 1.0).min(*cfl_min);
    };

    let neg_reg_initial = negative_regularity(&state, &partition);
    snapshot(
        &state,
        &companions,
        &mut zacc,
        &mut samples,
        &mut times,
        &mut table,
        &mut traces,
        &mut writer,
    )?;
    monitor(
        &state,
        &mut mass_drift_max,
        &mut div_u_max,
        &mut min_rho_min,
        &mut neg_reg_sup,
        &mut cfl_min,
    );
    snapshots += 1;

    let mut aborted: Option<String> = None;
    let mut steps_done = 0usize;
    'outer: for step in 1..=n_steps {
        let advanced: std::result::Result<(), CoreError> = (|| {
            stepper.step(&mut state)?;
            for comp in companions.iter_mut() {
                stepper.step(comp)?;
            }
            Ok(())
        })();
        if let Err(e) = advanced {
            aborted = Some(e.to_string());
            break 'outer;
        }
        steps_done = step;
        if step % stride == 0 || step == n_steps {
            snapshot(
                &state,
                &companions,
                &mut zacc,
                &mut samples,
                &mut times,
                &mut table,
                &mut traces,
                &mut writer,
            )?;
            monitor(
                &state,
                &mut mass_drift_max,
                &mut div_u_max,
                &mut min_rho_min,
                &mut neg_reg_sup,
                &mut cfl_min,
            );
            snapshots += 1;
        }
    }
    drop(writer);

    // fits on the in-memory table
    let mut fits = Vec::new();
    for f in &cfg.diagnostics.fits {
        fits.push(evaluate_fit(f, &header, &times, &table, cfg.diagnostics.detect_floor));
    }

    let mono = monotonicity_check(&samples);
    let nash = nash_lower_bounds(&samples, grid.d());
    let z0 = budget_z0_of(&samples);
    let z_final = zacc.value();
    let constants = Constants {
        z0,
        z_final,
        z_growth: if z0 > 0.0 { z_final / z0 } else { 0.0 },
        l_initial: samples.first().map(|s| s.l).unwrap_or(0.0),
        neg_reg_initial,
        neg_reg_sup,
        neg_reg_sup_ratio: if neg_reg_initial > 0.0 { neg_reg_sup / neg_reg_initial } else { 0.0 },
        monotonicity_max_excess: mono.max_excess,
        monotonicity_max_excess_rate: mono.max_excess_rate,
        nash_min_ratio_one_minus: nash.min_ratio_one_minus,
        nash_min_ratio_inv: nash.min_ratio_inv,
        mass_drift_max,
        div_u_max,
        min_rho_min,
        cfl_bound_min: cfl_min,
        steps: steps_done,
        snapshots,
    };

    let stability = if traces.is_empty() {
        None
    } else {
        write_stability_csv(&cfg.output.dir.join("stability.csv"), &traces)?;
        Some(StabilityDigest {
            sizes: traces.iter().map(|t| t.size).collect(),
            z_delta_initial: traces.iter().map(|t| t.z_delta[0]).collect(),
            z_delta_final: traces.iter().map(|t| *t.z_delta.last().unwrap()).collect(),
            sup_ratio: traces
                .iter()
                .map(|t| {
                    let z0 = t.z_delta[0];
                    if z0 > 0.0 {
                        t.z_delta.iter().cloned().fold(0.0, f64::max) / z0
                    } else {
                        0.0
                    }
                })
                .collect(),
        })
    };

    if cfg.output.save_state {
        export_state(&cfg.output.dir.join("final_state.bin"), &state)?;
    }

    let summary = RunSummary {
        scenario: scenario.name.clone(),
        config: cfg.clone(),
        t_end_effective: n_steps as f64 * dt,
        fits,
        constants,
        stability,
        aborted: aborted.clone(),
        wallclock_s: started.elapsed().as_secs_f64(),
        revision: revision(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, json)?;

    if let Some(reason) = aborted {
        return Err(CliError::Core(CoreError::NumericalAbort { t: state.t, reason }));
    }
    Ok(RunOutput { summary, series_path, summary_path, stability: traces })
}

/// Z₀: the budget at the first snapshot; derived from the recorded norms so
/// it matches what the series file shows.
fn budget_z0_of(samples: &[LyapunovSample]) -> f64 {
    samples
        .first()
        .map(|s| s.norms["rho_mid"] + s.norms["w_lo"] + s.norms["w_hi"] + s.norms["u_lo"])
        .unwrap_or(0.0)
}

fn evaluate_fit(
    spec: &crate::config::FitSpec,
    header: &[String],
    times: &[f64],
    table: &[Vec<f64>],
    detect_floor: bool,
) -> FitOutcome {
    let mut out = FitOutcome {
        name: spec.name.clone(),
        expr: spec.expr.clone(),
        requested_window: spec.window,
        window: spec.window,
        floored: false,
        exponent: None,
        amplitude: None,
        c0: None,
        residual: None,
        samples: 0,
        error: None,
    };
    let values = match eval_expr(&spec.expr, header, table) {
        Ok(v) => v,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let mut window = (spec.window[0], spec.window[1]);
    if detect_floor {
        let usable = detect_usable_window(times, &values, window);
        if usable.floored {
            out.floored = true;
            window = (usable.start, usable.end);
        }
    }
    let mode = match spec.c0_mode() {
        Ok(m) => m,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    match fit_decay(times, &values, window, mode) {
        Ok(fit) => {
            out.window = [fit.window.0, fit.window.1];
            out.exponent = Some(fit.exponent);
            out.amplitude = Some(fit.amplitude);
            out.c0 = Some(fit.c0);
            out.residual = Some(fit.residual);
            out.samples = fit.samples;
        }
        Err(e) => {
            out.window = [window.0, window.1];
            out.error = Some(e.to_string());
        }
    }
    out
}

fn eval_expr(expr: &str, header: &[String], table: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut acc: Option<Vec<f64>> = None;
    for part in expr.split('+') {
        let name = part.trim();
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Series(format!("no column named {name}")))?;
        match &mut acc {
            None => acc = Some(table[idx].clone()),
            Some(v) => {
                for (a, b) in v.iter_mut().zip(&table[idx]) {
                    *a += b;
                }
            }
        }
    }
    acc.ok_or_else(|| CliError::Series(format!("empty expression {expr:?}")))
}

/// Base state plus a fresh random state of budget `size` drawn from a
/// decorrelated seed stream.
fn perturb(scenario: &Scenario, base: &FluidState, size: f64) -> Result<FluidState> {
    let mut psc = scenario.clone();
    psc.name = format!("{}-perturbation", scenario.name);
    psc.seed = scenario.seed ^ 0x5DEE_CE66_D1CE_CAFE;
    psc.rho_style = RhoStyle::SignedRandom;
    psc.velocity_style = VelocityStyle::RandomBandlimited;
    psc.alpha_target = size;
    psc.normalize = Some(NormalizeMode::BudgetZ0);
    let delta = generate(&psc)?;
    let mut out = base.clone();
    out.rho = out.rho.add(&delta.rho);
    out.w = out.w.add(&delta.w);
    out.u = out.u.add(&delta.u);
    Ok(out)
}

/// Two-solution δ-functional with the damped-difference weight 1/(2c_B²).
pub fn z_delta(a: &FluidState, b: &FluidState, partition: &DyadicPartition) -> f64 {
    let d2 = a.grid().d() as f64 / 2.0;
    let b1 = |s: f64| BesovSpec::all(s, SumExp::One);
    let dr = b.rho.sub(&a.rho);
    let dw = b.w.sub(&a.w);
    let du = b.u.sub(&a.u);
    let dd = dw.sub(&du);
    partition.besov_norm(&dr, &b1(d2 - 1.0))
        + partition.besov_norm(&dw, &b1(d2))
        + partition.besov_norm(&du, &b1(d2 - 1.0))
        + partition.besov_norm(&dd, &b1(d2 - 1.0)) / (2.0 * BERNSTEIN_CONST * BERNSTEIN_CONST)
}

fn write_stability_csv(path: &std::path::Path, traces: &[StabilityTrace]) -> Result<()> {
    let mut header = vec!["t".to_string()];
    for i in 0..traces.len() {
        header.push(format!("zd_{i}"));
    }
    for i in 0..traces.len() {
        header.push(format!("ratio_{i}"));
    }
    let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut w = SeriesWriter::create(path, &refs)?;
    let rows = traces[0].times.len();
    for r in 0..rows {
        let mut row = vec![traces[0].times[r]];
        for t in traces {
            row.push(t.z_delta[r]);
        }
        for t in traces {
            let z0 = t.z_delta[0];
            row.push(if z0 > 0.0 { t.z_delta[r] / z0 } else { 0.0 });
        }
        w.write_row(&row)?;
    }
    Ok(())
}

fn revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::series::Series;
    use tempfile::tempdir;

    fn small_config(dir: &std::path::Path) -> RunConfig {
        let text = format!(
            r#"
[grid]
d = 2
n = 32
l = 4.0
n_cut = 10

[scenario]
name = "unit-run"
rho_style = "signed-random"
velocity_style = "random-bandlimited"
alpha_target = 0.05
seed = 12

[step]
dt = 0.05
t_end = 2.0
snapshot_stride = 4

[diagnostics]
linf = true

[[diagnostics.besov]]
s = 2.0
r = "one"
band = "all"
field = "w"

[[diagnostics.fit]]
name = "velocity-l2"
expr = "l2_w+l2_u"
window = [0.0, 2.0]
c0_mode = "unit"

[output]
dir = "{}"
"#,
            dir.display()
        );
        RunConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn run_writes_series_and_summary_deterministically() {
        let dir = tempdir().unwrap();
        let cfg = small_config(&dir.path().join("a"));
        let out = run(&cfg).unwrap();
        assert!(out.series_path.exists());
        assert!(out.summary_path.exists());
        let s = Series::read(&out.series_path).unwrap();
        // t = 0 plus snapshots at steps 4,8,…,40
        assert_eq!(s.len(), 11);
        assert_eq!(s.names[0], "t");
        assert!(s.names.contains(&"b_2_one_all_w".to_string()));
        assert!(s.names.contains(&"linf_w".to_string()));
        let fit = &out.summary.fits[0];
        assert!(fit.error.is_none());
        assert!(fit.exponent.unwrap() < 0.0, "short run still decays");
        assert!(out.summary.constants.mass_drift_max < 1e-12);
        assert!(out.summary.constants.div_u_max < 1e-10);

        // byte-identical on re-run
        let bytes_a = std::fs::read(&out.series_path).unwrap();
        let cfg_b = small_config(&dir.path().join("b"));
        let out_b = run(&cfg_b).unwrap();
        let bytes_b = std::fs::read(&out_b.series_path).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn zero_scenario_reports_fit_refusal() {
        let dir = tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.scenario.name = "zero".into();
        cfg.scenario.rho_style = crate::config::RhoStyleCfg::Zero;
        cfg.scenario.velocity_style = crate::config::VelocityStyleCfg::Zero;
        cfg.scenario.normalize = crate::config::NormalizeCfg::None;
        let out = run(&cfg).unwrap();
        let fit = &out.summary.fits[0];
        assert!(fit.exponent.is_none());
        assert!(fit.error.as_deref().unwrap_or("").contains("nonpositive"));
        let s = Series::read(&out.series_path).unwrap();
        for name in ["l2_w", "l2_u", "L", "H", "Z"] {
            assert!(s.column(name).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn stability_pair_produces_bounded_ratio_and_csv() {
        let dir = tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.diagnostics.stability_pair = true;
        cfg.diagnostics.perturbation_size = 1e-6;
        let out = run(&cfg).unwrap();
        let digest = out.summary.stability.as_ref().unwrap();
        assert!((digest.z_delta_initial[0] - 1e-6).abs() < 1e-8);
        assert!(digest.sup_ratio[0] > 0.0 && digest.sup_ratio[0] < 10.0);
        assert!(dir.path().join("stability.csv").exists());
    }

    #[test]
    fn abort_flushes_partial_series() {
        let dir = tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        // absurd threshold: the very first check trips
        cfg.step.abort_threshold = 1e-30;
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let s = Series::read(&dir.path().join("series.csv")).unwrap();
        assert!(!s.is_empty(), "t = 0 snapshot must be on disk");
        // summary written with the abort reason
        let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(summary.contains("aborted"));
    }
}
