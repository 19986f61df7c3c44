//! Self-check machinery behind the `sweep-g` and `validate` verbs: closed
//! forms against dense 2×2 matrix exponentials, partition/projection
//! identities, and conservation drifts, all at sizes that finish in seconds.

use ens_core::dynamics::conserved_mass;
use ens_core::initial::{generate, Scenario};
use ens_core::integrator::{damped_mode_propagator, propagator_entries, StepConfig, Stepper};
use ens_core::lp::{BesovSpec, DyadicPartition, SumExp};
use ens_core::ops::{divergence, leray_project};
use ens_core::oracles::{dense_matrix_exp, direct_besov, explicit_rk4_tiny};
use ens_core::Grid;

use crate::error::Result;

/// Worst-case errors of the damped-pair coupling entry `g(t, λ)` over a
/// (t, λ) sweep, against the dense matrix exponential of [[−1, λ], [0, −λ]],
/// plus the sharpness ratio `|g| / (2 t e^{−tλ})` which must stay ≤ 1.
#[derive(Clone, Copy, Debug)]
pub struct SweepGReport {
    pub t_points: usize,
    pub lambda_points: usize,
    pub max_abs_err: f64,
    pub err_at: (f64, f64),
    pub max_ratio: f64,
    pub ratio_at: (f64, f64),
}

pub fn sweep_g(t_points: usize, lambda_points: usize) -> SweepGReport {
    let mut report = SweepGReport {
        t_points,
        lambda_points,
        max_abs_err: 0.0,
        err_at: (0.0, 0.0),
        max_ratio: 0.0,
        ratio_at: (0.0, 0.0),
    };
    let (t_min, t_max) = (1e-3f64, 50.0f64);
    for i in 0..t_points {
        let frac = if t_points > 1 { i as f64 / (t_points - 1) as f64 } else { 1.0 };
        let t = t_min * (t_max / t_min).powf(frac);
        for j in 1..=lambda_points {
            let lambda = j as f64 / (lambda_points + 1) as f64;
            let g = damped_mode_propagator(t, lambda).b;
            let dense = dense_matrix_exp([[-1.0, lambda], [0.0, -lambda]], t);
            let err = (g - dense[0][1]).abs();
            if err > report.max_abs_err {
                report.max_abs_err = err;
                report.err_at = (t, lambda);
            }
            let ratio = g.abs() / (2.0 * t * (-t * lambda).exp());
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.ratio_at = (t, lambda);
            }
        }
    }
    report
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

/// Cross-checks of the fast paths against independent references. All pass
/// in a healthy build; any failure indicates a broken kernel, not bad data.
pub fn validate() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // 1. dyadic partition sums exactly to 1 on every active mode
    let mut worst = 0.0f64;
    for (d, n, l, n_cut) in [(2usize, 64usize, 8.0f64, 21usize), (3, 16, 4.0, 5)] {
        let grid = Grid::new(d, n, l, n_cut)?;
        worst = worst.max(DyadicPartition::new(&grid).partition_defect());
    }
    out.push(check("partition-unity", worst <= 1e-10, format!("max defect {worst:.3e}")));

    // 2. shell-sum norm against the direct definition
    let mut worst = 0.0f64;
    for seed in [3u64, 4, 5] {
        let sc = Scenario::random(2, 32, 8.0, 10, seed);
        let state = generate(&sc)?;
        let grid = state.grid().clone();
        let p = DyadicPartition::new(&grid);
        for s in [-1.0, 0.0, 1.5] {
            for r in [SumExp::One, SumExp::Inf] {
                let spec = BesovSpec::all(s, r);
                let a = p.besov_norm(&state.w, &spec);
                let b = direct_besov(&state.w, &spec);
                let rel = (a - b).abs() / b.max(1e-300);
                worst = worst.max(rel);
            }
        }
    }
    out.push(check("besov-direct", worst <= 1e-10, format!("max rel err {worst:.3e}")));

    // 3. closed-form propagators against dense matrix exponentials
    let mut worst = 0.0f64;
    for i in 0..25 {
        let t = 1e-2 * (5e3f64).powf(i as f64 / 24.0);
        for j in 1..=25 {
            let lambda = j as f64 / 26.0;
            let p = propagator_entries(t, lambda);
            let dp = dense_matrix_exp([[-1.0, 1.0], [0.0, -lambda]], t);
            let dg = dense_matrix_exp([[-1.0, lambda], [0.0, -lambda]], t);
            let g = damped_mode_propagator(t, lambda);
            worst = worst
                .max((p.a - dp[0][0]).abs())
                .max((p.b - dp[0][1]).abs())
                .max((p.e - dp[1][1]).abs())
                .max((g.b - dg[0][1]).abs());
        }
    }
    out.push(check("propagator-dense", worst <= 1e-10, format!("max entry err {worst:.3e}")));

    // 4. Leray projector: idempotent and divergence-free
    let sc = Scenario::random(3, 16, 4.0, 5, 9);
    let state = generate(&sc)?;
    let pu = leray_project(&state.w);
    let ppu = leray_project(&pu);
    let div = divergence(&pu).l2_norm();
    let idem = ppu.sub(&pu).l2_norm();
    let pass = div <= 1e-12 && idem <= 1e-12;
    out.push(check("leray", pass, format!("div {div:.3e}, idempotence defect {idem:.3e}")));

    // 5. one coarse-vs-fine step against a tiny explicit reference
    let sc = Scenario::random(2, 16, 4.0, 5, 21);
    let state = generate(&sc)?;
    let grid = state.grid().clone();
    let dt = 0.02;
    let reference = explicit_rk4_tiny(&state, dt / 64.0, 128)?;
    let mut coarse = state.clone();
    let stepper =
        Stepper::new(&grid, StepConfig { dt, linear_only: false, abort_threshold: 1e12 })?;
    stepper.step(&mut coarse)?;
    stepper.step(&mut coarse)?;
    let mut fine = state.clone();
    let stepper2 =
        Stepper::new(&grid, StepConfig { dt: dt / 2.0, linear_only: false, abort_threshold: 1e12 })?;
    for _ in 0..4 {
        stepper2.step(&mut fine)?;
    }
    let ec = state_err(&coarse, &reference);
    let ef = state_err(&fine, &reference);
    let ratio = ec / ef;
    let pass = (3.2..=4.8).contains(&ratio);
    out.push(check("step-order", pass, format!("dt-halving error ratio {ratio:.2}")));

    // 6. mass conservation over 20 nonlinear steps
    let sc = Scenario::random(2, 32, 8.0, 10, 33);
    let mut state = generate(&sc)?;
    let grid = state.grid().clone();
    let stepper =
        Stepper::new(&grid, StepConfig { dt: 0.05, linear_only: false, abort_threshold: 1e12 })?;
    let m0 = conserved_mass(&state);
    let mut drift = 0.0f64;
    for _ in 0..20 {
        stepper.step(&mut state)?;
        drift = drift.max((conserved_mass(&state) - m0).abs());
    }
    out.push(check("mass-conservation", drift <= 2e-13, format!("max drift {drift:.3e}")));

    Ok(out)
}

fn state_err(a: &ens_core::FluidState, b: &ens_core::FluidState) -> f64 {
    a.rho.sub(&b.rho).l2_norm() + a.w.sub(&b.w).l2_norm() + a.u.sub(&b.u).l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_sweep_is_tight() {
        let r = sweep_g(40, 40);
        assert!(r.max_abs_err <= 1e-10, "err {} at {:?}", r.max_abs_err, r.err_at);
        assert!(r.max_ratio <= 1.0, "ratio {} at {:?}", r.max_ratio, r.ratio_at);
        assert!(r.max_ratio > 0.3, "sweep should exercise the bound, got {}", r.max_ratio);
    }

    #[test]
    fn validate_passes() {
        for c in validate().unwrap() {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
