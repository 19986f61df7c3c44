//! Time stepping: the stiff linear block is advanced exactly per mode, the
//! truncated nonlinearity by an integrating-factor Heun (RK2) pass.
//!
//! Per Fourier mode with λ = |ξ|², the linear system
//!
//! ```text
//!   ŵ' = −ŵ + û          (drag)
//!   û' = −λ û            (viscosity)
//! ```
//!
//! has the exact solution matrix `[[a, b], [0, e]]` with `a = e^{−t}`,
//! `e = e^{−tλ}` and `b = (e^{−tλ} − e^{−t})/(1−λ)`, evaluated in the
//! cancellation-free form `e^{−t}·expm1(t(1−λ))/(1−λ)` away from λ = 1 and
//! by a short series at the degenerate point. On the zero mode (λ = 0) this
//! reduces to `w̄(t) = e^{−t} w̄₀ + (1 − e^{−t}) ū₀`: the mean of w relaxes
//! toward the mean of u, which the linear flow preserves.

use crate::dynamics::{rhs_nonlinear, Tendency};
use crate::error::{CoreError, Result};
use crate::field::{FluidState, SpectralField};
use crate::grid::Grid;
use crate::ops::leray_project;

/// Entries of a 2×2 triangular propagator `[[a, b], [c, e]]` (c is kept for
/// shape compatibility with the dense oracle; it is always 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorEntries {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

/// Threshold below which `|1 − λ|` counts as degenerate and the series form
/// of the coupling entry is used.
pub const DEGENERATE_EPS: f64 = 1e-6;

fn coupling_entry(t: f64, lambda: f64) -> f64 {
    let eps = 1.0 - lambda;
    if eps.abs() > DEGENERATE_EPS {
        // (e^{−tλ} − e^{−t})/(1−λ) = e^{−t}·(e^{tε} − 1)/ε
        (-t).exp() * (t * eps).exp_m1() / eps
    } else {
        // 3-term expansion about λ = 1: t e^{−t}(1 + tε/2 + (tε)²/6)
        let te = t * eps;
        t * (-t).exp() * (1.0 + te / 2.0 + te * te / 6.0)
    }
}

/// Exact propagator of the (ŵ, û) pair over time `t` for viscosity
/// eigenvalue `λ = |ξ|²`.
pub fn propagator_entries(t: f64, lambda: f64) -> PropagatorEntries {
    PropagatorEntries {
        a: (-t).exp(),
        b: coupling_entry(t, lambda),
        c: 0.0,
        e: (-t * lambda).exp(),
    }
}

/// Exact propagator of the damped pair (ŵ−û, û): the coupling entry is
/// `g(t, λ) = λ·b(t, λ)`, which obeys `|g| ≤ 2 t e^{−tλ}` for λ < 1.
pub fn damped_mode_propagator(t: f64, lambda: f64) -> PropagatorEntries {
    PropagatorEntries {
        a: (-t).exp(),
        b: lambda * coupling_entry(t, lambda),
        c: 0.0,
        e: (-t * lambda).exp(),
    }
}

/// Per-mode propagator table for one grid and one step size.
pub struct LinearPropagator {
    dt: f64,
    // (a, b, e) per mode
    rows: Vec<[f64; 3]>,
}

impl LinearPropagator {
    pub fn new(grid: &Grid, dt: f64) -> Self {
        let rows = (0..grid.len())
            .map(|idx| {
                let p = propagator_entries(dt, grid.xi_sq(idx));
                [p.a, p.b, p.e]
            })
            .collect();
        Self { dt, rows }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance a (w, u) pair of vector fields by one step in place.
    pub fn apply(&self, w: &mut SpectralField, u: &mut SpectralField) {
        debug_assert_eq!(w.components(), u.components());
        for c in 0..w.components() {
            let wc = w.comp_mut(c);
            // split borrow: components live in separate Vecs
            for (idx, row) in self.rows.iter().enumerate() {
                wc[idx] = row[0] * wc[idx] + row[1] * u.comp(c)[idx];
            }
            let uc = u.comp_mut(c);
            for (idx, row) in self.rows.iter().enumerate() {
                uc[idx] *= row[2];
            }
        }
    }
}

/// Step controls. `abort_threshold` bounds the plain coefficient energy
/// Σ|c|² of the whole state; exceeding it (or any non-finite value) aborts.
#[derive(Clone, Copy, Debug)]
pub struct StepConfig {
    pub dt: f64,
    pub linear_only: bool,
    pub abort_threshold: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self { dt: 0.05, linear_only: false, abort_threshold: 1e12 }
    }
}

/// One-grid, one-dt stepper holding the cached propagator.
pub struct Stepper {
    cfg: StepConfig,
    prop: LinearPropagator,
}

impl Stepper {
    pub fn new(grid: &Grid, cfg: StepConfig) -> Result<Self> {
        if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
            return Err(CoreError::InvalidInput(format!("dt must be positive, got {}", cfg.dt)));
        }
        Ok(Self { cfg, prop: LinearPropagator::new(grid, cfg.dt) })
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    /// Advance the state by one step:
    /// predictor  S̃ = P·S + dt·P·N(S),
    /// corrector  S⁺ = P·S + dt/2·(P·N(S) + N(S̃)),
    /// with ρ (no linear part) taking the plain Heun branch. Real-valuedness
    /// and the divergence-free constraint on u are restored by projection at
    /// the end; a non-finite or oversized state aborts.
    pub fn step(&self, state: &mut FluidState) -> Result<()> {
        let dt = self.cfg.dt;
        if self.cfg.linear_only {
            self.prop.apply(&mut state.w, &mut state.u);
            state.t += dt;
            return self.check(state);
        }

        let n1 = rhs_nonlinear(state);
        let mut pn1_w = n1.d_w.clone();
        let mut pn1_u = n1.d_u.clone();
        self.prop.apply(&mut pn1_w, &mut pn1_u);

        let mut pred = state.clone();
        self.prop.apply(&mut pred.w, &mut pred.u);
        pred.w.axpy(dt, &pn1_w);
        pred.u.axpy(dt, &pn1_u);
        pred.rho.axpy(dt, &n1.d_rho);
        pred.t += dt;
        let n2 = rhs_nonlinear(&pred);

        self.prop.apply(&mut state.w, &mut state.u);
        state.w.axpy(0.5 * dt, &pn1_w);
        state.w.axpy(0.5 * dt, &n2.d_w);
        state.u.axpy(0.5 * dt, &pn1_u);
        state.u.axpy(0.5 * dt, &n2.d_u);
        state.rho.axpy(0.5 * dt, &n1.d_rho);
        state.rho.axpy(0.5 * dt, &n2.d_rho);
        state.t += dt;

        state.enforce_real();
        state.u = leray_project(&state.u);
        self.check(state)
    }

    fn check(&self, state: &FluidState) -> Result<()> {
        let e = state.coeff_energy();
        if !e.is_finite() || e > self.cfg.abort_threshold {
            return Err(CoreError::NumericalAbort {
                t: state.t,
                reason: format!(
                    "coefficient energy {e:.3e} exceeds {:.3e} (|ρ̂|² {:.3e}, |ŵ|² {:.3e}, |û|² {:.3e})",
                    self.cfg.abort_threshold,
                    state.rho.coeff_energy(),
                    state.w.coeff_energy(),
                    state.u.coeff_energy()
                ),
            });
        }
        Ok(())
    }
}

/// Advective CFL bound `safety · Δx / max(‖w‖_∞, ‖u‖_∞)` evaluated on the
/// current state (∞ when both velocities vanish). The exact linear block
/// imposes no constraint of its own.
pub fn advective_cfl_bound(state: &FluidState, safety: f64) -> f64 {
    let vmax = state.w.linf_norm().max(state.u.linf_norm());
    if vmax == 0.0 {
        f64::INFINITY
    } else {
        safety * state.grid().spacing() / vmax
    }
}

/// Explicit full-RHS tendency (linear terms included), exposed for reference
/// integrators and order tests.
pub fn full_tendency(state: &FluidState) -> Tendency {
    crate::dynamics::rhs_full(state)
}
