//! Run-level diagnostics: weighted Lyapunov functionals of the drag
//! coupling, the global smallness functional Z, negative-regularity norms,
//! power-law decay fitting against `(1 + c₀ t)`, and the bookkeeping
//! monitors (dissipation inequality, Nash-type lower bounds, tail integral).
//!
//! With `c_B = 8/3` (the Bernstein constant of the shell annulus) and
//! `σ± = d/2 ± 1`, the functionals are
//!
//! ```text
//!   L   = ‖u‖_{Ḃ^{σ−}_{2,1}} + (1/4c_B)‖w‖_{Ḃ^{σ+}_{2,1}} + (1/2c_B²)‖w−u‖_{Ḃ^{σ−}_{2,1}}
//!   H   = (1/4c_B)(‖u‖_{Ḃ^{σ+}_{2,1}} + ‖w‖_{Ḃ^{σ+}_{2,1}}) + (1/4c_B²)‖w−u‖_{Ḃ^{σ−}_{2,1}}
//!   L_k = L + (1/2c_B²)‖w‖_{Ḃ^{σ++k}_{2,1}} + ‖u‖_{Ḃ^{σ−+k}_{2,1}}
//!   H_k = H + (1/2c_B²)‖w‖_{Ḃ^{σ++k}_{2,1}} + (1/2c_B)‖u‖_{Ḃ^{σ++k}_{2,1}}
//! ```
//!
//! and the decay chain monitors `dL/dt + H ≤ 0` along sampled trajectories.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::field::FluidState;
use crate::lp::{BesovSpec, DyadicPartition, SumExp, BERNSTEIN_CONST};

/// One diagnostic snapshot. `norms` holds the individual Besov norms the
/// functionals are built from, keyed by stable names (`u_lo` = u at σ−,
/// `w_hi` = w at σ+, `diff_lo` = w−u at σ−, …).
#[derive(Clone, Debug)]
pub struct LyapunovSample {
    pub t: f64,
    pub l: f64,
    pub h: f64,
    pub lk: Option<f64>,
    pub hk: Option<f64>,
    pub norms: BTreeMap<String, f64>,
}

fn b1(s: f64) -> BesovSpec {
    BesovSpec::all(s, SumExp::One)
}

/// L and H at one instant.
pub fn lyapunov(state: &FluidState, partition: &DyadicPartition) -> LyapunovSample {
    sample_impl(state, partition, None)
}

/// L, H plus the level-k extensions L_k, H_k (k ≥ 1).
pub fn lyapunov_k(state: &FluidState, partition: &DyadicPartition, k: u32) -> LyapunovSample {
    sample_impl(state, partition, Some(k))
}

fn sample_impl(state: &FluidState, partition: &DyadicPartition, k: Option<u32>) -> LyapunovSample {
    let d = state.grid().d() as f64;
    let (s_lo, s_hi) = (d / 2.0 - 1.0, d / 2.0 + 1.0);
    let cb = BERNSTEIN_CONST;
    let diff = state.diff();

    let u_lo = partition.besov_norm(&state.u, &b1(s_lo));
    let u_hi = partition.besov_norm(&state.u, &b1(s_hi));
    let w_lo = partition.besov_norm(&state.w, &b1(s_lo));
    let w_hi = partition.besov_norm(&state.w, &b1(s_hi));
    let diff_lo = partition.besov_norm(&diff, &b1(s_lo));
    let rho_mid = partition.besov_norm(&state.rho, &b1(d / 2.0));

    let l = u_lo + w_hi / (4.0 * cb) + diff_lo / (2.0 * cb * cb);
    let h = (u_hi + w_hi) / (4.0 * cb) + diff_lo / (4.0 * cb * cb);

    let mut norms = BTreeMap::new();
    norms.insert("u_lo".into(), u_lo);
    norms.insert("u_hi".into(), u_hi);
    norms.insert("w_lo".into(), w_lo);
    norms.insert("w_hi".into(), w_hi);
    norms.insert("diff_lo".into(), diff_lo);
    norms.insert("rho_mid".into(), rho_mid);

    let (lk, hk) = match k {
        None => (None, None),
        Some(k) => {
            let kk = k as f64;
            let w_hik = partition.besov_norm(&state.w, &b1(s_hi + kk));
            let u_lok = partition.besov_norm(&state.u, &b1(s_lo + kk));
            let u_hik = partition.besov_norm(&state.u, &b1(s_hi + kk));
            norms.insert("w_hi_k".into(), w_hik);
            norms.insert("u_lo_k".into(), u_lok);
            norms.insert("u_hi_k".into(), u_hik);
            (
                Some(l + w_hik / (2.0 * cb * cb) + u_lok),
                Some(h + w_hik / (2.0 * cb * cb) + u_hik / (2.0 * cb)),
            )
        }
    };

    LyapunovSample { t: state.t, l, h, lk, hk, norms }
}

/// Running accumulator for the smallness functional
///
/// ```text
///   Z(t) = sup ‖ρ‖_{Ḃ^{d/2}} + sup (‖w‖_{Ḃ^{σ−}} + ‖w‖_{Ḃ^{σ+}}) + sup ‖u‖_{Ḃ^{σ−}}
///        + ∫ (‖w‖_{Ḃ^{σ+}} + ‖u‖_{Ḃ^{σ+}}) + sup ‖w−u‖_{Ḃ^{σ−}} + ∫ ‖w−u‖_{Ḃ^{σ−}}
/// ```
///
/// (all shells summed, `r = 1`; integrals by trapezoid over the pushed
/// samples).
#[derive(Clone, Debug, Default)]
pub struct ZAccumulator {
    sup_rho: f64,
    sup_w: f64,
    sup_u_lo: f64,
    sup_diff: f64,
    int_wu_hi: f64,
    int_diff: f64,
    prev: Option<(f64, f64, f64)>, // t, (w_hi + u_hi), diff_lo
}

impl ZAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: &FluidState, partition: &DyadicPartition) {
        let d = state.grid().d() as f64;
        let (s_lo, s_hi) = (d / 2.0 - 1.0, d / 2.0 + 1.0);
        let diff = state.diff();
        let rho = partition.besov_norm(&state.rho, &b1(d / 2.0));
        let w_lo = partition.besov_norm(&state.w, &b1(s_lo));
        let w_hi = partition.besov_norm(&state.w, &b1(s_hi));
        let u_lo = partition.besov_norm(&state.u, &b1(s_lo));
        let u_hi = partition.besov_norm(&state.u, &b1(s_hi));
        let diff_lo = partition.besov_norm(&diff, &b1(s_lo));
        self.push_norms(state.t, rho, w_lo, w_hi, u_lo, u_hi, diff_lo);
    }

    /// Push precomputed norms (used by the runner, which already has them).
    #[allow(clippy::too_many_arguments)]
    pub fn push_norms(
        &mut self,
        t: f64,
        rho_mid: f64,
        w_lo: f64,
        w_hi: f64,
        u_lo: f64,
        u_hi: f64,
        diff_lo: f64,
    ) {
        self.sup_rho = self.sup_rho.max(rho_mid);
        self.sup_w = self.sup_w.max(w_lo + w_hi);
        self.sup_u_lo = self.sup_u_lo.max(u_lo);
        self.sup_diff = self.sup_diff.max(diff_lo);
        let wu_hi = w_hi + u_hi;
        if let Some((tp, wu_p, diff_p)) = self.prev {
            let dt = t - tp;
            self.int_wu_hi += 0.5 * (wu_hi + wu_p) * dt;
            self.int_diff += 0.5 * (diff_lo + diff_p) * dt;
        }
        self.prev = Some((t, wu_hi, diff_lo));
    }

    pub fn value(&self) -> f64 {
        self.sup_rho + self.sup_w + self.sup_u_lo + self.int_wu_hi + self.sup_diff + self.int_diff
    }
}

/// Z over a sampled trajectory.
pub fn z_functional(states: &[FluidState], partition: &DyadicPartition) -> f64 {
    let mut acc = ZAccumulator::new();
    for st in states {
        acc.push(st, partition);
    }
    acc.value()
}

/// Largest negative-regularity norm of the two velocities,
/// `max(‖w‖_{Ḃ^{−d/2}_{2,∞}}, ‖u‖_{Ḃ^{−d/2}_{2,∞}})`.
pub fn negative_regularity(state: &FluidState, partition: &DyadicPartition) -> f64 {
    let s = -(state.grid().d() as f64) / 2.0;
    let spec = BesovSpec::all(s, SumExp::Inf);
    partition.besov_norm(&state.w, &spec).max(partition.besov_norm(&state.u, &spec))
}

// --- decay fitting ---

/// How the time-shift constant of the power law `A (1 + c₀ t)^p` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum C0Mode {
    /// c₀ free, chosen by least squares along with the exponent.
    Fit,
    /// c₀ = 1.
    Unit,
    /// Fixed caller-supplied value (> 0).
    Given(f64),
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub c0: f64,
    /// RMS residual of `log v` against the fitted line.
    pub residual: f64,
    /// Window actually used (after clipping to the available samples).
    pub window: (f64, f64),
    pub samples: usize,
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let mut r2 = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let e = yi - (icept + slope * xi);
        r2 += e * e;
    }
    (slope, icept, (r2 / n).sqrt())
}

/// Least-squares fit of `log v` against `log(1 + c₀ t)` over a time window.
///
/// Errors: fewer than 3 usable samples (2 for fixed c₀), any nonpositive or
/// non-finite value in the window, a degenerate window, or a nonpositive
/// given c₀.
pub fn fit_decay(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    mode: C0Mode,
) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(CoreError::InvalidInput(format!(
            "{} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    if !(window.1 > window.0) {
        return Err(CoreError::InvalidInput(format!(
            "degenerate fit window [{}, {}]",
            window.0, window.1
        )));
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !v.is_finite() || v <= 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "nonpositive value {v} at t = {t} inside the fit window"
            )));
        }
        ts.push(t);
        vs.push(v.ln());
    }
    let need = if mode == C0Mode::Fit { 3 } else { 2 };
    if ts.len() < need {
        return Err(CoreError::InvalidInput(format!(
            "{} samples in window [{}, {}], need at least {need}",
            ts.len(),
            window.0,
            window.1
        )));
    }
    let used = (ts[0], *ts.last().unwrap());

    let eval = |c0: f64| -> (f64, f64, f64) {
        let x: Vec<f64> = ts.iter().map(|&t| (1.0 + c0 * t).ln()).collect();
        line_fit(&x, &vs)
    };

    let c0 = match mode {
        C0Mode::Unit => 1.0,
        C0Mode::Given(c) => {
            if !(c > 0.0) || !c.is_finite() {
                return Err(CoreError::InvalidInput(format!("c0 must be positive, got {c}")));
            }
            c
        }
        C0Mode::Fit => {
            // coarse scan in log c₀, then ternary refinement of the residual
            let mut best = (f64::INFINITY, 1.0);
            for i in 0..=96 {
                let c = (-6.0 + 12.0 * i as f64 / 96.0).exp();
                let (_, _, r) = eval(c);
                if r < best.0 {
                    best = (r, c);
                }
            }
            let mut lo = best.1 / 2.0;
            let mut hi = best.1 * 2.0;
            for _ in 0..60 {
                let m1 = lo * (hi / lo).powf(1.0 / 3.0);
                let m2 = lo * (hi / lo).powf(2.0 / 3.0);
                if eval(m1).2 <= eval(m2).2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            (lo * hi).sqrt()
        }
    };

    let (slope, icept, resid) = eval(c0);
    Ok(DecayFit {
        exponent: slope,
        amplitude: icept.exp(),
        c0,
        residual: resid,
        window: used,
        samples: ts.len(),
    })
}

/// Outcome of the plateau/floor scan: the portion of a requested window over
/// which a decaying series still follows its early power law.
#[derive(Clone, Copy, Debug)]
pub struct UsableWindow {
    pub start: f64,
    pub end: f64,
    /// true when the scan cut the window short of the request.
    pub floored: bool,
}

/// Detect where a decaying series leaves its power-law regime (flattening on
/// a roundoff/noise floor or steepening into the box-mode exponential).
///
/// Heuristic: the reference slope is fitted on the first third of the
/// window; the window is cut at the first of 3 consecutive samples whose
/// centered local slope deviates from it by more than
/// `max(0.5·|slope|, 0.3)`. Series with |slope| < 0.05 are left untouched.
pub fn detect_usable_window(
    times: &[f64],
    values: &[f64],
    requested: (f64, f64),
) -> UsableWindow {
    let mut idx = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        if t >= requested.0 && t <= requested.1 && values[i] > 0.0 && values[i].is_finite() {
            idx.push(i);
        }
    }
    let full = UsableWindow { start: requested.0, end: requested.1, floored: false };
    if idx.len() < 9 {
        return full;
    }
    let x: Vec<f64> = idx.iter().map(|&i| (1.0 + times[i]).ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| values[i].ln()).collect();
    let third = idx.len() / 3;
    let (s_ref, _, _) = line_fit(&x[..third.max(3)], &y[..third.max(3)]);
    if s_ref.abs() < 0.05 {
        return full;
    }
    let tol = (0.5 * s_ref.abs()).max(0.3);
    let mut bad_run = 0;
    for m in 1..x.len() - 1 {
        let s = (y[m + 1] - y[m - 1]) / (x[m + 1] - x[m - 1]);
        if (s - s_ref).abs() > tol {
            bad_run += 1;
            if bad_run >= 3 {
                let cut = idx[m - 2];
                return UsableWindow {
                    start: requested.0,
                    end: times[cut],
                    floored: true,
                };
            }
        } else {
            bad_run = 0;
        }
    }
    full
}

/// Dissipation-inequality audit along sampled functionals.
#[derive(Clone, Copy, Debug)]
pub struct MonotonicityReport {
    /// max over intervals of `L(t₊) − L(t) + ∫H dt` (0 when the inequality
    /// holds everywhere).
    pub max_excess: f64,
    /// same, divided by the interval length.
    pub max_excess_rate: f64,
}

/// Check `dL/dt + H ≤ 0` in integrated form on consecutive samples,
/// trapezoid for `∫H`.
pub fn monotonicity_check(samples: &[LyapunovSample]) -> MonotonicityReport {
    let mut worst = 0.0f64;
    let mut worst_rate = 0.0f64;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            continue;
        }
        let excess = w[1].l - w[0].l + 0.5 * (w[1].h + w[0].h) * dt;
        worst = worst.max(excess);
        worst_rate = worst_rate.max(excess / dt);
    }
    MonotonicityReport { max_excess: worst, max_excess_rate: worst_rate }
}

/// Observed lower-bound constants for the two candidate Nash-type readings
/// `H ≥ c₀ L^{1−θ₀}` and `H ≥ c₀ L^{1/(1−θ₀)}` (monitors only; nothing in
/// the solver relies on either).
#[derive(Clone, Copy, Debug)]
pub struct NashMonitor {
    pub min_ratio_one_minus: f64,
    pub min_ratio_inv: f64,
}

pub fn nash_lower_bounds(samples: &[LyapunovSample], d: usize) -> NashMonitor {
    let th0 = theta0(d);
    let mut a = f64::INFINITY;
    let mut b = f64::INFINITY;
    for s in samples {
        if s.l <= 0.0 {
            continue;
        }
        a = a.min(s.h / s.l.powf(1.0 - th0));
        b = b.min(s.h / s.l.powf(1.0 / (1.0 - th0)));
    }
    NashMonitor { min_ratio_one_minus: a, min_ratio_inv: b }
}

// --- interpolation exponents of the decay chain ---

/// θ₀ = 2/(1+d): L²-against-Ḃ^{−d/2}_{2,∞} interpolation weight.
pub fn theta0(d: usize) -> f64 {
    2.0 / (1.0 + d as f64)
}

/// θ = (d−2)/(2(d−1)): damped-combination interpolation weight (d ≥ 3).
pub fn theta(d: usize) -> f64 {
    (d as f64 - 2.0) / (2.0 * (d as f64 - 1.0))
}

/// θ_k = 2/(d+k+1): level-k analogue of θ₀.
pub fn theta_k(d: usize, k: u32) -> f64 {
    2.0 / (d as f64 + k as f64 + 1.0)
}

/// α_k = (d/2−1+k)/(d−1+k): higher-regularity interpolation weight.
pub fn alpha_k(d: usize, k: u32) -> f64 {
    (d as f64 / 2.0 - 1.0 + k as f64) / (d as f64 - 1.0 + k as f64)
}

/// `∫₀^t ((1+c₀t)/(1+c₀τ))^β e^{−c(t−τ)} dτ` by composite Simpson — the
/// kernel bound behind the persistence of `(1+c₀t)^{−β}` decay under
/// exponential damping. Stays bounded in t for any β ≥ 0, c, c₀ > 0.
pub fn weighted_tail_integral(t: f64, c0: f64, beta: f64, c: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = ((t * 40.0).ceil() as usize).clamp(400, 40_000);
    let n = n + n % 2; // Simpson needs an even interval count
    let h = t / n as f64;
    let f = |tau: f64| ((1.0 + c0 * t) / (1.0 + c0 * tau)).powf(beta) * (-c * (t - tau)).exp();
    let mut s = f(0.0) + f(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}
