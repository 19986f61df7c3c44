//! Right-hand sides of the coupled system in its band-truncated
//! pseudo-spectral form:
//!
//! ```text
//!   ∂t ρ = −div J(ρ w)
//!   ∂t w = −J((w·∇)w)         − (w − u)          (linear drag not included here)
//!   ∂t u = −J P((u·∇)u) + J P(ρ(w−u)) + Δu       (viscosity not included here)
//! ```
//!
//! `rhs_nonlinear` evaluates only the quadratic terms (the stiff linear block
//! is advanced exactly by the integrator); `rhs_full` adds the linear terms
//! for explicit reference stepping. Products are formed pointwise in physical
//! space and dealiased by the 2/3 rule; with band-limited inputs the retained
//! modes are alias-free.
//!
//! Mean (zero-mode) bookkeeping: the truncation J annihilates means, so
//! `∂t ρ̄ = 0` exactly (mass conservation), `w̄` moves only through the drag,
//! and `ū` receives the raw mean of the coupling `ρ(w−u)`, which the Leray
//! projector passes through.

use num_complex::Complex64;

use crate::field::{FluidState, SpectralField};
use crate::grid::Grid;
use crate::ops::{derivative, divergence, laplacian, leray_project};

/// Time derivative of a fluid state (same shapes as the state itself).
#[derive(Clone, Debug)]
pub struct Tendency {
    pub d_rho: SpectralField,
    pub d_w: SpectralField,
    pub d_u: SpectralField,
}

impl Tendency {
    /// `state += dt · self` (leaves `state.t` untouched).
    pub fn add_scaled_to(&self, state: &mut FluidState, dt: f64) {
        state.rho.axpy(dt, &self.d_rho);
        state.w.axpy(dt, &self.d_w);
        state.u.axpy(dt, &self.d_u);
    }
}

/// The three quadratic product families, spectral and dealiased but not
/// band-truncated (means intact): `ρw`, advections `(w·∇)w`, `(u·∇)u`,
/// and the coupling `ρ(w−u)`.
struct Products {
    rho_w: Vec<Vec<Complex64>>,
    w_adv: Vec<Vec<Complex64>>,
    u_adv: Vec<Vec<Complex64>>,
    coupling: Vec<Vec<Complex64>>,
}

fn products(state: &FluidState) -> Products {
    let g = state.grid().clone();
    let d = g.d();
    let len = g.len();

    let rho_p = g.backward(state.rho.comp(0));
    let w_p: Vec<Vec<f64>> = (0..d).map(|c| g.backward(state.w.comp(c))).collect();
    let u_p: Vec<Vec<f64>> = (0..d).map(|c| g.backward(state.u.comp(c))).collect();

    let mut w_adv_p = vec![vec![0.0f64; len]; d];
    let mut u_adv_p = vec![vec![0.0f64; len]; d];
    for b in 0..d {
        for a in 0..d {
            let dw = g.backward(&derivative(&g, state.w.comp(b), a));
            let du = g.backward(&derivative(&g, state.u.comp(b), a));
            let (wa, ua) = (&w_p[a], &u_p[a]);
            let (tw, tu) = (&mut w_adv_p[b], &mut u_adv_p[b]);
            for i in 0..len {
                tw[i] += wa[i] * dw[i];
                tu[i] += ua[i] * du[i];
            }
        }
    }

    let forward_masked = |samples: &[f64]| -> Vec<Complex64> {
        let mut c = g.forward(samples);
        for idx in 0..len {
            if !g.dealias_keep(idx) {
                c[idx] = Complex64::ZERO;
            }
        }
        c
    };

    let mut rho_w = Vec::with_capacity(d);
    let mut coupling = Vec::with_capacity(d);
    let mut w_adv = Vec::with_capacity(d);
    let mut u_adv = Vec::with_capacity(d);
    let mut buf = vec![0.0f64; len];
    for b in 0..d {
        for i in 0..len {
            buf[i] = rho_p[i] * w_p[b][i];
        }
        rho_w.push(forward_masked(&buf));
        for i in 0..len {
            buf[i] = rho_p[i] * (w_p[b][i] - u_p[b][i]);
        }
        coupling.push(forward_masked(&buf));
        w_adv.push(forward_masked(&w_adv_p[b]));
        u_adv.push(forward_masked(&u_adv_p[b]));
    }
    Products { rho_w, w_adv, u_adv, coupling }
}

fn truncate_in_place(g: &Grid, coeffs: &mut [Complex64]) {
    for idx in 0..g.len() {
        if !g.jn_keep(idx) {
            coeffs[idx] = Complex64::ZERO;
        }
    }
}

/// Quadratic tendencies of the truncated scheme. The returned `d_u` is
/// divergence-free (projected) and carries the coupling mean on its zero
/// mode; `d_rho` has an exactly zero mean.
pub fn rhs_nonlinear(state: &FluidState) -> Tendency {
    let g = state.grid().clone();
    let d = g.d();
    let p = products(state);

    let mut rho_w = p.rho_w;
    for c in rho_w.iter_mut() {
        truncate_in_place(&g, c);
    }
    let mut d_rho = divergence(&SpectralField::from_coeffs(&g, rho_w));
    d_rho.scale(-1.0);

    let mut d_w_comps = p.w_adv;
    for c in d_w_comps.iter_mut() {
        truncate_in_place(&g, c);
        for v in c.iter_mut() {
            *v = -*v;
        }
    }
    let d_w = SpectralField::from_coeffs(&g, d_w_comps);

    let mut coupling_mean = [Complex64::ZERO; 3];
    let mut d_u_comps = Vec::with_capacity(d);
    for b in 0..d {
        coupling_mean[b] = p.coupling[b][0];
        let mut c = vec![Complex64::ZERO; g.len()];
        for idx in 0..g.len() {
            c[idx] = p.coupling[b][idx] - p.u_adv[b][idx];
        }
        truncate_in_place(&g, &mut c);
        d_u_comps.push(c);
    }
    let mut d_u = leray_project(&SpectralField::from_coeffs(&g, d_u_comps));
    for b in 0..d {
        // real fields have a real product mean; drop the roundoff residue
        d_u.comp_mut(b)[0] = Complex64::new(coupling_mean[b].re, 0.0);
    }

    Tendency { d_rho, d_w, d_u }
}

/// Full tendencies including the linear drag and viscosity, for explicit
/// reference stepping: `d_w −= (w − u)`, `d_u += Δu`.
pub fn rhs_full(state: &FluidState) -> Tendency {
    let mut t = rhs_nonlinear(state);
    t.d_w.axpy(-1.0, &state.w);
    t.d_w.axpy(1.0, &state.u);
    t.d_u.axpy(1.0, &laplacian(&state.u));
    t
}

/// Pressure gradient recovered from the incompressible balance:
/// `∇P = ∇(−Δ)^{−1} div((u·∇)u) − ∇(−Δ)^{−1} div(ρ(w−u))`.
/// Products are dealiased; no band truncation is applied.
pub fn pressure_gradient(state: &FluidState) -> SpectralField {
    let g = state.grid().clone();
    let p = products(state);
    pressure_gradient_from(&g, &p.u_adv, &p.coupling)
}

fn pressure_gradient_from(
    g: &std::sync::Arc<Grid>,
    u_adv: &[Vec<Complex64>],
    coupling: &[Vec<Complex64>],
) -> SpectralField {
    let d = g.d();
    let mut comps = vec![vec![Complex64::ZERO; g.len()]; d];
    for idx in 0..g.len() {
        let xs = g.xi_sq(idx);
        if xs == 0.0 {
            continue;
        }
        let xi = g.xi(idx);
        let mut div = Complex64::ZERO;
        for a in 0..d {
            div += Complex64::new(0.0, xi[a]) * (u_adv[a][idx] - coupling[a][idx]);
        }
        let phat = div / xs;
        for a in 0..d {
            comps[a][idx] = Complex64::new(0.0, xi[a]) * phat;
        }
    }
    SpectralField::from_coeffs(g, comps)
}

/// Total mass `∫ ρ dx = ρ̂(0) · (2πL)^d`.
pub fn conserved_mass(state: &FluidState) -> f64 {
    state.rho.mean(0).re * state.grid().volume()
}

/// Minimum of the density over the lattice.
pub fn min_density(state: &FluidState) -> f64 {
    let phys = state.grid().backward(state.rho.comp(0));
    phys.into_iter().fold(f64::INFINITY, f64::min)
}
