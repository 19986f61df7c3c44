//! Spectral fields (scalar or vector) and the coupled fluid state.

use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::Grid;

/// A field stored by its Fourier coefficients; 1 component for scalars,
/// `d` components for vector fields. All arithmetic stays on the spectral
/// side; physical samples are produced on demand.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    comps: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &*self.grid)
            .field("components", &self.comps.len())
            .finish()
    }
}

impl SpectralField {
    pub fn zero_scalar(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), comps: vec![vec![Complex64::ZERO; grid.len()]] }
    }

    pub fn zero_vector(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), comps: vec![vec![Complex64::ZERO; grid.len()]; grid.d()] }
    }

    /// Wrap existing coefficient arrays; panics unless the shape matches the
    /// grid and the component count is 1 or d.
    pub fn from_coeffs(grid: &Arc<Grid>, comps: Vec<Vec<Complex64>>) -> Self {
        assert!(
            comps.len() == 1 || comps.len() == grid.d(),
            "component count must be 1 or d"
        );
        for c in &comps {
            assert_eq!(c.len(), grid.len(), "coefficient array must match grid");
        }
        Self { grid: grid.clone(), comps }
    }

    /// Transform physical samples (one slice per component).
    pub fn from_physical(grid: &Arc<Grid>, samples: &[&[f64]]) -> Self {
        let comps = samples.iter().map(|s| grid.forward(s)).collect();
        Self::from_coeffs(grid, comps)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn components(&self) -> usize {
        self.comps.len()
    }
    pub fn is_scalar(&self) -> bool {
        self.comps.len() == 1
    }
    pub fn comp(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }
    pub fn comp_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }
    pub fn comps(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    /// Physical samples of every component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        self.comps.iter().map(|c| self.grid.backward(c)).collect()
    }

    /// Mean value (zero-mode coefficient) of component `i`.
    pub fn mean(&self, i: usize) -> Complex64 {
        self.comps[i][0]
    }

    /// Physical L² norm over the box (mean included), all components summed
    /// in quadrature: `(2πL)^{d/2} · sqrt(Σ_c Σ_k |c|²)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.comps.iter().flatten().map(|c| c.norm_sqr()).sum();
        self.grid.volume().sqrt() * s.sqrt()
    }

    /// Physical sup norm: max over lattice points of the Euclidean magnitude.
    pub fn linf_norm(&self) -> f64 {
        let phys = self.to_physical();
        let mut worst = 0.0f64;
        for idx in 0..self.grid.len() {
            let m: f64 = phys.iter().map(|p| p[idx] * p[idx]).sum();
            worst = worst.max(m);
        }
        worst.sqrt()
    }

    /// Sum of `|c_k|²` over all components (no volume factor); cheap finite-
    /// ness and magnitude probe for abort checks.
    pub fn coeff_energy(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.comps.iter_mut().flatten() {
            *c *= s;
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        assert_eq!(self.comps.len(), other.comps.len());
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Project every component onto the real-valued (conjugate-symmetric)
    /// subspace.
    pub fn enforce_real(&mut self) {
        for c in self.comps.iter_mut() {
            self.grid.enforce_conjugate(c);
        }
    }

    pub fn conjugate_defect(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| self.grid.conjugate_defect(c))
            .fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude outside the dealias band (should be 0
    /// for fields produced by the dynamics).
    pub fn energy_outside_band(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.comps {
            for (idx, v) in c.iter().enumerate() {
                if !self.grid.dealias_keep(idx) {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }
}

/// Full state of the coupled system: density `rho` of the pressureless phase,
/// its velocity `w`, and the incompressible phase velocity `u`.
#[derive(Clone, Debug)]
pub struct FluidState {
    pub t: f64,
    pub rho: SpectralField,
    pub w: SpectralField,
    pub u: SpectralField,
}

impl FluidState {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        Self {
            t: 0.0,
            rho: SpectralField::zero_scalar(grid),
            w: SpectralField::zero_vector(grid),
            u: SpectralField::zero_vector(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.rho.grid()
    }

    /// Velocity difference w − u (the damped combination).
    pub fn diff(&self) -> SpectralField {
        self.w.sub(&self.u)
    }

    pub fn coeff_energy(&self) -> f64 {
        self.rho.coeff_energy() + self.w.coeff_energy() + self.u.coeff_energy()
    }

    pub fn enforce_real(&mut self) {
        self.rho.enforce_real();
        self.w.enforce_real();
        self.u.enforce_real();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn l2_norm_matches_physical_quadrature() {
        let g = Grid::new(2, 16, 2.0, 5).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| ((i * 131) % 17) as f64 - 8.0).collect();
        let f = SpectralField::from_physical(&g, &[&samples]);
        let direct =
            (samples.iter().map(|s| s * s).sum::<f64>() * g.spacing().powi(2)).sqrt();
        assert!((f.l2_norm() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn linf_norm_of_known_field() {
        let g = Grid::new(2, 32, 1.0, 10).unwrap();
        let sx: Vec<f64> = (0..g.len()).map(|i| g.coord(i)[0].sin()).collect();
        let cx: Vec<f64> = (0..g.len()).map(|i| g.coord(i)[0].cos()).collect();
        let v = SpectralField::from_physical(&g, &[&sx, &cx]);
        // |(sin, cos)| = 1 everywhere.
        assert!((v.linf_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axpy_and_sub_agree() {
        let g = Grid::new(2, 8, 1.0, 2).unwrap();
        let a: Vec<f64> = (0..g.len()).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| (i as f64).sqrt()).collect();
        let fa = SpectralField::from_physical(&g, &[&a]);
        let fb = SpectralField::from_physical(&g, &[&b]);
        let diff = fa.sub(&fb);
        let mut manual = fa.clone();
        manual.axpy(-1.0, &fb);
        for i in 0..g.len() {
            assert_eq!(diff.comp(0)[i], manual.comp(0)[i]);
        }
    }
}
