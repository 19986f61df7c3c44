//! Periodic lattice `[0, 2πL)^d` and its Fourier-side bookkeeping.
//!
//! Coefficients follow the Fourier-series convention
//! `f(x) = Σ_k c_k e^{i ξ_k · x}` with `ξ_k = k / L`, integer wavenumbers
//! `k ∈ [−N/2, N/2)^d` stored in FFT order (row-major, axis 0 slowest).
//! `transform_forward` therefore divides the raw DFT by `N^d`, and Parseval
//! reads `‖f‖_{L²}² = (2πL)^d Σ_k |c_k|²`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{CoreError, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// Immutable lattice descriptor shared by every field via `Arc`.
///
/// Invariants established at construction: `d ∈ {2, 3}`, `N` a power of two
/// `≥ 8`, `L > 0`, `0 < n_cut ≤ N/3`. Per-mode tables (frequencies, dealias
/// and truncation masks, conjugate pairing) are precomputed once.
pub struct Grid {
    d: usize,
    n: usize,
    l: f64,
    n_cut: usize,
    len: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    xi: Vec<[f64; 3]>,
    xi_sq: Vec<f64>,
    dealias_keep: Vec<bool>,
    jn_keep: Vec<bool>,
    conj_idx: Vec<u32>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("d", &self.d)
            .field("n", &self.n)
            .field("l", &self.l)
            .field("n_cut", &self.n_cut)
            .finish()
    }
}

pub fn make_grid(d: usize, n: usize, l: f64, n_cut: usize) -> Result<Arc<Grid>> {
    Grid::new(d, n, l, n_cut)
}

impl Grid {
    pub fn new(d: usize, n: usize, l: f64, n_cut: usize) -> Result<Arc<Self>> {
        if d != 2 && d != 3 {
            return Err(CoreError::InvalidGrid(format!("d must be 2 or 3, got {d}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(CoreError::InvalidGrid(format!(
                "N must be a power of two >= 8, got {n}"
            )));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(CoreError::InvalidGrid(format!("L must be positive, got {l}")));
        }
        if n_cut == 0 || n_cut > n / 3 {
            return Err(CoreError::InvalidGrid(format!(
                "n_cut must satisfy 0 < n_cut <= N/3 = {}, got {n_cut}",
                n / 3
            )));
        }
        let len = n.pow(d as u32);
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft(n, FftDirection::Forward);
        let fft_inv = planner.plan_fft(n, FftDirection::Inverse);

        let kmax_alias = (n / 3) as i64;
        // High cut is a Euclidean radius in lattice units; low cut is a
        // physical radius 1/n_cut (active on interior modes only when
        // n_cut < L). The zero mode is always annihilated by the truncation.
        let r_hi_sq = (n_cut * n_cut) as i64;
        let xi_lo = 1.0 / n_cut as f64;

        let mut xi = vec![[0.0; 3]; len];
        let mut xi_sq = vec![0.0; len];
        let mut dealias_keep = vec![true; len];
        let mut jn_keep = vec![true; len];
        let mut conj_idx = vec![0u32; len];

        for idx in 0..len {
            let k = Self::decompose(idx, d, n);
            let mut ks: i64 = 0;
            let mut v = [0.0; 3];
            let mut alias_ok = true;
            for a in 0..d {
                let s = if k[a] <= (n / 2 - 1) { k[a] as i64 } else { k[a] as i64 - n as i64 };
                ks += s * s;
                v[a] = s as f64 / l;
                if s.abs() > kmax_alias {
                    alias_ok = false;
                }
            }
            let xs = (ks as f64) / (l * l);
            xi[idx] = v;
            xi_sq[idx] = xs;
            dealias_keep[idx] = alias_ok;
            jn_keep[idx] = ks <= r_hi_sq && xs.sqrt() >= xi_lo && ks != 0;

            let mut cj = 0usize;
            for a in 0..d {
                let m = (n - k[a]) % n;
                cj = cj * n + m;
            }
            conj_idx[idx] = cj as u32;
        }

        Ok(Arc::new(Grid {
            d,
            n,
            l,
            n_cut,
            len,
            fft_fwd,
            fft_inv,
            xi,
            xi_sq,
            dealias_keep,
            jn_keep,
            conj_idx,
        }))
    }

    fn decompose(idx: usize, d: usize, n: usize) -> [usize; 3] {
        let mut k = [0usize; 3];
        let mut r = idx;
        for a in (0..d).rev() {
            k[a] = r % n;
            r /= n;
        }
        k
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn n_cut(&self) -> usize {
        self.n_cut
    }
    /// Number of lattice points / stored modes, `N^d`.
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Box volume `(2πL)^d`.
    pub fn volume(&self) -> f64 {
        (TAU * self.l).powi(self.d as i32)
    }
    /// Lattice spacing `2πL/N`.
    pub fn spacing(&self) -> f64 {
        TAU * self.l / self.n as f64
    }
    /// Quadrature weight `(2πL/N)^{d/2}` turning an l² sum of samples into an
    /// L² norm.
    pub fn quadrature_weight(&self) -> f64 {
        self.spacing().powf(self.d as f64 / 2.0)
    }

    /// Signed integer wavenumber of a stored mode.
    pub fn wavenumber(&self, idx: usize) -> [i64; 3] {
        let k = Self::decompose(idx, self.d, self.n);
        let mut s = [0i64; 3];
        for a in 0..self.d {
            s[a] = if k[a] < self.n / 2 { k[a] as i64 } else { k[a] as i64 - self.n as i64 };
        }
        s
    }

    /// Physical frequency ξ = k/L of a stored mode.
    pub fn xi(&self, idx: usize) -> [f64; 3] {
        self.xi[idx]
    }
    pub fn xi_sq(&self, idx: usize) -> f64 {
        self.xi_sq[idx]
    }
    pub fn xi_sq_table(&self) -> &[f64] {
        &self.xi_sq
    }
    /// Largest |ξ| present on the lattice (corner mode).
    pub fn xi_max(&self) -> f64 {
        (self.d as f64).sqrt() * (self.n as f64 / 2.0) / self.l
    }
    /// Smallest nonzero |ξ| on the lattice, `1/L`.
    pub fn xi_min(&self) -> f64 {
        1.0 / self.l
    }

    pub fn dealias_keep(&self, idx: usize) -> bool {
        self.dealias_keep[idx]
    }
    pub fn jn_keep(&self, idx: usize) -> bool {
        self.jn_keep[idx]
    }

    /// Physical coordinates of sample `idx` (same flat layout as coefficient
    /// storage).
    pub fn coord(&self, idx: usize) -> [f64; 3] {
        let k = Self::decompose(idx, self.d, self.n);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = h * k[a] as f64;
        }
        x
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    fn fft_axes(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len);
        let n = self.n;
        let mut line = vec![Complex64::ZERO; n];
        for axis in 0..self.d {
            let stride = self.stride(axis);
            if stride == 1 {
                fft.process(data);
                continue;
            }
            let outer = self.len / (n * stride);
            for o in 0..outer {
                let base0 = o * n * stride;
                for i in 0..stride {
                    let base = base0 + i;
                    for (j, lj) in line.iter_mut().enumerate() {
                        *lj = data[base + j * stride];
                    }
                    fft.process(&mut line);
                    for (j, lj) in line.iter().enumerate() {
                        data[base + j * stride] = *lj;
                    }
                }
            }
        }
    }

    /// Samples on the lattice → Fourier coefficients (series convention).
    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.len, "sample count must match grid");
        let mut data: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    /// In-place forward transform of complex samples.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.fft_axes(data, &self.fft_fwd);
        let scale = 1.0 / self.len as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Coefficients → real samples on the lattice. The imaginary residue of a
    /// conjugate-symmetric input is roundoff; it is dropped.
    pub fn backward(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len, "coefficient count must match grid");
        let mut data = coeffs.to_vec();
        self.fft_axes(&mut data, &self.fft_inv);
        data.iter().map(|c| c.re).collect()
    }

    /// Coefficients → complex samples (used where the imaginary residue must
    /// be inspected).
    pub fn backward_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut data = coeffs.to_vec();
        self.fft_axes(&mut data, &self.fft_inv);
        data
    }

    /// Project onto the conjugate-symmetric (real-valued) subspace:
    /// `c_k ← (c_k + conj(c_{−k}))/2`. Self-paired modes become real.
    pub fn enforce_conjugate(&self, data: &mut [Complex64]) {
        for idx in 0..self.len {
            let cj = self.conj_idx[idx] as usize;
            if cj < idx {
                continue;
            }
            let avg = 0.5 * (data[idx] + data[cj].conj());
            data[idx] = avg;
            data[cj] = avg.conj();
        }
    }

    /// Largest deviation from conjugate symmetry, `max_k |c_k − conj(c_{−k})|`.
    pub fn conjugate_defect(&self, data: &[Complex64]) -> f64 {
        let mut worst = 0.0f64;
        for idx in 0..self.len {
            let cj = self.conj_idx[idx] as usize;
            let dev = (data[idx] - data[cj].conj()).norm();
            worst = worst.max(dev);
        }
        worst
    }

    pub fn same_grid(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.d == other.d
                && self.n == other.n
                && self.l == other.l
                && self.n_cut == other.n_cut)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(1, 16, 1.0, 4).is_err());
        assert!(Grid::new(4, 16, 1.0, 4).is_err());
        assert!(Grid::new(2, 12, 1.0, 4).is_err());
        assert!(Grid::new(2, 4, 1.0, 1).is_err());
        assert!(Grid::new(2, 16, 0.0, 4).is_err());
        assert!(Grid::new(2, 16, -1.0, 4).is_err());
        assert!(Grid::new(2, 16, 1.0, 0).is_err());
        assert!(Grid::new(2, 16, 1.0, 6).is_err()); // 16/3 = 5
        assert!(Grid::new(2, 16, 1.0, 5).is_ok());
        assert!(Grid::new(3, 8, 2.0, 2).is_ok());
    }

    #[test]
    fn wavenumbers_cover_symmetric_range() {
        let g = Grid::new(2, 8, 1.0, 2).unwrap();
        let mut seen = std::collections::HashSet::new();
        for idx in 0..g.len() {
            let k = g.wavenumber(idx);
            assert!((-4..4).contains(&k[0]));
            assert!((-4..4).contains(&k[1]));
            seen.insert((k[0], k[1]));
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn cosine_has_two_half_modes() {
        // f(x) = cos(x₀/L) lives at k₀ = ±1 with coefficient 1/2.
        let g = Grid::new(2, 16, 2.5, 5).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| (g.coord(i)[0] / g.l()).cos()).collect();
        let coeffs = g.forward(&samples);
        for idx in 0..g.len() {
            let k = g.wavenumber(idx);
            let expect = if k[1] == 0 && (k[0] == 1 || k[0] == -1) { 0.5 } else { 0.0 };
            assert!(
                (coeffs[idx] - Complex64::new(expect, 0.0)).norm() < 1e-13,
                "mode {k:?}: {:?}",
                coeffs[idx]
            );
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let g = Grid::new(3, 8, 1.7, 2).unwrap();
        let samples: Vec<f64> =
            (0..g.len()).map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5).collect();
        let back = g.backward(&g.forward(&samples));
        let err = samples
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12, "round-trip error {err}");
    }

    #[test]
    fn parseval_holds() {
        let g = Grid::new(2, 32, 3.0, 10).unwrap();
        let samples: Vec<f64> =
            (0..g.len()).map(|i| ((i * 40503) % 997) as f64 / 997.0 - 0.5).collect();
        let coeffs = g.forward(&samples);
        let phys: f64 = samples.iter().map(|s| s * s).sum::<f64>() * g.spacing().powi(2);
        let spec: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.volume();
        assert!((phys - spec).abs() < 1e-10 * phys.max(1.0), "{phys} vs {spec}");
    }

    #[test]
    fn conjugate_projection_is_idempotent_and_reaches_symmetry() {
        let g = Grid::new(2, 16, 1.0, 5).unwrap();
        let mut data: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i % 7) as f64 - 3.0, (i % 5) as f64 - 2.0))
            .collect();
        assert!(g.conjugate_defect(&data) > 1.0);
        g.enforce_conjugate(&mut data);
        assert!(g.conjugate_defect(&data) < 1e-15);
        let snapshot = data.clone();
        g.enforce_conjugate(&mut data);
        for (a, b) in snapshot.iter().zip(&data) {
            assert_eq!(a, b);
        }
        // Real samples transform to an (almost) symmetric spectrum.
        let samples: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let coeffs = g.forward(&samples);
        assert!(g.conjugate_defect(&coeffs) < 1e-13);
    }

    #[test]
    fn masks_match_definitions() {
        // N=48 is not a power of two; the documented 3-D case N=48, L=12,
        // n_cut=16 is exercised at the mask level on N=64 instead, plus an
        // explicit small case where the low cut bites.
        let g = Grid::new(2, 64, 12.0, 16).unwrap();
        let mut low_cut_active = false;
        for idx in 0..g.len() {
            let k = g.wavenumber(idx);
            let ks = k[0] * k[0] + k[1] * k[1];
            let alias = k[0].abs() <= 21 && k[1].abs() <= 21;
            assert_eq!(g.dealias_keep(idx), alias, "dealias at {k:?}");
            let xi = g.xi_sq(idx).sqrt();
            let keep = ks != 0 && ks <= 256 && xi >= 1.0 / 16.0;
            assert_eq!(g.jn_keep(idx), keep, "jn at {k:?}");
            if ks != 0 && ks <= 256 && xi < 1.0 / 16.0 {
                low_cut_active = true;
            }
        }
        // n_cut = 16 > L = 12 ⇒ 1/n_cut < 1/L: no interior mode is below the
        // low cut; only the zero mode is annihilated.
        assert!(!low_cut_active);
        assert!(!g.jn_keep(0));

        // L = 40 with n_cut = 16: modes with |ξ| = |k|/40 < 1/16, i.e.
        // 0 < |k| < 2.5, are killed by the low cut.
        let g2 = Grid::new(2, 64, 40.0, 16).unwrap();
        let mut interior_killed = 0;
        for idx in 0..g2.len() {
            let k = g2.wavenumber(idx);
            let ks = k[0] * k[0] + k[1] * k[1];
            if ks != 0 && ks <= 256 && !g2.jn_keep(idx) {
                assert!((ks as f64).sqrt() < 2.5);
                interior_killed += 1;
            }
        }
        assert_eq!(interior_killed, 20); // |k|² ∈ {1, 2, 4, 5}: 4 + 4 + 4 + 8
    }

    #[test]
    fn coords_span_box() {
        let g = Grid::new(2, 8, 2.0, 2).unwrap();
        let x = g.coord(g.len() - 1);
        let h = g.spacing();
        assert!((x[0] - 7.0 * h).abs() < 1e-15);
        assert!((x[1] - 7.0 * h).abs() < 1e-15);
        assert!((8.0 * h - TAU * 2.0).abs() < 1e-12);
    }
}
