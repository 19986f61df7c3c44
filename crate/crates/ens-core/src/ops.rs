//! Fourier-multiplier operators: derivatives, Leray projection, band
//! truncation and dealiasing. All act mode-by-mode on coefficient arrays.

use num_complex::Complex64;

use crate::field::SpectralField;
use crate::grid::Grid;

/// ∂/∂x_axis of one coefficient array: multiply by i ξ_axis.
pub fn derivative(grid: &Grid, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
    assert!(axis < grid.d());
    (0..grid.len())
        .map(|idx| Complex64::new(0.0, grid.xi(idx)[axis]) * coeffs[idx])
        .collect()
}

/// Gradient of a scalar field → vector field.
pub fn gradient(f: &SpectralField) -> SpectralField {
    assert!(f.is_scalar(), "gradient takes a scalar field");
    let g = f.grid();
    let comps = (0..g.d()).map(|a| derivative(g, f.comp(0), a)).collect();
    SpectralField::from_coeffs(g, comps)
}

/// Divergence of a vector field → scalar field.
pub fn divergence(v: &SpectralField) -> SpectralField {
    let g = v.grid();
    assert_eq!(v.components(), g.d(), "divergence takes a vector field");
    let mut out = vec![Complex64::ZERO; g.len()];
    for a in 0..g.d() {
        let c = v.comp(a);
        for idx in 0..g.len() {
            out[idx] += Complex64::new(0.0, g.xi(idx)[a]) * c[idx];
        }
    }
    SpectralField::from_coeffs(g, vec![out])
}

/// Componentwise Laplacian: multiply by −|ξ|².
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    let mut out = f.clone();
    for i in 0..out.components() {
        let c = out.comp_mut(i);
        for idx in 0..g.len() {
            c[idx] *= -g.xi_sq(idx);
        }
    }
    out
}

/// Leray projection onto divergence-free fields:
/// `v̂ ← v̂ − ξ (ξ·v̂)/|ξ|²`, zero mode passed through unchanged.
pub fn leray_project(v: &SpectralField) -> SpectralField {
    let g = v.grid().clone();
    assert_eq!(v.components(), g.d(), "leray_project takes a vector field");
    let mut out = v.clone();
    for idx in 0..g.len() {
        let xs = g.xi_sq(idx);
        if xs == 0.0 {
            continue;
        }
        let xi = g.xi(idx);
        let mut dot = Complex64::ZERO;
        for a in 0..g.d() {
            dot += Complex64::new(xi[a], 0.0) * out.comp(a)[idx];
        }
        let f = dot / xs;
        for a in 0..g.d() {
            out.comp_mut(a)[idx] -= xi[a] * f;
        }
    }
    out
}

/// Spectral band truncation: annihilates the zero mode, lattice radii beyond
/// `n_cut`, and physical frequencies below `1/n_cut`.
pub fn jn_truncate(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    let mut out = f.clone();
    for i in 0..out.components() {
        let c = out.comp_mut(i);
        for idx in 0..g.len() {
            if !g.jn_keep(idx) {
                c[idx] = Complex64::ZERO;
            }
        }
    }
    out
}

/// 2/3-rule dealiasing: zero every coefficient with any `|k_axis| > N/3`.
/// The zero mode is kept.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    let mut out = f.clone();
    dealias_in_place(&g, &mut out);
    out
}

pub(crate) fn dealias_in_place(g: &Grid, f: &mut SpectralField) {
    for i in 0..f.components() {
        let c = f.comp_mut(i);
        for idx in 0..g.len() {
            if !g.dealias_keep(idx) {
                c[idx] = Complex64::ZERO;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn random_vector(g: &Arc<Grid>, seed: u64) -> SpectralField {
        // Deterministic pseudo-random real vector field, dealias-band limited.
        let mut comps = Vec::new();
        for c in 0..g.d() {
            let samples: Vec<f64> = (0..g.len())
                .map(|i| {
                    let h = (i as u64)
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(seed + c as u64);
                    ((h >> 16) % 10007) as f64 / 10007.0 - 0.5
                })
                .collect();
            comps.push(g.forward(&samples));
        }
        let mut f = SpectralField::from_coeffs(g, comps);
        dealias_in_place(g, &mut f);
        f
    }

    #[test]
    fn gradient_of_cosine() {
        // ∇ cos(x₀/L) = (−sin(x₀/L)/L, 0)
        let g = Grid::new(2, 32, 2.0, 10).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| (g.coord(i)[0] / g.l()).cos()).collect();
        let f = SpectralField::from_physical(&g, &[&samples]);
        let grad = gradient(&f);
        let phys = grad.to_physical();
        for i in 0..g.len() {
            let expect0 = -(g.coord(i)[0] / g.l()).sin() / g.l();
            assert!((phys[0][i] - expect0).abs() < 1e-13);
            assert!(phys[1][i].abs() < 1e-13);
        }
    }

    #[test]
    fn div_grad_is_laplacian() {
        let g = Grid::new(3, 8, 1.3, 2).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| ((i * 97) % 31) as f64 / 31.0).collect();
        let f = SpectralField::from_physical(&g, &[&samples]);
        let a = divergence(&gradient(&f));
        let b = laplacian(&f);
        for i in 0..g.len() {
            assert!((a.comp(0)[i] - b.comp(0)[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn leray_is_idempotent_and_divergence_free() {
        let g = Grid::new(2, 32, 1.0, 10).unwrap();
        let v = random_vector(&g, 7);
        let p = leray_project(&v);
        let pp = leray_project(&p);
        let mut dev = 0.0f64;
        for a in 0..g.d() {
            for i in 0..g.len() {
                dev = dev.max((p.comp(a)[i] - pp.comp(a)[i]).norm());
            }
        }
        assert!(dev <= 1e-12, "idempotence defect {dev}");
        let div = divergence(&p);
        let dmax = div.comp(0).iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        assert!(dmax <= 1e-12, "divergence after projection {dmax}");
    }

    #[test]
    fn leray_annihilates_gradients() {
        let g = Grid::new(3, 8, 0.9, 2).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| ((i * 13) % 101) as f64 / 101.0).collect();
        let mut f = SpectralField::from_physical(&g, &[&samples]);
        // remove the mean so the gradient carries all the content
        f.comp_mut(0)[0] = Complex64::ZERO;
        let grad = gradient(&f);
        let p = leray_project(&grad);
        let mut worst = 0.0f64;
        for a in 0..g.d() {
            for i in 0..g.len() {
                worst = worst.max(p.comp(a)[i].norm());
            }
        }
        assert!(worst <= 1e-12, "projected gradient magnitude {worst}");
    }

    #[test]
    fn leray_passes_zero_mode() {
        let g = Grid::new(2, 16, 1.0, 5).unwrap();
        let mut v = SpectralField::zero_vector(&g);
        v.comp_mut(0)[0] = Complex64::new(3.0, 0.0);
        v.comp_mut(1)[0] = Complex64::new(-2.0, 0.0);
        let p = leray_project(&v);
        assert_eq!(p.comp(0)[0], Complex64::new(3.0, 0.0));
        assert_eq!(p.comp(1)[0], Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn jn_keeps_interior_mode_and_kills_exterior() {
        let g = Grid::new(2, 64, 4.0, 21).unwrap();
        let mut f = SpectralField::zero_scalar(&g);
        // |k| = 5 is strictly inside [L/n_cut threshold, 21]
        let inside = (0..g.len()).find(|&i| g.wavenumber(i) == [5, 0, 0]).unwrap();
        let outside = (0..g.len()).find(|&i| g.wavenumber(i) == [21, 7, 0]).unwrap(); // |k|² = 490 > 441
        f.comp_mut(0)[inside] = Complex64::new(1.0, 2.0);
        f.comp_mut(0)[outside] = Complex64::new(4.0, -1.0);
        f.comp_mut(0)[0] = Complex64::new(9.0, 0.0);
        let t = jn_truncate(&f);
        assert_eq!(t.comp(0)[inside], Complex64::new(1.0, 2.0));
        assert_eq!(t.comp(0)[outside], Complex64::ZERO);
        assert_eq!(t.comp(0)[0], Complex64::ZERO);
    }

    #[test]
    fn jn_is_idempotent_and_self_adjoint() {
        let g = Grid::new(2, 16, 1.0, 5).unwrap();
        let f = random_vector(&g, 3);
        let h = random_vector(&g, 11);
        let tf = jn_truncate(&f);
        let ttf = jn_truncate(&tf);
        for a in 0..g.d() {
            for i in 0..g.len() {
                assert_eq!(tf.comp(a)[i], ttf.comp(a)[i]);
            }
        }
        // ⟨J f, h⟩ = ⟨f, J h⟩ exactly: J is a 0/1 diagonal multiplier.
        let th = jn_truncate(&h);
        let mut lhs = Complex64::ZERO;
        let mut rhs = Complex64::ZERO;
        for a in 0..g.d() {
            for i in 0..g.len() {
                lhs += tf.comp(a)[i] * h.comp(a)[i].conj();
                rhs += f.comp(a)[i] * th.comp(a)[i].conj();
            }
        }
        assert!((lhs - rhs).norm() < 1e-14 * lhs.norm().max(1.0));
    }

    #[test]
    fn dealias_cutoff_at_n_over_three() {
        let g = Grid::new(2, 64, 1.0, 21).unwrap();
        let mut f = SpectralField::zero_scalar(&g);
        let kept = (0..g.len()).find(|&i| g.wavenumber(i) == [21, -21, 0]).unwrap();
        let cut = (0..g.len()).find(|&i| g.wavenumber(i) == [22, 0, 0]).unwrap();
        f.comp_mut(0)[kept] = Complex64::new(1.0, 0.0);
        f.comp_mut(0)[cut] = Complex64::new(1.0, 0.0);
        f.comp_mut(0)[0] = Complex64::new(5.0, 0.0);
        let d = dealias(&f);
        assert_eq!(d.comp(0)[kept], Complex64::new(1.0, 0.0));
        assert_eq!(d.comp(0)[cut], Complex64::ZERO);
        assert_eq!(d.comp(0)[0], Complex64::new(5.0, 0.0), "mean survives dealiasing");
    }
}
