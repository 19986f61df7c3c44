//! Dyadic (Littlewood–Paley) decomposition and homogeneous Besov norms.
//!
//! The shell profile φ is built from a smooth radial cutoff χ (≡1 on
//! `[0, 3/4]`, ≡0 on `[4/3, ∞)`) as `φ(r) = χ(r/2) − χ(r)`, so
//!
//! * `supp φ ⊆ [3/4, 8/3]`, `φ ≥ 0`;
//! * `Σ_j φ(2^{−j} r)` telescopes to `χ(2^{−j_hi−1} r) − χ(2^{−j_lo} r)`,
//!   which equals 1 exactly once the shell range brackets the resolved
//!   frequencies — the partition-of-unity defect on the lattice is pure
//!   roundoff;
//! * any fixed `r` meets at most two consecutive shells
//!   (`(8/3)/(3/4) < 4`).
//!
//! Shell norms are evaluated spectrally through Parseval; the zero mode has
//! no shell and is therefore excluded from every Besov quantity.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Bernstein constant tied to the shell support `[3/4, 8/3]`: for a field
/// supported in shell j, `‖∇f‖ ≤ c_B 2^j ‖f‖` and `‖f‖ ≤ c_B 2^{−j} ‖∇f‖`.
pub const BERNSTEIN_CONST: f64 = 8.0 / 3.0;

/// Summation exponent over shells (the `r` in `Ḃ^s_{2,r}`) or over time in
/// integrated norms (the `q` in `L^q_t`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumExp {
    One,
    Inf,
}

/// Shell-index restriction: `Low` keeps j ≤ −1 (frequencies below ≈1),
/// `High` keeps j ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    All,
    Low,
    High,
}

impl Band {
    pub fn contains(self, j: i32) -> bool {
        match self {
            Band::All => true,
            Band::Low => j <= -1,
            Band::High => j >= 0,
        }
    }
}

/// A homogeneous Besov norm request `Ḃ^s_{2,r}` over a shell band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovSpec {
    pub s: f64,
    pub r: SumExp,
    pub band: Band,
}

impl BesovSpec {
    pub fn new(s: f64, r: SumExp, band: Band) -> Result<Self> {
        if !s.is_finite() {
            return Err(CoreError::InvalidInput(format!("Besov regularity must be finite: {s}")));
        }
        Ok(Self { s, r, band })
    }

    pub fn all(s: f64, r: SumExp) -> Self {
        Self { s, r, band: Band::All }
    }
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial cutoff: 1 on `[0, 3/4]`, 0 on `[4/3, ∞)`, smooth and
/// nonincreasing in between.
pub fn chi(r: f64) -> f64 {
    const LO: f64 = 0.75;
    const HI: f64 = 4.0 / 3.0;
    if r <= LO {
        1.0
    } else if r >= HI {
        0.0
    } else {
        1.0 - smooth_step((r - LO) / (HI - LO))
    }
}

/// Shell profile `φ(r) = χ(r/2) − χ(r)`, supported in `[3/4, 8/3]`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Dyadic partition attached to a grid: for every shell index j in
/// `[j_min, j_max]`, the sparse list of lattice modes it touches with their
/// profile values `φ(2^{−j}|ξ|)`.
pub struct DyadicPartition {
    grid: Arc<Grid>,
    j_min: i32,
    j_max: i32,
    shells: Vec<Vec<(u32, f64)>>,
}

pub fn build_partition(grid: &Arc<Grid>) -> DyadicPartition {
    DyadicPartition::new(grid)
}

impl DyadicPartition {
    pub fn new(grid: &Arc<Grid>) -> Self {
        let xi_min = grid.xi_min();
        let xi_max = grid.xi_max();
        // Range chosen so the telescoping sum is exactly 1 on every nonzero
        // lattice frequency: χ(2^{−j_min} ξ) = 0 and χ(2^{−j_max−1} ξ) = 1.
        let j_min = (xi_min * 0.75).log2().floor() as i32;
        let j_max = (xi_max * 4.0 / 3.0).log2().ceil() as i32;
        let count = (j_max - j_min + 1) as usize;
        let mut shells = vec![Vec::new(); count];
        for idx in 0..grid.len() {
            let r = grid.xi_sq(idx).sqrt();
            if r == 0.0 {
                continue;
            }
            // φ(2^{−j} r) ≠ 0 ⇔ j ∈ (log2(3r/8), log2(4r/3))
            let lo = (r * 0.375).log2().ceil() as i32;
            let hi = (r * 4.0 / 3.0).log2().floor() as i32;
            for j in lo.max(j_min)..=hi.min(j_max) {
                let v = phi(r * (-j as f64).exp2());
                if v > 0.0 {
                    shells[(j - j_min) as usize].push((idx as u32, v));
                }
            }
        }
        Self { grid: grid.clone(), j_min, j_max, shells }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn j_min(&self) -> i32 {
        self.j_min
    }
    pub fn j_max(&self) -> i32 {
        self.j_max
    }
    pub fn shell_count(&self) -> usize {
        self.shells.len()
    }

    fn shell(&self, j: i32) -> Option<&[(u32, f64)]> {
        if j < self.j_min || j > self.j_max {
            None
        } else {
            Some(&self.shells[(j - self.j_min) as usize])
        }
    }

    /// Largest deviation of `Σ_j φ(2^{−j}|ξ|)` from 1 over nonzero lattice
    /// modes (roundoff-level by construction).
    pub fn partition_defect(&self) -> f64 {
        let mut sums = vec![0.0f64; self.grid.len()];
        for shell in &self.shells {
            for &(idx, v) in shell {
                sums[idx as usize] += v;
            }
        }
        let mut worst = 0.0f64;
        for idx in 1..self.grid.len() {
            if self.grid.xi_sq(idx) > 0.0 {
                worst = worst.max((sums[idx] - 1.0).abs());
            }
        }
        worst
    }

    /// Maximum number of shells any single mode belongs to (must be ≤ 2).
    pub fn max_shell_overlap(&self) -> usize {
        let mut counts = vec![0usize; self.grid.len()];
        for shell in &self.shells {
            for &(idx, _) in shell {
                counts[idx as usize] += 1;
            }
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// Dyadic block `Δ_j f`: coefficients multiplied by the shell profile.
    pub fn block(&self, f: &SpectralField, j: i32) -> SpectralField {
        assert!(
            self.grid.same_grid(f.grid()),
            "field and partition must share a grid"
        );
        let mut out = if f.is_scalar() {
            SpectralField::zero_scalar(&self.grid)
        } else {
            SpectralField::zero_vector(&self.grid)
        };
        if let Some(shell) = self.shell(j) {
            for c in 0..f.components() {
                let src = f.comp(c);
                let dst = out.comp_mut(c);
                for &(idx, v) in shell {
                    dst[idx as usize] = v * src[idx as usize];
                }
            }
        }
        out
    }

    /// L² norm of the dyadic block `Δ_j f` (all components in quadrature).
    pub fn block_norm(&self, f: &SpectralField, j: i32) -> f64 {
        let Some(shell) = self.shell(j) else { return 0.0 };
        let mut s = 0.0f64;
        for c in 0..f.components() {
            let src = f.comp(c);
            for &(idx, v) in shell {
                s += v * v * src[idx as usize].norm_sqr();
            }
        }
        self.grid.volume().sqrt() * s.sqrt()
    }

    /// Low-frequency cutoff `S_j f = Σ_{j' ≤ j−1} Δ_{j'} f` (plus the mean,
    /// which the dyadic blocks never carry).
    pub fn low_cutoff(&self, f: &SpectralField, j: i32) -> SpectralField {
        let mut out = if f.is_scalar() {
            SpectralField::zero_scalar(&self.grid)
        } else {
            SpectralField::zero_vector(&self.grid)
        };
        for jp in self.j_min..=(j - 1).min(self.j_max) {
            if let Some(shell) = self.shell(jp) {
                for c in 0..f.components() {
                    let src = f.comp(c);
                    let dst = out.comp_mut(c);
                    for &(idx, v) in shell {
                        dst[idx as usize] += v * src[idx as usize];
                    }
                }
            }
        }
        for c in 0..f.components() {
            out.comp_mut(c)[0] = f.comp(c)[0];
        }
        out
    }

    /// Homogeneous Besov norm `‖f‖_{Ḃ^s_{2,r}}` over the requested band.
    /// The mean mode carries no shell and is ignored.
    pub fn besov_norm(&self, f: &SpectralField, spec: &BesovSpec) -> f64 {
        let mut acc = 0.0f64;
        for j in self.j_min..=self.j_max {
            if !spec.band.contains(j) {
                continue;
            }
            let nj = self.block_norm(f, j);
            if nj == 0.0 {
                continue;
            }
            let term = (spec.s * j as f64).exp2() * nj;
            match spec.r {
                SumExp::One => acc += term,
                SumExp::Inf => acc = acc.max(term),
            }
        }
        acc
    }

    /// Besov norm of a pair, with the `‖(f, g)‖_X = ‖f‖_X + ‖g‖_X`
    /// convention used throughout the diagnostics.
    pub fn besov_norm_pair(&self, f: &SpectralField, g: &SpectralField, spec: &BesovSpec) -> f64 {
        self.besov_norm(f, spec) + self.besov_norm(g, spec)
    }

    /// Time-integrated shell norm (Chemin–Lerner style): the time aggregation
    /// happens inside the shell sum,
    /// `‖f‖ = ‖ 2^{js} ‖Δ_j f‖_{L^q_t(L²)} ‖_{l^r_j}`,
    /// with `q = One` a trapezoidal integral over the sample times and
    /// `q = Inf` a running supremum.
    pub fn chemin_lerner_norm(
        &self,
        times: &[f64],
        fields: &[&SpectralField],
        spec: &BesovSpec,
        q: SumExp,
    ) -> Result<f64> {
        if times.len() != fields.len() {
            return Err(CoreError::InvalidInput(format!(
                "{} sample times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if fields.is_empty() || (q == SumExp::One && fields.len() < 2) {
            return Err(CoreError::InvalidInput(
                "time-integrated norm needs at least 2 samples (1 for sup-in-time)".into(),
            ));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::InvalidInput(
                    "sample times must be strictly increasing".into(),
                ));
            }
        }
        let mut acc = 0.0f64;
        for j in self.j_min..=self.j_max {
            if !spec.band.contains(j) {
                continue;
            }
            let series: Vec<f64> = fields.iter().map(|f| self.block_norm(f, j)).collect();
            let agg = match q {
                SumExp::Inf => series.iter().copied().fold(0.0, f64::max),
                SumExp::One => {
                    let mut int = 0.0;
                    for m in 1..series.len() {
                        int += 0.5 * (series[m] + series[m - 1]) * (times[m] - times[m - 1]);
                    }
                    int
                }
            };
            if agg == 0.0 {
                continue;
            }
            let term = (spec.s * j as f64).exp2() * agg;
            match spec.r {
                SumExp::One => acc += term,
                SumExp::Inf => acc = acc.max(term),
            }
        }
        Ok(acc)
    }

    /// Observed Bernstein ratio `‖∇Δ_j f‖ / (2^j ‖Δ_j f‖)`; `None` for an
    /// empty block. Lands in `[3/4, 8/3]` by the shell support.
    pub fn bernstein_ratio(&self, f: &SpectralField, j: i32) -> Option<f64> {
        let shell = self.shell(j)?;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for c in 0..f.components() {
            let src = f.comp(c);
            for &(idx, v) in shell {
                let e = v * v * src[idx as usize].norm_sqr();
                num += self.grid.xi_sq(idx as usize) * e;
                den += e;
            }
        }
        if den == 0.0 {
            None
        } else {
            Some((num / den).sqrt() / (j as f64).exp2())
        }
    }
}
