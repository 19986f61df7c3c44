//! Raw-coefficient state exchange format, for reproducing states across
//! independent implementations.
//!
//! Layout (all little-endian): `u32 d`, `u32 N`, `f64 L`, `u32 ncomp`,
//! then `ncomp` coefficient planes of `N^d` complex values (`f64` real,
//! `f64` imaginary) ordered lexicographically by the signed wavenumber
//! tuple `(k₀, …, k_{d−1})`, each axis running −N/2 … N/2−1. A fluid state
//! stores `1 + 2d` planes: density, then the w components, then the u
//! components.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use ens_core::Complex64;

use ens_core::grid::Grid;
use ens_core::{FluidState, SpectralField};

use crate::error::{CliError, Result};

/// Storage index of the signed wavenumber tuple, axes beyond `d` ignored.
fn storage_index(grid: &Grid, k: [i64; 3]) -> usize {
    let n = grid.n() as i64;
    let mut idx = 0usize;
    for &signed in &k[..grid.d()] {
        let ka = if signed < 0 { signed + n } else { signed };
        idx = idx * grid.n() + ka as usize;
    }
    idx
}

/// Lexicographic enumeration of signed wavenumber tuples.
fn lex_order(grid: &Grid) -> Vec<usize> {
    let n = grid.n() as i64;
    let d = grid.d();
    let mut order = Vec::with_capacity(grid.len());
    let mut k = [-n / 2; 3];
    for ka in &mut k[d..] {
        *ka = 0;
    }
    loop {
        order.push(storage_index(grid, k));
        // increment the last axis, carrying leftwards
        let mut a = d;
        loop {
            if a == 0 {
                return order;
            }
            a -= 1;
            k[a] += 1;
            if k[a] < n / 2 {
                break;
            }
            k[a] = -n / 2;
        }
    }
}

pub fn export_state(path: &Path, state: &FluidState) -> Result<()> {
    let grid = state.grid();
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let ncomp = 1 + 2 * grid.d() as u32;
    out.write_all(&(grid.d() as u32).to_le_bytes())?;
    out.write_all(&(grid.n() as u32).to_le_bytes())?;
    out.write_all(&grid.l().to_le_bytes())?;
    out.write_all(&ncomp.to_le_bytes())?;
    let order = lex_order(grid);
    let planes: Vec<&[Complex64]> = std::iter::once(state.rho.comp(0))
        .chain((0..grid.d()).map(|b| state.w.comp(b)))
        .chain((0..grid.d()).map(|b| state.u.comp(b)))
        .collect();
    for plane in planes {
        for &idx in &order {
            out.write_all(&plane[idx].re.to_le_bytes())?;
            out.write_all(&plane[idx].im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn import_state(path: &Path, grid: &Arc<Grid>) -> Result<FluidState> {
    let file = File::open(path)?;
    let mut inp = BufReader::new(file);
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];

    inp.read_exact(&mut u32buf)?;
    let d = u32::from_le_bytes(u32buf) as usize;
    inp.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    inp.read_exact(&mut f64buf)?;
    let l = f64::from_le_bytes(f64buf);
    inp.read_exact(&mut u32buf)?;
    let ncomp = u32::from_le_bytes(u32buf) as usize;

    if d != grid.d() || n != grid.n() || (l - grid.l()).abs() > 1e-12 * grid.l() {
        return Err(CliError::Series(format!(
            "{}: state is d={d} N={n} L={l}, grid is d={} N={} L={}",
            path.display(),
            grid.d(),
            grid.n(),
            grid.l()
        )));
    }
    if ncomp != 1 + 2 * d {
        return Err(CliError::Series(format!(
            "{}: expected {} planes, file has {ncomp}",
            path.display(),
            1 + 2 * d
        )));
    }

    let order = lex_order(grid);
    let mut read_plane = || -> Result<Vec<Complex64>> {
        let mut plane = vec![Complex64::ZERO; grid.len()];
        for &idx in &order {
            inp.read_exact(&mut f64buf)?;
            let re = f64::from_le_bytes(f64buf);
            inp.read_exact(&mut f64buf)?;
            let im = f64::from_le_bytes(f64buf);
            plane[idx] = Complex64::new(re, im);
        }
        Ok(plane)
    };

    let rho = vec![read_plane()?];
    let mut w = Vec::with_capacity(d);
    for _ in 0..d {
        w.push(read_plane()?);
    }
    let mut u = Vec::with_capacity(d);
    for _ in 0..d {
        u.push(read_plane()?);
    }

    let mut st = FluidState::zero(grid);
    st.rho = SpectralField::from_coeffs(grid, rho);
    st.w = SpectralField::from_coeffs(grid, w);
    st.u = SpectralField::from_coeffs(grid, u);
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ens_core::initial::{generate, Scenario};
    use tempfile::tempdir;

    #[test]
    fn export_import_round_trip_is_bit_exact() {
        for d in [2usize, 3] {
            let sc = Scenario::random(d, 16, 2.0, 5, 99);
            let st = generate(&sc).unwrap();
            let dir = tempdir().unwrap();
            let path = dir.path().join("state.bin");
            export_state(&path, &st).unwrap();
            let back = import_state(&path, st.grid()).unwrap();
            for (a, b) in [(&st.rho, &back.rho), (&st.w, &back.w), (&st.u, &back.u)] {
                for c in 0..a.components() {
                    for (x, y) in a.comp(c).iter().zip(b.comp(c)) {
                        assert_eq!(x.re.to_bits(), y.re.to_bits());
                        assert_eq!(x.im.to_bits(), y.im.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let sc = Scenario::random(2, 16, 2.0, 5, 1);
        let st = generate(&sc).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("state.bin");
        export_state(&path, &st).unwrap();
        let other = Grid::new(2, 32, 2.0, 5).unwrap();
        assert!(import_state(&path, &other).is_err());
        let other_l = Grid::new(2, 16, 3.0, 5).unwrap();
        assert!(import_state(&path, &other_l).is_err());
    }

    #[test]
    fn lex_order_is_a_permutation_starting_at_most_negative() {
        let g = Grid::new(2, 8, 1.0, 2).unwrap();
        let order = lex_order(&g);
        assert_eq!(order.len(), 64);
        let mut seen = [false; 64];
        for &i in &order {
            assert!(!seen[i]);
            seen[i] = true;
        }
        // first entry is k = (−4, −4) → storage (4, 4) → 4·8 + 4
        assert_eq!(order[0], 36);
        // last is k = (3, 3) → storage (3, 3)
        assert_eq!(*order.last().unwrap(), 27);
    }
}
