use std::f64::consts::{PI, SQRT_2};

use super::{check_grid, Boundary, ModeBasis, SpatialGrid};
use crate::error::{CqedError, Result};

fn check_length(grid: &SpatialGrid, boundary: Boundary, omega_a: f64) -> Result<()> {
    if !(omega_a > 0.0 && omega_a.is_finite()) {
        return Err(CqedError::Config(format!("omega_a must be positive, got {omega_a}")));
    }
    let expected = boundary.natural_length(omega_a);
    if (grid.length() - expected).abs() > 1e-9 * expected {
        return Err(CqedError::Config(format!(
            "{boundary:?} cavity length {} does not match {expected} implied by omega_a = {omega_a}",
            grid.length()
        )));
    }
    check_grid(grid, boundary)
}

/// Ring of length `2π/ω_a`: `pairs` degenerate pairs `√2 cos(kx)`, `√2 sin(kx)`
/// with `ω = k ω_a`, cosine partner first.
pub fn analytic_modes_periodic(pairs: usize, omega_a: f64, grid: &SpatialGrid) -> Result<ModeBasis> {
    check_length(grid, Boundary::Periodic, omega_a)?;
    if pairs == 0 {
        return Err(CqedError::Config("at least one mode pair is required".into()));
    }
    if grid.n_points() <= 2 * pairs {
        return Err(CqedError::InvalidGrid(format!(
            "{} points cannot resolve {pairs} periodic mode pairs",
            grid.n_points()
        )));
    }
    let xs = grid.positions();
    let mut frequencies = Vec::with_capacity(2 * pairs);
    let mut eigenfunctions = Vec::with_capacity(2 * pairs);
    for n in 1..=pairs {
        let k = 2.0 * PI * n as f64 / grid.length();
        frequencies.extend([k, k]);
        eigenfunctions.push(xs.iter().map(|x| SQRT_2 * (k * x).cos()).collect());
        eigenfunctions.push(xs.iter().map(|x| SQRT_2 * (k * x).sin()).collect());
    }
    Ok(ModeBasis {
        boundary: Boundary::Periodic,
        grid: grid.clone(),
        frequencies,
        eigenfunctions,
        permittivity: vec![1.0; grid.n_points()],
    })
}

/// Empty mirror cavity of length `π/ω_a`: `√2 sin(kπ(x/L + 1/2))`, `ω = k ω_a`.
pub fn analytic_modes_pec(count: usize, omega_a: f64, grid: &SpatialGrid) -> Result<ModeBasis> {
    check_length(grid, Boundary::Pec, omega_a)?;
    if count == 0 {
        return Err(CqedError::Config("at least one mode is required".into()));
    }
    if grid.n_points() <= count + 1 {
        return Err(CqedError::InvalidGrid(format!(
            "{} points cannot resolve {count} cavity modes",
            grid.n_points()
        )));
    }
    let l = grid.length();
    let xs = grid.positions();
    let last = grid.n_points() - 1;
    let mut frequencies = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    for k in 1..=count {
        let kk = PI * k as f64 / l;
        frequencies.push(kk);
        let mut phi: Vec<f64> = xs.iter().map(|x| SQRT_2 * (kk * (x + 0.5 * l)).sin()).collect();
        phi[0] = 0.0;
        phi[last] = 0.0;
        eigenfunctions.push(phi);
    }
    Ok(ModeBasis {
        boundary: Boundary::Pec,
        grid: grid.clone(),
        frequencies,
        eigenfunctions,
        permittivity: vec![1.0; grid.n_points()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_pairs() {
        let grid = SpatialGrid::periodic(2.0 * PI, 201).unwrap();
        let b = analytic_modes_periodic(3, 1.0, &grid).unwrap();
        let expect = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        for (w, e) in b.frequencies.iter().zip(expect) {
            assert!((w - e).abs() < 1e-12);
        }
        assert!((b.value(0, 0.0).unwrap() - SQRT_2).abs() < 1e-12);
        assert!(b.value(1, 0.0).unwrap().abs() < 1e-12);
        assert!(b.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn pec_modes() {
        let grid = SpatialGrid::bounded(PI, 101).unwrap();
        let b = analytic_modes_pec(5, 1.0, &grid).unwrap();
        for (k, w) in b.frequencies.iter().enumerate() {
            assert!((w - (k + 1) as f64).abs() < 1e-12);
        }
        assert!((b.value(0, 0.0).unwrap() - SQRT_2).abs() < 1e-12);
        assert!(b.value(1, 0.0).unwrap().abs() < 1e-12);
        for phi in &b.eigenfunctions {
            assert_eq!(phi[0], 0.0);
            assert_eq!(phi[100], 0.0);
        }
        assert!(b.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn length_must_match_frequency() {
        let grid = SpatialGrid::bounded(3.0, 101).unwrap();
        assert!(matches!(analytic_modes_pec(2, 1.0, &grid), Err(CqedError::Config(_))));
        let ring = SpatialGrid::bounded(2.0 * PI, 101).unwrap();
        assert!(analytic_modes_periodic(2, 1.0, &ring).is_err());
    }
}
