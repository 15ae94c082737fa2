//! Cavity mode bases and light–matter coupling coefficients.
//!
//! Mode functions are real, sampled on a [`SpatialGrid`], and normalized as
//! `(1/L) Σ_j Φ_k(j) ε_r(j) Φ_k'(j) Δx = δ_kk'`. The cavity length plays the
//! role of the mode volume.

mod analytic;
mod couplings;
mod grid;
mod numerical;

pub use analytic::{analytic_modes_pec, analytic_modes_periodic};
pub use couplings::{calibrate_dipole, coupling_coefficients, Couplings, COUPLING_MASK_THRESHOLD};
pub use grid::{GridKind, SpatialGrid};
pub use numerical::{assemble_eigenproblem, parse_table, solve_modes, Eigenproblem, PermittivityProfile};

use serde::{Deserialize, Serialize};

use crate::error::{CqedError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Pec,
}

impl Boundary {
    pub fn grid_kind(self) -> GridKind {
        match self {
            Boundary::Periodic => GridKind::Periodic,
            Boundary::Pec => GridKind::Bounded,
        }
    }

    /// Cavity length for a given atomic frequency (`c = 1`): one wavelength
    /// for the ring, half a wavelength between mirrors.
    pub fn natural_length(self, omega_a: f64) -> f64 {
        let wavelength = 2.0 * std::f64::consts::PI / omega_a;
        match self {
            Boundary::Periodic => wavelength,
            Boundary::Pec => 0.5 * wavelength,
        }
    }
}

/// Sampled cavity eigenmodes.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub boundary: Boundary,
    pub grid: SpatialGrid,
    /// Ascending angular frequencies.
    pub frequencies: Vec<f64>,
    /// `eigenfunctions[k][j] = Φ_k(x_j)`.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Relative permittivity on the grid, used as the normalization weight.
    pub permittivity: Vec<f64>,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.grid.length()
    }

    /// `A_k(x)` by linear interpolation.
    pub fn value(&self, k: usize, x: f64) -> Result<f64> {
        self.grid.interpolate(&self.eigenfunctions[k], x)
    }

    /// ε-weighted overlap `(1/L) Σ_j Φ_k ε_r Φ_k' Δx`.
    pub fn overlap(&self, k: usize, kp: usize) -> f64 {
        let dx = self.grid.spacing();
        self.eigenfunctions[k]
            .iter()
            .zip(&self.eigenfunctions[kp])
            .zip(&self.permittivity)
            .map(|((a, b), e)| a * e * b)
            .sum::<f64>()
            * dx
            / self.grid.length()
    }

    /// Largest deviation of the overlap matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.len() {
            for kp in k..self.len() {
                let target = if k == kp { 1.0 } else { 0.0 };
                worst = worst.max((self.overlap(k, kp) - target).abs());
            }
        }
        worst
    }

    /// Keep only the listed modes, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<ModeBasis> {
        if let Some(&bad) = indices.iter().find(|&&k| k >= self.len()) {
            return Err(CqedError::DimensionMismatch(format!(
                "mode {bad} requested from a basis of {}",
                self.len()
            )));
        }
        Ok(ModeBasis {
            boundary: self.boundary,
            grid: self.grid.clone(),
            frequencies: indices.iter().map(|&k| self.frequencies[k]).collect(),
            eigenfunctions: indices.iter().map(|&k| self.eigenfunctions[k].clone()).collect(),
            permittivity: self.permittivity.clone(),
        })
    }
}

pub(crate) fn check_grid(grid: &SpatialGrid, boundary: Boundary) -> Result<()> {
    if grid.kind() != boundary.grid_kind() {
        return Err(CqedError::Config(format!(
            "{boundary:?} modes need a {:?} grid, got {:?}",
            boundary.grid_kind(),
            grid.kind()
        )));
    }
    Ok(())
}

/// Sign convention shared by all mode solvers: first sample above `tol` is positive.
pub(crate) fn fix_sign(phi: &mut [f64], tol: f64) {
    if let Some(first) = phi.iter().find(|v| v.abs() > tol) {
        if *first < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
    }
}
