use serde::{Deserialize, Serialize};

use crate::error::{CqedError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Endpoints `±L/2` are both samples; `Δx = L/(N−1)`.
    Bounded,
    /// Cell-centred samples on a ring of circumference `L`; `Δx = L/N`.
    Periodic,
}

/// Uniform 1D grid on `[−L/2, L/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    length: f64,
    n_points: usize,
    kind: GridKind,
}

impl SpatialGrid {
    pub fn new(length: f64, n_points: usize, kind: GridKind) -> Result<Self> {
        if n_points < 3 {
            return Err(CqedError::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(CqedError::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self {
            length,
            n_points,
            kind,
        })
    }

    pub fn bounded(length: f64, n_points: usize) -> Result<Self> {
        Self::new(length, n_points, GridKind::Bounded)
    }

    pub fn periodic(length: f64, n_points: usize) -> Result<Self> {
        Self::new(length, n_points, GridKind::Periodic)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Bounded => self.length / (self.n_points - 1) as f64,
            GridKind::Periodic => self.length / self.n_points as f64,
        }
    }

    pub fn position(&self, j: usize) -> f64 {
        let dx = self.spacing();
        match self.kind {
            GridKind::Bounded => -0.5 * self.length + j as f64 * dx,
            GridKind::Periodic => -0.5 * self.length + (j as f64 + 0.5) * dx,
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let half = 0.5 * self.length;
        x >= -half * (1.0 + 1e-12) && x <= half * (1.0 + 1e-12)
    }

    /// Linear interpolation stencil `(j0, j1, w)` with value `(1−w)·f[j0] + w·f[j1]`.
    pub fn stencil(&self, x: f64) -> Result<(usize, usize, f64)> {
        if !self.contains(x) {
            return Err(CqedError::Config(format!(
                "position {x} lies outside [{}, {}]",
                -0.5 * self.length,
                0.5 * self.length
            )));
        }
        let dx = self.spacing();
        let n = self.n_points;
        match self.kind {
            GridKind::Bounded => {
                let s = ((x + 0.5 * self.length) / dx).clamp(0.0, (n - 1) as f64);
                let j0 = (s.floor() as usize).min(n - 2);
                Ok((j0, j0 + 1, s - j0 as f64))
            }
            GridKind::Periodic => {
                let s = (x + 0.5 * self.length) / dx - 0.5;
                let fl = s.floor();
                let j0 = fl.rem_euclid(n as f64) as usize % n;
                Ok((j0, (j0 + 1) % n, s - fl))
            }
        }
    }

    pub fn interpolate(&self, samples: &[f64], x: f64) -> Result<f64> {
        if samples.len() != self.n_points {
            return Err(CqedError::DimensionMismatch(format!(
                "{} samples on a {}-point grid",
                samples.len(),
                self.n_points
            )));
        }
        let (j0, j1, w) = self.stencil(x)?;
        Ok((1.0 - w) * samples[j0] + w * samples[j1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_grids_sample_the_centre() {
        let b = SpatialGrid::bounded(2.0, 11).unwrap();
        assert!(b.position(5).abs() < 1e-15);
        assert_eq!(b.position(0), -1.0);
        let p = SpatialGrid::periodic(2.0, 11).unwrap();
        assert!(p.position(5).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let g = SpatialGrid::bounded(4.0, 9).unwrap();
        let f: Vec<f64> = g.positions().iter().map(|x| 3.0 * x - 1.0).collect();
        for &x in &[-2.0, -1.3, 0.0, 0.77, 2.0] {
            assert!((g.interpolate(&f, x).unwrap() - (3.0 * x - 1.0)).abs() < 1e-12);
        }
        assert!(g.interpolate(&f, 2.5).is_err());
    }

    #[test]
    fn periodic_interpolation_wraps() {
        let g = SpatialGrid::periodic(1.0, 10).unwrap();
        let f: Vec<f64> = (0..10).map(|j| j as f64).collect();
        // halfway between the last sample (9) and the first (0)
        let v = g.interpolate(&f, 0.5).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(SpatialGrid::bounded(1.0, 2).is_err());
        assert!(SpatialGrid::bounded(0.0, 5).is_err());
    }
}
