//! Population, photon numbers and first-order field correlations.
//!
//! The field correlation is reported as
//! `G1(x) = (1/2L) Σ_kk' √(ω_k ω_k') A_k(x) A_k'(x) ⟨a_k† a_k'⟩`,
//! i.e. in units where the vacuum field prefactor `1/(2ε0 V0)` becomes `1/(2L)`.

use faer::Mat;

use crate::chainmap::{to_mode_basis, ChainTransform};
use crate::error::{CqedError, Result};
use crate::linalg::{CMat, RMat};
use crate::modes::ModeBasis;

pub use crate::mps::excited_population;

/// Photon numbers above this negative floor are clipped to zero for reporting.
pub const CLIP_FLOOR: f64 = -1e-10;

/// `⟨a_k† a_k⟩ = u_kᵀ B u_k` (raw, unclipped).
pub fn photon_numbers(b: &CMat, chain: &ChainTransform) -> Result<Vec<f64>> {
    let a = to_mode_basis(b, &chain.u)?;
    Ok((0..a.nrows()).map(|k| a[(k, k)].re).collect())
}

/// Clip tiny negative values to zero; larger negatives are kept so they stay visible.
pub fn clip_for_report(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| if v < 0.0 && v >= CLIP_FLOOR { 0.0 } else { v })
        .collect()
}

/// Mode-function samples `v_k(x) = √ω_k A_k(x)` at fixed positions.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    pub positions: Vec<f64>,
    /// `positions × modes`.
    weights: RMat,
    length: f64,
}

impl FieldSampler {
    pub fn new(basis: &ModeBasis, positions: &[f64]) -> Result<Self> {
        let mut weights = Mat::zeros(positions.len(), basis.len());
        for (i, &x) in positions.iter().enumerate() {
            for k in 0..basis.len() {
                weights[(i, k)] = basis.frequencies[k].sqrt() * basis.value(k, x)?;
            }
        }
        Ok(Self {
            positions: positions.to_vec(),
            weights,
            length: basis.length(),
        })
    }

    /// Evenly spaced positions across the whole cavity.
    pub fn uniform(basis: &ModeBasis, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(CqedError::Config("field maps need at least two positions".into()));
        }
        let l = basis.length();
        let xs: Vec<f64> = (0..count).map(|i| -0.5 * l + l * i as f64 / (count - 1) as f64).collect();
        Self::new(basis, &xs)
    }

    pub fn modes(&self) -> usize {
        self.weights.ncols()
    }

    /// `G1` at every sampled position from the mode-basis matrix `A_kk' = ⟨a_k† a_k'⟩`.
    pub fn evaluate(&self, mode_matrix: &CMat) -> Result<Vec<f64>> {
        let m = self.modes();
        if mode_matrix.nrows() != m || mode_matrix.ncols() != m {
            return Err(CqedError::DimensionMismatch(format!(
                "{}x{} mode matrix for {m} sampled modes",
                mode_matrix.nrows(),
                mode_matrix.ncols()
            )));
        }
        let scale = 1.0 / (2.0 * self.length);
        Ok((0..self.positions.len())
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..m {
                    let vk = self.weights[(i, k)];
                    if vk == 0.0 {
                        continue;
                    }
                    for kp in 0..m {
                        acc += vk * self.weights[(i, kp)] * mode_matrix[(k, kp)].re;
                    }
                }
                acc * scale
            })
            .collect())
    }
}

/// `G1(x)` from the chain correlation matrix; `basis` holds the coupled modes
/// in the same order as the chain transform's columns.
pub fn field_correlation(b: &CMat, chain: &ChainTransform, basis: &ModeBasis, positions: &[f64]) -> Result<Vec<f64>> {
    if basis.len() != chain.modes() {
        return Err(CqedError::DimensionMismatch(format!(
            "{} modes in the basis but {} in the chain transform",
            basis.len(),
            chain.modes()
        )));
    }
    let a = to_mode_basis(b, &chain.u)?;
    FieldSampler::new(basis, positions)?.evaluate(&a)
}

/// Space–time map of `G1`.
#[derive(Debug, Clone, Default)]
pub struct FieldMap {
    /// Times in units of the atomic period.
    pub times: Vec<f64>,
    /// Positions in units of the cavity length.
    pub positions: Vec<f64>,
    /// `values[t][x]`.
    pub values: Vec<Vec<f64>>,
}
