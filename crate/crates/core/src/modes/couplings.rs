use serde::{Deserialize, Serialize};

use super::ModeBasis;
use crate::atom::TwoLevelAtom;
use crate::error::{CqedError, Result};

/// Modes with `|g_D,k|` at or below this fraction of the largest are uncoupled.
pub const COUPLING_MASK_THRESHOLD: f64 = 1e-12;

/// Per-mode coupling coefficients in the dipole and Coulomb gauges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub omega_a: f64,
    pub frequencies: Vec<f64>,
    pub g_d: Vec<f64>,
    pub g_c: Vec<f64>,
    pub coupled_mask: Vec<bool>,
}

impl Couplings {
    /// Build from dipole-gauge values; `g_C = g_D ω_a/ω`.
    pub fn from_dipole(omega_a: f64, frequencies: Vec<f64>, g_d: Vec<f64>) -> Result<Self> {
        if frequencies.len() != g_d.len() {
            return Err(CqedError::DimensionMismatch(format!(
                "{} frequencies and {} couplings",
                frequencies.len(),
                g_d.len()
            )));
        }
        if frequencies.iter().any(|w| !(*w > 0.0)) {
            return Err(CqedError::Config("mode frequencies must be positive".into()));
        }
        let coupled_mask = mask_of(&g_d);
        Self::with_mask(omega_a, frequencies, g_d, coupled_mask)
    }

    /// As [`Couplings::from_dipole`] with an explicit coupled-mode mask.
    pub fn with_mask(omega_a: f64, frequencies: Vec<f64>, g_d: Vec<f64>, coupled_mask: Vec<bool>) -> Result<Self> {
        if coupled_mask.len() != g_d.len() || frequencies.len() != g_d.len() {
            return Err(CqedError::DimensionMismatch("coupling arrays differ in length".into()));
        }
        let g_c = g_d.iter().zip(&frequencies).map(|(g, w)| g * omega_a / w).collect();
        Ok(Self {
            omega_a,
            frequencies,
            g_d,
            g_c,
            coupled_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.g_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_d.is_empty()
    }

    pub fn coupled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.coupled_mask[k]).collect()
    }

    /// Restriction to the coupled modes, in ascending mode order.
    pub fn coupled(&self) -> Couplings {
        let idx = self.coupled_indices();
        Couplings {
            omega_a: self.omega_a,
            frequencies: idx.iter().map(|&k| self.frequencies[k]).collect(),
            g_d: idx.iter().map(|&k| self.g_d[k]).collect(),
            g_c: idx.iter().map(|&k| self.g_c[k]).collect(),
            coupled_mask: vec![true; idx.len()],
        }
    }

    /// Keep the first `count` modes.
    pub fn truncate(&self, count: usize) -> Couplings {
        let n = count.min(self.len());
        Couplings {
            omega_a: self.omega_a,
            frequencies: self.frequencies[..n].to_vec(),
            g_d: self.g_d[..n].to_vec(),
            g_c: self.g_c[..n].to_vec(),
            coupled_mask: self.coupled_mask[..n].to_vec(),
        }
    }

    /// Multiply every coefficient by `factor`; the mask is kept.
    pub fn scaled(&self, factor: f64) -> Couplings {
        let mut out = self.clone();
        out.g_d.iter_mut().for_each(|g| *g *= factor);
        out.g_c.iter_mut().for_each(|g| *g *= factor);
        out
    }
}

fn mask_of(values: &[f64]) -> Vec<bool> {
    let max = values.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    values
        .iter()
        .map(|g| max > 0.0 && g.abs() > COUPLING_MASK_THRESHOLD * max)
        .collect()
}

/// `g_D,k = d A_k(r0) √(ω_k / 2L)` with `A_k(r0)` linearly interpolated.
///
/// The coupled-mode mask depends on geometry only, so it survives `d = 0`.
pub fn coupling_coefficients(basis: &ModeBasis, atom: &TwoLevelAtom) -> Result<Couplings> {
    if !basis.grid.contains(atom.position) {
        return Err(CqedError::Config(format!(
            "atom position {} lies outside the cavity [{}, {}]",
            atom.position,
            -0.5 * basis.length(),
            0.5 * basis.length()
        )));
    }
    let l = basis.length();
    let unit = (0..basis.len())
        .map(|k| Ok(basis.value(k, atom.position)? * (basis.frequencies[k] / (2.0 * l)).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let mask = mask_of(&unit);
    let g_d = unit.iter().map(|u| atom.dipole * u).collect();
    Couplings::with_mask(atom.omega_a, basis.frequencies.clone(), g_d, mask)
}

/// Rescale the dipole so the lowest coupled mode has `g_D/ω = target` (positive).
pub fn calibrate_dipole(basis: &ModeBasis, atom: &TwoLevelAtom, target_ratio: f64) -> Result<TwoLevelAtom> {
    let unit = TwoLevelAtom { dipole: 1.0, ..*atom };
    let c = coupling_coefficients(basis, &unit)?;
    let first = c.coupled_mask.iter().position(|&m| m).ok_or_else(|| {
        CqedError::Calibration(format!("no mode couples to an atom at x = {}", atom.position))
    })?;
    let dipole = target_ratio * c.frequencies[first] / c.g_d[first];
    Ok(TwoLevelAtom { dipole, ..*atom })
}
