//! Truncated multimode Fock spaces and their ladder operators.
//!
//! States are occupation tuples ordered lexicographically with the last
//! mode's index running fastest, so a per-mode truncation reproduces the
//! usual Kronecker layout `mode-1 ⊗ … ⊗ mode-M`.

use std::collections::HashMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{CqedError, Result};
use crate::linalg::RMat;

/// Largest boson-space dimension the dense builders accept by default.
pub const DEFAULT_MAX_DIMENSION: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    /// Every mode holds `0..N−1` photons (`N^M` states).
    #[default]
    PerMode,
    /// At most `N−1` photons in total across all modes.
    TotalNumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockTruncation {
    pub modes: usize,
    /// Fock states per mode, `0..cutoff−1`.
    pub cutoff: usize,
    pub kind: TruncationKind,
    /// Capacity guard on the full (atom ⊗ field) dimension.
    pub max_dimension: usize,
}

impl FockTruncation {
    pub fn new(modes: usize, cutoff: usize, kind: TruncationKind) -> Result<Self> {
        if modes == 0 || cutoff < 2 {
            return Err(CqedError::Config(format!(
                "Fock truncation needs M >= 1 and N >= 2, got M = {modes}, N = {cutoff}"
            )));
        }
        Ok(Self {
            modes,
            cutoff,
            kind,
            max_dimension: DEFAULT_MAX_DIMENSION,
        })
    }

    pub fn per_mode(modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(modes, cutoff, TruncationKind::PerMode)
    }

    pub fn total_number(modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(modes, cutoff, TruncationKind::TotalNumber)
    }

    pub fn with_max_dimension(mut self, limit: usize) -> Self {
        self.max_dimension = limit;
        self
    }

    pub fn with_modes(self, modes: usize) -> Result<Self> {
        Ok(Self::new(modes, self.cutoff, self.kind)?.with_max_dimension(self.max_dimension))
    }

    pub fn with_cutoff(self, cutoff: usize) -> Result<Self> {
        Ok(Self::new(self.modes, cutoff, self.kind)?.with_max_dimension(self.max_dimension))
    }

    /// Boson-space dimension (saturating).
    pub fn dimension(&self) -> usize {
        match self.kind {
            TruncationKind::PerMode => {
                let mut d: usize = 1;
                for _ in 0..self.modes {
                    d = d.saturating_mul(self.cutoff);
                }
                d
            }
            TruncationKind::TotalNumber => {
                // C(N−1+M, M)
                let (n, m) = (self.cutoff - 1, self.modes);
                let mut acc: u128 = 1;
                for i in 1..=m as u128 {
                    acc = acc * (n as u128 + i) / i;
                    if acc > usize::MAX as u128 {
                        return usize::MAX;
                    }
                }
                acc as usize
            }
        }
    }

    /// Fail with sizing advice if `atom_levels × dimension` exceeds the guard.
    pub fn check_capacity(&self, atom_levels: usize, what: &str) -> Result<usize> {
        let needed = self.dimension().saturating_mul(atom_levels);
        if needed > self.max_dimension {
            return Err(CqedError::Capacity {
                what: what.to_string(),
                needed,
                limit: self.max_dimension,
                advice: "reduce the mode count or photon cutoff, switch to total-number truncation, or raise the limit".into(),
            });
        }
        Ok(needed)
    }
}

/// Enumerated basis of a truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub truncation: FockTruncation,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

impl FockSpace {
    pub fn new(truncation: FockTruncation) -> Result<Self> {
        truncation.check_capacity(1, "Fock space")?;
        let m = truncation.modes;
        let top = (truncation.cutoff - 1) as u16;
        let mut states = Vec::with_capacity(truncation.dimension());
        let mut occ = vec![0u16; m];
        loop {
            let total: u32 = occ.iter().map(|&n| n as u32).sum();
            if truncation.kind == TruncationKind::PerMode || total <= top as u32 {
                states.push(occ.clone());
            }
            // odometer increment, last mode fastest
            let mut pos = m;
            loop {
                if pos == 0 {
                    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
                    return Ok(Self {
                        truncation,
                        states,
                        index,
                    });
                }
                pos -= 1;
                if occ[pos] < top {
                    occ[pos] += 1;
                    break;
                }
                occ[pos] = 0;
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Nonzero entries `(row, col, value)` of `a_k`.
    pub fn annihilation_entries(&self, k: usize) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let mut lowered = vec![0u16; self.truncation.modes];
        for (col, s) in self.states.iter().enumerate() {
            if s[k] == 0 {
                continue;
            }
            lowered.copy_from_slice(s);
            lowered[k] -= 1;
            if let Some(row) = self.index_of(&lowered) {
                out.push((row, col, (s[k] as f64).sqrt()));
            }
        }
        out
    }

    pub fn annihilation(&self, k: usize) -> RMat {
        let d = self.dimension();
        let mut a = Mat::zeros(d, d);
        for (r, c, v) in self.annihilation_entries(k) {
            a[(r, c)] = v;
        }
        a
    }

    /// `Σ_k c_k n_k` (diagonal).
    pub fn weighted_number(&self, c: &[f64]) -> RMat {
        let d = self.dimension();
        Mat::from_fn(d, d, |i, j| {
            if i == j {
                self.states[i].iter().zip(c).map(|(&n, w)| n as f64 * w).sum()
            } else {
                0.0
            }
        })
    }

    /// `Σ_k c_k (a_k + s·a_k†)` for `s = ±1`.
    pub fn ladder_sum(&self, c: &[f64], sign: f64) -> RMat {
        let d = self.dimension();
        let mut out = Mat::zeros(d, d);
        for (k, &ck) in c.iter().enumerate() {
            if ck == 0.0 {
                continue;
            }
            for (r, col, v) in self.annihilation_entries(k) {
                out[(r, col)] += ck * v;
                out[(col, r)] += sign * ck * v;
            }
        }
        out
    }

    /// `Σ_{k,k'} c_{kk'} a_k† a_k'`.
    pub fn hopping(&self, c: &RMat) -> RMat {
        let d = self.dimension();
        let m = self.truncation.modes;
        let mut out = Mat::zeros(d, d);
        let mut occ = vec![0u16; m];
        for (col, s) in self.states.iter().enumerate() {
            for kp in 0..m {
                if s[kp] == 0 {
                    continue;
                }
                for k in 0..m {
                    let ckk = c[(k, kp)];
                    if ckk == 0.0 {
                        continue;
                    }
                    occ.copy_from_slice(s);
                    let mut amp = (occ[kp] as f64).sqrt();
                    occ[kp] -= 1;
                    amp *= (occ[k] as f64 + 1.0).sqrt();
                    occ[k] += 1;
                    if let Some(row) = self.index_of(&occ) {
                        out[(row, col)] += ckk * amp;
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_mode_layout_matches_kron_order() {
        let f = FockSpace::new(FockTruncation::per_mode(2, 3).unwrap()).unwrap();
        assert_eq!(f.dimension(), 9);
        assert_eq!(f.state(1), &[0, 1]);
        assert_eq!(f.state(3), &[1, 0]);
        let a1 = f.annihilation(1);
        assert_eq!(a1[(0, 1)], 1.0);
        assert!((a1[(1, 2)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn total_number_dimension() {
        let t = FockTruncation::total_number(3, 4).unwrap();
        assert_eq!(t.dimension(), 20);
        assert_eq!(FockSpace::new(t).unwrap().dimension(), 20);
        assert_eq!(FockTruncation::per_mode(3, 4).unwrap().dimension(), 64);
    }

    #[test]
    fn hopping_matches_ladder_products() {
        let f = FockSpace::new(FockTruncation::per_mode(2, 3).unwrap()).unwrap();
        let c = Mat::from_fn(2, 2, |i, j| [[0.5, 0.2], [0.2, -1.0]][i][j]);
        let h = f.hopping(&c);
        let a0 = f.annihilation(0);
        let a1 = f.annihilation(1);
        let reference = 0.5 * a0.transpose() * &a0
            + 0.2 * a0.transpose() * &a1
            + 0.2 * a1.transpose() * &a0
            - 1.0 * a1.transpose() * &a1;
        for i in 0..9 {
            for j in 0..9 {
                assert!((h[(i, j)] - reference[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn capacity_guard() {
        let t = FockTruncation::per_mode(10, 10).unwrap();
        assert!(matches!(FockSpace::new(t), Err(CqedError::Capacity { .. })));
        assert!(FockTruncation::per_mode(1, 1).is_err());
    }
}
