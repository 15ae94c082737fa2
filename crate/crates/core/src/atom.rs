//! Anharmonic single-particle atom on a spatial grid.
//!
//! The bare atom `p²/2m + V(x)` is discretized with the Fourier grid
//! Hamiltonian method (spectral kinetic operator on an odd, centred grid),
//! diagonalized, and reduced to a two-level atom whose dipole is real.
//!
//! Units: `ħ = 1`. The double-well default is calibrated so the lowest gap is
//! well separated from the next one; downstream code measures frequencies in
//! units of that gap.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{CqedError, Result};
use crate::linalg::{self, RMat};
use crate::modes::SpatialGrid;

/// Amplitude below which a sample is ignored by the sign convention.
pub const SIGN_TOLERANCE: f64 = 1e-8;

/// Anharmonicity `(E2−E1)/(E1−E0)` targeted by the default double well.
pub const DEFAULT_ANHARMONICITY: f64 = 200.0;

/// Quartic coefficient of the default double well.
pub const DEFAULT_QUARTIC: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V(x) = −a x² + b x⁴`.
    DoubleWell { quadratic: f64, quartic: f64 },
    /// `V(x) = ½ k x²`.
    Harmonic { stiffness: f64 },
    /// One value per grid sample.
    CustomSamples { samples: Vec<f64> },
}

impl Potential {
    /// Double well calibrated to [`DEFAULT_ANHARMONICITY`].
    pub fn default_double_well() -> Result<Self> {
        calibrate_double_well(DEFAULT_ANHARMONICITY, DEFAULT_QUARTIC, 1.0)
    }

    pub fn value(&self, x: f64) -> Option<f64> {
        match self {
            Potential::DoubleWell { quadratic, quartic } => {
                Some(-quadratic * x * x + quartic * x.powi(4))
            }
            Potential::Harmonic { stiffness } => Some(0.5 * stiffness * x * x),
            Potential::CustomSamples { .. } => None,
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        let values = match self {
            Potential::CustomSamples { samples } => {
                if samples.len() != grid.n_points() {
                    return Err(CqedError::InvalidPotential(format!(
                        "{} custom samples for a {}-point grid",
                        samples.len(),
                        grid.n_points()
                    )));
                }
                samples.clone()
            }
            analytic => grid
                .positions()
                .into_iter()
                .map(|x| analytic.value(x).unwrap())
                .collect(),
        };
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(CqedError::InvalidPotential(format!(
                "non-finite value at sample {j}"
            )));
        }
        Ok(values)
    }

    fn minimum(&self) -> f64 {
        match self {
            Potential::DoubleWell { quadratic, quartic } if *quadratic > 0.0 => {
                -quadratic * quadratic / (4.0 * quartic)
            }
            _ => 0.0,
        }
    }

    /// Largest |x| with `V(x) = energy` (analytic kinds only).
    fn turning_point(&self, energy: f64) -> Option<f64> {
        self.value(0.0)?;
        let mut hi = 1.0;
        while self.value(hi)? < energy {
            hi *= 2.0;
            if hi > 1e8 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid)? < energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }
}

/// Real symmetric Fourier-grid matrix of `p²/2m + V(x)` on an odd grid.
pub fn build_fgh_hamiltonian(potential: &Potential, grid: &SpatialGrid, mass: f64) -> Result<RMat> {
    let n = grid.n_points();
    if n % 2 == 0 || n < 33 {
        return Err(CqedError::InvalidGrid(format!(
            "Fourier grid needs an odd point count of at least 33, got {n}"
        )));
    }
    if !(mass > 0.0) {
        return Err(CqedError::InvalidPotential(format!("mass must be positive, got {mass}")));
    }
    let v = potential.sample(grid)?;
    let dx = grid.spacing();
    let half = (n - 1) / 2;
    let period = n as f64 * dx;

    // kinetic[d] is the entry for |i − j| ≡ d (mod n)
    let kinetic: Vec<f64> = (0..n)
        .map(|d| {
            let mut acc = 0.0;
            for l in 1..=half {
                let k = 2.0 * PI * l as f64 / period;
                acc += (2.0 * PI * l as f64 * d as f64 / n as f64).cos() * k * k / (2.0 * mass);
            }
            2.0 * acc / n as f64
        })
        .collect();

    Ok(Mat::from_fn(n, n, |i, j| {
        let d = if i >= j { i - j } else { j - i };
        kinetic[d] + if i == j { v[i] } else { 0.0 }
    }))
}

/// Diagonalized bare atom: ascending energies and grid-normalized real
/// wavefunctions (`Σ ψ_m ψ_n Δx = δ_mn`).
#[derive(Debug, Clone)]
pub struct AtomSpectrum {
    pub energies: Vec<f64>,
    pub wavefunctions: Vec<Vec<f64>>,
    pub grid: SpatialGrid,
    pub mass: f64,
}

pub fn diagonalize_atom(h: &RMat, grid: &SpatialGrid, n_levels: usize, mass: f64) -> Result<AtomSpectrum> {
    let n = grid.n_points();
    if h.nrows() != n || h.ncols() != n {
        return Err(CqedError::DimensionMismatch(format!(
            "{}x{} Hamiltonian on a {n}-point grid",
            h.nrows(),
            h.ncols()
        )));
    }
    if n_levels == 0 || n_levels > n {
        return Err(CqedError::Config(format!(
            "requested {n_levels} levels from a {n}-point grid"
        )));
    }
    let (vals, vecs) = linalg::eigh_real(h)?;
    let norm = grid.spacing().sqrt();
    let mut wavefunctions = Vec::with_capacity(n_levels);
    for k in 0..n_levels {
        let mut psi: Vec<f64> = (0..n).map(|i| vecs[(i, k)] / norm).collect();
        if let Some(first) = psi.iter().find(|v| v.abs() > SIGN_TOLERANCE) {
            if *first < 0.0 {
                psi.iter_mut().for_each(|v| *v = -*v);
            }
        }
        // residual check on the returned pair
        let mut res = 0.0f64;
        for i in 0..n {
            let mut acc = -vals[k] * vecs[(i, k)];
            for j in 0..n {
                acc += h[(i, j)] * vecs[(j, k)];
            }
            res = res.max(acc.abs());
        }
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if !(res <= 1e-8 * scale) {
            return Err(CqedError::numeric("atom eigenpair", res));
        }
        wavefunctions.push(psi);
    }
    Ok(AtomSpectrum {
        energies: vals[..n_levels].to_vec(),
        wavefunctions,
        grid: grid.clone(),
        mass,
    })
}

impl AtomSpectrum {
    /// Solve the atom on an automatically sized grid that resolves `n_levels`.
    ///
    /// The grid extends to 1.5× the outer classical turning point of the
    /// highest requested level and samples the largest classical momentum at
    /// four points per wavelength.
    pub fn solve(potential: &Potential, mass: f64, n_levels: usize) -> Result<Self> {
        let v_min = potential.minimum();
        let mut e_max = v_min + 10.0;
        for _ in 0..12 {
            let grid = auto_grid(potential, mass, e_max, n_levels)?;
            let h = build_fgh_hamiltonian(potential, &grid, mass)?;
            let spec = diagonalize_atom(&h, &grid, n_levels, mass)?;
            let top = spec.energies[n_levels - 1];
            if top <= e_max {
                return Ok(spec);
            }
            e_max = v_min + 1.25 * (top - v_min);
        }
        Err(CqedError::numeric("atom grid sizing did not settle", e_max))
    }

    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// `(E2 − E1)/(E1 − E0)`.
    pub fn anharmonicity(&self) -> f64 {
        (self.energies[2] - self.energies[1]) / self.gap()
    }

    pub fn overlap(&self, m: usize, n: usize) -> f64 {
        let dx = self.grid.spacing();
        self.wavefunctions[m]
            .iter()
            .zip(&self.wavefunctions[n])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * dx
    }

    /// `⟨E_m| x |E_n⟩` for the lowest `levels` states.
    pub fn position_matrix(&self, levels: usize) -> RMat {
        let xs = self.grid.positions();
        let dx = self.grid.spacing();
        let levels = levels.min(self.n_levels());
        Mat::from_fn(levels, levels, |m, n| {
            self.wavefunctions[m]
                .iter()
                .zip(&self.wavefunctions[n])
                .zip(&xs)
                .map(|((a, b), x)| a * x * b)
                .sum::<f64>()
                * dx
        })
    }
}

fn auto_grid(potential: &Potential, mass: f64, e_max: f64, n_levels: usize) -> Result<SpatialGrid> {
    let x_turn = potential.turning_point(e_max).ok_or_else(|| {
        CqedError::InvalidPotential("automatic grid sizing needs a confining analytic potential".into())
    })?;
    let half_width = 1.5 * x_turn;
    let p_max = (2.0 * mass * (e_max - potential.minimum())).sqrt();
    let dx = PI / (2.0 * p_max);
    let mut n = (2.0 * half_width / dx).ceil() as usize + 1;
    n = n.max(2 * n_levels + 1).max(33);
    if n % 2 == 0 {
        n += 1;
    }
    // periodic grid of length n·dx, centred on the origin
    SpatialGrid::periodic(n as f64 * dx, n)
}

/// Two-level atom: gap `omega_a`, real dipole `dipole`, position `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelAtom {
    pub omega_a: f64,
    pub dipole: f64,
    pub position: f64,
}

impl TwoLevelAtom {
    pub fn new(omega_a: f64, dipole: f64, position: f64) -> Result<Self> {
        if !(omega_a > 0.0 && omega_a.is_finite()) {
            return Err(CqedError::Config(format!("omega_a must be positive, got {omega_a}")));
        }
        if !dipole.is_finite() || !position.is_finite() {
            return Err(CqedError::Config("dipole and position must be finite".into()));
        }
        Ok(Self {
            omega_a,
            dipole,
            position,
        })
    }
}

/// Reduce to the lowest two levels.
///
/// `frequency_unit` is the angular frequency that maps to 1 in the output;
/// passing `spec.gap()` yields `omega_a = 1`.
pub fn reduce_to_two_level(
    spec: &AtomSpectrum,
    charge: f64,
    position: f64,
    frequency_unit: f64,
) -> Result<TwoLevelAtom> {
    if spec.n_levels() < 2 {
        return Err(CqedError::Config("two-level reduction needs at least two levels".into()));
    }
    let gap = spec.gap();
    let scale = spec.energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    if gap < 1e-10 * scale {
        return Err(CqedError::Degenerate(format!(
            "lowest pair is degenerate (E1 − E0 = {gap:e})"
        )));
    }
    let x = spec.position_matrix(2);
    TwoLevelAtom::new(gap / frequency_unit, charge * x[(0, 1)], position)
}

/// Find `a` in `V = −a x² + b x⁴` with `(E2−E1)/(E1−E0) = target` by bisection.
///
/// The ratio grows monotonically with the barrier height; `target` must
/// exceed the pure-quartic value (about 1.4).
pub fn calibrate_double_well(target: f64, quartic: f64, mass: f64) -> Result<Potential> {
    let ratio = |a: f64| -> Result<f64> {
        let p = Potential::DoubleWell {
            quadratic: a,
            quartic,
        };
        Ok(AtomSpectrum::solve(&p, mass, 3)?.anharmonicity())
    };
    let mut lo = 0.0;
    if ratio(lo)? >= target {
        return Err(CqedError::Calibration(format!(
            "anharmonicity target {target} is below the pure quartic value"
        )));
    }
    let mut hi = 1.0;
    while ratio(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(CqedError::Calibration(format!(
                "anharmonicity {target} not reachable"
            )));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(Potential::DoubleWell {
        quadratic: hi,
        quartic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> AtomSpectrum {
        AtomSpectrum::solve(&Potential::Harmonic { stiffness: 1.0 }, 1.0, 6).unwrap()
    }

    #[test]
    fn harmonic_levels_are_half_integers() {
        let spec = harmonic();
        for (n, e) in spec.energies.iter().take(3).enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-6, "E{n} = {e}");
        }
    }

    #[test]
    fn harmonic_parity_and_dipole() {
        let spec = harmonic();
        let n = spec.grid.n_points();
        let psi0 = &spec.wavefunctions[0];
        let psi1 = &spec.wavefunctions[1];
        for i in 0..n {
            assert!((psi0[i] - psi0[n - 1 - i]).abs() < 1e-8);
            assert!((psi1[i] + psi1[n - 1 - i]).abs() < 1e-8);
        }
        let atom = reduce_to_two_level(&spec, 1.0, 0.0, 1.0).unwrap();
        assert!((atom.dipole.abs() - 0.5f64.sqrt()).abs() < 1e-6);
        assert!((atom.omega_a - 1.0).abs() < 1e-6);
    }

    #[test]
    fn free_particle_ground_state_is_nodeless_and_nonnegative() {
        let grid = SpatialGrid::periodic(10.0, 65).unwrap();
        let h = build_fgh_hamiltonian(&Potential::CustomSamples { samples: vec![0.0; 65] }, &grid, 1.0).unwrap();
        let spec = diagonalize_atom(&h, &grid, 1, 1.0).unwrap();
        assert!(spec.energies[0] > -1e-12);
        assert!(spec.wavefunctions[0].iter().all(|v| *v > 0.0));
    }

    #[test]
    fn fgh_matrix_is_symmetric() {
        let grid = SpatialGrid::periodic(12.0, 101).unwrap();
        let h = build_fgh_hamiltonian(&Potential::Harmonic { stiffness: 1.0 }, &grid, 1.0).unwrap();
        let scale = (0..101).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
        for i in 0..101 {
            for j in 0..101 {
                assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn full_spectrum_trace_identity() {
        let grid = SpatialGrid::periodic(8.0, 41).unwrap();
        let h = build_fgh_hamiltonian(&Potential::Harmonic { stiffness: 1.0 }, &grid, 1.0).unwrap();
        let spec = diagonalize_atom(&h, &grid, 41, 1.0).unwrap();
        let trace: f64 = (0..41).map(|i| h[(i, i)]).sum();
        let sum: f64 = spec.energies.iter().sum();
        assert!((trace - sum).abs() <= 1e-8 * trace.abs());
    }

    #[test]
    fn grid_errors() {
        let even = SpatialGrid::periodic(8.0, 64).unwrap();
        assert!(matches!(
            build_fgh_hamiltonian(&Potential::Harmonic { stiffness: 1.0 }, &even, 1.0),
            Err(CqedError::InvalidGrid(_))
        ));
        let grid = SpatialGrid::periodic(8.0, 41).unwrap();
        let mut samples = vec![0.0; 41];
        samples[7] = f64::NAN;
        assert!(matches!(
            build_fgh_hamiltonian(&Potential::CustomSamples { samples }, &grid, 1.0),
            Err(CqedError::InvalidPotential(_))
        ));
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let grid = SpatialGrid::periodic(8.0, 41).unwrap();
        let spec = AtomSpectrum {
            energies: vec![1.0, 1.0],
            wavefunctions: vec![vec![0.0; 41], vec![0.0; 41]],
            grid,
            mass: 1.0,
        };
        assert!(matches!(
            reduce_to_two_level(&spec, 1.0, 0.0, 1.0),
            Err(CqedError::Degenerate(_))
        ));
    }

    #[test]
    fn sign_flip_of_excited_state_keeps_dipole_magnitude() {
        let mut spec = harmonic();
        let d = reduce_to_two_level(&spec, 1.0, 0.0, 1.0).unwrap().dipole;
        spec.wavefunctions[1].iter_mut().for_each(|v| *v = -*v);
        let flipped = reduce_to_two_level(&spec, 1.0, 0.0, 1.0).unwrap().dipole;
        assert_eq!(d, -flipped);
    }
}
