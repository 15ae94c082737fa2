//! Dense Rabi-type Hamiltonians on atom ⊗ truncated Fock spaces.
//!
//! Basis ordering is atom-major; within the field the last mode's photon
//! number runs fastest. Only modes flagged as coupled enter the field space;
//! the truncation's mode count selects how many cavity modes are considered
//! before that filter.
//!
//! Energies are in units of the couplings' `omega_a`. For the full (multilevel)
//! builders the atomic position is measured in units of `x_ge = ⟨g|x|e⟩`, so
//! the same `g_D,k` serve every variant.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::atom::{AtomSpectrum, TwoLevelAtom};
use crate::chainmap::ChainTransform;
use crate::error::{CqedError, Result};
use crate::fock::{FockSpace, FockTruncation, DEFAULT_MAX_DIMENSION};
use crate::linalg::{self, c, CMat, RMat, C64, I, ONE, ZERO};
use crate::modes::Couplings;
use crate::pauli;

/// Atom levels retained by the multilevel builders unless configured otherwise.
pub const DEFAULT_ATOM_LEVELS: usize = 40;

/// Minimum atom levels for the projected dipole self-energy.
pub const MIN_SELF_ENERGY_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FullC,
    FullD,
    RabiCDirect,
    RabiDDirect,
    RabiCProper,
    RabiDProper,
    Chain,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::FullC => "full_C",
            Variant::FullD => "full_D",
            Variant::RabiCDirect => "rabi_C_direct",
            Variant::RabiDDirect => "rabi_D_direct",
            Variant::RabiCProper => "rabi_C_proper",
            Variant::RabiDProper => "rabi_D_proper",
            Variant::Chain => "chain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Variant::FullC,
            Variant::FullD,
            Variant::RabiCDirect,
            Variant::RabiDDirect,
            Variant::RabiCProper,
            Variant::RabiDProper,
            Variant::Chain,
        ]
        .into_iter()
        .find(|v| v.label() == s)
    }
}

#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    pub matrix: CMat,
    pub variant: Variant,
    pub atom_levels: usize,
    /// Field truncation actually used (mode count = coupled modes).
    pub truncation: FockTruncation,
}

impl DenseHamiltonian {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(&self.matrix)
    }
}

/// Field space over the coupled modes among the first `trunc.modes`.
struct Field {
    space: FockSpace,
    omega: Vec<f64>,
    g_d: Vec<f64>,
    g_c: Vec<f64>,
    omega_a: f64,
}

impl Field {
    fn new(couplings: &Couplings, trunc: &FockTruncation, atom_levels: usize, what: &str) -> Result<Self> {
        if trunc.modes > couplings.len() {
            return Err(CqedError::DimensionMismatch(format!(
                "truncation asks for {} modes but only {} have couplings",
                trunc.modes,
                couplings.len()
            )));
        }
        let c = couplings.truncate(trunc.modes).coupled();
        if c.is_empty() {
            return Err(CqedError::Degenerate(
                "no coupled modes among the requested ones".into(),
            ));
        }
        let eff = trunc.with_modes(c.len())?;
        eff.check_capacity(atom_levels, what)?;
        Ok(Self {
            space: FockSpace::new(eff)?,
            omega: c.frequencies,
            g_d: c.g_d,
            g_c: c.g_c,
            omega_a: c.omega_a,
        })
    }

    fn dim(&self) -> usize {
        self.space.dimension()
    }

    fn free(&self) -> RMat {
        self.space.weighted_number(&self.omega)
    }

    fn identity(&self) -> RMat {
        Mat::identity(self.dim(), self.dim())
    }
}

/// Accumulates `Σ coef · atom ⊗ field` into a dense matrix.
struct Assembly {
    na: usize,
    nb: usize,
    m: CMat,
}

impl Assembly {
    fn new(na: usize, nb: usize) -> Self {
        Self {
            na,
            nb,
            m: linalg::zeros(na * nb, na * nb),
        }
    }

    fn add(&mut self, atom: &CMat, field: &RMat, coef: C64) {
        for ai in 0..self.na {
            for aj in 0..self.na {
                let a = atom[(ai, aj)] * coef;
                if a == ZERO {
                    continue;
                }
                for j in 0..self.nb {
                    for i in 0..self.nb {
                        let f = field[(i, j)];
                        if f != 0.0 {
                            self.m[(ai * self.nb + i, aj * self.nb + j)] += a * f;
                        }
                    }
                }
            }
        }
    }

    fn finish(self, variant: Variant, truncation: FockTruncation) -> Result<DenseHamiltonian> {
        let res = linalg::hermiticity_residual(&self.m);
        if res > 1e-12 {
            return Err(CqedError::numeric(format!("{} Hamiltonian is not Hermitian", variant.label()), res));
        }
        Ok(DenseHamiltonian {
            matrix: self.m,
            variant,
            atom_levels: self.na,
            truncation,
        })
    }
}

fn diag_c(values: &[f64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO })
}

fn real_to_c(m: &RMat) -> CMat {
    linalg::to_complex(m)
}

fn identity_c(n: usize) -> CMat {
    linalg::identity(n)
}

/// Atom energies relative to the ground state in units where `E1 − E0 = ω_a`,
/// and the position matrix in units of `x_ge`.
struct MultilevelAtom {
    energies: Vec<f64>,
    x: RMat,
    /// `ω_a / (2 m x_ge² (E1 − E0))`.
    trk: f64,
}

fn multilevel(spec: &AtomSpectrum, levels: usize, omega_a: f64) -> Result<MultilevelAtom> {
    if levels < 2 {
        return Err(CqedError::Config("multilevel builders need at least two atom levels".into()));
    }
    if levels > spec.n_levels() {
        return Err(CqedError::Config(format!(
            "{levels} atom levels requested but the spectrum holds {}",
            spec.n_levels()
        )));
    }
    let gap = spec.gap();
    let x = spec.position_matrix(levels);
    let x_ge = x[(0, 1)];
    if x_ge.abs() < 1e-12 {
        return Err(CqedError::Degenerate("vanishing transition dipole".into()));
    }
    let energies = spec.energies[..levels]
        .iter()
        .map(|e| (e - spec.energies[0]) / gap * omega_a)
        .collect();
    Ok(MultilevelAtom {
        energies,
        x: Mat::from_fn(levels, levels, |i, j| x[(i, j)] / x_ge),
        trk: omega_a / (2.0 * spec.mass * x_ge * x_ge * gap),
    })
}

/// Full Coulomb gauge: `H_A + H_F − (q/m) p·A + (q²/2m) A²` with `p` from `[x, H_A]`.
pub fn build_full_coulomb(
    spec: &AtomSpectrum,
    couplings: &Couplings,
    trunc: &FockTruncation,
    atom_levels: usize,
) -> Result<DenseHamiltonian> {
    let field = Field::new(couplings, trunc, atom_levels, "full Coulomb Hamiltonian")?;
    let at = multilevel(spec, atom_levels, field.omega_a)?;
    let n = atom_levels;
    let ratio: Vec<f64> = field.g_d.iter().zip(&field.omega).map(|(g, w)| g / w).collect();
    let quad = field.space.ladder_sum(&ratio, 1.0);
    // −(q/m) p·A  →  −i Σ_k (g_k/ω_k) (ε_m − ε_n) X̃_mn (a_k + a_k†)
    let pa = Mat::from_fn(n, n, |m, k| c((at.energies[m] - at.energies[k]) * at.x[(m, k)]));
    let mut h = Assembly::new(n, field.dim());
    h.add(&diag_c(&at.energies), &field.identity(), ONE);
    h.add(&identity_c(n), &field.free(), ONE);
    h.add(&pa, &quad, -I);
    h.add(&identity_c(n), &(&quad * &quad), c(at.trk));
    h.finish(Variant::FullC, field.space.truncation)
}

/// Full dipole gauge: `H_A + H_F − d·E(r0) + Σ_k (g_k²/ω_k) X̃²`.
pub fn build_full_dipole(
    spec: &AtomSpectrum,
    couplings: &Couplings,
    trunc: &FockTruncation,
    atom_levels: usize,
) -> Result<DenseHamiltonian> {
    let field = Field::new(couplings, trunc, atom_levels, "full dipole Hamiltonian")?;
    let at = multilevel(spec, atom_levels, field.omega_a)?;
    let n = atom_levels;
    let mom = field.space.ladder_sum(&field.g_d, -1.0);
    let self_energy: f64 = field.g_d.iter().zip(&field.omega).map(|(g, w)| g * g / w).sum();
    let x2 = &at.x * &at.x;
    let mut h = Assembly::new(n, field.dim());
    h.add(&diag_c(&at.energies), &field.identity(), ONE);
    h.add(&identity_c(n), &field.free(), ONE);
    h.add(&real_to_c(&at.x), &mom, -I);
    h.add(&real_to_c(&x2), &field.identity(), c(self_energy));
    h.finish(Variant::FullD, field.space.truncation)
}

/// `(1/ω_a) (Σ_k g_C,k (a_k + a_k†))²` on the field space.
pub fn diamagnetic_term(couplings: &Couplings, trunc: &FockTruncation) -> Result<RMat> {
    let field = Field::new(couplings, trunc, 1, "diamagnetic term")?;
    let x = field.space.ladder_sum(&field.g_c, 1.0);
    Ok((1.0 / field.omega_a) * (&x * &x))
}

/// Two-level truncation of the Coulomb gauge after the fact (gauge breaking).
pub fn build_rabi_coulomb_direct(
    atom: &TwoLevelAtom,
    couplings: &Couplings,
    trunc: &FockTruncation,
) -> Result<DenseHamiltonian> {
    let field = Field::new(couplings, trunc, 2, "Coulomb Rabi Hamiltonian")?;
    let x = field.space.ladder_sum(&field.g_c, 1.0);
    let mut h = Assembly::new(2, field.dim());
    h.add(&pauli::sigma_z(), &field.identity(), c(0.5 * atom.omega_a));
    h.add(&identity_c(2), &field.free(), ONE);
    h.add(&pauli::sigma_y(), &x, ONE);
    h.add(&identity_c(2), &(&x * &x), c(1.0 / atom.omega_a));
    h.finish(Variant::RabiCDirect, field.space.truncation)
}

/// Two-level dipole gauge with the self-energy projected from the multilevel `x̂²`.
pub fn build_rabi_dipole_direct(
    spec: &AtomSpectrum,
    atom: &TwoLevelAtom,
    couplings: &Couplings,
    trunc: &FockTruncation,
    self_energy_levels: usize,
) -> Result<DenseHamiltonian> {
    if self_energy_levels < MIN_SELF_ENERGY_LEVELS {
        return Err(CqedError::Config(format!(
            "the projected self-energy needs at least {MIN_SELF_ENERGY_LEVELS} atom levels, got {self_energy_levels}"
        )));
    }
    let field = Field::new(couplings, trunc, 2, "dipole Rabi Hamiltonian")?;
    let at = multilevel(spec, self_energy_levels, atom.omega_a)?;
    let x2 = &at.x * &at.x;
    let projected = Mat::from_fn(2, 2, |i, j| c(x2[(i, j)]));
    let self_energy: f64 = field.g_d.iter().zip(&field.omega).map(|(g, w)| g * g / w).sum();
    let mom = field.space.ladder_sum(&field.g_d, -1.0);
    let mut h = Assembly::new(2, field.dim());
    h.add(&pauli::sigma_z(), &field.identity(), c(0.5 * atom.omega_a));
    h.add(&identity_c(2), &field.free(), ONE);
    h.add(&pauli::sigma_x(), &mom, -I);
    h.add(&projected, &field.identity(), c(self_energy));
    h.finish(Variant::RabiDDirect, field.space.truncation)
}

/// Gauge-preserving Coulomb Rabi model:
/// `H_F + (ω_a/2)[σ_z cos X + σ_y sin X]`, `X = Σ_k (2 g_D,k/ω_k)(a_k + a_k†)`.
pub fn build_rabi_coulomb_proper(
    atom: &TwoLevelAtom,
    couplings: &Couplings,
    trunc: &FockTruncation,
) -> Result<DenseHamiltonian> {
    let field = Field::new(couplings, trunc, 2, "Coulomb Rabi Hamiltonian")?;
    let arg: Vec<f64> = field.g_d.iter().zip(&field.omega).map(|(g, w)| 2.0 * g / w).collect();
    let x = field.space.ladder_sum(&arg, 1.0);
    let (vals, vecs) = linalg::eigh_real(&x)?;
    let f = |func: fn(f64) -> f64| -> RMat {
        let d = vals.len();
        let weighted = Mat::from_fn(d, d, |i, j| vecs[(i, j)] * func(vals[j]));
        &weighted * vecs.transpose()
    };
    let mut h = Assembly::new(2, field.dim());
    h.add(&identity_c(2), &field.free(), ONE);
    h.add(&pauli::sigma_z(), &f(f64::cos), c(0.5 * atom.omega_a));
    h.add(&pauli::sigma_y(), &f(f64::sin), c(0.5 * atom.omega_a));
    h.finish(Variant::RabiCProper, field.space.truncation)
}

/// Independent construction of the gauge-preserving Coulomb model as
/// `W (ω_a/2 σ_z) W† + H_F` with `W = exp(i σ_x ⊗ Σ_k (g_D,k/ω_k)(a_k + a_k†))`.
/// The conjugation is carried out with `pad` extra levels per mode and the
/// result restricted to the requested space; `pad = 0` reproduces the
/// closed form exactly.
pub fn coulomb_by_conjugation(
    atom: &TwoLevelAtom,
    couplings: &Couplings,
    trunc: &FockTruncation,
    pad: usize,
) -> Result<CMat> {
    let field = Field::new(couplings, trunc, 2, "Coulomb Rabi Hamiltonian")?;
    let wide_trunc = FockTruncation::per_mode(field.space.truncation.modes, trunc.cutoff + pad)?
        .with_max_dimension(trunc.max_dimension.max(DEFAULT_MAX_DIMENSION));
    let wide = Field::new(couplings, &wide_trunc.with_modes(trunc.modes)?, 2, "Coulomb Rabi Hamiltonian")?;
    let arg: Vec<f64> = wide.g_d.iter().zip(&wide.omega).map(|(g, w)| g / w).collect();
    let y = real_to_c(&wide.space.ladder_sum(&arg, 1.0));
    let generator = linalg::kron(&pauli::sigma_x(), &y);
    // exp(iG) = propagator(G, −1)
    let w = linalg::propagator(&generator, -1.0)?;
    let bare = linalg::kron(&linalg::scale(&pauli::sigma_z(), c(0.5 * atom.omega_a)), &identity_c(wide.dim()));
    let full = &(&w * &bare) * linalg::adjoint(&w);
    let (nd, wd) = (field.dim(), wide.dim());
    let map: Vec<usize> = (0..nd)
        .map(|i| wide.space.index_of(field.space.state(i)).expect("narrow state missing from wide space"))
        .collect();
    let free = field.free();
    Ok(Mat::from_fn(2 * nd, 2 * nd, |i, j| {
        let (ai, fi) = (i / nd, i % nd);
        let (aj, fj) = (j / nd, j % nd);
        let v = full[(ai * wd + map[fi], aj * wd + map[fj])];
        if i == j {
            v + c(free[(fi, fi)])
        } else {
            v
        }
    }))
}

/// Gauge-preserving dipole Rabi model
/// `(ω_a/2)σ_z + Σ_k [ω_k a_k†a_k − i g_D,k σ_x (a_k − a_k†) + (g_D,k²/ω_k) I]`.
pub fn build_rabi_dipole_proper(
    atom: &TwoLevelAtom,
    couplings: &Couplings,
    trunc: &FockTruncation,
    include_identity: bool,
) -> Result<DenseHamiltonian> {
    let field = Field::new(couplings, trunc, 2, "dipole Rabi Hamiltonian")?;
    let mom = field.space.ladder_sum(&field.g_d, -1.0);
    let mut h = Assembly::new(2, field.dim());
    h.add(&pauli::sigma_z(), &field.identity(), c(0.5 * atom.omega_a));
    h.add(&identity_c(2), &field.free(), ONE);
    h.add(&pauli::sigma_x(), &mom, -I);
    if include_identity {
        let shift: f64 = field.g_d.iter().zip(&field.omega).map(|(g, w)| g * g / w).sum();
        h.add(&identity_c(2), &field.identity(), c(shift));
    }
    h.finish(Variant::RabiDProper, field.space.truncation)
}

/// Nearest-neighbour chain form:
/// `(ω_a/2)σ_z + Σ_n ξ_n b_n†b_n − iρσ_x(b_1 − b_1†) + Σ_n t_n (b_n†b_{n+1} + h.c.)`.
///
/// `trunc.modes` is ignored; the chain length sets the mode count.
pub fn build_chain_dense(
    atom: &TwoLevelAtom,
    chain: &ChainTransform,
    trunc: &FockTruncation,
) -> Result<DenseHamiltonian> {
    let len = chain.len();
    let eff = trunc.with_modes(len)?;
    eff.check_capacity(2, "chain Hamiltonian")?;
    let space = FockSpace::new(eff)?;
    let tri = Mat::from_fn(len, len, |i, j| {
        if i == j {
            chain.xi[i]
        } else if i.abs_diff(j) == 1 {
            chain.t[i.min(j)]
        } else {
            0.0
        }
    });
    let mut first = vec![0.0; len];
    first[0] = chain.rho;
    let mom = space.ladder_sum(&first, -1.0);
    let d = space.dimension();
    let mut h = Assembly::new(2, d);
    h.add(&pauli::sigma_z(), &Mat::identity(d, d), c(0.5 * atom.omega_a));
    h.add(&identity_c(2), &space.hopping(&tri), ONE);
    h.add(&pauli::sigma_x(), &mom, -I);
    h.finish(Variant::Chain, eff)
}

/// `(E_i − E_0)/ω_1` for the lowest `n_levels` eigenvalues.
pub fn spectrum_gaps(h: &DenseHamiltonian, n_levels: usize, omega_1: f64) -> Result<Vec<f64>> {
    if n_levels == 0 || n_levels > h.dimension() {
        return Err(CqedError::Config(format!(
            "{n_levels} levels requested from a {}-dimensional Hamiltonian",
            h.dimension()
        )));
    }
    let vals = h.eigenvalues()?;
    Ok(vals[..n_levels].iter().map(|e| (e - vals[0]) / omega_1).collect())
}

/// Outcome of a photon-cutoff convergence loop.
#[derive(Debug, Clone)]
pub struct ConvergedGaps {
    pub gaps: Vec<f64>,
    pub cutoff: usize,
    /// Largest gap change between the last two cutoffs.
    pub change: f64,
    pub converged: bool,
}

/// Raise the cutoff from `trunc.cutoff` in steps of `step` until the lowest
/// `n_levels` normalized gaps move by less than `tol`, or `max_cutoff` is hit.
pub fn converge_gaps(
    build: impl Fn(&FockTruncation) -> Result<DenseHamiltonian>,
    trunc: &FockTruncation,
    n_levels: usize,
    omega_1: f64,
    tol: f64,
    step: usize,
    max_cutoff: usize,
) -> Result<ConvergedGaps> {
    let mut cutoff = trunc.cutoff;
    let mut prev = spectrum_gaps(&build(&trunc.with_cutoff(cutoff)?)?, n_levels, omega_1)?;
    loop {
        let next_cutoff = cutoff + step.max(1);
        if next_cutoff > max_cutoff {
            return Ok(ConvergedGaps {
                gaps: prev,
                cutoff,
                change: f64::INFINITY,
                converged: false,
            });
        }
        let gaps = spectrum_gaps(&build(&trunc.with_cutoff(next_cutoff)?)?, n_levels, omega_1)?;
        let change = gaps.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        cutoff = next_cutoff;
        if change < tol {
            return Ok(ConvergedGaps {
                gaps,
                cutoff,
                change,
                converged: true,
            });
        }
        prev = gaps;
    }
}

/// Per-mode sum-rule evaluation of the dipole self-energy.
#[derive(Debug, Clone)]
pub struct TrkCheck {
    /// `Σ_{n≥1} |⟨n|P d·E_k P|0⟩|² / (ω_k n)` as a 2×2 atom operator.
    pub second_order: CMat,
    /// `(g_D,k²/ω_k) σ_x²`.
    pub self_energy: CMat,
}

impl TrkCheck {
    pub fn residual(&self) -> f64 {
        linalg::max_abs_diff(&self.second_order, &self.self_energy)
    }
}

/// Compare the second-order field sum with the dipole self-energy coefficient
/// for every coupled mode, using a single-mode space with `trunc.cutoff` states.
pub fn trk_selfenergy_check(
    _atom: &TwoLevelAtom,
    couplings: &Couplings,
    trunc: &FockTruncation,
) -> Result<Vec<TrkCheck>> {
    let single = FockSpace::new(FockTruncation::per_mode(1, trunc.cutoff)?)?;
    let ladder = single.ladder_sum(&[1.0], -1.0);
    let c_used = couplings.truncate(trunc.modes).coupled();
    let sx = pauli::sigma_x();
    let sx2 = &sx * &sx;
    let mut out = Vec::with_capacity(c_used.len());
    for (g, w) in c_used.g_d.iter().zip(&c_used.frequencies) {
        // d·E_k restricted to the two-level space: −i g σ_x (a − a†)
        let mut sum = linalg::zeros(2, 2);
        for n in 1..trunc.cutoff {
            let amp = C64::new(0.0, -g) * ladder[(n, 0)];
            let op_n0 = linalg::scale(&sx, amp);
            let op_0n = linalg::adjoint(&op_n0);
            sum = &sum + &linalg::scale(&(&op_0n * &op_n0), c(1.0 / (w * n as f64)));
        }
        out.push(TrkCheck {
            second_order: sum,
            self_energy: linalg::scale(&sx2, c(g * g / w)),
        });
    }
    Ok(out)
}
