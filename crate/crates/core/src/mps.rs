//! Matrix product states on the atom + chain geometry and TEBD evolution.
//!
//! Site 0 is the atom (physical dimension 2, `(g, e)` basis); sites
//! `1..=M_c` are chain oscillators with `N` Fock states. Tensors are stored
//! row-major with index order `(left, physical, right)`.
//!
//! The state is kept in mixed canonical form around `center`. Truncated
//! weight is never renormalized away: the squared norm drops by exactly the
//! accumulated discarded weight.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::atom::TwoLevelAtom;
use crate::chainmap::ChainTransform;
use crate::error::{CqedError, Result};
use crate::linalg::{self, c, CMat, C64, ONE, ZERO};
use crate::pauli;

/// Relative singular value treated as numerically zero when no cutoff is set.
const RANK_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLevel {
    G,
    E,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self {
            left,
            phys,
            right,
            data: vec![ZERO; left * phys * right],
        }
    }

    #[inline]
    pub fn idx(&self, a: usize, s: usize, b: usize) -> usize {
        (a * self.phys + s) * self.right + b
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[self.idx(a, s, b)]
    }

    /// `(left·phys) × right` matrix view (copied).
    fn as_left_matrix(&self) -> CMat {
        Mat::from_fn(self.left * self.phys, self.right, |i, j| self.data[i * self.right + j])
    }

    /// `left × (phys·right)` matrix view (copied).
    fn as_right_matrix(&self) -> CMat {
        let cols = self.phys * self.right;
        Mat::from_fn(self.left, cols, |i, j| self.data[i * cols + j])
    }

    fn from_left_matrix(m: &CMat, phys: usize) -> Self {
        let left = m.nrows() / phys;
        let right = m.ncols();
        let mut t = Self::zeros(left, phys, right);
        for i in 0..m.nrows() {
            for j in 0..right {
                t.data[i * right + j] = m[(i, j)];
            }
        }
        t
    }

    fn from_right_matrix(m: &CMat, phys: usize) -> Self {
        let left = m.nrows();
        let right = m.ncols() / phys;
        let mut t = Self::zeros(left, phys, right);
        let cols = m.ncols();
        for i in 0..left {
            for j in 0..cols {
                t.data[i * cols + j] = m[(i, j)];
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedSvd {
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for RandomizedSvd {
    fn default() -> Self {
        Self {
            oversample: 8,
            power_iterations: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_bond: usize,
    /// Largest discarded weight (sum of dropped squared singular values) per cut.
    pub svd_cutoff: f64,
    pub randomized: Option<RandomizedSvd>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            max_bond: 32,
            svd_cutoff: 1e-10,
            randomized: None,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_bond == 0 {
            return Err(CqedError::Config("max_bond must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.svd_cutoff) {
            return Err(CqedError::Config(format!("svd_cutoff must lie in [0, 1), got {}", self.svd_cutoff)));
        }
        Ok(())
    }

    /// Exact evolution up to a bond cap.
    pub fn exact(max_bond: usize) -> Self {
        Self {
            max_bond,
            svd_cutoff: 0.0,
            randomized: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// `e^{−iH_even dt} e^{−iH_odd dt}`.
    #[default]
    FirstOrder,
    /// `e^{−iH_odd dt/2} e^{−iH_even dt} e^{−iH_odd dt/2}`.
    SecondOrder,
}

/// Two-site propagators for every bond; bond `b` couples sites `b` and `b + 1`.
///
/// Bonds with even `b` (starting at the atom) form the first group and are
/// applied first.
#[derive(Debug, Clone)]
pub struct GateSet {
    pub dt: f64,
    pub splitting: Splitting,
    pub hamiltonians: Vec<CMat>,
    pub gates: Vec<CMat>,
    /// Half-step gates for the first group under second-order splitting.
    pub half_gates: Vec<CMat>,
    pub phys: Vec<usize>,
}

fn ladder(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { ZERO })
}

fn number(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c(i as f64) } else { ZERO })
}

/// Bond Hamiltonians of the chain model with on-site terms absorbed into the
/// bond on their left (the atom's into bond 0).
pub fn bond_hamiltonians(atom: &TwoLevelAtom, chain: &ChainTransform, cutoff: usize) -> Vec<CMat> {
    let len = chain.len();
    let b = ladder(cutoff);
    let bd = linalg::adjoint(&b);
    let n = number(cutoff);
    let id_b = linalg::identity(cutoff);
    let id_a = linalg::identity(2);
    let mut out = Vec::with_capacity(len);
    let first = &(&linalg::kron(&linalg::scale(&pauli::sigma_z(), c(0.5 * atom.omega_a)), &id_b)
        + &linalg::kron(&id_a, &linalg::scale(&n, c(chain.xi[0]))))
        + &linalg::kron(&linalg::scale(&pauli::sigma_x(), C64::new(0.0, -chain.rho)), &(&b - &bd));
    out.push(first);
    for site in 2..=len {
        let onsite = linalg::kron(&id_b, &linalg::scale(&n, c(chain.xi[site - 1])));
        let hop = &linalg::kron(&bd, &b) + &linalg::kron(&b, &bd);
        out.push(&onsite + &linalg::scale(&hop, c(chain.t[site - 2])));
    }
    out
}

pub fn build_gates(atom: &TwoLevelAtom, chain: &ChainTransform, dt: f64, cutoff: usize) -> Result<GateSet> {
    build_gates_with(atom, chain, dt, cutoff, Splitting::FirstOrder)
}

pub fn build_gates_with(
    atom: &TwoLevelAtom,
    chain: &ChainTransform,
    dt: f64,
    cutoff: usize,
    splitting: Splitting,
) -> Result<GateSet> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CqedError::Config(format!("time step must be positive, got {dt}")));
    }
    if cutoff < 2 {
        return Err(CqedError::Config("photon cutoff must be at least 2".into()));
    }
    let hamiltonians = bond_hamiltonians(atom, chain, cutoff);
    let gates = hamiltonians
        .iter()
        .map(|h| linalg::propagator(h, dt))
        .collect::<Result<Vec<_>>>()?;
    let half_gates = match splitting {
        Splitting::FirstOrder => Vec::new(),
        Splitting::SecondOrder => hamiltonians
            .iter()
            .map(|h| linalg::propagator(h, 0.5 * dt))
            .collect::<Result<Vec<_>>>()?,
    };
    let mut phys = vec![2];
    phys.extend(std::iter::repeat(cutoff).take(chain.len()));
    Ok(GateSet {
        dt,
        splitting,
        hamiltonians,
        gates,
        half_gates,
        phys,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Discarded weight per bond during this step (summed over applications).
    pub discarded: Vec<f64>,
}

impl StepReport {
    pub fn total(&self) -> f64 {
        self.discarded.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    /// Leave the orthogonality center on the right site.
    Right,
    /// Leave it on the left site.
    Left,
}

#[derive(Debug, Clone)]
pub struct MpsState {
    sites: Vec<SiteTensor>,
    center: usize,
    discarded_weight: f64,
}

impl MpsState {
    /// `|level, 0, …, 0⟩` on an atom plus `chain_len` oscillators.
    pub fn product_state(level: AtomLevel, chain_len: usize, cutoff: usize) -> Result<Self> {
        if chain_len == 0 || cutoff < 2 {
            return Err(CqedError::Config(format!(
                "product state needs M_c >= 1 and N >= 2, got M_c = {chain_len}, N = {cutoff}"
            )));
        }
        let mut atom = SiteTensor::zeros(1, 2, 1);
        atom.data[match level {
            AtomLevel::G => 0,
            AtomLevel::E => 1,
        }] = ONE;
        let mut sites = vec![atom];
        for _ in 0..chain_len {
            let mut t = SiteTensor::zeros(1, cutoff, 1);
            t.data[0] = ONE;
            sites.push(t);
        }
        Ok(Self {
            sites,
            center: 0,
            discarded_weight: 0.0,
        })
    }

    /// Normalized random state with the given physical dimensions and bond cap.
    pub fn random(phys: &[usize], max_bond: usize, seed: u64) -> Result<Self> {
        if phys.is_empty() || max_bond == 0 {
            return Err(CqedError::Config("random state needs sites and a positive bond".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = phys.len();
        let mut bonds = vec![1usize; n + 1];
        for i in 1..n {
            let left: usize = phys[..i].iter().product();
            let right: usize = phys[i..].iter().product();
            bonds[i] = max_bond.min(left).min(right);
        }
        let sites = (0..n)
            .map(|i| {
                let mut t = SiteTensor::zeros(bonds[i], phys[i], bonds[i + 1]);
                for v in t.data.iter_mut() {
                    *v = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                }
                t
            })
            .collect();
        let mut s = Self {
            sites,
            center: 0,
            discarded_weight: 0.0,
        };
        s.canonicalize(0)?;
        let nrm = s.norm();
        s.sites[0].data.iter_mut().for_each(|v| *v /= nrm);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|t| t.phys).collect()
    }

    /// Bond dimensions between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Photon cutoff of the chain sites.
    pub fn cutoff(&self) -> usize {
        self.sites.get(1).map(|t| t.phys).unwrap_or(0)
    }

    /// `√⟨ψ|ψ⟩`.
    pub fn norm(&self) -> f64 {
        let mut env = vec![ONE];
        let mut dim = 1;
        for t in &self.sites {
            let (next, d) = transfer(&env, dim, t, None);
            env = next;
            dim = d;
        }
        env[0].re.max(0.0).sqrt()
    }

    /// Bring the state into mixed canonical form around `center`.
    pub fn canonicalize(&mut self, center: usize) -> Result<()> {
        if center >= self.len() {
            return Err(CqedError::DimensionMismatch(format!(
                "center {center} outside a {}-site state",
                self.len()
            )));
        }
        for i in 0..center {
            self.shift_right(i)?;
        }
        for i in (center + 1..self.len()).rev() {
            self.shift_left(i)?;
        }
        self.center = center;
        Ok(())
    }

    /// Move the center assuming the state is already canonical around the current one.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        if target >= self.len() {
            return Err(CqedError::DimensionMismatch(format!(
                "center {target} outside a {}-site state",
                self.len()
            )));
        }
        while self.center < target {
            self.shift_right(self.center)?;
            self.center += 1;
        }
        while self.center > target {
            self.shift_left(self.center)?;
            self.center -= 1;
        }
        Ok(())
    }

    /// QR on site `i`, pushing `R` into site `i + 1`.
    fn shift_right(&mut self, i: usize) -> Result<()> {
        let m = self.sites[i].as_left_matrix();
        let qr = m.qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R().to_owned();
        let phys = self.sites[i].phys;
        self.sites[i] = SiteTensor::from_left_matrix(&q, phys);
        let next = &self.sites[i + 1];
        let merged = &r * next.as_right_matrix();
        self.sites[i + 1] = SiteTensor::from_right_matrix(&merged, next.phys);
        Ok(())
    }

    /// LQ on site `i`, pushing `L` into site `i − 1`.
    fn shift_left(&mut self, i: usize) -> Result<()> {
        let m = self.sites[i].as_right_matrix();
        let qr = linalg::adjoint(&m).qr();
        let q = linalg::adjoint(&qr.compute_thin_Q());
        let l = linalg::adjoint(&qr.thin_R().to_owned());
        let phys = self.sites[i].phys;
        self.sites[i] = SiteTensor::from_right_matrix(&q, phys);
        let prev = &self.sites[i - 1];
        let merged = prev.as_left_matrix() * &l;
        self.sites[i - 1] = SiteTensor::from_left_matrix(&merged, prev.phys);
        Ok(())
    }

    /// Apply a two-site gate on sites `(i, i+1)`; the center must sit on one of them.
    fn apply_gate(&mut self, i: usize, gate: &CMat, policy: &TruncationPolicy, sweep: Sweep) -> Result<f64> {
        debug_assert!(self.center == i || self.center == i + 1);
        let a = &self.sites[i];
        let b = &self.sites[i + 1];
        let (l, p1, p2, r) = (a.left, a.phys, b.phys, b.right);
        let theta = a.as_left_matrix() * b.as_right_matrix(); // (l p1) × (p2 r)

        // regroup as (p1 p2) × (l r), act with the gate, regroup back
        let pp = p1 * p2;
        let x = Mat::from_fn(pp, l * r, |s, lr| {
            let (s1, s2) = (s / p2, s % p2);
            let (al, ar) = (lr / r, lr % r);
            theta[(al * p1 + s1, s2 * r + ar)]
        });
        let y = gate * &x;
        let m = Mat::from_fn(l * p1, p2 * r, |row, col| {
            let (al, s1) = (row / p1, row % p1);
            let (s2, ar) = (col / r, col % r);
            y[(s1 * p2 + s2, al * r + ar)]
        });

        let (u, s, vh, discarded) = truncated_svd(&m, policy)?;
        let chi = s.len();
        match sweep {
            Sweep::Right => {
                let svh = Mat::from_fn(chi, vh.ncols(), |k, j| vh[(k, j)] * s[k]);
                self.sites[i] = SiteTensor::from_left_matrix(&u, p1);
                self.sites[i + 1] = SiteTensor::from_right_matrix(&svh, p2);
                self.center = i + 1;
            }
            Sweep::Left => {
                let us = Mat::from_fn(u.nrows(), chi, |j, k| u[(j, k)] * s[k]);
                self.sites[i] = SiteTensor::from_left_matrix(&us, p1);
                self.sites[i + 1] = SiteTensor::from_right_matrix(&vh, p2);
                self.center = i;
            }
        }
        self.discarded_weight += discarded;
        Ok(discarded)
    }

    /// Contract to a full state vector (site 0 slowest). Small systems only.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut v = vec![ONE];
        let mut rows = 1usize;
        // v is (rows × bond) row-major
        let mut bond = 1usize;
        for t in &self.sites {
            let mut next = vec![ZERO; rows * t.phys * t.right];
            for row in 0..rows {
                for a in 0..bond {
                    let coef = v[row * bond + a];
                    if coef == ZERO {
                        continue;
                    }
                    for s in 0..t.phys {
                        for b in 0..t.right {
                            next[(row * t.phys + s) * t.right + b] += coef * t.get(a, s, b);
                        }
                    }
                }
            }
            rows *= t.phys;
            bond = t.right;
            v = next;
        }
        v
    }

    /// `⟨ψ|O_site|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation_site(&self, op: &CMat, site: usize) -> Result<C64> {
        if site >= self.len() {
            return Err(CqedError::DimensionMismatch(format!("site {site} outside the state")));
        }
        let phys = self.sites[site].phys;
        if op.nrows() != phys || op.ncols() != phys {
            return Err(CqedError::DimensionMismatch(format!(
                "{}x{} operator on a site of dimension {phys}",
                op.nrows(),
                op.ncols()
            )));
        }
        let (val, norm2) = self.contract_with(&[(site, op)]);
        Ok(val / norm2)
    }

    /// `⟨ψ|O_{i,i+1}|ψ⟩ / ⟨ψ|ψ⟩` for an operator on the product space of two neighbours.
    pub fn expectation_bond(&self, op: &CMat, i: usize) -> Result<C64> {
        if i + 1 >= self.len() {
            return Err(CqedError::DimensionMismatch(format!("bond {i} outside the state")));
        }
        let (p1, p2) = (self.sites[i].phys, self.sites[i + 1].phys);
        if op.nrows() != p1 * p2 || op.ncols() != p1 * p2 {
            return Err(CqedError::DimensionMismatch("bond operator dimension".into()));
        }
        let lefts = self.left_envs();
        let rights = self.right_envs();
        let (le, ld) = &lefts[i];
        let (re, rd) = &rights[i + 2];
        let (l, r) = (*ld, *rd);
        let theta = self.sites[i].as_left_matrix() * self.sites[i + 1].as_right_matrix();
        // theta[(x s1), (s2 y)] → column vector over (s1 s2) for each (x, y)
        let pp = p1 * p2;
        let x = Mat::from_fn(pp, l * r, |s, xy| {
            theta[((xy / r) * p1 + s / p2, (s % p2) * r + xy % r)]
        });
        let ox = op * &x;
        let mut val = ZERO;
        for xa in 0..l {
            for xb in 0..l {
                let e = le[xa * l + xb];
                if e == ZERO {
                    continue;
                }
                for ya in 0..r {
                    for yb in 0..r {
                        let w = e * re[ya * r + yb];
                        if w == ZERO {
                            continue;
                        }
                        let mut acc = ZERO;
                        for s in 0..pp {
                            acc += x[(s, xa * r + ya)].conj() * ox[(s, xb * r + yb)];
                        }
                        val += w * acc;
                    }
                }
            }
        }
        let norm2 = lefts[self.len()].0[0];
        Ok(val / norm2)
    }

    /// `Σ_b ⟨h_b⟩` for a list of bond Hamiltonians.
    pub fn energy(&self, bond_hamiltonians: &[CMat]) -> Result<f64> {
        let mut e = 0.0;
        for (i, h) in bond_hamiltonians.iter().enumerate() {
            e += self.expectation_bond(h, i)?.re;
        }
        Ok(e)
    }

    /// Left environments: entry `i` contracts sites `0..i` (bra index first).
    fn left_envs(&self) -> Vec<(Vec<C64>, usize)> {
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push((vec![ONE], 1));
        for t in &self.sites {
            let (env, dim) = &out[out.len() - 1];
            let next = transfer(env, *dim, t, None);
            out.push(next);
        }
        out
    }

    /// Right environments: entry `i` contracts sites `i..` (bra index first).
    fn right_envs(&self) -> Vec<(Vec<C64>, usize)> {
        let n = self.len();
        let mut out = vec![(Vec::new(), 0); n + 1];
        out[n] = (vec![ONE], 1);
        for i in (0..n).rev() {
            out[i] = transfer_right(&out[i + 1].0, out[i + 1].1, &self.sites[i], None);
        }
        out
    }

    /// Value of `⟨ψ|Π O_site|ψ⟩` and `⟨ψ|ψ⟩`.
    fn contract_with(&self, ops: &[(usize, &CMat)]) -> (C64, C64) {
        let mut env = vec![ONE];
        let mut dim = 1;
        let mut plain = vec![ONE];
        let mut plain_dim = 1;
        for (i, t) in self.sites.iter().enumerate() {
            let op = ops.iter().find(|(s, _)| *s == i).map(|(_, o)| *o);
            let (e, d) = transfer(&env, dim, t, op);
            env = e;
            dim = d;
            let (p, pd) = transfer(&plain, plain_dim, t, None);
            plain = p;
            plain_dim = pd;
        }
        (env[0], plain[0])
    }

    /// `B_{mm'} = ⟨b_m† b_m'⟩ / ⟨ψ|ψ⟩` over the chain sites `1..`.
    pub fn correlation_matrix(&self) -> CMat {
        let n = self.len();
        let m_c = n - 1;
        let lefts = self.left_envs();
        let rights = self.right_envs();
        let norm2 = lefts[n].0[0];
        let mut out: CMat = Mat::zeros(m_c, m_c);
        for m in 1..n {
            let cut = self.sites[m].phys;
            let b = ladder(cut);
            let bd = linalg::adjoint(&b);
            let nb = number(cut);
            let (le, ld) = &lefts[m];
            // diagonal
            let (d_env, d_dim) = transfer(le, *ld, &self.sites[m], Some(&nb));
            out[(m - 1, m - 1)] = close(&d_env, d_dim, &rights[m + 1]) / norm2;
            // off-diagonal: carry b_m† to the right
            let (mut env, mut dim) = transfer(le, *ld, &self.sites[m], Some(&bd));
            for mp in m + 1..n {
                let cut_p = self.sites[mp].phys;
                let bp = ladder(cut_p);
                let (closed, cd) = transfer(&env, dim, &self.sites[mp], Some(&bp));
                let v = close(&closed, cd, &rights[mp + 1]) / norm2;
                out[(m - 1, mp - 1)] = v;
                out[(mp - 1, m - 1)] = v.conj();
                let next = transfer(&env, dim, &self.sites[mp], None);
                env = next.0;
                dim = next.1;
            }
        }
        out
    }

    /// One Trotter step.
    pub fn tebd_step(&mut self, gates: &GateSet, policy: &TruncationPolicy) -> Result<StepReport> {
        let n_bonds = self.len() - 1;
        if gates.gates.len() != n_bonds || gates.phys != self.phys_dims() {
            return Err(CqedError::DimensionMismatch(format!(
                "{} gates for a state with {n_bonds} bonds",
                gates.gates.len()
            )));
        }
        let mut report = StepReport {
            discarded: vec![0.0; n_bonds],
        };
        match gates.splitting {
            Splitting::FirstOrder => {
                self.sweep_group(0, &gates.gates, policy, &mut report)?;
                self.sweep_group(1, &gates.gates, policy, &mut report)?;
            }
            Splitting::SecondOrder => {
                self.sweep_group(0, &gates.half_gates, policy, &mut report)?;
                self.sweep_group(1, &gates.gates, policy, &mut report)?;
                self.sweep_group(0, &gates.half_gates, policy, &mut report)?;
            }
        }
        Ok(report)
    }

    /// Apply gates on bonds `parity, parity + 2, …`, sweeping away from the current center.
    fn sweep_group(&mut self, parity: usize, gates: &[CMat], policy: &TruncationPolicy, report: &mut StepReport) -> Result<()> {
        let bonds: Vec<usize> = (parity..gates.len()).step_by(2).collect();
        if bonds.is_empty() {
            return Ok(());
        }
        let first = bonds[0];
        let last = bonds[bonds.len() - 1];
        // sweep toward the far side from wherever the center is
        let left_to_right = self.center.abs_diff(first) <= self.center.abs_diff(last + 1);
        if left_to_right {
            for &b in &bonds {
                self.move_center(b)?;
                report.discarded[b] += self.apply_gate(b, &gates[b], policy, Sweep::Right)?;
            }
        } else {
            for &b in bonds.iter().rev() {
                self.move_center(b + 1)?;
                report.discarded[b] += self.apply_gate(b, &gates[b], policy, Sweep::Left)?;
            }
        }
        Ok(())
    }
}

/// `E'[r, r'] = Σ conj(A[l,s,r]) E[l,l'] O[s,s'] A[l',s',r']`.
fn transfer(env: &[C64], dim: usize, t: &SiteTensor, op: Option<&CMat>) -> (Vec<C64>, usize) {
    debug_assert_eq!(dim, t.left);
    let (l, p, r) = (t.left, t.phys, t.right);
    // T1[l, s', r'] = Σ_{l'} E[l, l'] A[l', s', r']
    let mut t1 = vec![ZERO; l * p * r];
    for a in 0..l {
        for ap in 0..l {
            let e = env[a * l + ap];
            if e == ZERO {
                continue;
            }
            let src = &t.data[ap * p * r..(ap + 1) * p * r];
            let dst = &mut t1[a * p * r..(a + 1) * p * r];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += e * s;
            }
        }
    }
    // T2[l, s, r'] = Σ_{s'} O[s, s'] T1[l, s', r']
    let t2 = match op {
        None => t1,
        Some(o) => {
            let mut t2 = vec![ZERO; l * p * r];
            for a in 0..l {
                for s in 0..p {
                    for sp in 0..p {
                        let ov = o[(s, sp)];
                        if ov == ZERO {
                            continue;
                        }
                        for b in 0..r {
                            t2[(a * p + s) * r + b] += ov * t1[(a * p + sp) * r + b];
                        }
                    }
                }
            }
            t2
        }
    };
    let mut out = vec![ZERO; r * r];
    for a in 0..l {
        for s in 0..p {
            for b in 0..r {
                let bra = t.data[(a * p + s) * r + b].conj();
                if bra == ZERO {
                    continue;
                }
                let row = &t2[(a * p + s) * r..(a * p + s + 1) * r];
                for (bp, v) in row.iter().enumerate() {
                    out[b * r + bp] += bra * v;
                }
            }
        }
    }
    (out, r)
}

/// Right-to-left analogue of [`transfer`].
fn transfer_right(env: &[C64], dim: usize, t: &SiteTensor, op: Option<&CMat>) -> (Vec<C64>, usize) {
    debug_assert_eq!(dim, t.right);
    let (l, p, r) = (t.left, t.phys, t.right);
    // T1[l', s', r] = Σ_{r'} A[l', s', r'] E[r, r']
    let mut t1 = vec![ZERO; l * p * r];
    for ap in 0..l {
        for sp in 0..p {
            for b in 0..r {
                let mut acc = ZERO;
                for bp in 0..r {
                    acc += t.data[(ap * p + sp) * r + bp] * env[b * r + bp];
                }
                t1[(ap * p + sp) * r + b] = acc;
            }
        }
    }
    let t2 = match op {
        None => t1,
        Some(o) => {
            let mut t2 = vec![ZERO; l * p * r];
            for ap in 0..l {
                for s in 0..p {
                    for sp in 0..p {
                        let ov = o[(s, sp)];
                        if ov == ZERO {
                            continue;
                        }
                        for b in 0..r {
                            t2[(ap * p + s) * r + b] += ov * t1[(ap * p + sp) * r + b];
                        }
                    }
                }
            }
            t2
        }
    };
    // E'[l, l'] = Σ conj(A[l, s, r]) T2[l', s, r]
    let mut out = vec![ZERO; l * l];
    for a in 0..l {
        for ap in 0..l {
            let mut acc = ZERO;
            for s in 0..p {
                for b in 0..r {
                    acc += t.data[(a * p + s) * r + b].conj() * t2[(ap * p + s) * r + b];
                }
            }
            out[a * l + ap] = acc;
        }
    }
    (out, l)
}

fn close(left: &[C64], dim: usize, right: &(Vec<C64>, usize)) -> C64 {
    debug_assert_eq!(dim, right.1);
    left.iter().zip(&right.0).map(|(a, b)| a * b).sum()
}

/// Truncated SVD `m ≈ U diag(s) V†` per the policy; returns the discarded weight.
fn truncated_svd(m: &CMat, policy: &TruncationPolicy) -> Result<(CMat, Vec<f64>, CMat, f64)> {
    let (u, s, vh) = match policy.randomized {
        Some(rs) if policy.max_bond + rs.oversample < m.nrows().min(m.ncols()) => randomized_svd(m, policy.max_bond + rs.oversample, rs)?,
        _ => dense_svd(m)?,
    };
    let total: f64 = if policy.randomized.is_some() {
        frobenius2(m)
    } else {
        s.iter().map(|x| x * x).sum()
    };
    let s_max = s.first().copied().unwrap_or(0.0);
    let chi = if policy.svd_cutoff == 0.0 {
        let needed = s.iter().filter(|&&x| x > RANK_TOLERANCE * s_max).count().max(1);
        if needed > policy.max_bond {
            return Err(CqedError::Capacity {
                what: "MPS bond".into(),
                needed,
                limit: policy.max_bond,
                advice: "raise max_bond or set a nonzero svd_cutoff".into(),
            });
        }
        needed
    } else {
        // smallest χ whose tail weight is within the cutoff
        let mut tail = total - s.iter().map(|x| x * x).sum::<f64>();
        let mut chi = s.len();
        while chi > 1 {
            let w = s[chi - 1] * s[chi - 1];
            if tail + w > policy.svd_cutoff {
                break;
            }
            tail += w;
            chi -= 1;
        }
        chi.min(policy.max_bond)
    };
    let kept: f64 = s[..chi].iter().map(|x| x * x).sum();
    let discarded = (total - kept).max(0.0);
    let u = Mat::from_fn(u.nrows(), chi, |i, j| u[(i, j)]);
    let vh = Mat::from_fn(chi, vh.ncols(), |i, j| vh[(i, j)]);
    Ok((u, s[..chi].to_vec(), vh, discarded))
}

fn frobenius2(m: &CMat) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc
}

fn dense_svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = m
        .thin_svd()
        .map_err(|e| CqedError::numeric(format!("bond SVD: {e:?}"), f64::NAN))?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((svd.U().to_owned(), s, linalg::adjoint(&svd.V().to_owned())))
}

/// Randomized range finder with power iterations, followed by a small dense SVD.
fn randomized_svd(m: &CMat, rank: usize, opts: RandomizedSvd) -> Result<(CMat, Vec<f64>, CMat)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (m.nrows() as u64) << 32 ^ m.ncols() as u64);
    let omega = Mat::from_fn(m.ncols(), rank, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut q = (m * &omega).qr().compute_thin_Q();
    let mh = linalg::adjoint(m);
    for _ in 0..opts.power_iterations {
        let z = (&mh * &q).qr().compute_thin_Q();
        q = (m * &z).qr().compute_thin_Q();
    }
    let small = linalg::adjoint(&q) * m;
    let (ub, s, vh) = dense_svd(&small)?;
    Ok((&q * &ub, s, vh))
}

/// `⟨σ+σ−⟩` on the atom site.
pub fn excited_population(state: &MpsState) -> f64 {
    state
        .expectation_site(&pauli::excited_projector(), 0)
        .map(|z| z.re)
        .unwrap_or(f64::NAN)
}

/// Dense chain Hamiltonian matching [`bond_hamiltonians`], for oracle tests.
pub fn dense_chain_hamiltonian(atom: &TwoLevelAtom, chain: &ChainTransform, cutoff: usize) -> CMat {
    let hs = bond_hamiltonians(atom, chain, cutoff);
    let mut phys = vec![2];
    phys.extend(std::iter::repeat(cutoff).take(chain.len()));
    let total: usize = phys.iter().product();
    let mut h: CMat = Mat::zeros(total, total);
    for (b, hb) in hs.iter().enumerate() {
        let left: usize = phys[..b].iter().product();
        let right: usize = phys[b + 2..].iter().product();
        let full = linalg::kron(&linalg::kron(&linalg::identity(left), hb), &linalg::identity(right));
        h = &h + &full;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chainmap::chain_map;

    fn small_chain() -> (TwoLevelAtom, ChainTransform) {
        let atom = TwoLevelAtom::new(1.0, 1.0, 0.0).unwrap();
        let chain = chain_map(&[1.0, 3.0, 5.0], &[0.6, 0.35, 0.27], true).unwrap();
        (atom, chain)
    }

    #[test]
    fn product_state_basics() {
        let s = MpsState::product_state(AtomLevel::E, 3, 4).unwrap();
        assert!((excited_population(&s) - 1.0).abs() < 1e-15);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        let b = s.correlation_matrix();
        assert!(linalg::max_abs(&b) < 1e-15);
        let v = s.to_dense();
        assert_eq!(v.len(), 2 * 64);
        assert_eq!(v[64], ONE);
        assert_eq!(v.iter().filter(|z| **z != ZERO).count(), 1);
        let g = MpsState::product_state(AtomLevel::G, 1, 2).unwrap().to_dense();
        assert_eq!(g, vec![ONE, ZERO, ZERO, ZERO]);
    }

    #[test]
    fn gates_are_unitary() {
        let (atom, chain) = small_chain();
        let gs = build_gates(&atom, &chain, 0.01, 4).unwrap();
        for g in &gs.gates {
            let gg = &linalg::adjoint(g) * g;
            assert!(linalg::max_abs_diff(&gg, &linalg::identity(g.nrows())) < 1e-12);
        }
    }

    #[test]
    fn dense_chain_matches_builder() {
        use crate::fock::FockTruncation;
        use crate::hamiltonians::build_chain_dense;
        let (atom, chain) = small_chain();
        let h = dense_chain_hamiltonian(&atom, &chain, 3);
        let built = build_chain_dense(&atom, &chain, &FockTruncation::per_mode(3, 3).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(&h, &built.matrix) < 1e-13);
    }

    #[test]
    fn canonicalize_preserves_state() {
        let mut s = MpsState::random(&[2, 3, 3, 3], 4, 7).unwrap();
        let before = s.to_dense();
        s.canonicalize(2).unwrap();
        let after = s.to_dense();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn site_expectation_matches_dense() {
        let s = MpsState::random(&[2, 3, 3], 3, 11).unwrap();
        let v = s.to_dense();
        let op = number(3);
        let mps = s.expectation_site(&op, 1).unwrap();
        let full = linalg::kron(&linalg::kron(&linalg::identity(2), &op), &linalg::identity(3));
        let dense = linalg::vdot(&v, &linalg::matvec(&full, &v));
        assert!((mps - dense).norm() < 1e-10);
        assert!(s.expectation_site(&op, 0).is_err());
    }

    #[test]
    fn decoupled_evolution_keeps_population() {
        let atom = TwoLevelAtom::new(1.0, 1.0, 0.0).unwrap();
        let chain = ChainTransform {
            u: Mat::identity(2, 2),
            rho: 0.0,
            xi: vec![1.0, 2.0],
            t: vec![0.0],
        };
        let gs = build_gates(&atom, &chain, 0.05, 3).unwrap();
        let mut s = MpsState::product_state(AtomLevel::E, 2, 3).unwrap();
        for _ in 0..20 {
            s.tebd_step(&gs, &TruncationPolicy::default()).unwrap();
        }
        assert!((excited_population(&s) - 1.0).abs() < 1e-10);
        assert_eq!(s.max_bond(), 1);
    }

    #[test]
    fn capacity_error_without_cutoff() {
        let (atom, chain) = small_chain();
        let gs = build_gates(&atom, &chain, 0.3, 4).unwrap();
        let mut s = MpsState::product_state(AtomLevel::E, 3, 4).unwrap();
        let policy = TruncationPolicy::exact(1);
        let err = (0..5).try_for_each(|_| s.tebd_step(&gs, &policy).map(|_| ()));
        assert!(matches!(err, Err(CqedError::Capacity { .. })));
    }
}
