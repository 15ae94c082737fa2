//! Star-to-chain mapping of the coupled field modes.
//!
//! Chain operators are `b_n = Σ_k U_{n,k} a_k`. The first row of `U` is the
//! normalized coupling vector; later rows follow the three-term recursion
//! generated by `diag(ω)`, which makes `U diag(ω) Uᵀ` tridiagonal with
//! diagonal `ξ` and off-diagonal `t`. The stabilized variant re-orthogonalizes
//! each new row against all earlier rows (modified Gram–Schmidt) before its
//! coefficients are computed.

use faer::Mat;

use crate::error::{CqedError, Result};
use crate::linalg::{CMat, RMat, C64, ZERO};

/// Relative hopping below which the chain is considered complete.
pub const TERMINATION_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ChainTransform {
    /// `len × M_c`; row `n` defines chain site `n`.
    pub u: RMat,
    pub rho: f64,
    pub xi: Vec<f64>,
    /// Hoppings between consecutive sites (`len − 1` entries).
    pub t: Vec<f64>,
}

impl ChainTransform {
    /// Number of chain sites.
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Number of star modes.
    pub fn modes(&self) -> usize {
        self.u.ncols()
    }

    /// `max |U Uᵀ − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.orthogonality_profile().last().copied().unwrap_or(0.0)
    }

    /// Orthogonality defect of the first `n + 1` rows, for every `n`.
    pub fn orthogonality_profile(&self) -> Vec<f64> {
        let n = self.len();
        let m = self.modes();
        let mut out = Vec::with_capacity(n);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let dot: f64 = (0..m).map(|k| self.u[(i, k)] * self.u[(j, k)]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
            out.push(worst);
        }
        out
    }

    /// `max |U diag(ω) Uᵀ − T(ξ, t)|`.
    pub fn tridiagonal_residual(&self, omega: &[f64]) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = omega.iter().enumerate().map(|(k, w)| self.u[(i, k)] * w * self.u[(j, k)]).sum();
                let target = if i == j {
                    self.xi[i]
                } else if i.abs_diff(j) == 1 {
                    self.t[i.min(j)]
                } else {
                    0.0
                };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rayleigh(omega: &[f64], row: &[f64]) -> f64 {
    omega.iter().zip(row).map(|(w, r)| w * r * r).sum()
}

/// Map `(ω, g_D)` of the coupled modes onto a chain.
pub fn chain_map(omega: &[f64], g_d: &[f64], stabilize: bool) -> Result<ChainTransform> {
    let m = omega.len();
    if m == 0 || g_d.len() != m {
        return Err(CqedError::DimensionMismatch(format!(
            "{m} frequencies and {} couplings",
            g_d.len()
        )));
    }
    if omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(CqedError::Config("chain map needs positive finite frequencies".into()));
    }
    let rho = g_d.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(CqedError::Degenerate("coupling vector is zero".into()));
    }
    let w_max = omega.iter().fold(0.0f64, |a, &b| a.max(b));

    let mut rows: Vec<Vec<f64>> = vec![g_d.iter().map(|g| g / rho).collect()];
    let mut xi = vec![rayleigh(omega, &rows[0])];
    let mut t: Vec<f64> = Vec::new();

    while rows.len() < m {
        let n = rows.len() - 1;
        let cur = &rows[n];
        let mut v: Vec<f64> = (0..m).map(|k| (omega[k] - xi[n]) * cur[k]).collect();
        if n > 0 {
            let prev = &rows[n - 1];
            let tp = t[n - 1];
            v.iter_mut().zip(prev).for_each(|(x, p)| *x -= tp * p);
        }
        if stabilize {
            // one mGS sweep, repeated once if it removed most of the vector
            for _ in 0..2 {
                let before = dot(&v, &v).sqrt();
                for r in &rows {
                    let proj = dot(&v, r);
                    v.iter_mut().zip(r).for_each(|(x, ri)| *x -= proj * ri);
                }
                if dot(&v, &v).sqrt() > 0.7 * before {
                    break;
                }
            }
        }
        let tn = dot(&v, &v).sqrt();
        if tn < TERMINATION_THRESHOLD * w_max {
            break;
        }
        v.iter_mut().for_each(|x| *x /= tn);
        t.push(tn);
        xi.push(rayleigh(omega, &v));
        rows.push(v);
    }

    let len = rows.len();
    let u = Mat::from_fn(len, m, |i, k| rows[i][k]);
    Ok(ChainTransform { u, rho, xi, t })
}

/// The unstabilized recursion, kept for comparison.
pub fn naive_chain_map(omega: &[f64], g_d: &[f64]) -> Result<ChainTransform> {
    chain_map(omega, g_d, false)
}

/// `A = Uᵀ B U`, i.e. `A_{kk'} = u_kᵀ B u_k'` with `u_k` the `k`-th column of `U`.
pub fn to_mode_basis(b: &CMat, u: &RMat) -> Result<CMat> {
    let n = u.nrows();
    if b.nrows() != n || b.ncols() != n {
        return Err(CqedError::DimensionMismatch(format!(
            "{}x{} correlation matrix for a {n}-site chain",
            b.nrows(),
            b.ncols()
        )));
    }
    let m = u.ncols();
    // (B U) first, then Uᵀ (B U)
    let mut bu: CMat = Mat::zeros(n, m);
    for k in 0..m {
        for i in 0..n {
            let mut acc = ZERO;
            for j in 0..n {
                acc += b[(i, j)] * u[(j, k)];
            }
            bu[(i, k)] = acc;
        }
    }
    Ok(Mat::from_fn(m, m, |k, kp| {
        let mut acc = ZERO;
        for i in 0..n {
            acc += C64::new(u[(i, k)], 0.0) * bu[(i, kp)];
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_is_identity() {
        let c = chain_map(&[1.7], &[0.4], true).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.rho - 0.4).abs() < 1e-15);
        assert!((c.xi[0] - 1.7).abs() < 1e-15);
        assert!((c.u[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(c.t.is_empty());
        let naive = naive_chain_map(&[1.7], &[0.4]).unwrap();
        assert_eq!(naive.xi, c.xi);
    }

    #[test]
    fn symmetric_pair() {
        let (w, d, g) = (2.0, 0.3, 0.5);
        let c = chain_map(&[w - d, w + d], &[g, g], true).unwrap();
        assert!((c.rho - 2f64.sqrt() * g).abs() < 1e-14);
        assert!((c.xi[0] - w).abs() < 1e-14);
        assert!((c.xi[1] - w).abs() < 1e-14);
        assert!((c.t[0] - d).abs() < 1e-14);
    }

    #[test]
    fn duplicate_frequencies_terminate_early() {
        let c = chain_map(&[1.0, 1.0, 2.0], &[0.1, 0.2, 0.3], true).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn zero_coupling_is_rejected() {
        assert!(matches!(chain_map(&[1.0, 2.0], &[0.0, 0.0], true), Err(CqedError::Degenerate(_))));
        assert!(chain_map(&[1.0], &[0.1, 0.2], true).is_err());
    }

    #[test]
    fn single_excitation_in_first_site() {
        let g = [0.3, -0.1, 0.2];
        let c = chain_map(&[1.0, 2.0, 3.5], &g, true).unwrap();
        let mut b: CMat = Mat::zeros(3, 3);
        b[(0, 0)] = C64::new(1.0, 0.0);
        let a = to_mode_basis(&b, &c.u).unwrap();
        let rho2 = c.rho * c.rho;
        for k in 0..3 {
            for kp in 0..3 {
                assert!((a[(k, kp)].re - g[k] * g[kp] / rho2).abs() < 1e-14);
            }
        }
        assert!(to_mode_basis(&Mat::zeros(2, 2), &c.u).is_err());
    }
}
