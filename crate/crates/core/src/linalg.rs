//! Thin dense linear-algebra layer over `faer`.
//!
//! Everything in the crate that diagonalizes, exponentiates or factorizes a
//! dense matrix goes through here, so the backend stays swappable.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{CqedError, Result};

pub type C64 = Complex64;
pub type CMat = Mat<C64>;
pub type RMat = Mat<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn to_complex(m: &RMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c(m[(i, j)]))
}

pub fn scale(m: &CMat, s: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// Kronecker product `a ⊗ b` (row index of `a` is the slow index).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn adjoint(m: &CMat) -> CMat {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

/// `max|H − H†| / max|H|`, zero for the zero matrix.
pub fn hermiticity_residual(h: &CMat) -> f64 {
    let scale = max_abs(h);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..h.ncols() {
        for i in 0..=j.min(h.nrows() - 1) {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

fn is_real(h: &CMat) -> bool {
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            if h[(i, j)].im != 0.0 {
                return false;
            }
        }
    }
    true
}

fn real_part(h: &CMat) -> RMat {
    Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)].re)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(h: &CMat) -> Result<Vec<f64>> {
    if h.nrows() != h.ncols() {
        return Err(CqedError::DimensionMismatch(format!(
            "eigvalsh on a {}x{} matrix",
            h.nrows(),
            h.ncols()
        )));
    }
    if is_real(h) {
        return eigvalsh_real(&real_part(h));
    }
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| CqedError::numeric(format!("hermitian eigenvalues: {e:?}"), f64::NAN))
}

pub fn eigvalsh_real(h: &RMat) -> Result<Vec<f64>> {
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| CqedError::numeric(format!("symmetric eigenvalues: {e:?}"), f64::NAN))
}

/// Ascending eigenpairs of a Hermitian matrix; eigenvectors are the columns.
pub fn eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    if is_real(h) {
        let (vals, vecs) = eigh_real(&real_part(h))?;
        return Ok((vals, to_complex(&vecs)));
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| CqedError::numeric(format!("hermitian eigendecomposition: {e:?}"), f64::NAN))?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn eigh_real(h: &RMat) -> Result<(Vec<f64>, RMat)> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| CqedError::numeric(format!("symmetric eigendecomposition: {e:?}"), f64::NAN))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, evd.U().to_owned()))
}

/// `f(H)` for Hermitian `H` through its eigendecomposition.
pub fn hermitian_function(h: &CMat, f: impl Fn(f64) -> C64) -> Result<CMat> {
    let (vals, vecs) = eigh(h)?;
    let n = vals.len();
    let weighted = Mat::from_fn(n, n, |i, j| vecs[(i, j)] * f(vals[j]));
    Ok(&weighted * adjoint(&vecs))
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn propagator(h: &CMat, t: f64) -> Result<CMat> {
    hermitian_function(h, |e| C64::from_polar(1.0, -e * t))
}

pub fn matvec(m: &CMat, v: &[C64]) -> Vec<C64> {
    assert_eq!(m.ncols(), v.len());
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagator_is_unitary_and_matches_two_level_rotation() {
        // σ_x generates cos(t) − i sin(t) σ_x
        let sx = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let u = propagator(&sx, 0.3).unwrap();
        assert!((u[(0, 0)] - c(0.3f64.cos())).norm() < 1e-14);
        assert!((u[(0, 1)] - C64::new(0.0, -(0.3f64).sin())).norm() < 1e-14);
        let uu = &adjoint(&u) * &u;
        assert!(max_abs_diff(&uu, &identity(2)) < 1e-14);
    }

    #[test]
    fn complex_and_real_paths_agree() {
        let h = Mat::from_fn(4, 4, |i, j| c(((i + 1) * (j + 1)) as f64 + if i == j { 1.0 } else { 0.0 }));
        let mut hc = h.clone();
        hc[(0, 1)] += C64::new(0.0, 1e-3);
        hc[(1, 0)] -= C64::new(0.0, 1e-3);
        let a = eigvalsh(&h).unwrap();
        let b = eigvalsh(&hc).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-3);
        }
        assert!(hermiticity_residual(&hc) < 1e-15);
    }

    #[test]
    fn kron_layout_is_slow_index_first() {
        let a = Mat::from_fn(2, 2, |i, j| c((2 * i + j) as f64));
        let b = identity(3);
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 6);
        assert_eq!(k[(3, 0)], c(2.0));
        assert_eq!(k[(4, 1)], c(2.0));
        assert_eq!(k[(3, 1)], ZERO);
    }
}
