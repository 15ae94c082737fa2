#![allow(dead_code)]

use dashu_base::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

type F = FBig<HalfEven, 2>;

fn big(x: f64, bits: usize) -> F {
    F::try_from(x).unwrap().with_precision(bits).value()
}

fn dot(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::ZERO, |acc, (x, y)| acc + x * y)
}

/// Plain three-term chain recursion carried out in software floating point
/// with `bits` of mantissa. Returns `(xi, t, rho)`.
pub fn extended_chain(omega: &[f64], g: &[f64], bits: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let m = omega.len();
    let w: Vec<F> = omega.iter().map(|&x| big(x, bits)).collect();
    let gb: Vec<F> = g.iter().map(|&x| big(x, bits)).collect();
    let rho = dot(&gb, &gb).sqrt();
    let mut cur: Vec<F> = gb.iter().map(|x| x / &rho).collect();
    let mut prev: Vec<F> = vec![F::ZERO; m];
    let mut t_prev = F::ZERO;
    let mut xi = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for n in 0..m {
        let wr: Vec<F> = w.iter().zip(&cur).map(|(a, b)| a * b).collect();
        let xi_n = dot(&cur, &wr);
        xi.push(xi_n.to_f64().value());
        if n + 1 == m {
            break;
        }
        let v: Vec<F> = (0..m)
            .map(|k| &wr[k] - &xi_n * &cur[k] - &t_prev * &prev[k])
            .collect();
        let tn = dot(&v, &v).sqrt();
        t.push(tn.to_f64().value());
        prev = cur;
        cur = v.iter().map(|x| x / &tn).collect();
        t_prev = tn;
    }
    (xi, t, rho.to_f64().value())
}

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

/// Chain Hamiltonian `ω_a σz/2 + Σ ξ_n n_n + Σ t_n (b_n† b_{n+1} + h.c.) − iρ σx (b_1 − b_1†)`
/// assembled entry by entry on `atom ⊗ site_1 ⊗ …` (atom slowest, `g` = 0).
pub fn dense_chain_oracle(omega_a: f64, xi: &[f64], t: &[f64], rho: f64, cutoff: usize) -> Mat<C64> {
    let m = xi.len();
    let sites = cutoff.pow(m as u32);
    let dim = 2 * sites;
    let stride: Vec<usize> = (0..m).map(|n| cutoff.pow((m - 1 - n) as u32)).collect();
    let occ = |idx: usize, n: usize| (idx / stride[n]) % cutoff;
    let mut h = Mat::<C64>::zeros(dim, dim);
    for s in 0..2 {
        for f in 0..sites {
            let row = s * sites + f;
            let mut diag = if s == 1 { 0.5 * omega_a } else { -0.5 * omega_a };
            for n in 0..m {
                diag += xi[n] * occ(f, n) as f64;
            }
            h[(row, row)] += C64::new(diag, 0.0);
            for n in 0..m.saturating_sub(1) {
                // b_n† b_{n+1}
                let (a, b) = (occ(f, n), occ(f, n + 1));
                if b > 0 && a + 1 < cutoff {
                    let col = row + stride[n] - stride[n + 1];
                    let amp = t[n] * ((a + 1) as f64 * b as f64).sqrt();
                    h[(col, row)] += C64::new(amp, 0.0);
                    h[(row, col)] += C64::new(amp, 0.0);
                }
            }
            // −iρ σx b_1 and its adjoint
            let a = occ(f, 0);
            if a > 0 {
                let col = (1 - s) * sites + f - stride[0];
                let amp = C64::new(0.0, -rho * (a as f64).sqrt());
                h[(col, row)] += amp;
                h[(row, col)] += amp.conj();
            }
        }
    }
    h
}

/// `e^{−iHt} ψ` through a Hermitian eigendecomposition.
pub fn evolve_dense(h: &Mat<C64>, psi: &[C64], time: f64) -> Vec<C64> {
    let evd = h.self_adjoint_eigen(Side::Lower).unwrap();
    let u = evd.U();
    let e: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
    let n = psi.len();
    let coef: Vec<C64> = (0..n)
        .map(|j| {
            let proj: C64 = (0..n).map(|i| u[(i, j)].conj() * psi[i]).sum();
            proj * C64::from_polar(1.0, -e[j] * time)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| u[(i, j)] * coef[j]).sum()).collect()
}

pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

/// `⟨e|…⟩` weight of a dense state with the atom as slowest index.
pub fn excited_weight(psi: &[C64]) -> f64 {
    psi[psi.len() / 2..].iter().map(|z| z.norm_sqr()).sum()
}
