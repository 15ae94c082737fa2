mod common;

use std::f64::consts::{PI, SQRT_2};

use cqed::atom::TwoLevelAtom;
use cqed::chainmap::{chain_map, ChainTransform};
use cqed::linalg::C64;
use cqed::modes::{analytic_modes_pec, calibrate_dipole, coupling_coefficients, ModeBasis, SpatialGrid};
use cqed::mps::{build_gates, AtomLevel, MpsState, TruncationPolicy};
use cqed::observables::{field_correlation, photon_numbers, FieldSampler};
use faer::Mat;

const L: f64 = PI;
const CUTOFF: usize = 3;

struct Setup {
    basis: ModeBasis,
    chain: ChainTransform,
    state: MpsState,
}

fn evolved(steps: usize) -> Setup {
    let grid = SpatialGrid::bounded(L, 1001).unwrap();
    let basis = analytic_modes_pec(4, 1.0, &grid).unwrap();
    let probe = TwoLevelAtom::new(1.0, 1.0, 0.2 * L).unwrap();
    let atom = calibrate_dipole(&basis, &probe, 0.3).unwrap();
    let c = coupling_coefficients(&basis, &atom).unwrap();
    assert_eq!(c.coupled_indices().len(), 4);
    let chain = chain_map(&c.frequencies, &c.g_d, true).unwrap();
    let gates = build_gates(&atom, &chain, 2.0 * PI / 400.0, CUTOFF).unwrap();
    let mut state = MpsState::product_state(AtomLevel::E, chain.len(), CUTOFF).unwrap();
    for _ in 0..steps {
        state.tebd_step(&gates, &TruncationPolicy::exact(64)).unwrap();
    }
    Setup { basis, chain, state }
}

/// `⟨b_n† b_n'⟩` from the dense state by enumeration.
fn dense_correlations(psi: &[C64], sites: usize) -> Mat<C64> {
    let field = CUTOFF.pow(sites as u32);
    let stride: Vec<usize> = (0..sites).map(|n| CUTOFF.pow((sites - 1 - n) as u32)).collect();
    let occ = |f: usize, n: usize| (f / stride[n]) % CUTOFF;
    let mut b = Mat::<C64>::zeros(sites, sites);
    for s in 0..2 {
        for f in 0..field {
            let amp = psi[s * field + f];
            for n in 0..sites {
                for np in 0..sites {
                    // b_n† b_n' |f⟩
                    let m = occ(f, np);
                    if m == 0 {
                        continue;
                    }
                    let lowered = f - stride[np];
                    let k = occ(lowered, n);
                    if k + 1 >= CUTOFF {
                        continue;
                    }
                    let raised = lowered + stride[n];
                    let coef = ((m * (k + 1)) as f64).sqrt();
                    b[(n, np)] += psi[s * field + raised].conj() * amp * coef;
                }
            }
        }
    }
    b
}

#[test]
fn correlation_matrix_matches_dense_state() {
    let s = evolved(150);
    let b = s.state.correlation_matrix();
    let oracle = dense_correlations(&s.state.to_dense(), s.chain.len());
    for i in 0..4 {
        for j in 0..4 {
            assert!((b[(i, j)] - oracle[(i, j)]).norm() < 1e-12, "({i},{j})");
        }
    }
}

#[test]
fn field_correlation_matches_quadruple_sum() {
    let s = evolved(150);
    let b = s.state.correlation_matrix();
    let xs: Vec<f64> = (0..11).map(|i| -0.5 * L + L * i as f64 / 10.0).collect();
    let got = field_correlation(&b, &s.chain, &s.basis, &xs).unwrap();
    let v = |k: usize, x: f64| {
        let w = (k + 1) as f64;
        w.sqrt() * SQRT_2 * (w * (x + 0.5 * L)).sin()
    };
    for (i, &x) in xs.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..4 {
            for kp in 0..4 {
                for n in 0..4 {
                    for np in 0..4 {
                        acc += v(k, x) * v(kp, x) * s.chain.u[(n, k)] * s.chain.u[(np, kp)] * b[(n, np)].re;
                    }
                }
            }
        }
        let want = acc / (2.0 * L);
        assert!((got[i] - want).abs() < 1e-10, "x = {x}: {} vs {want}", got[i]);
    }
    // walls are dark
    assert!(got[0].abs() < 1e-12 && got[10].abs() < 1e-12);
}

#[test]
fn total_photon_number_is_basis_independent() {
    let s = evolved(200);
    let b = s.state.correlation_matrix();
    let modes: f64 = photon_numbers(&b, &s.chain).unwrap().iter().sum();
    let sites: f64 = (0..4).map(|n| b[(n, n)].re).sum();
    assert!(sites > 1e-3);
    assert!((modes - sites).abs() < 1e-12);
}

#[test]
fn vacuum_field_map_is_zero() {
    let s = evolved(0);
    let sampler = FieldSampler::uniform(&s.basis, 21).unwrap();
    let a = cqed::chainmap::to_mode_basis(&s.state.correlation_matrix(), &s.chain.u).unwrap();
    assert!(sampler.evaluate(&a).unwrap().iter().all(|g| g.abs() < 1e-15));
}
