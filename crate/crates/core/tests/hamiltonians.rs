use cqed::atom::TwoLevelAtom;
use cqed::chainmap::chain_map;
use cqed::fock::{FockSpace, FockTruncation};
use cqed::hamiltonians::{
    build_chain_dense, build_rabi_coulomb_direct, build_rabi_coulomb_proper, build_rabi_dipole_proper,
    diamagnetic_term, spectrum_gaps, trk_selfenergy_check,
};
use cqed::linalg::{hermiticity_residual, RMat};
use cqed::modes::{analytic_modes_pec, calibrate_dipole, coupling_coefficients, Couplings, SpatialGrid};
use faer::Mat;
use proptest::prelude::*;

fn pec_couplings(modes: usize, ratio: f64) -> (TwoLevelAtom, Couplings) {
    let grid = SpatialGrid::bounded(std::f64::consts::PI, 1001).unwrap();
    let basis = analytic_modes_pec(modes, 1.0, &grid).unwrap();
    let probe = TwoLevelAtom::new(1.0, 1.0, 0.0).unwrap();
    let atom = calibrate_dipole(&basis, &probe, ratio).unwrap();
    let c = coupling_coefficients(&basis, &atom).unwrap();
    (atom, c)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .skip(1)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

#[test]
fn chain_and_star_forms_share_a_spectrum() {
    let (atom, c) = pec_couplings(5, 0.4);
    let coupled = c.coupled();
    assert_eq!(coupled.len(), 3);
    let chain = chain_map(&coupled.frequencies, &coupled.g_d, true).unwrap();
    // total-number truncation is invariant under mode mixing
    let t = FockTruncation::total_number(3, 4).unwrap();
    let star = build_rabi_dipole_proper(&atom, &coupled, &t, false).unwrap();
    let chained = build_chain_dense(&atom, &chain, &t).unwrap();
    let a = star.eigenvalues().unwrap();
    let b = chained.eigenvalues().unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn proper_gauges_agree_at_moderate_coupling() {
    let (atom, c) = pec_couplings(3, 0.2);
    let t = FockTruncation::per_mode(2, 10).unwrap();
    let omega_1 = c.frequencies[0];
    let gc = spectrum_gaps(&build_rabi_coulomb_proper(&atom, &c, &t).unwrap(), 9, omega_1).unwrap();
    let gd = spectrum_gaps(&build_rabi_dipole_proper(&atom, &c, &t, true).unwrap(), 9, omega_1).unwrap();
    assert!(max_rel(&gc, &gd) < 1e-6, "{}", max_rel(&gc, &gd));
}

#[test]
fn direct_coulomb_truncation_breaks_agreement() {
    let (atom, c) = pec_couplings(5, 0.5);
    let t = FockTruncation::total_number(5, 8).unwrap();
    let omega_1 = c.frequencies[0];
    let gc = spectrum_gaps(&build_rabi_coulomb_direct(&atom, &c, &t).unwrap(), 3, omega_1).unwrap();
    let gd = spectrum_gaps(&build_rabi_dipole_proper(&atom, &c, &t, true).unwrap(), 3, omega_1).unwrap();
    assert!((gc[2] - gd[2]).abs() / gd[2] > 0.01);
}

#[test]
fn self_energy_sum_rule_holds_per_mode() {
    let (atom, c) = pec_couplings(9, 0.6);
    let t = FockTruncation::per_mode(9, 6).unwrap();
    let checks = trk_selfenergy_check(&atom, &c, &t).unwrap();
    assert_eq!(checks.len(), 5);
    for check in checks {
        assert!(check.residual() < 1e-12);
    }
}

/// `(1/ω_a) X_C²` with `X_C` assembled from occupation lists.
fn diamagnetic_oracle(c: &Couplings, t: &FockTruncation) -> RMat {
    let coupled = c.coupled();
    let space = FockSpace::new(t.with_modes(coupled.len()).unwrap()).unwrap();
    let d = space.dimension();
    let mut x = Mat::<f64>::zeros(d, d);
    for j in 0..d {
        let occ = space.state(j).to_vec();
        for (k, g) in coupled.g_c.iter().enumerate() {
            let n = occ[k] as usize;
            if n > 0 {
                let mut lower = occ.clone();
                lower[k] -= 1;
                let i = space.index_of(&lower).unwrap();
                let amp = g * (n as f64).sqrt();
                x[(i, j)] += amp;
                x[(j, i)] += amp;
            }
        }
    }
    (1.0 / c.omega_a) * (&x * &x)
}

#[test]
fn diamagnetic_term_matches_independent_assembly() {
    let (_, c) = pec_couplings(5, 0.6);
    for t in [
        FockTruncation::per_mode(3, 5).unwrap(),
        FockTruncation::total_number(3, 6).unwrap(),
    ] {
        let got = diamagnetic_term(&c.coupled(), &t).unwrap();
        let want = diamagnetic_oracle(&c, &t);
        let diff = (0..got.nrows())
            .flat_map(|i| (0..got.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (got[(i, j)] - want[(i, j)]).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn builders_are_hermitian(ratio in 0.0f64..0.8, cutoff in 2usize..6) {
        let (atom, c) = pec_couplings(3, ratio);
        let t = FockTruncation::per_mode(2, cutoff).unwrap();
        for h in [
            build_rabi_coulomb_proper(&atom, &c, &t).unwrap(),
            build_rabi_dipole_proper(&atom, &c, &t, true).unwrap(),
            build_rabi_coulomb_direct(&atom, &c, &t).unwrap(),
        ] {
            prop_assert!(hermiticity_residual(&h.matrix) < 1e-12);
        }
    }

    #[test]
    fn gaps_start_at_zero_and_ascend(ratio in 0.0f64..0.8) {
        let (atom, c) = pec_couplings(3, ratio);
        let t = FockTruncation::per_mode(2, 5).unwrap();
        let g = spectrum_gaps(&build_rabi_dipole_proper(&atom, &c, &t, true).unwrap(), 6, 1.0).unwrap();
        prop_assert_eq!(g[0], 0.0);
        prop_assert!(g.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
