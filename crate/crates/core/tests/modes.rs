use std::f64::consts::PI;

use cqed::atom::TwoLevelAtom;
use cqed::modes::{
    analytic_modes_pec, analytic_modes_periodic, assemble_eigenproblem, coupling_coefficients, solve_modes, Boundary,
    PermittivityProfile, SpatialGrid,
};
use proptest::prelude::*;

const L: f64 = PI;

fn pec_grid() -> SpatialGrid {
    SpatialGrid::bounded(L, 1001).unwrap()
}

fn slab_modes(count: usize) -> cqed::modes::ModeBasis {
    let grid = pec_grid();
    let profile = PermittivityProfile::slab(&grid, -0.25 * L, 0.125 * L, 4.0).unwrap();
    solve_modes(&assemble_eigenproblem(&profile, &grid, Boundary::Pec).unwrap(), count, &grid).unwrap()
}

/// Field at the right wall after shooting `E = sin(ω(x + L/2))` through a
/// piecewise-constant index profile `[(x_end, n)]`.
fn shoot(omega: f64, layers: &[(f64, f64)]) -> f64 {
    let (mut e, mut de) = (0.0, omega);
    let mut x = -0.5 * L;
    for &(end, n) in layers {
        let k = omega * n;
        let d = end - x;
        let (s, c) = (k * d).sin_cos();
        (e, de) = (e * c + de * s / k, -e * k * s + de * c);
        x = end;
    }
    e
}

fn slab_roots(count: usize) -> Vec<f64> {
    let layers = [(-0.3125 * L, 1.0), (-0.1875 * L, 2.0), (0.5 * L, 1.0)];
    let mut roots = Vec::new();
    let step = 1e-3;
    let mut w = step;
    while roots.len() < count {
        let (a, b) = (shoot(w, &layers), shoot(w + step, &layers));
        if a * b < 0.0 {
            let (mut lo, mut hi) = (w, w + step);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if shoot(lo, &layers) * shoot(mid, &layers) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        w += step;
    }
    roots
}

#[test]
fn homogeneous_numerical_frequencies_are_close_to_integers() {
    let grid = pec_grid();
    let basis = solve_modes(
        &assemble_eigenproblem(&PermittivityProfile::homogeneous(&grid), &grid, Boundary::Pec).unwrap(),
        5,
        &grid,
    )
    .unwrap();
    let dx = grid.spacing();
    for (k, w) in basis.frequencies.iter().enumerate() {
        let k = (k + 1) as f64;
        assert!((w - k).abs() / k < 1e-3, "mode {k}: {w}");
        // exact eigenvalues of the three-point stencil
        let stencil = 2.0 / dx * (k * PI * dx / (2.0 * L)).sin();
        assert!((w - stencil).abs() < 1e-8 * k);
    }
}

#[test]
fn homogeneous_numerical_modes_match_analytic_shapes() {
    let grid = pec_grid();
    let numeric = solve_modes(
        &assemble_eigenproblem(&PermittivityProfile::homogeneous(&grid), &grid, Boundary::Pec).unwrap(),
        4,
        &grid,
    )
    .unwrap();
    let exact = analytic_modes_pec(4, 1.0, &grid).unwrap();
    for k in 0..4 {
        let dot: f64 = (0..grid.n_points())
            .map(|j| numeric.eigenfunctions[k][j] * exact.eigenfunctions[k][j])
            .sum::<f64>()
            * grid.spacing()
            / L;
        assert!((dot.abs() - 1.0).abs() < 1e-5, "mode {k}: {dot}");
    }
}

#[test]
fn slab_modes_are_weighted_orthonormal_and_red_shifted() {
    let basis = slab_modes(10);
    assert!(basis.orthonormality_defect() < 1e-8);
    assert!(basis.frequencies[0] < 1.0);
}

#[test]
fn slab_frequencies_match_transfer_matrix_roots() {
    let basis = slab_modes(5);
    for (w, root) in basis.frequencies.iter().zip(slab_roots(5)) {
        assert!((w - root).abs() / root < 2e-3, "{w} vs {root}");
    }
}

#[test]
fn periodic_modes_come_in_degenerate_pairs() {
    let grid = SpatialGrid::periodic(2.0 * PI, 1000).unwrap();
    let basis = analytic_modes_periodic(3, 1.0, &grid).unwrap();
    assert_eq!(basis.len(), 6);
    for p in 0..3 {
        assert_eq!(basis.frequencies[2 * p], basis.frequencies[2 * p + 1]);
        assert!((basis.frequencies[2 * p] - (p + 1) as f64).abs() < 1e-12);
    }
    assert!(basis.orthonormality_defect() < 1e-10);
}

#[test]
fn embedded_atom_couples_more_weakly_to_higher_modes() {
    let basis = slab_modes(20);
    let ratio = |x: f64| {
        let c = coupling_coefficients(&basis, &TwoLevelAtom::new(1.0, 1.0, x).unwrap()).unwrap();
        c.g_d.iter().zip(&c.frequencies).map(|(g, w)| (g / w).abs()).collect::<Vec<_>>()
    };
    let (adjacent, embedded) = (ratio(0.0), ratio(-0.25 * L));
    let weaker = (2..20).filter(|&k| embedded[k] < adjacent[k]).count();
    assert!(weaker * 2 > 18, "{weaker} of 18");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn raising_permittivity_lowers_the_fundamental(eps in 1.5f64..9.0, centre in -0.35f64..0.35) {
        let grid = SpatialGrid::bounded(L, 201).unwrap();
        let solve = |e: f64| {
            let p = PermittivityProfile::slab(&grid, centre * L, 0.1 * L, e).unwrap();
            solve_modes(&assemble_eigenproblem(&p, &grid, Boundary::Pec).unwrap(), 3, &grid).unwrap()
        };
        let (lo, hi) = (solve(eps), solve(eps + 0.5));
        prop_assert!(hi.frequencies[0] < lo.frequencies[0]);
        prop_assert!(lo.orthonormality_defect() < 1e-8);
    }
}
