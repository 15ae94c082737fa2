use std::path::Path;

use faer::Mat;

use super::{check_grid, fix_sign, Boundary, ModeBasis, SpatialGrid};
use crate::error::{CqedError, Result};
use crate::linalg::{self, RMat};

/// Relative permittivity sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityProfile {
    samples: Vec<f64>,
}

impl PermittivityProfile {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = samples.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 1.0)) {
            return Err(CqedError::Config(format!(
                "relative permittivity must be finite and >= 1, got {v} at sample {j}"
            )));
        }
        Ok(Self { samples })
    }

    pub fn homogeneous(grid: &SpatialGrid) -> Self {
        Self {
            samples: vec![1.0; grid.n_points()],
        }
    }

    /// Uniform slab of permittivity `eps_r` on `[center − w/2, center + w/2]`.
    ///
    /// Each node carries the permittivity averaged over its dual cell, so
    /// nodes straddling an interface get the volume-weighted mix.
    pub fn slab(grid: &SpatialGrid, center: f64, thickness: f64, eps_r: f64) -> Result<Self> {
        if !(thickness > 0.0) {
            return Err(CqedError::Config(format!("slab thickness must be positive, got {thickness}")));
        }
        let (lo, hi) = (center - 0.5 * thickness, center + 0.5 * thickness);
        if !grid.contains(lo) || !grid.contains(hi) {
            return Err(CqedError::Config(format!(
                "slab [{lo}, {hi}] does not fit inside the cavity"
            )));
        }
        let dx = grid.spacing();
        let samples = grid
            .positions()
            .iter()
            .map(|&x| {
                let overlap = ((x + 0.5 * dx).min(hi) - (x - 0.5 * dx).max(lo)).max(0.0);
                1.0 + (eps_r - 1.0) * overlap / dx
            })
            .collect();
        Self::new(samples)
    }

    /// Linear resampling of `(x, ε_r)` pairs sorted by `x` onto the grid.
    pub fn from_table(grid: &SpatialGrid, table: &[(f64, f64)]) -> Result<Self> {
        if table.len() < 2 {
            return Err(CqedError::Config("permittivity table needs at least two rows".into()));
        }
        if table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CqedError::Config("permittivity table positions must increase".into()));
        }
        let (first, last) = (table[0].0, table[table.len() - 1].0);
        let tol = 1e-9 * grid.length();
        let samples = grid
            .positions()
            .iter()
            .map(|&x| {
                if x < first - tol || x > last + tol {
                    return Err(CqedError::Config(format!(
                        "permittivity table [{first}, {last}] does not cover x = {x}"
                    )));
                }
                let i = table.partition_point(|r| r.0 <= x).clamp(1, table.len() - 1);
                let (x0, e0) = table[i - 1];
                let (x1, e1) = table[i];
                let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                Ok((1.0 - w) * e0 + w * e1)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    /// Two-column text file `x eps_r` (whitespace or comma separated, `#` comments).
    pub fn from_file(grid: &SpatialGrid, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table(grid, &parse_table(&text)?)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| CqedError::Parse {
                line: i + 1,
                message: format!("{s:?}: {e}"),
            })
        };
        if fields.len() != 2 {
            return Err(CqedError::Parse {
                line: i + 1,
                message: format!("expected two columns, found {}", fields.len()),
            });
        }
        rows.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(rows)
}

/// Discrete `K Φ = ω² M Φ` over the unknown grid nodes.
#[derive(Debug, Clone)]
pub struct Eigenproblem {
    /// Symmetric stiffness matrix.
    pub stiffness: RMat,
    /// Diagonal of the mass matrix.
    pub mass: Vec<f64>,
    /// Grid node of each unknown.
    pub nodes: Vec<usize>,
    pub boundary: Boundary,
    /// Permittivity on every grid node (including eliminated ones).
    pub permittivity: Vec<f64>,
}

impl Eigenproblem {
    pub fn mass_matrix(&self) -> RMat {
        let n = self.mass.len();
        Mat::from_fn(n, n, |i, j| if i == j { self.mass[i] } else { 0.0 })
    }
}

/// Central-difference discretization of `−d²/dx²` with an `ε_r` mass matrix.
///
/// Mirror walls eliminate the two end nodes; the periodic stencil wraps.
pub fn assemble_eigenproblem(
    profile: &PermittivityProfile,
    grid: &SpatialGrid,
    boundary: Boundary,
) -> Result<Eigenproblem> {
    check_grid(grid, boundary)?;
    if profile.samples.len() != grid.n_points() {
        return Err(CqedError::DimensionMismatch(format!(
            "{} permittivity samples on a {}-point grid",
            profile.samples.len(),
            grid.n_points()
        )));
    }
    let nodes: Vec<usize> = match boundary {
        Boundary::Pec => (1..grid.n_points() - 1).collect(),
        Boundary::Periodic => (0..grid.n_points()).collect(),
    };
    let n = nodes.len();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let wrap = boundary == Boundary::Periodic;
    let stiffness = Mat::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * inv
        } else if i.abs_diff(j) == 1 || (wrap && i.abs_diff(j) == n - 1) {
            -inv
        } else {
            0.0
        }
    });
    Ok(Eigenproblem {
        stiffness,
        mass: nodes.iter().map(|&j| profile.samples[j]).collect(),
        nodes,
        boundary,
        permittivity: profile.samples.clone(),
    })
}

/// Lowest `count` modes of the generalized problem, `ω_k = √λ_k`.
///
/// The periodic zero mode (uniform field) is discarded.
pub fn solve_modes(problem: &Eigenproblem, count: usize, grid: &SpatialGrid) -> Result<ModeBasis> {
    let n = problem.mass.len();
    let k = &problem.stiffness;
    let inv_sqrt: Vec<f64> = problem.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let s = Mat::from_fn(n, n, |i, j| inv_sqrt[i] * k[(i, j)] * inv_sqrt[j]);
    let (vals, vecs) = linalg::eigh_real(&s)?;

    let k_scale = (0..n).map(|i| k[(i, i)].abs()).fold(0.0, f64::max);
    let zero_tol = 1e-10 * k_scale;
    let norm = (grid.length() / grid.spacing()).sqrt();
    let mut frequencies = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    for (col, &lambda) in vals.iter().enumerate() {
        if frequencies.len() == count {
            break;
        }
        if lambda < -zero_tol {
            return Err(CqedError::numeric("non-positive mode eigenvalue", lambda));
        }
        if lambda <= zero_tol {
            if problem.boundary == Boundary::Periodic {
                continue;
            }
            return Err(CqedError::numeric("zero mode eigenvalue in a bounded cavity", lambda));
        }
        let reduced: Vec<f64> = (0..n).map(|i| vecs[(i, col)] * inv_sqrt[i] * norm).collect();

        let mut res = 0.0f64;
        let mut kphi = 0.0f64;
        for i in 0..n {
            let mut acc = 0.0;
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                acc += k[(i, j)] * reduced[j];
            }
            if problem.boundary == Boundary::Periodic && n > 2 {
                if i == 0 {
                    acc += k[(0, n - 1)] * reduced[n - 1];
                } else if i == n - 1 {
                    acc += k[(n - 1, 0)] * reduced[0];
                }
            }
            res += (acc - lambda * problem.mass[i] * reduced[i]).powi(2);
            kphi += acc * acc;
        }
        if res.sqrt() > 1e-8 * kphi.sqrt() {
            return Err(CqedError::numeric("mode eigen-residual", res.sqrt() / kphi.sqrt()));
        }

        let mut phi = vec![0.0; grid.n_points()];
        for (u, &node) in problem.nodes.iter().enumerate() {
            phi[node] = reduced[u];
        }
        fix_sign(&mut phi, 1e-8);
        frequencies.push(lambda.sqrt());
        eigenfunctions.push(phi);
    }
    if frequencies.len() < count {
        return Err(CqedError::Capacity {
            what: "mode solve".into(),
            needed: count,
            limit: frequencies.len(),
            advice: "increase the grid point count".into(),
        });
    }
    Ok(ModeBasis {
        boundary: problem.boundary,
        grid: grid.clone(),
        frequencies,
        eigenfunctions,
        permittivity: problem.permittivity.clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn pec_grid(n: usize) -> SpatialGrid {
        SpatialGrid::bounded(PI, n).unwrap()
    }

    #[test]
    fn homogeneous_stencil() {
        let grid = pec_grid(11);
        let p = assemble_eigenproblem(&PermittivityProfile::homogeneous(&grid), &grid, Boundary::Pec).unwrap();
        let inv = 1.0 / grid.spacing().powi(2);
        assert_eq!(p.stiffness.nrows(), 9);
        assert_eq!(p.stiffness[(3, 3)], 2.0 * inv);
        assert_eq!(p.stiffness[(3, 4)], -inv);
        assert_eq!(p.stiffness[(0, 8)], 0.0);
        assert!(p.mass.iter().all(|&m| m == 1.0));
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(p.stiffness[(i, j)], p.stiffness[(j, i)]);
            }
        }
    }

    #[test]
    fn slab_mass_entries() {
        let grid = pec_grid(1001);
        let slab = PermittivityProfile::slab(&grid, -PI / 4.0, PI / 8.0, 4.0).unwrap();
        let inside = grid.positions().iter().position(|&x| (x + PI / 4.0).abs() < 1e-9).unwrap();
        assert!((slab.samples()[inside] - 4.0).abs() < 1e-12);
        assert_eq!(slab.samples()[500], 1.0);
        let p = assemble_eigenproblem(&slab, &grid, Boundary::Pec).unwrap();
        assert!((p.mass_matrix()[(inside - 1, inside - 1)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_pec_frequencies() {
        let grid = pec_grid(1001);
        let p = assemble_eigenproblem(&PermittivityProfile::homogeneous(&grid), &grid, Boundary::Pec).unwrap();
        let b = solve_modes(&p, 5, &grid).unwrap();
        for (k, w) in b.frequencies.iter().enumerate() {
            let exact = (k + 1) as f64;
            assert!((w - exact).abs() < 1e-3 * exact);
        }
        assert!(b.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn periodic_drops_zero_mode_and_pairs_up() {
        let grid = SpatialGrid::periodic(2.0 * PI, 400).unwrap();
        let p = assemble_eigenproblem(&PermittivityProfile::homogeneous(&grid), &grid, Boundary::Periodic).unwrap();
        let b = solve_modes(&p, 4, &grid).unwrap();
        assert!((b.frequencies[0] - 1.0).abs() < 1e-4);
        assert!((b.frequencies[1] - 1.0).abs() < 1e-4);
        assert!((b.frequencies[2] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn table_parsing_and_resampling() {
        let grid = pec_grid(5);
        let rows = parse_table("# x eps\n-2, 1\n0 3 # peak\n\n2 1\n").unwrap();
        let p = PermittivityProfile::from_table(&grid, &rows).unwrap();
        assert!((p.samples()[2] - 3.0).abs() < 1e-12);
        assert!((p.samples()[1] - (1.0 + 2.0 * (1.0 - PI / 4.0 / 2.0))).abs() < 1e-12);
        assert!(matches!(parse_table("1 2 3"), Err(CqedError::Parse { line: 1, .. })));
        assert!(PermittivityProfile::from_table(&grid, &[(-1.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(PermittivityProfile::new(vec![0.5]).is_err());
    }
}
