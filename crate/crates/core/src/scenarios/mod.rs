//! End-to-end runs: configuration, pipeline wiring and CSV output.
//!
//! Dynamic scenarios go atom → modes → couplings → chain map → TEBD →
//! observables. The ring uses `L = λ_a`, the mirror cavities `L = λ_a/2`.

mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{ChainProfile, ModeCountConvention, RunConfig, Scenario};
pub use output::{num, CsvFile, Manifest};

use crate::atom::{calibrate_double_well, AtomSpectrum, TwoLevelAtom, DEFAULT_QUARTIC};
use crate::chainmap::{chain_map, naive_chain_map, ChainTransform};
use crate::error::{CqedError, Result};
use crate::fock::FockTruncation;
use crate::hamiltonians::{self, DenseHamiltonian, Variant};
use crate::modes::{
    analytic_modes_pec, analytic_modes_periodic, assemble_eigenproblem, calibrate_dipole, coupling_coefficients,
    solve_modes, Boundary, Couplings, ModeBasis, PermittivityProfile, SpatialGrid,
};
use crate::mps::{build_gates_with, excited_population, AtomLevel, MpsState, RandomizedSvd, TruncationPolicy};
use crate::observables::{clip_for_report, photon_numbers, FieldMap, FieldSampler};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const OMEGA_A: f64 = 1.0;

/// Atomic period `T = 2π/ω_a`.
pub fn atomic_period() -> f64 {
    2.0 * std::f64::consts::PI / OMEGA_A
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Upper bound on concurrently evaluated sweep points.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub config: RunConfig,
    pub config_hash: String,
    pub wall_time: f64,
    pub version: &'static str,
}

impl OutputBundle {
    pub fn files(&self) -> Vec<PathBuf> {
        self.manifest.paths(&self.dir)
    }
}

fn boundary_of(s: Scenario) -> Boundary {
    match s {
        Scenario::Periodic => Boundary::Periodic,
        _ => Boundary::Pec,
    }
}

pub fn cavity_length(cfg: &RunConfig) -> f64 {
    boundary_of(cfg.scenario).natural_length(OMEGA_A)
}

fn cavity_grid(cfg: &RunConfig) -> Result<SpatialGrid> {
    let l = cavity_length(cfg);
    match boundary_of(cfg.scenario) {
        Boundary::Periodic => SpatialGrid::periodic(l, cfg.grid_points),
        Boundary::Pec => SpatialGrid::bounded(l, cfg.grid_points),
    }
}

/// Permittivity of the slab scenarios, from the file if one is configured.
pub fn slab_profile(cfg: &RunConfig, grid: &SpatialGrid) -> Result<PermittivityProfile> {
    let l = grid.length();
    match &cfg.permittivity_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let table: Vec<(f64, f64)> = crate::modes::parse_table(&text)?
                .into_iter()
                .map(|(x, e)| (x * l, e))
                .collect();
            PermittivityProfile::from_table(grid, &table)
        }
        None => PermittivityProfile::slab(
            grid,
            cfg.slab_center_over_l * l,
            cfg.slab_thickness_over_l * l,
            cfg.slab_permittivity,
        ),
    }
}

/// Lowest `count` cavity modes of the scenario's geometry.
fn cavity_modes(cfg: &RunConfig, count: usize) -> Result<ModeBasis> {
    let grid = cavity_grid(cfg)?;
    match cfg.scenario {
        Scenario::Periodic => analytic_modes_periodic(count.div_ceil(2), OMEGA_A, &grid),
        Scenario::PecSlabAdjacent | Scenario::PecSlabEmbedded | Scenario::CouplingProfile => {
            let profile = slab_profile(cfg, &grid)?;
            solve_modes(&assemble_eigenproblem(&profile, &grid, Boundary::Pec)?, count, &grid)
        }
        _ => analytic_modes_pec(count, OMEGA_A, &grid),
    }
}

/// Modes entering the run, and their 0-based indices in the full cavity spectrum.
pub fn select_modes(cfg: &RunConfig, position: f64) -> Result<(ModeBasis, Vec<usize>)> {
    let m = cfg.mode_count();
    let limit = cfg.grid_points / 4;
    let mut count = match cfg.mode_count_convention() {
        ModeCountConvention::Total => m,
        ModeCountConvention::Coupled => 2 * m + 2,
    };
    loop {
        let basis = cavity_modes(cfg, count.min(limit.max(m)))?;
        let indices: Vec<usize> = match cfg.mode_count_convention() {
            ModeCountConvention::Total => (0..m.min(basis.len())).collect(),
            ModeCountConvention::Coupled => {
                let probe = TwoLevelAtom::new(OMEGA_A, 1.0, position)?;
                let mut idx = coupling_coefficients(&basis, &probe)?.coupled_indices();
                idx.truncate(m);
                idx
            }
        };
        if indices.len() == m {
            return Ok((basis.select(&indices)?, indices));
        }
        if count >= limit {
            return Err(CqedError::Config(format!(
                "mode_count: only {} suitable modes among the {} resolved by {} grid points",
                indices.len(),
                basis.len(),
                cfg.grid_points
            )));
        }
        count *= 2;
    }
}

/// Dipole calibrated so that `g_D,1/ω_1 = coupling_ratio` for an atom at the
/// cavity centre (slab scenarios) or at its own position.
fn calibrated_atom(cfg: &RunConfig, basis: &ModeBasis, position: f64) -> Result<TwoLevelAtom> {
    let l = basis.length();
    let reference = if cfg.scenario.has_slab() { 0.0 } else { position };
    let probe = TwoLevelAtom::new(OMEGA_A, 1.0, reference * l)?;
    let calibrated = calibrate_dipole(basis, &probe, cfg.coupling_ratio)?;
    TwoLevelAtom::new(OMEGA_A, calibrated.dipole, position * l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time_over_t: f64,
    pub norm: f64,
    pub max_bond: usize,
    pub total_discarded_weight: f64,
}

#[derive(Debug, Clone)]
pub struct DynamicsResult {
    pub atom: TwoLevelAtom,
    /// Coupled modes used, as 1-based indices into the cavity spectrum.
    pub mode_index: Vec<usize>,
    pub couplings: Couplings,
    pub basis: ModeBasis,
    pub chain: ChainTransform,
    /// Population at every step (`times_over_t[i] = i·dt/T`).
    pub population_times: Vec<f64>,
    pub population: Vec<f64>,
    /// Sample times of photons and field map.
    pub sample_times: Vec<f64>,
    /// Raw photon numbers per sample and coupled mode.
    pub photons: Vec<Vec<f64>>,
    pub field: FieldMap,
    pub steps: Vec<StepDiagnostics>,
}

/// TEBD evolution of `|e, vacuum⟩` for a dynamic scenario.
pub fn run_dynamics(cfg: &RunConfig) -> Result<DynamicsResult> {
    if !cfg.scenario.is_dynamic() {
        return Err(CqedError::Config(format!("{} is not a dynamic scenario", cfg.scenario.label())));
    }
    cfg.validate()?;
    let position = cfg.atom_position_over_l();
    let (selected, indices) = select_modes(cfg, position * cavity_length(cfg))?;
    let atom = calibrated_atom(cfg, &selected, position)?;
    let all = coupling_coefficients(&selected, &atom)?;
    let keep = all.coupled_indices();
    if keep.is_empty() {
        return Err(CqedError::Config(format!("atom_position_over_L: no mode couples at x/L = {position}")));
    }
    let couplings = all.coupled();
    let basis = selected.select(&keep)?;
    let mode_index: Vec<usize> = keep.iter().map(|&k| indices[k] + 1).collect();
    let chain = chain_map(&couplings.frequencies, &couplings.g_d, true)?;

    let period = atomic_period();
    let dt = cfg.dt_over_t * period;
    let gates = build_gates_with(&atom, &chain, dt, cfg.photon_cutoff, cfg.splitting)?;
    let policy = TruncationPolicy {
        max_bond: cfg.max_bond,
        svd_cutoff: cfg.svd_cutoff,
        randomized: cfg.randomized_svd.then(|| RandomizedSvd {
            seed: cfg.seed,
            ..RandomizedSvd::default()
        }),
    };
    policy.validate()?;
    let sampler = FieldSampler::uniform(&basis, cfg.field_positions)?;
    let l = basis.length();

    let mut state = MpsState::product_state(AtomLevel::E, chain.len(), cfg.photon_cutoff)?;
    let steps = cfg.steps();
    let mut out = DynamicsResult {
        atom,
        mode_index,
        couplings,
        chain: chain.clone(),
        population_times: Vec::with_capacity(steps + 1),
        population: Vec::with_capacity(steps + 1),
        sample_times: Vec::new(),
        photons: Vec::new(),
        field: FieldMap {
            times: Vec::new(),
            positions: sampler.positions.iter().map(|x| x / l).collect(),
            values: Vec::new(),
        },
        steps: Vec::with_capacity(steps),
        basis,
    };
    let sample = |state: &MpsState, t: f64, out: &mut DynamicsResult| -> Result<()> {
        let b = state.correlation_matrix();
        out.sample_times.push(t);
        out.photons.push(photon_numbers(&b, &chain)?);
        let a = crate::chainmap::to_mode_basis(&b, &chain.u)?;
        out.field.times.push(t);
        out.field.values.push(sampler.evaluate(&a)?);
        Ok(())
    };
    out.population_times.push(0.0);
    out.population.push(excited_population(&state));
    sample(&state, 0.0, &mut out)?;
    for step in 1..=steps {
        state.tebd_step(&gates, &policy)?;
        let t = step as f64 * cfg.dt_over_t;
        out.population_times.push(t);
        out.population.push(excited_population(&state));
        out.steps.push(StepDiagnostics {
            step,
            time_over_t: t,
            norm: state.norm(),
            max_bond: state.max_bond(),
            total_discarded_weight: state.discarded_weight(),
        });
        if step % cfg.sample_every == 0 || step == steps {
            sample(&state, t, &mut out)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraPoint {
    pub g_over_w1: f64,
    pub variant: Variant,
    /// Gaps `(E_i − E_0)/ω_1` for `i = 1..`.
    pub gaps: Vec<f64>,
    pub cutoff: usize,
    pub change: f64,
    pub converged: bool,
}

fn atom_spectrum(cfg: &RunConfig) -> Result<AtomSpectrum> {
    let potential = calibrate_double_well(cfg.anharmonicity, DEFAULT_QUARTIC, 1.0)?;
    AtomSpectrum::solve(&potential, 1.0, cfg.atom_levels.max(cfg.self_energy_levels))
}

/// Spectra of every variant at one coupling strength.
pub fn spectra_point(cfg: &RunConfig, spec: Option<&AtomSpectrum>, g: f64) -> Result<Vec<SpectraPoint>> {
    let position = cfg.atom_position_over_l();
    let (basis, _) = select_modes(cfg, position * cavity_length(cfg))?;
    let probe = TwoLevelAtom::new(OMEGA_A, 1.0, position * basis.length())?;
    let atom = calibrate_dipole(&basis, &probe, g)?;
    let couplings = coupling_coefficients(&basis, &atom)?;
    let omega_1 = basis.frequencies[0];
    let trunc = FockTruncation::new(basis.len(), cfg.photon_cutoff, cfg.truncation_kind)?
        .with_max_dimension(cfg.max_dimension);
    let levels = cfg.spectra_gaps + 1;

    // chain geometry from unit couplings, so g = 0 keeps a valid transform
    let unit = coupling_coefficients(&basis, &probe)?.coupled();
    let unit_chain = chain_map(&unit.frequencies, &unit.g_d, true)?;
    let chain = ChainTransform {
        rho: unit_chain.rho * atom.dipole,
        ..unit_chain
    };

    let converge = |variant: Variant, build: &dyn Fn(&FockTruncation) -> Result<DenseHamiltonian>| -> Result<SpectraPoint> {
        let r = hamiltonians::converge_gaps(
            build,
            &trunc,
            levels,
            omega_1,
            cfg.convergence_tol,
            cfg.cutoff_step,
            cfg.cutoff_max,
        )?;
        Ok(SpectraPoint {
            g_over_w1: g,
            variant,
            gaps: r.gaps[1..].to_vec(),
            cutoff: r.cutoff,
            change: r.change,
            converged: r.converged,
        })
    };
    let mut out: Vec<SpectraPoint> = vec![
        converge(Variant::RabiCProper, &|t| hamiltonians::build_rabi_coulomb_proper(&atom, &couplings, t))?,
        converge(Variant::RabiDProper, &|t| hamiltonians::build_rabi_dipole_proper(&atom, &couplings, t, true))?,
        converge(Variant::RabiCDirect, &|t| hamiltonians::build_rabi_coulomb_direct(&atom, &couplings, t))?,
    ];
    if let Some(spec) = spec {
        out.push(converge(Variant::RabiDDirect, &|t| {
            hamiltonians::build_rabi_dipole_direct(spec, &atom, &couplings, t, cfg.self_energy_levels)
        })?);
    }
    out.push(converge(Variant::Chain, &|t| hamiltonians::build_chain_dense(&atom, &chain, t))?);
    if cfg.include_full {
        let spec = spec.ok_or_else(|| CqedError::Config("full variants need the atom spectrum".into()))?;
        let t = trunc.with_cutoff(cfg.full_cutoff)?;
        for (variant, h) in [
            (Variant::FullC, hamiltonians::build_full_coulomb(spec, &couplings, &t, cfg.atom_levels)?),
            (Variant::FullD, hamiltonians::build_full_dipole(spec, &couplings, &t, cfg.atom_levels)?),
        ] {
            let gaps = hamiltonians::spectrum_gaps(&h, levels, omega_1)?;
            out.push(SpectraPoint {
                g_over_w1: g,
                variant,
                gaps: gaps[1..].to_vec(),
                cutoff: cfg.full_cutoff,
                change: f64::NAN,
                converged: false,
            });
        }
    }
    Ok(out)
}

/// Every sweep point, evaluated on up to `jobs` threads; output order follows the sweep.
pub fn run_spectra(cfg: &RunConfig, opts: RunOptions) -> Result<Vec<SpectraPoint>> {
    cfg.validate()?;
    let spec = atom_spectrum(cfg)?;
    let values = cfg.sweep_values();
    let jobs = opts.jobs.max(1).min(values.len());
    let chunk = values.len().div_ceil(jobs);
    let results: Vec<Result<Vec<SpectraPoint>>> = std::thread::scope(|s| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .map(|part| {
                let spec = &spec;
                s.spawn(move || {
                    let mut acc = Vec::new();
                    for &g in part {
                        acc.extend(spectra_point(cfg, Some(spec), g)?);
                    }
                    Ok(acc)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ChainDiagnostic {
    pub omega: Vec<f64>,
    pub g_d: Vec<f64>,
    pub stabilized: ChainTransform,
    pub naive: ChainTransform,
}

/// Couplings `g_k` on `ω_k = k ω_a` with `g_1/ω_1 = ratio`.
pub fn linear_spectrum(count: usize, profile: ChainProfile, ratio: f64) -> (Vec<f64>, Vec<f64>) {
    let omega: Vec<f64> = (1..=count).map(|k| k as f64 * OMEGA_A).collect();
    let g = omega
        .iter()
        .map(|w| {
            let shape = match profile {
                ChainProfile::InverseSqrt => (omega[0] / w).sqrt(),
                ChainProfile::Sqrt => (w / omega[0]).sqrt(),
                ChainProfile::Flat => 1.0,
            };
            ratio * omega[0] * shape
        })
        .collect();
    (omega, g)
}

pub fn run_chainmap(cfg: &RunConfig) -> Result<ChainDiagnostic> {
    cfg.validate()?;
    let (omega, g_d) = linear_spectrum(cfg.mode_count(), cfg.chain_profile, cfg.coupling_ratio);
    Ok(ChainDiagnostic {
        stabilized: chain_map(&omega, &g_d, true)?,
        naive: naive_chain_map(&omega, &g_d)?,
        omega,
        g_d,
    })
}

#[derive(Debug, Clone)]
pub struct CouplingProfile {
    pub frequencies: Vec<f64>,
    /// `|g_D,k/ω_k|` with the atom beside the slab.
    pub adjacent: Vec<f64>,
    /// `|g_D,k/ω_k|` with the atom inside the slab.
    pub embedded: Vec<f64>,
    pub adjacent_position: f64,
    pub embedded_position: f64,
}

pub fn run_coupling_profile(cfg: &RunConfig) -> Result<CouplingProfile> {
    cfg.validate()?;
    let adjacent_position = cfg.atom_position_over_l.unwrap_or(0.0);
    let embedded_position = cfg.slab_center_over_l;
    let l = cavity_length(cfg);
    let total = RunConfig {
        mode_count_convention: Some(ModeCountConvention::Total),
        ..cfg.clone()
    };
    let (basis, _) = select_modes(&total, adjacent_position * l)?;
    let atom = calibrated_atom(cfg, &basis, adjacent_position)?;
    let ratio = |x: f64| -> Result<Vec<f64>> {
        let c = coupling_coefficients(&basis, &TwoLevelAtom::new(OMEGA_A, atom.dipole, x * l)?)?;
        Ok(c.g_d.iter().zip(&c.frequencies).map(|(g, w)| (g / w).abs()).collect())
    };
    Ok(CouplingProfile {
        frequencies: basis.frequencies.clone(),
        adjacent: ratio(adjacent_position)?,
        embedded: ratio(embedded_position)?,
        adjacent_position,
        embedded_position,
    })
}

/// Spelling of a unit enum variant as written in config files.
fn label<T: serde::Serialize>(v: &T) -> String {
    match toml::Value::try_from(v) {
        Ok(toml::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn metadata(cfg: &RunConfig, extra: &str) -> String {
    let mut m = format!(
        "cqed {VERSION}; scenario={}; config_sha256={}",
        cfg.scenario.label(),
        cfg.hash()
    );
    if !extra.is_empty() {
        m.push_str("; ");
        m.push_str(extra);
    }
    m
}

/// Run the configured scenario and write its CSV files to `cfg.output_dir`.
pub fn run_scenario(cfg: &RunConfig) -> Result<OutputBundle> {
    run_scenario_with(cfg, RunOptions::default())
}

pub fn run_scenario_with(cfg: &RunConfig, opts: RunOptions) -> Result<OutputBundle> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut manifest = Manifest::default();

    match cfg.scenario {
        s if s.is_dynamic() => write_dynamics(cfg, &run_dynamics(cfg)?, &mut manifest)?,
        Scenario::SpectraSweep => write_spectra(cfg, &run_spectra(cfg, opts)?, &mut manifest)?,
        Scenario::ChainmapDiagnostic => write_chainmap(cfg, &run_chainmap(cfg)?, &mut manifest)?,
        _ => write_couplings(cfg, &run_coupling_profile(cfg)?, &mut manifest)?,
    }

    let mut rc = CsvFile::create(&dir, "run_config.csv", &metadata(cfg, ""), &["key", "value"])?;
    let table: toml::Table = toml::from_str(&cfg.to_toml()).expect("configuration re-parses");
    for (k, v) in &table {
        let value = match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        rc.row([k.as_str(), value.as_str()])?;
    }
    manifest.add(rc.finish()?);

    let wall_time = start.elapsed().as_secs_f64();
    let mut mf = CsvFile::create(
        &dir,
        "manifest.csv",
        &metadata(cfg, &format!("wall_time_s={wall_time:.3}")),
        &["file", "rows"],
    )?;
    for (name, rows) in manifest.entries.clone() {
        mf.row([name, rows.to_string()])?;
    }
    mf.finish()?;

    Ok(OutputBundle {
        dir,
        manifest,
        config: cfg.clone(),
        config_hash: cfg.hash(),
        wall_time,
        version: VERSION,
    })
}

fn write_dynamics(cfg: &RunConfig, r: &DynamicsResult, manifest: &mut Manifest) -> Result<()> {
    let dir = &cfg.output_dir;
    let meta = metadata(
        cfg,
        &format!(
            "modes={}; dipole={}; g1_normalization=1/(2L); time_unit=2pi/omega_a; photon_cutoff={}; max_bond={}; svd_cutoff={}",
            r.mode_index.len(),
            r.atom.dipole,
            cfg.photon_cutoff,
            cfg.max_bond,
            cfg.svd_cutoff
        ),
    );
    let mut pop = CsvFile::create(dir, "population.csv", &meta, &["time_over_T", "pop"])?;
    for (t, p) in r.population_times.iter().zip(&r.population) {
        pop.row([num(*t), num(*p)])?;
    }
    manifest.add(pop.finish()?);

    for (name, clip) in [("photons.csv", true), ("photons_raw.csv", false)] {
        let note = if clip { "negatives in [-1e-10, 0) clipped to 0" } else { "unclipped" };
        let mut ph = CsvFile::create(
            dir,
            name,
            &format!("{meta}; {note}"),
            &["time_over_T", "k", "omega_k_over_wa", "n_k"],
        )?;
        for (t, n) in r.sample_times.iter().zip(&r.photons) {
            let values = if clip { clip_for_report(n) } else { n.clone() };
            for (i, v) in values.iter().enumerate() {
                let w = r.couplings.frequencies[i] / OMEGA_A;
                ph.row([num(*t), r.mode_index[i].to_string(), num(w), num(*v)])?;
            }
        }
        manifest.add(ph.finish()?);
    }

    let slab = if cfg.scenario.has_slab() && cfg.permittivity_file.is_none() {
        format!(
            "; slab_x_over_L=[{},{}]",
            cfg.slab_center_over_l - 0.5 * cfg.slab_thickness_over_l,
            cfg.slab_center_over_l + 0.5 * cfg.slab_thickness_over_l
        )
    } else {
        String::new()
    };
    let mut fm = CsvFile::create(dir, "fieldmap.csv", &format!("{meta}{slab}"), &["time_over_T", "x_over_L", "g1"])?;
    for (t, row) in r.field.times.iter().zip(&r.field.values) {
        for (x, v) in r.field.positions.iter().zip(row) {
            fm.row([num(*t), num(*x), num(*v)])?;
        }
    }
    manifest.add(fm.finish()?);

    let mut st = CsvFile::create(
        dir,
        "steps.csv",
        &meta,
        &["step", "time_over_T", "norm", "max_bond", "total_discarded_weight"],
    )?;
    for d in &r.steps {
        st.row([
            d.step.to_string(),
            num(d.time_over_t),
            num(d.norm),
            d.max_bond.to_string(),
            num(d.total_discarded_weight),
        ])?;
    }
    manifest.add(st.finish()?);
    Ok(())
}

fn write_spectra(cfg: &RunConfig, points: &[SpectraPoint], manifest: &mut Manifest) -> Result<()> {
    let dir = &cfg.output_dir;
    let meta = metadata(
        cfg,
        &format!(
            "modes={}; truncation={}; tol={}; gaps normalized by omega_1",
            cfg.mode_count(),
            label(&cfg.truncation_kind),
            cfg.convergence_tol
        ),
    );
    let mut sp = CsvFile::create(dir, "spectra.csv", &meta, &["g_over_w1", "variant", "level_index", "gap"])?;
    for p in points {
        for (i, gap) in p.gaps.iter().enumerate() {
            sp.row([num(p.g_over_w1), p.variant.label().to_string(), (i + 1).to_string(), num(*gap)])?;
        }
    }
    manifest.add(sp.finish()?);
    let mut cv = CsvFile::create(
        dir,
        "spectra_convergence.csv",
        &meta,
        &["g_over_w1", "variant", "cutoff", "change", "converged"],
    )?;
    for p in points {
        cv.row([
            num(p.g_over_w1),
            p.variant.label().to_string(),
            p.cutoff.to_string(),
            num(p.change),
            p.converged.to_string(),
        ])?;
    }
    manifest.add(cv.finish()?);
    Ok(())
}

fn write_chainmap(cfg: &RunConfig, d: &ChainDiagnostic, manifest: &mut Manifest) -> Result<()> {
    let meta = metadata(
        cfg,
        &format!("omega_k=k*omega_a; modes={}; profile={}", d.omega.len(), label(&cfg.chain_profile)),
    );
    for (name, c) in [("chainmap.csv", &d.stabilized), ("chainmap_naive.csv", &d.naive)] {
        let mut f = CsvFile::create(
            &cfg.output_dir,
            name,
            &meta,
            &["n", "xi_over_wa", "t_over_wa", "orthogonality_defect"],
        )?;
        let defect = c.orthogonality_profile();
        for n in 0..c.len() {
            let t = c.t.get(n).copied().unwrap_or(0.0);
            f.row([(n + 1).to_string(), num(c.xi[n] / OMEGA_A), num(t / OMEGA_A), num(defect[n])])?;
        }
        manifest.add(f.finish()?);
    }
    Ok(())
}

fn write_couplings(cfg: &RunConfig, p: &CouplingProfile, manifest: &mut Manifest) -> Result<()> {
    let meta = metadata(
        cfg,
        &format!(
            "adjacent_x_over_L={}; embedded_x_over_L={}",
            p.adjacent_position, p.embedded_position
        ),
    );
    let mut f = CsvFile::create(
        &cfg.output_dir,
        "couplings.csv",
        &meta,
        &["k", "omega_k_over_wa", "g_adjacent_over_omega", "g_embedded_over_omega"],
    )?;
    for k in 0..p.frequencies.len() {
        f.row([
            (k + 1).to_string(),
            num(p.frequencies[k] / OMEGA_A),
            num(p.adjacent[k]),
            num(p.embedded[k]),
        ])?;
    }
    manifest.add(f.finish()?);
    Ok(())
}
