use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CqedError, Result};
use crate::fock::TruncationKind;
use crate::mps::Splitting;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Periodic,
    PecHomogeneous,
    PecSlabAdjacent,
    PecSlabEmbedded,
    SpectraSweep,
    ChainmapDiagnostic,
    CouplingProfile,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Periodic => "periodic",
            Scenario::PecHomogeneous => "pec_homogeneous",
            Scenario::PecSlabAdjacent => "pec_slab_adjacent",
            Scenario::PecSlabEmbedded => "pec_slab_embedded",
            Scenario::SpectraSweep => "spectra_sweep",
            Scenario::ChainmapDiagnostic => "chainmap_diagnostic",
            Scenario::CouplingProfile => "coupling_profile",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(
            self,
            Scenario::Periodic | Scenario::PecHomogeneous | Scenario::PecSlabAdjacent | Scenario::PecSlabEmbedded
        )
    }

    pub fn has_slab(self) -> bool {
        matches!(
            self,
            Scenario::PecSlabAdjacent | Scenario::PecSlabEmbedded | Scenario::CouplingProfile
        )
    }
}

/// How `mode_count` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCountConvention {
    /// The lowest `mode_count` cavity modes, coupled or not.
    Total,
    /// The lowest `mode_count` modes with nonzero coupling.
    Coupled,
}

/// Coupling profile used by the chain-map diagnostic on `ω_k = k ω_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChainProfile {
    /// `g_k ∝ 1/√ω_k`.
    #[default]
    InverseSqrt,
    /// `g_k ∝ √ω_k`, as for an atom in a ring cavity.
    Sqrt,
    /// Equal couplings.
    Flat,
}

/// Flat run configuration. Every key is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Defaults: 20 for dynamics and coupling profiles, 5 for spectra, 100 for the chain diagnostic.
    pub mode_count: Option<usize>,
    /// Defaults: `total` for spectra and coupling profiles, `coupled` otherwise.
    pub mode_count_convention: Option<ModeCountConvention>,
    /// Fock states per chain site (dynamics) or starting cutoff (spectra).
    pub photon_cutoff: usize,
    pub truncation_kind: TruncationKind,
    pub max_bond: usize,
    pub svd_cutoff: f64,
    pub randomized_svd: bool,
    pub seed: u64,
    pub splitting: Splitting,
    #[serde(rename = "dt_over_T")]
    pub dt_over_t: f64,
    pub periods: f64,
    /// Defaults to the cavity centre, or the slab centre for the embedded case.
    #[serde(rename = "atom_position_over_L")]
    pub atom_position_over_l: Option<f64>,
    /// Target `g_D,1/ω_1` of the lowest coupled mode.
    pub coupling_ratio: f64,
    pub grid_points: usize,
    #[serde(rename = "slab_center_over_L")]
    pub slab_center_over_l: f64,
    #[serde(rename = "slab_thickness_over_L")]
    pub slab_thickness_over_l: f64,
    pub slab_permittivity: f64,
    /// Two-column `x/L, ε_r` table replacing the slab.
    pub permittivity_file: Option<PathBuf>,
    pub field_positions: usize,
    pub sample_every: usize,
    pub sweep_start: f64,
    pub sweep_stop: f64,
    pub sweep_points: usize,
    /// Number of gaps `E_i − E_0`, `i = 1..`, reported per sweep point.
    pub spectra_gaps: usize,
    pub include_full: bool,
    /// Photon cutoff of the multilevel builders (no convergence loop).
    pub full_cutoff: usize,
    pub atom_levels: usize,
    pub self_energy_levels: usize,
    pub cutoff_step: usize,
    pub cutoff_max: usize,
    pub convergence_tol: f64,
    pub anharmonicity: f64,
    pub chain_profile: ChainProfile,
    pub max_dimension: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Periodic,
            mode_count: None,
            mode_count_convention: None,
            photon_cutoff: 6,
            truncation_kind: TruncationKind::TotalNumber,
            max_bond: 32,
            svd_cutoff: 1e-10,
            randomized_svd: false,
            seed: 0,
            splitting: Splitting::FirstOrder,
            dt_over_t: 1e-3,
            periods: 3.0,
            atom_position_over_l: None,
            coupling_ratio: 0.6,
            grid_points: 1001,
            slab_center_over_l: -0.25,
            slab_thickness_over_l: 0.125,
            slab_permittivity: 4.0,
            permittivity_file: None,
            field_positions: 201,
            sample_every: 10,
            sweep_start: 0.0,
            sweep_stop: 0.6,
            sweep_points: 4,
            spectra_gaps: 8,
            include_full: false,
            full_cutoff: 6,
            atom_levels: 40,
            self_energy_levels: 40,
            cutoff_step: 2,
            cutoff_max: 16,
            convergence_tol: 1e-6,
            anharmonicity: crate::atom::DEFAULT_ANHARMONICITY,
            chain_profile: ChainProfile::InverseSqrt,
            max_dimension: crate::fock::DEFAULT_MAX_DIMENSION,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> CqedError {
    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    CqedError::Parse {
        line,
        message: e.message().to_string(),
    }
}

/// Interpret an override value as TOML, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl RunConfig {
    /// Parse `key = value` text with defaults applied; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_error(text, e))
    }

    /// Parse and apply `key=value` overrides on top of the file contents.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| parse_error(text, e))?;
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CqedError::Config(format!("override `{item}` is not key=value")))?;
            table.insert(key.trim().to_string(), override_value(value));
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CqedError::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// SHA-256 of the configuration without its output directory.
    pub fn hash(&self) -> String {
        let mut copy = self.clone();
        copy.output_dir = PathBuf::new();
        let digest = Sha256::digest(copy.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count.unwrap_or(match self.scenario {
            Scenario::SpectraSweep => 5,
            Scenario::ChainmapDiagnostic => 100,
            _ => 20,
        })
    }

    pub fn mode_count_convention(&self) -> ModeCountConvention {
        self.mode_count_convention.unwrap_or(match self.scenario {
            Scenario::SpectraSweep | Scenario::CouplingProfile | Scenario::ChainmapDiagnostic => {
                ModeCountConvention::Total
            }
            _ => ModeCountConvention::Coupled,
        })
    }

    /// Atom position in units of `L` for the scenario's own placement.
    pub fn atom_position_over_l(&self) -> f64 {
        self.atom_position_over_l.unwrap_or(match self.scenario {
            Scenario::PecSlabEmbedded => self.slab_center_over_l,
            _ => 0.0,
        })
    }

    /// Total number of TEBD steps.
    pub fn steps(&self) -> usize {
        (self.periods / self.dt_over_t).round() as usize
    }

    /// The `g_D,1/ω_1` values of a spectra sweep.
    pub fn sweep_values(&self) -> Vec<f64> {
        if self.sweep_points == 1 {
            return vec![self.sweep_start];
        }
        (0..self.sweep_points)
            .map(|i| self.sweep_start + (self.sweep_stop - self.sweep_start) * i as f64 / (self.sweep_points - 1) as f64)
            .collect()
    }

    /// Every violated constraint, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if let Some(m) = self.mode_count {
            need(m >= 1, "mode_count: must be at least 1".into());
        }
        need(self.photon_cutoff >= 2, format!("photon_cutoff: must be at least 2, got {}", self.photon_cutoff));
        need(self.max_bond >= 1, "max_bond: must be at least 1".into());
        need(
            self.svd_cutoff.is_finite() && (0.0..1.0).contains(&self.svd_cutoff),
            format!("svd_cutoff: must lie in [0, 1), got {}", self.svd_cutoff),
        );
        need(positive(self.dt_over_t), format!("dt_over_T: must be positive, got {}", self.dt_over_t));
        need(positive(self.periods), format!("periods: must be positive, got {}", self.periods));
        if positive(self.dt_over_t) && positive(self.periods) {
            need(self.steps() >= 1, "periods: shorter than one time step".into());
        }
        let x = self.atom_position_over_l();
        need(
            x.is_finite() && (-0.5..=0.5).contains(&x),
            format!("atom_position_over_L: must lie in [-0.5, 0.5], got {x}"),
        );
        need(
            self.coupling_ratio.is_finite() && self.coupling_ratio >= 0.0,
            format!("coupling_ratio: must be non-negative, got {}", self.coupling_ratio),
        );
        need(self.grid_points >= 33, format!("grid_points: must be at least 33, got {}", self.grid_points));
        need(
            positive(self.slab_thickness_over_l) && self.slab_thickness_over_l < 1.0,
            format!("slab_thickness_over_L: must lie in (0, 1), got {}", self.slab_thickness_over_l),
        );
        need(
            self.slab_center_over_l.is_finite() && self.slab_center_over_l.abs() < 0.5,
            format!("slab_center_over_L: must lie in (-0.5, 0.5), got {}", self.slab_center_over_l),
        );
        need(
            self.slab_permittivity.is_finite() && self.slab_permittivity >= 1.0,
            format!("slab_permittivity: must be at least 1, got {}", self.slab_permittivity),
        );
        need(self.field_positions >= 2, "field_positions: must be at least 2".into());
        need(self.sample_every >= 1, "sample_every: must be at least 1".into());
        need(self.sweep_points >= 1, "sweep_points: must be at least 1".into());
        need(
            self.sweep_start.is_finite() && self.sweep_stop.is_finite() && self.sweep_start >= 0.0 && self.sweep_stop >= self.sweep_start,
            format!("sweep_start/sweep_stop: need 0 <= start <= stop, got {} and {}", self.sweep_start, self.sweep_stop),
        );
        need(self.spectra_gaps >= 1, "spectra_gaps: must be at least 1".into());
        need(self.full_cutoff >= 2, "full_cutoff: must be at least 2".into());
        need(self.atom_levels >= 2, "atom_levels: must be at least 2".into());
        need(
            self.self_energy_levels >= crate::hamiltonians::MIN_SELF_ENERGY_LEVELS,
            format!(
                "self_energy_levels: must be at least {}, got {}",
                crate::hamiltonians::MIN_SELF_ENERGY_LEVELS,
                self.self_energy_levels
            ),
        );
        need(self.cutoff_step >= 1, "cutoff_step: must be at least 1".into());
        need(
            self.cutoff_max >= self.photon_cutoff,
            format!("cutoff_max: must be at least photon_cutoff ({}), got {}", self.photon_cutoff, self.cutoff_max),
        );
        need(positive(self.convergence_tol), "convergence_tol: must be positive".into());
        need(
            self.anharmonicity.is_finite() && self.anharmonicity > 1.0,
            format!("anharmonicity: must exceed 1, got {}", self.anharmonicity),
        );
        need(self.max_dimension >= 2, "max_dimension: must be at least 2".into());
        if self.scenario == Scenario::ChainmapDiagnostic {
            need(self.coupling_ratio > 0.0, "coupling_ratio: must be positive for the chain diagnostic".into());
        }
        if self.scenario.is_dynamic() || self.scenario == Scenario::CouplingProfile {
            need(self.coupling_ratio > 0.0, "coupling_ratio: must be positive for this scenario".into());
        }
        if let Some(p) = &self.permittivity_file {
            if self.scenario.has_slab() {
                need(p.exists(), format!("permittivity_file: {} does not exist", p.display()));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CqedError::Validation(v))
        }
    }
}
