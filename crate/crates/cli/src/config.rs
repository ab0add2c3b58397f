//! Run configuration for grid-scan subcommands, loaded from a single TOML
//! document so every run is reproducible from one file.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use dust_core::circuit::{CircuitSpec, ResonatorSpec};
use dust_core::hybridization::{default_ng_samples, FitDegrees, LandscapeSettings};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub circuit: CircuitBlock,
    pub drive: DriveBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
    /// Optional spurious-mode registry path, resolved relative to the
    /// config file.
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitBlock {
    pub ej_ghz: f64,
    pub ec_ghz: f64,
    #[serde(default = "default_cutoff")]
    pub charge_cutoff: usize,
    pub resonator: Option<ResonatorBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorBlock {
    pub omega_r_ghz: f64,
    pub g_ghz: f64,
    #[serde(default = "default_fock")]
    pub fock_cutoff: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveBlock {
    pub omega_d_ghz: GridBlock,
    pub xi2: GridBlock,
    #[serde(default = "default_ng_count")]
    pub ng_samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default = "default_level")]
    pub level: usize,
    #[serde(default = "default_overlap_cutoff")]
    pub overlap_cutoff: f64,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            level: default_level(),
            overlap_cutoff: default_overlap_cutoff(),
            truncation: default_truncation(),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

fn default_cutoff() -> usize {
    40
}
fn default_fock() -> usize {
    5
}
fn default_ng_count() -> usize {
    3
}
fn default_level() -> usize {
    1
}
fn default_overlap_cutoff() -> f64 {
    dust_core::hybridization::DEFAULT_CUTOFF
}
fn default_truncation() -> usize {
    25
}

impl GridBlock {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<(), String> {
        if self.points == 0 {
            return Err(format!("{name}.points must be positive"));
        }
        if self.points > 1 && self.stop <= self.start {
            return Err(format!("{name}.stop must exceed {name}.start"));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.validate(path)?;
        Ok((cfg, text))
    }

    fn validate(&self, path: &Path) -> Result<(), String> {
        if self.circuit.ej_ghz <= 0.0 || self.circuit.ec_ghz <= 0.0 {
            return Err("circuit.ej_ghz and circuit.ec_ghz must be positive".into());
        }
        self.drive.omega_d_ghz.validate("drive.omega_d_ghz")?;
        self.drive.xi2.validate("drive.xi2")?;
        if self.drive.xi2.start != 0.0 {
            return Err("drive.xi2.start must be 0 (sweeps seed on the bare states)".into());
        }
        if self.drive.ng_samples == 0 {
            return Err("drive.ng_samples must be positive".into());
        }
        if let Some(reg) = &self.registry {
            let resolved = resolve(path, reg);
            if !resolved.exists() {
                return Err(format!("registry file {} does not exist", resolved.display()));
            }
        }
        Ok(())
    }

    pub fn circuit_spec(&self) -> CircuitSpec {
        CircuitSpec {
            e_j: self.circuit.ej_ghz,
            e_c: self.circuit.ec_ghz,
            n_g: 0.0,
            charge_cutoff: self.circuit.charge_cutoff,
        }
    }

    pub fn resonator_spec(&self) -> Option<ResonatorSpec> {
        self.circuit.resonator.as_ref().map(|r| ResonatorSpec {
            omega_r: r.omega_r_ghz,
            g: r.g_ghz,
            fock_cutoff: r.fock_cutoff,
        })
    }

    pub fn ng_samples(&self) -> Vec<f64> {
        default_ng_samples(self.drive.ng_samples)
    }

    pub fn landscape_settings(&self) -> LandscapeSettings {
        LandscapeSettings {
            cutoff: self.analysis.overlap_cutoff,
            degrees: FitDegrees::default(),
            truncation: self.analysis.truncation,
        }
    }

    /// Output directory: `DUST_OUTPUT_DIR` overrides the config, which
    /// defaults to the current directory.
    pub fn output_dir(&self) -> PathBuf {
        if let Ok(env) = std::env::var("DUST_OUTPUT_DIR") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

}

fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

/// FNV-1a over the raw config text; stamped into every output for
/// provenance.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
