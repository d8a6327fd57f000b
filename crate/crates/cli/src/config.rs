//! Run configuration: defaults, TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spin1_entangle::chain::theta_window;
use spin1_entangle::coupling::Backend;
use spin1_entangle::open_system::NoiseParams;
use spin1_entangle::ChainSpecF64;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Full,
    Resolvent,
}

impl From<BackendChoice> for Backend {
    fn from(b: BackendChoice) -> Self {
        match b {
            BackendChoice::Full => Backend::FullSpectrum,
            BackendChoice::Resolvent => Backend::Resolvent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendChoice,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    /// Adds a wall-clock line to the header. Off by default so identical
    /// runs produce identical files.
    pub timestamp: bool,
    pub chain: ChainSection,
    pub scaling: ScalingSection,
    pub surface: SurfaceSection,
    pub dynamics: DynamicsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub j: f64,
    pub j_p: f64,
    pub theta: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub chain_lens: Vec<usize>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub chain_len: usize,
    pub temperatures: Vec<f64>,
    pub thetas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    /// Chain used for `J_eff` unless `j_eff` is given.
    pub chain_len: usize,
    pub temperature: f64,
    pub n_bar: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub t_steps: usize,
    pub tol: f64,
    pub j_eff: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendChoice::Resolvent,
            threads: 0,
            seed: spin1_entangle::acceptance::DEFAULT_SEED,
            cache_dir: None,
            timestamp: false,
            chain: ChainSection::default(),
            scaling: ScalingSection::default(),
            surface: SurfaceSection::default(),
            dynamics: DynamicsSection::default(),
        }
    }
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection { j: 1.0, j_p: 0.1, theta: 0.0, omega: 0.0 }
    }
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection { chain_lens: vec![4, 6, 8, 10], temperature: 0.1 }
    }
}

impl Default for SurfaceSection {
    fn default() -> Self {
        SurfaceSection {
            chain_len: 6,
            temperatures: (1..=15).map(|k| 0.02 * k as f64).collect(),
            thetas: vec![-0.1, -0.075, -0.05, -0.025, 0.0, 0.025, 0.05, 0.075, 0.1],
        }
    }
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection {
            chain_len: 10,
            temperature: 0.01,
            n_bar: 1.0,
            gamma: 0.1,
            t_end: 50.0,
            t_steps: 501,
            tol: 1e-9,
            j_eff: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn spec(&self, chain_len: usize) -> ChainSpecF64 {
        ChainSpecF64::new(chain_len, self.chain.theta, self.chain.j_p).with_j(self.chain.j).with_omega(self.chain.omega)
    }

    pub fn noise(&self) -> Result<NoiseParams<f64>, CliError> {
        Ok(NoiseParams::new(self.dynamics.n_bar, self.dynamics.gamma)?)
    }

    /// Uniform grid `0, t_end/(n-1), …, t_end`.
    pub fn time_grid(&self) -> Vec<f64> {
        let d = &self.dynamics;
        if d.t_steps == 1 {
            return vec![0.0];
        }
        (0..d.t_steps).map(|k| d.t_end * k as f64 / (d.t_steps - 1) as f64).collect()
    }

    fn validate_chain(&self) -> Result<(), CliError> {
        let c = &self.chain;
        for (name, v) in [("j", c.j), ("j_p", c.j_p), ("theta", c.theta), ("omega", c.omega)] {
            if !v.is_finite() {
                return Err(CliError::Usage(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn validate_scaling(&self) -> Result<(), CliError> {
        self.validate_chain()?;
        let s = &self.scaling;
        if s.chain_lens.is_empty() {
            return Err(CliError::Usage("chain length list is empty".into()));
        }
        for &l in &s.chain_lens {
            self.spec(l).validate()?;
        }
        positive("temperature", s.temperature)
    }

    /// Angles outside the admissible window are allowed here; they become
    /// flagged rows.
    pub fn validate_surface(&self) -> Result<(), CliError> {
        self.validate_chain()?;
        let s = &self.surface;
        if s.temperatures.is_empty() || s.thetas.is_empty() {
            return Err(CliError::Usage("temperature and theta grids must be non-empty".into()));
        }
        if s.thetas.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Usage("theta grid must be finite".into()));
        }
        for &t in &s.temperatures {
            positive("temperature", t)?;
        }
        let probe = ChainSpecF64 { theta: 0.0, ..self.spec(s.chain_len) };
        probe.validate()?;
        Ok(())
    }

    pub fn validate_dynamics(&self) -> Result<(), CliError> {
        self.validate_chain()?;
        let d = &self.dynamics;
        positive("temperature", d.temperature)?;
        positive("tol", d.tol)?;
        self.noise()?;
        if d.t_steps == 0 {
            return Err(CliError::Usage("t_steps must be at least 1".into()));
        }
        if !(d.t_end >= 0.0 && d.t_end.is_finite()) {
            return Err(CliError::Usage(format!("t_end must be a non-negative number, got {}", d.t_end)));
        }
        match d.j_eff {
            Some(j) if !j.is_finite() => Err(CliError::Usage("j_eff must be finite".into())),
            Some(_) => Ok(()),
            None => Ok(self.spec(d.chain_len).validate()?),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(spin1_entangle::Error::Domain(format!("{name} must be positive, got {v}")).into())
    }
}

pub fn in_window(theta: f64) -> bool {
    theta.abs() < theta_window()
}
