//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuits::{circuit_with_angles, CircuitSpec, PAPER_PHI, PAPER_THETA};
use crate::diagnostics::ResidualUnits;
use crate::error::{PoeError, Result};
use crate::liouville::{c, C64};
use crate::noise::NoiseSpec;
use crate::poe::{ProbeState, Sampling, SubsystemMode};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SHOTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitConfig {
    Preset(CircuitPreset),
    Explicit(CircuitSpec),
}

/// `{"preset": "paper"}` with optional angle overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitPreset {
    pub preset: PresetName,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub y_target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Paper,
}

impl CircuitConfig {
    pub fn build(&self) -> Result<CircuitSpec> {
        let circuit = match self {
            CircuitConfig::Preset(p) => circuit_with_angles(
                p.theta.unwrap_or(PAPER_THETA),
                p.phi.unwrap_or(PAPER_PHI),
                p.y_target.unwrap_or(0),
            ),
            CircuitConfig::Explicit(spec) => spec.clone(),
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

/// A basis label such as `"+0"` or a list of `[re, im]` amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateConfig {
    Label(String),
    Amplitudes(Vec<[f64; 2]>),
}

impl StateConfig {
    pub fn build(&self) -> Result<ProbeState> {
        match self {
            StateConfig::Label(l) => ProbeState::from_label(l),
            StateConfig::Amplitudes(a) => {
                let amps: Vec<C64> = a.iter().map(|[re, im]| c(*re, *im)).collect();
                ProbeState::from_amplitudes(&amps)
            }
        }
    }
}

fn default_a() -> StateConfig {
    StateConfig::Label("00".into())
}

fn default_b() -> StateConfig {
    StateConfig::Label("+0".into())
}

fn default_emulation() -> SubsystemMode {
    SubsystemMode::DirectMixed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    Recurrence,
    CrossState {
        #[serde(default = "default_a")]
        a: StateConfig,
        #[serde(default = "default_b")]
        b: StateConfig,
    },
    /// `initial_state` is the pure part on the first `d` qubits.
    Subsystem {
        d: usize,
        #[serde(default = "default_emulation")]
        emulation: SubsystemMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub window: Option<[usize; 2]>,
    pub alpha: f64,
    pub residual_units: ResidualUnits,
    pub exact_residual_tol_ppt: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let d = crate::diagnostics::FitOptions::default();
        Self {
            window: d.window,
            alpha: d.alpha,
            residual_units: d.residual_units,
            exact_residual_tol_ppt: d.exact_residual_tol_ppt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Series table: n, S_n, ln_S_n, variance, residual_ppt.
    Csv,
    /// Full report.
    Json,
    /// `ln S_n` with the fitted line.
    Svg,
    /// Residuals against n.
    ResidualSvg,
    /// Raw counts in the measurement-record format (sampled runs only).
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub kind: OutputKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub initial_state: Option<StateConfig>,
    #[serde(default = "default_mode")]
    pub mode: ModeConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub n_max: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

fn default_mode() -> ModeConfig {
    ModeConfig::Recurrence
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

/// Everything a run needs, checked and built.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub name: String,
    pub circuit: CircuitSpec,
    pub noise: NoiseSpec,
    pub mode: ResolvedMode,
    pub sampling: Sampling,
    pub fit: FitConfig,
    pub outputs: Vec<OutputSpec>,
}

#[derive(Debug, Clone)]
pub enum ResolvedMode {
    Recurrence(ProbeState),
    CrossState(ProbeState, ProbeState),
    Subsystem(ProbeState, SubsystemMode),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config; relative output paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for out in &mut cfg.outputs {
            if out.path.is_relative() {
                out.path = base.join(&out.path);
            }
        }
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(PoeError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_max < 3 {
            return Err(PoeError::InvalidArgument(format!("n_max must be at least 3, got {}", self.n_max)));
        }
        let seed = match (self.shots, self.seed) {
            (0, s) => s.unwrap_or(0),
            (_, Some(s)) => s,
            (_, None) => {
                return Err(PoeError::InvalidArgument("seed is required when shots > 0".into()))
            }
        };
        let circuit = self.circuit.build()?;
        self.noise.validate(circuit.n_qubits)?;
        let default_label = "0".repeat(circuit.n_qubits);
        let initial = self
            .initial_state
            .clone()
            .unwrap_or(StateConfig::Label(default_label));
        let mode = match &self.mode {
            ModeConfig::Recurrence => ResolvedMode::Recurrence(initial.build()?),
            ModeConfig::CrossState { a, b } => ResolvedMode::CrossState(a.build()?, b.build()?),
            ModeConfig::Subsystem { d, emulation } => {
                let probe = initial.build()?;
                if probe.n_qubits != *d {
                    return Err(PoeError::InvalidArgument(format!(
                        "subsystem d = {d} but initial_state covers {} qubits",
                        probe.n_qubits
                    )));
                }
                ResolvedMode::Subsystem(probe, *emulation)
            }
        };
        if let Some([lo, hi]) = self.fit.window {
            if lo < 1 || lo > hi || hi > self.n_max {
                return Err(PoeError::InvalidArgument(format!(
                    "fit window [{lo}, {hi}] must satisfy 1 <= lo <= hi <= n_max"
                )));
            }
        }
        if !(self.fit.alpha > 0.0 && self.fit.alpha < 1.0) {
            return Err(PoeError::InvalidArgument("fit.alpha must lie in (0, 1)".into()));
        }
        if self.shots == 0 && self.outputs.iter().any(|o| o.kind == OutputKind::Record) {
            return Err(PoeError::InvalidArgument(
                "record output needs sampled data (shots > 0)".into(),
            ));
        }
        Ok(ResolvedExperiment {
            name: self.name.clone().unwrap_or_else(|| "experiment".into()),
            circuit,
            noise: self.noise.clone(),
            mode,
            sampling: Sampling {
                n_max: self.n_max,
                shots: self.shots,
                seed,
            },
            fit: self.fit.clone(),
            outputs: self.outputs.clone(),
        })
    }
}
