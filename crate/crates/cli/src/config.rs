//! Experiment configuration. TOML on disk; a run manifest (JSON) is also
//! accepted and its resolved config is used verbatim.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lrwave_core::limits::{LimitKind, Normalization, MIN_RESOLUTION};
use lrwave_core::medium::{A2Options, MediumSpec};
use lrwave_core::pulse::{SourcePulse, SourceSpec};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Synth,
    Propagate,
    Sweep,
    Limits,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Synth => "synth",
            Mode::Propagate => "propagate",
            Mode::Sweep => "sweep",
            Mode::Limits => "limits",
            Mode::Verify => "verify",
        };
        f.write_str(s)
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_realizations() -> usize {
    1
}
fn default_limit_n() -> usize {
    1 << 16
}
fn default_cov_grid() -> usize {
    8
}
fn default_sh_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { n_realizations: default_realizations(), base_seed: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    /// Highest frequency index propagated; defaults to the source band edge.
    #[serde(default)]
    pub k_max: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub epsilons: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub process: LimitKind,
    #[serde(default = "default_limit_n")]
    pub n: usize,
    #[serde(default)]
    pub normalization: Normalization,
    /// Also write the increasing and periodic multifractional trajectories.
    #[serde(default)]
    pub figures: bool,
    /// Side of the covariance oracle table (points i/g, i = 1..=g).
    #[serde(default = "default_cov_grid")]
    pub cov_grid: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criterion ids to run; empty runs all of them.
    #[serde(default)]
    pub criteria: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the multifractional covariance quadrature.
    #[serde(default = "default_sh_tol")]
    pub sh_quadrature: f64,
    /// Covariance-assumption diagnostic run in synth mode.
    #[serde(default)]
    pub a2: A2Options,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { sh_quadrature: default_sh_tol(), a2: A2Options::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub medium: Option<MediumSpec>,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub frequency: FrequencyConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub limits: Option<LimitsConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Parse TOML config text.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parse a JSON config or a run manifest.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("artifacts").is_some() {
            let m: RunManifest = serde_json::from_value(value)?;
            Ok(m.config)
        } else {
            Ok(serde_json::from_value(value)?)
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.with_context(|| format!("parsing {}", path.display()))
    }

    pub fn medium(&self) -> anyhow::Result<&MediumSpec> {
        self.medium.as_ref().with_context(|| format!("{} mode needs a [medium] section", self.mode))
    }

    pub fn limits(&self) -> anyhow::Result<&LimitsConfig> {
        self.limits.as_ref().with_context(|| format!("{} mode needs a [limits] section", self.mode))
    }

    /// Checks every constraint that can be decided before running.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.ensemble.n_realizations == 0 {
            bail!("ensemble.n_realizations must be at least 1");
        }
        if let Some(m) = &self.medium {
            if m.seed != 0 {
                bail!("medium.seed is derived per realization; set ensemble.base_seed instead");
            }
            m.validate()?;
        }
        if let Some(l) = &self.limits {
            if l.n == 0 {
                bail!("limits.n = 0: the trajectory grid is empty");
            }
            if l.n < MIN_RESOLUTION {
                bail!("limits.n = {} is below the minimum resolution {MIN_RESOLUTION}", l.n);
            }
            if l.figures && l.n - 1 < MIN_RESOLUTION {
                bail!("figure trajectories need limits.n > {MIN_RESOLUTION}");
            }
            if l.cov_grid == 0 {
                bail!("limits.cov_grid must be at least 1");
            }
        }
        if self.tolerances.sh_quadrature.is_nan() || self.tolerances.sh_quadrature <= 0.0 {
            bail!("tolerances.sh_quadrature must be positive");
        }
        let source_needed = matches!(self.mode, Mode::Propagate | Mode::Sweep);
        if source_needed {
            let f = SourcePulse::new(&self.source)?;
            if let Some(k) = self.frequency.k_max {
                if k >= f.len() / 2 {
                    bail!("frequency.k_max = {k} must be below samples/2 = {}", f.len() / 2);
                }
            }
        }
        match self.mode {
            Mode::Synth | Mode::Propagate => {
                self.medium()?;
            }
            Mode::Sweep => {
                let m = self.medium()?;
                if self.sweep.epsilons.is_empty() {
                    bail!("sweep mode needs a non-empty sweep.epsilons list");
                }
                for &eps in &self.sweep.epsilons {
                    let mut cell = m.clone();
                    cell.epsilon = eps;
                    cell.validate().with_context(|| format!("sweep cell epsilon = {eps}"))?;
                }
            }
            Mode::Limits => {
                self.limits()?;
            }
            Mode::Verify => {
                for &id in &self.verify.criteria {
                    if !(1..=lrwave_core::verify::CRITERIA.len()).contains(&id) {
                        bail!("unknown criterion id {id}");
                    }
                }
            }
        }
        Ok(())
    }
}
