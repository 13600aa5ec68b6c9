use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ecd_core::quantum::{attenuator, phase_flip, unitary_evolution, Channel, ChannelSpec, Hamiltonian};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// `{"from", "to", "count", "scale"}`; endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub scale: Scale,
}

fn linear() -> Scale {
    Scale::Linear
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.count == 0 {
            return Err(CliError::Config("grid count must be at least 1".into()));
        }
        if !self.from.is_finite() || !self.to.is_finite() {
            return Err(CliError::Config("grid endpoints must be finite".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.from]);
        }
        let n = (self.count - 1) as f64;
        match self.scale {
            Scale::Linear => Ok((0..self.count).map(|k| self.from + (self.to - self.from) * k as f64 / n).collect()),
            Scale::Log => {
                if !(self.from > 0.0 && self.to > 0.0) {
                    return Err(CliError::Config("log grid endpoints must be positive".into()));
                }
                let (a, b) = (self.from.ln(), self.to.ln());
                Ok((0..self.count)
                    .map(|k| match k {
                        0 => self.from,
                        k if k == self.count - 1 => self.to,
                        k => (a + (b - a) * k as f64 / n).exp(),
                    })
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    List(Vec<f64>),
    Grid(Grid),
}

/// Built-in channel, instantiated at the configured truncation dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelRecipe {
    /// `η` is the amplitude transmissivity.
    Attenuator {
        eta: f64,
    },
    Identity,
    PhaseFlip,
    /// `exp(−itH)` with the configured Hamiltonian.
    UnitaryEvolution {
        t: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, Param>,
    /// Channel spec files, relative to the config file.
    #[serde(default)]
    pub channel_refs: Vec<PathBuf>,
    #[serde(default)]
    pub channels: Vec<ChannelRecipe>,
    /// Assembled problem JSON (map, Hamiltonian and energy), for `norm`.
    #[serde(default)]
    pub problem_ref: Option<PathBuf>,
    /// Input spectrum; defaults to the number operator on `truncation_dim` levels.
    #[serde(default)]
    pub hamiltonian: Option<Vec<f64>>,
    #[serde(default = "default_dim")]
    pub truncation_dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_dim() -> usize {
    16
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for r in &mut cfg.channel_refs {
            if r.is_relative() {
                *r = base.join(&*r);
            }
        }
        if let Some(p) = &mut cfg.problem_ref {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.truncation_dim < 2 {
            return Err(CliError::Config(format!("truncation_dim must be at least 2, got {}", self.truncation_dim)));
        }
        for r in &self.channel_refs {
            if !r.is_file() {
                return Err(CliError::Config(format!("channel spec {} does not exist", r.display())));
            }
        }
        if let Some(p) = &self.problem_ref {
            if !p.is_file() {
                return Err(CliError::Config(format!("problem file {} does not exist", p.display())));
            }
        }
        for (name, p) in &self.parameters {
            match p {
                Param::List(v) if v.is_empty() => {
                    return Err(CliError::Config(format!("parameter {name} is an empty list")))
                }
                Param::Grid(g) => {
                    g.values().map_err(|e| CliError::Config(format!("parameter {name}: {e}")))?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn number(&self, name: &str, default: Option<f64>) -> Result<f64, CliError> {
        match self.parameters.get(name) {
            Some(Param::Number(x)) => Ok(*x),
            Some(_) => Err(CliError::Config(format!("parameter {name} must be a number"))),
            None => default.ok_or_else(|| CliError::Config(format!("missing parameter {name}"))),
        }
    }

    pub fn count(&self, name: &str, default: usize) -> Result<usize, CliError> {
        let x = self.number(name, Some(default as f64))?;
        if x < 0.0 || x.fract() != 0.0 {
            return Err(CliError::Config(format!("parameter {name} must be a non-negative integer")));
        }
        Ok(x as usize)
    }

    /// A grid, list or single number as a list of values.
    pub fn values(&self, name: &str, default: Option<&[f64]>) -> Result<Vec<f64>, CliError> {
        match self.parameters.get(name) {
            Some(Param::Number(x)) => Ok(vec![*x]),
            Some(Param::List(v)) => Ok(v.clone()),
            Some(Param::Grid(g)) => g.values(),
            None => default.map(<[f64]>::to_vec).ok_or_else(|| CliError::Config(format!("missing parameter {name}"))),
        }
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian, CliError> {
        match &self.hamiltonian {
            Some(s) => Hamiltonian::new(s.clone()).map_err(|e| CliError::Config(format!("hamiltonian: {e}"))),
            None => Ok(Hamiltonian::number_operator(self.truncation_dim)),
        }
    }

    /// Channels from `channel_refs` followed by `channels`.
    pub fn load_channels(&self, h: &Hamiltonian) -> Result<Vec<Channel>, CliError> {
        let mut out = Vec::new();
        for r in &self.channel_refs {
            out.push(load_channel_spec(r)?);
        }
        for recipe in &self.channels {
            let dim = h.dim();
            let ch = match recipe {
                ChannelRecipe::Attenuator { eta } => attenuator(*eta, dim),
                ChannelRecipe::Identity => Ok(Channel::identity(dim)),
                ChannelRecipe::PhaseFlip if dim == 2 => Ok(phase_flip()),
                ChannelRecipe::PhaseFlip => {
                    return Err(CliError::Config(format!("phase-flip needs a qubit, dimension is {dim}")))
                }
                ChannelRecipe::UnitaryEvolution { t } => Ok(unitary_evolution(h, *t)),
            };
            out.push(ch.map_err(|e| CliError::Config(format!("channel {recipe:?}: {e}")))?);
        }
        Ok(out)
    }
}

pub fn load_channel_spec(path: &Path) -> Result<Channel, CliError> {
    read_spec(path)?.to_channel().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn read_spec(path: &Path) -> Result<ChannelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read channel spec {}: {e}", path.display())))?;
    ChannelSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
