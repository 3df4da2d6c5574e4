//! Config file schema and loader.
//!
//! A config is a JSON object with optional sections:
//!
//! ```json
//! {
//!   "profile": "cmos65nm",
//!   "technology": { ... },
//!   "architecture": { "kind": "qs_arch", "n": 128, "bx": 6, "bw": 6, "v_wl": 0.7 },
//!   "sweep": { "experiment": "custom", "grid": [{ "name": "n", "values": [32, 64] }] },
//!   "trials": { "n_dies": 200, "vectors_per_die": 100, "seed": 1 }
//! }
//! ```
//!
//! `technology` overrides `profile`; with neither, `cmos65nm` is used.
//! Unknown keys are rejected everywhere.

use super::presets;
use super::{Experiment, GridAxis, SweepSpec};
use crate::architectures::{AdcCoefficients, ArchKind, ArchitectureConfig, CmClipModel, InjectionModel, VcRule};
use crate::compute_models::TechnologyProfile;
use crate::montecarlo::{MismatchScope, NoiseSwitches};
use crate::snr_algebra::{DotProductSpec, SignalModel};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Signal distribution as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// `[0, range_max]` for inputs, `[−range_max, range_max]` for weights.
    Uniform { range_max: f64 },
    Gaussian { mean: f64, sigma: f64, range_max: f64 },
    Empirical { samples: Vec<f64> },
}

impl SignalSpec {
    fn model(&self, signed: bool) -> Result<SignalModel<f64>> {
        let m = match self {
            SignalSpec::Uniform { range_max } if signed => SignalModel::uniform_signed(*range_max),
            SignalSpec::Uniform { range_max } => SignalModel::uniform_unsigned(*range_max),
            SignalSpec::Gaussian { mean, sigma, range_max } => SignalModel::gaussian(*mean, *sigma, *range_max),
            SignalSpec::Empirical { samples } => SignalModel::empirical(samples.clone())?,
        };
        m.validate()?;
        Ok(m)
    }
}

/// `architecture` section. Omitted circuit values take the profile defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSection {
    pub kind: ArchKind,
    pub n: usize,
    pub bx: u32,
    pub bw: u32,
    #[serde(default)]
    pub v_wl: Option<f64>,
    #[serde(default)]
    pub c_bl: Option<f64>,
    #[serde(default)]
    pub c_o: Option<f64>,
    #[serde(default)]
    pub t_rise: f64,
    #[serde(default)]
    pub t_fall: f64,
    #[serde(default)]
    pub e_su: f64,
    #[serde(default)]
    pub t_su: f64,
    #[serde(default)]
    pub t_share: f64,
    #[serde(default)]
    pub e_misc: f64,
    #[serde(default)]
    pub adc: Option<AdcCoefficients<f64>>,
    #[serde(default)]
    pub vc_rule: VcRule,
    #[serde(default)]
    pub cm_clip: CmClipModel,
    #[serde(default)]
    pub injection: InjectionModel,
    #[serde(default)]
    pub input: Option<SignalSpec>,
    #[serde(default)]
    pub weight: Option<SignalSpec>,
    /// ADC precision; `None` uses the minimum-precision bound.
    #[serde(default)]
    pub b_adc: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub experiment: Experiment,
    #[serde(default)]
    pub grid: Vec<GridAxis>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub mc_enabled: bool,
}

/// Monte Carlo plan overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialOverrides {
    pub n_dies: usize,
    pub vectors_per_die: usize,
    pub seed: u64,
    pub mismatch: MismatchScope,
    pub noise: NoiseSwitches,
}

impl Default for TrialOverrides {
    fn default() -> Self {
        Self {
            n_dies: 1000,
            vectors_per_die: 100,
            seed: 1,
            mismatch: MismatchScope::default(),
            noise: NoiseSwitches::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub technology: Option<TechnologyProfile<f64>>,
    #[serde(default)]
    pub architecture: Option<ArchitectureSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub trials: Option<TrialOverrides>,
}

/// Fully resolved, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub technology: TechnologyProfile<f64>,
    /// Default bit-line capacitance of the profile.
    pub c_bl: f64,
    pub architecture: Option<ArchitectureConfig<f64>>,
    pub b_adc: Option<u32>,
    pub sweep: Option<SweepSpec>,
    pub trials: TrialOverrides,
}

impl ArchitectureSection {
    pub fn build(&self, tech: &TechnologyProfile<f64>, c_bl: f64) -> Result<ArchitectureConfig<f64>> {
        let mut dp = DotProductSpec::uniform(self.n);
        if let Some(s) = &self.input {
            dp.input = s.model(false)?;
        }
        if let Some(s) = &self.weight {
            dp.weight = s.model(true)?;
        }
        let mut cfg = ArchitectureConfig::qs_arch(tech.clone(), self.n, self.bx, self.bw, 0.8);
        cfg.kind = self.kind;
        cfg.dp = dp;
        cfg.c_bl = self.c_bl.unwrap_or(c_bl);
        if let Some(v) = self.v_wl {
            cfg.v_wl = v;
        }
        if let Some(c) = self.c_o {
            cfg.c_o = c;
        }
        cfg.t_rise = self.t_rise;
        cfg.t_fall = self.t_fall;
        cfg.e_su = self.e_su;
        cfg.t_su = self.t_su;
        cfg.t_share = self.t_share;
        cfg.e_misc = self.e_misc;
        if let Some(a) = self.adc {
            cfg.adc = a;
        }
        cfg.vc_rule = self.vc_rule;
        cfg.cm_clip = self.cm_clip;
        cfg.injection = self.injection;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_error(path: &str, e: serde_json::Error) -> Error {
    Error::Parse { path: path.to_string(), message: format!("line {} column {}: {e}", e.line(), e.column()) }
}

/// Parses and resolves config text. `profile` overrides the file's profile.
pub fn parse_config(text: &str, origin: &str, profile: Option<&str>) -> Result<Loaded> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
    resolve(file, profile)
}

pub fn resolve(file: ConfigFile, profile: Option<&str>) -> Result<Loaded> {
    let name = profile.or(file.profile.as_deref()).unwrap_or("cmos65nm");
    let preset = presets::preset(name)?;
    let technology = match file.technology {
        Some(t) if profile.is_none() => t,
        _ => preset.technology,
    };
    technology.validate()?;
    let architecture = file.architecture.as_ref().map(|a| a.build(&technology, preset.c_bl)).transpose()?;
    let b_adc = file.architecture.as_ref().and_then(|a| a.b_adc);
    let trials = file.trials.unwrap_or_default();
    let sweep = match file.sweep {
        Some(s) => {
            if s.experiment == Experiment::Custom {
                if architecture.is_none() {
                    return Err(Error::Config("custom sweep needs an architecture section".into()));
                }
                if s.grid.is_empty() || s.grid.iter().any(|g| g.values.is_empty()) {
                    return Err(Error::EmptySweep);
                }
            }
            let spec = SweepSpec {
                experiment: s.experiment,
                grid: s.grid,
                output_path: s.output_path,
                mc_enabled: s.mc_enabled,
                trials,
                technology: technology.clone(),
                c_bl: preset.c_bl,
                base: architecture.clone(),
            };
            spec.validate()?;
            Some(spec)
        }
        None => None,
    };
    Ok(Loaded { technology, c_bl: preset.c_bl, architecture, b_adc, sweep, trials })
}

/// Reads and resolves a config file.
pub fn load_config(path: &Path, profile: Option<&str>) -> Result<Loaded> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: shown.clone(), source })?;
    parse_config(&text, &shown, profile)
}
