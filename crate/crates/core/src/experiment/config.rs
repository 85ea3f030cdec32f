//! TOML experiment configuration and its resolution into concrete settings.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exact::{LanczosSettings, DEFAULT_DENSE_CAP};
use crate::mcmc::DEFAULT_BURN_IN;
use crate::scalar::Scalar;

pub const DEFAULT_TIM_LENGTH: usize = 20;
pub const DEFAULT_BLBQ_LENGTH: usize = 8;
pub const DEFAULT_OUTPUT: &str = "cmcs_results.csv";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub experiment: RunConfig,
    #[serde(default)]
    pub exact: ExactConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn output_path(&self) -> PathBuf {
        self.output.path.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Tim,
    Blbq,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub kind: ModelKind,
    pub length: Option<usize>,
    pub j: Option<f64>,
    pub h_x: Option<f64>,
    pub h_z: Option<f64>,
    pub theta: Option<f64>,
    pub preset: Option<String>,
}

/// A fully resolved Hamiltonian choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Tim { len: usize, j: f64, h_x: f64, h_z: f64 },
    Blbq { len: usize, j: f64, theta: f64 },
}

impl Model {
    pub fn len(&self) -> usize {
        match *self {
            Model::Tim { len, .. } | Model::Blbq { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn local_dim(&self) -> usize {
        match self {
            Model::Tim { .. } => 2,
            Model::Blbq { .. } => 3,
        }
    }
}

/// The four tilted Ising phases, with fields expressed through `|J|`.
pub fn tim_preset(name: &str, j: f64) -> Result<(f64, f64, f64)> {
    let a = j.abs();
    match name.to_ascii_lowercase().as_str() {
        "pm" | "paramagnetic" => Ok((a, 10.0 * a, 0.5 * a)),
        "critical" => Ok((a, 0.95 * a, 0.5 * a)),
        "afm" | "antiferromagnetic" => Ok((a, 0.5 * a, 0.5 * a)),
        "fm" | "ferromagnetic" => Ok((-a, 0.5 * a, 0.5 * a)),
        other => Err(Error::Config(format!("unknown tilted Ising preset '{other}' (pm, critical, afm, fm)"))),
    }
}

pub fn blbq_preset(name: &str) -> Result<f64> {
    match name.to_ascii_lowercase().as_str() {
        "afh" | "heisenberg" => Ok(0.0),
        "aklt" => Ok((1.0f64 / 3.0).atan()),
        "critical" => Ok(std::f64::consts::FRAC_PI_4),
        "fm" | "ferromagnetic" => Ok(2.0 * std::f64::consts::PI / 3.0),
        other => Err(Error::Config(format!("unknown spin-1 preset '{other}' (afh, aklt, critical, fm)"))),
    }
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<Model> {
        let j = self.j.unwrap_or(1.0);
        match self.kind {
            ModelKind::Tim => {
                if self.theta.is_some() {
                    return Err(Error::Config("theta is not a tilted Ising parameter".into()));
                }
                let len = self.length.unwrap_or(DEFAULT_TIM_LENGTH);
                let (j, h_x, h_z) = match &self.preset {
                    Some(name) => {
                        if self.h_x.is_some() || self.h_z.is_some() {
                            return Err(Error::Config("give either a preset or explicit h_x/h_z, not both".into()));
                        }
                        tim_preset(name, j)?
                    }
                    None => (j, self.h_x.unwrap_or(0.5 * j.abs()), self.h_z.unwrap_or(0.5 * j.abs())),
                };
                Ok(Model::Tim { len, j, h_x, h_z })
            }
            ModelKind::Blbq => {
                if self.h_x.is_some() || self.h_z.is_some() {
                    return Err(Error::Config("h_x/h_z are not spin-1 parameters".into()));
                }
                let len = self.length.unwrap_or(DEFAULT_BLBQ_LENGTH);
                let theta = match (&self.preset, self.theta) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("give either a preset or an explicit theta, not both".into()))
                    }
                    (Some(name), None) => blbq_preset(name)?,
                    (None, Some(t)) => t,
                    (None, None) => blbq_preset("aklt")?,
                };
                Ok(Model::Blbq { len, j, theta })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    #[default]
    Ground,
    Thermal,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default)]
    pub kind: ModeKind,
    #[serde(default)]
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// First region site, 1-based. Centered when absent.
    pub start: Option<usize>,
    #[serde(default = "default_region_length")]
    pub length: usize,
    /// Re-center the region on each observable's support.
    #[serde(default)]
    pub follow_observable: bool,
}

fn default_region_length() -> usize {
    4
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            start: None,
            length: default_region_length(),
            follow_observable: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    /// Only `"random"` is accepted.
    Named(String),
    /// Explicit site values, site 0 first.
    Values(Vec<u8>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Steps between retained samples; defaults to the chain length.
    pub thin: Option<usize>,
    pub init: Option<InitSpec>,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            thin: None,
            init: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mcmc,
    Cmcs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mcmc => "mcmc",
            Method::Cmcs => "cmcs",
        }
    }

    pub(crate) fn seed_tag(self) -> u64 {
        match self {
            Method::Mcmc => 1,
            Method::Cmcs => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcmc" => Ok(Method::Mcmc),
            "cmcs" => Ok(Method::Cmcs),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_mcmc_samples")]
    pub mcmc_samples: Vec<usize>,
    #[serde(default = "default_cmcs_samples")]
    pub cmcs_samples: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Mcmc, Method::Cmcs]
}

fn default_mcmc_samples() -> Vec<usize> {
    vec![10_000]
}

fn default_cmcs_samples() -> Vec<usize> {
    vec![200]
}

fn default_replicates() -> usize {
    10
}

fn default_workers() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            observables: Vec::new(),
            methods: default_methods(),
            mcmc_samples: default_mcmc_samples(),
            cmcs_samples: default_cmcs_samples(),
            replicates: default_replicates(),
            seed: 0,
            workers: default_workers(),
        }
    }
}

impl RunConfig {
    pub fn samples_for(&self, method: Method) -> &[usize] {
        match method {
            Method::Mcmc => &self.mcmc_samples,
            Method::Cmcs => &self.cmcs_samples,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    #[serde(default = "default_tol")]
    pub lanczos_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
    pub snapshot_dir: Option<PathBuf>,
}

fn default_tol() -> f64 {
    LanczosSettings::<f64>::default().tol
}

fn default_max_iter() -> usize {
    LanczosSettings::<f64>::default().max_iter
}

fn default_krylov_dim() -> usize {
    LanczosSettings::<f64>::default().krylov_dim
}

fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            lanczos_tol: default_tol(),
            max_iter: default_max_iter(),
            krylov_dim: default_krylov_dim(),
            dense_cap: default_dense_cap(),
            snapshot_dir: None,
        }
    }
}

impl ExactConfig {
    pub fn lanczos<T: Scalar>(&self) -> LanczosSettings<T> {
        LanczosSettings {
            tol: T::of(self.lanczos_tol),
            max_iter: self.max_iter,
            krylov_dim: self.krylov_dim,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "h_x")]
    HX,
    #[serde(rename = "beta")]
    Beta,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::HX => "h_x",
            SweepAxis::Beta => "beta",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A requested observable; sites are stored 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObservableRequest {
    Sz(usize),
    SzSz(usize, usize),
    Sx(usize),
    Connected(usize, usize),
}

impl ObservableRequest {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableRequest::Sz(_) => "sz",
            ObservableRequest::SzSz(..) => "szsz",
            ObservableRequest::Sx(_) => "sx",
            ObservableRequest::Connected(..) => "connected",
        }
    }

    pub fn sites(&self) -> Vec<usize> {
        match *self {
            ObservableRequest::Sz(i) | ObservableRequest::Sx(i) => vec![i],
            ObservableRequest::SzSz(i, j) | ObservableRequest::Connected(i, j) => vec![i, j],
        }
    }

    /// Space-separated 1-based site list, as written to CSV.
    pub fn sites_label(&self) -> String {
        self.sites().iter().map(|s| (s + 1).to_string()).collect::<Vec<_>>().join(" ")
    }
}

impl FromStr for ObservableRequest {
    type Err = Error;

    /// Parses `name:site[,site]` with 1-based sites, e.g. `szsz:10,11`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("observable '{s}': {why}"));
        let (name, list) = s.split_once(':').ok_or_else(|| bad("expected name:sites"))?;
        let sites = list
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(0) => Err(bad("sites are 1-based")),
                Ok(v) => Ok(v - 1),
                Err(_) => Err(bad("site is not a positive integer")),
            })
            .collect::<Result<Vec<_>>>()?;
        match (name.trim(), sites.as_slice()) {
            ("sz", &[i]) => Ok(ObservableRequest::Sz(i)),
            ("sx", &[i]) => Ok(ObservableRequest::Sx(i)),
            ("szsz", &[i, j]) => Ok(ObservableRequest::SzSz(i, j)),
            ("connected", &[i, j]) => Ok(ObservableRequest::Connected(i, j)),
            ("sz" | "sx" | "szsz" | "connected", _) => Err(bad("wrong number of sites")),
            _ => Err(bad("unknown name (sz, szsz, sx, connected)")),
        }
    }
}

impl fmt::Display for ObservableRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.sites().iter().map(|s| (s + 1).to_string()).collect();
        write!(f, "{}:{}", self.name(), sites.join(","))
    }
}
