//! TOML experiment configs and their manifests.
//!
//! ```toml
//! level = "sip"            # sip | auxiliary | wf-absorption | limit | corner-chain
//! kernel = "cycle:4"       # or a matrix: [[0, 1], [1, 0]]
//! alpha = 1.0
//! replicas = 4
//! seed = 1
//! horizon = 10.0
//! sample_interval = 0.01
//! start = [0.25, 0.25, 0.25, 0.25]
//!
//! [sip]
//! n = 1000
//! m = 0.01
//! ```
//!
//! Unknown keys are rejected. Each level needs its own section (`[sip]`,
//! `[auxiliary]`, `[limit]`); `[wf]` is optional. A manifest is the fully
//! resolved config with every default written out, and re-running it
//! reproduces the outputs byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::{default_dt, BoundaryRule, DriftConvention, SdeParams};
use crate::error::{Error, Result};
use crate::kernel::{validate_kernel, AbsorbingPredicateConfig, KernelFamily, RateKernel};
use crate::limit::{CoefficientConvention, LimitParams, LimitState};
use crate::simplex::{sample_grid, SimplexPoint};
use crate::sip::{ParticleConfig, SipParams, DEFAULT_EVENT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Sip,
    Auxiliary,
    WfAbsorption,
    Limit,
    CornerChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Family(String),
    Matrix(Vec<Vec<f64>>),
}

impl KernelSpec {
    pub fn build(&self) -> Result<RateKernel> {
        match self {
            KernelSpec::Family(s) => RateKernel::from_family(&s.parse::<KernelFamily>()?),
            KernelSpec::Matrix(m) => validate_kernel(m),
        }
    }
}

fn default_budget() -> u64 {
    DEFAULT_EVENT_BUDGET
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SipSection {
    pub n: u64,
    pub m: f64,
    #[serde(default = "default_budget")]
    pub event_budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliarySection {
    pub theta: f64,
    /// Defaults to `min(1e-4, 1e-2/θ)`.
    pub dt: Option<f64>,
    #[serde(default)]
    pub drift: DriftConvention,
    #[serde(default)]
    pub boundary: BoundaryRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    pub dt: f64,
    #[serde(default)]
    pub convention: CoefficientConvention,
}

fn default_epsilon() -> f64 {
    AbsorbingPredicateConfig::SDE.epsilon()
}

fn default_max_time() -> f64 {
    1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    /// Defaults to `1e-4`.
    pub dt: Option<f64>,
}

impl Default for WfSection {
    fn default() -> Self {
        WfSection { epsilon: default_epsilon(), max_time: default_max_time(), dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub level: Level,
    pub kernel: KernelSpec,
    pub alpha: f64,
    pub replicas: usize,
    pub seed: u64,
    pub horizon: f64,
    pub sample_interval: f64,
    /// Initial point on the simplex; a corner for `corner-chain`.
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sip: Option<SipSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<AuxiliarySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wf: Option<WfSection>,
}

/// Validated, ready-to-run form of an [`ExperimentConfig`].
#[derive(Debug, Clone)]
pub struct Plan {
    pub kernel: RateKernel,
    pub start: SimplexPoint,
    pub grid: Vec<f64>,
    pub level: LevelPlan,
}

#[derive(Debug, Clone)]
pub enum LevelPlan {
    Sip(SipParams, ParticleConfig),
    Auxiliary(SdeParams),
    WfAbsorption(SdeParams, AbsorbingPredicateConfig),
    Limit(LimitParams, LimitState),
    CornerChain(usize),
}

/// Wraps a validation failure so the message names the offending key.
fn at<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(format!("`{key}`: {other}")),
    })
}

fn section<T: Copy>(s: Option<T>, name: &str, level: &str) -> Result<T> {
    s.ok_or_else(|| Error::Config(format!("missing section `[{name}]` required by level `{level}`")))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The manifest text: this config with defaults resolved.
    pub fn manifest(&self) -> Result<String> {
        let mut resolved = self.clone();
        if resolved.level == Level::WfAbsorption && resolved.wf.is_none() {
            resolved.wf = Some(WfSection::default());
        }
        if let Some(aux) = resolved.auxiliary.as_mut() {
            aux.dt.get_or_insert(default_dt(aux.theta));
        }
        if let Some(wf) = resolved.wf.as_mut() {
            wf.dt.get_or_insert(1e-4);
        }
        toml::to_string(&resolved).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn plan(&self) -> Result<Plan> {
        if self.replicas == 0 {
            return Err(Error::Config("`replicas` must be at least 1".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config("`horizon` must be positive and finite".into()));
        }
        if !(self.sample_interval > 0.0) || self.sample_interval > self.horizon {
            return Err(Error::Config("`sample_interval` must lie in (0, horizon]".into()));
        }
        let kernel = at("kernel", self.kernel.build())?;
        let start = at("start", SimplexPoint::with_tolerance(self.start.clone(), 1e-9))?;
        if start.len() != kernel.site_count() {
            return Err(Error::Config(format!(
                "`start` has {} entries but the kernel has {} sites",
                start.len(),
                kernel.site_count()
            )));
        }
        let grid = sample_grid(self.horizon, self.sample_interval);
        let level = match self.level {
            Level::Sip => {
                let s = section(self.sip, "sip", "sip")?;
                let params = at("alpha", SipParams::new(s.n, s.m, self.alpha))?.with_event_budget(s.event_budget);
                let init = at("start", ParticleConfig::from_simplex(&start, s.n))?;
                LevelPlan::Sip(params, init)
            }
            Level::Auxiliary => {
                let s = section(self.auxiliary, "auxiliary", "auxiliary")?;
                let mut params = at("auxiliary.theta", SdeParams::new(self.alpha, s.theta))?
                    .with_drift(s.drift)
                    .with_boundary(s.boundary);
                if let Some(dt) = s.dt {
                    params = at("auxiliary.dt", params.with_dt(dt))?;
                }
                LevelPlan::Auxiliary(params)
            }
            Level::WfAbsorption => {
                let s = self.wf.unwrap_or_default();
                let mut params = at("wf.max_time", SdeParams::pure_wright_fisher().with_max_time(s.max_time))?;
                if let Some(dt) = s.dt {
                    params = at("wf.dt", params.with_dt(dt))?;
                }
                LevelPlan::WfAbsorption(params, at("wf.epsilon", AbsorbingPredicateConfig::new(s.epsilon))?)
            }
            Level::Limit => {
                let s = section(self.limit, "limit", "limit")?;
                let params = at("limit.dt", LimitParams::new(self.alpha, s.convention, s.dt))?;
                LevelPlan::Limit(params, at("start", LimitState::new(start.clone(), &kernel))?)
            }
            Level::CornerChain => {
                if !(self.alpha > 0.0) {
                    return Err(Error::Config(format!("`alpha`: must be positive, got {}", self.alpha)));
                }
                let site = start
                    .as_corner(0.0)
                    .ok_or_else(|| Error::Config("`start` must be a corner for level `corner-chain`".into()))?;
                LevelPlan::CornerChain(site)
            }
        };
        Ok(Plan { kernel, start, grid, level })
    }
}
