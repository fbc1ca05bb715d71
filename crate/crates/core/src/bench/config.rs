//! Scenario configuration read from a flat TOML file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::semantic_rate::{InterferenceProfile, LogisticRho, RhoTable};

/// Which interference profile the solver uses.
///
/// Written as `"default"`, `"constant:<rho>"`, `"table:<path>"` or
/// `"logistic:<rho_max>,<a>,<b>,<c>,<p_ref>"`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoProfileSpec {
    Default,
    Constant(f64),
    Table(PathBuf),
    Logistic([f64; 5]),
}

impl FromStr for RhoProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse rho profile {s:?}"));
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "default" if arg.is_empty() => Ok(RhoProfileSpec::Default),
            "constant" => arg.trim().parse().map(RhoProfileSpec::Constant).map_err(|_| bad()),
            "table" if !arg.trim().is_empty() => Ok(RhoProfileSpec::Table(PathBuf::from(arg.trim()))),
            "logistic" => {
                let v: Vec<f64> = arg
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?;
                let arr: [f64; 5] = v.try_into().map_err(|_| bad())?;
                Ok(RhoProfileSpec::Logistic(arr))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RhoProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoProfileSpec::Default => write!(f, "default"),
            RhoProfileSpec::Constant(v) => write!(f, "constant:{v}"),
            RhoProfileSpec::Table(p) => write!(f, "table:{}", p.display()),
            RhoProfileSpec::Logistic([m, a, b, c, r]) => write!(f, "logistic:{m},{a},{b},{c},{r}"),
        }
    }
}

impl<'de> Deserialize<'de> for RhoProfileSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl RhoProfileSpec {
    /// Builds the profile; relative table paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<InterferenceProfile> {
        match self {
            RhoProfileSpec::Default => Ok(InterferenceProfile::default_table()),
            RhoProfileSpec::Constant(v) => InterferenceProfile::constant(*v),
            RhoProfileSpec::Table(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                Ok(InterferenceProfile::Table(RhoTable::load(&path)?))
            }
            RhoProfileSpec::Logistic([m, a, b, c, r]) => {
                Ok(InterferenceProfile::Parametric(LogisticRho::new(*m, *a, *b, *c, *r)?))
            }
        }
    }
}

fn default_alpha() -> f64 {
    0.1
}
fn default_delta_max() -> u64 {
    4
}
fn default_min_rate() -> f64 {
    1.0
}
fn default_fnoma_eta() -> f64 {
    0.8
}
fn default_area_side() -> f64 {
    500.0
}
fn default_noise_dbw() -> f64 {
    -104.0
}
fn default_shadow_sigma() -> f64 {
    4.0
}
fn default_frame_window() -> u32 {
    6
}
fn default_true() -> bool {
    true
}

/// Inputs of a Monte Carlo sweep over user counts and power budgets.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub user_counts: Vec<usize>,
    pub p_max_dbw: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta_max")]
    pub delta_max: u64,
    #[serde(default = "default_min_rate")]
    pub min_rate: f64,
    #[serde(default)]
    pub rho_profile: RhoProfileSpecField,
    #[serde(default = "default_fnoma_eta")]
    pub fnoma_eta: f64,
    pub drops: usize,
    pub root_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_area_side")]
    pub area_side_m: f64,
    #[serde(default = "default_noise_dbw")]
    pub noise_dbw: f64,
    #[serde(default = "default_shadow_sigma")]
    pub shadow_sigma_db: f64,
    #[serde(default)]
    pub rayleigh: bool,
    /// Requested frames are drawn uniformly from `0..frame_window`.
    #[serde(default = "default_frame_window")]
    pub frame_window: u32,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

/// Wrapper so the profile field can default to the bundled table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct RhoProfileSpecField(pub RhoProfileSpec);

impl Default for RhoProfileSpecField {
    fn default() -> Self {
        RhoProfileSpecField(RhoProfileSpec::Default)
    }
}

impl ScenarioConfig {
    /// Config with the default physical setup and the given sweep axes.
    pub fn new(user_counts: Vec<usize>, p_max_dbw: Vec<f64>, drops: usize, root_seed: u64) -> Self {
        ScenarioConfig {
            user_counts,
            p_max_dbw,
            alpha: default_alpha(),
            delta_max: default_delta_max(),
            min_rate: default_min_rate(),
            rho_profile: RhoProfileSpecField::default(),
            fnoma_eta: default_fnoma_eta(),
            drops,
            root_seed,
            output: None,
            area_side_m: default_area_side(),
            noise_dbw: default_noise_dbw(),
            shadow_sigma_db: default_shadow_sigma(),
            rayleigh: false,
            frame_window: default_frame_window(),
            parallel: true,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.user_counts.is_empty() || self.p_max_dbw.is_empty() {
            return bad("user_counts and p_max_dbw must be non-empty".into());
        }
        if let Some(m) = self.user_counts.iter().find(|&&m| m < 2 || m % 2 != 0) {
            return bad(format!("user counts must be even and at least 2, got {m}"));
        }
        if let Some(p) = self.p_max_dbw.iter().find(|p| !p.is_finite()) {
            return bad(format!("p_max_dbw must be finite, got {p}"));
        }
        if self.drops == 0 {
            return bad("drops must be at least 1".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(self.min_rate >= 0.0 && self.min_rate.is_finite()) {
            return bad(format!("min_rate must be non-negative, got {}", self.min_rate));
        }
        if !(self.fnoma_eta > 0.0 && self.fnoma_eta < 1.0) {
            return bad(format!("fnoma_eta must lie in (0, 1), got {}", self.fnoma_eta));
        }
        if !(self.area_side_m > 0.0 && self.area_side_m.is_finite()) {
            return bad(format!("area_side_m must be positive, got {}", self.area_side_m));
        }
        if !self.noise_dbw.is_finite() {
            return bad("noise_dbw must be finite".into());
        }
        if !(self.shadow_sigma_db >= 0.0 && self.shadow_sigma_db.is_finite()) {
            return bad(format!("shadow_sigma_db must be non-negative, got {}", self.shadow_sigma_db));
        }
        if self.frame_window == 0 {
            return bad("frame_window must be at least 1".into());
        }
        Ok(())
    }

    pub fn profile(&self, base: Option<&Path>) -> Result<Arc<InterferenceProfile>> {
        self.rho_profile.0.build(base).map(Arc::new)
    }
}
