//! TOML configuration for model templates and Monte-Carlo experiments.
//!
//! ```toml
//! n = 1000
//! k = 2
//! model = "dcbm"                  # bm | dcbm | general
//! p = [[1.0, 0.5], [0.5, 1.0]]    # nested rows, or flat row-major
//! theta = { kind = "uniform", params = [0.15, 1.0] }
//! membership = { kind = "uniform-random" }
//! noise = { kind = "gaussian", params = [0.5] }   # general model only
//! ```
//!
//! Experiment configs wrap a template under `[model]` and add `methods`,
//! `metric`, `reps`, `seed`, `delta` and an optional `output` path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{KChoice, Method};
use crate::error::{Error, Result};
use crate::estimate::DEFAULT_DELTA;
use crate::kmeans::KMeansConfig;
use crate::model::{theta_profile, uniform_membership, ModelKind, ModelSpec, NoiseSpec, ThetaProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixValues {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixValues {
    fn row_major(&self, k: usize) -> Result<Vec<f64>> {
        match self {
            MatrixValues::Flat(v) => Ok(v.clone()),
            MatrixValues::Rows(rows) => {
                if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                    return Err(Error::Config(format!("p must be {k}x{k}")));
                }
                Ok(rows.concat())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Bm,
    Dcbm,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MembershipConfig {
    #[default]
    UniformRandom,
    /// 1-based labels.
    Explicit { labels: Vec<usize> },
}

/// A model with possibly random membership and heterogeneity, instantiated
/// per seed into a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTemplate {
    pub n: usize,
    pub k: usize,
    pub model: ModelName,
    pub p: MatrixValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ParamsConfig>,
    #[serde(default)]
    pub membership: MembershipConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<ParamsConfig>,
}

fn expect_params(cfg: &ParamsConfig, count: usize) -> Result<&[f64]> {
    if cfg.params.len() != count {
        return Err(Error::Config(format!(
            "{} expects {count} parameter(s), got {}",
            cfg.kind,
            cfg.params.len()
        )));
    }
    Ok(&cfg.params)
}

impl ModelTemplate {
    pub fn from_toml(text: &str) -> Result<Self> {
        let t: ModelTemplate = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.normalized()).expect("template serialises")
    }

    /// Same template with `p` in nested-row form.
    pub fn normalized(&self) -> Self {
        let mut t = self.clone();
        if let Ok(flat) = self.p.row_major(self.k) {
            if flat.len() == self.k * self.k {
                t.p = MatrixValues::Rows(flat.chunks(self.k).map(|r| r.to_vec()).collect());
            }
        }
        t
    }

    pub fn with_n(&self, n: usize) -> Self {
        ModelTemplate { n, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        self.theta_profile()?;
        self.noise_spec()?;
        crate::model::square_matrix(self.k, &self.p.row_major(self.k)?)?;
        if let MembershipConfig::Explicit { labels } = &self.membership {
            if labels.len() != self.n {
                return Err(Error::Config(format!(
                    "explicit membership has {} labels, n = {}",
                    labels.len(),
                    self.n
                )));
            }
            if labels.iter().any(|&l| l == 0 || l > self.k) {
                return Err(Error::Config(format!("membership labels must be in 1..={}", self.k)));
            }
        }
        Ok(())
    }

    pub fn theta_profile(&self) -> Result<ThetaProfile> {
        let Some(cfg) = &self.theta else {
            return match self.model {
                ModelName::Bm => Ok(ThetaProfile::Constant(1.0)),
                _ => Err(Error::Config("dcbm and general models need a theta profile".into())),
            };
        };
        Ok(match cfg.kind.as_str() {
            "constant" => ThetaProfile::Constant(expect_params(cfg, 1)?[0]),
            "uniform" => {
                let p = expect_params(cfg, 2)?;
                ThetaProfile::Uniform { lo: p[0], hi: p[1] }
            }
            "power" => {
                let p = expect_params(cfg, 3)?;
                ThetaProfile::Power {
                    c0: p[0],
                    d0: p[1],
                    exponent: p[2],
                }
            }
            "linear" => {
                let p = expect_params(cfg, 2)?;
                ThetaProfile::linear(p[0], p[1])
            }
            "step" => {
                let p = expect_params(cfg, 2)?;
                ThetaProfile::Step { c0: p[0], d0: p[1] }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown theta kind '{other}' (constant, uniform, power, linear, step)"
                )))
            }
        })
    }

    pub fn noise_spec(&self) -> Result<Option<NoiseSpec>> {
        if self.model != ModelName::General {
            return Ok(None);
        }
        let Some(cfg) = &self.noise else {
            return Ok(Some(NoiseSpec::default()));
        };
        Ok(Some(match cfg.kind.as_str() {
            "gaussian" => match cfg.params.as_slice() {
                [] => NoiseSpec::default(),
                [sd] => NoiseSpec::Gaussian { sd: *sd },
                _ => return Err(Error::Config("gaussian noise takes one parameter (sd)".into())),
            },
            "bernoulli" | "scaled-bernoulli" => NoiseSpec::ScaledBernoulli {
                scale: expect_params(cfg, 1)?[0],
            },
            other => return Err(Error::Config(format!("unknown noise kind '{other}'"))),
        }))
    }

    pub fn kind(&self) -> Result<ModelKind> {
        Ok(match self.model {
            ModelName::Bm => ModelKind::Bm,
            ModelName::Dcbm => ModelKind::Dcbm,
            ModelName::General => ModelKind::General(self.noise_spec()?.expect("general noise")),
        })
    }

    /// Draws membership and theta for `seed` and validates the result.
    pub fn instantiate(&self, seed: u64) -> Result<ModelSpec> {
        let membership = match &self.membership {
            MembershipConfig::UniformRandom => uniform_membership(self.n, self.k, seed)?,
            MembershipConfig::Explicit { labels } => labels.iter().map(|l| l - 1).collect(),
        };
        let p = crate::model::square_matrix(self.k, &self.p.row_major(self.k)?)?;
        let theta = theta_profile(self.theta_profile()?, self.n, seed);
        ModelSpec::new(membership, p, theta, self.kind()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Relative error rate of each method against the planted labels.
    ErrorRate,
    /// Estimated number of communities.
    KHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KMeansSettings {
    fn default() -> Self {
        let d = KMeansConfig::default();
        KMeansSettings {
            restarts: d.restarts,
            max_iters: d.max_iters,
            tol: d.tol,
        }
    }
}

impl From<KMeansSettings> for KMeansConfig {
    fn from(s: KMeansSettings) -> Self {
        KMeansConfig {
            restarts: s.restarts,
            max_iters: s.max_iters,
            tol: s.tol,
        }
    }
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub model: ModelTemplate,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub metric: Metric,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// `"auto"` or a number; defaults to the planted `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(default)]
    pub kmeans: KMeansSettings,
    /// Where to write the report; not part of the digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.model.validate()?;
        c.k_choice()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn k_choice(&self) -> Result<KChoice> {
        match &self.k {
            None => Ok(KChoice::Fixed(self.model.k)),
            Some(s) => s.parse(),
        }
    }

    /// SHA-256 over the canonical JSON form of every semantic field.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.model = c.model.normalized();
        digest_of(&c)
    }
}

/// Hex SHA-256 of a value's canonical JSON (object keys sorted).
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value).expect("config serialises to JSON");
    let bytes = serde_json::to_vec(&canonical).expect("JSON value serialises");
    hex::encode(Sha256::digest(bytes))
}
