//! Seeded Monte-Carlo driver and the preset simulation experiments.
//!
//! Repetition `r` uses seed `base_seed + r` for everything it draws: the
//! membership vector, random heterogeneity parameters, the adjacency sample
//! and k-means seeding (each on its own stream). Repetitions run in parallel
//! on the rayon pool; the report is assembled in repetition order.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{detect_with, DetectOptions, KChoice, Method, Spectra};
use crate::config::{
    digest_of, KMeansSettings, MatrixValues, MembershipConfig, Metric, ModelName, ModelTemplate,
    ParamsConfig,
};
use crate::error::{Error, Result};
use crate::estimate::{default_threshold, estimate_k, DEFAULT_DELTA};
use crate::metrics::relative_error_rate;
use crate::model::generate;
use crate::rng::repetition_seed;
use crate::spectral::eigenvalues_sym;

/// What to run on each simulated network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub model: ModelTemplate,
    pub methods: Vec<Method>,
    pub metric: Metric,
    pub delta: f64,
    /// `None` uses the planted number of communities.
    #[serde(serialize_with = "serialize_k")]
    pub k: Option<KChoice>,
    pub kmeans: KMeansSettings,
}

fn serialize_k<S: serde::Serializer>(k: &Option<KChoice>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match k {
        None => s.serialize_none(),
        Some(k) => s.serialize_str(&k.to_string()),
    }
}

impl ExperimentSpec {
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.model = c.model.normalized();
        digest_of(&c)
    }

    fn detect_options(&self) -> DetectOptions {
        DetectOptions {
            delta: self.delta,
            kmeans: self.kmeans.into(),
            score_clamp: None,
        }
    }

    /// Row label for each report this spec produces.
    pub fn labels(&self) -> Vec<String> {
        match self.metric {
            Metric::KHat => vec!["k_hat".to_string()],
            Metric::ErrorRate => self.methods.iter().map(|m| m.name().to_string()).collect(),
        }
    }
}

impl TryFrom<&crate::config::ExperimentConfig> for ExperimentSpec {
    type Error = Error;

    fn try_from(c: &crate::config::ExperimentConfig) -> Result<Self> {
        Ok(ExperimentSpec {
            name: c.name.clone(),
            model: c.model.clone(),
            methods: c.methods.clone(),
            metric: c.metric,
            delta: c.delta,
            k: c.k.as_deref().map(str::parse).transpose()?,
            kmeans: c.kmeans,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    /// Method name, or `k_hat` for the estimation task.
    pub label: String,
    pub n: usize,
    pub k: usize,
    /// `None` marks a repetition where the method failed.
    pub per_rep: Vec<Option<f64>>,
    pub mean: f64,
    pub sd: f64,
    pub flagged: usize,
    pub config_digest: String,
    pub seeds: Vec<u64>,
}

impl ExperimentReport {
    pub fn reps(&self) -> usize {
        self.per_rep.len()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_rep.iter().flatten().copied()
    }
}

/// Mean and sample standard deviation (divisor `len - 1`; zero for a single
/// value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, var.sqrt())
}

fn run_repetition(spec: &ExperimentSpec, seed: u64) -> Result<Vec<Result<f64>>> {
    let model = spec.model.instantiate(seed)?;
    let a = generate(&model, seed);
    match spec.metric {
        Metric::KHat => {
            let l = eigenvalues_sym(a.as_mat())?;
            let est = estimate_k(&l, default_threshold(model.n(), spec.delta)?);
            Ok(vec![Ok(est.k_hat as f64)])
        }
        Metric::ErrorRate => {
            let spectra = Spectra::new(&a);
            let k = spec.k.unwrap_or(KChoice::Fixed(model.k()));
            let opts = spec.detect_options();
            Ok(spec
                .methods
                .iter()
                .map(|&m| {
                    let assignment = detect_with(&spectra, m, k, &opts, seed)?;
                    Ok(relative_error_rate(&assignment.labels, model.membership())?.error_rate)
                })
                .collect())
        }
    }
}

/// Runs `reps` repetitions and returns one report per method (or a single
/// `k_hat` report).
pub fn run_experiment(spec: &ExperimentSpec, reps: usize, base_seed: u64) -> Result<Vec<ExperimentReport>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    if spec.metric == Metric::ErrorRate && spec.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods to evaluate".into()));
    }
    // Fail fast on a template that can never be instantiated.
    spec.model.instantiate(base_seed)?;
    let labels = spec.labels();
    let seeds: Vec<u64> = (0..reps).map(|r| repetition_seed(base_seed, r)).collect();
    let outcomes: Vec<Vec<Result<f64>>> = seeds
        .par_iter()
        .map(|&seed| match run_repetition(spec, seed) {
            Ok(v) => v,
            Err(e) => {
                let msg = e.to_string();
                labels.iter().map(|_| Err(Error::InvalidSpec(msg.clone()))).collect()
            }
        })
        .collect();

    let digest = spec.digest();
    let mut reports = Vec::with_capacity(labels.len());
    for (idx, label) in labels.iter().enumerate() {
        let per_rep: Vec<Option<f64>> = outcomes
            .iter()
            .zip(&seeds)
            .map(|(o, seed)| match &o[idx] {
                Ok(v) => Some(*v),
                Err(e) => {
                    log::warn!("{label}: repetition with seed {seed} failed: {e}");
                    None
                }
            })
            .collect();
        let values: Vec<f64> = per_rep.iter().flatten().copied().collect();
        let flagged = reps - values.len();
        if flagged > 0 {
            log::warn!("{label}: {flagged} of {reps} repetitions flagged and excluded");
        }
        let (mean, sd) = mean_sd(&values);
        reports.push(ExperimentReport {
            label: label.clone(),
            n: spec.model.n,
            k: spec.model.k,
            per_rep,
            mean,
            sd,
            flagged,
            config_digest: digest.clone(),
            seeds: seeds.clone(),
        });
    }
    Ok(reports)
}

/// Edge-probability matrix shared by all simulations: `P(1,1) = P(2,2) = 1`,
/// `P(1,2) = 0.5`, and for three communities `P(1,3) = P(2,3) = 0.04` with
/// `P(3,3) = 1`.
pub fn simulation_edge_prob(k: usize) -> Result<Vec<Vec<f64>>> {
    match k {
        2 => Ok(vec![vec![1.0, 0.5], vec![0.5, 1.0]]),
        3 => Ok(vec![
            vec![1.0, 0.5, 0.04],
            vec![0.5, 1.0, 0.04],
            vec![0.04, 0.04, 1.0],
        ]),
        _ => Err(Error::InvalidArgument(format!(
            "simulation presets are defined for K = 2 or 3, got {k}"
        ))),
    }
}

pub const THETA_LOW: f64 = 0.015;
pub const THETA_HIGH: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// K estimation with `theta ~ Uniform(0.15, 1)`.
    Exp1,
    /// Constant `theta = 0.2`.
    Exp2,
    /// `theta(i) = 0.015 + 0.785 (i/n)^2`.
    Exp3,
    /// Heterogeneity stress: case 1 linear, case 2 quadratic, case 3 step.
    Exp4 { case: u8 },
}

impl Preset {
    pub fn parse(name: &str, case: Option<u8>) -> Result<Self> {
        match (name, case) {
            ("exp1", None) => Ok(Preset::Exp1),
            ("exp2", None) => Ok(Preset::Exp2),
            ("exp3", None) => Ok(Preset::Exp3),
            ("exp4", c) => {
                let case = c.unwrap_or(1);
                if (1..=3).contains(&case) {
                    Ok(Preset::Exp4 { case })
                } else {
                    Err(Error::InvalidArgument(format!("exp4 case must be 1, 2 or 3, got {case}")))
                }
            }
            (_, Some(_)) if matches!(name, "exp1" | "exp2" | "exp3") => {
                Err(Error::InvalidArgument(format!("--case only applies to exp4, not {name}")))
            }
            (other, _) => Err(Error::InvalidArgument(format!(
                "unknown experiment '{other}' (exp1, exp2, exp3, exp4)"
            ))),
        }
    }

    pub fn default_n(&self) -> usize {
        1000
    }

    pub fn default_k(&self) -> usize {
        match self {
            Preset::Exp4 { .. } => 3,
            _ => 2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Preset::Exp1 => "exp1".into(),
            Preset::Exp2 => "exp2".into(),
            Preset::Exp3 => "exp3".into(),
            Preset::Exp4 { case } => format!("exp4-case{case}"),
        }
    }

    fn theta(&self) -> ParamsConfig {
        let (kind, params) = match self {
            Preset::Exp1 => ("uniform", vec![0.15, 1.0]),
            Preset::Exp2 => ("constant", vec![0.2]),
            Preset::Exp3 | Preset::Exp4 { case: 2 } => ("power", vec![THETA_LOW, THETA_HIGH, 2.0]),
            Preset::Exp4 { case: 1 } => ("linear", vec![THETA_LOW, THETA_HIGH]),
            Preset::Exp4 { .. } => ("step", vec![THETA_LOW, THETA_HIGH]),
        };
        ParamsConfig {
            kind: kind.into(),
            params,
        }
    }

    pub fn template(&self, n: usize, k: usize) -> Result<ModelTemplate> {
        Ok(ModelTemplate {
            n,
            k,
            model: ModelName::Dcbm,
            p: MatrixValues::Rows(simulation_edge_prob(k)?),
            theta: Some(self.theta()),
            membership: MembershipConfig::UniformRandom,
            noise: None,
        })
    }

    pub fn spec(&self, n: usize, k: usize, methods: &[Method]) -> Result<ExperimentSpec> {
        let metric = match self {
            Preset::Exp1 => Metric::KHat,
            _ => Metric::ErrorRate,
        };
        Ok(ExperimentSpec {
            name: self.name(),
            model: self.template(n, k)?,
            methods: if metric == Metric::KHat { Vec::new() } else { methods.to_vec() },
            metric,
            delta: DEFAULT_DELTA,
            k: None,
            kmeans: KMeansSettings::default(),
        })
    }
}
