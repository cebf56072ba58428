//! The experiment commands: each is a pure function of its inputs and
//! settings, returning in-memory outputs that the caller writes.

pub mod baseline;
pub mod correlate;
pub mod features;
pub mod filter;
pub mod selfknow;
pub mod verbal;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Split;
use crate::error::{Error, Result};
use crate::evergreen::{EvergreenHyper, RandomStrategy, DEFAULT_TAU};
use crate::provenance::{fingerprint, hash_inputs, ReportMetadata};
use crate::selfknow::spec::GridKind;
use crate::uncertainty::UncertaintyConfig;

pub use baseline::{cmd_score_evergreen, cmd_train_evergreen, TrainEvergreenOutput};
pub use correlate::{cmd_correlate, CorrelationReport};
pub use features::{cmd_features, FeaturesOutput};
pub use filter::{cmd_filter, FilterOutput};
pub use selfknow::{cmd_selfknow, SelfKnowOutput};
pub use verbal::{cmd_verbal_bench, VerbalBenchOutput};

pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

impl std::str::FromStr for NamedPath {
    type Err = Error;

    /// Parses `name=path`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(NamedPath {
                name: name.to_string(),
                path: PathBuf::from(path),
            }),
            _ => Err(Error::Configuration(format!("expected name=path, got {s:?}"))),
        }
    }
}

/// Settings that change results; these are what the config fingerprint covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub uncertainty: UncertaintyConfig,
    pub tau: f64,
    pub seeds: Vec<u64>,
    pub grid: GridKind,
    pub random_strategy: RandomStrategy,
    pub random_trials: usize,
    /// Per-class sample size for balanced correlation subsets.
    pub balanced: Option<usize>,
    /// Restricts question-driven commands to one split.
    pub split: Option<Split>,
    pub hyper: EvergreenHyper,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            uncertainty: UncertaintyConfig::default(),
            tau: DEFAULT_TAU,
            seeds: DEFAULT_SEEDS.to_vec(),
            grid: GridKind::Full,
            random_strategy: RandomStrategy::Stratified,
            random_trials: 10_000,
            balanced: None,
            split: None,
            hyper: EvergreenHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub questions: Option<PathBuf>,
    pub traces: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub correctness: Vec<NamedPath>,
    pub evergreen_scores: Option<PathBuf>,
    pub verbal_outputs: Vec<PathBuf>,
    /// External binary labels in the correctness schema.
    pub labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub settings: Settings,
}

impl RunConfig {
    /// Every referenced path must exist and `tau` must lie in (0, 1).
    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if !(s.tau > 0.0 && s.tau < 1.0) {
            return Err(Error::Configuration(format!("tau {} outside (0, 1)", s.tau)));
        }
        if s.seeds.is_empty() {
            return Err(Error::Configuration("at least one seed is required".into()));
        }
        let singles = [
            &self.questions,
            &self.traces,
            &self.features,
            &self.evergreen_scores,
            &self.labels,
            &self.model,
        ];
        let paths = singles
            .into_iter()
            .flatten()
            .chain(self.correctness.iter().map(|c| &c.path))
            .chain(&self.verbal_outputs);
        for p in paths {
            if !p.exists() {
                return Err(Error::Configuration(format!("input {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self, command: &str) -> String {
        let body = serde_json::json!({ "command": command, "settings": self.settings });
        fingerprint(body.to_string().as_bytes())
    }

    pub fn metadata(&self, command: &str) -> Result<ReportMetadata> {
        let mut roles: Vec<(String, &Path)> = Vec::new();
        let singles = [
            ("questions", &self.questions),
            ("traces", &self.traces),
            ("features", &self.features),
            ("evergreen_scores", &self.evergreen_scores),
            ("labels", &self.labels),
            ("model", &self.model),
        ];
        for (role, p) in singles {
            if let Some(p) = p {
                roles.push((role.to_string(), p.as_path()));
            }
        }
        for c in &self.correctness {
            roles.push((format!("correctness:{}", c.name), c.path.as_path()));
        }
        for p in &self.verbal_outputs {
            roles.push(("verbal_outputs".to_string(), p.as_path()));
        }
        let inputs = hash_inputs(roles.iter().map(|(r, p)| (r.as_str(), *p)))?;
        Ok(ReportMetadata::new(self.fingerprint(command), inputs))
    }
}

pub(crate) fn require<'a>(p: &'a Option<PathBuf>, flag: &str, command: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Configuration(format!("{command} requires --{flag}")))
}

pub(crate) fn fmt_opt(v: Option<f64>, width: usize, prec: usize) -> String {
    match v {
        Some(x) => format!("{x:>width$.prec$}"),
        None => format!("{:>width$}", "n/a"),
    }
}
