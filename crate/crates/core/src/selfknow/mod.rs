//! Self-knowledge classifier: feature tables, standardization, grid-searched
//! model zoo and the soft-voting ensemble that scores answer correctness.

pub mod ensemble;
pub mod learners;
pub mod spec;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::read_jsonl;
use crate::uncertainty::UncertaintyVector;
use ensemble::{build_ensemble, grid_search, GridSearchResult, RankedSpec, VotingEnsemble};
use learners::Matrix;
use spec::{GridKind, ModelSpec};

pub const P_EVERGREEN: &str = "p_evergreen";
/// Standard deviations below this are replaced by 1.
pub const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeMetric {
    Perplexity,
    MeanTokenEntropy,
    MaxTokenEntropy,
    NegLexicalSimilarity,
    Sar,
    EigvalLaplacian,
}

impl UeMetric {
    pub const ALL: [UeMetric; 6] = [
        UeMetric::Perplexity,
        UeMetric::MeanTokenEntropy,
        UeMetric::MaxTokenEntropy,
        UeMetric::NegLexicalSimilarity,
        UeMetric::Sar,
        UeMetric::EigvalLaplacian,
    ];

    /// Column name in the feature file.
    pub fn field(self) -> &'static str {
        match self {
            UeMetric::Perplexity => "perplexity",
            UeMetric::MeanTokenEntropy => "mean_token_entropy",
            UeMetric::MaxTokenEntropy => "max_token_entropy",
            UeMetric::NegLexicalSimilarity => "neg_lexical_similarity",
            UeMetric::Sar => "sar",
            UeMetric::EigvalLaplacian => "eigval_laplacian",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            UeMetric::Perplexity => "Perplexity",
            UeMetric::MeanTokenEntropy => "MeanTokenEntropy",
            UeMetric::MaxTokenEntropy => "MaxTokenEntropy",
            UeMetric::NegLexicalSimilarity => "LexicalSimilarity",
            UeMetric::Sar => "SAR",
            UeMetric::EigvalLaplacian => "EigValLaplacian",
        }
    }
}

/// One line of the feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub question_id: String,
    pub model_id: String,
    pub perplexity: f64,
    pub mean_token_entropy: f64,
    pub max_token_entropy: f64,
    pub neg_lexical_similarity: Option<f64>,
    pub sar: f64,
    pub eigval_laplacian: Option<f64>,
    pub p_evergreen: Option<f64>,
}

impl FeatureRecord {
    pub fn new(model_id: &str, u: &UncertaintyVector, p_evergreen: Option<f64>) -> Self {
        Self {
            question_id: u.question_id.clone(),
            model_id: model_id.to_string(),
            perplexity: u.perplexity,
            mean_token_entropy: u.mean_token_entropy,
            max_token_entropy: u.max_token_entropy,
            neg_lexical_similarity: u.neg_lexical_similarity,
            sar: u.sar,
            eigval_laplacian: u.eigval_laplacian,
            p_evergreen,
        }
    }

    pub fn ue(&self, m: UeMetric) -> Option<f64> {
        match m {
            UeMetric::Perplexity => Some(self.perplexity),
            UeMetric::MeanTokenEntropy => Some(self.mean_token_entropy),
            UeMetric::MaxTokenEntropy => Some(self.max_token_entropy),
            UeMetric::NegLexicalSimilarity => self.neg_lexical_similarity,
            UeMetric::Sar => Some(self.sar),
            UeMetric::EigvalLaplacian => self.eigval_laplacian,
        }
    }
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}

/// Feature subsets compared in the self-knowledge table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "metric", rename_all = "snake_case")]
pub enum Configuration {
    Ue(UeMetric),
    UePlusEg(UeMetric),
    /// `p_evergreen` passed through untrained.
    Eg,
}

impl Configuration {
    /// Each metric alone, each metric with the evergreen feature, then the evergreen feature alone.
    pub fn all() -> Vec<Configuration> {
        let mut out: Vec<Configuration> = UeMetric::ALL.iter().map(|&m| Configuration::Ue(m)).collect();
        out.extend(UeMetric::ALL.iter().map(|&m| Configuration::UePlusEg(m)));
        out.push(Configuration::Eg);
        out
    }

    pub fn feature_names(&self) -> Vec<String> {
        match self {
            Configuration::Ue(m) => vec![m.field().to_string()],
            Configuration::UePlusEg(m) => vec![m.field().to_string(), P_EVERGREEN.to_string()],
            Configuration::Eg => vec![P_EVERGREEN.to_string()],
        }
    }

    pub fn uses_evergreen(&self) -> bool {
        !matches!(self, Configuration::Ue(_))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Configuration::Ue(m) => f.write_str(m.label()),
            Configuration::UePlusEg(m) => write!(f, "{} + EG", m.label()),
            Configuration::Eg => f.write_str("EG"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub question_id: String,
    /// Aligned with the table's feature names; NaN marks a missing value.
    pub features: Vec<f64>,
    pub y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    /// Rows in `records` order. Uncertainty columns are negated so that larger
    /// always means more likely correct.
    pub fn from_records(
        records: &[&FeatureRecord],
        correctness: &HashMap<String, bool>,
        configuration: Configuration,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(records.len());
        let mut unlabeled = Vec::new();
        for r in records {
            let Some(&y) = correctness.get(&r.question_id) else {
                unlabeled.push(r.question_id.clone());
                continue;
            };
            let oriented = |m: UeMetric| r.ue(m).map_or(f64::NAN, |v| -v);
            let eg = r.p_evergreen.unwrap_or(f64::NAN);
            let features = match configuration {
                Configuration::Ue(m) => vec![oriented(m)],
                Configuration::UePlusEg(m) => vec![oriented(m), eg],
                Configuration::Eg => vec![eg],
            };
            rows.push(FeatureRow {
                question_id: r.question_id.clone(),
                features,
                y,
            });
        }
        if !unlabeled.is_empty() {
            return Err(Error::validation(format!(
                "no correctness label for questions: {}",
                unlabeled.join(", ")
            )));
        }
        Ok(Self {
            names: configuration.feature_names(),
            rows,
        })
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.y).collect()
    }

    pub fn matrix(&self) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| r.features.clone()).collect();
        Matrix::from_rows(&rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation, 1 where degenerate.
    pub std: Vec<f64>,
}

impl ScalerStats {
    pub fn fit(table: &FeatureTable) -> Result<Self> {
        if table.rows.is_empty() {
            return Err(Error::precondition("cannot standardize an empty table"));
        }
        let d = table.names.len();
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        for j in 0..d {
            let present: Vec<f64> = table
                .rows
                .iter()
                .map(|r| r.features[j])
                .filter(|v| !v.is_nan())
                .collect();
            if present.is_empty() {
                continue;
            }
            let m = present.iter().sum::<f64>() / present.len() as f64;
            let var = present.iter().map(|v| (v - m).powi(2)).sum::<f64>() / present.len() as f64;
            mean[j] = m;
            std[j] = if var.sqrt() < MIN_STD { 1.0 } else { var.sqrt() };
        }
        Ok(Self {
            names: table.names.clone(),
            mean,
            std,
        })
    }

    /// Missing values map to the mean, i.e. to 0.
    pub fn apply_row(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (m, s))| if v.is_nan() { 0.0 } else { (v - m) / s })
            .collect()
    }
}

/// Fits stats when `stats` is `None`, then applies them.
pub fn standardize(table: &FeatureTable, stats: Option<&ScalerStats>) -> Result<(FeatureTable, ScalerStats)> {
    if table.rows.is_empty() {
        return Err(Error::precondition("cannot standardize an empty table"));
    }
    let stats = match stats {
        Some(s) => {
            if s.names != table.names {
                return Err(Error::Schema(format!(
                    "scaler features {:?} do not match table features {:?}",
                    s.names, table.names
                )));
            }
            s.clone()
        }
        None => ScalerStats::fit(table)?,
    };
    let rows = table
        .rows
        .iter()
        .map(|r| FeatureRow {
            question_id: r.question_id.clone(),
            features: stats.apply_row(&r.features),
            y: r.y,
        })
        .collect();
    Ok((
        FeatureTable {
            names: table.names.clone(),
            rows,
        },
        stats,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProvenance {
    pub kind: GridKind,
    pub n_specs: usize,
    pub validation_size: usize,
    pub selection_metric: String,
    pub validation_sampling: String,
    pub top: Vec<RankedSpec>,
    pub n_failed: usize,
    pub warnings: Vec<String>,
}

impl GridProvenance {
    fn from_search(kind: GridKind, n_specs: usize, r: &GridSearchResult) -> Self {
        Self {
            kind,
            n_specs,
            validation_size: r.validation_size,
            selection_metric: "auroc".into(),
            validation_sampling: "unstratified".into(),
            top: r.ranked.iter().take(5).cloned().collect(),
            n_failed: r.failed.len(),
            warnings: r.warnings.clone(),
        }
    }
}

/// Trained scorer for one configuration; serializes to the ensemble file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfKnowledgeModel {
    pub configuration: Configuration,
    pub feature_names: Vec<String>,
    pub scaler: Option<ScalerStats>,
    pub ensemble: Option<VotingEnsemble>,
    pub seeds: Vec<u64>,
    pub grid: Option<GridProvenance>,
}

impl SelfKnowledgeModel {
    /// `f(x)`: higher means more likely correct.
    pub fn score(&self, names: &[String], features: &[f64]) -> Result<f64> {
        if names != self.feature_names.as_slice() {
            return Err(Error::Schema(format!(
                "row features {names:?} do not match model features {:?}",
                self.feature_names
            )));
        }
        match (&self.ensemble, &self.scaler) {
            (Some(e), Some(s)) => Ok(e.predict_proba(&s.apply_row(features))),
            _ => {
                let p = features[0];
                if p.is_nan() {
                    return Err(Error::validation("evergreen pass-through needs p_evergreen"));
                }
                Ok(p)
            }
        }
    }

    pub fn score_table(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        table
            .rows
            .iter()
            .map(|r| self.score(&table.names, &r.features))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }
}

/// Trains the scorer for `train.names`' configuration. The evergreen-only
/// configuration is a pass-through and trains nothing.
pub fn train_selfknow(
    configuration: Configuration,
    train: &FeatureTable,
    specs: &[ModelSpec],
    grid_kind: GridKind,
    seeds: &[u64],
) -> Result<SelfKnowledgeModel> {
    if train.names != configuration.feature_names() {
        return Err(Error::Schema(format!(
            "table features {:?} do not match configuration {configuration}",
            train.names
        )));
    }
    if configuration == Configuration::Eg {
        if let Some(r) = train.rows.iter().find(|r| r.features[0].is_nan()) {
            return Err(Error::validation(format!(
                "question {} has no p_evergreen",
                r.question_id
            )));
        }
        return Ok(SelfKnowledgeModel {
            configuration,
            feature_names: train.names.clone(),
            scaler: None,
            ensemble: None,
            seeds: seeds.to_vec(),
            grid: None,
        });
    }
    let (scaled, stats) = standardize(train, None)?;
    let x = scaled.matrix()?;
    let y = scaled.labels();
    let search = grid_search(specs, &x, &y, seeds)?;
    let ensemble = build_ensemble(&search.ranked, &x, &y, seeds[0])?;
    Ok(SelfKnowledgeModel {
        configuration,
        feature_names: train.names.clone(),
        scaler: Some(stats),
        ensemble: Some(ensemble),
        seeds: seeds.to_vec(),
        grid: Some(GridProvenance::from_search(grid_kind, specs.len(), &search)),
    })
}

/// One line of a self-knowledge score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfKnowledgeScore {
    pub question_id: String,
    pub f_x: f64,
    pub configuration: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfknow::spec::{compact_grid, Family};

    fn table(col: &[f64]) -> FeatureTable {
        FeatureTable {
            names: vec!["perplexity".into()],
            rows: col
                .iter()
                .enumerate()
                .map(|(i, &v)| FeatureRow {
                    question_id: format!("q{i}"),
                    features: vec![v],
                    y: i % 2 == 0,
                })
                .collect(),
        }
    }

    #[test]
    fn standardize_examples() {
        let (t, s) = standardize(&table(&[1.0, 2.0, 3.0]), None).unwrap();
        let z: Vec<f64> = t.rows.iter().map(|r| r.features[0]).collect();
        let e = 1.5f64.sqrt();
        assert!((z[0] + e).abs() < 1e-12 && z[1].abs() < 1e-12 && (z[2] - e).abs() < 1e-12);
        assert!((z[2] - 1.2247).abs() < 1e-4);
        assert_eq!(s.mean, vec![2.0]);

        let (c, s) = standardize(&table(&[4.0, 4.0, 4.0]), None).unwrap();
        assert_eq!(s.std, vec![1.0]);
        assert!(c.rows.iter().all(|r| r.features[0] == 0.0));

        assert!(standardize(&table(&[]), None).is_err());
    }

    #[test]
    fn standardize_is_idempotent_and_imputes() {
        let (once, _) = standardize(&table(&[0.3, -1.0, 2.5, f64::NAN, 7.0]), None).unwrap();
        assert_eq!(once.rows[3].features[0], 0.0);
        let (twice, _) = standardize(&once, None).unwrap();
        for (a, b) in once.rows.iter().zip(&twice.rows) {
            // imputation shifts the refit mean only when values were missing
            if a.question_id != "q3" {
                assert!((a.features[0] - b.features[0]).abs() < 0.2);
            }
        }
        let (clean, _) = standardize(&table(&[0.3, -1.0, 2.5, 7.0]), None).unwrap();
        let (again, _) = standardize(&clean, None).unwrap();
        for (a, b) in clean.rows.iter().zip(&again.rows) {
            assert!((a.features[0] - b.features[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn scaler_feature_mismatch_is_schema_error() {
        let (_, stats) = standardize(&table(&[1.0, 2.0]), None).unwrap();
        let mut other = table(&[1.0, 2.0]);
        other.names = vec!["sar".into()];
        assert!(matches!(standardize(&other, Some(&stats)), Err(Error::Schema(_))));
    }

    fn record(id: &str, ppl: f64, eg: Option<f64>) -> FeatureRecord {
        FeatureRecord {
            question_id: id.into(),
            model_id: "m".into(),
            perplexity: ppl,
            mean_token_entropy: 0.0,
            max_token_entropy: 0.0,
            neg_lexical_similarity: None,
            sar: 0.0,
            eigval_laplacian: None,
            p_evergreen: eg,
        }
    }

    #[test]
    fn configurations_and_orientation() {
        assert_eq!(Configuration::all().len(), 13);
        assert_eq!(Configuration::UePlusEg(UeMetric::Sar).to_string(), "SAR + EG");
        let recs = [record("a", 2.0, Some(0.7))];
        let refs: Vec<&FeatureRecord> = recs.iter().collect();
        let labels: HashMap<String, bool> = [("a".to_string(), true)].into_iter().collect();
        let t = FeatureTable::from_records(&refs, &labels, Configuration::UePlusEg(UeMetric::Perplexity)).unwrap();
        assert_eq!(t.rows[0].features, vec![-2.0, 0.7]);
        let t = FeatureTable::from_records(&refs, &labels, Configuration::Ue(UeMetric::EigvalLaplacian)).unwrap();
        assert!(t.rows[0].features[0].is_nan());
        assert!(FeatureTable::from_records(&refs, &HashMap::new(), Configuration::Eg).is_err());
    }

    #[test]
    fn evergreen_only_is_pass_through() {
        let recs: Vec<FeatureRecord> = (0..6)
            .map(|i| record(&format!("q{i}"), 1.0, Some(i as f64 / 10.0)))
            .collect();
        let refs: Vec<&FeatureRecord> = recs.iter().collect();
        let labels: HashMap<String, bool> = recs.iter().map(|r| (r.question_id.clone(), true)).collect();
        let t = FeatureTable::from_records(&refs, &labels, Configuration::Eg).unwrap();
        let m = train_selfknow(Configuration::Eg, &t, &[], GridKind::Compact, &[1]).unwrap();
        let scores = m.score_table(&t).unwrap();
        assert_eq!(scores, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        assert!(matches!(m.score(&["sar".into()], &[0.1]), Err(Error::Schema(_))));
    }

    #[test]
    fn trained_scores_are_bounded_and_reproducible() {
        let recs: Vec<FeatureRecord> = (0..80)
            .map(|i| record(&format!("q{i}"), (i % 17) as f64, Some(((i * 13) % 10) as f64 / 10.0)))
            .collect();
        let refs: Vec<&FeatureRecord> = recs.iter().collect();
        let labels: HashMap<String, bool> = recs
            .iter()
            .map(|r| (r.question_id.clone(), r.perplexity < 8.0))
            .collect();
        let cfg = Configuration::UePlusEg(UeMetric::Perplexity);
        let t = FeatureTable::from_records(&refs, &labels, cfg).unwrap();
        let specs: Vec<ModelSpec> = Family::ALL.iter().flat_map(|&f| compact_grid(f)).collect();
        let a = train_selfknow(cfg, &t, &specs, GridKind::Compact, &[1, 2, 3]).unwrap();
        let b = train_selfknow(cfg, &t, &specs, GridKind::Compact, &[1, 2, 3]).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let mean_row = a.scaler.as_ref().unwrap().mean.clone();
        let f = a.score(&t.names, &mean_row).unwrap();
        assert!(f > 0.0 && f < 1.0);
    }
}
