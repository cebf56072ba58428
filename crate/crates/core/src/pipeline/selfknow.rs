//! Self-knowledge evaluation: one trained scorer per configuration, model and
//! dataset, evaluated on the test split.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt_opt, require, RunConfig};
use crate::corpus::{load_correctness, load_question_set, QuestionRecord, Split};
use crate::error::{Error, Result};
use crate::metrics::{auprc, auroc, prr};
use crate::provenance::ReportMetadata;
use crate::selfknow::spec::{grid, Family};
use crate::selfknow::{
    load_features, train_selfknow, Configuration, FeatureRecord, FeatureTable, SelfKnowledgeModel, SelfKnowledgeScore,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfKnowRow {
    pub configuration: Configuration,
    pub label: String,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub prr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfKnowBlock {
    pub model_id: String,
    pub source_dataset: String,
    pub n_train: usize,
    pub n_test: usize,
    pub test_accuracy: f64,
    pub rows: Vec<SelfKnowRow>,
    pub warnings: Vec<String>,
    /// Test-split `f(x)` per configuration.
    #[serde(skip)]
    pub scores: Vec<SelfKnowledgeScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedScorer {
    pub model_id: String,
    pub source_dataset: String,
    pub scorer: SelfKnowledgeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfKnowOutput {
    pub metadata: ReportMetadata,
    pub blocks: Vec<SelfKnowBlock>,
    #[serde(skip)]
    pub models: Vec<TrainedScorer>,
}

impl SelfKnowOutput {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&format!(
                "{} / {}  (train {}, test {}, test accuracy {:.3})\n",
                b.model_id, b.source_dataset, b.n_train, b.n_test, b.test_accuracy
            ));
            let width = b.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(13);
            out.push_str(&format!(
                "{:<width$}  {:>7}  {:>7}  {:>7}\n",
                "configuration", "AUROC", "AUPRC", "PRR"
            ));
            for r in &b.rows {
                out.push_str(&format!(
                    "{:<width$}  {}  {}  {}\n",
                    r.label,
                    fmt_opt(r.auroc, 7, 3),
                    fmt_opt(r.auprc, 7, 3),
                    fmt_opt(r.prr, 7, 3)
                ));
            }
            for w in &b.warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            out.push('\n');
        }
        out
    }
}

/// Correctness labels for `model_id`: a channel named after the model wins;
/// otherwise a single supplied channel applies to every model.
fn channel_for<'a>(
    channels: &'a [(String, HashMap<String, bool>)],
    model_id: &str,
) -> Result<&'a HashMap<String, bool>> {
    if let Some((_, m)) = channels.iter().find(|(n, _)| n == model_id) {
        return Ok(m);
    }
    match channels {
        [(_, m)] => Ok(m),
        [] => Err(Error::Configuration("selfknow requires --correctness".into())),
        _ => Err(Error::Configuration(format!(
            "several correctness channels supplied and none is named after model {model_id:?}"
        ))),
    }
}

pub fn cmd_selfknow(config: &RunConfig) -> Result<SelfKnowOutput> {
    config.validate()?;
    let questions = load_question_set(require(&config.questions, "questions", "selfknow")?)?;
    let features = load_features(require(&config.features, "features", "selfknow")?)?;
    let channels: Vec<(String, HashMap<String, bool>)> = config
        .correctness
        .iter()
        .map(|c| {
            let labels = load_correctness(&c.path)?;
            Ok((
                c.name.clone(),
                labels.into_iter().map(|l| (l.question_id, l.y)).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    if channels.is_empty() {
        return Err(Error::Configuration("selfknow requires --correctness".into()));
    }
    let by_id: HashMap<&str, &QuestionRecord> = questions.iter().map(|q| (q.id.as_str(), q)).collect();
    let orphans: Vec<String> = features
        .iter()
        .filter(|f| !by_id.contains_key(f.question_id.as_str()))
        .map(|f| f.question_id.clone())
        .collect();
    if !orphans.is_empty() {
        return Err(Error::JoinMiss(orphans));
    }

    let mut groups: BTreeMap<(String, String), Vec<&FeatureRecord>> = BTreeMap::new();
    for f in &features {
        let q = by_id[f.question_id.as_str()];
        groups
            .entry((f.model_id.clone(), q.source_dataset.clone()))
            .or_default()
            .push(f);
    }
    let specs = grid(config.settings.grid, &Family::ALL);
    let seeds = &config.settings.seeds;

    let mut blocks = Vec::new();
    let mut models = Vec::new();
    for ((model_id, dataset), records) in groups {
        let labels = channel_for(&channels, &model_id)?;
        let (train, test): (Vec<&FeatureRecord>, Vec<&FeatureRecord>) = records
            .iter()
            .partition(|r| by_id[r.question_id.as_str()].split != Split::Test);
        if test.is_empty() {
            return Err(Error::precondition(format!(
                "model {model_id:?} on {dataset:?} has an empty test split"
            )));
        }
        if train.is_empty() {
            return Err(Error::precondition(format!(
                "model {model_id:?} on {dataset:?} has no train or validation records"
            )));
        }
        let mut warnings = Vec::new();
        let has_eg = records.iter().any(|r| r.p_evergreen.is_some());
        if !has_eg {
            warnings.push("no p_evergreen in the feature file; evergreen configurations skipped".into());
        }
        let configurations: Vec<Configuration> = Configuration::all()
            .into_iter()
            .filter(|c| has_eg || !c.uses_evergreen())
            .collect();

        let results = configurations
            .par_iter()
            .map(|&cfg| {
                let train_table = FeatureTable::from_records(&train, labels, cfg)?;
                let test_table = FeatureTable::from_records(&test, labels, cfg)?;
                let scorer = train_selfknow(cfg, &train_table, &specs, config.settings.grid, seeds)?;
                let f = scorer.score_table(&test_table)?;
                Ok((cfg, scorer, test_table, f))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut rows = Vec::new();
        let mut scores = Vec::new();
        let mut test_accuracy = 0.0;
        for (cfg, scorer, test_table, f) in results {
            let y = test_table.labels();
            test_accuracy = y.iter().filter(|&&v| v).count() as f64 / y.len() as f64;
            let quality: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v))).collect();
            let uncertainty: Vec<f64> = f.iter().map(|v| -v).collect();
            let metric = |r: Result<f64>, name: &str, warnings: &mut Vec<String>| match r {
                Ok(v) => Some(v),
                Err(e) => {
                    warnings.push(format!("{cfg}: {name} undefined ({e})"));
                    None
                }
            };
            let row = SelfKnowRow {
                configuration: cfg,
                label: cfg.to_string(),
                auroc: metric(auroc(&f, &y), "AUROC", &mut warnings),
                auprc: metric(auprc(&f, &y), "AUPRC", &mut warnings),
                prr: metric(prr(&uncertainty, &quality), "PRR", &mut warnings),
            };
            if let Some(g) = &scorer.grid {
                warnings.extend(g.warnings.iter().map(|w| format!("{cfg}: {w}")));
            }
            rows.push(row);
            scores.extend(test_table.rows.iter().zip(&f).map(|(r, &v)| SelfKnowledgeScore {
                question_id: r.question_id.clone(),
                f_x: v,
                configuration: cfg.to_string(),
            }));
            models.push(TrainedScorer {
                model_id: model_id.clone(),
                source_dataset: dataset.clone(),
                scorer,
            });
        }
        warnings.dedup();
        blocks.push(SelfKnowBlock {
            model_id,
            source_dataset: dataset,
            n_train: train.len(),
            n_test: test.len(),
            test_accuracy,
            rows,
            warnings,
            scores,
        });
    }
    Ok(SelfKnowOutput {
        metadata: config.metadata("selfknow")?,
        blocks,
        models,
    })
}
