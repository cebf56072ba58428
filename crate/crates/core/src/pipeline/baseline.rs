//! Training and applying the hashed n-gram evergreen classifier.

use serde::{Deserialize, Serialize};

use super::{require, RunConfig};
use crate::corpus::{load_question_set, Split};
use crate::error::{Error, Result};
use crate::evergreen::{score_questions, train_evergreen_baseline, EvergreenScore, LinearEvergreenModel, TrainingLog};
use crate::provenance::ReportMetadata;

pub const BASELINE_SOURCE: &str = "ngram-logreg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainEvergreenOutput {
    pub metadata: ReportMetadata,
    pub n_train: usize,
    pub model_fingerprint: String,
    pub training_log: TrainingLog,
    #[serde(skip)]
    pub model: Option<LinearEvergreenModel>,
}

impl TrainEvergreenOutput {
    pub fn to_text(&self) -> String {
        let log = &self.training_log;
        let mut out = format!(
            "trained on {} questions (holdout {}), best epoch {}{}\n",
            log.train_size,
            log.holdout_size,
            log.best_epoch,
            if log.stopped_early { ", stopped early" } else { "" }
        );
        out.push_str(&format!("model fingerprint {}\n", self.model_fingerprint));
        out
    }
}

/// Trains on every labeled question of the selected split, `train` by default.
pub fn cmd_train_evergreen(config: &RunConfig) -> Result<TrainEvergreenOutput> {
    config.validate()?;
    let split = config.settings.split.unwrap_or(Split::Train);
    let train: Vec<_> = load_question_set(require(&config.questions, "questions", "train-evergreen")?)?
        .into_iter()
        .filter(|q| q.split == split && q.evergreen_label.is_some())
        .collect();
    if train.is_empty() {
        return Err(Error::precondition(format!(
            "no labeled questions in the {split:?} split"
        )));
    }
    let model = train_evergreen_baseline(&train, &config.settings.hyper)?;
    Ok(TrainEvergreenOutput {
        metadata: config.metadata("train-evergreen")?,
        n_train: train.len(),
        model_fingerprint: model.fingerprint.clone(),
        training_log: model.training_log.clone(),
        model: Some(model),
    })
}

/// Scores every question (restricted to `--split` when given) with a saved model.
pub fn cmd_score_evergreen(config: &RunConfig) -> Result<(ReportMetadata, Vec<EvergreenScore>)> {
    config.validate()?;
    let model = LinearEvergreenModel::load(require(&config.model, "model", "score-evergreen")?)?;
    let mut questions = load_question_set(require(&config.questions, "questions", "score-evergreen")?)?;
    if let Some(split) = config.settings.split {
        questions.retain(|q| q.split == split);
    }
    Ok((
        config.metadata("score-evergreen")?,
        score_questions(&model, &questions, BASELINE_SOURCE),
    ))
}
