//! Weighted-F1 benchmark of verbal evergreen judgments, per language.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{require, RunConfig};
use crate::corpus::{load_question_set, QuestionRecord, Split};
use crate::error::{Error, Result};
use crate::evergreen::{
    evergreen_report, load_evergreen_scores, load_verbal_outputs, random_baseline_row, EvergreenReport,
    PredictionSource, RandomStrategy, VerbalOutput,
};
use crate::provenance::ReportMetadata;

pub const SCORE_SOURCE: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbalBenchOutput {
    pub metadata: ReportMetadata,
    pub split: Split,
    pub random_strategy: RandomStrategy,
    pub random_trials: usize,
    pub report: EvergreenReport,
}

impl VerbalBenchOutput {
    pub fn to_text(&self) -> String {
        self.report.to_text()
    }
}

fn group_outputs(
    outputs: Vec<VerbalOutput>,
    questions: &HashMap<&str, &QuestionRecord>,
) -> Result<BTreeMap<String, Vec<VerbalOutput>>> {
    let mut seen = HashSet::new();
    let mut unknown = Vec::new();
    let mut groups: BTreeMap<String, Vec<VerbalOutput>> = BTreeMap::new();
    for o in outputs {
        let Some(q) = questions.get(o.question_id.as_str()) else {
            unknown.push(o.question_id);
            continue;
        };
        if let Some(l) = o.language {
            if l != q.language {
                return Err(Error::validation(format!(
                    "verbal output for {} is tagged {l} but the question is {}",
                    o.question_id, q.language
                )));
            }
        }
        if !seen.insert((o.model_id.clone(), o.question_id.clone())) {
            return Err(Error::validation(format!(
                "duplicate verbal output for model {:?} and question {:?}",
                o.model_id, o.question_id
            )));
        }
        groups.entry(o.model_id.clone()).or_default().push(o);
    }
    if !unknown.is_empty() {
        return Err(Error::JoinMiss(unknown));
    }
    Ok(groups)
}

/// One row per verbal model, an optional score-file row, then the random row.
pub fn cmd_verbal_bench(config: &RunConfig) -> Result<VerbalBenchOutput> {
    config.validate()?;
    let s = &config.settings;
    let all = load_question_set(require(&config.questions, "questions", "verbal-bench")?)?;
    let by_id: HashMap<&str, &QuestionRecord> = all.iter().map(|q| (q.id.as_str(), q)).collect();
    let split = s.split.unwrap_or(Split::Test);
    let test: Vec<QuestionRecord> = all.iter().filter(|q| q.split == split).cloned().collect();
    if test.is_empty() {
        return Err(Error::precondition(format!("no questions in the {split:?} split")));
    }
    if config.verbal_outputs.is_empty() && config.evergreen_scores.is_none() {
        return Err(Error::Configuration(
            "verbal-bench requires --verbal-outputs or --evergreen-scores".into(),
        ));
    }
    let mut outputs = Vec::new();
    for p in &config.verbal_outputs {
        outputs.extend(load_verbal_outputs(p)?);
    }
    let mut sources: Vec<PredictionSource> = group_outputs(outputs, &by_id)?
        .iter()
        .map(|(model, outs)| PredictionSource::from_verbal(model, outs))
        .collect();
    if let Some(p) = &config.evergreen_scores {
        sources.push(PredictionSource::from_scores(
            SCORE_SOURCE,
            &load_evergreen_scores(p)?,
            s.tau,
        ));
    }
    let mut report = evergreen_report(&sources, &test)?;
    report.rows.push(random_baseline_row(
        &test,
        s.random_strategy,
        s.random_trials,
        s.seeds[0],
    )?);
    Ok(VerbalBenchOutput {
        metadata: config.metadata("verbal-bench")?,
        split,
        random_strategy: s.random_strategy,
        random_trials: s.random_trials,
        report,
    })
}
