//! Uncertainty features per trace, joined with evergreen scores.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{require, RunConfig};
use crate::corpus::{load_question_set, load_trace_set};
use crate::error::{Error, Result};
use crate::evergreen::load_evergreen_scores;
use crate::provenance::ReportMetadata;
use crate::selfknow::{FeatureRecord, UeMetric};
use crate::uncertainty::compute_uncertainty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesSummary {
    pub n_traces: usize,
    /// Count of traces missing each optional metric, keyed by feature column.
    pub absent: Vec<(String, usize)>,
    pub p_evergreen_joined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesOutput {
    pub metadata: ReportMetadata,
    pub summary: FeaturesSummary,
    #[serde(skip)]
    pub records: Vec<FeatureRecord>,
}

impl FeaturesOutput {
    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let mut out = format!("{} feature records\n", s.n_traces);
        for (name, n) in &s.absent {
            out.push_str(&format!("{name:<24} absent {n}\n"));
        }
        out.push_str(&format!(
            "p_evergreen              {}\n",
            if s.p_evergreen_joined { "joined" } else { "null" }
        ));
        out
    }
}

/// One feature record per trace, in trace-file order.
pub fn cmd_features(config: &RunConfig) -> Result<FeaturesOutput> {
    config.validate()?;
    let questions = load_question_set(require(&config.questions, "questions", "features")?)?;
    let traces = load_trace_set(require(&config.traces, "traces", "features")?)?;
    let known: HashSet<&str> = questions.iter().map(|q| q.id.as_str()).collect();
    let orphans: Vec<String> = traces
        .iter()
        .filter(|t| !known.contains(t.question_id.as_str()))
        .map(|t| t.question_id.clone())
        .collect();
    if !orphans.is_empty() {
        return Err(Error::JoinMiss(orphans));
    }

    let scores: Option<HashMap<String, f64>> = match &config.evergreen_scores {
        Some(p) => Some(
            load_evergreen_scores(p)?
                .into_iter()
                .map(|s| (s.question_id, s.p_evergreen))
                .collect(),
        ),
        None => None,
    };
    if let Some(s) = &scores {
        let unscored: Vec<String> = traces
            .iter()
            .filter(|t| !s.contains_key(&t.question_id))
            .map(|t| t.question_id.clone())
            .collect();
        if !unscored.is_empty() {
            return Err(Error::JoinMiss(unscored));
        }
    }

    let uc = config.settings.uncertainty;
    let records = traces
        .par_iter()
        .map(|t| {
            let u = compute_uncertainty(t, &uc)?;
            let p = scores.as_ref().map(|s| s[&t.question_id]);
            Ok(FeatureRecord::new(&t.model_id, &u, p))
        })
        .collect::<Result<Vec<_>>>()?;

    let absent = [UeMetric::NegLexicalSimilarity, UeMetric::EigvalLaplacian]
        .into_iter()
        .map(|m| {
            (
                m.field().to_string(),
                records.iter().filter(|r| r.ue(m).is_none()).count(),
            )
        })
        .collect();
    Ok(FeaturesOutput {
        metadata: config.metadata("features")?,
        summary: FeaturesSummary {
            n_traces: records.len(),
            absent,
            p_evergreen_joined: scores.is_some(),
        },
        records,
    })
}
