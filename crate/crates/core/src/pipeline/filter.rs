//! Partitions a question set at the evergreen threshold and reports accuracy
//! per subset for each correctness channel.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{fmt_opt, require, RunConfig};
use crate::corpus::{load_correctness, load_question_set, QuestionRecord};
use crate::error::{Error, Result};
use crate::evergreen::load_evergreen_scores;
use crate::provenance::ReportMetadata;

pub const ALL_DATASETS: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAccuracy {
    pub channel: String,
    /// `None` when the subset is empty.
    pub evergreen: Option<f64>,
    pub mutable: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGain {
    pub channel: String,
    /// Share of the mutable subset's gain over the base channel not matched
    /// by the evergreen subset, in percent.
    pub mutable_gain_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    pub dataset: String,
    pub n: usize,
    pub n_evergreen: usize,
    pub n_mutable: usize,
    pub mutable_pct: f64,
    pub accuracy: Vec<ChannelAccuracy>,
    /// Relative evergreen-over-mutable accuracy gap on the base channel, in percent.
    pub gap_pct: Option<f64>,
    pub gains: Vec<ChannelGain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    pub metadata: ReportMetadata,
    pub tau: f64,
    pub rows: Vec<FilterRow>,
    #[serde(skip)]
    pub evergreen: Vec<QuestionRecord>,
    #[serde(skip)]
    pub mutable: Vec<QuestionRecord>,
}

fn mean_accuracy(ids: &[&str], labels: &HashMap<String, bool>) -> Option<f64> {
    if ids.is_empty() {
        return None;
    }
    Some(ids.iter().filter(|id| labels[**id]).count() as f64 / ids.len() as f64)
}

fn relative_pct(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| 100.0 * num / den)
}

/// Table-4 row for one group of questions.
pub fn filter_row(
    dataset: &str,
    evergreen: &[&str],
    mutable: &[&str],
    channels: &[(String, HashMap<String, bool>)],
) -> FilterRow {
    let n = evergreen.len() + mutable.len();
    let accuracy: Vec<ChannelAccuracy> = channels
        .iter()
        .map(|(name, labels)| ChannelAccuracy {
            channel: name.clone(),
            evergreen: mean_accuracy(evergreen, labels),
            mutable: mean_accuracy(mutable, labels),
        })
        .collect();
    let gap_pct = accuracy.first().and_then(|base| match (base.evergreen, base.mutable) {
        (Some(e), Some(m)) => relative_pct(e - m, m),
        _ => None,
    });
    let gains = accuracy
        .iter()
        .skip(1)
        .map(|c| {
            let base = &accuracy[0];
            let gain = match (base.evergreen, base.mutable, c.evergreen, c.mutable) {
                (Some(e0), Some(m0), Some(e1), Some(m1)) => relative_pct((m1 - m0) - (e1 - e0), m1 - m0),
                _ => None,
            };
            ChannelGain {
                channel: c.channel.clone(),
                mutable_gain_pct: gain,
            }
        })
        .collect();
    FilterRow {
        dataset: dataset.to_string(),
        n,
        n_evergreen: evergreen.len(),
        n_mutable: mutable.len(),
        mutable_pct: if n == 0 {
            0.0
        } else {
            100.0 * mutable.len() as f64 / n as f64
        },
        accuracy,
        gap_pct,
        gains,
    }
}

impl FilterOutput {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.dataset.len()).max().unwrap_or(0).max(7);
        let mut out = format!("{:<width$}  {:>6}  {:>9}", "dataset", "N", "mutable%");
        if let Some(first) = self.rows.first() {
            for c in &first.accuracy {
                out.push_str(&format!(
                    "  {:>9}  {:>9}",
                    format!("{}:EG", c.channel),
                    format!("{}:Mut", c.channel)
                ));
            }
            out.push_str(&format!("  {:>9}", "gap%"));
            for g in &first.gains {
                out.push_str(&format!("  {:>9}", format!("{}:gain%", g.channel)));
            }
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<width$}  {:>6}  {:>9.1}", r.dataset, r.n, r.mutable_pct));
            for c in &r.accuracy {
                out.push_str(&format!(
                    "  {}  {}",
                    fmt_opt(c.evergreen, 9, 3),
                    fmt_opt(c.mutable, 9, 3)
                ));
            }
            out.push_str(&format!("  {}", fmt_opt(r.gap_pct, 9, 1)));
            for g in &r.gains {
                out.push_str(&format!("  {}", fmt_opt(g.mutable_gain_pct, 9, 1)));
            }
            out.push('\n');
        }
        out
    }
}

/// Evergreen iff `p_evergreen >= tau`. Rows per source dataset, then the pooled row.
pub fn cmd_filter(config: &RunConfig) -> Result<FilterOutput> {
    config.validate()?;
    let tau = config.settings.tau;
    let mut questions = load_question_set(require(&config.questions, "questions", "filter")?)?;
    if let Some(split) = config.settings.split {
        questions.retain(|q| q.split == split);
    }
    let scores: HashMap<String, f64> =
        load_evergreen_scores(require(&config.evergreen_scores, "evergreen-scores", "filter")?)?
            .into_iter()
            .map(|s| (s.question_id, s.p_evergreen))
            .collect();
    let unscored: Vec<String> = questions
        .iter()
        .filter(|q| !scores.contains_key(&q.id))
        .map(|q| q.id.clone())
        .collect();
    if !unscored.is_empty() {
        return Err(Error::JoinMiss(unscored));
    }
    let channels: Vec<(String, HashMap<String, bool>)> = config
        .correctness
        .iter()
        .map(|c| {
            let labels: HashMap<String, bool> = load_correctness(&c.path)?
                .into_iter()
                .map(|l| (l.question_id, l.y))
                .collect();
            let missing: Vec<String> = questions
                .iter()
                .filter(|q| !labels.contains_key(&q.id))
                .map(|q| format!("{}:{}", c.name, q.id))
                .collect();
            if !missing.is_empty() {
                return Err(Error::JoinMiss(missing));
            }
            Ok((c.name.clone(), labels))
        })
        .collect::<Result<_>>()?;

    let (evergreen, mutable): (Vec<QuestionRecord>, Vec<QuestionRecord>) =
        questions.into_iter().partition(|q| scores[&q.id] >= tau);

    let mut by_dataset: BTreeMap<&str, (Vec<&str>, Vec<&str>)> = BTreeMap::new();
    for q in &evergreen {
        by_dataset.entry(&q.source_dataset).or_default().0.push(&q.id);
    }
    for q in &mutable {
        by_dataset.entry(&q.source_dataset).or_default().1.push(&q.id);
    }
    let mut rows: Vec<FilterRow> = by_dataset
        .iter()
        .map(|(d, (e, m))| filter_row(d, e, m, &channels))
        .collect();
    let all_e: Vec<&str> = evergreen.iter().map(|q| q.id.as_str()).collect();
    let all_m: Vec<&str> = mutable.iter().map(|q| q.id.as_str()).collect();
    rows.push(filter_row(ALL_DATASETS, &all_e, &all_m, &channels));

    Ok(FilterOutput {
        metadata: config.metadata("filter")?,
        tau,
        rows,
        evergreen,
        mutable,
    })
}
