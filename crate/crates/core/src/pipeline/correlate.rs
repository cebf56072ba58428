//! Correlation of each feature with a binary label: point-biserial r with its
//! p-value and McFadden pseudo-R², per model.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fmt_opt, RunConfig};
use crate::corpus::{load_correctness, load_question_set};
use crate::error::{Error, Result};
use crate::metrics::{mcfadden_pseudo_r2, point_biserial};
use crate::provenance::ReportMetadata;
use crate::selfknow::{load_features, FeatureRecord, UeMetric, P_EVERGREEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// `evergreen_label` of the question records.
    Evergreen,
    /// An external file in the correctness schema.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub pseudo_r2: Option<f64>,
    pub separable: Option<bool>,
    /// Records with this metric present.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub model_id: String,
    pub n_labeled: usize,
    pub n_positive: usize,
    pub n_unlabeled: usize,
    pub rows: Vec<CorrelationRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub metadata: ReportMetadata,
    pub label_source: LabelSource,
    pub balanced_per_class: Option<usize>,
    pub blocks: Vec<CorrelationBlock>,
}

impl CorrelationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&format!(
                "{}  (labeled {}, positive {}, unlabeled {})\n",
                b.model_id, b.n_labeled, b.n_positive, b.n_unlabeled
            ));
            out.push_str(&format!(
                "{:<24}  {:>7}  {:>9}  {:>9}  {:>6}\n",
                "metric", "r", "p", "pseudoR2", "n"
            ));
            for r in &b.rows {
                let sep = if r.separable == Some(true) { "  separable" } else { "" };
                out.push_str(&format!(
                    "{:<24}  {}  {}  {}  {:>6}{sep}\n",
                    r.metric,
                    fmt_opt(r.r, 7, 3),
                    match r.p_value {
                        Some(p) => format!("{p:>9.2e}"),
                        None => format!("{:>9}", "n/a"),
                    },
                    fmt_opt(r.pseudo_r2, 9, 4),
                    r.n
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

/// `k` per class, sampled without replacement and kept in input order.
pub fn balanced_sample<T: Clone>(items: &[(T, bool)], k: usize, seed: u64) -> Result<Vec<(T, bool)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..items.len()).filter(|&i| items[i].1 == class).collect();
        if idx.len() < k {
            return Err(Error::precondition(format!(
                "balanced subset needs {k} records labeled {}, found {}",
                u8::from(class),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..k]);
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| items[i].clone()).collect())
}

fn correlation_row(metric: &str, pairs: &[(f64, bool)], warnings: &mut Vec<String>) -> Result<CorrelationRow> {
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<bool> = pairs.iter().map(|p| p.1).collect();
    let mut row = CorrelationRow {
        metric: metric.to_string(),
        r: None,
        p_value: None,
        pseudo_r2: None,
        separable: None,
        n: pairs.len(),
    };
    if pairs.is_empty() {
        warnings.push(format!("{metric}: absent from every labeled record"));
        return Ok(row);
    }
    match point_biserial(&y, &x) {
        Ok(c) => {
            row.r = Some(c.r);
            row.p_value = c.p_value;
        }
        Err(e @ (Error::UndefinedMetric(_) | Error::Validation(_))) => warnings.push(format!("{metric}: {e}")),
        Err(e) => return Err(e),
    }
    match mcfadden_pseudo_r2(&x, &y) {
        Ok(p) => {
            row.pseudo_r2 = Some(p.r2);
            row.separable = Some(p.separable);
        }
        Err(e @ (Error::UndefinedMetric(_) | Error::Validation(_))) => warnings.push(format!("{metric}: {e}")),
        Err(e) => return Err(e),
    }
    Ok(row)
}

pub fn correlate_block(
    model_id: &str,
    labeled: &[(&FeatureRecord, bool)],
    n_unlabeled: usize,
) -> Result<CorrelationBlock> {
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for m in UeMetric::ALL {
        let pairs: Vec<(f64, bool)> = labeled.iter().filter_map(|(r, y)| r.ue(m).map(|v| (v, *y))).collect();
        rows.push(correlation_row(m.field(), &pairs, &mut warnings)?);
    }
    if labeled.iter().any(|(r, _)| r.p_evergreen.is_some()) {
        let pairs: Vec<(f64, bool)> = labeled
            .iter()
            .filter_map(|(r, y)| r.p_evergreen.map(|v| (v, *y)))
            .collect();
        rows.push(correlation_row(P_EVERGREEN, &pairs, &mut warnings)?);
    }
    Ok(CorrelationBlock {
        model_id: model_id.to_string(),
        n_labeled: labeled.len(),
        n_positive: labeled.iter().filter(|(_, y)| *y).count(),
        n_unlabeled,
        rows,
        warnings,
    })
}

/// Labels come from `--labels` when given, else from the questions' evergreen labels.
pub fn cmd_correlate(config: &RunConfig) -> Result<CorrelationReport> {
    config.validate()?;
    let features_path = config
        .features
        .as_deref()
        .ok_or_else(|| Error::Configuration("correlate requires --features".into()))?;
    let features = load_features(features_path)?;
    let (label_source, labels): (LabelSource, HashMap<String, bool>) = match (&config.labels, &config.questions) {
        (Some(p), _) => (
            LabelSource::External,
            load_correctness(p)?.into_iter().map(|l| (l.question_id, l.y)).collect(),
        ),
        (None, Some(q)) => (
            LabelSource::Evergreen,
            load_question_set(q)?
                .into_iter()
                .filter_map(|q| q.evergreen_label.map(|y| (q.id, y)))
                .collect(),
        ),
        (None, None) => {
            return Err(Error::Configuration(
                "correlate requires a binary column: --labels or --questions with evergreen labels".into(),
            ))
        }
    };

    let mut groups: BTreeMap<&str, Vec<&FeatureRecord>> = BTreeMap::new();
    for f in &features {
        groups.entry(&f.model_id).or_default().push(f);
    }
    let mut blocks = Vec::new();
    for (model_id, records) in groups {
        let mut labeled: Vec<(&FeatureRecord, bool)> = records
            .iter()
            .filter_map(|r| labels.get(&r.question_id).map(|&y| (*r, y)))
            .collect();
        let n_unlabeled = records.len() - labeled.len();
        if labeled.is_empty() {
            return Err(Error::validation(format!(
                "no feature record of model {model_id:?} has a binary label"
            )));
        }
        if let Some(k) = config.settings.balanced {
            labeled = balanced_sample(&labeled, k, config.settings.seeds[0])?;
        }
        blocks.push(correlate_block(model_id, &labeled, n_unlabeled)?);
    }
    Ok(CorrelationReport {
        metadata: config.metadata("correlate")?,
        label_source,
        balanced_per_class: config.settings.balanced,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_sample_is_exact_and_seeded() {
        let items: Vec<(usize, bool)> = (0..50).map(|i| (i, i % 5 == 0)).collect();
        let a = balanced_sample(&items, 8, 3).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a.iter().filter(|p| p.1).count(), 8);
        assert_eq!(a, balanced_sample(&items, 8, 3).unwrap());
        assert!(a.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(balanced_sample(&items, 11, 3).is_err());
    }
}
