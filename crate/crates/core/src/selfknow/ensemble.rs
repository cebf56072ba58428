//! Grid search over model specs and the top-2 soft-voting ensemble.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learners::{train_model, Matrix, TrainedModel};
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::metrics::auroc;

pub const VALIDATION_SIZE: usize = 100;
/// Below this many rows the validation subset shrinks to a fifth of the table.
pub const MIN_ROWS_FOR_FULL_VALIDATION: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSpec {
    pub spec: ModelSpec,
    /// Mean validation AUROC over seeds.
    pub score: f64,
    pub seed_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSpec {
    pub spec: ModelSpec,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub ranked: Vec<RankedSpec>,
    pub failed: Vec<FailedSpec>,
    pub validation_size: usize,
    pub warnings: Vec<String>,
}

pub fn validation_size(n_rows: usize) -> usize {
    if n_rows >= MIN_ROWS_FOR_FULL_VALIDATION {
        VALIDATION_SIZE
    } else {
        ((n_rows as f64 * 0.2).round() as usize).clamp(1, n_rows.saturating_sub(1).max(1))
    }
}

struct Fold {
    x_fit: Matrix,
    y_fit: Vec<bool>,
    x_val: Matrix,
    y_val: Vec<bool>,
    seed: u64,
}

/// Ranks `specs` by mean validation AUROC over one random validation subset per seed.
pub fn grid_search(specs: &[ModelSpec], x: &Matrix, y: &[bool], seeds: &[u64]) -> Result<GridSearchResult> {
    if specs.is_empty() || seeds.is_empty() {
        return Err(Error::Configuration(
            "grid search needs at least one spec and one seed".into(),
        ));
    }
    for s in specs {
        s.check_grid()?;
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mut warnings = Vec::new();
    let val_size = validation_size(n);
    if n < MIN_ROWS_FOR_FULL_VALIDATION {
        warnings.push(format!(
            "{n} training rows; validation subset scaled to {val_size} rows"
        ));
    }
    let folds: Vec<Fold> = seeds
        .iter()
        .map(|&seed| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (val, fit) = order.split_at(val_size);
            Fold {
                x_fit: x.select_rows(fit),
                y_fit: fit.iter().map(|&i| y[i]).collect(),
                x_val: x.select_rows(val),
                y_val: val.iter().map(|&i| y[i]).collect(),
                seed,
            }
        })
        .collect();
    for f in &folds {
        let pos = f.y_val.iter().filter(|&&v| v).count();
        if pos == 0 || pos == f.y_val.len() {
            warnings.push(format!(
                "seed {}: validation subset has a single class; AUROC taken as 0.5",
                f.seed
            ));
        }
    }

    let outcomes: Vec<std::result::Result<RankedSpec, FailedSpec>> = specs
        .par_iter()
        .map(|spec| {
            let mut seed_scores = Vec::with_capacity(folds.len());
            for f in &folds {
                let model = train_model(spec, &f.x_fit, &f.y_fit, f.seed).map_err(|e| FailedSpec {
                    spec: *spec,
                    error: e.to_string(),
                })?;
                let p = model.predict_all(&f.x_val);
                seed_scores.push(auroc(&p, &f.y_val).unwrap_or(0.5));
            }
            Ok(RankedSpec {
                spec: *spec,
                score: seed_scores.iter().sum::<f64>() / seed_scores.len() as f64,
                seed_scores,
            })
        })
        .collect();
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => ranked.push(r),
            Err(f) => failed.push(f),
        }
    }
    rank(&mut ranked);
    Ok(GridSearchResult {
        ranked,
        failed,
        validation_size: val_size,
        warnings,
    })
}

/// Descending score; ties go to fewer non-default hyperparameters, then canonical spec order.
pub fn rank(ranked: &mut [RankedSpec]) {
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.spec.non_default_count().cmp(&b.spec.non_default_count()))
            .then_with(|| a.spec.canonical().cmp(&b.spec.canonical()))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub spec: ModelSpec,
    pub model: TrainedModel,
}

/// Mean of member probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    pub members: Vec<EnsembleMember>,
}

impl VotingEnsemble {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.members.iter().map(|m| m.model.predict_proba(row)).sum::<f64>() / self.members.len() as f64
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_proba(x.row(i))).collect()
    }
}

/// Retrains the two best distinct specs on the full table.
pub fn build_ensemble(ranked: &[RankedSpec], x: &Matrix, y: &[bool], seed: u64) -> Result<VotingEnsemble> {
    let mut chosen: Vec<ModelSpec> = Vec::with_capacity(2);
    for r in ranked {
        if !chosen.contains(&r.spec) {
            chosen.push(r.spec);
            if chosen.len() == 2 {
                break;
            }
        }
    }
    if chosen.len() < 2 {
        return Err(Error::Configuration(format!(
            "ensemble needs 2 distinct ranked specs, found {}",
            chosen.len()
        )));
    }
    let members = chosen
        .into_par_iter()
        .map(|spec| {
            Ok(EnsembleMember {
                model: train_model(&spec, x, y, seed)?,
                spec,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VotingEnsemble { members })
}
