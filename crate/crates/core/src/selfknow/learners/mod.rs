//! From-scratch binary classifiers returning `P(y = 1)`.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod logreg;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selfknow::spec::{ClassWeight, Family, ModelSpec};

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::validation(format!(
                "row {bad} has {} columns, expected {cols}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Per-example loss weights for a class-weight option.
pub fn class_weights(y: &[bool], option: ClassWeight) -> Vec<f64> {
    match option {
        ClassWeight::Unit | ClassWeight::None => vec![1.0; y.len()],
        ClassWeight::Balanced => {
            let n = y.len() as f64;
            let pos = y.iter().filter(|&&v| v).count() as f64;
            let (wp, wn) = (n / (2.0 * pos), n / (2.0 * (n - pos)));
            y.iter().map(|&v| if v { wp } else { wn }).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    Logreg(logreg::LogregModel),
    Knn(knn::KnnModel),
    DecisionTree(tree::Tree),
    RandomForest(forest::ForestModel),
    GradientBoosting(boosting::BoostingModel),
}

impl TrainedModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        match self {
            TrainedModel::Logreg(m) => m.predict_proba(row),
            TrainedModel::Knn(m) => m.predict_proba(row),
            TrainedModel::DecisionTree(m) => m.predict(row),
            TrainedModel::RandomForest(m) => m.predict_proba(row),
            TrainedModel::GradientBoosting(m) => m.predict_proba(row),
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_proba(x.row(i))).collect()
    }
}

/// Fits `spec` on `(x, y)`; deterministic in `(spec, data, seed)`.
pub fn train_model(spec: &ModelSpec, x: &Matrix, y: &[bool], seed: u64) -> Result<TrainedModel> {
    spec.check_grid()?;
    if x.n_rows() != y.len() {
        return Err(Error::validation(format!("{} rows vs {} labels", x.n_rows(), y.len())));
    }
    let pos = y.iter().filter(|&&v| v).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateData("training labels have a single class".into()));
    }
    if spec.family() != Family::Knn && pos.min(neg) < 2 {
        return Err(Error::precondition(format!(
            "{:?} needs at least 2 examples per class",
            spec.family()
        )));
    }
    Ok(match *spec {
        ModelSpec::Logreg {
            c,
            class_weight,
            max_iter,
            ..
        } => TrainedModel::Logreg(logreg::fit(x, y, c, class_weight, max_iter)?),
        ModelSpec::Knn {
            n_neighbors,
            metric,
            weights,
            ..
        } => TrainedModel::Knn(knn::fit(x, y, n_neighbors, metric, weights)?),
        ModelSpec::DecisionTree {
            max_depth,
            max_features,
            criterion,
            splitter,
        } => TrainedModel::DecisionTree(tree::fit_classifier(
            x,
            y,
            &tree::TreeParams {
                max_depth,
                max_features,
                criterion,
                splitter,
            },
            seed,
        )),
        ModelSpec::RandomForest {
            n_estimators,
            max_depth,
            max_features,
            bootstrap,
            criterion,
            class_weight,
        } => TrainedModel::RandomForest(forest::fit(
            x,
            y,
            &forest::ForestParams {
                n_estimators,
                max_depth,
                max_features,
                bootstrap,
                criterion,
                class_weight,
            },
            seed,
        )),
        ModelSpec::GradientBoosting {
            n_estimators,
            learning_rate,
            max_depth,
            max_features,
        } => TrainedModel::GradientBoosting(boosting::fit(
            x,
            y,
            &boosting::BoostingParams {
                n_estimators,
                learning_rate,
                max_depth,
                max_features,
            },
            seed,
        )),
    })
}
