//! Gradient boosting on the log-loss with Newton-step leaf values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logreg::sigmoid;
use super::tree::{grow, Tree, TreeParams};
use super::Matrix;
use crate::selfknow::spec::{Criterion, MaxFeatures, Splitter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingModel {
    /// Prior log-odds.
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl BoostingModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

pub fn fit(x: &Matrix, y: &[bool], params: &BoostingParams, seed: u64) -> BoostingModel {
    let n = y.len();
    let labels: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v))).collect();
    let prior = labels.iter().sum::<f64>() / n as f64;
    let init = (prior / (1.0 - prior)).ln();
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        max_features: params.max_features,
        criterion: Criterion::SquaredError,
        splitter: Splitter::Best,
    };
    let unit = vec![1.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = vec![init; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    for _ in 0..params.n_estimators {
        let p: Vec<f64> = raw.iter().map(|&f| sigmoid(f)).collect();
        let residual: Vec<f64> = labels.iter().zip(&p).map(|(yi, pi)| yi - pi).collect();
        let hessian: Vec<f64> = p.iter().map(|pi| pi * (1.0 - pi)).collect();
        let newton = |members: &[usize]| {
            let num: f64 = members.iter().map(|&i| residual[i]).sum();
            let den: f64 = members.iter().map(|&i| hessian[i]).sum();
            if den.abs() < 1e-150 {
                0.0
            } else {
                num / den
            }
        };
        let tree = grow(x, &residual, &unit, (0..n).collect(), &tree_params, &mut rng, &newton);
        for (i, f) in raw.iter_mut().enumerate() {
            *f += params.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    BoostingModel {
        init,
        learning_rate: params.learning_rate,
        trees,
    }
}
