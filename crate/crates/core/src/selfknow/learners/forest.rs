//! Random forest of CART classifiers with optional bootstrap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, positive_rate, Tree, TreeParams};
use super::{class_weights, Matrix};
use crate::selfknow::spec::{ClassWeight, Criterion, MaxFeatures, Splitter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub criterion: Criterion,
    pub class_weight: ClassWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit(x: &Matrix, y: &[bool], params: &ForestParams, seed: u64) -> ForestModel {
    let n = y.len();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v))).collect();
    let base = class_weights(y, params.class_weight);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        max_features: params.max_features,
        criterion: params.criterion,
        splitter: Splitter::Best,
    };
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(params.n_estimators);
    for _ in 0..params.n_estimators {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let mut weights = base.clone();
        if params.bootstrap {
            // bootstrap multiplicities become sample weights
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            for (w, c) in weights.iter_mut().zip(&counts) {
                *w *= f64::from(*c);
            }
        }
        let samples: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
        let leaf = positive_rate(&targets, &weights);
        trees.push(grow(x, &targets, &weights, samples, &tree_params, &mut rng, &leaf));
    }
    ForestModel { trees }
}
