//! Model specifications and the hyperparameter grids they are drawn from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logreg,
    Knn,
    DecisionTree,
    RandomForest,
    GradientBoosting,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Logreg,
        Family::Knn,
        Family::DecisionTree,
        Family::RandomForest,
        Family::GradientBoosting,
    ];
}

/// Accepted for grid fidelity; both map to the built-in gradient optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Lbfgs,
    Liblinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    /// Per-example weight `N / (2 N_class)`.
    Balanced,
    /// Explicit `{0: 1, 1: 1}`.
    Unit,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnMetric {
    Euclidean,
    Manhattan,
}

/// Accepted for grid fidelity; neighbours are always found by brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnAlgorithm {
    Auto,
    BallTree,
    KdTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaxFeatures {
    #[serde(rename = "0.2")]
    Fifth,
    #[serde(rename = "0.4")]
    TwoFifths,
    #[serde(rename = "sqrt")]
    Sqrt,
    #[serde(rename = "log2")]
    Log2,
    #[serde(rename = "all")]
    All,
}

impl MaxFeatures {
    pub const GRID: [MaxFeatures; 5] = [
        MaxFeatures::Fifth,
        MaxFeatures::TwoFifths,
        MaxFeatures::Sqrt,
        MaxFeatures::Log2,
        MaxFeatures::All,
    ];

    /// Features examined per split, at least one.
    pub fn resolve(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let k = match self {
            MaxFeatures::Fifth => (0.2 * n).floor(),
            MaxFeatures::TwoFifths => (0.4 * n).floor(),
            MaxFeatures::Sqrt => n.sqrt().floor(),
            MaxFeatures::Log2 => n.log2().floor(),
            MaxFeatures::All => n,
        };
        (k as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Logreg {
        c: f64,
        solver: Solver,
        class_weight: ClassWeight,
        max_iter: usize,
    },
    Knn {
        n_neighbors: usize,
        metric: KnnMetric,
        algorithm: KnnAlgorithm,
        weights: KnnWeights,
    },
    DecisionTree {
        max_depth: Option<usize>,
        max_features: MaxFeatures,
        criterion: Criterion,
        splitter: Splitter,
    },
    RandomForest {
        n_estimators: usize,
        max_depth: Option<usize>,
        max_features: MaxFeatures,
        bootstrap: bool,
        criterion: Criterion,
        class_weight: ClassWeight,
    },
    GradientBoosting {
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
        max_features: MaxFeatures,
    },
}

pub const LOGREG_C: [f64; 3] = [0.01, 0.1, 1.0];
pub const LOGREG_MAX_ITER: [usize; 3] = [10_000, 15_000, 20_000];
pub const KNN_NEIGHBORS: [usize; 6] = [5, 7, 9, 11, 13, 15];
pub const TREE_MAX_DEPTH: [Option<usize>; 5] = [Some(3), Some(5), Some(7), Some(10), None];
pub const FOREST_ESTIMATORS: [usize; 3] = [25, 35, 50];
pub const FOREST_MAX_DEPTH: [Option<usize>; 5] = [Some(3), Some(5), Some(7), Some(9), Some(11)];
pub const BOOSTING_ESTIMATORS: [usize; 3] = [25, 35, 50];
pub const BOOSTING_LEARNING_RATE: [f64; 3] = [0.001, 0.01, 0.05];
pub const BOOSTING_MAX_DEPTH: [usize; 5] = [3, 4, 5, 7, 9];

const CLASS_WEIGHTS: [ClassWeight; 3] = [ClassWeight::Balanced, ClassWeight::Unit, ClassWeight::None];
const GINI_ENTROPY: [Criterion; 2] = [Criterion::Gini, Criterion::Entropy];

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Logreg { .. } => Family::Logreg,
            ModelSpec::Knn { .. } => Family::Knn,
            ModelSpec::DecisionTree { .. } => Family::DecisionTree,
            ModelSpec::RandomForest { .. } => Family::RandomForest,
            ModelSpec::GradientBoosting { .. } => Family::GradientBoosting,
        }
    }

    /// Canonical JSON, used as the final ranking tie-break and as a map key.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("specs always serialize")
    }

    /// Number of hyperparameters that differ from the reference library defaults.
    pub fn non_default_count(&self) -> usize {
        let flags: Vec<bool> = match *self {
            ModelSpec::Logreg {
                c,
                solver,
                class_weight,
                max_iter,
            } => vec![
                c != 1.0,
                solver != Solver::Lbfgs,
                class_weight != ClassWeight::None,
                max_iter != 100,
            ],
            ModelSpec::Knn {
                n_neighbors,
                metric,
                algorithm,
                weights,
            } => vec![
                n_neighbors != 5,
                metric != KnnMetric::Euclidean,
                algorithm != KnnAlgorithm::Auto,
                weights != KnnWeights::Uniform,
            ],
            ModelSpec::DecisionTree {
                max_depth,
                max_features,
                criterion,
                splitter,
            } => vec![
                max_depth.is_some(),
                max_features != MaxFeatures::All,
                criterion != Criterion::Gini,
                splitter != Splitter::Best,
            ],
            ModelSpec::RandomForest {
                n_estimators,
                max_depth,
                max_features,
                bootstrap,
                criterion,
                class_weight,
            } => vec![
                n_estimators != 100,
                max_depth.is_some(),
                max_features != MaxFeatures::Sqrt,
                !bootstrap,
                criterion != Criterion::Gini,
                class_weight != ClassWeight::None,
            ],
            ModelSpec::GradientBoosting {
                n_estimators,
                learning_rate,
                max_depth,
                max_features,
            } => vec![
                n_estimators != 100,
                learning_rate != 0.1,
                max_depth != 3,
                max_features != MaxFeatures::All,
            ],
        };
        flags.into_iter().filter(|&f| f).count()
    }

    /// Rejects any numeric value not drawn from the declared grid.
    pub fn check_grid(&self) -> Result<()> {
        let ok = match *self {
            ModelSpec::Logreg { c, max_iter, .. } => LOGREG_C.contains(&c) && LOGREG_MAX_ITER.contains(&max_iter),
            ModelSpec::Knn { n_neighbors, .. } => KNN_NEIGHBORS.contains(&n_neighbors),
            ModelSpec::DecisionTree {
                max_depth, criterion, ..
            } => TREE_MAX_DEPTH.contains(&max_depth) && GINI_ENTROPY.contains(&criterion),
            ModelSpec::RandomForest {
                n_estimators,
                max_depth,
                criterion,
                ..
            } => {
                FOREST_ESTIMATORS.contains(&n_estimators)
                    && FOREST_MAX_DEPTH.contains(&max_depth)
                    && GINI_ENTROPY.contains(&criterion)
            }
            ModelSpec::GradientBoosting {
                n_estimators,
                learning_rate,
                max_depth,
                ..
            } => {
                BOOSTING_ESTIMATORS.contains(&n_estimators)
                    && BOOSTING_LEARNING_RATE.contains(&learning_rate)
                    && BOOSTING_MAX_DEPTH.contains(&max_depth)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GridViolation(self.canonical()))
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Every combination of the declared grid.
    #[default]
    Full,
    /// A small subset of the declared grid for fast runs.
    Compact,
}

pub fn full_grid(family: Family) -> Vec<ModelSpec> {
    let mut out = Vec::new();
    match family {
        Family::Logreg => {
            for c in LOGREG_C {
                for solver in [Solver::Lbfgs, Solver::Liblinear] {
                    for class_weight in CLASS_WEIGHTS {
                        for max_iter in LOGREG_MAX_ITER {
                            out.push(ModelSpec::Logreg {
                                c,
                                solver,
                                class_weight,
                                max_iter,
                            });
                        }
                    }
                }
            }
        }
        Family::Knn => {
            for n_neighbors in KNN_NEIGHBORS {
                for metric in [KnnMetric::Euclidean, KnnMetric::Manhattan] {
                    for algorithm in [KnnAlgorithm::Auto, KnnAlgorithm::BallTree, KnnAlgorithm::KdTree] {
                        for weights in [KnnWeights::Uniform, KnnWeights::Distance] {
                            out.push(ModelSpec::Knn {
                                n_neighbors,
                                metric,
                                algorithm,
                                weights,
                            });
                        }
                    }
                }
            }
        }
        Family::DecisionTree => {
            for max_depth in TREE_MAX_DEPTH {
                for max_features in MaxFeatures::GRID {
                    for criterion in GINI_ENTROPY {
                        for splitter in [Splitter::Best, Splitter::Random] {
                            out.push(ModelSpec::DecisionTree {
                                max_depth,
                                max_features,
                                criterion,
                                splitter,
                            });
                        }
                    }
                }
            }
        }
        Family::RandomForest => {
            for n_estimators in FOREST_ESTIMATORS {
                for max_depth in FOREST_MAX_DEPTH {
                    for max_features in MaxFeatures::GRID {
                        for bootstrap in [true, false] {
                            for criterion in GINI_ENTROPY {
                                for class_weight in CLASS_WEIGHTS {
                                    out.push(ModelSpec::RandomForest {
                                        n_estimators,
                                        max_depth,
                                        max_features,
                                        bootstrap,
                                        criterion,
                                        class_weight,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Family::GradientBoosting => {
            for n_estimators in BOOSTING_ESTIMATORS {
                for learning_rate in BOOSTING_LEARNING_RATE {
                    for max_depth in BOOSTING_MAX_DEPTH {
                        for max_features in MaxFeatures::GRID {
                            out.push(ModelSpec::GradientBoosting {
                                n_estimators,
                                learning_rate,
                                max_depth,
                                max_features,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn compact_grid(family: Family) -> Vec<ModelSpec> {
    match family {
        Family::Logreg => [0.01, 1.0]
            .into_iter()
            .flat_map(|c| {
                [ClassWeight::None, ClassWeight::Balanced].map(|class_weight| ModelSpec::Logreg {
                    c,
                    solver: Solver::Lbfgs,
                    class_weight,
                    max_iter: 10_000,
                })
            })
            .collect(),
        Family::Knn => [5, 15]
            .into_iter()
            .flat_map(|n_neighbors| {
                [KnnWeights::Uniform, KnnWeights::Distance].map(|weights| ModelSpec::Knn {
                    n_neighbors,
                    metric: KnnMetric::Euclidean,
                    algorithm: KnnAlgorithm::Auto,
                    weights,
                })
            })
            .collect(),
        Family::DecisionTree => [Some(3), Some(5)]
            .map(|max_depth| ModelSpec::DecisionTree {
                max_depth,
                max_features: MaxFeatures::All,
                criterion: Criterion::Gini,
                splitter: Splitter::Best,
            })
            .to_vec(),
        Family::RandomForest => [Some(3), Some(5)]
            .map(|max_depth| ModelSpec::RandomForest {
                n_estimators: 25,
                max_depth,
                max_features: MaxFeatures::Sqrt,
                bootstrap: true,
                criterion: Criterion::Gini,
                class_weight: ClassWeight::None,
            })
            .to_vec(),
        Family::GradientBoosting => vec![ModelSpec::GradientBoosting {
            n_estimators: 25,
            learning_rate: 0.05,
            max_depth: 3,
            max_features: MaxFeatures::All,
        }],
    }
}

pub fn grid(kind: GridKind, families: &[Family]) -> Vec<ModelSpec> {
    families
        .iter()
        .flat_map(|&f| match kind {
            GridKind::Full => full_grid(f),
            GridKind::Compact => compact_grid(f),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_sizes() {
        let sizes: Vec<usize> = Family::ALL.iter().map(|&f| full_grid(f).len()).collect();
        assert_eq!(sizes, vec![54, 72, 100, 900, 225]);
    }

    #[test]
    fn every_grid_point_validates() {
        for kind in [GridKind::Full, GridKind::Compact] {
            for spec in grid(kind, &Family::ALL) {
                spec.check_grid().unwrap();
            }
        }
    }

    #[test]
    fn off_grid_values_are_rejected() {
        let spec = ModelSpec::Logreg {
            c: 0.5,
            solver: Solver::Lbfgs,
            class_weight: ClassWeight::None,
            max_iter: 10_000,
        };
        assert!(matches!(spec.check_grid(), Err(Error::GridViolation(_))));
        let spec = ModelSpec::DecisionTree {
            max_depth: Some(3),
            max_features: MaxFeatures::All,
            criterion: Criterion::SquaredError,
            splitter: Splitter::Best,
        };
        assert!(spec.check_grid().is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = ModelSpec::GradientBoosting {
            n_estimators: 25,
            learning_rate: 0.05,
            max_depth: 3,
            max_features: MaxFeatures::Sqrt,
        };
        let v = serde_json::to_value(spec).unwrap();
        assert_eq!(v["family"], "gradient_boosting");
        assert_eq!(v["max_features"], "sqrt");
        let back: ModelSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
        assert_eq!(spec.non_default_count(), 3);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Fifth.resolve(2), 1);
        assert_eq!(MaxFeatures::TwoFifths.resolve(7), 2);
        assert_eq!(MaxFeatures::Sqrt.resolve(7), 2);
        assert_eq!(MaxFeatures::Log2.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
    }
}
