//! Brute-force k-nearest neighbours.

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::selfknow::spec::{KnnMetric, KnnWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: KnnMetric,
    pub weights: KnnWeights,
    pub x: Matrix,
    pub y: Vec<bool>,
}

pub fn fit(x: &Matrix, y: &[bool], k: usize, metric: KnnMetric, weights: KnnWeights) -> Result<KnnModel> {
    if k == 0 || k > x.n_rows() {
        return Err(Error::precondition(format!(
            "n_neighbors = {k} with {} training rows",
            x.n_rows()
        )));
    }
    Ok(KnnModel {
        k,
        metric,
        weights,
        x: x.clone(),
        y: y.to_vec(),
    })
}

impl KnnModel {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.metric {
            KnnMetric::Euclidean => a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt(),
            KnnMetric::Manhattan => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum(),
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = (0..self.x.n_rows())
            .map(|i| (self.distance(row, self.x.row(i)), i))
            .collect();
        // ties in distance go to the lower training index
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &d[..self.k];
        let label = |i: usize| f64::from(u8::from(self.y[i]));
        match self.weights {
            KnnWeights::Uniform => nearest.iter().map(|&(_, i)| label(i)).sum::<f64>() / self.k as f64,
            KnnWeights::Distance => {
                let exact: Vec<usize> = nearest
                    .iter()
                    .filter(|(dist, _)| *dist == 0.0)
                    .map(|&(_, i)| i)
                    .collect();
                if !exact.is_empty() {
                    return exact.iter().map(|&i| label(i)).sum::<f64>() / exact.len() as f64;
                }
                let (num, den) = nearest
                    .iter()
                    .fold((0.0, 0.0), |(n, s), &(dist, i)| (n + label(i) / dist, s + 1.0 / dist));
                num / den
            }
        }
    }
}
