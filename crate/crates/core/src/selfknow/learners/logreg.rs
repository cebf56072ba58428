//! L2-regularized logistic regression fit by accelerated gradient descent.

use serde::{Deserialize, Serialize};

use super::{class_weights, Matrix};
use crate::error::Result;
use crate::selfknow::spec::ClassWeight;

/// Stop once the gradient norm falls below this fraction of the total sample weight.
pub const GRAD_TOLERANCE: f64 = 1e-6;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn neg_log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `sum_i s_i * logloss_i(w, b) + |w|^2 / (2C)`; parameters are `[w..., b]`.
pub struct LogisticObjective<'a> {
    pub x: &'a Matrix,
    pub y: &'a [bool],
    pub sample_weight: Vec<f64>,
    pub c: f64,
}

impl LogisticObjective<'_> {
    fn margin(&self, theta: &[f64], i: usize) -> f64 {
        let d = self.x.n_cols();
        self.x.row(i).iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d]
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let d = self.x.n_cols();
        let loss: f64 = (0..self.x.n_rows())
            .map(|i| {
                let z = self.margin(theta, i);
                self.sample_weight[i] * neg_log_sigmoid(if self.y[i] { z } else { -z })
            })
            .sum();
        loss + theta[..d].iter().map(|w| w * w).sum::<f64>() / (2.0 * self.c)
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.n_cols();
        let mut g = vec![0.0; d + 1];
        for i in 0..self.x.n_rows() {
            let r = self.sample_weight[i] * (sigmoid(self.margin(theta, i)) - f64::from(u8::from(self.y[i])));
            for (gj, xj) in g.iter_mut().zip(self.x.row(i)) {
                *gj += r * xj;
            }
            g[d] += r;
        }
        for j in 0..d {
            g[j] += theta[j] / self.c;
        }
        g
    }

    /// Upper bound on the Hessian's largest eigenvalue.
    pub fn lipschitz(&self) -> f64 {
        let data: f64 = (0..self.x.n_rows())
            .map(|i| self.sample_weight[i] * (1.0 + self.x.row(i).iter().map(|v| v * v).sum::<f64>()))
            .sum();
        0.25 * data + 1.0 / self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogregModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let z: f64 = row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept;
        sigmoid(z)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fit(x: &Matrix, y: &[bool], c: f64, class_weight: ClassWeight, max_iter: usize) -> Result<LogregModel> {
    let objective = LogisticObjective {
        x,
        y,
        sample_weight: class_weights(y, class_weight),
        c,
    };
    let tol = GRAD_TOLERANCE * objective.sample_weight.iter().sum::<f64>();
    let step = 1.0 / objective.lipschitz();
    let dim = x.n_cols() + 1;
    let mut theta = vec![0.0; dim];
    let mut prev = theta.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let g_here = objective.gradient(&theta);
        if norm(&g_here) < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        let look: Vec<f64> = theta.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
        let g = objective.gradient(&look);
        let next: Vec<f64> = look.iter().zip(&g).map(|(a, gi)| a - step * gi).collect();
        // restart momentum when the step points uphill
        let uphill: f64 = g
            .iter()
            .zip(next.iter().zip(&theta))
            .map(|(gi, (n, o))| gi * (n - o))
            .sum();
        prev = std::mem::replace(&mut theta, next);
        if uphill > 0.0 {
            t = 1.0;
        } else {
            t = t_next;
        }
    }
    let intercept = theta.pop().unwrap();
    Ok(LogregModel {
        weights: theta,
        intercept,
        iterations,
        converged,
    })
}
