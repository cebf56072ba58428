//! Response-similarity graphs and the normalized-Laplacian spectral score.

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_answer_text, validate_similarity, GenerationTrace};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, SquareMatrix};
use crate::uncertainty::lexical::rouge_l_f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Provided,
    LexicalFallback,
}

/// Symmetric similarity graph over M >= 2 sampled responses.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    weights: SquareMatrix,
    pub provenance: Provenance,
}

impl SimilarityGraph {
    pub fn new(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: rows.len(),
            });
        }
        validate_similarity(rows, rows.len())?;
        let m = rows.len();
        let mut weights = SquareMatrix::identity(m);
        for i in 0..m {
            for j in (i + 1)..m {
                let w = (rows[i][j] + rows[j][i]) / 2.0;
                weights.set(i, j, w);
                weights.set(j, i, w);
            }
        }
        Ok(Self { weights, provenance })
    }

    pub fn size(&self) -> usize {
        self.weights.dim()
    }

    pub fn weights(&self) -> &SquareMatrix {
        &self.weights
    }

    /// `I - D^{-1/2} W D^{-1/2}` with `D` the row sums of `W`.
    pub fn normalized_laplacian(&self) -> Result<SquareMatrix> {
        let n = self.size();
        let w = &self.weights;
        let mut inv_sqrt_deg = Vec::with_capacity(n);
        for i in 0..n {
            let d: f64 = (0..n).map(|j| w.get(i, j)).sum();
            if d <= 0.0 {
                return Err(Error::DegenerateGraph(format!("row {i} has zero degree")));
            }
            inv_sqrt_deg.push(1.0 / d.sqrt());
        }
        let mut l = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let a = inv_sqrt_deg[i] * w.get(i, j) * inv_sqrt_deg[j];
                l.set(i, j, if i == j { 1.0 - a } else { -a });
            }
        }
        Ok(l)
    }
}

/// Uses the trace's similarity matrix when present, else pairwise ROUGE-L over samples.
pub fn response_similarity_matrix(trace: &GenerationTrace) -> Result<SimilarityGraph> {
    let m = trace.samples.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: m });
    }
    if let Some(rows) = &trace.similarity {
        return SimilarityGraph::new(rows, Provenance::Provided);
    }
    let normalized: Vec<String> = trace.samples.iter().map(|s| normalize_answer_text(s)).collect();
    let mut rows = vec![vec![0.0; m]; m];
    for i in 0..m {
        rows[i][i] = 1.0;
        for j in (i + 1)..m {
            let f = rouge_l_f(&normalized[i], &normalized[j]);
            rows[i][j] = f;
            rows[j][i] = f;
        }
    }
    SimilarityGraph::new(&rows, Provenance::LexicalFallback)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianVariant {
    /// `sum_k max(0, 1 - lambda_k)`
    #[default]
    LinClipped,
    /// `sum_k lambda_k`
    RawSum,
}

pub fn eigval_laplacian_score(graph: &SimilarityGraph, variant: LaplacianVariant) -> Result<f64> {
    let eigenvalues = symmetric_eigenvalues(&graph.normalized_laplacian()?)?;
    Ok(match variant {
        LaplacianVariant::LinClipped => eigenvalues.iter().map(|l| (1.0 - l).max(0.0)).sum(),
        LaplacianVariant::RawSum => eigenvalues.iter().sum(),
    })
}
