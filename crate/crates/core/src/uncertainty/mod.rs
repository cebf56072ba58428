//! Uncertainty estimators over recorded generation traces.
//!
//! Every score is oriented so that a larger value means a less reliable answer.
//! Logit-based scores (perplexity, token entropies, SAR) need only the greedy
//! decoding steps; consistency-based scores (lexical similarity, Laplacian
//! eigenvalues) need at least two sampled responses and are reported as absent
//! otherwise.

pub mod lexical;
pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_answer_text, GenerationTrace, TokenStep};
use crate::error::{Error, Result};
use crate::provenance::fingerprint;

pub use lexical::{neg_lexical_similarity, rouge_l_f};
pub use spectral::{eigval_laplacian_score, response_similarity_matrix, LaplacianVariant, Provenance, SimilarityGraph};

/// `exp(-(1/T) * sum_t logprob_t)`.
pub fn perplexity(steps: &[TokenStep]) -> Result<f64> {
    if steps.is_empty() {
        return Err(Error::precondition("perplexity of an empty sequence"));
    }
    let mut total = 0.0;
    for (i, s) in steps.iter().enumerate() {
        if !s.logprob.is_finite() || s.logprob > 1e-9 {
            return Err(Error::validation(format!(
                "step {i}: logprob {} is not <= 0",
                s.logprob
            )));
        }
        total += s.logprob;
    }
    Ok((-total / steps.len() as f64).exp())
}

/// How probability mass outside the recorded top-k contributes to entropy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TailMode {
    /// The tail is one pseudo-token of mass `r`: adds `-r ln r`.
    #[default]
    Bucket,
    /// The tail is spread uniformly over the `vocab_size - |topk|` unseen tokens.
    Spread { vocab_size: usize },
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Entropy of one step's predictive distribution.
pub fn step_entropy(step: &TokenStep, tail_mode: TailMode) -> Result<f64> {
    let r = step.tail_mass;
    if !(0.0..1.0).contains(&r) {
        return Err(Error::validation(format!("tail_mass {r} outside [0, 1)")));
    }
    let head: f64 = -step.topk.iter().map(|(_, p)| plogp(*p)).sum::<f64>();
    let tail = match tail_mode {
        TailMode::Bucket => -plogp(r),
        TailMode::Spread { vocab_size } => {
            let k = step.topk.len();
            if vocab_size <= k {
                return Err(Error::Configuration(format!(
                    "spread tail mode needs vocab_size > |topk| ({vocab_size} <= {k})"
                )));
            }
            if r > 0.0 {
                -r * (r / (vocab_size - k) as f64).ln()
            } else {
                0.0
            }
        }
    };
    Ok((head + tail).max(0.0))
}

/// Per-step entropies `H_t`.
pub fn token_entropy_profile(steps: &[TokenStep], tail_mode: TailMode) -> Result<Vec<f64>> {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| step_entropy(s, tail_mode).map_err(|e| Error::validation(format!("step {i}: {e}"))))
        .collect()
}

pub fn mean_token_entropy(profile: &[f64]) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::precondition("entropy of an empty sequence"));
    }
    Ok(profile.iter().sum::<f64>() / profile.len() as f64)
}

pub fn max_token_entropy(profile: &[f64]) -> Result<f64> {
    profile
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::precondition("entropy of an empty sequence"))
}

/// Leave-one-token-out relevance: `1 - ROUGE-L(full, full without token t)`.
pub fn lexical_token_relevance<S: AsRef<str>>(tokens: &[S]) -> Vec<f64> {
    let full = normalize_answer_text(&tokens.iter().map(AsRef::as_ref).collect::<String>());
    (0..tokens.len())
        .map(|skip| {
            let reduced: String = tokens
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, t)| t.as_ref())
                .collect();
            let reduced = normalize_answer_text(&reduced);
            (1.0 - rouge_l_f(&full, &reduced)).clamp(0.0, 1.0)
        })
        .collect()
}

/// Relevance-weighted summed entropy: `T * sum_t R~_t H_t`, with `R~` the
/// relevance normalized to sum to one (uniform when all relevances are zero).
pub fn sar(entropies: &[f64], relevance: &[f64]) -> Result<f64> {
    let t = entropies.len();
    if t == 0 {
        return Err(Error::precondition("SAR of an empty sequence"));
    }
    if relevance.len() != t {
        return Err(Error::validation(format!(
            "relevance has length {} but there are {t} entropies",
            relevance.len()
        )));
    }
    if let Some(r) = relevance.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::validation(format!("relevance {r} outside [0, 1]")));
    }
    let total: f64 = relevance.iter().sum();
    let weighted: f64 = if total > 0.0 {
        entropies.iter().zip(relevance).map(|(h, r)| r / total * h).sum()
    } else {
        entropies.iter().sum::<f64>() / t as f64
    };
    Ok(weighted * t as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceSource {
    /// Use the trace's `token_relevance` channel when present, else the lexical proxy.
    #[default]
    PreferProvided,
    LexicalOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    pub tail_mode: TailMode,
    pub relevance: RelevanceSource,
    pub laplacian_variant: LaplacianVariant,
}

impl UncertaintyConfig {
    pub fn fingerprint(&self) -> String {
        fingerprint(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// The six uncertainty scores for one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyVector {
    pub question_id: String,
    pub perplexity: f64,
    pub mean_token_entropy: f64,
    pub max_token_entropy: f64,
    pub neg_lexical_similarity: Option<f64>,
    pub sar: f64,
    pub eigval_laplacian: Option<f64>,
}

pub fn compute_uncertainty(trace: &GenerationTrace, config: &UncertaintyConfig) -> Result<UncertaintyVector> {
    let steps = &trace.greedy_steps;
    let ppl = perplexity(steps)?;
    let profile = token_entropy_profile(steps, config.tail_mode)?;
    let relevance = match (config.relevance, &trace.token_relevance) {
        (RelevanceSource::PreferProvided, Some(r)) => r.clone(),
        _ => lexical_token_relevance(&trace.greedy_tokens()),
    };
    let sar_score = sar(&profile, &relevance)?;

    let (lexsim, laplacian) = if trace.samples.len() >= 2 {
        let graph = response_similarity_matrix(trace)?;
        (
            Some(neg_lexical_similarity(&trace.samples)?),
            Some(eigval_laplacian_score(&graph, config.laplacian_variant)?),
        )
    } else {
        (None, None)
    };

    Ok(UncertaintyVector {
        question_id: trace.question_id.clone(),
        perplexity: ppl,
        mean_token_entropy: mean_token_entropy(&profile)?,
        max_token_entropy: max_token_entropy(&profile)?,
        neg_lexical_similarity: lexsim,
        sar: sar_score,
        eigval_laplacian: laplacian,
    })
}
