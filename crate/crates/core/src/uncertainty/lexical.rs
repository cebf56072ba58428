//! ROUGE-L lexical overlap between answers.

use crate::corpus::normalize_answer_text;
use crate::error::{Error, Result};

fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure over whitespace tokens. Inputs are expected to be normalized.
pub fn rouge_l_f(a: &str, b: &str) -> f64 {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    let lcs = lcs_len(&ta, &tb);
    if lcs == 0 {
        return 0.0;
    }
    let lcs = lcs as f64;
    let recall = lcs / ta.len() as f64;
    let precision = lcs / tb.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// One minus the mean pairwise ROUGE-L F over all unordered sample pairs.
pub fn neg_lexical_similarity<S: AsRef<str>>(samples: &[S]) -> Result<f64> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: m });
    }
    let normalized: Vec<String> = samples.iter().map(|s| normalize_answer_text(s.as_ref())).collect();
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            total += rouge_l_f(&normalized[i], &normalized[j]);
        }
    }
    let pairs = (m * (m - 1) / 2) as f64;
    Ok((1.0 - total / pairs).clamp(0.0, 1.0))
}
