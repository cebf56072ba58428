//! Question, trace and correctness records: loading, validation, answer
//! normalization and In-Accuracy scoring.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::read_jsonl;

/// Tolerance on per-step probability mass and on the chosen-token probability.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Tolerance on similarity-matrix symmetry and unit diagonal. Graphs built
/// from an accepted matrix use its symmetric part.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Ru,
    En,
    Fr,
    De,
    He,
    Ar,
    Zh,
}

impl Language {
    /// Column order used by every per-language report.
    pub const ALL: [Language; 7] = [
        Language::Ru,
        Language::En,
        Language::Fr,
        Language::De,
        Language::He,
        Language::Ar,
        Language::Zh,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Language::Ru => "ru",
            Language::En => "en",
            Language::Fr => "fr",
            Language::De => "de",
            Language::He => "he",
            Language::Ar => "ar",
            Language::Zh => "zh",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::validation(format!("unknown language code {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(Error::validation(format!("unknown split {s:?}"))),
        }
    }
}

/// Serde helpers for binary labels stored as `0`/`1` (booleans are accepted on input).
pub(crate) mod bit {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    struct BitVisitor;

    impl Visitor<'_> for BitVisitor {
        type Value = bool;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("0 or 1")
        }

        fn visit_bool<E: de::Error>(self, v: bool) -> Result<bool, E> {
            Ok(v)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<bool, E> {
            match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(E::custom(format!("binary label must be 0 or 1, got {v}"))),
            }
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<bool, E> {
            match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(E::custom(format!("binary label must be 0 or 1, got {v}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        d.deserialize_any(BitVisitor)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(b) => s.serialize_u8(u8::from(*b)),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] bool);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// One QA item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub text: String,
    pub language: Language,
    /// `true` = evergreen, `false` = mutable.
    #[serde(with = "bit::option", default)]
    pub evergreen_label: Option<bool>,
    pub aliases: Vec<String>,
    pub split: Split,
    pub source_dataset: String,
}

#[derive(Deserialize)]
struct RawQuestion {
    id: String,
    text: String,
    language: String,
    #[serde(with = "bit::option", default)]
    evergreen_label: Option<bool>,
    #[serde(default)]
    aliases: Vec<String>,
    split: String,
    source_dataset: String,
}

/// Loads a question set, rejecting the whole file on the first invalid record.
pub fn load_question_set(path: &Path) -> Result<Vec<QuestionRecord>> {
    let raw: Vec<(usize, RawQuestion)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (line, r) in raw {
        let at = |e: Error| Error::validation(format!("{}:{line}: {e}", path.display()));
        let language = r.language.parse::<Language>().map_err(at)?;
        let split = r.split.parse::<Split>().map_err(at)?;
        if r.id.is_empty() {
            return Err(at(Error::validation("empty id")));
        }
        if !seen.insert(r.id.clone()) {
            return Err(Error::validation(format!(
                "{}:{line}: duplicate id {:?}",
                path.display(),
                r.id
            )));
        }
        out.push(QuestionRecord {
            id: r.id,
            text: r.text,
            language,
            evergreen_label: r.evergreen_label,
            aliases: r.aliases,
            split,
            source_dataset: r.source_dataset,
        });
    }
    Ok(out)
}

/// One decoding step of the greedy answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStep {
    pub token: String,
    /// Natural-log probability of the chosen token.
    pub logprob: f64,
    pub topk: Vec<(String, f64)>,
    pub tail_mass: f64,
}

impl TokenStep {
    pub fn validate(&self) -> Result<()> {
        if !self.logprob.is_finite() || self.logprob > 1e-9 {
            return Err(Error::validation(format!(
                "logprob {} is not a finite value <= 0",
                self.logprob
            )));
        }
        if !(0.0..1.0).contains(&self.tail_mass) {
            return Err(Error::validation(format!(
                "tail_mass {} outside [0, 1)",
                self.tail_mass
            )));
        }
        let mut mass = self.tail_mass;
        for (tok, p) in &self.topk {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::validation(format!(
                    "top-k probability {p} for token {tok:?} outside (0, 1]"
                )));
            }
            mass += p;
        }
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::validation(format!(
                "probability mass {mass} differs from 1 by more than {MASS_TOLERANCE:e}"
            )));
        }
        if let Some((_, p)) = self.topk.iter().find(|(t, _)| *t == self.token) {
            if (p - self.logprob.exp()).abs() > MASS_TOLERANCE {
                return Err(Error::validation(format!(
                    "chosen token {:?} has top-k probability {p} but exp(logprob) = {}",
                    self.token,
                    self.logprob.exp()
                )));
            }
        }
        Ok(())
    }
}

/// Recorded model outputs for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub question_id: String,
    pub model_id: String,
    pub greedy_answer: String,
    pub greedy_steps: Vec<TokenStep>,
    #[serde(default)]
    pub samples: Vec<String>,
    #[serde(default)]
    pub similarity: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub token_relevance: Option<Vec<f64>>,
}

impl GenerationTrace {
    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::validation(format!("trace {:?}: {msg}", self.question_id));
        if self.greedy_steps.is_empty() {
            return Err(ctx("greedy_steps is empty".into()));
        }
        for (i, step) in self.greedy_steps.iter().enumerate() {
            step.validate().map_err(|e| ctx(format!("step {i}: {e}")))?;
        }
        if let Some(sim) = &self.similarity {
            validate_similarity(sim, self.samples.len()).map_err(|e| ctx(e.to_string()))?;
        }
        if let Some(rel) = &self.token_relevance {
            if rel.len() != self.greedy_steps.len() {
                return Err(ctx(format!(
                    "token_relevance has length {} but there are {} steps",
                    rel.len(),
                    self.greedy_steps.len()
                )));
            }
            if let Some((i, r)) = rel.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
                return Err(ctx(format!("token_relevance[{i}] = {r} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn greedy_tokens(&self) -> Vec<&str> {
        self.greedy_steps.iter().map(|s| s.token.as_str()).collect()
    }
}

/// Checks an `m`×`m` similarity matrix: square, entries in [0,1], symmetric, unit diagonal.
pub fn validate_similarity(sim: &[Vec<f64>], m: usize) -> Result<()> {
    if sim.len() != m || sim.iter().any(|row| row.len() != m) {
        let cols = sim.first().map_or(0, Vec::len);
        return Err(Error::validation(format!(
            "similarity matrix is {}x{cols} but there are {m} samples",
            sim.len()
        )));
    }
    for i in 0..m {
        for j in 0..m {
            let v = sim[i][j];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("similarity[{i}][{j}] = {v} outside [0, 1]")));
            }
            if (v - sim[j][i]).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::validation(format!(
                    "similarity matrix asymmetric at ({i},{j}): {v} vs {}",
                    sim[j][i]
                )));
            }
        }
        if (sim[i][i] - 1.0).abs() > SYMMETRY_TOLERANCE {
            return Err(Error::validation(format!(
                "similarity diagonal [{i}][{i}] = {} is not 1",
                sim[i][i]
            )));
        }
    }
    Ok(())
}

/// Loads and validates a trace set. Duplicate `(question_id, model_id)` pairs are rejected.
pub fn load_trace_set(path: &Path) -> Result<Vec<GenerationTrace>> {
    let raw: Vec<(usize, GenerationTrace)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (line, trace) in raw {
        trace
            .validate()
            .map_err(|e| Error::validation(format!("{}:{line}: {e}", path.display())))?;
        if !seen.insert((trace.question_id.clone(), trace.model_id.clone())) {
            return Err(Error::validation(format!(
                "{}:{line}: duplicate trace for question {:?} and model {:?}",
                path.display(),
                trace.question_id,
                trace.model_id
            )));
        }
        out.push(trace);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectnessLabel {
    pub question_id: String,
    #[serde(with = "bit")]
    pub y: bool,
}

pub fn load_correctness(path: &Path) -> Result<Vec<CorrectnessLabel>> {
    let raw: Vec<(usize, CorrectnessLabel)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (line, label) in raw {
        if !seen.insert(label.question_id.clone()) {
            return Err(Error::validation(format!(
                "{}:{line}: duplicate correctness label for {:?}",
                path.display(),
                label.question_id
            )));
        }
        out.push(label);
    }
    Ok(out)
}

/// Lowercases, replaces ASCII punctuation with spaces, collapses whitespace and trims.
pub fn normalize_answer_text(s: &str) -> String {
    let mapped: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// In-Accuracy: 1 iff some normalized alias is a substring of the normalized answer.
///
/// Aliases that normalize to the empty string are ignored; if none remain the
/// call is a precondition error.
pub fn in_accuracy<S: AsRef<str>>(answer: &str, aliases: &[S]) -> Result<bool> {
    let answer = normalize_answer_text(answer);
    let mut any_alias = false;
    for alias in aliases {
        let alias = normalize_answer_text(alias.as_ref());
        if alias.is_empty() {
            continue;
        }
        any_alias = true;
        if answer.contains(&alias) {
            return Ok(true);
        }
    }
    if any_alias {
        Ok(false)
    } else {
        Err(Error::precondition("alias list is empty"))
    }
}
