//! Evergreen probability sources: a hashed character n-gram logistic
//! baseline, external score files, and the verbal-judgment scorer.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hasher;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Language, QuestionRecord};
use crate::error::{Error, Result};
use crate::jsonl::read_jsonl;
use crate::provenance::fingerprint;

/// Probability threshold at or above which a question is called evergreen.
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, v)| dense[i as usize] * v)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Character n-grams of lowercased, space-padded text hashed with FNV-1a 64
/// into `hash_dim` buckets; term frequencies are L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramFeaturizer {
    pub n_min: usize,
    pub n_max: usize,
    pub hash_dim: usize,
}

impl Default for NGramFeaturizer {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 4,
            hash_dim: 1 << 18,
        }
    }
}

impl NGramFeaturizer {
    pub fn new(n_min: usize, n_max: usize, hash_dim: usize) -> Result<Self> {
        if n_min == 0 || n_min > n_max {
            return Err(Error::Configuration(format!("invalid n-gram range {n_min}..{n_max}")));
        }
        if !hash_dim.is_power_of_two() || hash_dim > u32::MAX as usize {
            return Err(Error::Configuration(format!(
                "hash_dim {hash_dim} is not a power of two"
            )));
        }
        Ok(Self { n_min, n_max, hash_dim })
    }

    pub fn fingerprint(&self) -> String {
        let desc = format!(
            "char-ngram|n={}..{}|dim={}|fnv1a64|tf-l2|lowercase-space-pad",
            self.n_min, self.n_max, self.hash_dim
        );
        fingerprint(desc.as_bytes())
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        let lowered = text.to_lowercase();
        let words: Vec<&str> = lowered.split_whitespace().collect();
        if words.is_empty() {
            return SparseVector::default();
        }
        let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
        let mask = (self.hash_dim - 1) as u64;
        let mut buckets = Vec::new();
        let mut utf8 = [0u8; 4];
        for n in self.n_min..=self.n_max {
            for window in padded.windows(n) {
                let mut h = FnvHasher::default();
                for c in window {
                    h.write(c.encode_utf8(&mut utf8).as_bytes());
                }
                buckets.push((h.finish() & mask) as u32);
            }
        }
        buckets.sort_unstable();
        let mut out = SparseVector::default();
        for b in buckets {
            if out.indices.last() == Some(&b) {
                *out.values.last_mut().unwrap() += 1.0;
            } else {
                out.indices.push(b);
                out.values.push(1.0);
            }
        }
        let norm = out.norm();
        out.values.iter_mut().for_each(|v| *v /= norm);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_size: usize,
    pub holdout_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct LinearEvergreenModel {
    pub featurizer: NGramFeaturizer,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub fingerprint: String,
    pub training_log: TrainingLog,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    hash_dim: usize,
    n_range: [usize; 2],
    weights: String,
    bias: f64,
    fingerprint: String,
    training_log: TrainingLog,
}

impl From<LinearEvergreenModel> for ModelFile {
    fn from(m: LinearEvergreenModel) -> Self {
        let bytes: Vec<u8> = m.weights.iter().flat_map(|w| w.to_le_bytes()).collect();
        ModelFile {
            hash_dim: m.featurizer.hash_dim,
            n_range: [m.featurizer.n_min, m.featurizer.n_max],
            weights: BASE64.encode(bytes),
            bias: m.bias,
            fingerprint: m.fingerprint,
            training_log: m.training_log,
        }
    }
}

impl TryFrom<ModelFile> for LinearEvergreenModel {
    type Error = String;

    fn try_from(f: ModelFile) -> std::result::Result<Self, String> {
        let featurizer = NGramFeaturizer::new(f.n_range[0], f.n_range[1], f.hash_dim).map_err(|e| e.to_string())?;
        let bytes = BASE64
            .decode(f.weights.as_bytes())
            .map_err(|e| format!("weights: {e}"))?;
        if bytes.len() != 8 * f.hash_dim {
            return Err(format!(
                "weights decode to {} bytes, expected {}",
                bytes.len(),
                8 * f.hash_dim
            ));
        }
        let weights = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(LinearEvergreenModel {
            featurizer,
            weights,
            bias: f.bias,
            fingerprint: f.fingerprint,
            training_log: f.training_log,
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-ln P(y | z)` for a logit `z`.
fn log_loss(z: f64, y: bool) -> f64 {
    let m = if y { z } else { -z };
    if m >= 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

impl LinearEvergreenModel {
    pub fn zeros(featurizer: NGramFeaturizer) -> Self {
        Self {
            weights: vec![0.0; featurizer.hash_dim],
            bias: 0.0,
            fingerprint: featurizer.fingerprint(),
            featurizer,
            training_log: TrainingLog::default(),
        }
    }

    fn logit(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict_text(&self, text: &str) -> f64 {
        sigmoid(self.logit(&self.featurizer.transform(text)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if model.fingerprint != model.featurizer.fingerprint() {
            return Err(Error::Configuration(format!(
                "model fingerprint {} does not match its featurizer {}",
                model.fingerprint,
                model.featurizer.fingerprint()
            )));
        }
        Ok(model)
    }
}

/// `P(evergreen | q)`; the featurizer must be the one the model was trained with.
pub fn evergreen_probability(
    model: &LinearEvergreenModel,
    featurizer: &NGramFeaturizer,
    q: &QuestionRecord,
) -> Result<f64> {
    let fp = featurizer.fingerprint();
    if fp != model.fingerprint {
        return Err(Error::Configuration(format!(
            "featurizer fingerprint {fp} does not match model fingerprint {}",
            model.fingerprint
        )));
    }
    Ok(sigmoid(model.logit(&featurizer.transform(&q.text))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvergreenHyper {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    pub holdout_fraction: f64,
}

impl Default for EvergreenHyper {
    fn default() -> Self {
        Self {
            l2: 1e-6,
            epochs: 10,
            lr: 0.5,
            seed: 0,
            batch_size: 16,
            patience: 3,
            holdout_fraction: 0.1,
        }
    }
}

/// Held-out slices are only carved from sets at least this large; smaller
/// sets early-stop on their own training F1.
pub const MIN_HOLDOUT_SET: usize = 20;

pub fn train_evergreen_baseline(train: &[QuestionRecord], hyper: &EvergreenHyper) -> Result<LinearEvergreenModel> {
    train_with_featurizer(train, hyper, NGramFeaturizer::default())
}

pub fn train_with_featurizer(
    train: &[QuestionRecord],
    hyper: &EvergreenHyper,
    featurizer: NGramFeaturizer,
) -> Result<LinearEvergreenModel> {
    if hyper.batch_size == 0
        || hyper.epochs == 0
        || hyper.lr.is_nan()
        || hyper.lr <= 0.0
        || hyper.l2.is_nan()
        || hyper.l2 < 0.0
    {
        return Err(Error::Configuration(format!(
            "invalid training hyperparameters {hyper:?}"
        )));
    }
    let labels: Vec<bool> = train
        .iter()
        .map(|q| {
            q.evergreen_label
                .ok_or_else(|| Error::validation(format!("question {} has no evergreen label", q.id)))
        })
        .collect::<Result<_>>()?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateData("training set has a single class".into()));
    }
    let features: Vec<SparseVector> = train.par_iter().map(|q| featurizer.transform(&q.text)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = if train.len() >= MIN_HOLDOUT_SET {
        ((train.len() as f64 * hyper.holdout_fraction).round() as usize).clamp(1, train.len() - 1)
    } else {
        0
    };
    let holdout: Vec<usize> = order[..n_hold].to_vec();
    let mut fit: Vec<usize> = order[n_hold..].to_vec();
    let eval_set: &[usize] = if holdout.is_empty() { &[] } else { &holdout };

    // weights are stored as scale * v so L2 decay costs O(1) per batch
    let mut v = vec![0.0f64; featurizer.hash_dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut best: Option<(f64, Vec<f64>, f64, usize)> = None;
    let mut log = TrainingLog {
        train_size: fit.len(),
        holdout_size: holdout.len(),
        ..TrainingLog::default()
    };
    let mut since_best = 0;
    let mut residuals = Vec::with_capacity(hyper.batch_size);
    for epoch in 1..=hyper.epochs {
        fit.shuffle(&mut rng);
        for batch in fit.chunks(hyper.batch_size) {
            residuals.clear();
            for &i in batch {
                let z = scale * features[i].dot(&v) + bias;
                residuals.push(sigmoid(z) - f64::from(u8::from(labels[i])));
            }
            let step = hyper.lr / batch.len() as f64;
            scale *= 1.0 - hyper.lr * hyper.l2;
            for (&i, r) in batch.iter().zip(&residuals) {
                let x = &features[i];
                for (&j, xv) in x.indices.iter().zip(&x.values) {
                    v[j as usize] -= step * r * xv / scale;
                }
            }
            bias -= step * residuals.iter().sum::<f64>();
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        let weights: Vec<f64> = v.iter().map(|w| w * scale).collect();
        let sq_norm: f64 = weights.iter().map(|w| w * w).sum();
        let train_loss = fit
            .iter()
            .map(|&i| log_loss(features[i].dot(&weights) + bias, labels[i]))
            .sum::<f64>()
            / fit.len() as f64
            + 0.5 * hyper.l2 * sq_norm;
        let scored: &[usize] = if eval_set.is_empty() { &fit } else { eval_set };
        let y: Vec<bool> = scored.iter().map(|&i| labels[i]).collect();
        let pred: Vec<bool> = scored
            .iter()
            .map(|&i| sigmoid(features[i].dot(&weights) + bias) >= DEFAULT_TAU)
            .collect();
        let f1 = weighted_f1(&y, &pred)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            holdout_weighted_f1: f1,
        });
        let improved = best.as_ref().is_none_or(|(b, ..)| f1 > *b);
        if improved {
            best = Some((f1, weights, bias, epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.patience {
                log.stopped_early = epoch < hyper.epochs;
                break;
            }
        }
    }
    let (_, weights, bias, best_epoch) = best.expect("at least one epoch ran");
    log.best_epoch = best_epoch;
    Ok(LinearEvergreenModel {
        featurizer,
        weights,
        bias,
        fingerprint: featurizer.fingerprint(),
        training_log: log,
    })
}

/// Per-class F1 weighted by class support.
pub fn weighted_f1(labels: &[bool], predictions: &[bool]) -> Result<f64> {
    if labels.len() != predictions.len() {
        return Err(Error::validation(format!(
            "length mismatch: {} labels vs {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::validation("weighted F1 of an empty set"));
    }
    let n = labels.len() as f64;
    let mut total = 0.0;
    for class in [false, true] {
        let support = labels.iter().filter(|&&y| y == class).count();
        if support == 0 {
            continue;
        }
        let tp = labels
            .iter()
            .zip(predictions)
            .filter(|(&y, &p)| y == class && p == class)
            .count();
        let predicted = predictions.iter().filter(|&&p| p == class).count();
        let f1 = if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (support + predicted) as f64
        };
        total += support as f64 / n * f1;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomStrategy {
    /// Fair coin per question.
    Uniform,
    /// Coin biased to the evaluated set's evergreen prevalence.
    #[default]
    Stratified,
}

/// Monte-Carlo mean weighted F1 of random predictions against `labels`.
pub fn random_baseline_f1(labels: &[bool], strategy: RandomStrategy, trials: usize, seed: u64) -> Result<f64> {
    if labels.is_empty() || trials == 0 {
        return Err(Error::precondition(
            "random baseline needs labels and at least one trial",
        ));
    }
    let p = match strategy {
        RandomStrategy::Uniform => 0.5,
        RandomStrategy::Stratified => labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pred = vec![false; labels.len()];
    let mut total = 0.0;
    for _ in 0..trials {
        pred.iter_mut().for_each(|x| *x = rng.random_bool(p));
        total += weighted_f1(labels, &pred)?;
    }
    Ok(total / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgment {
    Evergreen,
    Mutable,
    Unparseable,
}

impl Judgment {
    pub fn as_label(self) -> Option<bool> {
        match self {
            Judgment::Evergreen => Some(true),
            Judgment::Mutable => Some(false),
            Judgment::Unparseable => None,
        }
    }
}

const MARKER: &str = "classification:";

/// Reads the word after the last `Classification:` marker.
pub fn parse_verbal_judgment(raw: &str) -> Judgment {
    // ASCII lowering keeps byte offsets aligned with `raw`
    let lowered = raw.to_ascii_lowercase();
    let Some(pos) = lowered.rfind(MARKER) else {
        return Judgment::Unparseable;
    };
    let rest = &lowered[pos + MARKER.len()..];
    let word: String = rest
        .chars()
        .skip_while(|c| !c.is_alphabetic())
        .take_while(|c| c.is_alphabetic())
        .collect();
    match word.as_str() {
        "immutable" => Judgment::Evergreen,
        "mutable" => Judgment::Mutable,
        _ => Judgment::Unparseable,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbalJudgment {
    pub question_id: String,
    pub raw_output: String,
    pub parsed: Judgment,
}

impl VerbalJudgment {
    pub fn parse(question_id: &str, raw_output: &str) -> Self {
        Self {
            question_id: question_id.to_string(),
            raw_output: raw_output.to_string(),
            parsed: parse_verbal_judgment(raw_output),
        }
    }
}

/// One line of a verbal-judgment output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbalOutput {
    pub question_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    pub model_id: String,
    pub raw_output: String,
}

pub fn load_verbal_outputs(path: &Path) -> Result<Vec<VerbalOutput>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}

/// One line of an evergreen score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvergreenScore {
    pub question_id: String,
    pub p_evergreen: f64,
    pub source: String,
}

pub fn load_evergreen_scores(path: &Path) -> Result<Vec<EvergreenScore>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, s) in read_jsonl::<EvergreenScore>(path)? {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if !(0.0..=1.0).contains(&s.p_evergreen) {
            return Err(parse_err(format!("p_evergreen {} outside [0, 1]", s.p_evergreen)));
        }
        if !seen.insert(s.question_id.clone()) {
            return Err(parse_err(format!("duplicate id {:?}", s.question_id)));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn score_questions(
    model: &LinearEvergreenModel,
    questions: &[QuestionRecord],
    source: &str,
) -> Vec<EvergreenScore> {
    questions
        .par_iter()
        .map(|q| EvergreenScore {
            question_id: q.id.clone(),
            p_evergreen: model.predict_text(&q.text),
            source: source.to_string(),
        })
        .collect()
}

/// Binary evergreen predictions keyed by question id; `None` is unparseable.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSource {
    pub name: String,
    pub predictions: HashMap<String, Option<bool>>,
}

impl PredictionSource {
    pub fn from_scores(name: &str, scores: &[EvergreenScore], tau: f64) -> Self {
        Self {
            name: name.to_string(),
            predictions: scores
                .iter()
                .map(|s| (s.question_id.clone(), Some(s.p_evergreen >= tau)))
                .collect(),
        }
    }

    pub fn from_verbal(name: &str, outputs: &[VerbalOutput]) -> Self {
        Self {
            name: name.to_string(),
            predictions: outputs
                .iter()
                .map(|o| (o.question_id.clone(), parse_verbal_judgment(&o.raw_output).as_label()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvergreenRow {
    pub source: String,
    pub per_language: BTreeMap<Language, f64>,
    pub average: f64,
    pub unparseable_rate: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvergreenReport {
    pub languages: Vec<Language>,
    pub rows: Vec<EvergreenRow>,
}

impl EvergreenReport {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.source.len()).max().unwrap_or(0).max(6);
        let mut out = format!("{:<width$}", "source");
        for l in &self.languages {
            out.push_str(&format!("  {:>6}", l.code()));
        }
        out.push_str(&format!("  {:>6}  {:>11}\n", "avg", "unparseable"));
        for r in &self.rows {
            out.push_str(&format!("{:<width$}", r.source));
            for l in &self.languages {
                out.push_str(&format!("  {:>6.3}", r.per_language[l]));
            }
            out.push_str(&format!(
                "  {:>6.3}  {:>10.1}%\n",
                r.average,
                100.0 * r.unparseable_rate
            ));
        }
        out
    }
}

fn labelled_by_language(test: &[QuestionRecord]) -> Result<BTreeMap<Language, Vec<&QuestionRecord>>> {
    let mut groups: BTreeMap<Language, Vec<&QuestionRecord>> = BTreeMap::new();
    for q in test {
        if q.evergreen_label.is_none() {
            return Err(Error::validation(format!(
                "test question {} has no evergreen label",
                q.id
            )));
        }
        groups.entry(q.language).or_default().push(q);
    }
    if groups.is_empty() {
        return Err(Error::precondition("empty test set"));
    }
    Ok(groups)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Weighted F1 per language and averaged across languages, one row per source.
/// Unparseable judgments count as wrong.
pub fn evergreen_report(sources: &[PredictionSource], test: &[QuestionRecord]) -> Result<EvergreenReport> {
    let groups = labelled_by_language(test)?;
    let mut missing: Vec<String> = Vec::new();
    for s in sources {
        for q in test {
            if !s.predictions.contains_key(&q.id) {
                missing.push(format!("{}:{}", s.name, q.id));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let mut rows = Vec::new();
    for s in sources {
        let mut per_language = BTreeMap::new();
        let mut unparseable = 0;
        for (&lang, qs) in &groups {
            let labels: Vec<bool> = qs.iter().map(|q| q.evergreen_label.unwrap()).collect();
            let preds: Vec<bool> = qs
                .iter()
                .zip(&labels)
                .map(|(q, &y)| match s.predictions[&q.id] {
                    Some(p) => p,
                    None => {
                        unparseable += 1;
                        !y
                    }
                })
                .collect();
            per_language.insert(lang, weighted_f1(&labels, &preds)?);
        }
        rows.push(EvergreenRow {
            source: s.name.clone(),
            average: mean(per_language.values().copied()),
            per_language,
            unparseable_rate: unparseable as f64 / test.len() as f64,
            n: test.len(),
        });
    }
    Ok(EvergreenReport {
        languages: groups.keys().copied().collect(),
        rows,
    })
}

/// Report row for random guessing, computed per language by Monte Carlo.
pub fn random_baseline_row(
    test: &[QuestionRecord],
    strategy: RandomStrategy,
    trials: usize,
    seed: u64,
) -> Result<EvergreenRow> {
    let groups = labelled_by_language(test)?;
    let mut per_language = BTreeMap::new();
    for (&lang, qs) in &groups {
        let labels: Vec<bool> = qs.iter().map(|q| q.evergreen_label.unwrap()).collect();
        per_language.insert(lang, random_baseline_f1(&labels, strategy, trials, seed)?);
    }
    Ok(EvergreenRow {
        source: "Random".into(),
        average: mean(per_language.values().copied()),
        per_language,
        unparseable_rate: 0.0,
        n: test.len(),
    })
}
