//! Acceptance suite: one PASS/FAIL line per criterion.

#![allow(clippy::needless_range_loop)]

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use evergreen_core::corpus::{load_question_set, CorrectnessLabel, Language, QuestionRecord, Split, TokenStep};
use evergreen_core::evergreen::{
    random_baseline_f1, train_evergreen_baseline, weighted_f1, EvergreenHyper, RandomStrategy,
};
use evergreen_core::jsonl::write_jsonl;
use evergreen_core::linalg::{symmetric_eigenvalues, SquareMatrix};
use evergreen_core::metrics::{auroc, mcfadden_pseudo_r2, point_biserial, prr, rejection_curve};
use evergreen_core::pipeline::{cmd_filter, cmd_selfknow, NamedPath, RunConfig, Settings};
use evergreen_core::selfknow::learners::logreg::LogisticObjective;
use evergreen_core::selfknow::learners::tree::{fit_classifier, TreeParams};
use evergreen_core::selfknow::learners::Matrix;
use evergreen_core::selfknow::spec::{grid, Criterion, Family, GridKind, MaxFeatures, Splitter};
use evergreen_core::selfknow::{train_selfknow, Configuration, FeatureRecord, FeatureRow, FeatureTable, UeMetric};
use evergreen_core::uncertainty::{
    eigval_laplacian_score, mean_token_entropy, perplexity, sar, step_entropy, token_entropy_profile, LaplacianVariant,
    Provenance, SimilarityGraph, TailMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<(), String>;
type Entry = (&'static str, Option<Duration>, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Check {
    ensure((a - b).abs() <= tol, || {
        format!("{what}: {a} vs {b} (tolerance {tol:e})")
    })
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn step(logprob: f64) -> TokenStep {
    let p = logprob.exp();
    TokenStep {
        token: "a".into(),
        logprob,
        topk: vec![("a".into(), p)],
        tail_mass: 1.0 - p,
    }
}

fn metric_units() -> Check {
    for c in [-0.05, -0.7, -1.5, -3.0] {
        let steps = vec![step(c); 7];
        close(perplexity(&steps).unwrap(), (-c).exp(), 1e-12, "perplexity")?;
    }
    let uniform = TokenStep {
        token: "a".into(),
        logprob: 0.25f64.ln(),
        topk: ["a", "b", "c", "d"].iter().map(|t| (t.to_string(), 0.25)).collect(),
        tail_mass: 0.0,
    };
    close(
        step_entropy(&uniform, TailMode::Bucket).unwrap(),
        4f64.ln(),
        1e-12,
        "uniform-4 entropy",
    )?;
    let profile = token_entropy_profile(&[uniform.clone(), uniform], TailMode::Bucket).unwrap();
    close(mean_token_entropy(&profile).unwrap(), 4f64.ln(), 1e-12, "mean entropy")?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 1..20 {
        let h: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..3.0)).collect();
        let r = rng.random_range(0.01..1.0);
        close(
            sar(&h, &vec![r; t]).unwrap(),
            h.iter().sum(),
            1e-9,
            "SAR with uniform relevance",
        )?;
    }
    for m in 2..=10 {
        let g = SimilarityGraph::new(&vec![vec![1.0; m]; m], Provenance::Provided).unwrap();
        close(
            eigval_laplacian_score(&g, LaplacianVariant::LinClipped).unwrap(),
            1.0,
            1e-12,
            &format!("EigValLaplacian of all-ones W, M = {m}"),
        )?;
    }
    Ok(())
}

fn brute_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    credit += 1.0;
                } else if scores[i] == scores[j] {
                    credit += 0.5;
                }
            }
        }
    }
    credit / pairs
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Average rejection curve over every ordering consistent with ascending uncertainty.
fn exhaustive_curve(uncertainty: &[f64], quality: &[f64]) -> Vec<f64> {
    let n = uncertainty.len();
    let mut levels: Vec<f64> = uncertainty.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let groups: Vec<Vec<usize>> = levels
        .iter()
        .map(|&l| (0..n).filter(|&i| uncertainty[i] == l).collect())
        .collect();
    let mut orders: Vec<Vec<usize>> = vec![Vec::new()];
    for g in &groups {
        let perms = permutations(g);
        orders = orders
            .iter()
            .flat_map(|o| {
                perms.iter().map(move |p| {
                    let mut o = o.clone();
                    o.extend(p);
                    o
                })
            })
            .collect();
    }
    let mut curve = vec![0.0; n + 1];
    for o in &orders {
        for k in 0..n {
            let kept = &o[..n - k];
            curve[k] += kept.iter().map(|&i| quality[i]).sum::<f64>() / kept.len() as f64;
        }
    }
    for v in curve.iter_mut() {
        *v /= orders.len() as f64;
    }
    curve[n] = curve[n - 1];
    curve
}

fn area_above(curve: &[f64], baseline: f64) -> f64 {
    let n = (curve.len() - 1) as f64;
    curve
        .windows(2)
        .map(|w| ((w[0] - baseline) + (w[1] - baseline)) / (2.0 * n))
        .sum()
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let n = rng.random_range(2..=50);
        let alphabet = rng.random_range(2..=8);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..alphabet) as f64 / 2.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let fast = auroc(&scores, &labels).unwrap();
        let brute = brute_auroc(&scores, &labels);
        ensure(fast == brute, || {
            format!("AUROC case {case}: {fast} vs brute force {brute}")
        })?;
    }
    let mut instances = 0;
    for n in 1..=6usize {
        for code in 0..(6usize.pow(n as u32)) {
            let mut c = code;
            let mut u = Vec::with_capacity(n);
            let mut q = Vec::with_capacity(n);
            for _ in 0..n {
                u.push((c % 3) as f64);
                c /= 3;
                q.push((c % 2) as f64);
                c /= 2;
            }
            instances += 1;
            let fast = rejection_curve(&u, &q).unwrap();
            let slow = exhaustive_curve(&u, &q);
            for (k, (a, b)) in fast.quality.iter().zip(&slow).enumerate() {
                close(*a, *b, 1e-12, &format!("rejection curve u={u:?} q={q:?} point {k}"))?;
            }
            if q.iter().any(|&v| v != q[0]) {
                let mean = q.iter().sum::<f64>() / n as f64;
                let oracle: Vec<f64> = q.iter().map(|v| -v).collect();
                let expected = area_above(&slow, mean) / area_above(&exhaustive_curve(&oracle, &q), mean);
                close(prr(&u, &q).unwrap(), expected, 1e-12, &format!("PRR u={u:?} q={q:?}"))?;
            }
        }
    }
    ensure(instances == (1..=6).map(|n| 6usize.pow(n)).sum::<usize>(), || {
        "instance count".into()
    })
}

/// Closed-form eigenvalues of a symmetric 3x3 matrix, ascending.
fn cubic_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let tr = a[0][0] + a[1][1] + a[2][2];
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = tr / 3.0;
    let p2 = (0..3).map(|i| (a[i][i] - q).powi(2)).sum::<f64>() + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
    let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn eigen_solver() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..500 {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = rng.random_range(-5.0..5.0);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let rows: Vec<Vec<f64>> = a.iter().map(|r| r.to_vec()).collect();
        let mut ev = symmetric_eigenvalues(&SquareMatrix::from_rows(&rows).unwrap()).unwrap();
        ev.sort_by(f64::total_cmp);
        let tr = a[0][0] + a[1][1] + a[2][2];
        close(ev.iter().sum(), tr, 1e-9, &format!("case {case} trace"))?;
        close(ev.iter().product(), det3(&a), 1e-6, &format!("case {case} determinant"))?;
        for (x, y) in ev.iter().zip(cubic_eigenvalues(&a)) {
            close(*x, y, 1e-8, &format!("case {case} cubic-root oracle"))?;
        }
    }
    for case in 0..500 {
        let m = rng.random_range(2..=10);
        let mut w = vec![vec![1.0; m]; m];
        for i in 0..m {
            for j in (i + 1)..m {
                let v = rng.random_range(0.0..=1.0);
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        let g = SimilarityGraph::new(&w, Provenance::Provided).unwrap();
        for l in symmetric_eigenvalues(&g.normalized_laplacian().unwrap()).unwrap() {
            ensure((-1e-12..=2.0 + 1e-12).contains(&l), || {
                format!("Laplacian case {case}: eigenvalue {l}")
            })?;
        }
    }
    Ok(())
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

fn planted_table(n: usize, seed: u64) -> FeatureTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|i| {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            FeatureRow {
                question_id: format!("r{i}"),
                features: vec![a, b],
                y: a + 0.5 * b + rng.random_range(-0.5..0.5) > 0.0,
            }
        })
        .collect();
    FeatureTable {
        names: Configuration::UePlusEg(UeMetric::Perplexity).feature_names(),
        rows,
    }
}

fn learner_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..100 {
        let n = rng.random_range(5..40);
        let d = rng.random_range(1..6);
        let x = random_matrix(&mut rng, n, d);
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
        let c = [0.01, 0.1, 1.0][rng.random_range(0..3)];
        let obj = LogisticObjective {
            x: &x,
            y: &y,
            sample_weight: w,
            c,
        };
        let theta: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = obj.gradient(&theta);
        let h = 1e-5;
        let fd: Vec<f64> = (0..=d)
            .map(|j| {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[j] += h;
                down[j] -= h;
                (obj.value(&up) - obj.value(&down)) / (2.0 * h)
            })
            .collect();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        ensure(diff / norm < 1e-5, || {
            format!("gradient case {case}: relative error {}", diff / norm)
        })?;
    }

    let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let y = [false, true, true, false];
    for criterion in [Criterion::Gini, Criterion::Entropy] {
        let params = TreeParams {
            max_depth: Some(2),
            max_features: MaxFeatures::All,
            criterion,
            splitter: Splitter::Best,
        };
        let tree = fit_classifier(&x, &y, &params, 0);
        for (i, &yi) in y.iter().enumerate() {
            ensure((tree.predict(x.row(i)) > 0.5) == yi, || {
                format!("XOR row {i} misclassified")
            })?;
        }
    }

    let table = planted_table(60, 5);
    let specs = grid(GridKind::Full, &Family::ALL);
    let cfg = Configuration::UePlusEg(UeMetric::Perplexity);
    let run = || {
        let m = train_selfknow(cfg, &table, &specs, GridKind::Full, &[0, 1, 2]).unwrap();
        serde_json::to_string(&m).unwrap()
    };
    let (a, b) = (run(), run());
    ensure(a == b, || {
        "full grid search + ensemble differs between identical runs".into()
    })
}

fn evergreen_baseline() -> Check {
    let Some(dir) = std::env::var_os("EVERGREENQA_DIR") else {
        return Err("EVERGREENQA_DIR is not set; the EverGreenQA train/test splits are not available offline".into());
    };
    let dir = PathBuf::from(dir);
    let load = |name: &str| load_question_set(&dir.join(name)).map_err(|e| e.to_string());
    let train = load("train.jsonl")?;
    let test: Vec<QuestionRecord> = load("test.jsonl")?
        .into_iter()
        .filter(|q| q.language == Language::En && q.evergreen_label.is_some())
        .collect();
    ensure(!test.is_empty(), || "no labeled English test questions".into())?;
    let model = train_evergreen_baseline(&train, &EvergreenHyper::default()).map_err(|e| e.to_string())?;
    let labels: Vec<bool> = test.iter().map(|q| q.evergreen_label.unwrap()).collect();
    let preds: Vec<bool> = test.iter().map(|q| model.predict_text(&q.text) >= 0.5).collect();
    let f1 = weighted_f1(&labels, &preds).map_err(|e| e.to_string())?;
    let random = random_baseline_f1(&labels, RandomStrategy::Stratified, 10_000, 0).map_err(|e| e.to_string())?;
    ensure(f1 >= 0.637 + 0.03, || {
        format!("baseline weighted F1 {f1:.4} below 0.667")
    })?;
    close(random, 0.637, 0.02, "Monte-Carlo random baseline")
}

/// Correctness is a noisy function of `p_evergreen`; uncertainty columns carry
/// only a weak copy of it.
fn write_selfknow_fixture(dir: &Path, n: usize, seed: u64) -> RunConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut questions = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let id = format!("s{i:04}");
        let p: f64 = rng.random_range(0.0..1.0);
        let y = rng.random_bool(0.05 + 0.9 * p);
        let mut noisy = |scale: f64| -0.3 * p + scale * rng.random_range(0.0..1.0);
        features.push(FeatureRecord {
            question_id: id.clone(),
            model_id: "synthetic".into(),
            perplexity: 2.0 + noisy(3.0),
            mean_token_entropy: 1.0 + noisy(1.0),
            max_token_entropy: 2.0 + noisy(2.0),
            neg_lexical_similarity: Some(0.5 + noisy(0.5)),
            sar: 3.0 + noisy(3.0),
            eigval_laplacian: Some(1.0 + noisy(2.0)),
            p_evergreen: Some(p),
        });
        questions.push(QuestionRecord {
            id: id.clone(),
            text: format!("synthetic question {i}"),
            language: Language::En,
            evergreen_label: None,
            aliases: vec![],
            split: if i % 2 == 0 { Split::Train } else { Split::Test },
            source_dataset: "planted".into(),
        });
        labels.push(CorrectnessLabel { question_id: id, y });
    }
    write_jsonl(&dir.join("questions.jsonl"), &questions).unwrap();
    write_jsonl(&dir.join("features.jsonl"), &features).unwrap();
    write_jsonl(&dir.join("correctness.jsonl"), &labels).unwrap();
    RunConfig {
        questions: Some(dir.join("questions.jsonl")),
        features: Some(dir.join("features.jsonl")),
        correctness: vec![NamedPath {
            name: "synthetic".into(),
            path: dir.join("correctness.jsonl"),
        }],
        settings: Settings {
            grid: GridKind::Compact,
            ..Settings::default()
        },
        ..RunConfig::default()
    }
}

fn selfknow_synthetic() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_selfknow_fixture(dir.path(), 2000, 6);
    let out = cmd_selfknow(&config).map_err(|e| e.to_string())?;
    let block = &out.blocks[0];
    let get = |c: Configuration| block.rows.iter().find(|r| r.configuration == c).unwrap();
    for m in UeMetric::ALL {
        let plain = get(Configuration::Ue(m)).auroc.unwrap();
        let plus = get(Configuration::UePlusEg(m)).auroc.unwrap();
        ensure(plus - plain >= 0.05, || {
            format!("{}: +EG AUROC {plus:.4} vs plain {plain:.4}", m.label())
        })?;
    }
    let eg = get(Configuration::Eg).auprc.unwrap();
    for r in &block.rows {
        ensure(r.auprc.unwrap() <= eg, || {
            format!("{} AUPRC {:.4} exceeds EG {eg:.4}", r.label, r.auprc.unwrap())
        })?;
    }
    Ok(())
}

fn partition_check(config: &RunConfig) -> Check {
    let all = load_question_set(config.questions.as_ref().unwrap()).unwrap();
    let out = cmd_filter(config).map_err(|e| e.to_string())?;
    ensure(out.evergreen.len() + out.mutable.len() == all.len(), || {
        "subset sizes do not sum to N".into()
    })?;
    let mut ids: Vec<&str> = out
        .evergreen
        .iter()
        .chain(&out.mutable)
        .map(|q| q.id.as_str())
        .collect();
    ids.sort_unstable();
    let mut expected: Vec<&str> = all.iter().map(|q| q.id.as_str()).collect();
    expected.sort_unstable();
    ensure(ids == expected, || "subsets do not partition the input".into())
}

fn filtering() -> Check {
    let fx = fixtures();
    let hand = RunConfig {
        questions: Some(fx.join("filter_questions.jsonl")),
        evergreen_scores: Some(fx.join("filter_scores.jsonl")),
        correctness: vec![
            NamedPath {
                name: "base".into(),
                path: fx.join("filter_base.jsonl"),
            },
            NamedPath {
                name: "rag".into(),
                path: fx.join("filter_rag.jsonl"),
            },
        ],
        ..RunConfig::default()
    };
    for tau in [0.05, 0.5, 0.6, 0.99] {
        let mut c = hand.clone();
        c.settings.tau = tau;
        partition_check(&c)?;
        let mut c = RunConfig {
            questions: Some(fx.join("questions.jsonl")),
            evergreen_scores: Some(fx.join("scores.jsonl")),
            ..RunConfig::default()
        };
        c.settings.tau = tau;
        partition_check(&c)?;
    }

    let out = cmd_filter(&hand).map_err(|e| e.to_string())?;
    let row = |d: &str| out.rows.iter().find(|r| r.dataset == d).unwrap();
    let opt = |v: Option<f64>, want: f64, what: &str| match v {
        Some(v) => close(v, want, 1e-9, what),
        None => Err(format!("{what}: missing")),
    };
    let nq = row("nq");
    ensure(nq.n == 6 && nq.n_mutable == 2, || "nq counts".into())?;
    close(nq.mutable_pct, 100.0 / 3.0, 1e-9, "nq mutable %")?;
    opt(nq.accuracy[0].evergreen, 0.75, "nq base EG")?;
    opt(nq.accuracy[0].mutable, 0.5, "nq base Mut")?;
    opt(nq.gap_pct, 50.0, "nq gap")?;
    opt(nq.gains[0].mutable_gain_pct, 50.0, "nq retrieval gain")?;
    let tqa = row("tqa");
    ensure(tqa.n == 4 && tqa.n_mutable == 1, || "tqa counts".into())?;
    close(tqa.mutable_pct, 25.0, 1e-9, "tqa mutable %")?;
    opt(tqa.accuracy[0].evergreen, 2.0 / 3.0, "tqa base EG")?;
    ensure(tqa.gap_pct.is_none(), || {
        "tqa gap should be undefined with zero mutable accuracy".into()
    })?;
    opt(tqa.gains[0].mutable_gain_pct, 200.0 / 3.0, "tqa retrieval gain")?;
    let all = row("all");
    ensure(all.n == 10 && all.n_evergreen == 7, || "pooled counts".into())?;
    close(all.mutable_pct, 30.0, 1e-9, "pooled mutable %")?;
    opt(all.accuracy[0].evergreen, 5.0 / 7.0, "pooled base EG")?;
    opt(all.accuracy[0].mutable, 1.0 / 3.0, "pooled base Mut")?;
    opt(all.accuracy[1].evergreen, 1.0, "pooled rag EG")?;
    opt(all.accuracy[1].mutable, 1.0, "pooled rag Mut")?;
    opt(all.gap_pct, 800.0 / 7.0, "pooled gap")?;
    opt(all.gains[0].mutable_gain_pct, 400.0 / 7.0, "pooled retrieval gain")
}

fn correlation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y: Vec<bool> = (0..400).map(|_| rng.random_bool(0.4)).collect();
    let x: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v))).collect();
    close(
        point_biserial(&y, &x).unwrap().r,
        1.0,
        1e-12,
        "r of feature equal to label",
    )?;
    let fit = mcfadden_pseudo_r2(&x, &y).unwrap();
    ensure(fit.r2 > 0.99, || {
        format!("pseudo-R² of feature equal to label {}", fit.r2)
    })?;

    let y: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.5)).collect();
    let noise: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r2 = mcfadden_pseudo_r2(&noise, &y).unwrap().r2;
    ensure(r2 < 0.01, || format!("pseudo-R² of independent noise {r2}"))?;

    let y4 = [false, false, true, true];
    let x4 = [1.0, 2.0, 3.0, 5.0];
    let c = point_biserial(&y4, &x4).unwrap();
    let r = 2.5 / 8.75f64.sqrt();
    close(c.r, r, 1e-9, "4-point r")?;
    let t = r * (2.0 / (1.0 - r * r)).sqrt();
    close(
        c.p_value.unwrap(),
        1.0 - t / (2.0 + t * t).sqrt(),
        1e-9,
        "4-point p-value",
    )?;
    let flat = mcfadden_pseudo_r2(&[0.0, 0.0, 1.0, 1.0], &[false, true, false, true]).unwrap();
    close(flat.r2, 0.0, 1e-9, "4-point uninformative pseudo-R²")?;
    let x8 = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
    let y8 = [false, false, false, true, false, true, true, true];
    let want = 1.0 - (0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln()) / 0.5f64.ln();
    close(
        mcfadden_pseudo_r2(&x8, &y8).unwrap().r2,
        want,
        1e-9,
        "binary-predictor pseudo-R²",
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Entry> = vec![
        ("metric unit suite", Some(Duration::from_secs(1)), metric_units),
        ("oracle equivalence", Some(Duration::from_secs(30)), oracle_equivalence),
        ("eigen-solver", Some(Duration::from_secs(10)), eigen_solver),
        ("learner checks", None, learner_checks),
        ("evergreen baseline", Some(Duration::from_secs(300)), evergreen_baseline),
        ("self-knowledge synthetic", None, selfknow_synthetic),
        ("filtering", None, filtering),
        ("correlation", None, correlation),
    ];
    let mut failed = 0;
    let mut seen = HashSet::new();
    for (name, budget, check) in criteria {
        assert!(seen.insert(name));
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| match budget {
            Some(b) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            _ => Ok(()),
        });
        match outcome {
            Ok(()) => println!("PASS {name} ({elapsed:.2?})"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
