//! Ranking, selective-prediction and association metrics.
//!
//! Positives are `true` labels (a correct answer). Ties get half credit in
//! AUROC, are scored as one threshold block in AUPRC, and are broken uniformly
//! at random (in expectation) inside rejection curves.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const TIE_POLICY: &str = "auroc: half credit; auprc: tie block; rejection: expected over tie orders";

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!("length mismatch: {a} vs {b}")));
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::validation(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Mann-Whitney AUROC: probability a random positive outscores a random negative.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    check_finite(scores)?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision with tied scores entering as one block.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    check_finite(scores)?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("AUPRC needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let block_tp = order[start..end].iter().filter(|&&i| labels[i]).count();
        tp += block_tp;
        seen += end - start;
        if block_tp > 0 {
            ap += (block_tp as f64 / n_pos as f64) * (tp as f64 / seen as f64);
        }
        start = end;
    }
    Ok(ap)
}

/// Mean retained quality after rejecting the `k` most uncertain items, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionCurve {
    pub source: String,
    pub rejected_fraction: Vec<f64>,
    pub quality: Vec<f64>,
}

impl RejectionCurve {
    /// Trapezoidal area of `q(rho) - baseline` over `rho in [0, 1]`.
    pub fn area_above(&self, baseline: f64) -> f64 {
        self.rejected_fraction
            .windows(2)
            .zip(self.quality.windows(2))
            .map(|(r, q)| (r[1] - r[0]) * ((q[0] - baseline) + (q[1] - baseline)) / 2.0)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,q\n");
        for (r, q) in self.rejected_fraction.iter().zip(&self.quality) {
            out.push_str(&format!("{r},{q}\n"));
        }
        out
    }
}

pub fn rejection_curve(uncertainty: &[f64], quality: &[f64]) -> Result<RejectionCurve> {
    rejection_curve_named("uncertainty", uncertainty, quality)
}

pub fn rejection_curve_named(source: &str, uncertainty: &[f64], quality: &[f64]) -> Result<RejectionCurve> {
    check_lengths(uncertainty.len(), quality.len())?;
    check_finite(uncertainty)?;
    check_finite(quality)?;
    let n = uncertainty.len();
    if n == 0 {
        return Err(Error::precondition("rejection curve of an empty set"));
    }
    // tie groups in ascending uncertainty, as (prefix count, prefix quality sum)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| uncertainty[a].total_cmp(&uncertainty[b]));
    let mut prefix_count = vec![0usize];
    let mut prefix_sum = vec![0.0f64];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && uncertainty[order[end]] == uncertainty[order[start]] {
            end += 1;
        }
        let s: f64 = order[start..end].iter().map(|&i| quality[i]).sum();
        prefix_count.push(end);
        prefix_sum.push(prefix_sum.last().unwrap() + s);
        start = end;
    }

    let retained_mean = |retain: usize| -> f64 {
        // first group whose cumulative count reaches `retain`
        let g = prefix_count.partition_point(|&c| c < retain);
        let (before_count, before_sum) = (prefix_count[g - 1], prefix_sum[g - 1]);
        let group_size = prefix_count[g] - before_count;
        let group_mean = (prefix_sum[g] - before_sum) / group_size as f64;
        let total = if retain == prefix_count[g] {
            prefix_sum[g]
        } else {
            before_sum + (retain - before_count) as f64 * group_mean
        };
        total / retain as f64
    };

    let mut rho = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    for k in 0..n {
        rho.push(k as f64 / n as f64);
        q.push(retained_mean(n - k));
    }
    rho.push(1.0);
    q.push(*q.last().unwrap());
    Ok(RejectionCurve {
        source: source.to_string(),
        rejected_fraction: rho,
        quality: q,
    })
}

/// Prediction rejection ratio: rejection-curve area above random, divided by
/// the oracle's area above random.
pub fn prr(uncertainty: &[f64], quality: &[f64]) -> Result<f64> {
    let curve = rejection_curve(uncertainty, quality)?;
    let first = quality[0];
    if quality.iter().all(|&q| q == first) {
        return Err(Error::UndefinedMetric("PRR needs non-constant quality".into()));
    }
    let random = quality.iter().sum::<f64>() / quality.len() as f64;
    let oracle_unc: Vec<f64> = quality.iter().map(|q| -q).collect();
    let oracle = rejection_curve(&oracle_unc, quality)?;
    Ok(curve.area_above(random) / oracle.area_above(random))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value from the t approximation with `n - 2` degrees of freedom.
    pub p_value: Option<f64>,
    pub n: usize,
}

fn t_test_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

fn check_binary_vs_continuous(binary: &[bool], continuous: &[f64]) -> Result<()> {
    check_lengths(binary.len(), continuous.len())?;
    check_finite(continuous)?;
    let ones = binary.iter().filter(|&&b| b).count();
    if ones == 0 || ones == binary.len() {
        return Err(Error::UndefinedMetric(
            "correlation needs both binary groups non-empty".into(),
        ));
    }
    if continuous.iter().all(|&v| v == continuous[0]) {
        return Err(Error::UndefinedMetric("continuous variable is constant".into()));
    }
    Ok(())
}

/// Pearson correlation of a binary indicator with a continuous variable.
pub fn point_biserial(binary: &[bool], continuous: &[f64]) -> Result<Correlation> {
    check_binary_vs_continuous(binary, continuous)?;
    let x: Vec<f64> = binary.iter().map(|&b| f64::from(u8::from(b))).collect();
    let r = pearson(&x, continuous);
    Ok(Correlation {
        r,
        p_value: t_test_p_value(r, binary.len()),
        n: binary.len(),
    })
}

/// Spearman rank correlation (average ranks for ties), same preconditions as point-biserial.
pub fn spearman(binary: &[bool], continuous: &[f64]) -> Result<Correlation> {
    check_binary_vs_continuous(binary, continuous)?;
    let x: Vec<f64> = binary.iter().map(|&b| f64::from(u8::from(b))).collect();
    let r = pearson(&average_ranks(&x), &average_ranks(continuous));
    Ok(Correlation {
        r,
        p_value: t_test_p_value(r, binary.len()),
        n: binary.len(),
    })
}

pub const MCFADDEN_GRAD_TOL: f64 = 1e-8;
pub const MCFADDEN_MAX_ITER: usize = 10_000;
/// Slope bound on the standardized predictor when the classes are separable.
pub const MCFADDEN_SLOPE_CAP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoR2 {
    pub r2: f64,
    pub intercept: f64,
    pub slope: f64,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub iterations: usize,
    pub separable: bool,
}

fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
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

/// Mean log-likelihood of `y` under `P(y=1|z) = sigmoid(a + b z)`, its
/// gradient, and the negated Hessian as `[aa, ab, bb]`.
fn univariate_loglik(z: &[f64], y: &[bool], a: f64, b: f64) -> (f64, [f64; 2], [f64; 3]) {
    let n = z.len() as f64;
    let (mut ll, mut ga, mut gb) = (0.0, 0.0, 0.0);
    let (mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0);
    for (&zi, &yi) in z.iter().zip(y) {
        let eta = a + b * zi;
        ll += if yi { log_sigmoid(eta) } else { log_sigmoid(-eta) };
        let p = sigmoid(eta);
        let resid = f64::from(u8::from(yi)) - p;
        ga += resid;
        gb += resid * zi;
        let w = p * (1.0 - p);
        haa += w;
        hab += w * zi;
        hbb += w * zi * zi;
    }
    (ll / n, [ga / n, gb / n], [haa / n, hab / n, hbb / n])
}

fn is_separable(x: &[f64], y: &[bool]) -> bool {
    let range = |want: bool| {
        x.iter()
            .zip(y)
            .filter(|(_, &yi)| yi == want)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
                (lo.min(v), hi.max(v))
            })
    };
    let (lo0, hi0) = range(false);
    let (lo1, hi1) = range(true);
    hi0 < lo1 || hi1 < lo0
}

/// McFadden pseudo-R² of a univariate logistic regression of `y` on `x`.
///
/// The fit runs projected Newton ascent with backtracking on the mean
/// log-likelihood of the standardized predictor, starting from the
/// intercept-only optimum.
pub fn mcfadden_pseudo_r2(x: &[f64], y: &[bool]) -> Result<PseudoR2> {
    check_lengths(x.len(), y.len())?;
    check_finite(x)?;
    let n = x.len();
    let ones = y.iter().filter(|&&v| v).count();
    if ones == 0 || ones == n {
        return Err(Error::UndefinedMetric("pseudo-R² needs both classes".into()));
    }
    let ybar = ones as f64 / n as f64;
    let null_ll = n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());
    let a0 = (ybar / (1.0 - ybar)).ln();

    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if sd == 0.0 {
        return Ok(PseudoR2 {
            r2: 0.0,
            intercept: a0,
            slope: 0.0,
            log_likelihood: null_ll,
            null_log_likelihood: null_ll,
            iterations: 0,
            separable: false,
        });
    }
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let separable = is_separable(x, y);
    let project = |t: [f64; 2]| [t[0], t[1].clamp(-MCFADDEN_SLOPE_CAP, MCFADDEN_SLOPE_CAP)];

    let loglik = |t: [f64; 2]| univariate_loglik(&z, y, t[0], t[1]);
    let mut theta = [a0, 0.0];
    let (mut ll, mut grad, mut curv) = loglik(theta);
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for it in 0..MCFADDEN_MAX_ITER {
        iterations = it;
        let pinned = theta[1].abs() >= MCFADDEN_SLOPE_CAP && grad[1] * theta[1].signum() > 0.0;
        residual = if pinned { grad[0].abs() } else { grad[0].hypot(grad[1]) };
        if residual < MCFADDEN_GRAD_TOL {
            converged = true;
            break;
        }
        // Newton direction on the free coordinates, ridged so it stays defined near separation
        let [waa, wab, wbb] = [curv[0] + 1e-12, curv[1], curv[2] + 1e-12];
        let dir = if pinned {
            [grad[0] / waa, 0.0]
        } else {
            let det = waa * wbb - wab * wab;
            [
                (wbb * grad[0] - wab * grad[1]) / det,
                (waa * grad[1] - wab * grad[0]) / det,
            ]
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = project([theta[0] + t * dir[0], theta[1] + t * dir[1]]);
            let next = loglik(cand);
            if next.0 >= ll {
                theta = cand;
                (ll, grad, curv) = next;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical {
            message: format!("logistic fit did not converge in {MCFADDEN_MAX_ITER} iterations"),
            residual,
        });
    }
    let model_ll = ll * n as f64;
    let r2 = (1.0 - model_ll / null_ll).max(0.0);
    Ok(PseudoR2 {
        r2,
        intercept: theta[0] - theta[1] * mean / sd,
        slope: theta[1] / sd,
        log_likelihood: model_ll,
        null_log_likelihood: null_ll,
        iterations,
        separable,
    })
}
