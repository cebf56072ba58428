//! CART trees over weighted samples, shared by the forest and boosting learners.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::selfknow::spec::{Criterion, MaxFeatures, Splitter};

/// Nodes at or below this impurity are not split further.
const PURE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
    pub splitter: Splitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Weighted sufficient statistics `(sum w, sum w t, sum w t^2)`.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    w: f64,
    wt: f64,
    wt2: f64,
}

impl Stats {
    fn add(&mut self, t: f64, w: f64) {
        self.w += w;
        self.wt += w * t;
        self.wt2 += w * t * t;
    }

    fn minus(self, o: Stats) -> Stats {
        Stats {
            w: self.w - o.w,
            wt: self.wt - o.wt,
            wt2: self.wt2 - o.wt2,
        }
    }

    fn impurity(&self, criterion: Criterion) -> f64 {
        if self.w <= 0.0 {
            return 0.0;
        }
        let mean = self.wt / self.w;
        match criterion {
            Criterion::Gini => {
                let p = mean.clamp(0.0, 1.0);
                2.0 * p * (1.0 - p)
            }
            Criterion::Entropy => {
                let p = mean.clamp(0.0, 1.0);
                let h = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
                h(p) + h(1.0 - p)
            }
            Criterion::SquaredError => (self.wt2 / self.w - mean * mean).max(0.0),
        }
    }

    /// Impurity scaled by the node weight.
    fn weighted(&self, criterion: Criterion) -> f64 {
        self.w * self.impurity(criterion)
    }
}

struct Grower<'a> {
    x: &'a Matrix,
    targets: &'a [f64],
    weights: &'a [f64],
    params: &'a TreeParams,
}

impl Grower<'_> {
    fn stats(&self, samples: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &i in samples {
            s.add(self.targets[i], self.weights[i]);
        }
        s
    }

    fn best_threshold(&self, feature: usize, samples: &[usize], parent: Stats) -> Option<(f64, f64)> {
        let mut sorted: Vec<(f64, usize)> = samples.iter().map(|&i| (self.x.get(i, feature), i)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let parent_cost = parent.weighted(self.params.criterion);
        let mut left = Stats::default();
        let mut best: Option<(f64, f64)> = None;
        for k in 0..sorted.len() - 1 {
            let (v, i) = sorted[k];
            left.add(self.targets[i], self.weights[i]);
            let next = sorted[k + 1].0;
            if v >= next {
                continue;
            }
            let right = parent.minus(left);
            let gain = parent_cost - left.weighted(self.params.criterion) - right.weighted(self.params.criterion);
            if best.is_none_or(|(_, g)| gain > g) {
                let mid = v + (next - v) / 2.0;
                best = Some((if mid < next { mid } else { v }, gain));
            }
        }
        best
    }

    fn random_threshold(
        &self,
        feature: usize,
        samples: &[usize],
        parent: Stats,
        rng: &mut ChaCha8Rng,
    ) -> Option<(f64, f64)> {
        let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = self.x.get(i, feature);
            (lo.min(v), hi.max(v))
        });
        if lo >= hi {
            return None;
        }
        let mut t = rng.random_range(lo..hi);
        if t >= hi {
            t = lo;
        }
        let mut left = Stats::default();
        for &i in samples {
            if self.x.get(i, feature) <= t {
                left.add(self.targets[i], self.weights[i]);
            }
        }
        let right = parent.minus(left);
        let c = self.params.criterion;
        Some((t, parent.weighted(c) - left.weighted(c) - right.weighted(c)))
    }

    fn best_split(&self, samples: &[usize], parent: Stats, rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let d = self.x.n_cols();
        let k = self.params.max_features.resolve(d);
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);
        let mut best: Option<(usize, f64, f64)> = None;
        for (visited, &f) in features.iter().enumerate() {
            // keep looking past k only while no valid split has been found
            if visited >= k && best.is_some() {
                break;
            }
            let found = match self.params.splitter {
                Splitter::Best => self.best_threshold(f, samples, parent),
                Splitter::Random => self.random_threshold(f, samples, parent, rng),
            };
            if let Some((t, gain)) = found {
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, t, gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }
}

/// Grows a tree on `samples`; leaves take `leaf_value(members)`.
pub(crate) fn grow(
    x: &Matrix,
    targets: &[f64],
    weights: &[f64],
    samples: Vec<usize>,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree {
    let grower = Grower {
        x,
        targets,
        weights,
        params,
    };
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((id, members, depth)) = stack.pop() {
        let stats = grower.stats(&members);
        let splittable =
            members.len() >= 2 && stats.impurity(params.criterion) > PURE && params.max_depth.is_none_or(|m| depth < m);
        if splittable {
            if let Some((feature, threshold)) = grower.best_split(&members, stats, rng) {
                let (l, r): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| x.get(i, feature) <= threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, r, depth + 1));
                stack.push((left, l, depth + 1));
                continue;
            }
        }
        nodes[id] = Node::Leaf {
            value: leaf_value(&members),
        };
    }
    Tree { nodes }
}

/// Leaf value: weighted fraction of positives.
pub(crate) fn positive_rate<'a>(targets: &'a [f64], weights: &'a [f64]) -> impl Fn(&[usize]) -> f64 + 'a {
    move |members: &[usize]| {
        let (w, wt) = members
            .iter()
            .fold((0.0, 0.0), |(w, wt), &i| (w + weights[i], wt + weights[i] * targets[i]));
        if w > 0.0 {
            wt / w
        } else {
            0.5
        }
    }
}

pub fn fit_classifier(x: &Matrix, y: &[bool], params: &TreeParams, seed: u64) -> Tree {
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v))).collect();
    let weights = vec![1.0; y.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf = positive_rate(&targets, &weights);
    grow(x, &targets, &weights, (0..y.len()).collect(), params, &mut rng, &leaf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Matrix, Vec<bool>) {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        (x, vec![false, true, true, false])
    }

    fn params(depth: Option<usize>, criterion: Criterion) -> TreeParams {
        TreeParams {
            max_depth: depth,
            max_features: MaxFeatures::All,
            criterion,
            splitter: Splitter::Best,
        }
    }

    fn accuracy(tree: &Tree, x: &Matrix, y: &[bool]) -> f64 {
        let hits = (0..x.n_rows())
            .filter(|&i| (tree.predict(x.row(i)) > 0.5) == y[i])
            .count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        for criterion in [Criterion::Gini, Criterion::Entropy] {
            let shallow = fit_classifier(&x, &y, &params(Some(1), criterion), 0);
            assert_eq!(accuracy(&shallow, &x, &y), 0.5);
            let deep = fit_classifier(&x, &y, &params(Some(2), criterion), 0);
            assert_eq!(accuracy(&deep, &x, &y), 1.0);
            assert_eq!(deep.depth(), 2);
        }
    }

    #[test]
    fn unlimited_depth_memorizes_distinct_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random(), rng.random(), rng.random()])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<bool> = (0..60).map(|_| rng.random_bool(0.4)).collect();
        let tree = fit_classifier(&x, &y, &params(None, Criterion::Gini), 5);
        assert_eq!(accuracy(&tree, &x, &y), 1.0);
    }

    #[test]
    fn random_splitter_is_seeded() {
        let (x, y) = xor();
        let p = TreeParams {
            splitter: Splitter::Random,
            ..params(None, Criterion::Gini)
        };
        assert_eq!(fit_classifier(&x, &y, &p, 9), fit_classifier(&x, &y, &p, 9));
        assert_eq!(accuracy(&fit_classifier(&x, &y, &p, 9), &x, &y), 1.0);
    }

    #[test]
    fn impurity_values() {
        let mut s = Stats::default();
        s.add(1.0, 1.0);
        s.add(0.0, 1.0);
        assert!((s.impurity(Criterion::Gini) - 0.5).abs() < 1e-15);
        assert!((s.impurity(Criterion::Entropy) - 1.0).abs() < 1e-15);
        assert!((s.impurity(Criterion::SquaredError) - 0.25).abs() < 1e-15);
    }
}
