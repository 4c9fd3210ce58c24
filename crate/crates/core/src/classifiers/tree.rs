//! C4.5-style binary decision tree on numeric features.
//!
//! Induction is greedy and top-down. For every feature the best binary cut
//! (by information gain) is found among midpoints of consecutive distinct
//! values; among the per-feature winners whose gain is at least the average
//! gain, the one with the largest gain ratio is taken. Growth stops at pure
//! nodes, at nodes too small to give each branch `min_leaf` rows, or when no
//! cut has positive gain. The grown tree is then pruned bottom-up with
//! C4.5's pessimistic (upper confidence limit) error estimate.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::data::{Class, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum rows on each side of a split.
    pub min_leaf: usize,
    /// Confidence factor for pessimistic pruning; `None` disables pruning.
    pub confidence: Option<f64>,
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_leaf: 2,
            confidence: Some(0.25),
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        counts: [usize; 2],
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => *counts,
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: Node,
    pub params: TreeParams,
}

impl TreeModel {
    fn leaf_for(&self, x: ArrayView1<'_, f64>) -> [usize; 2] {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Laplace-smoothed class-1 probability `(c1 + 1) / (c0 + c1 + 2)` of
    /// the leaf reached by `x`.
    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        let [c0, c1] = self.leaf_for(x);
        (c1 as f64 + 1.0) / ((c0 + c1) as f64 + 2.0)
    }

    /// Leaf majority; ties go to class 0.
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> Class {
        let [c0, c1] = self.leaf_for(x);
        if c1 > c0 {
            Class::Minority
        } else {
            Class::Majority
        }
    }

    pub fn scores(&self, ds: &LabeledDataset) -> Vec<f64> {
        ds.features().rows().into_iter().map(|r| self.score(r)).collect()
    }

    pub fn predict(&self, ds: &LabeledDataset) -> Vec<Class> {
        ds.features()
            .rows()
            .into_iter()
            .map(|r| self.predict_one(r))
            .collect()
    }
}

fn entropy(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * q.log2()
        })
        .sum()
}

/// Information gain and split information of a binary partition.
pub(crate) fn split_stats(parent: [usize; 2], left: [usize; 2]) -> (f64, f64) {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    let n = (parent[0] + parent[1]) as f64;
    let nl = (left[0] + left[1]) as f64;
    let nr = n - nl;
    let gain = entropy(parent) - (nl / n) * entropy(left) - (nr / n) * entropy(right);
    let split_info = entropy([left[0] + left[1], right[0] + right[1]]);
    (gain, split_info)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // keep a < threshold-route: `a <= t < b`
    if m >= b {
        a
    } else {
        m
    }
}

struct Builder<'a> {
    ds: &'a LabeledDataset,
    params: TreeParams,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let labels = self.ds.labels();
        let mut c = [0; 2];
        for &r in rows {
            c[labels[r].index()] += 1;
        }
        c
    }

    fn best_cut_for_feature(&self, rows: &[usize], feature: usize, parent: [usize; 2]) -> Option<Candidate> {
        let x = self.ds.features().column(feature);
        let labels = self.ds.labels();
        let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&r| (x[r], labels[r].index())).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut left = [0usize; 2];
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            left[sorted[i].1] += 1;
            let nl = i + 1;
            if sorted[i].0 == sorted[i + 1].0 || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (gain, split_info) = split_stats(parent, left);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(sorted[i].0, sorted[i + 1].0),
                    gain,
                    ratio: if split_info > 0.0 { gain / split_info } else { 0.0 },
                });
            }
        }
        best
    }

    fn choose(&self, rows: &[usize], parent: [usize; 2]) -> Option<Candidate> {
        let cands: Vec<Candidate> = (0..self.ds.p())
            .filter_map(|f| self.best_cut_for_feature(rows, f, parent))
            .filter(|c| c.gain > 1e-12)
            .collect();
        select_by_gain_ratio(&cands)
    }

    fn grow(&self, rows: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&rows);
        let pure = counts[0] == 0 || counts[1] == 0;
        let too_small = rows.len() < 2 * self.params.min_leaf.max(1);
        let too_deep = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || too_small || too_deep {
            return Node::Leaf { counts };
        }
        let Some(cut) = self.choose(&rows, counts) else {
            return Node::Leaf { counts };
        };
        let x = self.ds.features().column(cut.feature);
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i] <= cut.threshold);
        Node::Split {
            feature: cut.feature,
            threshold: cut.threshold,
            counts,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }
}

/// Picks the largest gain ratio among candidates whose gain reaches the
/// candidates' mean gain. Earlier candidates win ties.
fn select_by_gain_ratio(cands: &[Candidate]) -> Option<Candidate> {
    if cands.is_empty() {
        return None;
    }
    let mean_gain = cands.iter().map(|c| c.gain).sum::<f64>() / cands.len() as f64;
    cands
        .iter()
        .filter(|c| c.gain >= mean_gain - 1e-12)
        .fold(None, |best: Option<Candidate>, &c| match best {
            Some(b) if b.ratio >= c.ratio => Some(b),
            _ => Some(c),
        })
}

/// Normal deviate for a one-sided confidence level, interpolated from the
/// table used by C4.5.
fn confidence_coeff(cf: f64) -> f64 {
    const VAL: [f64; 9] = [0.0, 0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.40, 1.00];
    const DEV: [f64; 9] = [4.0, 3.09, 2.58, 2.33, 1.65, 1.28, 0.84, 0.25, 0.00];
    let i = VAL.iter().position(|&v| cf <= v).unwrap_or(VAL.len() - 1).max(1);
    let z = DEV[i - 1] + (DEV[i] - DEV[i - 1]) * (cf - VAL[i - 1]) / (VAL[i] - VAL[i - 1]);
    z * z
}

/// Extra errors to add to `e` observed errors out of `n` to reach the upper
/// confidence limit of the binomial error rate (C4.5 `AddErrs`).
pub(crate) fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if e < 1e-6 {
        n * (1.0 - (cf.ln() / n).exp())
    } else if e < 0.9999 {
        let v0 = n * (1.0 - (cf.ln() / n).exp());
        v0 + e * (added_errors(n, 1.0, cf) - v0)
    } else if e + 0.5 >= n {
        0.67 * (n - e)
    } else {
        let coeff = confidence_coeff(cf);
        let pr = (e + 0.5 + coeff / 2.0
            + (coeff * ((e + 0.5) * (1.0 - (e + 0.5) / n) + coeff / 4.0)).sqrt())
            / (n + coeff);
        n * pr - e
    }
}

fn leaf_errors(counts: [usize; 2]) -> f64 {
    counts[0].min(counts[1]) as f64
}

/// Bottom-up subtree replacement. Returns the pruned node and its estimated
/// error count.
fn prune(node: Node, cf: f64) -> (Node, f64) {
    match node {
        Node::Leaf { counts } => {
            let n = (counts[0] + counts[1]) as f64;
            let e = leaf_errors(counts);
            (Node::Leaf { counts }, e + added_errors(n, e, cf))
        }
        Node::Split {
            feature,
            threshold,
            counts,
            left,
            right,
        } => {
            let (left, el) = prune(*left, cf);
            let (right, er) = prune(*right, cf);
            let subtree = el + er;
            let n = (counts[0] + counts[1]) as f64;
            let e = leaf_errors(counts);
            let as_leaf = e + added_errors(n, e, cf);
            if as_leaf <= subtree + 0.1 {
                (Node::Leaf { counts }, as_leaf)
            } else {
                (
                    Node::Split {
                        feature,
                        threshold,
                        counts,
                        left: Box::new(left),
                        right: Box::new(right),
                    },
                    subtree,
                )
            }
        }
    }
}

pub fn fit_c45(ds: &LabeledDataset, params: &TreeParams) -> Result<TreeModel> {
    if let Some(cf) = params.confidence {
        if !(cf > 0.0 && cf < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pruning confidence {cf} not in (0, 1)"
            )));
        }
    }
    let builder = Builder {
        ds,
        params: *params,
    };
    let grown = builder.grow((0..ds.n()).collect(), 0);
    let root = match params.confidence {
        Some(cf) => prune(grown, cf).0,
        None => grown,
    };
    Ok(TreeModel {
        root,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn ds(x: Array2<f64>, labels: &[usize]) -> LabeledDataset {
        let l = labels.iter().map(|&i| Class::from_index(i).unwrap()).collect();
        LabeledDataset::new(x, l).unwrap()
    }

    #[test]
    fn separable_single_feature() {
        let x = array![[1.0], [2.0], [3.0], [4.0], [10.0], [11.0], [12.0]];
        let d = ds(x, &[0, 0, 0, 0, 1, 1, 1]);
        let t = fit_c45(&d, &TreeParams::default()).unwrap();
        assert_eq!(t.root.leaves(), 2);
        match &t.root {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 7.0),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict(&d), d.labels());
    }

    #[test]
    fn laplace_scores() {
        let t = TreeModel {
            root: Node::Leaf { counts: [0, 8] },
            params: TreeParams::default(),
        };
        assert_eq!(t.score(array![0.0].view()), 0.9);
    }

    #[test]
    fn root_only_tree_returns_smoothed_prior() {
        let x = Array2::<f64>::zeros((5, 0));
        let d = ds(x, &[0, 0, 0, 1, 1]);
        let t = fit_c45(&d, &TreeParams::default()).unwrap();
        assert_eq!(t.root, Node::Leaf { counts: [3, 2] });
        let s = t.scores(&d);
        assert!(s.iter().all(|&v| (v - 3.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn scores_are_probabilities() {
        let x = Array2::from_shape_fn((60, 2), |(i, j)| ((i * 7 + j * 13) % 23) as f64);
        let labels: Vec<usize> = (0..60).map(|i| usize::from((i * 5) % 7 < 2)).collect();
        let d = ds(x, &labels);
        let t = fit_c45(&d, &TreeParams::default()).unwrap();
        let probe = Array2::from_shape_fn((100, 2), |(i, j)| i as f64 * 0.3 - 5.0 + j as f64);
        for r in probe.rows() {
            let s = t.score(r);
            assert!((0.0..=1.0).contains(&s) && s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn splits_partition_rows_strictly() {
        fn check(node: &Node) {
            if let Node::Split { counts, left, right, .. } = node {
                let (l, r) = (left.counts(), right.counts());
                assert_eq!([l[0] + r[0], l[1] + r[1]], *counts);
                assert!(l[0] + l[1] > 0 && r[0] + r[1] > 0);
                check(left);
                check(right);
            }
        }
        let x = Array2::from_shape_fn((80, 3), |(i, j)| ((i * (j + 3) * 7) % 31) as f64);
        let labels: Vec<usize> = (0..80).map(|i| usize::from(i % 5 == 0 || i % 7 == 0)).collect();
        let t = fit_c45(&ds(x, &labels), &TreeParams { confidence: None, ..Default::default() }).unwrap();
        check(&t.root);
    }

    #[test]
    fn pruning_collapses_noise() {
        // Labels unrelated to the feature: the pruned tree should be tiny.
        let x = Array2::from_shape_fn((100, 1), |(i, _)| i as f64);
        let labels: Vec<usize> = (0..100).map(|i| usize::from((i * 37) % 10 < 2)).collect();
        let d = ds(x, &labels);
        let unpruned = fit_c45(&d, &TreeParams { confidence: None, ..Default::default() }).unwrap();
        let pruned = fit_c45(&d, &TreeParams::default()).unwrap();
        assert!(pruned.root.leaves() < unpruned.root.leaves());
    }

    #[test]
    fn max_depth_caps_growth() {
        let x = Array2::from_shape_fn((64, 1), |(i, _)| i as f64);
        let labels: Vec<usize> = (0..64).map(|i| (i / 4) % 2).collect();
        let t = fit_c45(
            &ds(x, &labels),
            &TreeParams { max_depth: Some(2), confidence: None, min_leaf: 1 },
        )
        .unwrap();
        assert!(t.root.depth() <= 2);
    }

    #[test]
    fn added_errors_reference_values() {
        // e = 0: n (1 - cf^(1/n))
        assert!((added_errors(1.0, 0.0, 0.25) - 0.75).abs() < 1e-12);
        assert!((added_errors(6.0, 0.0, 0.25) - 6.0 * (1.0 - 0.25f64.powf(1.0 / 6.0))).abs() < 1e-12);
        // e close to n
        assert!((added_errors(4.0, 3.6, 0.25) - 0.67 * 0.4).abs() < 1e-12);
        // monotone in e for the normal-approximation branch
        assert!(added_errors(100.0, 10.0, 0.25) > 0.0);
        let z2 = confidence_coeff(0.25);
        assert!((z2.sqrt() - 0.6925).abs() < 1e-12);
    }

    #[test]
    fn gain_ratio_selection_prefers_ratio_above_mean_gain() {
        let cands = [
            Candidate { feature: 0, threshold: 0.0, gain: 0.5, ratio: 0.6 },
            Candidate { feature: 1, threshold: 0.0, gain: 0.4, ratio: 0.9 },
            Candidate { feature: 2, threshold: 0.0, gain: 0.1, ratio: 5.0 },
        ];
        // mean gain 1/3 excludes feature 2 despite its ratio
        assert_eq!(select_by_gain_ratio(&cands).unwrap().feature, 1);
    }

    #[test]
    fn bad_confidence_rejected() {
        let d = ds(array![[0.0], [1.0]], &[0, 1]);
        assert!(fit_c45(&d, &TreeParams { confidence: Some(1.5), ..Default::default() }).is_err());
    }

    #[test]
    fn json_dump_is_nested() {
        let x = array![[1.0], [2.0], [3.0], [4.0], [10.0], [11.0], [12.0]];
        let d = ds(x, &[0, 0, 0, 0, 1, 1, 1]);
        let t = fit_c45(&d, &TreeParams::default()).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["root"]["type"], "split");
        assert_eq!(v["root"]["left"]["type"], "leaf");
    }
}
