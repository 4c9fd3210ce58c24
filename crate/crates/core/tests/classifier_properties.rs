mod common;

use common::{normal_matrix, rel_vec_error, two_gaussians};
use ndarray::{Array1, Array2, Axis};
use proptest::collection::vec;
use proptest::prelude::*;
use sketchbalance::classifiers::{fit_c45, fit_lda_dataset, fit_lda_sketched, Node, TreeParams};
use sketchbalance::data::{Class, LabeledDataset};
use sketchbalance::rebalance::{
    oversample, rose, smote, underover_balanced, undersample, RebalanceParams, RebalancedParts,
};

fn pooled_within(ds: &LabeledDataset) -> (Array2<f64>, Array1<f64>) {
    let p = ds.p();
    let mut w = Array2::<f64>::zeros((p, p));
    let mut means = Vec::new();
    for c in [Class::Majority, Class::Minority] {
        let x = ds.class_matrix(c);
        let m = x.mean_axis(Axis(0)).unwrap();
        let xc = &x - &m;
        w += &xc.t().dot(&xc);
        means.push(m);
    }
    w /= (ds.n() - 2) as f64;
    (w, &means[1] - &means[0])
}

fn dataset_params() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 8usize..60, 4usize..30, 1usize..7).prop_filter("enough rows", |(_, n0, n1, p)| n0 + n1 > p + 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exact_parts_reproduce_plain_direction((seed, n0, n1, p) in dataset_params()) {
        let ds = two_gaussians(seed, n0, n1, p, 0.8);
        let plain = fit_lda_dataset(&ds).unwrap();
        let via_parts = fit_lda_sketched(&RebalancedParts::exact(&ds).unwrap()).unwrap();
        let err = rel_vec_error(&via_parts.direction, &plain.direction);
        prop_assert!(err < 1e-10, "relative error {}", err);
        prop_assert!((via_parts.threshold - plain.threshold).abs() < 1e-8 * (1.0 + plain.threshold.abs()));
    }

    #[test]
    fn direction_solves_normal_equations((seed, n0, n1, p) in dataset_params()) {
        let ds = two_gaussians(seed, n0, n1, p, 0.5);
        let model = fit_lda_dataset(&ds).unwrap();
        let (w, d) = pooled_within(&ds);
        let resid = (&w.dot(&model.direction) - &d).mapv(|v| v * v).sum().sqrt();
        let dn = d.mapv(|v| v * v).sum().sqrt();
        prop_assert!(resid < 1e-8 * dn, "residual {} vs {}", resid, dn);
    }

    #[test]
    fn lda_labels_survive_linear_maps((seed, n0, n1, p) in dataset_params(), mix_seed: u64) {
        let ds = two_gaussians(seed, n0, n1, p, 0.8);
        let t = Array2::<f64>::eye(p) + normal_matrix(mix_seed, p, p) * 0.2;
        let mapped = LabeledDataset::new(ds.features().dot(&t), ds.labels().to_vec()).unwrap();
        let a = fit_lda_dataset(&ds).unwrap();
        let b = fit_lda_dataset(&mapped).unwrap();
        let sa = a.scores(ds.features().view());
        for (i, (pa, pb)) in a.predict(ds.features().view()).iter().zip(b.predict(mapped.features().view())).enumerate() {
            let margin = (sa[i] - a.threshold).abs() / (1.0 + sa[i].abs() + a.threshold.abs());
            if margin > 1e-6 {
                prop_assert_eq!(*pa, pb);
            }
        }
    }

    #[test]
    fn tree_ignores_monotone_feature_maps(
        (rows, labels) in (6usize..60, 1usize..4).prop_flat_map(|(n, p)| (vec(vec(0u8..15, p), n), vec(any::<bool>(), n))),
        pick in vec(any::<u32>(), 40),
    ) {
        let n = rows.len();
        let p = rows[0].len();
        let x = Array2::from_shape_fn((n, p), |(i, j)| f64::from(rows[i][j]));
        let mut l: Vec<Class> = labels.iter().map(|&b| if b { Class::Minority } else { Class::Majority }).collect();
        l[0] = Class::Majority;
        l[1] = Class::Minority;
        let ds = LabeledDataset::new(x.clone(), l.clone()).unwrap();
        let f = |v: f64| (v / 4.0).exp() + v * v * v;
        let g = |v: f64| 2.5 * v - 3.0;
        let mapped = LabeledDataset::new(x.mapv(f), l.clone()).unwrap();
        let affine = LabeledDataset::new(x.mapv(g), l).unwrap();
        // Off-sample rows on a half-step grid, including values inside the
        // gaps between training values.
        let test = Array2::from_shape_fn((pick.len() / p, p), |(i, j)| f64::from(pick[i * p + j] % 31) / 2.0 - 0.5);
        for params in [TreeParams::default(), TreeParams { confidence: None, ..TreeParams::default() }] {
            let a = fit_c45(&ds, &params).unwrap();
            let b = fit_c45(&mapped, &params).unwrap();
            let c = fit_c45(&affine, &params).unwrap();
            prop_assert_eq!(a.root.leaves(), b.root.leaves());
            prop_assert_eq!(a.predict(&ds), b.predict(&mapped));
            prop_assert_eq!(a.scores(&ds), b.scores(&mapped));
            // Midpoint cuts commute with increasing affine maps, so unseen
            // rows route identically too.
            for r in test.rows() {
                let rg = r.mapv(g);
                prop_assert_eq!(a.score(r), c.score(rg.view()));
            }
        }
    }

    #[test]
    fn root_split_matches_brute_force(cells in vec(0u8..6, 12), p in 1usize..=3) {
        let x = Array2::from_shape_fn((4, p), |(i, j)| f64::from(cells[i * 3 + j]));
        let labels = vec![Class::Majority, Class::Majority, Class::Minority, Class::Minority];
        let ds = LabeledDataset::new(x.clone(), labels.clone()).unwrap();
        let params = TreeParams { min_leaf: 1, confidence: None, max_depth: Some(1) };
        let tree = fit_c45(&ds, &params).unwrap();
        let best = brute_force_choice(&x, &labels);
        match (&tree.root, best) {
            (Node::Leaf { .. }, None) => {}
            (Node::Split { feature, threshold, .. }, Some((gain, ratio))) => {
                let left: Vec<bool> = x.column(*feature).iter().map(|&v| v <= *threshold).collect();
                let (g, r) = partition_stats(&left, &labels);
                prop_assert!((g - gain).abs() < 1e-12 && (r - ratio).abs() < 1e-12,
                    "tree picked ({}, {}), oracle ({}, {})", g, r, gain, ratio);
            }
            (root, best) => prop_assert!(false, "tree {:?} vs oracle {:?}", root, best),
        }
    }
}

fn entropy(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    [c0, c1]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * q.log2()
        })
        .sum()
}

fn partition_stats(left: &[bool], labels: &[Class]) -> (f64, f64) {
    let mut c = [[0usize; 2]; 2];
    for (&l, &y) in left.iter().zip(labels) {
        c[usize::from(!l)][y.index()] += 1;
    }
    let n = labels.len() as f64;
    let (nl, nr) = ((c[0][0] + c[0][1]) as f64, (c[1][0] + c[1][1]) as f64);
    let parent = entropy(c[0][0] + c[1][0], c[0][1] + c[1][1]);
    let gain = parent - nl / n * entropy(c[0][0], c[0][1]) - nr / n * entropy(c[1][0], c[1][1]);
    let info = -[nl, nr].iter().map(|&m| m / n * (m / n).log2()).sum::<f64>();
    (gain, gain / info)
}

/// Enumerates every cut of every feature; keeps each feature's best-gain
/// cut, then the best gain ratio among those reaching the average gain.
fn brute_force_choice(x: &Array2<f64>, labels: &[Class]) -> Option<(f64, f64)> {
    let mut winners = Vec::new();
    for col in x.columns() {
        let mut values: Vec<f64> = col.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let best = values[..values.len().saturating_sub(1)]
            .iter()
            .map(|&t| partition_stats(&col.iter().map(|&v| v <= t).collect::<Vec<_>>(), labels))
            .fold(None, |b: Option<(f64, f64)>, s| match b {
                Some(b) if b.0 >= s.0 - 1e-12 => Some(b),
                _ => Some(s),
            });
        if let Some(b) = best.filter(|b| b.0 > 1e-12) {
            winners.push(b);
        }
    }
    if winners.is_empty() {
        return None;
    }
    let mean = winners.iter().map(|w| w.0).sum::<f64>() / winners.len() as f64;
    winners
        .into_iter()
        .filter(|w| w.0 >= mean - 1e-12)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn box_contains(row: &[f64], a: &[f64], b: &[f64]) -> bool {
    row.iter()
        .zip(a.iter().zip(b))
        .all(|(&v, (&lo, &hi))| v >= lo.min(hi) - 1e-12 && v <= lo.max(hi) + 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smote_points_lie_between_minority_rows(seed: u64, n1 in 6usize..20, p in 1usize..5, extra in 1usize..40) {
        let ds = two_gaussians(seed, 40, n1, p, 1.0);
        let grown = smote(&ds, n1 + extra, 5, seed).unwrap();
        prop_assert_eq!(grown.n1(), n1 + extra);
        prop_assert_eq!(grown.class_matrix(Class::Majority), ds.class_matrix(Class::Majority));
        let orig = ds.class_matrix(Class::Minority);
        let all = grown.class_matrix(Class::Minority);
        prop_assert_eq!(all.slice(ndarray::s![..n1, ..]), orig.view());
        for row in all.rows().into_iter().skip(n1) {
            let row = row.to_vec();
            let inside = orig.rows().into_iter().any(|a| {
                orig.rows().into_iter().any(|b| box_contains(&row, a.as_slice().unwrap(), b.as_slice().unwrap()))
            });
            prop_assert!(inside);
        }
    }

    #[test]
    fn rebalancers_keep_shape_and_finiteness(seed: u64, n0 in 30usize..60, n1 in 6usize..15, p in 1usize..5) {
        let ds = two_gaussians(seed, n0, n1, p, 1.0);
        let params = RebalanceParams::default();
        let outputs = [
            undersample(&ds, n1, seed).unwrap(),
            oversample(&ds, n0, seed).unwrap(),
            smote(&ds, n0, 5, seed).unwrap(),
            rose(&ds, ds.n(), seed).unwrap(),
            underover_balanced(&ds, &params, seed).unwrap(),
        ];
        for out in &outputs {
            prop_assert_eq!(out.p(), p);
            prop_assert!(out.features().iter().all(|v| v.is_finite()));
        }
        prop_assert_eq!((outputs[0].n0(), outputs[0].n1()), (n1, n1));
        prop_assert_eq!((outputs[1].n0(), outputs[1].n1()), (n0, n0));
        prop_assert_eq!((outputs[4].n0(), outputs[4].n1()), (2 * n1, 2 * n1));
        prop_assert_eq!(outputs[3].n(), ds.n());
        prop_assert_eq!(&rose(&ds, ds.n(), seed).unwrap(), &outputs[3]);
    }
}
