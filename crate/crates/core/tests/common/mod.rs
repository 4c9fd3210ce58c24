#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use sketchbalance::data::{Class, LabeledDataset};
use sketchbalance::rng::rng;
use sketchbalance::sketch::{sketch, SketchMethod, SketchSpec};

pub fn normal_matrix(seed: u64, n: usize, p: usize) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((n, p), |_| r.sample(StandardNormal))
}

/// Two Gaussian classes; class 1 is shifted by `shift` along every axis.
pub fn two_gaussians(seed: u64, n0: usize, n1: usize, p: usize, shift: f64) -> LabeledDataset {
    let x0 = normal_matrix(seed, n0, p);
    let x1 = normal_matrix(seed ^ 0x5eed, n1, p) + shift;
    LabeledDataset::from_class_blocks(&x0, &x1).unwrap()
}

/// Sylvester Hadamard matrix of order `m` by the sign rule `(-1)^popcount(i & j)`.
pub fn naive_hadamard(m: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, m), |(i, j)| {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Probability that a random class-1 score beats a random class-0 score,
/// ties counted as one half.
pub fn pairwise_auc(scores: &[f64], truth: &[Class]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &ti) in truth.iter().enumerate() {
        if ti != Class::Minority {
            continue;
        }
        for (j, &tj) in truth.iter().enumerate() {
            if tj != Class::Majority {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

pub fn gram(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.t().dot(&x)
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_frobenius(approx: &Array2<f64>, exact: &Array2<f64>) -> f64 {
    frobenius(&(approx - exact)) / frobenius(exact)
}

/// Monte Carlo mean of `(SX)ᵀ(SX)` over seeds `0..trials`.
pub fn mean_sketched_gram(x: ArrayView2<'_, f64>, method: SketchMethod, k: usize, trials: u64) -> Array2<f64> {
    let p = x.ncols();
    let mut acc = Array2::<f64>::zeros((p, p));
    for seed in 0..trials {
        let s = sketch(x, &SketchSpec::new(method, k, seed)).unwrap();
        acc += &gram(s.rows.view());
    }
    acc / trials as f64
}

pub fn rel_vec_error(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let diff = (a - b).mapv(|v| v * v).sum().sqrt();
    diff / b.mapv(|v| v * v).sum().sqrt()
}
