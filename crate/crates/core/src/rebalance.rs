//! Rebalancing strategies for the training split.
//!
//! The sampling baselines (random under/over-sampling, SMOTE, ROSE) return a
//! new dataset. The sketch strategies center each class, sketch the centered
//! matrices to the target sizes, and return either the per-class Gram
//! matrices ([`sketch_rebalance`], consumed by the sketched LDA fit) or
//! pseudo-observations with the class means added back
//! ([`sketch_rebalance_synthetic`], for classifiers that need rows).

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{center_class, CenteredClass, Class, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed};
use crate::sketch::{sketch, SketchMethod, SketchSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    None,
    Under,
    Over,
    Smote,
    Rose,
    SketchPartial,
    SketchOverPartial,
    SketchBalanced,
    UnderOverBalanced,
}

impl StrategyKind {
    pub fn is_sketch(self) -> bool {
        matches!(
            self,
            StrategyKind::SketchPartial | StrategyKind::SketchOverPartial | StrategyKind::SketchBalanced
        )
    }
}

/// A rebalancing strategy. Serialized as its CLI name, e.g. `under` or
/// `sk-balanced-hada`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Strategy {
    kind: StrategyKind,
    sketch_method: Option<SketchMethod>,
}

impl Strategy {
    pub fn new(kind: StrategyKind, sketch_method: Option<SketchMethod>) -> Result<Self> {
        if kind.is_sketch() != sketch_method.is_some() {
            return Err(Error::InvalidArgument(format!(
                "strategy {kind:?} {} a sketch method",
                if kind.is_sketch() { "requires" } else { "does not take" }
            )));
        }
        Ok(Self {
            kind,
            sketch_method,
        })
    }

    pub fn plain(kind: StrategyKind) -> Self {
        Self::new(kind, None).expect("plain strategy")
    }

    pub fn sketched(kind: StrategyKind, method: SketchMethod) -> Self {
        Self::new(kind, Some(method)).expect("sketch strategy")
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn sketch_method(&self) -> Option<SketchMethod> {
        self.sketch_method
    }

    /// The fifteen configurations of the benchmark tables, in table order.
    pub fn paper_grid() -> Vec<Strategy> {
        use SketchMethod::*;
        use StrategyKind::*;
        let sk = |k| [Gaussian, ClarksonWoodruff, Hadamard].map(|m| Strategy::sketched(k, m));
        let mut out = vec![Strategy::plain(None), Strategy::plain(Under)];
        out.extend(sk(SketchPartial));
        out.push(Strategy::plain(Over));
        out.extend(sk(SketchOverPartial));
        out.push(Strategy::plain(Rose));
        out.push(Strategy::plain(Smote));
        out.push(Strategy::plain(UnderOverBalanced));
        out.extend(sk(SketchBalanced));
        out
    }

    /// Row label in rendered tables.
    pub fn display_name(&self) -> String {
        let m = self.sketch_method.map(|m| m.display_name()).unwrap_or("");
        match self.kind {
            StrategyKind::None => "Baseline".into(),
            StrategyKind::Under => "Under-Sampling".into(),
            StrategyKind::Over => "Over-Sampling".into(),
            StrategyKind::Smote => "SMOTE".into(),
            StrategyKind::Rose => "ROSE".into(),
            StrategyKind::UnderOverBalanced => "UndOver-Sampling Bal".into(),
            StrategyKind::SketchPartial => format!("{m} Partial Sk"),
            StrategyKind::SketchOverPartial => format!("{m} Partial OverSk"),
            StrategyKind::SketchBalanced => format!("{m} Bal Sk"),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.kind {
            StrategyKind::None => "none",
            StrategyKind::Under => "under",
            StrategyKind::Over => "over",
            StrategyKind::Smote => "smote",
            StrategyKind::Rose => "rose",
            StrategyKind::UnderOverBalanced => "underover-bal",
            StrategyKind::SketchPartial => "sk-partial",
            StrategyKind::SketchOverPartial => "sk-overpartial",
            StrategyKind::SketchBalanced => "sk-balanced",
        };
        match self.sketch_method {
            Some(m) => write!(f, "{base}-{m}"),
            None => f.write_str(base),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let plain = match s.as_str() {
            "none" => Some(StrategyKind::None),
            "under" => Some(StrategyKind::Under),
            "over" => Some(StrategyKind::Over),
            "smote" => Some(StrategyKind::Smote),
            "rose" => Some(StrategyKind::Rose),
            "underover-bal" => Some(StrategyKind::UnderOverBalanced),
            _ => None,
        };
        if let Some(kind) = plain {
            return Strategy::new(kind, None);
        }
        let (base, method) = s
            .rsplit_once(['-', ':'])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))?;
        let kind = match base {
            "sk-partial" => StrategyKind::SketchPartial,
            "sk-overpartial" => StrategyKind::SketchOverPartial,
            "sk-balanced" => StrategyKind::SketchBalanced,
            _ => return Err(Error::InvalidArgument(format!("unknown strategy {s:?}"))),
        };
        Strategy::new(kind, Some(method.parse()?))
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

/// Tunables shared by the strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RebalanceParams {
    /// Neighbours considered by SMOTE.
    pub smote_neighbors: usize,
    /// Per-class size for the joint ("Bal") strategies; `None` means `2 * n1`.
    pub balanced_size: Option<usize>,
}

impl Default for RebalanceParams {
    fn default() -> Self {
        Self {
            smote_neighbors: 5,
            balanced_size: None,
        }
    }
}

impl RebalanceParams {
    fn balanced_target(&self, ds: &LabeledDataset) -> Result<usize> {
        let target = self.balanced_size.unwrap_or(2 * ds.n1());
        if target > ds.n0() || target < ds.n1() {
            return Err(Error::InvalidArgument(format!(
                "balanced size {target} must lie between n1 = {} and n0 = {}",
                ds.n1(),
                ds.n0()
            )));
        }
        Ok(target)
    }
}

/// Per-class ingredients of the (sketched) discriminant direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalancedParts {
    pub gram0: Array2<f64>,
    pub gram1: Array2<f64>,
    pub mean0: Array1<f64>,
    pub mean1: Array1<f64>,
    pub orig_n0: usize,
    pub orig_n1: usize,
    pub eff_n0: usize,
    pub eff_n1: usize,
}

impl RebalancedParts {
    /// Unsketched parts: exact class Grams with effective sizes equal to the
    /// original ones.
    pub fn exact(ds: &LabeledDataset) -> Result<Self> {
        let c0 = center_class(ds.class_matrix(Class::Majority).view())?;
        let c1 = center_class(ds.class_matrix(Class::Minority).view())?;
        Ok(Self {
            gram0: gram(c0.centered.view()),
            gram1: gram(c1.centered.view()),
            mean0: c0.mean,
            mean1: c1.mean,
            orig_n0: c0.original_size,
            orig_n1: c1.original_size,
            eff_n0: c0.original_size,
            eff_n1: c1.original_size,
        })
    }
}

pub(crate) fn gram(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.t().dot(&x)
}

pub fn undersample(ds: &LabeledDataset, target0: usize, seed: u64) -> Result<LabeledDataset> {
    if target0 == 0 || target0 > ds.n0() {
        return Err(Error::InvalidArgument(format!(
            "undersample target {target0} not in 1..={}",
            ds.n0()
        )));
    }
    let majority = ds.class_indices(Class::Majority);
    let mut rng = rng::rng(seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, majority.len(), target0)
        .into_iter()
        .map(|i| majority[i])
        .collect();
    keep.sort_unstable();
    keep.extend(ds.class_indices(Class::Minority));
    ds.select(&keep)
}

/// Keeps every original minority row once and appends `target1 - n1`
/// copies drawn with replacement.
pub fn oversample(ds: &LabeledDataset, target1: usize, seed: u64) -> Result<LabeledDataset> {
    if target1 < ds.n1() {
        return Err(Error::InvalidArgument(format!(
            "oversample target {target1} is below n1 = {}",
            ds.n1()
        )));
    }
    let minority = ds.class_indices(Class::Minority);
    let mut rng = rng::rng(seed);
    let mut rows: Vec<usize> = (0..ds.n()).collect();
    rows.extend((ds.n1()..target1).map(|_| minority[rng.random_range(0..minority.len())]));
    ds.select(&rows)
}

fn nearest_neighbors(x: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum();
                    (dist, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Grows the minority class to `target1` rows by interpolating between a
/// minority row and one of its `k_neighbors` nearest minority neighbours.
/// Donor rows are visited cyclically.
pub fn smote(
    ds: &LabeledDataset,
    target1: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let n1 = ds.n1();
    if target1 < n1 {
        return Err(Error::InvalidArgument(format!(
            "SMOTE target {target1} is below n1 = {n1}"
        )));
    }
    if k_neighbors == 0 || n1 <= k_neighbors {
        return Err(Error::InvalidArgument(format!(
            "SMOTE needs more than k = {k_neighbors} minority rows, got {n1}"
        )));
    }
    let minority = ds.class_matrix(Class::Minority);
    let neighbors = nearest_neighbors(&minority, k_neighbors);
    let mut rng = rng::rng(seed);
    let mut synth = Array2::zeros((target1 - n1, ds.p()));
    for (s, mut row) in synth.rows_mut().into_iter().enumerate() {
        let donor = s % n1;
        let nn = neighbors[donor][rng.random_range(0..k_neighbors)];
        let u: f64 = rng.random();
        let x = minority.row(donor);
        let diff = &minority.row(nn) - &x;
        row.assign(&x);
        row.scaled_add(u, &diff);
    }
    let grown = ndarray::concatenate(Axis(0), &[minority.view(), synth.view()])
        .map_err(|e| Error::Shape(e.to_string()))?;
    LabeledDataset::from_class_blocks(&ds.class_matrix(Class::Majority), &grown)
}

/// Smoothed bootstrap. Each class receives about half of `total` rows
/// (binomial draw, kept to at least one row per class); each row is a
/// uniformly chosen row of that class plus Gaussian noise with per-feature
/// bandwidth `(4 / ((p + 2) m_c))^(1 / (p + 4)) · sd_{c,j}`.
pub fn rose(ds: &LabeledDataset, total: usize, seed: u64) -> Result<LabeledDataset> {
    if total < 2 {
        return Err(Error::InvalidArgument(format!(
            "ROSE needs a total of at least 2 rows, got {total}"
        )));
    }
    let mut rng = rng::rng(seed);
    let n_new1 = Binomial::new(total as u64, 0.5)
        .expect("valid binomial")
        .sample(&mut rng)
        .clamp(1, total as u64 - 1) as usize;
    let p = ds.p();
    let mut blocks = Vec::with_capacity(2);
    for (class, size) in [(Class::Majority, total - n_new1), (Class::Minority, n_new1)] {
        let x = ds.class_matrix(class);
        let m = x.nrows();
        let sd = if m > 1 {
            x.std_axis(Axis(0), 1.0)
        } else {
            Array1::zeros(p)
        };
        let factor = (4.0 / ((p as f64 + 2.0) * m as f64)).powf(1.0 / (p as f64 + 4.0));
        let h = sd * factor;
        let mut out = Array2::zeros((size, p));
        for mut row in out.rows_mut() {
            let donor = x.row(rng.random_range(0..m));
            for j in 0..p {
                let z: f64 = rng.sample(StandardNormal);
                row[j] = donor[j] + h[j] * z;
            }
        }
        blocks.push(out);
    }
    LabeledDataset::from_class_blocks(&blocks[0], &blocks[1])
}

/// Undersamples the majority and oversamples the minority, both to the
/// balanced target (default `2 * n1` rows each).
pub fn underover_balanced(
    ds: &LabeledDataset,
    params: &RebalanceParams,
    seed: u64,
) -> Result<LabeledDataset> {
    let target = params.balanced_target(ds)?;
    let under = undersample(ds, target, derive_seed(seed, &[1]))?;
    oversample(&under, target, derive_seed(seed, &[2]))
}

/// SMOTE paired with majority undersampling, both to the balanced target.
pub fn smote_balanced(
    ds: &LabeledDataset,
    params: &RebalanceParams,
    seed: u64,
) -> Result<LabeledDataset> {
    let target = params.balanced_target(ds)?;
    let under = undersample(ds, target, derive_seed(seed, &[1]))?;
    smote(&under, target, params.smote_neighbors, derive_seed(seed, &[2]))
}

struct SketchedClasses {
    class0: CenteredClass,
    class1: CenteredClass,
    /// Sketched (or untouched) centered rows per class.
    rows0: Array2<f64>,
    rows1: Array2<f64>,
    eff: (usize, usize),
}

fn sketch_classes(
    ds: &LabeledDataset,
    strategy: &Strategy,
    params: &RebalanceParams,
    seed: u64,
) -> Result<SketchedClasses> {
    let method = match (strategy.kind.is_sketch(), strategy.sketch_method) {
        (true, Some(m)) => m,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{strategy} is not a sketch strategy"
            )))
        }
    };
    let (n0, n1) = (ds.n0(), ds.n1());
    let (k0, k1) = match strategy.kind {
        StrategyKind::SketchPartial => (Some(n1), None),
        StrategyKind::SketchOverPartial => (None, Some(n0)),
        StrategyKind::SketchBalanced => {
            let t = params.balanced_target(ds)?;
            (Some(t), Some(t))
        }
        _ => unreachable!(),
    };
    let class0 = center_class(ds.class_matrix(Class::Majority).view())?;
    let class1 = center_class(ds.class_matrix(Class::Minority).view())?;
    let apply = |c: &CenteredClass, k: Option<usize>, tag: u64| -> Result<Array2<f64>> {
        match k {
            Some(k) => {
                let spec = SketchSpec::new(method, k, derive_seed(seed, &[tag]));
                Ok(sketch(c.centered.view(), &spec)?.rows)
            }
            None => Ok(c.centered.clone()),
        }
    };
    let rows0 = apply(&class0, k0, 0)?;
    let rows1 = apply(&class1, k1, 1)?;
    let eff = (rows0.nrows(), rows1.nrows());
    Ok(SketchedClasses {
        class0,
        class1,
        rows0,
        rows1,
        eff,
    })
}

/// Sketch-based rebalancing feeding the sketched discriminant fit.
///
/// * `SketchPartial`: the majority is sketched down to `n1` rows.
/// * `SketchOverPartial`: the minority is over-sketched up to `n0` rows.
/// * `SketchBalanced`: both classes are sketched to the balanced target.
pub fn sketch_rebalance(
    ds: &LabeledDataset,
    strategy: &Strategy,
    params: &RebalanceParams,
    seed: u64,
) -> Result<RebalancedParts> {
    let sk = sketch_classes(ds, strategy, params, seed)?;
    Ok(RebalancedParts {
        gram0: gram(sk.rows0.view()),
        gram1: gram(sk.rows1.view()),
        mean0: sk.class0.mean,
        mean1: sk.class1.mean,
        orig_n0: sk.class0.original_size,
        orig_n1: sk.class1.original_size,
        eff_n0: sk.eff.0,
        eff_n1: sk.eff.1,
    })
}

/// Same sketches as [`sketch_rebalance`], materialized as labeled rows with
/// each class mean added back.
pub fn sketch_rebalance_synthetic(
    ds: &LabeledDataset,
    strategy: &Strategy,
    params: &RebalanceParams,
    seed: u64,
) -> Result<LabeledDataset> {
    let sk = sketch_classes(ds, strategy, params, seed)?;
    let block0 = sk.rows0 + &sk.class0.mean;
    let block1 = sk.rows1 + &sk.class1.mean;
    LabeledDataset::from_class_blocks(&block0, &block1)
}

/// Applies any strategy and returns a dataset; sketch strategies go through
/// [`sketch_rebalance_synthetic`].
pub fn rebalance_dataset(
    ds: &LabeledDataset,
    strategy: &Strategy,
    params: &RebalanceParams,
    seed: u64,
) -> Result<LabeledDataset> {
    match strategy.kind {
        StrategyKind::None => Ok(ds.clone()),
        StrategyKind::Under => undersample(ds, ds.n1(), seed),
        StrategyKind::Over => oversample(ds, ds.n0(), seed),
        StrategyKind::Smote => smote_balanced(ds, params, seed),
        StrategyKind::Rose => rose(ds, ds.n(), seed),
        StrategyKind::UnderOverBalanced => underover_balanced(ds, params, seed),
        _ => sketch_rebalance_synthetic(ds, strategy, params, seed),
    }
}
