//! Confusion rates, ROC curves and median aggregation.
//!
//! By default the majority class (class 0) is the "positive" class, so
//! sensitivity is majority recall and specificity is minority recall. Scores
//! passed to [`roc_auc`] are always class-1 propensities (what the
//! classifiers emit); the orientation only decides which class the curve's
//! true-positive axis tracks. AUC does not depend on it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Class;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositiveClass {
    #[default]
    Majority,
    Minority,
}

impl PositiveClass {
    pub fn class(self) -> Class {
        match self {
            PositiveClass::Majority => Class::Majority,
            PositiveClass::Minority => Class::Minority,
        }
    }
}

impl FromStr for PositiveClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" | "0" => Ok(PositiveClass::Majority),
            "minority" | "1" => Ok(PositiveClass::Minority),
            _ => Err(Error::InvalidArgument(format!(
                "positive class must be majority or minority, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for PositiveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositiveClass::Majority => "majority",
            PositiveClass::Minority => "minority",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }
}

pub fn confusion(
    truth: &[Class],
    predicted: &[Class],
    positive: PositiveClass,
) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let pos = positive.class();
    let mut c = ConfusionCounts::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == pos, p == pos) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one per distinct score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Trapezoid area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            out.push_str(&format!("{f},{t}\n"));
        }
        out
    }
}

/// Sweeps the decision threshold over the distinct scores. `scores` are
/// class-1 propensities; tied scores move the curve diagonally, which
/// credits ties with one half.
pub fn roc_auc(
    scores: &[f64],
    truth: &[Class],
    positive: PositiveClass,
) -> Result<(RocCurve, f64)> {
    if scores.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    let pos = positive.class();
    let n_pos = truth.iter().filter(|&&t| t == pos).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("ROC needs both classes present".into()));
    }
    // Larger key = more positive.
    let key = |s: f64| if pos == Class::Minority { s } else { -s };
    let mut order: Vec<(f64, bool)> = scores
        .iter()
        .zip(truth)
        .map(|(&s, &t)| (key(s), t == pos))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let k = order[i].0;
        while i < order.len() && order[i].0 == k {
            if order[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let curve = RocCurve { points };
    let auc = curve.area();
    Ok((curve, auc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub auc: f64,
}

impl MetricsSummary {
    pub fn from_predictions(
        truth: &[Class],
        predicted: &[Class],
        scores: &[f64],
        positive: PositiveClass,
    ) -> Result<Self> {
        let c = confusion(truth, predicted, positive)?;
        let (_, auc) = roc_auc(scores, truth, positive)?;
        Ok(Self {
            accuracy: c.accuracy(),
            sensitivity: c.sensitivity(),
            specificity: c.specificity(),
            auc,
        })
    }
}

/// Median; even counts average the two central order statistics.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

pub fn median_aggregate(results: &[MetricsSummary]) -> Result<MetricsSummary> {
    let pick = |f: fn(&MetricsSummary) -> f64| {
        median(&results.iter().map(f).collect::<Vec<_>>())
            .ok_or_else(|| Error::InvalidArgument("cannot aggregate zero replicates".into()))
    };
    Ok(MetricsSummary {
        accuracy: pick(|m| m.accuracy)?,
        sensitivity: pick(|m| m.sensitivity)?,
        specificity: pick(|m| m.specificity)?,
        auc: pick(|m| m.auc)?,
    })
}
