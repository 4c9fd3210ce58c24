//! Closed-form two-class linear discriminant analysis.
//!
//! With centered class matrices `X0`, `X1`, the pooled within-group
//! covariance is `W = (X0ᵀX0 + X1ᵀX1) / (n0 + n1 - 2)` and the discriminant
//! direction is `a = W⁻¹ (x̄1 - x̄0)`. The sketched variant replaces the
//! class Grams with `X̃cᵀX̃c` but keeps the original sizes in the
//! denominator, so the estimate of `W` stays unbiased.
//!
//! A row is assigned to class 1 when `aᵀx` exceeds
//! `aᵀ(x̄0 + x̄1)/2 + ln(π0/π1)`, with priors taken from the effective
//! (post-rebalancing) class sizes.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{Class, LabeledDataset};
use crate::error::{Error, Result};
use crate::rebalance::RebalancedParts;

/// Relative ridge added to the diagonal when the covariance is not
/// numerically positive definite: `λ = RIDGE · trace / p`.
pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantModel {
    pub direction: Array1<f64>,
    pub mean0: Array1<f64>,
    pub mean1: Array1<f64>,
    /// `ln(π0 / π1)`.
    pub log_prior_ratio: f64,
    pub threshold: f64,
}

impl DiscriminantModel {
    fn from_direction(
        direction: Array1<f64>,
        mean0: Array1<f64>,
        mean1: Array1<f64>,
        eff_n0: usize,
        eff_n1: usize,
    ) -> Result<Self> {
        if eff_n0 == 0 || eff_n1 == 0 {
            return Err(Error::InvalidArgument("effective class sizes must be positive".into()));
        }
        if !direction.iter().all(|v| v.is_finite()) || direction.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument(
                "discriminant direction is zero or not finite".into(),
            ));
        }
        let log_prior_ratio = (eff_n0 as f64 / eff_n1 as f64).ln();
        let midpoint = 0.5 * direction.dot(&(&mean0 + &mean1));
        Ok(Self {
            threshold: midpoint + log_prior_ratio,
            direction,
            mean0,
            mean1,
            log_prior_ratio,
        })
    }

    /// Drops the prior term, placing the cut at the projected midpoint.
    pub fn with_equal_priors(mut self) -> Self {
        self.threshold -= self.log_prior_ratio;
        self.log_prior_ratio = 0.0;
        self
    }

    /// `aᵀx`; larger means more class-1-like.
    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.direction.dot(&x)
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&self.direction)
    }

    pub fn classify(&self, score: f64) -> Class {
        if score > self.threshold {
            Class::Minority
        } else {
            Class::Majority
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<Class> {
        self.scores(x).iter().map(|&s| self.classify(s)).collect()
    }
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Solves `m x = rhs` for symmetric positive semidefinite `m` by Cholesky,
/// retrying once with a small ridge.
fn spd_solve(m: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let p = m.nrows();
    let mat = to_dmatrix(m);
    let b = DVector::from_iterator(p, rhs.iter().copied());
    let chol = mat.clone().cholesky().or_else(|| {
        let lambda = RIDGE * mat.trace() / p as f64;
        let ridged = &mat + DMatrix::identity(p, p) * lambda;
        ridged.cholesky()
    });
    let sol = chol.ok_or(Error::Singular)?.solve(&b);
    if !sol.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(Array1::from_iter(sol.iter().copied()))
}

fn pooled_dof(n0: usize, n1: usize) -> Result<f64> {
    if n0 + n1 <= 2 {
        return Err(Error::InvalidArgument(format!(
            "need more than 2 rows in total to pool covariances, got {}",
            n0 + n1
        )));
    }
    Ok((n0 + n1 - 2) as f64)
}

/// Plain LDA on raw class matrices. Priors come from `eff_n0`, `eff_n1`.
pub fn fit_lda(
    x0: ArrayView2<'_, f64>,
    x1: ArrayView2<'_, f64>,
    eff_n0: usize,
    eff_n1: usize,
) -> Result<DiscriminantModel> {
    if x0.ncols() != x1.ncols() {
        return Err(Error::Shape("class matrices differ in column count".into()));
    }
    let c0 = crate::data::center_class(x0)?;
    let c1 = crate::data::center_class(x1)?;
    let dof = pooled_dof(c0.original_size, c1.original_size)?;
    let within = (c0.centered.t().dot(&c0.centered) + c1.centered.t().dot(&c1.centered)) / dof;
    let diff = &c1.mean - &c0.mean;
    let direction = spd_solve(&within, &diff)?;
    DiscriminantModel::from_direction(direction, c0.mean, c1.mean, eff_n0, eff_n1)
}

/// LDA on a dataset with its own class sizes as priors.
pub fn fit_lda_dataset(ds: &LabeledDataset) -> Result<DiscriminantModel> {
    fit_lda(
        ds.class_matrix(Class::Majority).view(),
        ds.class_matrix(Class::Minority).view(),
        ds.n0(),
        ds.n1(),
    )
}

/// `a = (n0 + n1 - 2) (G0 + G1)⁻¹ (x̄1 - x̄0)` from possibly sketched Grams.
pub fn fit_lda_sketched(parts: &RebalancedParts) -> Result<DiscriminantModel> {
    let dof = pooled_dof(parts.orig_n0, parts.orig_n1)?;
    let gram = &parts.gram0 + &parts.gram1;
    let diff = &parts.mean1 - &parts.mean0;
    let direction = spd_solve(&gram, &diff)? * dof;
    DiscriminantModel::from_direction(
        direction,
        parts.mean0.clone(),
        parts.mean1.clone(),
        parts.eff_n0,
        parts.eff_n1,
    )
}
