//! Random sketching transforms `X -> S X` that compress (or expand) the row
//! count of a matrix while preserving its Gram matrix in expectation,
//! `E[SᵀS] = I`.
//!
//! Three constructions are provided, none of which materializes `S`:
//!
//! * **Gaussian**: `S` has i.i.d. `N(0, 1/k)` entries, drawn row by row.
//!   Costs `O(nkp)`.
//! * **Hadamard** (subsampled randomized Hadamard transform):
//!   `S = Φ H D / √k`. Rows are zero-padded to the next power of two `m`,
//!   `D` is a Rademacher diagonal, `H` the unnormalized Sylvester Hadamard
//!   matrix applied with the fast transform, and `Φ` picks `k` of the `m`
//!   rows uniformly with replacement. Since `HᵀH = mI` and
//!   `E[ΦᵀΦ] = (k/m) I`, the `1/√k` factor alone gives `E[SᵀS] = I`.
//!   Costs `O(pm log m + kp)`.
//! * **Clarkson–Woodruff** (CountSketch): every source row is added, with a
//!   random sign, to one uniformly chosen output row. Costs `O(np)`.
//!
//! `k` may exceed the number of source rows, which turns the sketch into a
//! generator of synthetic rows ("over-sketching").

mod fwht;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use fwht::fwht;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SketchMethod {
    Gaussian,
    Hadamard,
    ClarksonWoodruff,
}

impl SketchMethod {
    pub const ALL: [SketchMethod; 3] = [
        SketchMethod::Gaussian,
        SketchMethod::Hadamard,
        SketchMethod::ClarksonWoodruff,
    ];

    /// Short CLI name: `gauss`, `hada` or `cw`.
    pub fn short_name(self) -> &'static str {
        match self {
            SketchMethod::Gaussian => "gauss",
            SketchMethod::Hadamard => "hada",
            SketchMethod::ClarksonWoodruff => "cw",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            SketchMethod::Gaussian => "Gauss",
            SketchMethod::Hadamard => "Hada",
            SketchMethod::ClarksonWoodruff => "CW",
        }
    }
}

impl fmt::Display for SketchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for SketchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" => Ok(SketchMethod::Gaussian),
            "hada" | "hadamard" | "srht" => Ok(SketchMethod::Hadamard),
            "cw" | "clarkson-woodruff" | "countsketch" => Ok(SketchMethod::ClarksonWoodruff),
            other => Err(Error::InvalidArgument(format!(
                "unknown sketch method {other:?} (expected gauss, hada or cw)"
            ))),
        }
    }
}

/// Fully determines one random sketch draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub method: SketchMethod,
    pub k: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(method: SketchMethod, k: usize, seed: u64) -> Self {
        Self { method, k, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchedMatrix {
    /// `k × p` sketched rows.
    pub rows: Array2<f64>,
    /// Row count of the matrix that was sketched.
    pub source_rows: usize,
}

/// Target dimension `ceil(20 ln(points) / ε²)` from the Johnson–Lindenstrauss
/// lemma. Requires `points >= 2` and `0 < ε < 1/2`.
pub fn jl_dimension(points: usize, epsilon: f64) -> Result<usize> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points, got {points}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} not in (0, 1/2)"
        )));
    }
    Ok((20.0 * (points as f64).ln() / (epsilon * epsilon)).ceil() as usize)
}

fn check(x: &ArrayView2<'_, f64>, k: usize) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Shape("cannot sketch a matrix with no rows".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("sketch size k must be at least 1".into()));
    }
    Ok(())
}

pub fn sketch(x: ArrayView2<'_, f64>, spec: &SketchSpec) -> Result<SketchedMatrix> {
    match spec.method {
        SketchMethod::Gaussian => gaussian_sketch(x, spec.k, spec.seed),
        SketchMethod::Hadamard => hadamard_sketch(x, spec.k, spec.seed),
        SketchMethod::ClarksonWoodruff => cw_sketch(x, spec.k, spec.seed),
    }
}

pub fn gaussian_sketch(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<SketchedMatrix> {
    check(&x, k)?;
    let (n, p) = x.dim();
    let scale = 1.0 / (k as f64).sqrt();
    let mut rng = rng::rng(seed);
    let mut out = Array2::zeros((k, p));
    for mut row in out.rows_mut() {
        for j in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            row.scaled_add(g * scale, &x.row(j));
        }
    }
    Ok(SketchedMatrix {
        rows: out,
        source_rows: n,
    })
}

pub fn hadamard_sketch(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<SketchedMatrix> {
    check(&x, k)?;
    let (n, p) = x.dim();
    let m = n.next_power_of_two();
    let mut rng = rng::rng(seed);
    // m signs are drawn even when n < m so that a pre-padded input consumes
    // the stream identically.
    let signs: Vec<f64> = (0..m)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let picks: Vec<usize> = (0..k).map(|_| rng.random_range(0..m)).collect();

    let scale = 1.0 / (k as f64).sqrt();
    let mut out = Array2::zeros((k, p));
    let mut buf = vec![0.0; m];
    for j in 0..p {
        let col = x.column(j);
        for (i, (b, s)) in buf.iter_mut().zip(&signs).enumerate() {
            let v = if i < n { col[i] } else { 0.0 };
            *b = s * v;
        }
        fwht(&mut buf)?;
        for (r, &src) in picks.iter().enumerate() {
            out[[r, j]] = buf[src] * scale;
        }
    }
    Ok(SketchedMatrix {
        rows: out,
        source_rows: n,
    })
}

pub fn cw_sketch(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<SketchedMatrix> {
    check(&x, k)?;
    let (n, p) = x.dim();
    let mut rng = rng::rng(seed);
    let mut out = Array2::zeros((k, p));
    for i in 0..n {
        let target = rng.random_range(0..k);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out.row_mut(target).scaled_add(sign, &x.row(i));
    }
    Ok(SketchedMatrix {
        rows: out,
        source_rows: n,
    })
}
