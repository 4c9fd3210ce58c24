//! Dataset ingestion, class bookkeeping, per-class centering and stratified
//! splitting.
//!
//! Class 1 is always the minority class of an ingested dataset: [`load_csv`]
//! and [`LabeledDataset::canonical`] flip the labels when needed so that
//! downstream code can rely on `n0 >= n1`.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    /// Class 0.
    Majority,
    /// Class 1.
    Minority,
}

impl Class {
    pub fn index(self) -> usize {
        match self {
            Class::Majority => 0,
            Class::Minority => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Class> {
        match i {
            0 => Some(Class::Majority),
            1 => Some(Class::Minority),
            _ => None,
        }
    }

    pub fn other(self) -> Class {
        match self {
            Class::Majority => Class::Minority,
            Class::Minority => Class::Majority,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Feature matrix with binary labels.
///
/// Rebalanced (synthetic) datasets share this type; only ingested datasets
/// are guaranteed to satisfy `n0 >= n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<Class>,
    counts: [usize; 2],
}

impl LabeledDataset {
    /// Validates shapes and finiteness. Labels are taken as given.
    pub fn new(features: Array2<f64>, labels: Vec<Class>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(((r, c), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::BadCell {
                row: r,
                column: c.to_string(),
                value: v.to_string(),
            });
        }
        let mut counts = [0usize; 2];
        for l in &labels {
            counts[l.index()] += 1;
        }
        for (c, &n) in counts.iter().enumerate() {
            if n == 0 {
                return Err(Error::EmptyClass(c as u8));
            }
        }
        Ok(Self {
            features,
            labels,
            counts,
        })
    }

    /// Like [`LabeledDataset::new`], but relabels so that class 1 is the
    /// rarer class.
    pub fn canonical(features: Array2<f64>, labels: Vec<Class>) -> Result<Self> {
        let ds = Self::new(features, labels)?;
        if ds.counts[1] > ds.counts[0] {
            let flipped = ds.labels.iter().map(|l| l.other()).collect();
            return Self::new(ds.features, flipped);
        }
        Ok(ds)
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn n0(&self) -> usize {
        self.counts[0]
    }

    pub fn n1(&self) -> usize {
        self.counts[1]
    }

    pub fn count(&self, class: Class) -> usize {
        self.counts[class.index()]
    }

    pub fn class_indices(&self, class: Class) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rows of one class, in dataset order.
    pub fn class_matrix(&self, class: Class) -> Array2<f64> {
        self.features
            .select(Axis(0), &self.class_indices(class))
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels)
    }

    /// Stacks a majority block on top of a minority block.
    pub fn from_class_blocks(majority: &Array2<f64>, minority: &Array2<f64>) -> Result<Self> {
        if majority.ncols() != minority.ncols() {
            return Err(Error::Shape(format!(
                "class blocks have {} and {} columns",
                majority.ncols(),
                minority.ncols()
            )));
        }
        let features = ndarray::concatenate(Axis(0), &[majority.view(), minority.view()])
            .map_err(|e| Error::Shape(e.to_string()))?;
        let mut labels = vec![Class::Majority; majority.nrows()];
        labels.extend(std::iter::repeat_n(Class::Minority, minority.nrows()));
        Self::new(features, labels)
    }

    /// Order-sensitive FNV-1a digest over the bit patterns of all features
    /// and labels.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.n() as u64);
        eat(self.p() as u64);
        for v in self.features.iter() {
            eat(v.to_bits());
        }
        for l in &self.labels {
            eat(l.index() as u64);
        }
        h
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("last".to_string())
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(s) => write!(f, "{s}"),
        }
    }
}

impl LabelColumn {
    /// Resolves against a header. A header name wins over a numeric index,
    /// and `last` (when no column carries that name) selects the final column.
    fn resolve(&self, header: &csv::StringRecord) -> Result<usize> {
        let by_name = |name: &str| header.iter().position(|h| h.trim() == name);
        match self {
            LabelColumn::Index(i) => by_name(&i.to_string())
                .or_else(|| (*i < header.len()).then_some(*i))
                .ok_or_else(|| Error::MissingColumn(i.to_string())),
            LabelColumn::Name(name) => by_name(name)
                .or_else(|| (name == "last" && !header.is_empty()).then(|| header.len() - 1))
                .ok_or_else(|| Error::MissingColumn(name.clone())),
        }
    }
}

/// Reads a headered CSV file. The rarer label (or `minority_label`, when
/// given) becomes class 1; on a count tie the lexicographically larger raw
/// label becomes class 1.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    minority_label: Option<&str>,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column, minority_label)
}

pub fn read_csv<R: Read>(
    reader: R,
    label_column: &LabelColumn,
    minority_label: Option<&str>,
) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let label_idx = label_column.resolve(&header)?;
    let p = header.len() - 1;

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    row,
                    column: header.get(j).unwrap_or_default().to_string(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
    }

    let mut distinct: Vec<&str> = raw_labels.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::LabelCount(distinct.len()));
    }
    let count = |s: &str| raw_labels.iter().filter(|l| *l == s).count();
    let minority = match minority_label {
        Some(m) if distinct.contains(&m) => m.to_string(),
        Some(m) => {
            return Err(Error::InvalidArgument(format!(
                "minority label {m:?} does not occur in the label column"
            )))
        }
        None => {
            let (a, b) = (distinct[0], distinct[1]);
            // ties go to the lexicographically larger label
            if count(a) < count(b) { a } else { b }.to_string()
        }
    };

    let labels: Vec<Class> = raw_labels
        .iter()
        .map(|l| if *l == minority { Class::Minority } else { Class::Majority })
        .collect();
    let features = Array2::from_shape_vec((labels.len(), p), values)
        .map_err(|e| Error::Shape(e.to_string()))?;
    if minority_label.is_some() {
        LabeledDataset::new(features, labels)
    } else {
        LabeledDataset::canonical(features, labels)
    }
}

/// Class matrix with its column means removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredClass {
    pub centered: Array2<f64>,
    pub mean: Array1<f64>,
    pub original_size: usize,
}

pub fn center_class(x: ArrayView2<'_, f64>) -> Result<CenteredClass> {
    let mean = x
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::InvalidArgument("cannot center an empty class".into()))?;
    let centered = &x - &mean;
    Ok(CenteredClass {
        centered,
        mean,
        original_size: x.nrows(),
    })
}

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Source row indices of `train`, ascending.
    pub train_rows: Vec<usize>,
    /// Source row indices of `test`, ascending.
    pub test_rows: Vec<usize>,
}

/// Per-class train count: `train_frac * n_c` rounded half up.
pub fn train_count(n_c: usize, train_frac: f64) -> usize {
    (train_frac * n_c as f64 + 0.5).floor() as usize
}

pub fn stratified_split(ds: &LabeledDataset, train_frac: f64, seed: u64) -> Result<SplitPair> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_frac} not in (0, 1)"
        )));
    }
    let mut rng = rng::rng(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for class in [Class::Majority, Class::Minority] {
        let mut idx = ds.class_indices(class);
        let n_c = idx.len();
        let n_train = train_count(n_c, train_frac);
        if n_train == 0 || n_train >= n_c {
            return Err(Error::ClassTooSmall {
                class: class.index() as u8,
                size: n_c,
                train_frac,
            });
        }
        idx.shuffle(&mut rng);
        let (tr, te) = idx.split_at(n_train);
        train_rows.extend_from_slice(tr);
        test_rows.extend_from_slice(te);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitPair {
        train: ds.select(&train_rows)?,
        test: ds.select(&test_rows)?,
        train_rows,
        test_rows,
    })
}

/// Per-feature z-scoring with statistics taken from a reference dataset.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(ds: &LabeledDataset) -> Self {
        let x = ds.features();
        let mean = x.mean_axis(Axis(0)).expect("nonempty dataset");
        let ddof = if x.nrows() > 1 { 1.0 } else { 0.0 };
        let scale = x
            .std_axis(Axis(0), ddof)
            .mapv(|s| if s > 0.0 { s } else { 1.0 });
        Self { mean, scale }
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        let z = (ds.features() - &self.mean) / &self.scale;
        LabeledDataset::new(z, ds.labels().to_vec())
    }
}
