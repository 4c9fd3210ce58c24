//! Replicated benchmark driver.
//!
//! Each replicate draws a stratified train/test split, applies every
//! configured strategy to the training part only, fits the classifier, and
//! scores the untouched test part. Per-strategy medians over replicates form
//! the output table.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit_c45, fit_lda_dataset, fit_lda_sketched, TreeParams};
use crate::data::{load_csv, stratified_split, LabelColumn, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::metrics::{median_aggregate, MetricsSummary, PositiveClass};
use crate::rebalance::{rebalance_dataset, sketch_rebalance, RebalanceParams, Strategy, StrategyKind};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Lda,
    C45,
}

impl ClassifierKind {
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "LDA",
            ClassifierKind::C45 => "C4.5 Tree",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(ClassifierKind::Lda),
            "c45" | "c4.5" | "tree" => Ok(ClassifierKind::C45),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::C45 => "c45",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Markdown,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

fn default_train_frac() -> f64 {
    0.75
}

fn default_replicates() -> usize {
    200
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::plain(StrategyKind::None)]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub label_column: LabelColumn,
    #[serde(default)]
    pub minority_label: Option<String>,
    #[serde(default)]
    pub classifier: ClassifierKind,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
    /// Drop failing (replicate, strategy) pairs instead of aborting.
    #[serde(default)]
    pub skip_failures: bool,
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// z-score features with train-split statistics.
    #[serde(default)]
    pub standardize: bool,
    /// Ignore class sizes when placing the LDA cut.
    #[serde(default)]
    pub equal_priors: bool,
    #[serde(default)]
    pub positive: PositiveClass,
    #[serde(default)]
    pub rebalance: RebalanceParams,
    #[serde(default)]
    pub tree: TreeParams,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            label_column: LabelColumn::default(),
            minority_label: None,
            classifier: ClassifierKind::default(),
            strategies: default_strategies(),
            train_frac: default_train_frac(),
            replicates: default_replicates(),
            base_seed: 0,
            format: OutputFormat::default(),
            skip_failures: false,
            parallel: true,
            standardize: false,
            equal_priors: false,
            positive: PositiveClass::default(),
            rebalance: RebalanceParams::default(),
            tree: TreeParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::Config(format!(
                "train_frac {} not in (0, 1)",
                self.train_frac
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub strategy: Strategy,
    pub metrics: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: Strategy,
    pub name: String,
    /// Replicates that contributed to the medians.
    pub replicates: usize,
    pub median: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub classifier: ClassifierKind,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn row(&self, strategy: &Strategy) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| &r.strategy == strategy)
    }
}

/// Stable per-strategy tag so that adding or reordering strategies leaves
/// the random streams of the others unchanged.
fn strategy_tag(s: &Strategy) -> u64 {
    s.to_string()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn split_seed(base_seed: u64, replicate: usize) -> u64 {
    base_seed.wrapping_add(replicate as u64)
}

pub fn strategy_seed(base_seed: u64, replicate: usize, strategy: &Strategy) -> u64 {
    derive_seed(base_seed, &[replicate as u64, strategy_tag(strategy)])
}

/// Rebalances `train`, fits the classifier and scores `test`.
pub fn evaluate_strategy(
    train: &LabeledDataset,
    test: &LabeledDataset,
    strategy: &Strategy,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<MetricsSummary> {
    let (scores, predicted) = match config.classifier {
        ClassifierKind::Lda => {
            let model = if strategy.kind().is_sketch() {
                fit_lda_sketched(&sketch_rebalance(train, strategy, &config.rebalance, seed)?)?
            } else {
                fit_lda_dataset(&rebalance_dataset(train, strategy, &config.rebalance, seed)?)?
            };
            let model = if config.equal_priors {
                model.with_equal_priors()
            } else {
                model
            };
            let scores = model.scores(test.features().view());
            let predicted = scores.iter().map(|&s| model.classify(s)).collect();
            (scores.to_vec(), predicted)
        }
        ClassifierKind::C45 => {
            let data = rebalance_dataset(train, strategy, &config.rebalance, seed)?;
            let model = fit_c45(&data, &config.tree)?;
            (model.scores(test), model.predict(test))
        }
    };
    MetricsSummary::from_predictions(test.labels(), &predicted, &scores, config.positive)
}

fn run_replicate(
    ds: &LabeledDataset,
    config: &ExperimentConfig,
    replicate: usize,
) -> Vec<(Strategy, Result<MetricsSummary>)> {
    let wrap = |strategy: &Strategy, e: Error| Error::Replicate {
        replicate,
        strategy: strategy.to_string(),
        source: Box::new(e),
    };
    let split = match stratified_split(ds, config.train_frac, split_seed(config.base_seed, replicate)) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return config
                .strategies
                .iter()
                .map(|s| (*s, Err(wrap(s, Error::InvalidArgument(msg.clone())))))
                .collect();
        }
    };
    let (train, test) = if config.standardize {
        let z = Standardizer::fit(&split.train);
        match (z.apply(&split.train), z.apply(&split.test)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                let msg = e.to_string();
                return config
                    .strategies
                    .iter()
                    .map(|s| (*s, Err(wrap(s, Error::InvalidArgument(msg.clone())))))
                    .collect();
            }
        }
    } else {
        (split.train, split.test)
    };
    let test_digest = test.checksum();
    let out = config
        .strategies
        .iter()
        .map(|s| {
            let seed = strategy_seed(config.base_seed, replicate, s);
            let r = evaluate_strategy(&train, &test, s, config, seed).map_err(|e| wrap(s, e));
            (*s, r)
        })
        .collect();
    debug_assert_eq!(test.checksum(), test_digest, "test split was modified");
    out
}

/// Runs every replicate and strategy; results are ordered by replicate, then
/// by configured strategy order.
pub fn run_replicates(ds: &LabeledDataset, config: &ExperimentConfig) -> Result<Vec<ReplicateResult>> {
    config.validate()?;
    let per_rep: Vec<Vec<(Strategy, Result<MetricsSummary>)>> = if config.parallel {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(ds, config, r))
            .collect()
    } else {
        (0..config.replicates).map(|r| run_replicate(ds, config, r)).collect()
    };
    let mut results = Vec::new();
    for (replicate, rows) in per_rep.into_iter().enumerate() {
        for (strategy, r) in rows {
            match r {
                Ok(metrics) => results.push(ReplicateResult {
                    replicate,
                    strategy,
                    metrics,
                }),
                Err(e) if config.skip_failures => {
                    log_skip(&e);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(results)
}

fn log_skip(e: &Error) {
    eprintln!("skipping: {e}");
}

pub fn aggregate(
    results: &[ReplicateResult],
    strategies: &[Strategy],
    classifier: ClassifierKind,
) -> Result<AggregateTable> {
    let rows = strategies
        .iter()
        .map(|s| {
            let metrics: Vec<MetricsSummary> = results
                .iter()
                .filter(|r| &r.strategy == s)
                .map(|r| r.metrics)
                .collect();
            let median = median_aggregate(&metrics)
                .map_err(|_| Error::Config(format!("strategy {s} has no successful replicate")))?;
            let name = if s.kind() == StrategyKind::None {
                classifier.display_name().to_string()
            } else {
                s.display_name()
            };
            Ok(AggregateRow {
                strategy: *s,
                name,
                replicates: metrics.len(),
                median,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AggregateTable { classifier, rows })
}

pub fn run_on_dataset(ds: &LabeledDataset, config: &ExperimentConfig) -> Result<AggregateTable> {
    let results = run_replicates(ds, config)?;
    aggregate(&results, &config.strategies, config.classifier)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateTable> {
    config.validate()?;
    let ds = load_csv(
        &config.dataset,
        &config.label_column,
        config.minority_label.as_deref(),
    )?;
    run_on_dataset(&ds, config)
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn render_table(table: &AggregateTable, format: OutputFormat) -> String {
    match format {
        OutputFormat::Markdown => {
            let width = table.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
            let mut out = format!(
                "| {:<width$} | Accuracy | Sensitivity | Specificity | AUC |\n",
                "Strategy"
            );
            out.push_str(&format!("|{}|---:|---:|---:|---:|\n", "-".repeat(width + 2)));
            for r in &table.rows {
                let m = &r.median;
                out.push_str(&format!(
                    "| {:<width$} | {:.3} | {:.3} | {:.3} | {:.3} |\n",
                    r.name, m.accuracy, m.sensitivity, m.specificity, m.auc
                ));
            }
            out
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |r: csv::Result<()>| r.expect("writing csv to memory");
            io(w.write_record([
                "strategy",
                "name",
                "replicates",
                "accuracy",
                "sensitivity",
                "specificity",
                "auc",
            ]));
            for r in &table.rows {
                let m = &r.median;
                io(w.write_record([
                    r.strategy.to_string(),
                    r.name.clone(),
                    r.replicates.to_string(),
                    format!("{:.3}", m.accuracy),
                    format!("{:.3}", m.sensitivity),
                    format!("{:.3}", m.specificity),
                    format!("{:.3}", m.auc),
                ]));
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = table
                .rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "strategy": r.strategy.to_string(),
                        "name": r.name,
                        "replicates": r.replicates,
                        "accuracy": round3(r.median.accuracy),
                        "sensitivity": round3(r.median.sensitivity),
                        "specificity": round3(r.median.specificity),
                        "auc": round3(r.median.auc),
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("json");
            s.push('\n');
            s
        }
    }
}
