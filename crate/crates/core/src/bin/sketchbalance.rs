use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use sketchbalance::classifiers::{fit_c45, fit_lda_dataset, fit_lda_sketched};
use sketchbalance::data::{load_csv, Class, LabelColumn};
use sketchbalance::harness::{render_table, run_experiment, ClassifierKind, ExperimentConfig, OutputFormat};
use sketchbalance::metrics::{roc_auc, PositiveClass};
use sketchbalance::rebalance::{rebalance_dataset, sketch_rebalance, Strategy};
use sketchbalance::sketch::{sketch, SketchMethod, SketchSpec};
use sketchbalance::Error;

#[derive(Parser)]
#[command(name = "sketchbalance", version, about = "Sketch-based class rebalancing benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated rebalancing experiment and print the median table.
    Run(RunArgs),
    /// Sketch a numeric CSV matrix (rows are observations).
    Sketch(SketchArgs),
    /// Compute a ROC curve from a CSV of scores and 0/1 labels.
    Roc(RocArgs),
    /// Fit one model on a whole dataset and dump it as JSON.
    Fit(FitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with experiment settings; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Label column name or zero-based index (`last` by default).
    #[arg(long)]
    label_column: Option<LabelColumn>,
    #[arg(long)]
    minority_label: Option<String>,
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// Repeatable, e.g. `--strategy none --strategy sk-partial-gauss`.
    #[arg(long = "strategy")]
    strategies: Vec<Strategy>,
    /// Use the full fifteen-strategy benchmark grid.
    #[arg(long, conflicts_with = "strategies")]
    paper_grid: bool,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    skip_failures: bool,
    /// Run replicates on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    equal_priors: bool,
    #[arg(long)]
    positive: Option<PositiveClass>,
    #[arg(long)]
    smote_k: Option<usize>,
    /// Per-class size for the joint strategies (default 2 * n1).
    #[arg(long)]
    balanced_size: Option<usize>,
}

#[derive(Args)]
struct SketchArgs {
    #[arg(long)]
    method: SketchMethod,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RocArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "score")]
    score_column: String,
    /// Column holding 0 (majority) / 1 (minority).
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "majority")]
    positive: PositiveClass,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "last")]
    label_column: LabelColumn,
    #[arg(long)]
    minority_label: Option<String>,
    #[arg(long, default_value = "lda")]
    classifier: ClassifierKind,
    #[arg(long, default_value = "none")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_config(args: RunArgs) -> Result<(ExperimentConfig, Option<PathBuf>), Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            let dataset = args
                .dataset
                .clone()
                .ok_or_else(|| Failure::Config("either --config or --dataset is required".into()))?;
            ExperimentConfig::new(dataset)
        }
    };
    if let Some(d) = args.dataset {
        cfg.dataset = d;
    }
    if let Some(c) = args.label_column {
        cfg.label_column = c;
    }
    if args.minority_label.is_some() {
        cfg.minority_label = args.minority_label;
    }
    if let Some(c) = args.classifier {
        cfg.classifier = c;
    }
    if args.paper_grid {
        cfg.strategies = Strategy::paper_grid();
    } else if !args.strategies.is_empty() {
        cfg.strategies = args.strategies;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(f) = args.train_frac {
        cfg.train_frac = f;
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(p) = args.positive {
        cfg.positive = p;
    }
    if let Some(k) = args.smote_k {
        cfg.rebalance.smote_neighbors = k;
    }
    if args.balanced_size.is_some() {
        cfg.rebalance.balanced_size = args.balanced_size;
    }
    cfg.skip_failures |= args.skip_failures;
    cfg.parallel &= !args.sequential;
    cfg.standardize |= args.standardize;
    cfg.equal_priors |= args.equal_priors;
    cfg.validate()?;
    Ok((cfg, args.out))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (cfg, out) = build_config(args)?;
    let table = run_experiment(&cfg).map_err(runtime)?;
    write_output(out.as_deref(), &render_table(&table, cfg.format))
}

fn read_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>), Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr.headers().map_err(runtime)?.iter().map(String::from).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(runtime)?;
        for cell in rec.iter() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| runtime(format!("row {i}: {cell:?} is not a finite number")))?;
            values.push(v);
        }
        rows += 1;
    }
    let x = Array2::from_shape_vec((rows, header.len()), values).map_err(runtime)?;
    Ok((header, x))
}

fn cmd_sketch(args: SketchArgs) -> Result<(), Failure> {
    if args.k == 0 {
        return Err(Failure::Config("--k must be at least 1".into()));
    }
    let (header, x) = read_matrix(&args.input)?;
    let spec = SketchSpec::new(args.method, args.k, args.seed);
    let out = sketch(x.view(), &spec).map_err(runtime)?;
    let mut w = csv::Writer::from_path(&args.out).map_err(runtime)?;
    w.write_record(&header).map_err(runtime)?;
    for row in out.rows.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn cmd_roc(args: RocArgs) -> Result<(), Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&args.input)
        .map_err(|e| runtime(format!("{}: {e}", args.input.display())))?;
    let header = rdr.headers().map_err(runtime)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Config(format!("column {name:?} not found")))
    };
    let (si, li) = (col(&args.score_column)?, col(&args.label_column)?);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(runtime)?;
        let s: f64 = rec[si]
            .parse()
            .map_err(|_| runtime(format!("bad score {:?}", &rec[si])))?;
        let l = match &rec[li] {
            "0" => Class::Majority,
            "1" => Class::Minority,
            other => return Err(runtime(format!("label {other:?} is not 0 or 1"))),
        };
        scores.push(s);
        labels.push(l);
    }
    let (curve, auc) = roc_auc(&scores, &labels, args.positive).map_err(runtime)?;
    eprintln!("auc={auc:.6}");
    write_output(args.out.as_deref(), &curve.to_csv())
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let ds = load_csv(&args.dataset, &args.label_column, args.minority_label.as_deref())
        .map_err(runtime)?;
    let params = Default::default();
    let json = match args.classifier {
        ClassifierKind::Lda if args.strategy.kind().is_sketch() => {
            let parts = sketch_rebalance(&ds, &args.strategy, &params, args.seed).map_err(runtime)?;
            serde_json::to_string_pretty(&fit_lda_sketched(&parts).map_err(runtime)?)
        }
        ClassifierKind::Lda => {
            let data = rebalance_dataset(&ds, &args.strategy, &params, args.seed).map_err(runtime)?;
            serde_json::to_string_pretty(&fit_lda_dataset(&data).map_err(runtime)?)
        }
        ClassifierKind::C45 => {
            let data = rebalance_dataset(&ds, &args.strategy, &params, args.seed).map_err(runtime)?;
            serde_json::to_string_pretty(&fit_c45(&data, &Default::default()).map_err(runtime)?)
        }
    }
    .map_err(runtime)?;
    write_output(args.out.as_deref(), &(json + "\n"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sketch(a) => cmd_sketch(a),
        Command::Roc(a) => cmd_roc(a),
        Command::Fit(a) => cmd_fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
