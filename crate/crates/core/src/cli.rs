//! Batch front end: `cluster`, `estimate`, `compare` and `bench`.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 unreadable or unsuitable
//! input, 3 internal invariant violation.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{Format, LabelColumn, TransactionDataset};
use crate::error::Error;
use crate::estimator::{estimate_alpha, format_alpha, run_fcso, EstimatorConfig};
use crate::ftree::FTreeConfig;
use crate::largeitem::LargeItemConfig;
use crate::report::{run_ftree, run_largeitem, RunReport};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fcso", version, about = "Transactional data clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a dataset and write a JSON report.
    Cluster(ClusterArgs),
    /// Sweep alpha and print the estimated overlap threshold.
    Estimate(EstimateArgs),
    /// Run both algorithms for each theta and write a comparison CSV.
    Compare(CompareArgs),
    /// Time one algorithm on prefixes of the dataset.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatName {
    Csv,
    UciMushroom,
    UciZoo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    Ftree,
    Largeitem,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaArg {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelArg {
    None,
    Index(usize),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatName,
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Skip the first record.
    #[arg(long)]
    pub header: bool,
    /// 0-based label column, or `none`.
    #[arg(long, value_parser = parse_label)]
    pub label_col: Option<LabelArg>,
    /// Comma-separated 0-based columns to drop.
    #[arg(long, value_delimiter = ',')]
    pub ignore_cols: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "ftree")]
    pub algorithm: AlgorithmName,
    #[arg(long, default_value = "0.8", value_parser = parse_unit_open)]
    pub theta: f64,
    /// A threshold in [0, 1], or `auto` to estimate it.
    #[arg(long, default_value = "auto", value_parser = parse_alpha)]
    pub alpha: AlphaArg,
    /// LargeItem inter-cluster cost weight.
    #[arg(long, default_value = "1.0", value_parser = parse_weight)]
    pub weight: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub assignments: Option<PathBuf>,
    /// List member ids in the cluster summaries.
    #[arg(long)]
    pub members: bool,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Fraction of each label's transactions used for the alpha sweep.
    #[arg(long, default_value = "1.0", value_parser = parse_unit_open)]
    pub sample: f64,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value = "0.1", value_parser = parse_unit_open)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "0.8", value_parser = parse_unit_open)]
    pub theta: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Where to write the sweep table.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_unit_open)]
    pub theta: Vec<f64>,
    #[arg(long, default_value = "auto", value_parser = parse_alpha)]
    pub alpha: AlphaArg,
    #[arg(long, default_value = "1.0", value_parser = parse_weight)]
    pub weight: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "ftree")]
    pub algorithm: AlgorithmName,
    #[arg(long, default_value = "0.8", value_parser = parse_unit_open)]
    pub theta: f64,
    #[arg(long, default_value = "0.8", value_parser = parse_alpha)]
    pub alpha: AlphaArg,
    #[arg(long, default_value = "1.0", value_parser = parse_weight)]
    pub weight: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1.0", value_parser = parse_unit_open)]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn parse_unit_open(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn parse_alpha(s: &str) -> Result<AlphaArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(AlphaArg::Auto);
    }
    let v = parse_f64(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(AlphaArg::Fixed(v))
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_weight(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be a finite non-negative number"))
    }
}

fn parse_label(s: &str) -> Result<LabelArg, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(LabelArg::None);
    }
    s.parse()
        .map(LabelArg::Index)
        .map_err(|_| format!("expected a column index or `none`, got `{s}`"))
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter { .. } | Error::DepthOutOfRange { .. } => EXIT_USAGE,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::ColumnCount { .. }
            | Error::MissingLabelColumn { .. }
            | Error::EmptyTransaction { .. }
            | Error::EmptyDataset
            | Error::Unlabeled => EXIT_INPUT,
            Error::MissingLabel(_)
            | Error::UnknownItem(_)
            | Error::InvalidClustering(_)
            | Error::NoAttributeTable(_) => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn write_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn usage(message: String) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message,
    }
}

impl InputArgs {
    pub fn to_format(&self) -> Result<Format, Failure> {
        let mut format = match self.format {
            FormatName::Csv => Format::csv(),
            FormatName::UciMushroom => Format::uci_mushroom(),
            FormatName::UciZoo => Format::uci_zoo(),
        };
        if let Some(c) = self.delimiter {
            format.delimiter = u8::try_from(c)
                .map_err(|_| usage(format!("--delimiter must be ASCII, got {c:?}")))?;
        }
        format.has_header |= self.header;
        match self.label_col {
            Some(LabelArg::None) => format.label = LabelColumn::None,
            Some(LabelArg::Index(i)) => format.label = LabelColumn::Index(i),
            None => {}
        }
        format.ignored.extend(self.ignore_cols.iter().copied());
        if let LabelColumn::Index(i) = format.label {
            if format.ignored.contains(&i) {
                return Err(usage(format!("--label-col {i} is also in --ignore-cols")));
            }
        }
        Ok(format)
    }

    pub fn load(&self) -> Result<TransactionDataset, Failure> {
        let format = self.to_format()?;
        Ok(TransactionDataset::ingest(&self.input, &format)?)
    }
}

impl EstimatorArgs {
    fn config(&self, theta: f64) -> EstimatorConfig {
        EstimatorConfig {
            theta,
            step: self.step,
            sample_fraction: self.sample,
            seed: self.seed,
        }
    }
}

fn run_algorithm(
    dataset: &TransactionDataset,
    algorithm: AlgorithmName,
    theta: f64,
    alpha: AlphaArg,
    weight: f64,
    estimator: &EstimatorArgs,
) -> Result<RunReport, Failure> {
    let report = match (algorithm, alpha) {
        (AlgorithmName::Ftree, AlphaArg::Fixed(a)) => {
            run_ftree(dataset, FTreeConfig::new(theta, a)?)?
        }
        (AlgorithmName::Ftree, AlphaArg::Auto) => run_fcso(dataset, &estimator.config(theta))?,
        (AlgorithmName::Largeitem, _) => {
            run_largeitem(dataset, LargeItemConfig::new(theta, weight)?)?
        }
    };
    Ok(report)
}

/// Opens `path` for writing, or stdout when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| write_failure(p, e)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn finish(path: Option<&Path>, result: io::Result<()>) -> Result<(), Failure> {
    result.map_err(|e| write_failure(path.unwrap_or(Path::new("<stdout>")), e))
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), Failure> {
    let dataset = args.input.load()?;
    let mut report = run_algorithm(
        &dataset,
        args.algorithm,
        args.theta,
        args.alpha,
        args.weight,
        &args.estimator,
    )?;
    if args.members {
        report.include_members();
    }
    let out = args.output.as_deref();
    let mut w = sink(out)?;
    finish(
        out,
        writeln!(w, "{}", report.to_json()).and_then(|_| w.flush()),
    )?;
    if let Some(p) = &args.assignments {
        let f = File::create(p).map_err(|e| write_failure(p, e))?;
        finish(Some(p), report.write_assignments(BufWriter::new(f)))?;
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let dataset = args.input.load()?;
    let report = estimate_alpha(&dataset, &args.estimator.config(args.theta))?;
    if let Some(p) = &args.output {
        let f = File::create(p).map_err(|e| write_failure(p, e))?;
        finish(Some(p), report.write_csv(BufWriter::new(f)))?;
    }
    println!("{}", format_alpha(report.chosen_alpha));
    Ok(())
}

pub const COMPARE_HEADER: [&str; 9] = [
    "algorithm",
    "theta",
    "clusters_before_merge",
    "clusters_after",
    "purity",
    "rmsstd",
    "time_alloc_ms",
    "time_refine_ms",
    "time_total_ms",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let dataset = args.input.load()?;
    let out = args.output.as_deref();
    let mut w = csv::Writer::from_writer(sink(out)?);
    let csv_err = |e: csv::Error| write_failure(out.unwrap_or(Path::new("<stdout>")), e.into());
    w.write_record(COMPARE_HEADER).map_err(csv_err)?;
    for &theta in &args.theta {
        for algorithm in [AlgorithmName::Ftree, AlgorithmName::Largeitem] {
            let r = run_algorithm(
                &dataset,
                algorithm,
                theta,
                args.alpha,
                args.weight,
                &args.estimator,
            )?;
            let name = match algorithm {
                AlgorithmName::Ftree => "ftree",
                AlgorithmName::Largeitem => "largeitem",
            };
            w.write_record([
                name.to_owned(),
                theta.to_string(),
                r.clusters_before_refine.to_string(),
                r.metrics.cluster_count.to_string(),
                opt(r.metrics.purity),
                opt(r.metrics.rmsstd),
                (r.timings.allocate_ms + r.timings.estimate_ms).to_string(),
                r.timings.refine_ms.to_string(),
                r.timings.total_ms.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(out, w.flush())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let dataset = args.input.load()?;
    let out = args.output.as_deref();
    let mut w = csv::Writer::from_writer(sink(out)?);
    let csv_err = |e: csv::Error| write_failure(out.unwrap_or(Path::new("<stdout>")), e.into());
    w.write_record(["fraction", "n", "time_ms"])
        .map_err(csv_err)?;
    for &fraction in &args.fractions {
        let n = ((fraction * dataset.len() as f64).round() as usize).max(1);
        let prefix: Vec<usize> = (0..n).collect();
        let part = dataset.subset(&prefix)?;
        let start = Instant::now();
        run_algorithm(
            &part,
            args.algorithm,
            args.theta,
            args.alpha,
            args.weight,
            &args.estimator,
        )?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        w.write_record([fraction.to_string(), n.to_string(), ms.to_string()])
            .map_err(csv_err)?;
    }
    finish(out, w.flush())
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
