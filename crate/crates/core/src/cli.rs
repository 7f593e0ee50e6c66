//! Command-line interface: `fit`, `simulate`, `predict` and `lambda`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or schema
//! errors.

use crate::data::{Dataset, Table};
use crate::error::Error;
use crate::lambda::LambdaSequence;
use crate::methods::MethodRegistry;
use crate::model::{FitResult, Hyperparams};
use crate::predict::{predict_batch, DEFAULT_DRAWS};
use crate::simulate::{run_scenario, SimScenario};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "abslope", version, about = "Adaptive Bayesian SLOPE for regression with missing covariates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a CSV file and write it as JSON.
    Fit(FitArgs),
    /// Run a simulation scenario and write per-replication metrics as CSV.
    Simulate(SimulateArgs),
    /// Predict responses for the rows of a CSV file from a fitted model.
    Predict(PredictArgs),
    /// Print the BH penalty sequence, one value per line.
    Lambda(LambdaArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row; empty cells and `NA` are missing.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long, default_value = "abslope")]
    pub method: String,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub t0: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Per-iteration trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Output JSON; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file with `key=value` lines.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "abslope")]
    pub method: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Size of the replication pool; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Fill the `runtime_ms` column (otherwise `NA`, keeping output reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Monte-Carlo draws per incomplete row.
    #[arg(long = "draws", visible_alias = "S", default_value_t = DEFAULT_DRAWS)]
    pub draws: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema(_) | Error::Scenario(_) | Error::UnknownMethod(_) | Error::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn hyperparams(args: &FitArgs, p: usize) -> Hyperparams {
    let mut h = Hyperparams { q: args.q, ..Hyperparams::defaults_for(p) };
    if let Some(a) = args.a {
        h.a = a;
    }
    if let Some(b) = args.b {
        h.b = b;
    }
    if let Some(t0) = args.t0 {
        h.t0 = t0;
    }
    if let Some(m) = args.max_iter {
        h.max_iter = m;
    }
    if let Some(tol) = args.tol {
        h.tol = tol;
    }
    h
}

pub fn write_trace(fit: &FitResult, out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Runtime(Error::Csv(e));
    w.write_record(["iteration", "eta", "sigma", "theta", "c", "support", "objective"]).map_err(io)?;
    for r in &fit.trace {
        w.write_record([
            r.iteration.to_string(),
            r.eta.to_string(),
            r.sigma.to_string(),
            r.theta.to_string(),
            r.c.to_string(),
            r.support.to_string(),
            r.objective.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let registry = MethodRegistry::default();
    let method = registry.get(&args.method)?;
    let data = Dataset::from_csv(&args.data, &args.response)?;
    let hyper = hyperparams(args, data.p());
    let mut fit = method.fit(&data, &hyper, args.seed)?;
    fit.response = args.response.clone();
    if let Some(path) = &args.trace {
        write_trace(&fit, File::create(path)?)?;
    }
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &fit).map_err(|e| CliError::Runtime(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let registry = MethodRegistry::default();
    let method = registry.get(&args.method)?;
    let text = std::fs::read_to_string(&args.scenario)?;
    let scenario = SimScenario::parse(&text)?;
    let report = run_scenario(&scenario, method, args.threads)?;
    let mut out = output(args.out.as_deref())?;
    report.write_csv(&mut out, args.timing)?;
    out.flush()?;
    Ok(())
}

/// Covariate rows of `table` reordered to the fitted model's columns.
pub fn model_rows(table: &Table, fit: &FitResult) -> Result<Vec<Vec<Option<f64>>>, Error> {
    let index: Vec<usize> = fit
        .names
        .iter()
        .map(|name| {
            table.column_index(name).ok_or_else(|| Error::Schema(format!("column `{name}` required by the model is absent")))
        })
        .collect::<Result<_, _>>()?;
    Ok(table.rows.iter().map(|row| index.iter().map(|&j| row[j]).collect()).collect())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.model)?;
    let fit: FitResult = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("model file: {e}")))?;
    if fit.names.len() != fit.beta.len() || fit.mu.len() != fit.beta.len() || fit.scaling.m.len() != fit.beta.len() {
        return Err(CliError::Usage("model file: inconsistent dimensions".into()));
    }
    let table = Table::read(&args.data)?;
    let rows = model_rows(&table, &fit)?;
    let pred = predict_batch(&rows, &fit, args.draws, args.seed)?;
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let io = |e: csv::Error| CliError::Runtime(Error::Csv(e));
    w.write_record(["row", "prediction"]).map_err(io)?;
    for (i, v) in pred.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_lambda(args: &LambdaArgs) -> Result<(), CliError> {
    let lambda = LambdaSequence::benjamini_hochberg(args.p, args.q)?;
    let mut out = output(None)?;
    for v in lambda.as_slice() {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Lambda(a) => cmd_lambda(a),
    }
}

/// Parses `args`, runs the command and reports errors on standard error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
