use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use quantile_atlas::experiment::{run_experiment, Cell, ExperimentConfig, ExperimentKind, Format, Table};
use quantile_atlas::weights::{fit_forest, forest_weights, ForestModel, ForestParams};
use quantile_atlas::Error;

/// Seeded experiments on local autoregression quantiles and conditional
/// center-outward quantiles.
#[derive(Parser)]
#[command(name = "quantile-atlas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its tables plus manifest.json.
    Run(RunArgs),
    /// Check a flat `key = value` config file without running it.
    Validate { config: PathBuf },
    /// Fit, save and query a multivariate random forest.
    #[command(subcommand)]
    Forest(ForestCommand),
}

#[derive(Args)]
struct RunArgs {
    /// motivating, locstat-mc, ot-contour, ot-tube or ot-tables
    experiment: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Parameters may also be given as `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    rest: Vec<String>,
}

#[derive(Subcommand)]
enum ForestCommand {
    /// Grow a forest on X (n x m) and Y (n x d) and save it as JSON.
    Fit {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        trees: usize,
        #[arg(long, default_value_t = 5)]
        min_leaf: usize,
        #[arg(long)]
        mtry: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        no_bootstrap: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Weights of the training sample at each row of X.
    Weights {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        x: PathBuf,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn run_config(a: RunArgs) -> Result<ExperimentConfig, Error> {
    let kind = ExperimentKind::parse(&a.experiment)?;
    let mut seed = a.seed;
    let mut out = a.out;
    let mut format = a.format;
    let mut sets = a.set;
    let mut it = a.rest.into_iter();
    while let Some(tok) = it.next() {
        let key = tok.strip_prefix("--").ok_or_else(|| validation(format!("unexpected argument '{tok}'")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| validation(format!("--{key} needs a value")))?;
                (key.to_string(), v)
            }
        };
        match key.as_str() {
            "seed" => seed = value.parse().map_err(|_| validation(format!("seed '{value}' is not a 64-bit integer")))?,
            "out" => out = PathBuf::from(value),
            "format" => format = value,
            "set" => sets.push(value),
            _ => sets.push(format!("{key}={value}")),
        }
    }
    let mut cfg = ExperimentConfig::new(kind, seed, out).with_overrides(sets.iter().map(String::as_str))?;
    cfg.format = Format::parse(&format)?;
    Ok(cfg)
}

fn read_matrix(path: &Path) -> Result<Array2<f64>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| validation(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a header row naming the columns
            Err(_) if i == 0 => continue,
            Err(_) => return Err(validation(format!("{}: row {} is not numeric", path.display(), i + 1))),
        }
    }
    let width = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || width == 0 {
        return Err(validation(format!("{}: no data rows", path.display())));
    }
    if rows.iter().any(|r| r.len() != width) {
        return Err(validation(format!("{}: rows of unequal length", path.display())));
    }
    Array2::from_shape_vec((rows.len(), width), rows.concat()).map_err(|e| Error::Internal(e.to_string()))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Internal(format!("{}: {e}", path.display()))
}

fn forest(cmd: ForestCommand) -> Result<(), Error> {
    match cmd {
        ForestCommand::Fit { x, y, out, trees, min_leaf, mtry, max_depth, no_bootstrap, seed } => {
            let (xs, ys) = (read_matrix(&x)?, read_matrix(&y)?);
            let params = ForestParams { n_trees: trees, min_leaf, mtry, bootstrap: !no_bootstrap, max_depth };
            let model = fit_forest(&xs, &ys, &params, seed)?;
            std::fs::write(&out, model.to_json()? + "\n").map_err(|e| io_err(&out, e))?;
            eprintln!("wrote {} ({} trees, {} training rows)", out.display(), model.trees.len(), model.n_train);
        }
        ForestCommand::Weights { model, x, out } => {
            let text = std::fs::read_to_string(&model).map_err(|e| validation(format!("{}: {e}", model.display())))?;
            let model = ForestModel::<f64>::from_json(&text)?;
            let queries = read_matrix(&x)?;
            let mut table = Table::new("weights", &["query", "index", "weight"]);
            for (q, row) in queries.rows().into_iter().enumerate() {
                let w = forest_weights(&model, &row.to_vec())?;
                for j in w.support() {
                    table.push(vec![Cell::from(q), j.into(), w.weights[j].into()]);
                }
            }
            let body = table.to_csv()?;
            match out {
                Some(p) => std::fs::write(&p, body).map_err(|e| io_err(&p, e))?,
                None => print!("{body}"),
            }
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(a) => {
            let cfg = run_config(a)?;
            let outcome = run_experiment(&cfg)?;
            for f in outcome.files.iter().chain(std::iter::once(&outcome.manifest_path)) {
                println!("{}", f.display());
            }
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| validation(format!("{}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_kv_text(&text)?;
            let params = cfg.resolve()?;
            println!("ok: {}", cfg.experiment.name());
            for kv in params.pairs() {
                println!("  {kv}");
            }
        }
        Command::Forest(cmd) => forest(cmd)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quantile-atlas: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
