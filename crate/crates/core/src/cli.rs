//! Command-line interface of the `gcal` binary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::dataset::{generate_sbm, write_bundle, SbmSpec};
use crate::error::{Error, Result};
use crate::experiment::{
    read_records, render_table, run_experiment, summarize, write_outputs, write_records, ExperimentConfig, Record,
};
use crate::selection::Strategy;

#[derive(Debug, Parser)]
#[command(name = "gcal", version, about = "Contrastive graph active learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Label budget, a count or `<k>C` for k per class.
    #[arg(long)]
    pub budget: Option<String>,
    /// Seeds to run, replacing the configured list.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` settings applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Lambda,
    Hops,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the active-learning loop and write per-round records.
    Run(RunArgs),
    /// Run once per value of a parameter and compare the settings.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Write a stochastic block model graph as a dataset bundle.
    GenSbm {
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<usize>,
        #[arg(long)]
        p_in: f64,
        #[arg(long)]
        p_out: f64,
        #[arg(long, default_value_t = 32)]
        feat_dim: usize,
        #[arg(long, default_value_t = 1.0)]
        feat_noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sbm")]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize the records of an earlier run.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

impl clap::builder::ValueParserFactory for Strategy {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Strategy>().map_err(|e| e.to_string()))
    }
}

/// Process exit code for an error: 2 configuration, 3 data, 4 numeric.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Numeric(_) => 4,
        _ => 3,
    }
}

/// Loads the config file and applies command-line overrides.
pub fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    for s in &args.set {
        cfg.apply_override(s)?;
    }
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    if let Some(b) = &args.budget {
        cfg.budget = b.parse()?;
    }
    if !args.seed.is_empty() {
        cfg.seeds = args.seed.clone();
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(records: &[Record], cfg: &ExperimentConfig) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            let summary = write_outputs(records, dir)?;
            print!("{}", render_table(&summary));
        }
        None => write_records(records, std::io::stdout().lock())?,
    }
    Ok(())
}

fn sweep(run: &RunArgs, param: SweepParam, values: &[String]) -> Result<()> {
    let base = resolve_config(run)?;
    let key = match param {
        SweepParam::Lambda => "lambda",
        SweepParam::Hops => "hops",
    };
    let mut records = Vec::new();
    for v in values {
        let mut cfg = base.clone();
        cfg.set(key, v)?;
        cfg.validate()?;
        records.extend(run_experiment(&cfg)?);
    }
    emit(&records, &base)?;
    let summary = summarize(&records)?;
    let best = summary
        .configs
        .iter()
        .filter_map(|c| c.val_micro_f1.map(|m| (c, m.mean)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((c, score)) = best {
        let value = match param {
            SweepParam::Lambda => c.lambda.to_string(),
            SweepParam::Hops => c.hops.to_string(),
        };
        eprintln!("best {key} by validation Micro-F1: {value} ({score:.4})");
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = resolve_config(&args)?;
            let records = run_experiment(&cfg)?;
            emit(&records, &cfg)
        }
        Command::Sweep { run, param, values } => sweep(&run, param, &values),
        Command::GenSbm {
            blocks,
            p_in,
            p_out,
            feat_dim,
            feat_noise,
            seed,
            name,
            out,
        } => {
            let spec = SbmSpec {
                blocks,
                p_in,
                p_out,
                feat_dim,
                feat_noise,
            };
            let g = generate_sbm(&spec, seed).map_err(|e| match e {
                Error::InvalidArgument(msg) => Error::Config(msg),
                other => other,
            })?;
            write_bundle(&g, &name, &out)?;
            println!(
                "wrote {} nodes, {} edges to {}",
                g.node_count(),
                g.edge_count(),
                out.display()
            );
            Ok(())
        }
        Command::Report { input, format } => {
            let path = input.join("records.csv");
            let file = std::fs::File::open(&path).map_err(|_| Error::MissingFile(path.clone()))?;
            let summary = summarize(&read_records(file)?)?;
            match format {
                Format::Csv => print!("{}", render_table(&summary)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
            }
            Ok(())
        }
    }
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
