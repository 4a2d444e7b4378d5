use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::pipeline::{run_stages, RunOptions, Runner, Stage};

#[derive(Debug, Parser)]
#[command(name = "egoshift", version, about = "Longitudinal ego-network analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more stages in the given order.
    Run(Box<RunArgs>),
    /// Print the default configuration as TOML.
    Config,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(value_enum, required = true)]
    pub stages: Vec<Stage>,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the synth and DBCV sampling seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Interaction log (JSONL or CSV) for `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `id,topic` CSV sidecar for `ingest`.
    #[arg(long)]
    pub topic_labels: Option<PathBuf>,
    /// Points for `dbcv` (CSV or .bin).
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// One integer label per line for `dbcv`; -1 is noise.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Stratified sample size for `dbcv`.
    #[arg(long)]
    pub sample: Option<usize>,
    /// `euclidean` or `manhattan`.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, short)]
    pub quiet: bool,
}

pub fn execute(args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = args.seed {
        config.set_seed(s);
    }
    if let Some(n) = args.sample {
        config.dbcv.sample = Some(n);
    }
    if let Some(m) = args.metric {
        config.dbcv.metric = m;
    }
    if args.jobs == Some(0) {
        return Err(PipelineError::Usage("--jobs must be at least 1".into()));
    }
    let opts = RunOptions {
        out_dir: args.out_dir,
        input: args.input,
        topic_labels: args.topic_labels,
        points: args.points,
        labels: args.labels,
        quiet: args.quiet,
    };
    let runner = Runner::new(config, opts)?;
    for outcome in run_stages(&runner, &args.stages, args.jobs)? {
        if !args.quiet {
            eprintln!("{}: wrote {} files", outcome.stage.as_str(), outcome.outputs.len());
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => execute(*args),
        Command::Config => {
            print!("{}", PipelineConfig::default().to_toml());
            Ok(())
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
