//! Command-line front end. Exit codes: 0 ok, 1 usage or config error, 2 data
//! error, 3 backend or transport error. Failures print one
//! `ERROR <code>: <message>` line to stderr.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pipeline::{Run, Stage};

#[derive(Debug, Parser)]
#[command(name = "hinfill", version, about = "Meta-path generation, embedding and evaluation for typed graphs")]
pub struct Cli {
    /// Pipeline config (TOML). Without it, defaults on the bundled fixture.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Threads for path sampling and walks (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Single worker; recorded in manifests.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Output directory (overrides output_dir).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override any config key, e.g. `--set sampler.hop_max=3`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    TrainLm,
    TrainClassifier,
    SamplePaths,
    Induce,
    Embed,
    EvalLp,
    EvalNc,
    ZeroShot,
    Hypothesis,
    /// All stages in order.
    Pipeline,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::TrainLm => Stage::TrainLm,
            Command::TrainClassifier => Stage::TrainClassifier,
            Command::SamplePaths => Stage::SamplePaths,
            Command::Induce => Stage::Induce,
            Command::Embed => Stage::Embed,
            Command::EvalLp => Stage::EvalLp,
            Command::EvalNc => Stage::EvalNc,
            Command::ZeroShot => Stage::ZeroShot,
            Command::Hypothesis => Stage::Hypothesis,
            Command::Pipeline => return None,
        })
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        e if e.is_backend() => 3,
        _ => 2,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Build the effective config from the parsed flags.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let overrides = cli
        .set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p, &overrides)?,
        None => PipelineConfig::defaults(&overrides)?,
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if cli.deterministic {
        cfg.deterministic = true;
    }
    if cfg.deterministic {
        cfg.workers = 1;
    }
    if let Some(out) = &cli.out {
        let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
        cfg.output_dir = cwd.join(out);
    }
    cfg.apply_env();
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let run = Run::new(cfg)?;
    pool.install(|| {
        let manifests = match cli.command.stage() {
            Some(stage) => vec![run.run_stage(stage)?],
            None => run.run_pipeline()?,
        };
        for m in manifests {
            println!("{} {:.3}s {}", m.stage, m.wall_time_secs, m.summary);
        }
        Ok(())
    })
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.render().to_string();
            let msg = rendered.lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string();
            eprintln!("{rendered}");
            eprintln!("ERROR 1: {}", one_line(&msg));
            return 1;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("ERROR {code}: {}", one_line(&e.to_string()));
            code
        }
    }
}
