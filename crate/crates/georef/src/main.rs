//! Command-line front end for the batch georeferencing pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use georef::georeferencer::PromptTemplate;
use georef::pipeline::{
    cmd_eval, cmd_georef, cmd_mapgen, cmd_parse, cmd_resolve, cmd_run, PipelineConfig,
    ProviderSection,
};
use georef::Error;

#[derive(Parser)]
#[command(name = "georef", about = "Batch georeferencing of locality descriptions", version)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Prompt template override.
    #[arg(long, global = true)]
    template: Option<PromptTemplate>,

    /// Provider kind expected from the config ("mock" or "http"); exits
    /// with a config error on mismatch.
    #[arg(long, global = true)]
    provider: Option<String>,

    /// Refuse anything that would touch the network.
    #[arg(long, global = true)]
    offline: bool,

    /// Bypass the response cache (entries are refreshed on success).
    #[arg(long, global = true)]
    refresh_cache: bool,

    /// Worker-thread override for provider calls.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Minimum description length override (Unicode scalar values).
    #[arg(long, global = true)]
    min_length: Option<usize>,

    /// Relatum buffer factor override for extent planning.
    #[arg(long, global = true)]
    buffer_factor: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse records into mentions, relations, and containment.
    Parse,
    /// Resolve parsed place names against the gazetteers.
    Resolve,
    /// Render gridded map excerpts for resolved records.
    Mapgen,
    /// Query the model provider for grid-cell predictions.
    Georef,
    /// Score predictions and write metric reports.
    Eval,
    /// Run every stage in order.
    Run,
}

fn load_config(cli: &Cli) -> georef::Result<PipelineConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = PipelineConfig::load(path)?;
    if let Some(t) = cli.template {
        config.template = t;
    }
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    if let Some(m) = cli.min_length {
        config.min_length = m;
    }
    if let Some(b) = cli.buffer_factor {
        config.mapgen.buffer_factor = b;
    }
    if cli.offline {
        config.offline = true;
    }
    if let Some(expected) = &cli.provider {
        let actual = match &config.provider {
            ProviderSection::Mock { .. } => "mock",
            ProviderSection::Http { .. } => "http",
        };
        if expected != actual {
            return Err(Error::Config(format!(
                "--provider {expected} requested but config defines a {actual} provider"
            )));
        }
    }
    config.validate()?;
    Ok(config)
}

/// Exit codes: 0 success, 1 config error, 2 partial failure, 3 total
/// failure.
fn run(cli: &Cli) -> Result<bool, Error> {
    let config = load_config(cli)?;
    let partial = match cli.command {
        Command::Parse => {
            std::fs::create_dir_all(&config.output_dir)
                .map_err(|e| Error::Pipeline(format!("creating output dir: {e}")))?;
            let artifact = cmd_parse(&config)?;
            eprintln!("parsed {} records", artifact.items.len());
            false
        }
        Command::Resolve => {
            let artifact = cmd_resolve(&config)?;
            eprintln!("resolved {} records", artifact.items.len());
            false
        }
        Command::Mapgen => {
            let artifact = cmd_mapgen(&config)?;
            eprintln!("rendered {} map excerpts", artifact.items.len());
            false
        }
        Command::Georef => {
            let artifact = cmd_georef(&config, cli.refresh_cache)?;
            eprintln!("predicted {} items", artifact.items.len());
            false
        }
        Command::Eval => {
            let artifact = cmd_eval(&config)?;
            for report in &artifact.reports {
                eprintln!(
                    "{}: avg {} km over {} items ({} unparseable)",
                    report.method,
                    report.average_km.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()),
                    report.n_items,
                    report.n_unparseable
                );
            }
            false
        }
        Command::Run => {
            let summary = cmd_run(&config, cli.refresh_cache)?;
            eprintln!(
                "run complete: {} parsed, {} resolved, {} maps, {} predictions",
                summary.parsed, summary.resolved, summary.maps, summary.predictions
            );
            for (stage, id, reason) in &summary.failures {
                eprintln!("  {stage}: {id}: {reason}");
            }
            !summary.failures.is_empty()
        }
    };
    Ok(partial)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
