//! `layerprobe`: pipelines for analyzing what speech-encoder layers encode.
//!
//! Every command reads one TOML config (see `config.rs`), writes its outputs
//! plus a config echo into the output directory, and is deterministic: the
//! same config and inputs produce byte-identical CSV/JSON regardless of
//! `--jobs`.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::LoadedConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "layerprobe", version, about = "Layer-wise speech-representation analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML configuration file.
    #[arg(long, global = true, default_value = "layerprobe.toml")]
    config: PathBuf,

    /// Output directory override (wins over LAYERPROBE_OUT and the config).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Worker threads for per-layer and per-utterance fan-out (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Seed override (wins over the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Force SVG plot emission for commands that support it.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate manifests, dumps, alignments, and labels; write a summary.
    Ingest,
    /// Pool frame-level dumps into phoneme- or window-level datasets.
    Pool,
    /// Layer-wise CCA against one-hot phone labels, per corpus.
    CcaPhoneme,
    /// Layer-wise CCA against the six paralinguistic feature groups.
    CcaParaling,
    /// Train and evaluate a weighted-average-layer probe.
    Probe,
    /// Phone error rate and matched-pairs significance between systems.
    Score,
    /// Summarize existing outputs into report.md.
    Report,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut loaded = LoadedConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    let out_dir = loaded.out_dir(cli.out.as_deref());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;

    pool.install(|| {
        std::fs::create_dir_all(&out_dir)?;
        loaded.write_echo(&out_dir)?;
        match cli.command {
            Command::Ingest => commands::ingest::run(&loaded, &out_dir),
            Command::Pool => commands::pool_cmd::run(&loaded, &out_dir),
            Command::CcaPhoneme => commands::cca_phoneme::run(&loaded, &out_dir, cli.svg),
            Command::CcaParaling => commands::cca_paraling::run(&loaded, &out_dir, cli.svg),
            Command::Probe => commands::probe_cmd::run(&loaded, &out_dir, cli.svg),
            Command::Score => commands::score::run(&loaded, &out_dir),
            Command::Report => commands::report::run(&out_dir),
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("layerprobe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
