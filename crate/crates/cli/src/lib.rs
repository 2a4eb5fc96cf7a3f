//! Command-line front end: configuration loading, presets and the figure-data
//! subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::Report;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "phcqed", version, about = "Atoms coupled to photonic-crystal band edges")]
pub struct Cli {
    /// JSON run configuration; its sections override the preset.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write data here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Start from a bundled configuration (see `preset list`).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,

    /// RNG seed for Monte-Carlo commands.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound-state and effective-cavity parameters over Delta / beta.
    BoundState,
    /// |U| / gamma versus separation for each configured detuning.
    Interactions,
    /// Exponential-sum fit of a power-law coupling profile.
    DesignPowerlaw,
    /// Loss-limited two-atom excitation exchange.
    Exchange,
    /// Single-excitation dynamics on the configured atom array.
    Evolve,
    /// Localization length of a disordered dielectric stack.
    Disorder,
    /// Bundled configurations.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    List,
}

impl Cli {
    /// Preset, then config file, then `--seed`.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.preset {
            Some(name) => presets::get(name).ok_or_else(|| {
                CliError::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
            })?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg = cfg.overlay(RunConfig::from_json(&text)?);
        }
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        Ok(cfg)
    }
}

/// Runs the parsed command and returns its output without touching stdout.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    if let Command::Preset { action: PresetAction::List } = cli.command {
        return commands::preset_list();
    }
    let cfg = cli.resolve_config()?;
    let fmt = |default| cli.format.unwrap_or(default);
    match cli.command {
        Command::BoundState => commands::bound_state(&cfg, fmt(Format::Csv)),
        Command::Interactions => commands::interactions(&cfg, fmt(Format::Csv)),
        Command::DesignPowerlaw => commands::design_powerlaw(&cfg, fmt(Format::Json)),
        Command::Exchange => commands::exchange(&cfg, fmt(Format::Json)),
        Command::Evolve => commands::evolve(&cfg, fmt(Format::Csv)),
        Command::Disorder => commands::disorder(&cfg, fmt(Format::Json)),
        Command::Preset { .. } => unreachable!(),
    }
}
