use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dupforge::preconfig::ScenarioKind;

#[derive(Debug, Parser)]
#[command(name = "dupforge", version, about = "Generate polluted duplicate-detection test data with a gold standard")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Profile the input dataset: statistics, semantic types, constraints, change model.
    Profile(Settings),
    /// Normalize the input into the canonical prepared schema.
    Prepare(Settings),
    /// Derive the generation configuration from high-level parameters.
    Preconfig(Settings),
    /// Generate the world history.
    History(Settings),
    /// Simulate the sources and write exports and provenance.
    Pollute(Settings),
    /// Build the gold standard and the scenarios.
    Assemble(Settings),
    /// Run every phase in order.
    All(Settings),
    /// Write a synthetic person table.
    Toy(ToyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::Prepare(_) => "prepare",
            Command::Preconfig(_) => "preconfig",
            Command::History(_) => "history",
            Command::Pollute(_) => "pollute",
            Command::Assemble(_) => "assemble",
            Command::All(_) => "all",
            Command::Toy(_) => "toy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Cleaning,
    Integration,
    Linkage,
}

impl From<Scenario> for ScenarioKind {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Cleaning => ScenarioKind::Cleaning,
            Scenario::Integration => ScenarioKind::Integration,
            Scenario::Linkage => ScenarioKind::Linkage,
        }
    }
}

/// Flags shared by the pipeline subcommands. Each flag can also be set
/// through a `DUPFORGE_` environment variable.
#[derive(Debug, Clone, Args)]
pub struct Settings {
    /// Input dataset: `.csv` (relational) or JSON lines (document).
    #[arg(long, env = "DUPFORGE_INPUT")]
    pub input: Option<PathBuf>,
    /// A generation configuration to use instead of deriving one.
    #[arg(long, env = "DUPFORGE_CONFIG")]
    pub config: Option<PathBuf>,
    /// An input history (JSON lines) to mine the change model from.
    #[arg(long, env = "DUPFORGE_HISTORY_INPUT")]
    pub history_input: Option<PathBuf>,
    #[arg(long, env = "DUPFORGE_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, env = "DUPFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "DUPFORGE_SCENARIO", value_enum, default_value_t = Scenario::Cleaning)]
    pub scenario: Scenario,
    /// Number of sources; defaults to 1 for cleaning and 3 otherwise.
    #[arg(long, env = "DUPFORGE_SOURCES")]
    pub sources: Option<usize>,
    /// Degree of pollution: expected fraction of corrupted cells.
    #[arg(long, env = "DUPFORGE_POLLUTION", default_value_t = 0.1)]
    pub pollution: f64,
    /// Probability that an inserted entity gets extra records.
    #[arg(long, env = "DUPFORGE_DUPLICATES", default_value_t = 0.1)]
    pub duplicates: f64,
    /// Size of the world relative to the input.
    #[arg(long, env = "DUPFORGE_VOLUME_FACTOR", default_value_t = 1.0)]
    pub volume_factor: f64,
    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    #[arg(long, env = "DUPFORGE_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Length of the simulated timeline in ticks.
    #[arg(long, env = "DUPFORGE_HORIZON", default_value_t = 1000)]
    pub horizon: u64,
    /// Representation heterogeneity between sources; defaults per scenario.
    #[arg(long, env = "DUPFORGE_HETEROGENEITY")]
    pub heterogeneity: Option<f64>,
    /// Probability of a copy relationship between two sources.
    #[arg(long, env = "DUPFORGE_COPY_INTENSITY", default_value_t = 0.5)]
    pub copy_intensity: f64,
}

impl Settings {
    /// The resolved flags as an argument list that reproduces this run.
    pub fn invocation(&self, command: &str) -> Vec<String> {
        let mut out = vec![command.to_string()];
        let mut push = |k: &str, v: String| {
            out.push(format!("--{k}"));
            out.push(v);
        };
        if let Some(p) = &self.input {
            push("input", p.display().to_string());
        }
        if let Some(p) = &self.config {
            push("config", p.display().to_string());
        }
        if let Some(p) = &self.history_input {
            push("history-input", p.display().to_string());
        }
        push("out-dir", self.out_dir.display().to_string());
        push("seed", self.seed.to_string());
        push("scenario", format!("{:?}", self.scenario).to_lowercase());
        if let Some(n) = self.sources {
            push("sources", n.to_string());
        }
        push("pollution", self.pollution.to_string());
        push("duplicates", self.duplicates.to_string());
        push("volume-factor", self.volume_factor.to_string());
        push("workers", self.workers.to_string());
        push("horizon", self.horizon.to_string());
        if let Some(h) = self.heterogeneity {
            push("heterogeneity", h.to_string());
        }
        push("copy-intensity", self.copy_intensity.to_string());
        out
    }
}

#[derive(Debug, Clone, Args)]
pub struct ToyArgs {
    #[arg(long, env = "DUPFORGE_ROWS", default_value_t = 10_000)]
    pub rows: usize,
    #[arg(long, env = "DUPFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}
