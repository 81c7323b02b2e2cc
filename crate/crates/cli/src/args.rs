use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use doe_core::design_catalog::DesignClass;
use doe_core::design_selector::Preset;

#[derive(Debug, Parser)]
#[command(name = "doe", version, about = "Plan designs of experiments for component-based systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a plan document; exit 2 with line-anchored diagnostics on error.
    Validate {
        path: PathBuf,
    },
    /// Generate candidate designs (or a preset), select, prune and write them.
    Plan(PlanArgs),
    /// Classify the components of the system section.
    Classify(ClassifyArgs),
    /// Aggregate evaluation results over the evaluated subsystem.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum DesignArg {
    FullFactorial,
    FractionalFactorial,
    PlackettBurman,
    DOptimal,
    LatinHypercube,
}

impl DesignArg {
    pub const DEFAULT: [DesignArg; 4] = [
        DesignArg::FullFactorial,
        DesignArg::FractionalFactorial,
        DesignArg::PlackettBurman,
        DesignArg::DOptimal,
    ];

    pub fn class(self) -> DesignClass {
        match self {
            DesignArg::FullFactorial => DesignClass::FullFactorial,
            DesignArg::FractionalFactorial => DesignClass::FractionalFactorial,
            DesignArg::PlackettBurman => DesignClass::PlackettBurman,
            DesignArg::DOptimal => DesignClass::DOptimal,
            DesignArg::LatinHypercube => DesignClass::LatinHypercube,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PresetArg {
    OneByOne,
    PairwiseConsistency,
    ScenarioCombinations,
    Prioritisation,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::OneByOne => Preset::OneByOne,
            PresetArg::PairwiseConsistency => Preset::PairwiseConsistency,
            PresetArg::ScenarioCombinations => Preset::ScenarioCombinations,
            PresetArg::Prioritisation => Preset::Prioritisation,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    pub path: PathBuf,
    /// Design class to generate; repeatable. Defaults to full, fractional,
    /// Plackett-Burman and D-optimal.
    #[arg(long = "design", value_enum, conflicts_with = "preset")]
    pub designs: Vec<DesignArg>,
    /// Research-question preset to plan instead of generated designs.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Output directory.
    #[arg(long, env = "DOE_OUT_DIR", default_value = "doe-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run count for D-optimal and Latin hypercube designs.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Generator equations for the fractional factorial, e.g. `D=ABC`.
    #[arg(long, value_delimiter = ',')]
    pub generators: Option<Vec<String>>,
    /// Scenario ids interpreted correctly in a prior step (prioritisation).
    #[arg(long, value_delimiter = ',')]
    pub correct: Option<Vec<String>>,
    /// Restarts of the D-optimal exchange search.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub reference: Option<String>,
    /// Measure for quantitative evaluation; pairs with `--threshold`.
    #[arg(long = "measure")]
    pub measures: Vec<String>,
    #[arg(long = "threshold", allow_negative_numbers = true)]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AggregateArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub reference: Option<String>,
    /// CSV of results (component_id,measure,value,experiment_id) used
    /// instead of the document's results section.
    #[arg(long)]
    pub results: Option<PathBuf>,
}
