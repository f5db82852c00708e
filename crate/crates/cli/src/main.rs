use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use synthpoll::role_forge::HexacoDimension;
use synthpoll::survey_runner::{ExcerptPolicy, PollMode};

mod commands;
mod config;
mod exit;

use config::{Config, Overrides};
use exit::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "synthpoll",
    version,
    about = "Simulate survey respondents with LLM role-play and score them against human answers"
)]
struct Cli {
    /// JSON config file (default: ./synthpoll.json when present)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Base URL of an OpenAI-compatible endpoint; switches to the http backend
    #[arg(long, global = true, value_name = "URL")]
    api_base: Option<String>,

    /// Model name sent with every request
    #[arg(long, global = true)]
    model: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create role profiles
    #[command(subcommand)]
    Roles(RolesCommand),
    /// Manage the role index
    #[command(subcommand)]
    Index(IndexCommand),
    /// Run a survey against indexed roles
    #[command(subcommand)]
    Poll(PollCommand),
    /// Score simulated responses against human answers
    Eval(EvalArgs),
}

#[derive(Subcommand, Debug)]
enum RolesCommand {
    /// Write the 18 attribute cells, optionally expanding each into a profile
    Grid(GridArgs),
    /// Derive a profile from a document
    FromText(FromTextArgs),
    /// Derive a profile from an existing one by swapping dimensions
    Perturb(PerturbArgs),
}

#[derive(Subcommand, Debug)]
enum IndexCommand {
    /// Embed every role file in a directory into an index file
    Build(IndexBuildArgs),
}

#[derive(Subcommand, Debug)]
enum PollCommand {
    /// Ask every planned (role, question) pair and write JSONL responses
    Run(PollArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Output directory (default: paths.roles or ./roles)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also expand every cell into a role profile via the backend
    #[arg(long)]
    pub expand: bool,
    /// Replacement attribute grid JSON
    #[arg(long, value_name = "FILE")]
    pub grid: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct FromTextArgs {
    /// Document the persona would plausibly engage with
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub grid: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    /// Seed role file
    pub seed: PathBuf,
    /// Dimensions to replace, e.g. E,O
    #[arg(long, value_delimiter = ',', value_parser = parse_dimension, required = true)]
    pub dims: Vec<HexacoDimension>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub grid: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_dimension(value: &str) -> Result<HexacoDimension, String> {
    HexacoDimension::from_code(value.trim())
        .ok_or_else(|| format!("unknown dimension {value:?}; expected one of H,E,X,A,C,O"))
}

#[derive(Args, Debug)]
pub struct IndexBuildArgs {
    /// Directory of *.role.json files
    pub roles_dir: PathBuf,
    /// Index file (default: paths.index or ./roles.roleindex.json)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Embedding dimension, a power of two up to 256
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    PerRole,
    Retrieval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExcerptArg {
    TopHit,
    ConcatTopK,
}

#[derive(Args, Debug)]
pub struct PollArgs {
    /// Survey JSON
    pub survey: PathBuf,
    /// Index file (default: paths.index or ./roles.roleindex.json)
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Responses JSONL (default: responses.jsonl under paths.outputs)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Keep finished pairs from an existing output file and ask only the rest
    #[arg(long)]
    pub resume: bool,
    /// Print the requests instead of sending them
    #[arg(long)]
    pub dry_run: bool,
    /// per-role: every role answers every question; retrieval: top-k profiles per question
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Hits retrieved per question in retrieval mode
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub excerpt: Option<ExcerptArg>,
    /// Sampling temperature (default 0)
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Maximum requests in flight
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Responses JSONL
    pub responses: PathBuf,
    /// Human answers: respondent_id then one column per question
    pub human_csv: PathBuf,
    /// JSON object mapping role id to respondent id
    pub map: PathBuf,
    #[arg(long)]
    pub survey: PathBuf,
    /// Report file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Row label, "Model (parameters)"
    #[arg(long)]
    pub label: Option<String>,
    /// Skip CSV columns that are not survey questions
    #[arg(long)]
    pub ignore_extra: bool,
    /// Headline figure is the mean of per-question percentages
    #[arg(long)]
    pub macro_questions: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides {
            api_base: self.api_base.clone(),
            model: self.model.clone(),
            ..Default::default()
        };
        match &self.command {
            Command::Index(IndexCommand::Build(a)) => o.embed_dim = a.dim,
            Command::Poll(PollCommand::Run(a)) => {
                o.temperature = a.temperature;
                o.concurrency = a.concurrency;
                o.retrieval_k = a.k;
                o.poll_mode = a.mode.map(|m| match m {
                    ModeArg::PerRole => PollMode::PerRole,
                    ModeArg::Retrieval => PollMode::Retrieval,
                });
                o.excerpt = a.excerpt.map(|e| match e {
                    ExcerptArg::TopHit => ExcerptPolicy::TopHit,
                    ExcerptArg::ConcatTopK => ExcerptPolicy::ConcatTopK,
                });
            }
            _ => {}
        }
        o
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = Config::locate(cli.config.as_deref()).map_err(CliError::input)?;
    let config = Config::resolve(
        file.as_deref(),
        |key| std::env::var(key).ok(),
        &cli.overrides(),
    )
    .map_err(CliError::input)?;
    match &cli.command {
        Command::Roles(RolesCommand::Grid(args)) => commands::roles_grid(&config, args),
        Command::Roles(RolesCommand::FromText(args)) => commands::roles_from_text(&config, args),
        Command::Roles(RolesCommand::Perturb(args)) => commands::roles_perturb(&config, args),
        Command::Index(IndexCommand::Build(args)) => commands::index_build(&config, args),
        Command::Poll(PollCommand::Run(args)) => commands::poll_run(&config, args),
        Command::Eval(args) => commands::eval(&config, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
