//! Command-line arguments and the run configuration they resolve to.
//!
//! Every argument struct doubles as the serialized config, so a resolved
//! [`RunConfig`] (alpha read from file, per-suite defaults filled in) is
//! all that is needed to repeat a run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use probpark::combinatorics::AsymptoticFormula;
use probpark::parking::PreferenceList;
use probpark::samplers::Family;
use probpark::scalar::StepProbability;
use probpark::walk::{Boundary, DEFAULT_STEP_CAP};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Longest preference list accepted on the command line; longer lists go
/// through `--alpha-file`.
pub const MAX_INLINE_ENTRIES: usize = 10_000;

pub const DEFAULT_SEED: u64 = 1;

const OUTPUT_HELP: &str = "\
OUTPUT:
  JSON (default) is one document {\"config\": RunConfig, \"result\": ...}.
  RunConfig holds \"subcommand\", its resolved \"args\" (seed included, alpha
  inlined even when read from a file), \"format\" and \"output\".
  CSV output (sample, tabular count queries) starts with a line
  \"# config: <RunConfig as JSON>\".
  `probpark --config FILE` accepts either form (or a bare RunConfig) and
  reproduces the original output byte for byte.

  --p a/b evaluates in exact rational mode, a decimal in float mode; the mode
  is echoed in the result.

ENVIRONMENT:
  PROBPARK_SEED  default seed for randomized subcommands

EXIT CODES:
  0 success, 1 invalid input or usage, 2 a check failed";

#[derive(Parser, Debug)]
#[command(
    name = "probpark",
    version,
    about = "Probabilistic parking functions: simulation, exact formulas and combinatorics",
    after_help = OUTPUT_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Re-run a saved config (a bare RunConfig or a previous output)
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output format; csv is available for `sample` and tabular `count` queries
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    /// Write the output to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "args", rename_all = "kebab-case")]
pub enum Command {
    /// Classify a preference list: parking function, identity outcome, weakly increasing
    Classify(ListArgs),
    /// Run the deterministic protocol: outcome, lucky cars, failed cars
    Park(ListArgs),
    /// Monte Carlo batch of the random-walk protocol
    Simulate(SimulateArgs),
    /// Evaluate a closed form, series or path count by name
    Exact(ExactArgs),
    /// Seeded uniform draws of parking functions
    Sample(SampleArgs),
    /// Catalan and weakly increasing parking function counts
    Count(CountArgs),
    /// Run a verification suite; exit 2 if any check fails
    Verify(VerifyArgs),
    /// Test the park indicators for negative correlation
    Correlate(CorrelateArgs),
    /// Compare tails of the parked-car count with Chernoff bounds
    Chernoff(ChernoffArgs),
    /// Exact cumulative grid of all-park probabilities over [n]^n
    Heatmap(HeatmapArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Park(_) => "park",
            Command::Simulate(_) => "simulate",
            Command::Exact(_) => "exact",
            Command::Sample(_) => "sample",
            Command::Count(_) => "count",
            Command::Verify(_) => "verify",
            Command::Correlate(_) => "correlate",
            Command::Chernoff(_) => "chernoff",
            Command::Heatmap(_) => "heatmap",
        }
    }

    /// Reads alpha files and fills defaults that depend on other arguments.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        match self {
            Command::Classify(a) | Command::Park(a) => a.resolve(),
            Command::Simulate(a) => a.list.resolve(),
            Command::Exact(a) => a.list.resolve(),
            Command::Correlate(a) => a.list.resolve(),
            Command::Chernoff(a) => a.list.resolve(),
            Command::Verify(a) => {
                a.resolve();
                Ok(())
            }
            Command::Sample(_) | Command::Count(_) | Command::Heatmap(_) => Ok(()),
        }
    }
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ListArgs {
    /// Preference list such as 1,1,2 (at most 10^4 entries)
    #[arg(long = "alpha", value_name = "ALPHA")]
    #[serde(skip)]
    pub alpha_inline: Option<String>,

    /// File holding the preference list, entries separated by commas or whitespace
    #[arg(long, conflicts_with = "alpha_inline")]
    #[serde(skip)]
    pub alpha_file: Option<PathBuf>,

    /// The resolved list; this is what a saved config records.
    #[arg(skip)]
    pub alpha: Option<PreferenceList>,
}

impl ListArgs {
    fn resolve(&mut self) -> Result<(), CliError> {
        if let Some(text) = self.alpha_inline.take() {
            let entries = text
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .count();
            if entries > MAX_INLINE_ENTRIES {
                return Err(CliError::Usage(format!(
                    "--alpha has {entries} entries; the inline limit is {MAX_INLINE_ENTRIES}, use --alpha-file"
                )));
            }
            self.alpha = Some(text.parse()?);
        }
        if let Some(path) = self.alpha_file.take() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            self.alpha = Some(text.parse()?);
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<&PreferenceList, CliError> {
        self.alpha
            .as_ref()
            .ok_or_else(|| CliError::Usage("--alpha or --alpha-file is required".into()))
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub list: ListArgs,

    /// Probability of a step to the right: a/b or a decimal
    #[arg(long)]
    pub p: StepProbability,

    #[arg(long, default_value_t = Boundary::Open)]
    pub boundary: Boundary,

    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,

    #[arg(long, env = "PROBPARK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Steps after which a car is given up on
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: u64,

    /// Also report every car's positions in trial 0
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactFormula {
    /// Pr[car from s reaches i before 0]; needs --i --s --p
    OpenProbSingle,
    /// Pr[all cars park], open boundary; needs --alpha --p
    OpenProbAll,
    /// Pr[all cars park] for a reversed-identity list; needs --alpha --p
    OpenProbAllReversed,
    /// Conditional expected steps of one car; needs --i --s --p
    OpenExpectedTimeSingle,
    /// Conditional expected total steps; needs --alpha --p
    OpenExpectedTimeAll,
    /// Closed form of the expected total steps at p = 1/2; needs --alpha
    OpenExpectedTimeHalf,
    /// Conditional variance of one car's steps; needs --i --s --p
    OpenTimeVarianceSingle,
    /// Conditional variance of the total steps; needs --alpha --p
    OpenTimeVarianceAll,
    /// Pr[car displaced by d parks], unbounded street; needs --d --p
    UnboundedProbSingle,
    /// Pr[all cars park], unbounded street; needs --alpha --p
    UnboundedProbAll,
    /// First-passage series for displacement d; needs --d --p
    UnboundedProbSeries,
    /// Expected steps of a car displaced by d; needs --d --p
    UnboundedExpectedTime,
    /// Variance of the steps of a car displaced by d; needs --d --p
    UnboundedVariance,
    /// Expected total steps, unbounded street; needs --alpha --p
    UnboundedExpectedTimeAll,
    /// Variance of the total steps, unbounded street; needs --alpha --p
    UnboundedVarianceAll,
    /// Expected time by summing over arrival paths; needs --i --s --p
    ExpectedTimeViaPaths,
    /// Walks of b steps from height k that first touch 0 at step b; needs --b --k
    RuinPathCount,
    /// d/(l+d) binom(2l+d-1, l); needs --d --l
    CatalanConvolution,
    /// Walks to spot i with j left steps and net displacement k, confined to [1, i-1] before the last step; needs --i --j --k
    BoundedPathCount,
    /// Exact law of the parked cars: marginals, all-park, mean; needs --alpha --p [--boundary]
    OccupancyLaw,
}

impl fmt::Display for ExactFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub formula: ExactFormula,

    #[command(flatten)]
    #[serde(flatten)]
    pub list: ListArgs,

    /// Probability of a step to the right: a/b (exact) or a decimal (float)
    #[arg(long)]
    pub p: Option<StepProbability>,

    #[arg(long)]
    pub boundary: Option<Boundary>,

    /// Target spot / length of the gambler's-ruin interval
    #[arg(long, allow_negative_numbers = true)]
    pub i: Option<i64>,

    /// Start spot
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<i64>,

    /// Displacement
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<i64>,

    /// Number of left steps
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<i64>,

    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<i64>,

    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<i64>,

    #[arg(long, allow_negative_numbers = true)]
    pub l: Option<i64>,

    /// Truncation tolerance for series
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleArgs {
    /// PF, WIPF or PF_ID
    #[arg(long)]
    pub family: Family,

    #[arg(long)]
    pub n: usize,

    /// Number of draws
    #[arg(long, default_value_t = 1)]
    pub count: u64,

    /// Index of the first draw
    #[arg(long, default_value_t = 0)]
    pub start: u64,

    #[arg(long, env = "PROBPARK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountQuery {
    /// C_n; needs --n
    Catalan,
    /// Catalan triangle entry; needs --n --k
    CatalanTriangle,
    /// binom(n, k); needs --n --k
    Binomial,
    /// Weakly increasing parking functions of length n with entry i equal to j; needs --n --i --j
    WipfEntry,
    /// Law of the last entry of a uniform weakly increasing parking function; needs --n
    LastEntryDistribution,
    /// Mean last entry; needs --n
    ExpectedLastEntry,
    /// Pr[lucky set equals --lucky]; needs --n --lucky
    LuckySetProbability,
    /// Law of the number of lucky cars; needs --n
    LuckyCountDistribution,
    /// Mean number of lucky cars; needs --n
    ExpectedLucky,
    /// Asymptotic estimate against the exact value; needs --formula --n [--j]
    Asymptotic,
    /// Whether the events alpha_i <= m over --indices collapse to the last one; needs --n --m --indices
    Monotonicity,
}

impl CountQuery {
    pub fn is_tabular(self) -> bool {
        matches!(
            self,
            CountQuery::LastEntryDistribution | CountQuery::LuckyCountDistribution
        )
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountArgs {
    #[arg(long, value_enum)]
    pub what: CountQuery,

    #[arg(long)]
    pub n: Option<u64>,

    #[arg(long)]
    pub k: Option<u64>,

    #[arg(long)]
    pub i: Option<u64>,

    #[arg(long)]
    pub j: Option<u64>,

    #[arg(long)]
    pub m: Option<u64>,

    /// Lucky cars, e.g. 1,3
    #[arg(long, value_delimiter = ',')]
    pub lucky: Vec<usize>,

    /// Non-decreasing car indices, e.g. 2,4
    #[arg(long, value_delimiter = ',')]
    pub indices: Vec<u64>,

    /// wipf-fraction, last-entry-fixed, last-entry-near-top or last-entry-growing
    #[arg(long)]
    pub formula: Option<AsymptoticFormula>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Binomial sum identities for every n <= --n-max (default 100)
    Identities,
    /// First-step equations of the expected time for 2 <= i <= --n-max (default 6) at --p (default 1/3)
    Residuals,
    /// Counting formulas against enumeration for n <= --n-max (default 8), path series against closed form
    Oracles,
    /// Monte Carlo against closed forms on the built-in panel, lists up to --n-max (default 8)
    Crossval,
    /// Weakly increasing parking function sampler against exact laws at --n (default 5)
    WipfSampler,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,

    #[arg(long)]
    pub n_max: Option<u64>,

    #[arg(long)]
    pub n: Option<u64>,

    #[arg(long)]
    pub p: Option<StepProbability>,

    /// Step probabilities for crossval (default 0.3,0.5,0.75)
    #[arg(long, value_delimiter = ',')]
    pub p_set: Vec<f64>,

    #[arg(long, default_value_t = Boundary::Open)]
    pub boundary: Boundary,

    /// Trials per crossval cell (default 10^5) or sampler draws (default 10^5)
    #[arg(long)]
    pub trials: Option<u64>,

    /// Float tolerance for residuals and path series
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,

    #[arg(long, env = "PROBPARK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl VerifyArgs {
    fn resolve(&mut self) {
        match self.suite {
            Suite::Identities => {
                self.n_max.get_or_insert(100);
            }
            Suite::Residuals => {
                self.n_max.get_or_insert(6);
                self.p
                    .get_or_insert_with(|| StepProbability::exact(1, 3).expect("1/3 is valid"));
            }
            Suite::Oracles => {
                self.n_max.get_or_insert(8);
            }
            Suite::Crossval => {
                self.n_max.get_or_insert(8);
                self.trials.get_or_insert(100_000);
                if self.p_set.is_empty() {
                    self.p_set = vec![0.3, 0.5, 0.75];
                }
            }
            Suite::WipfSampler => {
                self.n.get_or_insert(5);
                self.trials.get_or_insert(100_000);
            }
        }
    }
}

/// A set of car labels such as `1,2,3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CarSet(pub Vec<usize>);

impl FromStr for CarSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad car label {t:?}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(CarSet)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub list: ListArgs,

    #[arg(long)]
    pub p: StepProbability,

    #[arg(long, default_value_t = Boundary::Open)]
    pub boundary: Boundary,

    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    #[arg(long, env = "PROBPARK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Extra subset of cars to test, e.g. 1,2,3 (repeatable); all pairs are always tested
    #[arg(long = "subset")]
    pub subsets: Vec<CarSet>,

    /// Test every subset of at least two cars
    #[arg(long, conflicts_with = "subsets")]
    pub all_subsets: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernoffArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub list: ListArgs,

    #[arg(long)]
    pub p: StepProbability,

    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    #[arg(long, env = "PROBPARK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
    pub deltas: Vec<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub n: usize,

    /// p takes the values k / p_resolution, k = 0..=p_resolution
    #[arg(long, default_value_t = 20)]
    pub p_resolution: usize,

    /// y takes the values k / y_resolution, k = 0..=y_resolution
    #[arg(long, default_value_t = 20)]
    pub y_resolution: usize,

    /// Write the grid as CSV (p,y,count,total) to this file
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// Write the grid as a binary PGM image to this file
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        if let Some(path) = cli.config {
            if cli.command.is_some() || cli.format.is_some() || cli.output.is_some() {
                return Err(CliError::Usage(
                    "--config cannot be combined with a subcommand, --format or --output".into(),
                ));
            }
            return Self::load(&path);
        }
        let mut command = cli
            .command
            .ok_or_else(|| CliError::Usage("no subcommand given (see --help)".into()))?;
        command.resolve()?;
        Ok(RunConfig {
            command,
            format: cli.format.unwrap_or(Format::Json),
            output: cli.output,
        })
    }

    /// Reads a config from a bare RunConfig, a JSON output document or a
    /// CSV output with a `# config:` line.
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let json = match text.strip_prefix(CSV_CONFIG_PREFIX) {
            Some(rest) => rest.lines().next().unwrap_or("").to_string(),
            None => text,
        };
        let mut value: serde_json::Value = serde_json::from_str(&json)
            .map_err(|e| CliError::Usage(format!("{} is not a config: {e}", path.display())))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        let mut cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Usage(format!("{} is not a config: {e}", path.display())))?;
        cfg.command.resolve()?;
        Ok(cfg)
    }
}

pub const CSV_CONFIG_PREFIX: &str = "# config: ";
