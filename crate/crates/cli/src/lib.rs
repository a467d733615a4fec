//! Command-line driver: parses arguments, resolves configuration, runs one
//! experiment and writes its output with a provenance header.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use manifest::{emit, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Core(polythresh::Error),
    Config(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use polythresh::Error as E;
        match self {
            CliError::Core(E::Capacity { .. }) => EXIT_CAPACITY,
            CliError::Core(
                E::Domain(_)
                | E::Validation(_)
                | E::DimensionMismatch { .. }
                | E::NotApplicable(_)
                | E::Json(_),
            ) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_INTERNAL,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<polythresh::Error> for CliError {
    fn from(e: polythresh::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "polythresh", version, about = "Random polytope threshold experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// No diagnostics on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact captured mass for the uniform law on {0,1}^n.
    ExactCube {
        #[arg(long)]
        n: u32,
        #[arg(long = "N")]
        big_n: u64,
    },
    /// Monte Carlo threshold curve from a JSON experiment configuration.
    McThreshold,
    /// Sandwich bounds and Monte Carlo estimates for lattice balls.
    LatticeThreshold(LatticeArgs),
    /// Evaluate the Cramér transform at a point, or its law under the measure.
    CramerEval(CramerArgs),
    /// Log-concavity, extension integral and moment probe of a 1D or product law.
    ExtensionCheck(ExtensionArgs),
    /// Counterexample constructions.
    Counterexample(CounterArgs),
    /// Tukey depth of a point.
    DepthEval(DepthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct LawArgs {
    /// Measure document (JSON).
    #[arg(long, conflicts_with_all = ["bernoulli", "geometric"])]
    pub measure: Option<PathBuf>,
    /// Bernoulli(p) law.
    #[arg(long, conflicts_with = "geometric")]
    pub bernoulli: Option<f64>,
    /// Symmetric geometric law with ratio q.
    #[arg(long)]
    pub geometric: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct CramerArgs {
    #[command(flatten)]
    pub law: LawArgs,
    /// Comma-separated coordinates of the evaluation point.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required_unless_present = "distribution"
    )]
    pub x: Vec<f64>,
    /// Emit the law of Λ*(X) as `value,prob` rows instead.
    #[arg(long, conflicts_with = "x")]
    pub distribution: bool,
    /// Ray length for atomic laws.
    #[arg(long, default_value_t = 80.0)]
    pub t_max: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ExtensionArgs {
    #[command(flatten)]
    pub law: LawArgs,
    /// Moment order of the probe.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Increasing probe radii (default: eight equal steps to the support edge).
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct LatticeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub big_n: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Beta,
    Noth,
    Infmean,
    Depth1,
    Koloun,
}

#[derive(Args, Debug, Clone)]
pub struct CounterArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    /// Dimension (beta, noth, infmean, depth1).
    #[arg(long)]
    pub n: Option<u64>,
    /// Bernoulli parameter (beta).
    #[arg(long)]
    pub p: Option<f64>,
    /// Box half-width (koloun).
    #[arg(long)]
    pub w: Option<i64>,
    /// Number of atoms (infmean).
    #[arg(long)]
    pub k_atoms: Option<u64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "N", value_delimiter = ',')]
    pub big_n: Option<Vec<u64>>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct DepthArgs {
    #[command(flatten)]
    pub law: LawArgs,
    /// Comma-separated coordinates of the point.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Random directions for the sampled upper bound (used when no exact
    /// method applies).
    #[arg(long, default_value_t = 1000)]
    pub dirs: usize,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let start = Instant::now();
    let result = commands::dispatch(&cli).and_then(|(manifest, body)| {
        let mut text = manifest.header();
        text.push_str(&body);
        emit(cli.global.out.as_deref(), &text)?;
        Ok(manifest)
    });
    match result {
        Ok(m) => {
            if !cli.global.quiet {
                eprintln!(
                    "{}: done in {:.3} s (config {})",
                    m.subcommand,
                    start.elapsed().as_secs_f64(),
                    &m.digest()[..12]
                );
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
