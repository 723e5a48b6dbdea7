//! Command-line front end for `gatenet-core`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gatenet_core::Error;

pub mod commands;
pub mod config;

pub use config::{Experiment, Resolved};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "gatenet", version, about = "Design static qubit-network couplings that implement a target gate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Input {
    /// Bundled network: toffoli, fredkin, remote-sqswap
    #[arg(long)]
    pub preset: Option<String>,
    /// Experiment JSON document
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config entry (`xi=0`, `n=2`, `train.eps0=0.5`, `J_xx_34=15`)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Directory for output files
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl Input {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let exp = config::load_document(self.config.as_deref(), self.preset.as_deref(), &self.sets)?;
        Resolved::from_experiment(&exp)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average gate fidelity, sampled statistics and factorization at a point
    Eval {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Haar states for the sampled statistics
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Stochastic training with restarts
    Train {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One-parameter landscape
    Sweep {
        #[command(flatten)]
        input: Input,
        /// Tie group to vary
        #[arg(long)]
        group: String,
        /// Grid as `lo:hi:step`
        #[arg(long, default_value = "0:30:0.05")]
        grid: String,
        /// Fixed Haar probe states
        #[arg(long, default_value_t = 4)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Robustness under additive parameter noise
    Perturb {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also perturb the ancilla parameters
        #[arg(long)]
        include_ancilla: bool,
    },
    /// Lie-algebraic necessary condition
    Liecheck {
        #[command(flatten)]
        input: Input,
        /// Remove a tie group before the check
        #[arg(long)]
        drop: Vec<String>,
    },
    /// Convert dimensionless parameters to MHz
    Units {
        #[command(flatten)]
        input: Input,
        /// Gate time, e.g. `60ns`, `0.5us`, `6e-8`
        #[arg(long, default_value = "60ns")]
        time: String,
    },
}

/// Parse a duration with an optional `s`, `ms`, `us` or `ns` suffix.
pub fn parse_time(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    // divide by an exact power of ten so that `60ns` is exactly 6e-8
    let (num, per_second) = [("ns", 1e9), ("us", 1e6), ("ms", 1e3), ("s", 1.0)]
        .iter()
        .find_map(|(suf, k)| s.strip_suffix(suf).map(|n| (n, *k)))
        .unwrap_or((s, 1.0));
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse gate time `{s}`")))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(CliError::Config(format!("gate time `{s}` must be positive")));
    }
    Ok(v / per_second)
}

/// Parse `lo:hi:step` into an inclusive grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("grid `{s}` is not lo:hi:step"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // round away accumulated binary noise such as 1.1500000000000001
    Ok((0..n).map(|k| ((lo + step * k as f64) * 1e12).round() / 1e12).collect())
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
