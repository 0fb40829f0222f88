use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::Status;

#[derive(Parser, Debug)]
#[command(name = "ifnetlab", version, about = "Interference-network workbench")]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Config {
    /// Channel-spec JSON file.
    #[arg(long, global = true)]
    pub channel: Option<PathBuf>,
    /// Grid resolution per distribution factor.
    #[arg(short = 'g', long, global = true)]
    pub grid: Option<usize>,
    /// Auxiliary cardinalities, e.g. `W=2,U=2,V=2,Z=3` (also `D=` and `M=`).
    #[arg(long, global = true)]
    pub aux: Option<String>,
    #[arg(long, global = true, default_value_t = ifnetlab::regimes::DEFAULT_TOL)]
    pub tol: f64,
    /// Output directory for JSON reports and CSV region data.
    #[arg(long, global = true, env = "IFNETLAB_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate a channel spec.
    Validate,
    /// Check a regime condition on the channel.
    Check {
        id: Option<String>,
        /// Print the known condition ids.
        #[arg(long)]
        list: bool,
        /// Random pmfs drawn after the grid stage.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Sweep a region template over its input family.
    Region {
        id: Option<String>,
        /// Print the known template ids.
        #[arg(long)]
        list: bool,
    },
    /// Compare the swept regions of two templates.
    Compare { a: String, b: String },
    /// Outer-bound templates.
    Bounds {
        #[command(subcommand)]
        action: BoundsAction,
    },
    /// Numerically verify one of the single-letterization lemmas.
    VerifyLemma {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        which: u8,
        /// Random joints per inequality.
        #[arg(long)]
        samples: Option<usize>,
        /// Inequality `S|G|W|T` as 1-based lists: signal inputs, other inputs,
        /// weaker receivers, stronger receivers.
        #[arg(long)]
        row: Option<String>,
        /// Number of inputs on the degraded side (lemma 2).
        #[arg(long, default_value_t = 1)]
        split: usize,
    },
    /// Sum capacity under a less-noisy regime.
    Sumrate {
        kind: String,
        /// Skip the regime check.
        #[arg(long)]
        waive_condition: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum BoundsAction {
    /// List the outer-bound templates of the channel's topology.
    Enumerate {
        /// Layer count; defaults to the largest receiver message set.
        #[arg(long)]
        mu: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::TwoRx)]
        mode: Mode,
        /// Receiver group size in multi-receiver mode.
        #[arg(long, default_value_t = ifnetlab::boundsgen::DEFAULT_GROUP_SIZE)]
        group_size: usize,
        /// Refuse to enumerate more selections than this.
        #[arg(long, default_value_t = ifnetlab::boundsgen::DEFAULT_SELECTION_CAP)]
        cap: u64,
    },
    /// Rebuild the registered specializations and compare them.
    Replay {
        #[arg(long, default_value_t = 2)]
        mu: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Mode {
    TwoRx,
    MultiRx,
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn diagnostic(err: &anyhow::Error) -> String {
    let code = err
        .chain()
        .find_map(|e| e.downcast_ref::<ifnetlab::Error>())
        .map(|e| e.code())
        .unwrap_or("INPUT_ERROR");
    one_line(&format!("{code}: {err:#}"))
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    eprintln!("ifnetlab: USAGE: {}", one_line(first.trim_start_matches("error:")));
                    Status::InputError.code()
                }
            };
        }
    };
    match commands::dispatch(&cli.config, cli.command) {
        Ok(status) => status.code(),
        Err(err) => {
            eprintln!("ifnetlab: {}", diagnostic(&err));
            Status::InputError.code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
