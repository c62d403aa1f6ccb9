use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "kahler",
    version,
    about = "Verification runner for the lognormal Kähler toolkit"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for random state sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat TOML key-value file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides KAHLER_OUT_DIR and the config file).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Tolerance override `claim=value`; repeatable.
    #[arg(long = "tol", value_name = "CLAIM=VALUE", global = true)]
    pub tol: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher metric, inverse and dual coordinates; metric checks.
    Metric {
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["THETA1", "THETA2"])]
        theta: Option<Vec<f64>>,
    },
    /// Lifted (g, J, omega) at a state; Kähler structure checks.
    KahlerCheck {
        #[command(flatten)]
        state: StateArg,
        #[arg(long, value_enum, default_value_t = ChartArg::Natural)]
        chart: ChartArg,
    },
    /// Kähler function family against the flatness system.
    PdeCheck {
        /// Six family coefficients to evaluate at the state.
        #[arg(long, num_args = 6, allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
        #[command(flatten)]
        state: StateArg,
    },
    /// Holomorphy and isometry of translations.
    IsometryCheck {
        /// Translation vector to evaluate at the state.
        #[arg(long, num_args = 4, allow_negative_numbers = true)]
        translate: Option<Vec<f64>>,
        #[command(flatten)]
        state: StateArg,
    },
    /// Hamiltonian fields of the observables, two ways.
    Fields {
        #[command(flatten)]
        state: StateArg,
    },
    /// Integrate a generator's flow and export it as CSV.
    Flow {
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Evolution residuals along a flow; exports CSV and a JSON summary.
    Schrodinger {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_enum, default_value_t = FlagsArg::Calibrated)]
        flags: FlagsArg,
        /// `primary`, `alternate`, or a constant value.
        #[arg(long, default_value = "const", allow_hyphen_values = true)]
        xi: String,
        /// beta1..beta6.
        #[arg(long, num_args = 6, allow_negative_numbers = true)]
        beta: Option<Vec<f64>>,
    },
    /// Every suite; the registry must be complete.
    ReportAll,
}

#[derive(Debug, Args)]
pub struct StateArg {
    /// theta1 theta2 thetadot1 thetadot2.
    #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["T1", "T2", "D1", "D2"])]
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Generator letter or combination such as `G:1,P:-0.5`.
    #[arg(long = "gen", default_value = "Q")]
    pub generator: String,
    #[arg(long, num_args = 4, allow_negative_numbers = true, default_values_t = [1.0, -1.0, 0.0, 0.0])]
    pub start: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub s_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartArg {
    Natural,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlagsArg {
    Calibrated,
    AsPrinted,
}
