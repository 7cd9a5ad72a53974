//! `homwave`: simulate, analyze and compare polarization-modulated HOM runs.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 usage, 3 invalid
//! configuration, 4 malformed tag or curve data, 5 analysis failure,
//! 6 comparison outside tolerance.

mod commands;
mod figures;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homwave::model::RunConfig;

#[derive(Parser)]
#[command(name = "homwave", version, about = "Square-wave HOM interference with polarization-modulated CW light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a time-tag file from a run configuration.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Reduce tag files to a phase histogram, a dip, or a delay scan.
    Analyze {
        /// Tag files or simulate output directories (several for `scan`).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::PhaseHistogram)]
        mode: Mode,
        /// Modulation periods per phase-histogram fold.
        #[arg(long, default_value_t = 1)]
        periods: u64,
        /// Largest dip lag, ns [default: 5 τ_c].
        #[arg(long)]
        max_lag: Option<f64>,
        /// Smallest |lag| in the dip baseline, ns [default: 4 τ_c].
        #[arg(long)]
        baseline_min: Option<f64>,
        /// Count every in-window pair instead of greedy nearest pairing.
        #[arg(long)]
        all_pairs: bool,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Score a curve file against the analytic oracle.
    Compare {
        curve: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Regenerate the data behind a figure.
    Figures {
        #[arg(value_enum)]
        id: figures::FigureId,
        #[arg(long)]
        all_pairs: bool,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    PhaseHistogram,
    Dip,
    Scan,
}

/// Configuration file plus per-field overrides.
#[derive(Args, Clone, Default)]
pub struct RunArgs {
    /// TOML run configuration [default: built-in published values].
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nominal optical delay τ_Opt, ns.
    #[arg(long)]
    pub delay: Option<f64>,
    /// Modulator duty cycle.
    #[arg(long)]
    pub duty: Option<f64>,
    /// Modulator 10-90 rise/fall time, ns.
    #[arg(long)]
    pub edge_time: Option<f64>,
    /// Acquisition time, s.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Coincidence half-window T_coin, ns.
    #[arg(long)]
    pub window: Option<f64>,
    /// Phase-histogram bin width, ns.
    #[arg(long)]
    pub bin: Option<f64>,
}

impl RunArgs {
    /// `--config`, else `fallback` if it exists, else defaults; then overrides.
    pub fn resolve(&self, fallback: Option<&std::path::Path>) -> anyhow::Result<RunConfig> {
        let mut cfg = match (&self.config, fallback) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Some(p)) if p.is_file() => RunConfig::load(p)?,
            _ => RunConfig::default(),
        };
        let e = &mut cfg.experiment;
        if let Some(v) = self.seed {
            e.rng_seed = v;
        }
        if let Some(v) = self.delay {
            e.tau_opt = v;
        }
        if let Some(v) = self.duration {
            e.duration = v * 1e9;
        }
        if let Some(v) = self.window {
            e.t_coin = v;
        }
        if let Some(v) = self.bin {
            e.bin_width = v;
        }
        if let Some(v) = self.duty {
            cfg.modulation.duty = v;
        }
        if let Some(v) = self.edge_time {
            cfg.modulation.edge_time = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "HOMWAVE_OUT", default_value = "homwave-out")]
    pub out: PathBuf,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json_summary: bool,
}

/// A comparison ran but found the curve outside tolerance.
#[derive(Debug, thiserror::Error)]
#[error("comparison failed: max |z| {max_abs_z:.2}, chi2/dof {chi2_per_dof:.2}")]
pub struct ComparisonFailed {
    pub max_abs_z: f64,
    pub chi2_per_dof: f64,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<homwave::Error>() {
            return match e {
                homwave::Error::Config { .. } => 3,
                homwave::Error::Format { .. } | homwave::Error::Data(_) => 4,
                homwave::Error::Analysis(_) => 5,
                homwave::Error::Io(_) => 1,
            };
        }
        if cause.is::<ComparisonFailed>() {
            return 6;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { run, out } => commands::simulate(&run, &out),
        Command::Analyze {
            inputs,
            mode,
            periods,
            max_lag,
            baseline_min,
            all_pairs,
            run,
            out,
        } => commands::analyze(
            &inputs,
            &commands::AnalyzeOptions {
                mode,
                periods,
                max_lag,
                baseline_min,
                all_pairs,
            },
            &run,
            &out,
        ),
        Command::Compare { curve, run, out } => commands::compare(&curve, &run, &out),
        Command::Figures {
            id,
            all_pairs,
            run,
            out,
        } => figures::run(id, all_pairs, &run, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
