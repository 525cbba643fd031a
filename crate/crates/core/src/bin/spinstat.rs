use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spinstat_core::density::{density_matrix, density_operator};
use spinstat_core::ensemble::{EnsembleFile, Preset};
use spinstat_core::harness::{
    demo_paradox, render_paradox, render_report, run_experiment, write_file, ExperimentConfig, HarnessError,
    OutputPaths,
};
use spinstat_core::spin::{eigenstate, Axis, HbarScale, SpinOutcome};

#[derive(Parser)]
#[command(name = "spinstat", version, about = "Spin-1/2 ensemble statistics experiments")]
struct Cli {
    /// Worker threads for trial sampling (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a preset ensemble experiment.
    Demo {
        #[arg(long, value_parser = parse_preset)]
        ensemble: Preset,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value = "x", value_parser = parse_axis)]
        axis: Axis,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of per-trial totals.
        #[arg(long)]
        totals: Option<PathBuf>,
    },
    /// Run presets A and B side by side.
    Compare {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value = "x", value_parser = parse_axis)]
        axis: Axis,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Show that no single operator represents the variance.
    Paradox {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a preset's density matrix as JSON.
    Density {
        #[arg(long, value_parser = parse_preset)]
        ensemble: Preset,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "z", value_parser = parse_axis)]
        basis: Axis,
        #[arg(long)]
        unnormalized: bool,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: spinstat_core::SpinError| e.to_string())
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: spinstat_core::SpinError| e.to_string())
}

fn run_config(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let report = run_experiment(cfg)?;
    let (text, _) = render_report(&report, &HbarScale::new(cfg.hbar)?)?;
    print!("{text}");
    Ok(())
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config } => run_config(&ExperimentConfig::load(&config)?),
        Command::Demo { ensemble, n, trials, axis, seed, hbar, out, totals } => run_config(&ExperimentConfig {
            ensemble: EnsembleFile::Preset { preset: ensemble, n },
            axis,
            trials,
            seed,
            hbar,
            outputs: OutputPaths { report: out, totals },
        }),
        Command::Compare { n, trials, axis, seed } => {
            for preset in [Preset::A, Preset::B] {
                run_config(&ExperimentConfig {
                    ensemble: EnsembleFile::Preset { preset, n },
                    axis,
                    trials,
                    seed,
                    hbar: 1.0,
                    outputs: OutputPaths::default(),
                })?;
            }
            Ok(())
        }
        Command::Paradox { samples, seed, out } => {
            let (text, json) = render_paradox(&demo_paradox(samples, seed)?)?;
            print!("{text}");
            if let Some(path) = out {
                write_file(&path, json.as_bytes())?;
            }
            Ok(())
        }
        Command::Density { ensemble, n, basis, unnormalized } => {
            let spec = EnsembleFile::Preset { preset: ensemble, n }.build()?;
            let rho = density_operator(&spec, !unnormalized);
            let m = density_matrix(
                &rho,
                [eigenstate(&basis, SpinOutcome::Plus), eigenstate(&basis, SpinOutcome::Minus)],
            )?;
            println!("{}", serde_json::to_string_pretty(&m)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error[config]: cannot configure {threads} threads: {e}");
            return ExitCode::from(3);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
