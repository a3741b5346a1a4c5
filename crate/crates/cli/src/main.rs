use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gasplant_cli::config::config_error;
use gasplant_cli::{load_config, run, CliError, Mode, RunOutcome};

/// Values a gas-fired power plant by solving the HJB equations on a grid.
#[derive(Debug, Parser)]
#[command(name = "gasplant", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `mode` from the configuration.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Overrides `outputs` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated times to maturity in hours; overrides `snapshots`.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    /// Writes plot scripts next to the surfaces.
    #[arg(long)]
    emit_plots: bool,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(out) = args.out {
        config.outputs = out;
    }
    if let Some(s) = args.snapshots {
        config.snapshots = s;
    }
    config.emit_plots |= args.emit_plots;
    if let Some(seed) = args.seed {
        if let Some(sim) = config.simulation.as_mut() {
            sim.seed = seed;
        }
    }
    // overrides go through the same checks as the file
    config
        .validate()
        .map_err(|e| config_error(&args.config.display().to_string(), None, e))?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config {
                origin: "--threads".into(),
                line: None,
                message: e.to_string(),
            })?;
    }

    match run(&config)? {
        RunOutcome::Solved { metadata, plot_scripts } => {
            println!(
                "solved {} steps (delta_tau {:.6} h, limit {:.6} h) in {:.2} s",
                metadata.steps, metadata.delta_tau, metadata.delta_tau_max, metadata.wall_time_seconds
            );
            println!(
                "wrote {} surfaces and {} plot scripts to {}",
                metadata.surfaces.len(),
                plot_scripts.len(),
                config.outputs.display()
            );
        }
        RunOutcome::Validated { checks } => println!("all {} properties hold", checks.len()),
        RunOutcome::Simulated { report } => {
            for r in &report.results {
                let s = &r.start;
                print!(
                    "start (regime {}, S_e {}, S_g {}, L {}): MC {:.6e} +- {:.3e}",
                    s.regime, s.s_e, s.s_g, s.l, r.estimate.mean, r.estimate.std_error
                );
                match r.solver_value {
                    Some(v) => println!(", solver {v:.6e}"),
                    None => println!(),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
