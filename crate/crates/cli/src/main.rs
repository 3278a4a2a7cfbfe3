use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbat_cli::{
    cmd_convergence, cmd_evolve, cmd_fit, cmd_phase_diagram, cmd_sweep, CliError, Config, FitMode,
};

#[derive(Parser)]
#[command(
    name = "qbat",
    version,
    about = "Extended Dicke quantum-battery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides `out_dir` in the config; default `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grid points (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reserved; the engine is deterministic and ignores it.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one parameter point: trajectory.csv and summary.json.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Cartesian sweep over g_list × Omega_list × eta_list × N_list: sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit N-scaling of a sweep CSV: fit_power.json or fit_linear.json.
    Fit {
        /// Sweep CSV with columns g, Omega, eta, N, E_max, P_max.
        summary_csv: PathBuf,
        #[arg(long, value_enum, default_value = "power")]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Ground-state magnetization over eta_list × g_list: phase_diagram.csv.
    PhaseDiagram {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Photon-truncation audit at N_ph = 2N, 3N, 4N: convergence.json.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Power,
    Linear,
}

fn run(command: Command) -> Result<(), CliError> {
    let common = match &command {
        Command::Evolve { common, .. }
        | Command::Sweep { common, .. }
        | Command::Fit { common, .. }
        | Command::PhaseDiagram { common, .. }
        | Command::Convergence { common, .. } => common,
    };
    let _ = common.seed;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = common.jobs {
        if k == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let flag_out = common.out.clone();

    pool.install(|| match &command {
        Command::Evolve { config, .. } => {
            let cfg = Config::load(config)?;
            let out = cfg.output_dir(flag_out.as_deref());
            let traj = cmd_evolve(&cfg, &out)?;
            eprintln!(
                "wrote {} samples to {}",
                traj.len(),
                out.join("trajectory.csv").display()
            );
            Ok(())
        }
        Command::Sweep { config, .. } => {
            let cfg = Config::load(config)?;
            let out = cfg.output_dir(flag_out.as_deref());
            let rows = cmd_sweep(&cfg, &out)?;
            eprintln!(
                "wrote {} rows to {}",
                rows.len(),
                out.join("sweep.csv").display()
            );
            Ok(())
        }
        Command::Fit {
            summary_csv, mode, ..
        } => {
            let out = flag_out.clone().unwrap_or_else(|| PathBuf::from("."));
            let mode = match mode {
                Mode::Power => FitMode::Power,
                Mode::Linear => FitMode::Linear,
            };
            let doc = cmd_fit(summary_csv, mode, &out)?;
            print!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("fit JSON") + "\n"
            );
            Ok(())
        }
        Command::PhaseDiagram { config, .. } => {
            let cfg = Config::load(config)?;
            let out = cfg.output_dir(flag_out.as_deref());
            let (rows, warnings) = cmd_phase_diagram(&cfg, &out)?;
            eprintln!(
                "wrote {} rows to {}",
                rows.len(),
                out.join("phase_diagram.csv").display()
            );
            if warnings > 0 {
                eprintln!("warning: {warnings} grid point(s) failed and were written as NaN");
            }
            Ok(())
        }
        Command::Convergence { config, .. } => {
            let cfg = Config::load(config)?;
            let out = cfg.output_dir(flag_out.as_deref());
            let report = cmd_convergence(&cfg, &out)?;
            for r in &report.results {
                eprintln!(
                    "N_ph = {:>3} vs {:>3}: max deviation {:.3e} [{}]",
                    r.n_photon_max,
                    r.n_photon_ref,
                    r.max_deviation,
                    if r.pass { "pass" } else { "fail" }
                );
            }
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
