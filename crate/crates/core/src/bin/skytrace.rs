use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use skytrace_core::dataset::{emit_plot_data, export_sql, read_dataset, PlotMetric};
use skytrace_core::orchestrator::{
    generate_scenario, parse_config, run_simulation, ScenarioParams,
};
use skytrace_core::{Error, Result};

/// Deterministic mmWave multipath simulator for ground-to-UAV links.
#[derive(Parser)]
#[command(name = "skytrace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full simulation described by a config file.
    Simulate {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores). Output is identical for
        /// any value.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Generate the canonical urban scenario (scene, routes, config).
    GenerateScenario {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Export a dataset as SQL DDL plus INSERT statements.
    ExportSql {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a power/delay-versus-time CSV for one UAV in one episode.
    PlotData {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        uav: u32,
        #[arg(long)]
        episode: u32,
        /// "power" or "delay".
        #[arg(long)]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed, parallel } => {
            if let Some(threads) = parallel {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .map_err(|e| Error::Config(format!("--parallel: {e}")))?;
            }
            let mut cfg = parse_config(&config)?;
            cfg.out_dir = out;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let manifest = run_simulation(&cfg)?;
            println!(
                "wrote {} episodes, {} scenes, {} receivers, {} rays to {}",
                manifest.episode_count,
                manifest.scene_count,
                manifest.receiver_count,
                manifest.ray_count,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Command::GenerateScenario { out, seed } => {
            let params = ScenarioParams { seed, ..ScenarioParams::default() };
            let (scene, routes, config) = generate_scenario(&out, &params)?;
            println!(
                "wrote {}, {}, {}",
                scene.display(),
                routes.display(),
                config.display()
            );
            Ok(())
        }
        Command::ExportSql { dataset, out } => {
            let ds = read_dataset(&dataset)?;
            std::fs::write(&out, export_sql(&ds)?)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::PlotData { dataset, uav, episode, metric, out } => {
            let metric: PlotMetric = metric.parse()?;
            let ds = read_dataset(&dataset)?;
            let csv = emit_plot_data(&ds, uav, episode, metric)?;
            std::fs::write(&out, csv)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
