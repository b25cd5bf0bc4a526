use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stefanst::convergence::convergence_study;
use stefanst::output::write_convergence;
use stefanst::{Config, DriverError, Result, Simulation};

#[derive(Parser)]
#[command(
    name = "stefanst",
    version,
    about = "Space-time FEM solver for melting with a sharp interface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write series.csv plus VTK snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured step count.
        #[arg(long)]
        steps: Option<usize>,
        /// `section.key=value`, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Mesh-refinement study of a stefan_1d configuration.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated mesh sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<f64>,
        /// Output CSV.
        #[arg(long, default_value = "convergence.csv")]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and check a configuration, including the mesh and its tags.
    ValidateConfig { path: PathBuf },
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("STEFANST_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        DriverError::config(format!(
            "STEFANST_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| DriverError::config(format!("cannot size the worker pool: {e}")))
}

fn execute(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Run {
            config,
            out,
            steps,
            overrides,
        } => {
            let cfg = Config::from_path(&config, &overrides)?;
            if steps == Some(0) {
                return Err(DriverError::config("--steps must be at least 1"));
            }
            let mut sim = Simulation::new(&cfg)?;
            sim.run(steps, Some(&out))?;
            let last = sim.records.last().expect("at least one step ran");
            println!(
                "{}: {} steps, t = {:.6e}, pci_x = {:.6e}, I = {:.6}",
                cfg.scenario.name(),
                sim.step,
                last.t,
                last.pci_x,
                last.liquid_integral
            );
        }
        Command::Converge {
            config,
            h,
            out,
            overrides,
        } => {
            let cfg = Config::from_path(&config, &overrides)?;
            let study = convergence_study(&cfg, &h)?;
            write_convergence(&study.rows(), &out)?;
            println!("h,nodes,abs_err,rel_err,front_err");
            for e in &study.entries {
                println!(
                    "{:e},{},{:.6e},{:.6e},{:.3e}",
                    e.h,
                    e.nodes,
                    e.error.normalized,
                    e.error.relative,
                    e.front_error()
                );
            }
            println!("CR = {:.3}", study.rate);
        }
        Command::ValidateConfig { path } => {
            let cfg = Config::from_path(&path, &[])?;
            let p = stefanst::scenario::build_problem(&cfg)?;
            println!(
                "ok: {} with {} nodes, {} elements",
                cfg.scenario.name(),
                p.mesh.node_count(),
                p.mesh.element_count()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(history) = e.residual_history() {
                eprintln!("residual history:");
                for (k, r) in history.iter().enumerate() {
                    eprintln!("  {k:3} {r:.6e}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
