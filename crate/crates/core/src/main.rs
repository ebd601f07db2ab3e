use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unravel::harness::{self, Scenario};

#[derive(Parser)]
#[command(name = "unravel", version, about = "Quantum-jump simulations of emission into a Lorentzian bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output bundle.
    Run(RunArgs),
    /// Compare two output bundles.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Write the comparison JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in scenario as JSON.
    Show { scenario: String },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario (fig1 … fig6).
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Modes per bath register.
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory (default: out/<scenario name>).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> unravel::Result<()> {
    let mut scenario = match (&args.config, &args.scenario) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Some(name)) => Scenario::builtin(name)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(seed) = args.seed {
        scenario.mc.seed = seed;
    }
    if let Some(m) = args.trajectories {
        scenario.mc.trajectories = m;
    }
    if let Some(n) = args.modes {
        scenario.bath.n_modes = n;
    }
    if let Some(dt) = args.dt {
        scenario.sim.dt = dt;
    }
    let out = args
        .out
        .unwrap_or_else(|| Path::new("out").join(&scenario.name));
    let summary = harness::run(&scenario, &out)?;
    eprintln!(
        "{}: {} steps, {} samples written to {}",
        scenario.name,
        summary.steps,
        summary.samples,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare { dir_a, dir_b, out } => harness::compare(&dir_a, &dir_b).and_then(|c| {
            let text = serde_json::to_string_pretty(&c)? + "\n";
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| unravel::Error::Io {
                    path: path.display().to_string(),
                    source: e,
                }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }),
        Command::Show { scenario } => Scenario::builtin(&scenario).and_then(|s| {
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
