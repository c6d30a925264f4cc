use clap::{Args, Parser, Subcommand};
use lifted_core::analysis::write_atomic;
use lifted_core::config::RunConfig;
use lifted_core::experiments::{run, Command};
use lifted_core::{exec, Error};
use std::path::PathBuf;
use std::process::ExitCode;

/// Stable backward-heat and convection solvers through a lifted
/// Schrödinger-type formulation.
#[derive(Parser)]
#[command(name = "lifted", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Recover u(t) from terminal data of the backward heat equation.
    BackwardHeat(RunArgs),
    /// Convection with imaginary wave speed.
    Convection(RunArgs),
    /// Backward heat with a variable coefficient through the eigen expansion.
    VariableCoeff(RunArgs),
    /// Error table over refinement levels.
    Convergence(RunArgs),
    /// Noise sweep with the two-term error bound.
    Noise(RunArgs),
    /// Error of e^p w against the reference over every p node.
    Plateau(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Embedded experiment preset.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Noise seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel path.
    #[arg(long)]
    threads: Option<usize>,
    /// Use constant 1 instead of 4.5 in the lower bound on pi*L.
    #[arg(long)]
    relaxed_pl: bool,
}

fn load(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => RunConfig::preset(name)?,
        (None, Some(path)) => {
            let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml_str(&src).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        (None, None) => return Err(Error::Config("give --preset or --config".into())),
    };
    if let (Some(seed), Some(noise)) = (args.seed, cfg.noise.as_mut()) {
        noise.seed = seed;
    }
    cfg.solver.relaxed_pl |= args.relaxed_pl;
    Ok(cfg)
}

fn execute(command: Command, args: &RunArgs) -> Result<(), Error> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        if n == 1 {
            exec::set_parallel(false);
        } else {
            exec::init_threads(n);
        }
    }
    let cfg = load(args)?;
    let out = run(command, &cfg)?;
    for (name, contents) in &out.files {
        let path = args.out.join(name);
        write_atomic(&path, contents)?;
        println!("wrote {}", path.display());
    }
    if let Some(report) = &out.report {
        print!("{}", report.to_csv()?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::BackwardHeat(a) => (Command::BackwardHeat, a),
        Sub::Convection(a) => (Command::Convection, a),
        Sub::VariableCoeff(a) => (Command::VariableCoeff, a),
        Sub::Convergence(a) => (Command::Convergence, a),
        Sub::Noise(a) => (Command::Noise, a),
        Sub::Plateau(a) => (Command::Plateau, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                ExitCode::from(2)
            } else if e.is_numeric_guard() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
