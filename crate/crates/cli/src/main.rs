use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dhym_cli::commands::{self, SurfaceArgs};
use dhym_cli::config::{RunConfig, Suite};
use dhym_cli::CliError;

#[derive(Parser)]
#[command(name = "dhym", version, about = "Solver and verification driver for the deformed Hermitian-Yang-Mills equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equation described by a config file.
    Solve {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a property suite.
    Check {
        config: PathBuf,
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Describe a catalog surface and test its generator class.
    Surface {
        name: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        w11: f64,
        #[arg(long, default_value_t = 1.0)]
        w22: f64,
        /// Lower conformal factor.
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Upper conformal factor.
        #[arg(long = "big-m", default_value_t = 1.0)]
        big_m: f64,
    },
    /// Classify the (λ'₁, λ'₂) plane for n = 2 and print CSV.
    Region {
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the phase angle of an (ω, χ) pair.
    Angle {
        /// Config providing `[grid]`, `[omega]` and `[chi0]`.
        #[arg(long, conflicts_with_all = ["omega", "chi"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "chi")]
        omega: Option<PathBuf>,
        #[arg(long, requires = "omega")]
        chi: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DHYM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("DHYM_THREADS must be a non-negative integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Solve { config, output } => {
            let cfg = RunConfig::load(&config)?;
            let art = commands::solve(&cfg, output.as_deref())?;
            println!("residual_sup = {:.6e}", art.residual_sup);
            println!("wrote {}", art.solution.display());
            println!("wrote {}", art.report.display());
            println!("wrote {}", art.trace.display());
        }
        Command::Check { config, suite, output } => {
            let cfg = RunConfig::load(&config)?;
            let suite = suite.as_deref().map(Suite::parse).transpose()?;
            let (path, report) = commands::check(&cfg, suite, output.as_deref())?;
            print!("{}", report.to_csv());
            println!("wrote {}", path.display());
            let failures = report.failures();
            if failures > 0 {
                return Err(CliError::ChecksFailed(failures));
            }
        }
        Command::Surface { name, alpha, beta, q, c, w11, w22, m, big_m } => {
            print!("{}", commands::surface(&SurfaceArgs { name, alpha, beta, q, c, w11, w22, m, big_m })?);
        }
        Command::Region { sigma, resolution, scale, offset, output } => {
            let csv = commands::region(sigma, resolution, scale, offset)?;
            match output {
                Some(p) => std::fs::write(&p, csv).map_err(CliError::io)?,
                None => print!("{csv}"),
            }
        }
        Command::Angle { config, omega, chi } => {
            let text = match (config, omega, chi) {
                (Some(c), _, _) => commands::angle_config(&RunConfig::load(&c)?)?,
                (None, Some(o), Some(x)) => commands::angle_files(&o, &x)?,
                _ => return Err(CliError::Config("angle needs --config or both --omega and --chi".into())),
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Solver(inner) = &e {
                eprintln!("  caused by: {inner}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
