use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use attractor_lab::plot::{render, PlotKind};
use attractor_lab::{audit_config, run_config, Failure, DEFAULT_OUT_DIR, OUT_DIR_ENV};

/// Numerical experiments for damped wave equations with time-dependent forcing.
#[derive(Parser)]
#[command(name = "attractor-lab", version)]
struct Cli {
    /// Worker threads for ensemble runs (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` and $ATTRACTOR_LAB_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the damping and nonlinearity of a config.
    Audit {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a CSV report as SVG.
    Plot {
        csv: PathBuf,
        /// energy, semidistance or cloud
        #[arg(long)]
        kind: PlotKind,
        /// Output file (default: the CSV path with an .svg extension).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, config_text: &str) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    // a config that fails to parse is reported by the runner
    if let Ok(Some(dir)) = attractor_lab::config::parse(config_text).map(|c| c.output_dir) {
        return dir;
    }
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::Schema {
                field: "--workers".into(),
                message: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let text = read(&config)?;
            let outcome = run_config(&text, &out_dir(out, &text))?;
            print!("{}", outcome.summary);
            println!("wrote {} files to {}", outcome.files.len() + 1, outcome.dir.display());
        }
        Command::Audit { config, out } => {
            let text = read(&config)?;
            let outcome = audit_config(&text, &out_dir(out, &text))?;
            print!("{}", outcome.summary);
        }
        Command::Plot { csv, kind, output } => {
            let svg = render(&read(&csv)?, kind)?;
            let target = output.unwrap_or_else(|| csv.with_extension("svg"));
            fs::write(&target, svg).map_err(|e| Failure::Io(format!("{}: {e}", target.display())))?;
            println!("wrote {}", target.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
