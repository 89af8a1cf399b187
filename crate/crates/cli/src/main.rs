use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use treedg_cli::bench::DEFAULT_REPEATS;
use treedg_cli::output::comment_header;
use treedg_cli::setup::with_threads;
use treedg_cli::{bench, convergence, export, run, BenchReport, CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "treedg", version, about = "Adaptive DG spectral element solver for hyperbolic conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory (default: `output.directory` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run at several refinement levels and print an EOC table.
    Convergence {
        config: PathBuf,
        /// Comma-separated refinement levels.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the PID (time per DOF and rhs evaluation).
    Bench {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Convert a state file to VTK, CSV or PPM.
    Export {
        statefile: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Output file (default: the state file with the format's extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Vtk,
    Csv,
    Ppm,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Self::Vtk => "vtk",
            Self::Csv => "csv",
            Self::Ppm => "ppm",
        }
    }
}

fn out_dir(config: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&config.output.directory))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, out, threads } => {
            let config = RunConfig::from_path(&config)?;
            let dir = out_dir(&config, out);
            let summary = with_threads(threads, || run(&config, &dir))??;
            let eq = config.equation_set()?;
            print!("{}", summary.render(eq.conserved_names()));
        }
        Command::Convergence { config, levels, out } => {
            let config = RunConfig::from_path(&config)?;
            let report = convergence(&config, &levels)?;
            print!("{}", report.table());
            let path = out_dir(&config, out).join("convergence.csv");
            let mut text = comment_header(&config.render(), config.time.t_end);
            text.push_str(&report.csv());
            write(&path, &text)?;
            println!("wrote {}", path.display());
        }
        Command::Bench { config, repeats, threads } => {
            let config = RunConfig::from_path(&config)?;
            let report = bench(&config, repeats, threads)?;
            print!("{}", report.summary());
            println!("{}", BenchReport::CSV_HEADER);
            println!("{}", report.csv_row());
        }
        Command::Export { statefile, format, out } => {
            for path in export(&statefile, format.name(), out.as_deref())? {
                println!("wrote {}", path.display());
            }
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
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
