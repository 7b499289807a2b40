use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotnbody::choreography::ExportFormat;
use rotnbody::cli::{self, CliError, Options, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFIED};

#[derive(Parser)]
#[command(
    name = "rotnbody",
    version,
    about = "Torus-knot choreographies of the rotating n-body problem"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON); for `table`, a JSON array of configs or config paths
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's output_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trajectory samples per closed loop
    #[arg(long, global = true, default_value_t = 4096)]
    samples: usize,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency, period and resonance data
    Info,
    /// Newton-refine the seed and write the coefficients
    Solve,
    /// Refine, validate and write certificate plus trajectories
    Prove,
    /// Prove every row of a table file
    Table,
    /// Write trajectories of the seed coefficients
    Export {
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn run(args: Args) -> Result<i32, CliError> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = args
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let out = args.out.as_deref();
    let opts = Options {
        samples: args.samples,
        write: true,
    };
    match args.command {
        Command::Info => {
            println!("{}", cli::cmd_info(&cli::load_config(config)?));
            Ok(EXIT_VERIFIED)
        }
        Command::Solve => {
            let cfg = cli::load_config(config)?;
            let solved = cli::cmd_solve(&cfg)?;
            for w in &solved.seed.warnings {
                eprintln!("warning: {w}");
            }
            for (i, r) in solved.report.residuals.iter().enumerate() {
                println!("newton {i}: residual {r:.3e}");
            }
            let dir = out
                .map(PathBuf::from)
                .or(cfg.output_dir.clone())
                .unwrap_or_else(|| "out".into())
                .join(cfg.label());
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("xbar.json");
            rotnbody::solver::write_coeff_file(&path, &cfg.params(), &solved.xbar, Some(&solved.reference)).map_err(|e| {
                CliError::Numerical {
                    stage: "write",
                    message: e.to_string(),
                }
            })?;
            println!("wrote {}", path.display());
            Ok(EXIT_VERIFIED)
        }
        Command::Prove => {
            let outcome = cli::cmd_prove(&cli::load_config(config)?, out, opts)?;
            print!("{outcome}");
            Ok(outcome.exit_code())
        }
        Command::Table => {
            let cfgs = cli::load_config_set(config)?;
            let report = cli::cmd_table(&cfgs, out, opts);
            print!("{report}");
            Ok(report.exit_code())
        }
        Command::Export { format } => {
            let format: ExportFormat = format
                .parse()
                .map_err(|e: rotnbody::choreography::ChoreographyError| CliError::Config(e.to_string()))?;
            let outcome = cli::cmd_export(&cli::load_config(config)?, out, args.samples, format)?;
            match outcome.knot {
                Ok(k) => println!("knot: {:?} torus type {:?}", k, k.torus_type()),
                Err(e) => println!("knot: {e}"),
            }
            for p in outcome.written {
                println!("wrote {}", p.display());
            }
            Ok(EXIT_VERIFIED)
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors, not numerical ones
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let code = match run(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code.clamp(0, EXIT_NUMERICAL + 1) as u8)
}
