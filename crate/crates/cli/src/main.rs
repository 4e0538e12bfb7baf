use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use codenet_cli::curves::{self, CurveOptions};
use codenet_cli::train::{self, TrainOptions};
use codenet_cli::{verify, CliError, ExperimentConfig, EXIT_FAILED_CHECK, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "codenet",
    version,
    about = "Coded error-resilient model-parallel training simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training experiment.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected-time ratio of replication over the coded scheme.
    ModelCurves {
        #[arg(long, default_value_t = 0.1)]
        lambda_min: f64,
        #[arg(long, default_value_t = 10.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 1.0)]
        tau_f: f64,
        #[arg(long, default_value_t = 1000.0)]
        tau_b: f64,
        #[arg(long, default_value_t = 1000.0)]
        tau_cpt: f64,
        #[arg(long, default_value_t = 2000)]
        iters: u64,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Random correction trials for Cauchy codes.
    VerifyCodec {
        /// Message blocks; with --t, checks a single code instead of the
        /// default set (2,1), (3,1), (4,2).
        #[arg(long, requires = "t")]
        k: Option<usize>,
        #[arg(long, requires = "k")]
        t: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 8)]
        block: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Train {
            config,
            resume,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = train::run(cfg, &TrainOptions { resume, seed, out })?;
            let s = &report.summary;
            println!(
                "{}{}: {} iterations, {} clean, {} corrected, {} rollbacks, coarse time {}, accuracy {}",
                report.strategy,
                if s.completed { "" } else { " (attempt cap reached)" },
                s.iterations,
                s.clean,
                s.corrected,
                s.rollbacks,
                s.coarse_time,
                s.final_accuracy
                    .map(|a| format!("{a:.4}"))
                    .unwrap_or_else(|| "-".into())
            );
            Ok(EXIT_OK)
        }
        Command::ModelCurves {
            lambda_min,
            lambda_max,
            points,
            tau_f,
            tau_b,
            tau_cpt,
            iters,
            out,
            svg,
        } => {
            let opts = CurveOptions {
                lambda_min,
                lambda_max,
                points,
                tau_f,
                tau_b,
                tau_cpt,
                iterations: iters,
            };
            let rows = curves::rows(&opts)?;
            let csv = curves::csv(&rows);
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(p) = svg {
                write(&p, &curves::svg(&rows))?;
            }
            Ok(EXIT_OK)
        }
        Command::VerifyCodec {
            k,
            t,
            trials,
            block,
            seed,
        } => {
            let cases = match (k, t) {
                (Some(k), Some(t)) => vec![(k, t)],
                _ => vec![(2, 1), (3, 1), (4, 2)],
            };
            let rows = verify::run(&cases, trials, block, seed)?;
            print!("{}", verify::table(&rows));
            Ok(if rows.iter().all(verify::VerifyRow::pass) {
                EXIT_OK
            } else {
                EXIT_FAILED_CHECK
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
