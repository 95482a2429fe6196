use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semloc::eval::{compute_rpe, EvalError, Trajectory};
use semloc::pipeline::{
    init_success_rate, run_sequence, spread_starts, write_sequence, Config, DirSequence, PipelineError,
};
use semloc::sim::FrameSource;

/// Map-based camera localization on simulated or recorded sequences.
#[derive(Parser)]
#[command(name = "semloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured world and write a sequence directory.
    Gen { config: PathBuf, out_dir: PathBuf },
    /// Localize over a sequence and write trajectory, logs and RPE report.
    Run { config: PathBuf },
    /// Relative pose error of an estimated trajectory against a reference.
    Eval {
        estimate: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value_t = 5)]
        interval: usize,
        /// Also write the per-pair errors as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Share of start frames that reach tracking within the budget.
    InitRate {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        budget: usize,
        /// Number of start frames (defaults to the config value).
        #[arg(long)]
        starts: Option<usize>,
    },
}

/// Exit status per error category.
fn exit_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Config(_) => 2,
        PipelineError::SequenceNotFound(_) => 3,
        PipelineError::InitializationFailed { .. } => 4,
        PipelineError::Eval(EvalError::NoAssociations) => 5,
        _ => 1,
    }
}

fn open_source(cfg: &Config) -> Result<Box<dyn FrameSource>, PipelineError> {
    Ok(match &cfg.run.sequence {
        Some(dir) => Box::new(DirSequence::open(dir)?),
        None => Box::new(cfg.simulate()?),
    })
}

fn load_trajectory(path: &Path) -> Result<Trajectory, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::SequenceNotFound(path.to_path_buf()));
    }
    Ok(Trajectory::load(path)?)
}

fn execute(cmd: Command) -> Result<(), PipelineError> {
    match cmd {
        Command::Gen { config, out_dir } => {
            let cfg = Config::load(&config)?;
            let seq = cfg.simulate()?;
            write_sequence(&seq, &out_dir)?;
            println!("wrote {} frames from {} camera(s) to {}", seq.frames.len(), seq.cameras.len(), out_dir.display());
        }
        Command::Run { config } => {
            let cfg = Config::load(&config)?;
            let source = open_source(&cfg)?;
            let out = run_sequence(source.as_ref(), &cfg.pipeline())?;
            let rpe = out.rpe(cfg.run.rpe_interval)?;
            out.write(&cfg.run.output, Some(&rpe))?;
            for t in &out.transitions {
                println!("frame {:5}: {} -> {}", t.frame, t.from, t.to);
            }
            print!("{}", rpe.summary());
            println!("mean tracking time: {:.2} ms/frame", out.mean_tracking_ms());
            println!("outputs in {}", cfg.run.output.display());
        }
        Command::Eval { estimate, reference, interval, csv } => {
            let est = load_trajectory(&estimate)?;
            let reference = load_trajectory(&reference)?;
            let rpe = compute_rpe(&est, &reference, interval)?;
            if let Some(path) = csv {
                std::fs::write(path, rpe.to_csv())?;
            }
            print!("{}", rpe.summary());
        }
        Command::InitRate { config, budget, starts } => {
            let cfg = Config::load(&config)?;
            let source = open_source(&cfg)?;
            let starts = spread_starts(source.len(), budget, starts.unwrap_or(cfg.run.init_starts));
            let rate = init_success_rate(source.as_ref(), &cfg.pipeline(), budget, &starts)?;
            println!("initialization success within {budget} frames: {:.1}% of {} starts", 100.0 * rate, starts.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
