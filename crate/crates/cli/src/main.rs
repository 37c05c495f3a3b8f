use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use qutrit_ctrl::{commands, load_config, write_result, CliError, Command, JobConfig, RunInfo};

/// Superadiabatic STIRAP qutrit experiments.
#[derive(Parser, Debug)]
#[command(name = "qutrit-ctrl", version)]
struct Args {
    command: Command,
    /// JSON job file.
    #[arg(long, required_unless_present = "print_config")]
    config: Option<PathBuf>,
    /// Output directory; overrides the job's `output` (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// RNG seed; overrides the job's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the default job for the command and exit.
    #[arg(long)]
    print_config: bool,
}

fn execute(args: Args) -> Result<(), CliError> {
    if args.print_config {
        println!("{}", JobConfig::default_for(args.command).to_json());
        return Ok(());
    }
    let path = args.config.expect("clap enforces --config");
    let mut job = load_config(&path)?;
    if job.command != args.command {
        return Err(CliError::Config(format!("command: job file is for {}, invoked as {}", job.command, args.command)));
    }
    if let Some(s) = args.seed {
        job.seed = s;
    }
    let dir = args.out.or_else(|| job.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| commands::run(&job))?;
    let info = RunInfo { wall_time: start.elapsed(), threads: pool.current_num_threads() };
    for p in write_result(&out, &job, &dir, &info)? {
        log::info!("wrote {}", p.display());
    }
    println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qutrit-ctrl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
