use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use nonlocal_atlas::cli;
use nonlocal_atlas::config::RunConfig;
use nonlocal_atlas::AtlasError;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    /// Tabulate Q(s) = g(w_s)
    Qcurve,
    /// Thresholds, fixed points and solutions per window
    Analyze,
    /// Closed-form analysis for f(t) = t^{p-1}
    Powerlike,
    /// Analytic bounds on Q and on the thresholds
    Bounds,
}

#[derive(Parser)]
#[command(name = "nonlocal-atlas", version, about = "Solution atlas for -a(g(u)) Δu = λ f(u)")]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML or JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the inline checks and exit with status 4 if any fails
    #[arg(long)]
    verify: bool,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = RunConfig::load(&args.config).and_then(|cfg| {
        let out = args.out.as_deref();
        match args.command {
            Cmd::Qcurve => cli::cmd_qcurve(&cfg, out, args.verify),
            Cmd::Analyze => cli::cmd_analyze(&cfg, out, args.verify),
            Cmd::Powerlike => cli::cmd_powerlike(&cfg, out, args.verify),
            Cmd::Bounds => cli::cmd_bounds(&cfg, out, args.verify),
        }
    });
    let code = cli::exit_code(&result);
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
        }
        Err(e @ AtlasError::Verification(_)) => eprintln!("verify: {e}"),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(code as u8)
}
