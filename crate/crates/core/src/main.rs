use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sce_core::harness::{self, ExperimentKind, RunConfig};
use sce_core::SceError;

#[derive(Parser)]
#[command(name = "sce", version, about = "Stochastic complete Euler laboratory on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single trajectory with energy ledger and field dumps.
    Simulate(RunArgs),
    /// Relative energy between a perturbed and a reference run.
    Compare(RunArgs),
    /// Coarse-grained defects and weak-formulation residuals.
    Defect(RunArgs),
    /// Monte-Carlo martingale statistics.
    Ensemble(RunArgs),
    /// Markov selection on a finite path-law toy.
    Select(RunArgs),
    /// Parse and validate a configuration, then print the resolved form.
    CheckConfig(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration, or a `manifest.json` from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory (defaults to the configured `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Caps the worker threads used by ensembles.
    #[arg(long)]
    threads: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
}

fn env_vars() -> Vec<(String, String)> {
    std::env::vars().filter(|(k, _)| k.starts_with(harness::ENV_PREFIX)).collect()
}

fn load(args: &CommonArgs) -> Result<RunConfig, SceError> {
    let mut cfg = match &args.config {
        Some(path) => harness::load_config(path, env_vars())?,
        None => harness::parse_config_with_env("", env_vars())?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> Result<bool, SceError> {
    let mut cfg = load(&args.common)?;
    cfg.kind = kind;
    let out = harness::resolve_out_dir(&cfg, args.out.as_deref());
    let go = || harness::run(&cfg, &out);
    let manifest = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SceError::Config(format!("--threads {n}: {e}")))?
            .install(go)?,
        None => go()?,
    };
    for c in &manifest.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    println!("manifest: {}", out.join(harness::MANIFEST_FILE).display());
    Ok(manifest.passed() && !(args.strict && !manifest.warnings.is_empty()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => execute(ExperimentKind::Simulate, a),
        Command::Compare(a) => execute(ExperimentKind::Compare, a),
        Command::Defect(a) => execute(ExperimentKind::Defect, a),
        Command::Ensemble(a) => execute(ExperimentKind::Ensemble, a),
        Command::Select(a) => execute(ExperimentKind::Select, a),
        Command::CheckConfig(a) => load(a).map(|cfg| {
            print!("{}", harness::emit_config(&cfg));
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
