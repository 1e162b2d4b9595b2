use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use marq::envs::EnvKind;
use marq::trainer::{run, run_sweep, RunSummary, Trainer, TrainerConfig, Variant};

#[derive(Parser)]
#[command(name = "marq", version, about = "Train, evaluate and verify regularized multi-agent quantile learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed.
    Train(TrainArgs),
    /// Evaluate the greedy policy stored in a checkpoint.
    Eval(EvalArgs),
    /// Train every (lambda, seed) combination.
    Sweep(SweepArgs),
    /// Run the built-in numerical self-checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single seed, replacing the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// matrix_coordination, grid_spread or corridor_keepup.
    #[arg(long)]
    env: Option<String>,
    /// iql_plain, cql_only, marq_shared or marq_xent.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Overrides {
    fn config(&self) -> Result<TrainerConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrainerConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => TrainerConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(env) = &self.env {
            cfg.env = EnvKind::from_name(env)?;
        }
        if let Some(v) = &self.variant {
            cfg.variant = v.parse::<Variant>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    /// Comma-separated penalty strengths.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 1.0, 10.0])]
    lambdas: Vec<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    /// Evaluation seed; defaults to the checkpoint's own evaluation seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn print_summary(s: &RunSummary) {
    let optimum = s.optimal_return.map(|o| format!(" optimal={o}")).unwrap_or_default();
    println!(
        "{} env={} lambda={} seed={} iterations={} steps={} eval_mean={:.4} eval_std={:.4}{optimum}",
        s.variant, s.env, s.lambda, s.seed, s.iterations, s.env_steps, s.final_eval_mean, s.final_eval_std
    );
}

fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = args.common.config()?;
    if let Some(l) = args.lambda {
        cfg.lambda = l;
        cfg.validate()?;
    }
    for &seed in &cfg.seeds {
        let out = run(&cfg, seed, args.common.out_dir.as_deref()).with_context(|| format!("seed {seed}"))?;
        print_summary(&out.summary);
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = args.common.config()?;
    let report = run_sweep(&cfg, &args.lambdas, &cfg.seeds, args.common.out_dir.as_deref())?;
    for e in &report.entries {
        match (&e.summary, &e.error) {
            (Some(s), _) => print_summary(s),
            (None, Some(err)) => println!("lambda={} seed={} FAILED: {err}", e.lambda, e.seed),
            (None, None) => {}
        }
    }
    if report.failures() > 0 {
        bail!("{} of {} runs failed", report.failures(), report.entries.len());
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let trainer = Trainer::load_checkpoint(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let episodes = args.episodes.unwrap_or(trainer.config().eval_episodes);
    let seed = args.seed.unwrap_or_else(|| trainer.eval_seed());
    let stats = trainer.evaluate_greedy(episodes, seed)?;
    println!(
        "{} env={} iteration={} episodes={episodes} eval_mean={:.4} eval_std={:.4}",
        trainer.config().variant,
        trainer.config().env.name(),
        trainer.iteration(),
        stats.mean,
        stats.std
    );
    Ok(())
}

fn verify(seed: u64) -> Result<()> {
    let checks = marq::verify::run_all(seed)?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} check(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify { seed } => verify(seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
