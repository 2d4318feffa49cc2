//! Command-line front end over the experiment harness. All substance lives
//! in the library; this file parses arguments, dispatches, and prints a
//! short summary of what landed where.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use forest_rl::harness::{
    run_batch, run_online, write_batch_outputs, write_collected_samples, write_online_outputs,
    ExperimentConfig, Mode, Variant, VariantResult,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "forest-rl",
    version,
    about = "Forest-based reinforcement learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Policy representation to build: fqi, fpf-pwc or fpf-pwl
    /// (repeatable; default: all three)
    #[arg(long)]
    variant: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Collect training data per the config and write samples.csv
    Collect(RunArgs),
    /// Fit policies without evaluating them
    Learn(RunArgs),
    /// Full batch pipeline: collect, learn, evaluate, write results
    Evaluate(RunArgs),
    /// Online exploration trials with evaluation at the end
    Online(RunArgs),
    /// Measure per-action policy latency
    Time(RunArgs),
    /// Run a named canned experiment end to end
    Reproduce {
        /// One of: pendulum-batch, double-integrator, car-on-hill,
        /// pendulum-online, swing-up
        id: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Collect(a)
        | Command::Learn(a)
        | Command::Evaluate(a)
        | Command::Online(a)
        | Command::Time(a) => &a.common,
        Command::Reproduce { common, .. } => common,
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }

    match cli.command {
        Command::Collect(args) => {
            let config = load_config(&args)?;
            let n = write_collected_samples(&config, &args.common.out)?;
            println!(
                "wrote {n} samples to {}",
                args.common.out.join("samples.csv").display()
            );
        }
        Command::Learn(args) => {
            let mut config = load_config(&args)?;
            config.evaluation.episodes = 0;
            let variants = parse_variants(&args.variant)?;
            let run = run_batch(&config, &variants)?;
            write_batch_outputs(&run, &config, &args.common.out)?;
            for v in &run.record.variants {
                println!(
                    "{}: {} policies in {:.1} s",
                    v.variant,
                    v.policy_rewards.len(),
                    v.timing.learning_seconds
                );
            }
            println!("results in {}", args.common.out.display());
        }
        Command::Evaluate(args) => {
            let config = load_config(&args)?;
            let variants = parse_variants(&args.variant)?;
            let run = run_batch(&config, &variants)?;
            write_batch_outputs(&run, &config, &args.common.out)?;
            print_variant_summaries(&run.record.variants);
            println!("results in {}", args.common.out.display());
        }
        Command::Online(args) => {
            if !args.variant.is_empty() {
                bail!(
                    "the online behavior representation comes from the config's \
                     [mre] behavior key, not --variant"
                );
            }
            let config = load_config(&args)?;
            let experiment = run_online(&config)?;
            write_online_outputs(&experiment, &config, &args.common.out)?;
            print_variant_summaries(&experiment.record.variants);
            println!("results in {}", args.common.out.display());
        }
        Command::Time(args) => {
            let mut config = load_config(&args)?;
            config.evaluation.episodes = 0;
            config.evaluation.policies = 1;
            let variants = parse_variants(&args.variant)?;
            let run = run_batch(&config, &variants)?;
            write_batch_outputs(&run, &config, &args.common.out)?;
            for v in &run.record.variants {
                println!(
                    "{}: {:.2} us per action",
                    v.variant,
                    v.timing.mean_action_nanos / 1000.0
                );
            }
        }
        Command::Reproduce { id, common } => {
            let config = ExperimentConfig::canned(&id, common.seed.unwrap_or(1))?;
            let out = common.out.join(&id);
            match config.mode {
                Mode::Batch => {
                    // the car-on-hill episodes are short enough to afford
                    // the slow direct-argmax variant; the long-horizon
                    // problems stick to the fitted policy forests
                    let variants: &[Variant] = if config.problem.id() == "car-on-hill" {
                        &Variant::ALL
                    } else {
                        &[Variant::FpfPwc, Variant::FpfPwl]
                    };
                    let run = run_batch(&config, variants)?;
                    write_batch_outputs(&run, &config, &out)?;
                    print_variant_summaries(&run.record.variants);
                }
                Mode::Online => {
                    let experiment = run_online(&config)?;
                    write_online_outputs(&experiment, &config, &out)?;
                    print_variant_summaries(&experiment.record.variants);
                }
            }
            println!("results in {}", out.display());
        }
    }
    Ok(())
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(Path::new(&args.config))?;
    if let Some(seed) = args.common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn parse_variants(raw: &[String]) -> Result<Vec<Variant>> {
    if raw.is_empty() {
        return Ok(Variant::ALL.to_vec());
    }
    raw.iter()
        .map(|s| Variant::parse(s).map_err(Into::into))
        .collect()
}

fn print_variant_summaries(variants: &[VariantResult]) {
    for v in variants {
        match &v.reward_stats {
            Some(stats) => println!(
                "{}: mean {:.1} (95% half-width {:.1}, min {:.1}, max {:.1}) over {} policies",
                v.variant,
                stats.mean,
                stats.half_width_95,
                stats.min,
                stats.max,
                v.policy_means.len()
            ),
            None => println!("{}: no evaluation episodes", v.variant),
        }
    }
}
