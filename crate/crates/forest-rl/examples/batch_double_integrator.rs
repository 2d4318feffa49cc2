//! A scaled-down batch experiment on the double integrator: collect
//! random episodes, run fitted Q iteration, extract constant-leaf and
//! affine-leaf policies, and compare their evaluation scores.

use forest_rl::harness::{run_batch, ExperimentConfig, Variant};

fn main() -> forest_rl::Result<()> {
    // Start from the full experiment and shrink it to run in seconds.
    let mut config = ExperimentConfig::double_integrator_batch(1);
    config.data.episodes = 40;
    config.q.iterations = 30;
    config.fpf.samples = 2000;
    config.fpf.pwc.min_leaf_samples = 20;
    config.fpf.pwl.min_leaf_samples = 200;
    config.evaluation.policies = 3;
    config.evaluation.episodes = 5;

    let run = run_batch(&config, &[Variant::FpfPwc, Variant::FpfPwl])?;
    for variant in &run.record.variants {
        let stats = variant.reward_stats.as_ref().expect("evaluation ran");
        println!(
            "{}: mean reward {:.1} (min {:.1}, max {:.1}) over {} policies, learned in {:.1} s",
            variant.variant,
            stats.mean,
            stats.min,
            stats.max,
            variant.policy_means.len(),
            variant.timing.learning_seconds,
        );
    }
    println!(
        "(per-step reward is -(p^2 + a^2), so a good policy reaches the origin\n cheaply and parks; breaching a state bound costs -50 and ends the episode)"
    );
    Ok(())
}
