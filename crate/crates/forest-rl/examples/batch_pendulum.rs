//! A scaled-down batch run on pendulum stabilization. Random episodes
//! end quickly (the pole falls), so the dataset is many short episodes;
//! a good policy then balances for the whole evaluation horizon.

use forest_rl::harness::{run_batch, ExperimentConfig, Variant};

fn main() -> forest_rl::Result<()> {
    let mut config = ExperimentConfig::pendulum_batch(5);
    config.data.episodes = 60;
    config.q.iterations = 40;
    config.fpf.samples = 3000;
    config.evaluation.policies = 3;
    config.evaluation.episodes = 3;
    config.evaluation.max_steps = 500;

    let run = run_batch(&config, &[Variant::FpfPwc, Variant::FpfPwl])?;
    for variant in &run.record.variants {
        let stats = variant.reward_stats.as_ref().expect("evaluation ran");
        let steps: Vec<usize> = variant
            .policy_steps
            .iter()
            .flat_map(|row| row.iter().copied())
            .collect();
        let held = steps.iter().filter(|&&s| s == 500).count();
        println!(
            "{}: mean reward {:.1}, held the pole for all 500 steps in {}/{} episodes",
            variant.variant,
            stats.mean,
            held,
            steps.len(),
        );
    }
    println!("(per-step reward is minus the squared angle, speed and force;");
    println!(" leaving the upright half-circle costs -1000 and ends the episode)");
    Ok(())
}
