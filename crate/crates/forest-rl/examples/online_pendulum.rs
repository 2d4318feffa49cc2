//! Online learning on pendulum stabilization: one episode at a time, a
//! knownness forest tracking where the agent has been, and an optimistic
//! Q driving the behavior policy toward unexplored state-action pairs.

use forest_rl::harness::{run_online, ExperimentConfig};

fn main() -> forest_rl::Result<()> {
    let mut config = ExperimentConfig::pendulum_online(2);
    config.data.episodes = 12;
    config.data.max_steps = 60;
    config.q.iterations = 25;
    config.mre.refine_iterations = 4;
    config.mre.trials = 1;
    config.fpf.samples = 1500;
    config.evaluation.policies = 2;
    config.evaluation.episodes = 2;
    config.evaluation.max_steps = 500;

    let run = run_online(&config)?;
    println!("episode  steps  reward      knownness points");
    for trial in &run.record.online_trials {
        for row in &trial.episodes {
            println!(
                "{:>7}  {:>5}  {:>10.1}  {:>8}",
                row.episode, row.steps, row.cumulative_reward, row.knownness_points
            );
        }
    }
    for variant in &run.record.variants {
        if let Some(stats) = &variant.reward_stats {
            println!(
                "final policies ({}): mean reward {:.1} over {} evaluation episodes of 500 steps",
                variant.variant,
                stats.mean,
                variant.policy_rewards.iter().map(Vec::len).sum::<usize>(),
            );
        }
    }
    Ok(())
}
