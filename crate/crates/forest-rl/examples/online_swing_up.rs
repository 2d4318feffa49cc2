//! Online learning on pendulum swing-up. The torque limit rules out a
//! direct lift, so random exploration rarely sees the upright region;
//! the optimistic bonus is what pulls the behavior policy into it.

use forest_rl::envs::{policy_episode, Environment, PendulumSwingUp};
use forest_rl::harness::{run_online, ExperimentConfig};
use forest_rl::seeds::sub_rng;

fn main() -> forest_rl::Result<()> {
    let mut config = ExperimentConfig::swing_up_online(4);
    config.data.episodes = 20;
    config.q.iterations = 25;
    config.mre.refine_iterations = 4;
    config.fpf.samples = 1500;
    config.evaluation.policies = 2;
    config.evaluation.episodes = 2;

    let run = run_online(&config)?;
    let last = run.record.online_trials[0]
        .episodes
        .last()
        .expect("at least one episode");
    println!(
        "{} exploration episodes, {} knownness points, last episode reward {:.1}",
        run.record.online_trials[0].episodes.len(),
        last.knownness_points,
        last.cumulative_reward
    );

    // Replay the best final policy and report how close to upright it gets.
    let best = run.trials[0]
        .policies
        .first()
        .expect("policies were extracted");
    let env = PendulumSwingUp::new();
    let mut rng = sub_rng(4, "replay", 0);
    let episode = policy_episode(&env, best, env.max_episode_steps(), &mut rng)?;
    let closest = episode
        .samples
        .iter()
        .map(|s| s.state[0].abs())
        .fold(f64::INFINITY, f64::min);
    println!(
        "replayed one policy for {} steps: closest approach to upright {:.2} rad, reward {:.1}",
        episode.steps(),
        closest,
        episode.cumulative_reward
    );
    println!("(theta = 0 is upright; the rod starts hanging at pi)");
    Ok(())
}
