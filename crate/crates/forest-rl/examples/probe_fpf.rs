//! Scratch probe: one car-on-hill Q, many FPF extraction settings.

use forest_rl::envs::{policy_episode, uniform_samples, CarOnHill, Environment};
use forest_rl::extra_trees::{LeafKind, LearnerParams};
use forest_rl::fqi::fitted_q_iteration;
use forest_rl::policy::extract_policy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() -> forest_rl::Result<()> {
    let env = CarOnHill::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples = uniform_samples(&env, 10_000, &mut rng);
    let learner = LearnerParams::new(12)
        .with_trees(25)
        .with_split_candidates(3)
        .with_min_leaf_samples(2)
        .with_min_variance(1e-10);
    let t0 = Instant::now();
    let q = fitted_q_iteration(
        &samples,
        &env.joint_domain(),
        env.state_dim(),
        env.gamma(),
        50,
        &learner,
        50,
    )?;
    println!("q fitted in {:.0}s", t0.elapsed().as_secs_f64());

    let mut eval_rng = ChaCha8Rng::seed_from_u64(13);
    for (kind, label, count, max_leafs, n_min) in [
        (LeafKind::Constant, "pwc", 10_000, 50, 17),
        (LeafKind::Constant, "pwc", 10_000, 200, 4),
        (LeafKind::Constant, "pwc", 20_000, 200, 4),
        (LeafKind::Constant, "pwc", 20_000, 400, 2),
        (LeafKind::Linear, "pwl", 10_000, 50, 125),
        (LeafKind::Linear, "pwl", 10_000, 200, 40),
        (LeafKind::Linear, "pwl", 20_000, 200, 40),
        (LeafKind::Linear, "pwl", 20_000, 400, 20),
    ] {
        let params = LearnerParams::new(14)
            .with_trees(25)
            .with_split_candidates(2)
            .with_min_leaf_samples(n_min)
            .with_min_variance(1e-10)
            .with_leaf_kind(kind);
        let t1 = Instant::now();
        let policy = extract_policy(&q, count, &params, max_leafs, 15)?;
        let extract_s = t1.elapsed().as_secs_f64();
        let record = policy_episode(&env, &policy, 100, &mut eval_rng)?;
        let crested = record.samples.last().map(|s| s.reward > 0.0).unwrap_or(false);
        println!(
            "{label} samples {count:>5} max_leafs {max_leafs:>3} n_min {n_min:>3}: {} steps \
             (crested {crested}), extract {extract_s:.1}s",
            record.steps(),
        );
    }
    Ok(())
}
