//! Time action selection for a policy that answers straight from the Q
//! function (argmax at query time) against an extracted forest policy,
//! and print the speedup.

use forest_rl::envs::{uniform_samples, DoubleIntegrator, Environment};
use forest_rl::extra_trees::{LeafKind, LearnerParams};
use forest_rl::fqi::fitted_q_iteration;
use forest_rl::harness::time_actions;
use forest_rl::policy::{extract_policy, Policy};
use forest_rl::seeds::sub_rng;

fn main() -> forest_rl::Result<()> {
    let env = DoubleIntegrator::new();
    let mut rng = sub_rng(40, "samples", 0);
    let samples = uniform_samples(&env, 3000, &mut rng);

    // A Q of realistic size: 25 trees over the joint state-action box.
    let q = fitted_q_iteration(
        &samples,
        &env.joint_domain(),
        env.state_dim(),
        env.gamma(),
        20,
        &LearnerParams::new(40).with_trees(25).with_min_leaf_samples(4),
        50,
    )?;
    println!(
        "Q forest: {} trees, {} leaves total",
        q.forest().len(),
        q.forest().total_leaf_count()
    );

    let direct = Policy::FqiDirect(q.clone());
    let extracted = extract_policy(
        &q,
        5000,
        &LearnerParams::new(41)
            .with_trees(25)
            .with_min_leaf_samples(17)
            .with_leaf_kind(LeafKind::Constant),
        50,
        42,
    )?;

    let bounds = env.state_bounds();
    let direct_ns = time_actions(&direct, &bounds, 300, 40)?;
    let extracted_ns = time_actions(&extracted, &bounds, 300, 40)?;

    println!("argmax-at-query-time: {:>10.0} ns per action", direct_ns);
    println!("extracted policy:     {:>10.0} ns per action", extracted_ns);
    println!("speedup: {:.0}x", direct_ns / extracted_ns);
    Ok(())
}
