//! Extract a standalone policy from a learned Q function, write it to a
//! file, read it back, and check that the round trip preserves behavior
//! byte for byte.

use forest_rl::envs::{uniform_samples, DoubleIntegrator, Environment};
use forest_rl::extra_trees::{LeafKind, LearnerParams};
use forest_rl::fqi::fitted_q_iteration;
use forest_rl::policy::{extract_policy, Policy};
use forest_rl::seeds::sub_rng;
use std::fs;

fn main() -> forest_rl::Result<()> {
    let env = DoubleIntegrator::new();
    let mut rng = sub_rng(21, "samples", 0);
    let samples = uniform_samples(&env, 1500, &mut rng);

    let q = fitted_q_iteration(
        &samples,
        &env.joint_domain(),
        env.state_dim(),
        env.gamma(),
        15,
        &LearnerParams::new(21).with_trees(10).with_min_leaf_samples(8),
        30,
    )?;

    let policy = extract_policy(
        &q,
        2000,
        &LearnerParams::new(22)
            .with_trees(10)
            .with_min_leaf_samples(10)
            .with_leaf_kind(LeafKind::Constant),
        30,
        23,
    )?;

    let path = std::env::temp_dir().join("policy_io_example.txt");
    fs::write(&path, policy.serialize()).expect("write policy file");
    let text = fs::read_to_string(&path).expect("read policy file");
    let restored = Policy::parse(&text)?;

    let mut probe_rng = sub_rng(21, "probe", 0);
    let mut max_diff: f64 = 0.0;
    for _ in 0..200 {
        let s = forest_rl::envs::uniform_point(&env.state_bounds(), &mut probe_rng);
        let a = policy.act(&s)?;
        let b = restored.act(&s)?;
        for (x, y) in a.iter().zip(&b) {
            max_diff = max_diff.max((x - y).abs());
        }
    }
    println!("wrote {} bytes to {}", text.len(), path.display());
    println!("serialize -> parse -> serialize identical: {}", restored.serialize() == text);
    println!("largest action difference over 200 probes: {}", max_diff);

    let probe = [0.5, -0.5];
    println!("action at {:?}: {:?}", probe, policy.act(&probe)?);
    Ok(())
}
