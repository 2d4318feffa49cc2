//! Car on the hill from independent uniform samples. The interesting
//! output is how many steps each policy needs to crest the hill; the
//! reward is +1 on success, -1 for falling off the left edge or
//! overspeeding, 0 everywhere else.

use forest_rl::harness::{run_batch, ExperimentConfig, Variant};

fn main() -> forest_rl::Result<()> {
    // Trimmed from the reproduction scale so the example finishes in a
    // couple of minutes; expect rougher policies than the full run gives.
    let mut config = ExperimentConfig::car_on_hill_batch(9);
    config.data.samples = 4000;
    config.q.iterations = 40;
    config.evaluation.policies = 2;

    let run = run_batch(&config, &Variant::ALL)?;
    for variant in &run.record.variants {
        print!("{:>8}:", variant.variant);
        for (rewards, steps) in variant.policy_rewards.iter().zip(&variant.policy_steps) {
            // One deterministic evaluation episode per policy.
            let outcome = if rewards[0] > 0.0 {
                format!("crest in {:>3}", steps[0])
            } else {
                "   failed  ".to_string()
            };
            print!("  [{}]", outcome);
        }
        println!();
    }
    println!("(a bang-bang controller needs 19 steps from the start state)");
    Ok(())
}
