//! Batch experiments: collect training data, fit Q, build policies per
//! representation, evaluate them, and emit the results.

use crate::envs::{policy_episode, random_episode, uniform_samples, Environment};
use crate::error::{Error, Result};
use crate::fqi::{fitted_q_iteration, write_samples_csv, Sample};
use crate::harness::config::{ExperimentConfig, Mode, Variant};
use crate::harness::record::{
    hash_hex, write_rewards_csv, write_steps_csv, write_timing_csv, ResultRecord, TimingBlock,
    VariantResult,
};
use crate::harness::timing::time_actions;
use crate::policy::{extract_policy, Policy};
use crate::seeds::{sub_rng, sub_seed};
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

#[derive(Debug)]
pub struct VariantPolicies {
    pub variant: Variant,
    pub policies: Vec<Policy>,
}

#[derive(Debug)]
pub struct BatchRun {
    pub record: ResultRecord,
    pub policies: Vec<VariantPolicies>,
}

/// Training data for one policy: uniform one-step samples when
/// `data.samples` is set, otherwise random-action episodes.
pub fn collect_training_data(
    env: &dyn Environment,
    config: &ExperimentConfig,
    data_seed: u64,
) -> Vec<Sample> {
    if config.data.samples > 0 {
        let mut rng = sub_rng(data_seed, "collect-uniform", 0);
        uniform_samples(env, config.data.samples, &mut rng)
    } else {
        let mut samples = Vec::new();
        for e in 0..config.data.episodes {
            let mut rng = sub_rng(data_seed, "collect-episode", e as u64);
            samples.extend(random_episode(env, config.data.max_steps, &mut rng));
        }
        samples
    }
}

fn policy_seed_labels(variant: Variant) -> (&'static str, &'static str) {
    match variant {
        Variant::Fqi => ("", ""),
        Variant::FpfPwc => ("fpf-pwc-learner", "fpf-pwc-cloud"),
        Variant::FpfPwl => ("fpf-pwl-learner", "fpf-pwl-cloud"),
    }
}

/// Run the full batch pipeline. Each of the `evaluation.policies` policies
/// gets its own training set and Q fit (fresh sub-seeds), then every
/// requested representation is built from that shared Q and evaluated over
/// the configured episode grid. Evaluation episode randomness depends only
/// on the (policy, episode) index, so representations face identical
/// conditions. `learning_seconds` of a fitted-policy variant includes the
/// shared data collection and Q fit it builds on.
pub fn run_batch(config: &ExperimentConfig, variants: &[Variant]) -> Result<BatchRun> {
    if config.mode != Mode::Batch {
        return Err(Error::Config(
            "run_batch needs a config with mode = batch".into(),
        ));
    }
    config.validate()?;
    if variants.is_empty() {
        return Err(Error::Config("no variants requested".into()));
    }
    for (i, v) in variants.iter().enumerate() {
        if variants[..i].contains(v) {
            return Err(Error::Config(format!("variant {} requested twice", v.id())));
        }
    }

    let env = config.environment();
    let env = env.as_ref();
    let domain = env.joint_domain();
    let state_dim = env.state_dim();
    let seed = config.seed;
    let policy_count = config.evaluation.policies;

    let mut q_seconds = 0.0;
    let mut fit_seconds = vec![0.0f64; variants.len()];
    let mut policies: Vec<VariantPolicies> = variants
        .iter()
        .map(|&variant| VariantPolicies {
            variant,
            policies: Vec::with_capacity(policy_count),
        })
        .collect();

    for p in 0..policy_count {
        let started = Instant::now();
        let samples =
            collect_training_data(env, config, sub_seed(seed, "policy-data", p as u64));
        let q_learner = config
            .q
            .learner(domain.dim(), sub_seed(seed, "policy-q", p as u64));
        let q = fitted_q_iteration(
            &samples,
            &domain,
            state_dim,
            env.gamma(),
            config.q.iterations,
            &q_learner,
            config.q.max_leafs,
        )?;
        q_seconds += started.elapsed().as_secs_f64();

        for (vi, &variant) in variants.iter().enumerate() {
            let started = Instant::now();
            let policy = match variant {
                Variant::Fqi => Policy::FqiDirect(q.clone()),
                fpf => {
                    let (learner_label, cloud_label) = policy_seed_labels(fpf);
                    let learner = config.fpf_learner(
                        fpf,
                        state_dim,
                        sub_seed(seed, learner_label, p as u64),
                    )?;
                    extract_policy(
                        &q,
                        config.fpf.samples,
                        &learner,
                        config.fpf.max_leafs,
                        sub_seed(seed, cloud_label, p as u64),
                    )?
                }
            };
            fit_seconds[vi] += started.elapsed().as_secs_f64();
            policies[vi].policies.push(policy);
        }
    }

    let mut results = Vec::with_capacity(variants.len());
    for (vi, group) in policies.iter().enumerate() {
        let started = Instant::now();
        let grids: Result<Vec<(Vec<f64>, Vec<usize>)>> = group
            .policies
            .par_iter()
            .enumerate()
            .map(|(p, policy)| {
                evaluate_policy(
                    env,
                    policy,
                    config.evaluation.episodes,
                    config.evaluation.max_steps,
                    sub_seed(seed, "evaluate-policy", p as u64),
                )
            })
            .collect();
        let grids = grids?;
        let evaluation_seconds = started.elapsed().as_secs_f64();
        let mean_action_nanos = time_actions(
            &group.policies[0],
            &env.state_bounds(),
            config.evaluation.timing_actions,
            sub_seed(seed, "timing", 0),
        )?;
        let (rewards, steps) = grids.into_iter().unzip();
        results.push(VariantResult::from_grids(
            group.variant.id(),
            rewards,
            steps,
            TimingBlock {
                learning_seconds: q_seconds + fit_seconds[vi],
                evaluation_seconds,
                mean_action_nanos,
            },
        ));
    }

    let record = ResultRecord {
        config_hash: hash_hex(config.serialize().as_bytes()),
        problem: config.problem.id().to_string(),
        mode: config.mode.id().to_string(),
        seed,
        variants: results,
        online_trials: Vec::new(),
    };
    Ok(BatchRun { record, policies })
}

/// Reward and step-count rows for one policy. Episode randomness comes only
/// from `eval_seed` and the episode index.
pub fn evaluate_policy(
    env: &dyn Environment,
    policy: &Policy,
    episodes: usize,
    max_steps: usize,
    eval_seed: u64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut rewards = Vec::with_capacity(episodes);
    let mut steps = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut rng = sub_rng(eval_seed, "evaluate-episode", e as u64);
        let record = policy_episode(env, policy, max_steps, &mut rng)?;
        rewards.push(record.cumulative_reward);
        steps.push(record.samples.len());
    }
    Ok((rewards, steps))
}

/// Write the run's files under `out`: the config used, `results.json`, the
/// raw CSVs, every fitted-policy file, and the first Q-direct policy (those
/// embed the whole Q forest, so one copy documents it).
pub fn write_batch_outputs(
    run: &BatchRun,
    config: &ExperimentConfig,
    out: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    config.to_file(&out.join("config.conf"))?;
    run.record.write_json(&out.join("results.json"))?;
    write_rewards_csv(&out.join("rewards.csv"), &run.record.variants)?;
    write_steps_csv(&out.join("steps.csv"), &run.record.variants)?;
    write_timing_csv(&out.join("timing.csv"), &run.record.variants)?;
    for group in &run.policies {
        let keep = match group.variant {
            Variant::Fqi => 1,
            _ => group.policies.len(),
        };
        for (p, policy) in group.policies.iter().take(keep).enumerate() {
            let path = out.join(format!("policy-{}-{p}.txt", group.variant.id()));
            std::fs::write(&path, policy.serialize())
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

/// The `collect` pipeline: training data for policy 0, dumped as CSV.
/// Returns how many samples were written.
pub fn write_collected_samples(config: &ExperimentConfig, out: &Path) -> Result<usize> {
    config.validate()?;
    let env = config.environment();
    let samples = collect_training_data(env.as_ref(), config, sub_seed(config.seed, "policy-data", 0));
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join("samples.csv");
    let mut buffer = Vec::new();
    write_samples_csv(&samples, &mut buffer)?;
    std::fs::write(&path, buffer)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(samples.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::record::read_rewards_csv;

    fn tiny_di_config(seed: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::double_integrator_batch(seed);
        c.data.episodes = 4;
        c.data.max_steps = 25;
        c.q.trees = 5;
        c.q.min_leaf_samples = 8;
        c.q.iterations = 3;
        c.q.max_leafs = 8;
        c.fpf.samples = 60;
        c.fpf.max_leafs = 8;
        c.fpf.pwc.min_leaf_samples = 10;
        c.fpf.pwl.min_leaf_samples = 20;
        c.evaluation.policies = 2;
        c.evaluation.episodes = 2;
        c.evaluation.max_steps = 30;
        c.evaluation.timing_actions = 50;
        c
    }

    #[test]
    fn a_small_batch_run_produces_full_grids_and_is_deterministic() {
        let config = tiny_di_config(23);
        let run = run_batch(&config, &Variant::ALL).unwrap();
        assert_eq!(run.record.variants.len(), 3);
        assert_eq!(run.record.config_hash.len(), 16);
        assert!(run.record.online_trials.is_empty());
        for (group, result) in run.policies.iter().zip(&run.record.variants) {
            assert_eq!(group.policies.len(), 2);
            assert_eq!(result.policy_rewards.len(), 2);
            assert!(result.policy_rewards.iter().all(|row| row.len() == 2));
            assert_eq!(result.policy_means.len(), 2);
            assert!(result.reward_stats.is_some());
            assert!(result.timing.mean_action_nanos > 0.0);
            assert!(result
                .policy_rewards
                .iter()
                .flatten()
                .all(|r| r.is_finite() && *r <= 0.0));
        }

        let again = run_batch(&config, &Variant::ALL).unwrap();
        for (a, b) in run.record.variants.iter().zip(&again.record.variants) {
            assert_eq!(a.policy_rewards, b.policy_rewards);
            assert_eq!(a.policy_steps, b.policy_steps);
        }
    }

    #[test]
    fn variants_share_training_and_evaluation_randomness() {
        let config = tiny_di_config(29);
        let all = run_batch(&config, &Variant::ALL).unwrap();
        let only_pwl = run_batch(&config, &[Variant::FpfPwl]).unwrap();
        let pwl_in_all = all
            .record
            .variants
            .iter()
            .find(|v| v.variant == "fpf-pwl")
            .unwrap();
        assert_eq!(pwl_in_all.policy_rewards, only_pwl.record.variants[0].policy_rewards);
    }

    #[test]
    fn zero_evaluation_episodes_skip_evaluation_but_keep_timing() {
        let mut config = tiny_di_config(31);
        config.evaluation.episodes = 0;
        let run = run_batch(&config, &[Variant::FpfPwc]).unwrap();
        let v = &run.record.variants[0];
        assert!(v.policy_rewards.iter().all(|row| row.is_empty()));
        assert!(v.policy_means.is_empty());
        assert!(v.reward_stats.is_none());
        assert!(v.timing.learning_seconds > 0.0);
        assert!(v.timing.mean_action_nanos > 0.0);
    }

    #[test]
    fn outputs_land_on_disk_and_stats_recompute_from_the_raw_rows() {
        let config = tiny_di_config(37);
        let run = run_batch(&config, &[Variant::FpfPwc, Variant::FpfPwl]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_batch_outputs(&run, &config, dir.path()).unwrap();
        for name in [
            "config.conf",
            "results.json",
            "rewards.csv",
            "steps.csv",
            "timing.csv",
            "policy-fpf-pwc-0.txt",
            "policy-fpf-pwc-1.txt",
            "policy-fpf-pwl-1.txt",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }

        let rows = read_rewards_csv(&dir.path().join("rewards.csv")).unwrap();
        for result in &run.record.variants {
            for (p, episodes) in result.policy_rewards.iter().enumerate() {
                let from_csv: Vec<f64> = rows
                    .iter()
                    .filter(|(v, rp, _, _)| *v == result.variant && *rp == p)
                    .map(|(_, _, _, r)| *r)
                    .collect();
                assert_eq!(&from_csv, episodes, "exact CSV round trip");
                let mean = from_csv.iter().sum::<f64>() / from_csv.len() as f64;
                assert!((mean - result.policy_means[p]).abs() < 1e-9);
            }
        }

        let parsed = ResultRecord::from_json(
            &std::fs::read_to_string(dir.path().join("results.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed, run.record);
    }

    #[test]
    fn collect_writes_a_readable_sample_dump() {
        let config = tiny_di_config(43);
        let dir = tempfile::tempdir().unwrap();
        write_collected_samples(&config, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
        let parsed = crate::fqi::read_samples_csv(text.as_bytes()).unwrap();
        let env = config.environment();
        let direct = collect_training_data(
            env.as_ref(),
            &config,
            crate::seeds::sub_seed(config.seed, "policy-data", 0),
        );
        assert_eq!(parsed.len(), direct.len());
        assert!(!parsed.is_empty());
    }

    #[test]
    fn bad_requests_are_rejected_before_any_work() {
        let online = ExperimentConfig::pendulum_online(1);
        assert!(run_batch(&online, &Variant::ALL).is_err());
        let config = tiny_di_config(3);
        assert!(run_batch(&config, &[]).is_err());
        assert!(run_batch(&config, &[Variant::Fqi, Variant::Fqi]).is_err());
    }
}
