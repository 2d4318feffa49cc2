//! Online experiments: exploration-driven learning trials plus the final
//! policy generation and evaluation grid.

use crate::error::{Error, Result};
use crate::exploration::{online_learn, OnlineParams};
use crate::extra_trees::LeafKind;
use crate::harness::batch::evaluate_policy;
use crate::harness::config::{ExperimentConfig, Mode, Variant};
use crate::harness::record::{
    hash_hex, write_online_trial_csv, write_rewards_csv, write_steps_csv, write_timing_csv,
    write_trajectory_csv, EpisodeRow, ResultRecord, TimingBlock, TrialCurve, VariantResult,
};
use crate::harness::timing::time_actions;
use crate::policy::{extract_policy, Policy};
use crate::seeds::{sub_rng, sub_seed};
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

#[derive(Debug)]
pub struct TrialPolicies {
    pub trial: usize,
    pub policies: Vec<Policy>,
}

#[derive(Debug)]
pub struct OnlineExperiment {
    pub record: ResultRecord,
    pub trials: Vec<TrialPolicies>,
}

fn behavior_variant(kind: LeafKind) -> Variant {
    match kind {
        LeafKind::Constant => Variant::FpfPwc,
        LeafKind::Linear => Variant::FpfPwl,
    }
}

/// Run `mre.trials` independent online learning runs. Each trial interacts
/// for `data.episodes` episodes, then fits `evaluation.policies` policies
/// from its final plain Q (fresh sub-seeds per policy) and evaluates each
/// over the episode grid. Policies pool across trials in the result, so the
/// reward distribution reflects both within-trial and across-trial spread.
pub fn run_online(config: &ExperimentConfig) -> Result<OnlineExperiment> {
    if config.mode != Mode::Online {
        return Err(Error::Config(
            "run_online needs a config with mode = online".into(),
        ));
    }
    config.validate()?;

    let env = config.environment();
    let env = env.as_ref();
    let domain = env.joint_domain();
    let state_dim = env.state_dim();
    let seed = config.seed;
    let kind = config.mre.behavior;
    let variant = behavior_variant(kind);
    let block = match kind {
        LeafKind::Constant => &config.fpf.pwc,
        LeafKind::Linear => &config.fpf.pwl,
    };

    let mut curves = Vec::with_capacity(config.mre.trials);
    let mut trials = Vec::with_capacity(config.mre.trials);
    let mut learning_seconds = 0.0;
    for trial in 0..config.mre.trials {
        let trial_seed = sub_seed(seed, "online-trial", trial as u64);
        let params = OnlineParams {
            episode_steps: config.data.max_steps,
            // per-fit seeds are derived from `seed` below by the online loop
            q_learner: config.q.learner(domain.dim(), 0),
            q_iterations_full: config.q.iterations,
            q_iterations_refine: config.mre.refine_iterations,
            q_max_leafs: config.q.max_leafs,
            behavior_learner: block.learner(state_dim, kind, 0),
            behavior_samples: config.fpf.samples,
            behavior_max_leafs: config.fpf.max_leafs,
            knownness: config.mre.knownness(0),
            seed: trial_seed,
        };
        let started = Instant::now();
        let run = online_learn(env, config.data.episodes, &params)?;
        let policies: Vec<Policy> = (0..config.evaluation.policies)
            .map(|i| {
                let learner = block.learner(
                    state_dim,
                    kind,
                    sub_seed(trial_seed, "final-policy", i as u64),
                );
                extract_policy(
                    &run.final_q,
                    config.fpf.samples,
                    &learner,
                    config.fpf.max_leafs,
                    sub_seed(trial_seed, "final-cloud", i as u64),
                )
            })
            .collect::<Result<_>>()?;
        learning_seconds += started.elapsed().as_secs_f64();
        curves.push(TrialCurve {
            trial,
            episodes: run
                .episodes
                .iter()
                .map(|e| EpisodeRow {
                    episode: e.episode,
                    steps: e.steps,
                    cumulative_reward: e.cumulative_reward,
                    knownness_points: e.knownness_points,
                })
                .collect(),
        });
        trials.push(TrialPolicies { trial, policies });
    }

    let started = Instant::now();
    let flat: Vec<(usize, usize, &Policy)> = trials
        .iter()
        .flat_map(|t| {
            t.policies
                .iter()
                .enumerate()
                .map(move |(i, p)| (t.trial, i, p))
        })
        .collect();
    let grids: Result<Vec<(Vec<f64>, Vec<usize>)>> = flat
        .par_iter()
        .map(|&(trial, i, policy)| {
            let eval_seed = sub_seed(
                sub_seed(seed, "evaluate-trial", trial as u64),
                "evaluate-policy",
                i as u64,
            );
            evaluate_policy(
                env,
                policy,
                config.evaluation.episodes,
                config.evaluation.max_steps,
                eval_seed,
            )
        })
        .collect();
    let grids = grids?;
    let evaluation_seconds = started.elapsed().as_secs_f64();
    let mean_action_nanos = time_actions(
        &trials[0].policies[0],
        &env.state_bounds(),
        config.evaluation.timing_actions,
        sub_seed(seed, "timing", 0),
    )?;
    let (rewards, steps) = grids.into_iter().unzip();
    let result = VariantResult::from_grids(
        variant.id(),
        rewards,
        steps,
        TimingBlock {
            learning_seconds,
            evaluation_seconds,
            mean_action_nanos,
        },
    );

    let record = ResultRecord {
        config_hash: hash_hex(config.serialize().as_bytes()),
        problem: config.problem.id().to_string(),
        mode: config.mode.id().to_string(),
        seed,
        variants: vec![result],
        online_trials: curves,
    };
    Ok(OnlineExperiment { record, trials })
}

/// Write the run's files under `out`: config, record, raw CSVs, per-trial
/// learning curves, every final policy, and one trajectory each for the
/// best and worst policy (replaying their first evaluation episode).
pub fn write_online_outputs(
    experiment: &OnlineExperiment,
    config: &ExperimentConfig,
    out: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    config.to_file(&out.join("config.conf"))?;
    experiment.record.write_json(&out.join("results.json"))?;
    write_rewards_csv(&out.join("rewards.csv"), &experiment.record.variants)?;
    write_steps_csv(&out.join("steps.csv"), &experiment.record.variants)?;
    write_timing_csv(&out.join("timing.csv"), &experiment.record.variants)?;
    for curve in &experiment.record.online_trials {
        write_online_trial_csv(&out.join(format!("online-trial-{}.csv", curve.trial)), curve)?;
    }
    let variant = &experiment.record.variants[0];
    for group in &experiment.trials {
        for (i, policy) in group.policies.iter().enumerate() {
            let path = out.join(format!("policy-{}-{}-{i}.txt", variant.variant, group.trial));
            std::fs::write(&path, policy.serialize())
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        }
    }

    if !variant.policy_means.is_empty() {
        let env = config.environment();
        let per_trial = config.evaluation.policies;
        let argbest = |best: bool| {
            let mut pick = 0;
            for (i, &m) in variant.policy_means.iter().enumerate() {
                let better = if best {
                    m > variant.policy_means[pick]
                } else {
                    m < variant.policy_means[pick]
                };
                if better {
                    pick = i;
                }
            }
            pick
        };
        for (name, pooled) in [("best", argbest(true)), ("worst", argbest(false))] {
            let (trial, i) = (pooled / per_trial, pooled % per_trial);
            let policy = &experiment.trials[trial].policies[i];
            let mut rng = sub_rng(
                sub_seed(
                    sub_seed(config.seed, "evaluate-trial", trial as u64),
                    "evaluate-policy",
                    i as u64,
                ),
                "evaluate-episode",
                0,
            );
            let episode = crate::envs::policy_episode(
                env.as_ref(),
                policy,
                config.evaluation.max_steps,
                &mut rng,
            )?;
            write_trajectory_csv(&out.join(format!("trajectory-{name}.csv")), &episode)?;
        }
    }
    Ok(())
}
