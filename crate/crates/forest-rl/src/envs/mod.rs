//! Benchmark control problems with analytic dynamics.
//!
//! Every environment is a plain value object: `step` is a pure function of
//! (state, action, rng), so independent rollouts can run on worker threads
//! without shared mutable state. Dynamics integrate with explicit Euler at a
//! fixed sub-step, many sub-steps per control decision. All tunable
//! constants are public fields with defaults from the benchmark
//! definitions, so a config file can override them.

mod car_on_hill;
mod double_integrator;
mod pendulum;
mod swing_up;

pub use car_on_hill::CarOnHill;
pub use double_integrator::DoubleIntegrator;
pub use pendulum::InvertedPendulum;
pub use swing_up::PendulumSwingUp;

use crate::error::{Error, Result};
use crate::fqi::Sample;
use crate::geometry::HyperRectangle;
use crate::policy::Policy;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_bounds(&self) -> HyperRectangle;
    fn action_bounds(&self) -> HyperRectangle;
    fn gamma(&self) -> f64;
    /// Upper bound on the one-step reward, the optimism target.
    fn r_max(&self) -> f64;
    fn max_episode_steps(&self) -> usize;
    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn step(&self, state: &[f64], action: &[f64], rng: &mut ChaCha8Rng) -> StepResult;

    fn state_dim(&self) -> usize {
        self.state_bounds().dim()
    }

    fn action_dim(&self) -> usize {
        self.action_bounds().dim()
    }

    /// The joint state-action box Q forests and knownness trees live on.
    fn joint_domain(&self) -> HyperRectangle {
        let mut bounds = self.state_bounds().bounds().to_vec();
        bounds.extend_from_slice(self.action_bounds().bounds());
        HyperRectangle::new(bounds).expect("state and action bounds are valid")
    }
}

/// Uniform draw from a box; degenerate dimensions return their single value.
pub fn uniform_point(rect: &HyperRectangle, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..rect.dim())
        .map(|d| {
            if rect.edge(d) == 0.0 {
                rect.min(d)
            } else {
                rng.random_range(rect.min(d)..rect.max(d))
            }
        })
        .collect()
}

/// Roll out uniformly random actions from the environment's initial state
/// until a terminal step or `max_steps`.
pub fn random_episode(
    env: &dyn Environment,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Sample> {
    let mut state = env.initial_state(rng);
    let mut samples = Vec::new();
    let action_bounds = env.action_bounds();
    for _ in 0..max_steps {
        let action = uniform_point(&action_bounds, rng);
        let result = env.step(&state, &action, rng);
        let terminal = result.terminal;
        samples.push(Sample {
            state,
            action,
            reward: result.reward,
            next_state: result.next_state.clone(),
            terminal,
        });
        if terminal {
            break;
        }
        state = result.next_state;
    }
    samples
}

/// Independent one-step samples: (state, action) drawn uniformly over the
/// bounds, one transition each.
pub fn uniform_samples(env: &dyn Environment, n: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let state_bounds = env.state_bounds();
    let action_bounds = env.action_bounds();
    (0..n)
        .map(|_| {
            let state = uniform_point(&state_bounds, rng);
            let action = uniform_point(&action_bounds, rng);
            let result = env.step(&state, &action, rng);
            Sample {
                state,
                action,
                reward: result.reward,
                next_state: result.next_state,
                terminal: result.terminal,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub samples: Vec<Sample>,
    /// Undiscounted reward sum, the evaluation score.
    pub cumulative_reward: f64,
}

impl EpisodeRecord {
    pub fn steps(&self) -> usize {
        self.samples.len()
    }
}

/// Run a policy from the environment's initial state.
pub fn policy_episode(
    env: &dyn Environment,
    policy: &Policy,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeRecord> {
    if policy.state_dim() != env.state_dim() || policy.action_dim() != env.action_dim() {
        return Err(Error::DimensionMismatch {
            expected: env.state_dim() + env.action_dim(),
            got: policy.state_dim() + policy.action_dim(),
        });
    }
    let mut state = env.initial_state(rng);
    let mut samples = Vec::new();
    let mut cumulative_reward = 0.0;
    for _ in 0..max_steps {
        let action = policy.act(&state)?;
        let result = env.step(&state, &action, rng);
        let terminal = result.terminal;
        cumulative_reward += result.reward;
        samples.push(Sample {
            state,
            action,
            reward: result.reward,
            next_state: result.next_state.clone(),
            terminal,
        });
        if terminal {
            break;
        }
        state = result.next_state;
    }
    Ok(EpisodeRecord {
        samples,
        cumulative_reward,
    })
}
