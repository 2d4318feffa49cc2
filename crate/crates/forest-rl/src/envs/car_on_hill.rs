//! Car on the hill: an underpowered car must back up the opposite slope to
//! gather momentum before it can crest the hill on the right.
//!
//! Hill profile: p^2 + p on the left of the origin, p / sqrt(1 + 5 p^2) on
//! the right. Success is crossing p > 1 with the speed constraint intact.

use super::{Environment, StepResult};
use crate::geometry::HyperRectangle;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CarOnHill {
    pub mass: f64,
    pub gravity: f64,
    pub max_accel: f64,
    pub max_speed: f64,
    pub control_step: f64,
    pub integration_step: f64,
    pub gamma: f64,
    pub max_episode_steps: usize,
    /// Evaluation start, at rest in the left-hand valley.
    pub start: [f64; 2],
}

impl CarOnHill {
    pub fn new() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.81,
            max_accel: 4.0,
            max_speed: 3.0,
            control_step: 0.1,
            integration_step: 0.001,
            gamma: 0.95,
            max_episode_steps: 100,
            start: [-0.5, 0.0],
        }
    }

    fn sub_steps(&self) -> usize {
        (self.control_step / self.integration_step).round() as usize
    }

    /// First and second derivative of the hill height at `p`.
    fn hill_slope(p: f64) -> (f64, f64) {
        if p < 0.0 {
            (2.0 * p + 1.0, 2.0)
        } else {
            let q = 1.0 + 5.0 * p * p;
            (q.powf(-1.5), -15.0 * p * q.powf(-2.5))
        }
    }
}

impl Default for CarOnHill {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for CarOnHill {
    fn name(&self) -> &'static str {
        "car-on-hill"
    }

    fn state_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![(-1.0, 1.0), (-self.max_speed, self.max_speed)])
            .expect("valid bounds")
    }

    fn action_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![(-self.max_accel, self.max_accel)]).expect("valid bounds")
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn r_max(&self) -> f64 {
        1.0
    }

    fn max_episode_steps(&self) -> usize {
        self.max_episode_steps
    }

    fn initial_state(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.start.to_vec()
    }

    fn step(&self, state: &[f64], action: &[f64], _rng: &mut ChaCha8Rng) -> StepResult {
        let a = action[0].clamp(-self.max_accel, self.max_accel);
        let (mut p, mut s) = (state[0], state[1]);
        let dt = self.integration_step;
        for _ in 0..self.sub_steps() {
            let (h1, h2) = Self::hill_slope(p);
            let denom = 1.0 + h1 * h1;
            let accel = a / (self.mass * denom)
                - self.gravity * h1 / denom
                - s * s * h1 * h2 / denom;
            p += s * dt;
            s += accel * dt;
        }
        // outcomes are judged at control boundaries only
        if p < -1.0 || s.abs() > self.max_speed {
            StepResult {
                next_state: vec![p, s],
                reward: -1.0,
                terminal: true,
            }
        } else if p > 1.0 {
            StepResult {
                next_state: vec![p, s],
                reward: 1.0,
                terminal: true,
            }
        } else {
            StepResult {
                next_state: vec![p, s],
                reward: 0.0,
                terminal: false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::uniform_samples;
    use crate::seeds::sub_rng;

    /// Full reverse for a while, then full forward: scan the switch time
    /// and report the fewest control steps that crest the hill.
    pub(crate) fn best_bang_bang_steps(env: &CarOnHill) -> Option<usize> {
        let mut rng = sub_rng(0, "coth-oracle", 0);
        let mut best: Option<usize> = None;
        for switch in 0..=40 {
            let mut state = env.initial_state(&mut rng);
            for step in 0..60 {
                let a = if step < switch { -env.max_accel } else { env.max_accel };
                let r = env.step(&state, &[a], &mut rng);
                if r.terminal {
                    if r.reward == 1.0 {
                        let steps = step + 1;
                        if best.is_none_or(|b| steps < b) {
                            best = Some(steps);
                        }
                    }
                    break;
                }
                state = r.next_state;
            }
        }
        best
    }

    #[test]
    fn full_throttle_from_rest_cannot_climb_directly() {
        let env = CarOnHill::new();
        let mut rng = sub_rng(3, "coth", 0);
        let mut state = env.initial_state(&mut rng);
        let mut crested = false;
        for _ in 0..60 {
            let r = env.step(&state, &[env.max_accel], &mut rng);
            if r.terminal {
                crested = r.reward == 1.0;
                break;
            }
            state = r.next_state;
        }
        assert!(!crested, "the hill should be too steep for a direct climb");
    }

    #[test]
    fn the_best_momentum_swing_crests_in_nineteen_steps() {
        // deterministic dynamics, so the single-switch optimum is exact:
        // half a second of reverse, then full forward, cresting at step 19.
        // Learned policies run a few steps slower, in the low twenties.
        let env = CarOnHill::new();
        let steps = best_bang_bang_steps(&env).expect("no bang-bang schedule succeeded");
        assert_eq!(steps, 19, "best bang-bang rollout took {steps} steps");
    }

    #[test]
    fn falling_off_the_left_edge_scores_minus_one() {
        let env = CarOnHill::new();
        let mut rng = sub_rng(3, "coth", 1);
        let mut state = vec![-0.9, -1.0];
        let mut outcome = None;
        for _ in 0..20 {
            let r = env.step(&state, &[-env.max_accel], &mut rng);
            if r.terminal {
                outcome = Some(r);
                break;
            }
            state = r.next_state;
        }
        let r = outcome.expect("reverse from the left edge must fail");
        assert_eq!(r.reward, -1.0);
        assert!(r.next_state[0] < -1.0);
    }

    #[test]
    fn overspeed_fails_even_past_the_summit() {
        // crossing p > 1 only pays when the speed constraint held
        let env = CarOnHill::new();
        let mut rng = sub_rng(3, "coth", 2);
        let r = env.step(&[0.99, 2.995], &[4.0], &mut rng);
        assert!(r.terminal);
        assert!(r.next_state[0] > 1.0);
        assert!(r.next_state[1] > env.max_speed);
        assert_eq!(r.reward, -1.0);
    }

    #[test]
    fn rewards_are_ternary_and_only_terminal_steps_pay() {
        let env = CarOnHill::new();
        let mut rng = sub_rng(3, "coth", 3);
        for s in uniform_samples(&env, 3000, &mut rng) {
            assert!(s.reward == -1.0 || s.reward == 0.0 || s.reward == 1.0);
            assert_eq!(s.reward != 0.0, s.terminal);
        }
    }

    #[test]
    fn some_uniform_draws_reach_the_goal() {
        let env = CarOnHill::new();
        let mut rng = sub_rng(3, "coth", 4);
        let samples = uniform_samples(&env, 10_000, &mut rng);
        let wins = samples.iter().filter(|s| s.reward == 1.0).count();
        let losses = samples.iter().filter(|s| s.reward == -1.0).count();
        assert!(wins > 0, "no +1 outcomes in 10k uniform draws");
        assert!(losses > 0);
    }

    #[test]
    fn the_hill_slope_is_continuous_at_the_origin() {
        let (left, _) = CarOnHill::hill_slope(-1e-12);
        let (right, _) = CarOnHill::hill_slope(0.0);
        assert!((left - right).abs() < 1e-9);
        assert_eq!(right, 1.0);
    }
}
