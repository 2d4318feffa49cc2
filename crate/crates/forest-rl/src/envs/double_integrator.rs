//! Double integrator: drive a point mass to the origin under a quadratic
//! cost, without letting position or speed leave the unit box.

use super::{Environment, StepResult};
use crate::geometry::HyperRectangle;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct DoubleIntegrator {
    pub max_accel: f64,
    pub position_bound: f64,
    pub speed_bound: f64,
    pub breach_penalty: f64,
    pub control_step: f64,
    pub integration_step: f64,
    pub gamma: f64,
    pub max_episode_steps: usize,
    /// Evaluation start; `None` draws the position uniformly with zero
    /// speed.
    pub fixed_start: Option<[f64; 2]>,
}

impl DoubleIntegrator {
    pub fn new() -> Self {
        Self {
            max_accel: 1.0,
            position_bound: 1.0,
            speed_bound: 1.0,
            breach_penalty: -50.0,
            control_step: 0.5,
            integration_step: 0.05,
            gamma: 0.98,
            max_episode_steps: 200,
            fixed_start: None,
        }
    }

    fn sub_steps(&self) -> usize {
        (self.control_step / self.integration_step).round() as usize
    }
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for DoubleIntegrator {
    fn name(&self) -> &'static str {
        "double-integrator"
    }

    fn state_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![
            (-self.position_bound, self.position_bound),
            (-self.speed_bound, self.speed_bound),
        ])
        .expect("valid bounds")
    }

    fn action_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![(-self.max_accel, self.max_accel)]).expect("valid bounds")
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn r_max(&self) -> f64 {
        0.0
    }

    fn max_episode_steps(&self) -> usize {
        self.max_episode_steps
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.fixed_start {
            Some([p, v]) => vec![p, v],
            None => vec![
                rng.random_range(-self.position_bound..self.position_bound),
                0.0,
            ],
        }
    }

    fn step(&self, state: &[f64], action: &[f64], _rng: &mut ChaCha8Rng) -> StepResult {
        let a = action[0].clamp(-self.max_accel, self.max_accel);
        let (mut p, mut v) = (state[0], state[1]);
        let reward = -(p * p + a * a);
        let dt = self.integration_step;
        for _ in 0..self.sub_steps() {
            p += v * dt;
            v += a * dt;
            if p.abs() > self.position_bound || v.abs() > self.speed_bound {
                return StepResult {
                    next_state: vec![p, v],
                    reward: self.breach_penalty,
                    terminal: true,
                };
            }
        }
        StepResult {
            next_state: vec![p, v],
            reward,
            terminal: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::sub_rng;

    #[test]
    fn the_origin_is_a_free_fixed_point() {
        let env = DoubleIntegrator::new();
        let mut rng = sub_rng(2, "di", 0);
        let r = env.step(&[0.0, 0.0], &[0.0], &mut rng);
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.next_state, vec![0.0, 0.0]);
        assert!(!r.terminal);
    }

    #[test]
    fn coasting_advances_position_by_speed_times_interval() {
        let env = DoubleIntegrator::new();
        let mut rng = sub_rng(2, "di", 1);
        let r = env.step(&[0.0, 0.1], &[0.0], &mut rng);
        // ten Euler sub-steps at constant speed: p = 10 * 0.1 * 0.05
        assert!((r.next_state[0] - 0.05).abs() < 1e-12);
        assert_eq!(r.next_state[1], 0.1);
    }

    #[test]
    fn breaching_either_bound_ends_the_episode_at_minus_fifty() {
        let env = DoubleIntegrator::new();
        let mut rng = sub_rng(2, "di", 2);
        let r = env.step(&[0.999, 1.0], &[1.0], &mut rng);
        assert!(r.terminal);
        assert_eq!(r.reward, -50.0);
        assert!(r.next_state[0].abs() > 1.0 || r.next_state[1].abs() > 1.0);

        // speed alone can breach, mid-interval
        let r = env.step(&[0.0, 0.9], &[1.0], &mut rng);
        assert!(r.terminal);
        assert_eq!(r.reward, -50.0);
    }

    #[test]
    fn the_cost_charges_position_and_commanded_acceleration() {
        let env = DoubleIntegrator::new();
        let mut rng = sub_rng(2, "di", 3);
        let r = env.step(&[0.5, 0.0], &[-0.3], &mut rng);
        assert!((r.reward - -(0.25 + 0.09)).abs() < 1e-12);
        // over-range requests are clamped before costing
        let r = env.step(&[0.0, 0.0], &[7.0], &mut rng);
        assert_eq!(r.reward, -1.0);
    }

    #[test]
    fn steps_are_deterministic() {
        let env = DoubleIntegrator::new();
        let mut a = sub_rng(2, "di", 4);
        let mut b = sub_rng(99, "other", 7);
        assert_eq!(
            env.step(&[0.3, -0.2], &[0.5], &mut a),
            env.step(&[0.3, -0.2], &[0.5], &mut b)
        );
    }

    #[test]
    fn default_starts_spread_over_position_with_zero_speed() {
        let env = DoubleIntegrator::new();
        let mut rng = sub_rng(2, "di", 5);
        let starts: Vec<Vec<f64>> = (0..200).map(|_| env.initial_state(&mut rng)).collect();
        assert!(starts.iter().all(|s| s[1] == 0.0));
        assert!(starts.iter().any(|s| s[0] < -0.5));
        assert!(starts.iter().any(|s| s[0] > 0.5));
        let fixed = DoubleIntegrator {
            fixed_start: Some([1.0, 0.0]),
            ..DoubleIntegrator::new()
        };
        assert_eq!(fixed.initial_state(&mut rng), vec![1.0, 0.0]);
    }
}
