//! Inverted pendulum stabilization: keep a pole upright on a driven cart.
//!
//! The pole starts upright and the controller pushes the cart with a
//! horizontal force that is perturbed by uniform noise. Leaving the upright
//! half-circle ends the episode with a large penalty.

use super::{Environment, StepResult};
use crate::geometry::HyperRectangle;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone)]
pub struct InvertedPendulum {
    pub gravity: f64,
    pub pole_mass: f64,
    pub cart_mass: f64,
    pub pole_length: f64,
    pub max_force: f64,
    /// Half-width of the uniform force disturbance; 0 disables noise.
    pub force_noise: f64,
    /// Angular speed extent of the learning box; the dynamics do not bound
    /// the speed, this is the widest value reachable before the angle
    /// terminates the episode, with margin.
    pub max_speed: f64,
    pub failure_penalty: f64,
    pub control_step: f64,
    pub integration_step: f64,
    pub gamma: f64,
    pub max_episode_steps: usize,
}

impl InvertedPendulum {
    pub fn new() -> Self {
        Self {
            gravity: 9.8,
            pole_mass: 2.0,
            cart_mass: 8.0,
            pole_length: 0.5,
            max_force: 50.0,
            force_noise: 10.0,
            max_speed: 15.0,
            failure_penalty: -1000.0,
            control_step: 0.1,
            integration_step: 0.001,
            gamma: 0.95,
            max_episode_steps: 3000,
        }
    }

    /// Test mode with the force disturbance switched off.
    pub fn noiseless() -> Self {
        Self {
            force_noise: 0.0,
            ..Self::new()
        }
    }

    fn sub_steps(&self) -> usize {
        (self.control_step / self.integration_step).round() as usize
    }
}

impl Default for InvertedPendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for InvertedPendulum {
    fn name(&self) -> &'static str {
        "pendulum-stabilization"
    }

    fn state_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![
            (-FRAC_PI_2, FRAC_PI_2),
            (-self.max_speed, self.max_speed),
        ])
        .expect("valid bounds")
    }

    fn action_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![(-self.max_force, self.max_force)]).expect("valid bounds")
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

    fn initial_state(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![0.0, 0.0]
    }

    fn step(&self, state: &[f64], action: &[f64], rng: &mut ChaCha8Rng) -> StepResult {
        let commanded = action[0].clamp(-self.max_force, self.max_force);
        let applied = if self.force_noise > 0.0 {
            commanded + rng.random_range(-self.force_noise..self.force_noise)
        } else {
            commanded
        };

        let (mut theta, mut speed) = (state[0], state[1]);
        // reward scored on the state the decision was taken in, with the
        // commanded (not perturbed) force
        let reward = -((2.0 * theta / PI).powi(2)
            + speed * speed
            + (commanded / self.max_force).powi(2));

        let alpha = 1.0 / (self.pole_mass + self.cart_mass);
        let (m, l) = (self.pole_mass, self.pole_length);
        let dt = self.integration_step;
        for _ in 0..self.sub_steps() {
            let accel = (self.gravity * theta.sin()
                - alpha * m * l * speed * speed * (2.0 * theta).sin() / 2.0
                - alpha * theta.cos() * applied)
                / (4.0 * l / 3.0 - alpha * m * l * theta.cos().powi(2));
            theta += speed * dt;
            speed += accel * dt;
        }

        if theta.abs() > FRAC_PI_2 {
            StepResult {
                next_state: vec![theta, speed],
                reward: self.failure_penalty,
                terminal: true,
            }
        } else {
            StepResult {
                next_state: vec![theta, speed],
                reward,
                terminal: false,
            }
        }
    }
}
