//! Pendulum swing-up: a rigid rod on a torque-limited joint, starting at
//! rest hanging down. The motor is too weak to lift the rod statically, so
//! the controller has to pump energy by swinging.
//!
//! The angle is measured from the upright position, so gravity enters the
//! rod equation destabilizing (the +sin term): theta = 0 is the unstable
//! goal, theta = pi the stable rest.

use super::{Environment, StepResult};
use crate::geometry::HyperRectangle;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct PendulumSwingUp {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
    pub friction: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub breach_penalty: f64,
    pub control_step: f64,
    pub integration_step: f64,
    pub gamma: f64,
    pub max_episode_steps: usize,
}

impl PendulumSwingUp {
    pub fn new() -> Self {
        Self {
            mass: 5.0,
            length: 1.0,
            gravity: 9.8,
            damping: 0.1,
            friction: 0.1,
            max_torque: 15.0,
            max_speed: 10.0,
            breach_penalty: -50.0,
            control_step: 0.1,
            integration_step: 0.001,
            gamma: 0.95,
            max_episode_steps: 100,
        }
    }

    /// Test mode: no torque losses, for energy bookkeeping.
    pub fn frictionless() -> Self {
        Self {
            damping: 0.0,
            friction: 0.0,
            ..Self::new()
        }
    }

    fn sub_steps(&self) -> usize {
        (self.control_step / self.integration_step).round() as usize
    }

    fn inertia(&self) -> f64 {
        self.mass * self.length * self.length / 3.0
    }

    /// Kinetic plus potential energy of the rod (center of mass at l/2,
    /// zero potential at the pivot height).
    pub fn energy(&self, state: &[f64]) -> f64 {
        0.5 * self.inertia() * state[1] * state[1]
            + self.mass * self.gravity * (self.length / 2.0) * state[0].cos()
    }
}

impl Default for PendulumSwingUp {
    fn default() -> Self {
        Self::new()
    }
}

/// Map an angle into (-pi, pi].
fn wrap_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}

impl Environment for PendulumSwingUp {
    fn name(&self) -> &'static str {
        "pendulum-swing-up"
    }

    fn state_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![(-PI, PI), (-self.max_speed, self.max_speed)])
            .expect("valid bounds")
    }

    fn action_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(vec![(-self.max_torque, self.max_torque)]).expect("valid bounds")
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
        vec![PI, 0.0]
    }

    fn step(&self, state: &[f64], action: &[f64], _rng: &mut ChaCha8Rng) -> StepResult {
        let tau = action[0].clamp(-self.max_torque, self.max_torque);
        let (mut theta, mut speed) = (state[0], state[1]);
        let reward = -(theta.abs() / PI + (tau / self.max_torque).powi(2));
        let inertia = self.inertia();
        let dt = self.integration_step;
        for _ in 0..self.sub_steps() {
            let coulomb = if speed == 0.0 { 0.0 } else { speed.signum() };
            let accel = (tau + self.mass * self.gravity * (self.length / 2.0) * theta.sin()
                - self.damping * speed
                - self.friction * coulomb)
                / inertia;
            theta = wrap_angle(theta + speed * dt);
            speed += accel * dt;
            if speed.abs() > self.max_speed {
                return StepResult {
                    next_state: vec![theta, speed],
                    reward: self.breach_penalty,
                    terminal: true,
                };
            }
        }
        StepResult {
            next_state: vec![theta, speed],
            reward,
            terminal: false,
        }
    }
}
