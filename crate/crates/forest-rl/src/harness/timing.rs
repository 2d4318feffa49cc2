//! Per-action latency measurement.

use crate::envs::uniform_point;
use crate::error::{Error, Result};
use crate::geometry::HyperRectangle;
use crate::policy::Policy;
use crate::seeds::sub_rng;
use std::hint::black_box;
use std::time::Instant;

/// Mean wall-clock nanoseconds per `act` call over `n` uniformly drawn
/// states. State generation happens before the clock starts; the answers
/// are routed through `black_box` so the calls cannot be optimized away.
pub fn time_actions(
    policy: &Policy,
    state_bounds: &HyperRectangle,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "timing needs at least one action".into(),
        ));
    }
    let mut rng = sub_rng(seed, "timing-states", 0);
    let states: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(state_bounds, &mut rng)).collect();
    // dry run: surfaces dimension errors and warms caches outside the clock
    policy.act(&states[0])?;

    let start = Instant::now();
    for state in &states {
        black_box(policy.act(black_box(state))?);
    }
    let elapsed = start.elapsed();
    Ok(elapsed.as_nanos() as f64 / n as f64)
}
