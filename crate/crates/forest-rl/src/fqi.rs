//! Fitted Q iteration over regression forests.
//!
//! Each iteration regresses one-step Bellman targets onto (state, action)
//! inputs with the randomized forest learner, starting from Q identically
//! zero. The maximization inside the targets never runs a numerical
//! optimizer: the previous forest is projected onto the sample's next state,
//! merged into one small tree under a leaf budget, and maximized in closed
//! form ([`QApproximation::q_max`]).
//!
//! Targets: `y = r` for terminal transitions (and everywhere in the first
//! iteration), else `y = r + gamma * max_a Q(s', a)`.

use crate::algebra::{argmax_over, merge_forest, project_tree};
use crate::error::{Error, Result};
use crate::extra_trees::{learn_forest, LearnerParams, TrainingSet};
use crate::geometry::HyperRectangle;
use crate::seeds::sub_seed;
use crate::tree::RegressionForest;
use rayon::prelude::*;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// A learned Q function: a forest over the joint state-action box, plus what
/// is needed to maximize it over actions at a fixed state.
#[derive(Debug, Clone)]
pub struct QApproximation {
    forest: RegressionForest,
    state_dim: usize,
    gamma: f64,
    max_leafs: usize,
}

impl QApproximation {
    pub fn new(
        forest: RegressionForest,
        state_dim: usize,
        gamma: f64,
        max_leafs: usize,
    ) -> Result<Self> {
        if state_dim == 0 || state_dim >= forest.input_dim() {
            return Err(Error::Config(format!(
                "state_dim {state_dim} must split a {}-dimensional input into state and action",
                forest.input_dim()
            )));
        }
        check_gamma(gamma)?;
        if max_leafs == 0 {
            return Err(Error::ZeroLeafBudget);
        }
        Ok(Self {
            forest,
            state_dim,
            gamma,
            max_leafs,
        })
    }

    pub fn forest(&self) -> &RegressionForest {
        &self.forest
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.forest.input_dim() - self.state_dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_leafs(&self) -> usize {
        self.max_leafs
    }

    pub fn state_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(self.forest.domain().bounds()[..self.state_dim].to_vec())
            .expect("state slice of a valid domain")
    }

    pub fn action_bounds(&self) -> HyperRectangle {
        HyperRectangle::new(self.forest.domain().bounds()[self.state_dim..].to_vec())
            .expect("action slice of a valid domain")
    }

    pub fn predict(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let mut x = Vec::with_capacity(state.len() + action.len());
        x.extend_from_slice(state);
        x.extend_from_slice(action);
        self.forest.predict(&x)
    }

    /// Rectangle degenerate in the state dimensions, free in the actions.
    fn state_slice(&self, state: &[f64]) -> Result<HyperRectangle> {
        if state.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim,
                got: state.len(),
            });
        }
        let domain = self.forest.domain();
        let mut bounds: Vec<(f64, f64)> = Vec::with_capacity(domain.dim());
        for (d, &s) in state.iter().enumerate() {
            let v = s.clamp(domain.min(d), domain.max(d));
            bounds.push((v, v));
        }
        bounds.extend_from_slice(&domain.bounds()[self.state_dim..]);
        HyperRectangle::new(bounds)
    }

    /// Maximize the forest mean over actions at a fixed state: project every
    /// tree onto the state slice, merge under the leaf budget, take the
    /// closed-form argmax. Returns the maximizing action and the value.
    pub fn q_max(&self, state: &[f64]) -> Result<(Vec<f64>, f64)> {
        let slice = self.state_slice(state)?;
        let projected: Vec<_> = self
            .forest
            .trees()
            .iter()
            .map(|t| project_tree(t, &slice))
            .collect::<Result<Vec<_>>>()?;
        let merged = merge_forest(&RegressionForest::new(projected)?, self.max_leafs)?;
        let (point, value) = argmax_over(&merged);
        Ok((point[self.state_dim..].to_vec(), value))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!(
            "discount factor must lie in [0, 1), got {gamma}"
        )));
    }
    Ok(())
}

fn check_samples(samples: &[Sample], state_dim: usize, action_dim: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    for s in samples {
        if s.state.len() != state_dim || s.next_state.len() != state_dim {
            return Err(Error::DimensionMismatch {
                expected: state_dim,
                got: s.state.len().max(s.next_state.len()),
            });
        }
        if s.action.len() != action_dim {
            return Err(Error::DimensionMismatch {
                expected: action_dim,
                got: s.action.len(),
            });
        }
        if !s.reward.is_finite() {
            return Err(Error::NonFinite { context: "reward" });
        }
    }
    Ok(())
}

/// One-step Bellman targets against `q_prev` (`None` means Q is identically
/// zero, as in the first iteration).
pub fn build_targets(
    samples: &[Sample],
    q_prev: Option<&QApproximation>,
    gamma: f64,
) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    match q_prev {
        None => Ok(samples.iter().map(|s| s.reward).collect()),
        Some(q) => samples
            .par_iter()
            .map(|s| {
                if s.terminal {
                    Ok(s.reward)
                } else {
                    let (_, value) = q.q_max(&s.next_state)?;
                    Ok(s.reward + gamma * value)
                }
            })
            .collect(),
    }
}

/// Run fitted Q iteration from Q = 0.
///
/// `domain` is the joint state-action box the forests live on; sample
/// coordinates are clamped onto it, mirroring how predictions treat
/// out-of-domain queries. Iteration `i` re-seeds the learner from the
/// sub-stream (seed, "fqi-iteration", i).
pub fn fitted_q_iteration(
    samples: &[Sample],
    domain: &HyperRectangle,
    state_dim: usize,
    gamma: f64,
    iterations: usize,
    learner: &LearnerParams,
    max_leafs: usize,
) -> Result<QApproximation> {
    fitted_q_iteration_from(None, samples, domain, state_dim, gamma, iterations, learner, max_leafs)
}

/// Fitted Q iteration warm-started from an existing approximation; used by
/// the online loop to refine the previous episode's Q instead of rebuilding
/// the whole iteration stack after every episode.
#[allow(clippy::too_many_arguments)]
pub fn fitted_q_iteration_from(
    initial: Option<&QApproximation>,
    samples: &[Sample],
    domain: &HyperRectangle,
    state_dim: usize,
    gamma: f64,
    iterations: usize,
    learner: &LearnerParams,
    max_leafs: usize,
) -> Result<QApproximation> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    check_gamma(gamma)?;
    if state_dim == 0 || state_dim >= domain.dim() {
        return Err(Error::Config(
            "domain must have both state and action dimensions".into(),
        ));
    }
    check_samples(samples, state_dim, domain.dim() - state_dim)?;

    let inputs: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut x = Vec::with_capacity(domain.dim());
            x.extend_from_slice(&s.state);
            x.extend_from_slice(&s.action);
            domain.clamp(&x)
        })
        .collect();

    let mut q = initial.cloned();
    for iteration in 0..iterations {
        let targets = build_targets(samples, q.as_ref(), gamma)?;
        let ts = TrainingSet::new(inputs.clone(), targets, domain.clone())?;
        let params = learner
            .clone()
            .with_seed(sub_seed(learner.seed, "fqi-iteration", iteration as u64));
        let forest = learn_forest(&ts, &params)?;
        q = Some(QApproximation::new(forest, state_dim, gamma, max_leafs)?);
    }
    Ok(q.expect("at least one iteration"))
}

// ---------------------------------------------------------------------------
// sample files

/// Write samples as CSV: s_1..s_ds, a_1..a_da, r, s'_1..s'_ds, terminal(0|1).
pub fn write_samples_csv<W: Write>(samples: &[Sample], out: &mut W) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let ds = samples[0].state.len();
    let da = samples[0].action.len();
    check_samples(samples, ds, da)?;
    let mut header: Vec<String> = Vec::new();
    header.extend((1..=ds).map(|i| format!("s_{i}")));
    header.extend((1..=da).map(|i| format!("a_{i}")));
    header.push("r".into());
    header.extend((1..=ds).map(|i| format!("s'_{i}")));
    header.push("terminal".into());
    writeln!(out, "{}", header.join(","))?;
    for s in samples {
        let mut row: Vec<String> = Vec::new();
        row.extend(s.state.iter().map(|v| v.to_string()));
        row.extend(s.action.iter().map(|v| v.to_string()));
        row.push(s.reward.to_string());
        row.extend(s.next_state.iter().map(|v| v.to_string()));
        row.push(if s.terminal { "1" } else { "0" }.into());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read samples back; dimensions are taken from the header.
pub fn read_samples_csv<R: BufRead>(reader: R) -> Result<Vec<Sample>> {
    let mut lines = reader.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| csv_err(1, "empty sample file".into()))?
        .1?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let ds = cols.iter().take_while(|c| c.starts_with("s_")).count();
    let da = cols
        .iter()
        .skip(ds)
        .take_while(|c| c.starts_with("a_"))
        .count();
    if ds == 0 || da == 0 || cols.len() != 2 * ds + da + 2 {
        return Err(csv_err(1, format!("unrecognized header: {header}")));
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != cols.len() {
            return Err(csv_err(i + 1, format!("expected {} fields", cols.len())));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse::<f64>()
                .map_err(|_| csv_err(i + 1, format!("bad number {:?}", fields[j])))
        };
        let state = (0..ds).map(num).collect::<Result<Vec<_>>>()?;
        let action = (ds..ds + da).map(num).collect::<Result<Vec<_>>>()?;
        let reward = num(ds + da)?;
        let next_state = (ds + da + 1..2 * ds + da + 1)
            .map(num)
            .collect::<Result<Vec<_>>>()?;
        let terminal = match fields[2 * ds + da + 1] {
            "0" => false,
            "1" => true,
            other => return Err(csv_err(i + 1, format!("terminal must be 0 or 1, got {other}"))),
        };
        samples.push(Sample {
            state,
            action,
            reward,
            next_state,
            terminal,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(samples)
}

fn csv_err(line: usize, msg: String) -> Error {
    Error::Parse {
        file: "<samples csv>".into(),
        line,
        msg,
    }
}
