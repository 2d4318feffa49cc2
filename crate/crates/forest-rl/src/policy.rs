//! Greedy policies over a learned Q function.
//!
//! Two representations. [`Policy::FqiDirect`] carries the Q forest itself and
//! answers `act` by running the projection-merge-argmax pipeline, which is
//! exact but costly. [`Policy::Fpf`] is a fitted policy forest: the expensive
//! maximization runs offline over a cloud of uniformly drawn states, and the
//! resulting state-to-action map is compressed into one pruned regression
//! forest per action dimension, so `act` is a handful of tree walks.

use crate::algebra::prune_tree;
use crate::error::{Error, Result};
use crate::extra_trees::{learn_forest, LeafKind, LearnerParams, TrainingSet};
use crate::fqi::QApproximation;
use crate::geometry::HyperRectangle;
use crate::seeds::{sub_rng, sub_seed};
use crate::tree::{parse_err, parse_forest, Lines, RegressionForest, RegressionTree};
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub enum Policy {
    /// Greedy maximization over the Q forest at every call.
    FqiDirect(QApproximation),
    /// Fitted policy forest: one forest over states per action dimension.
    Fpf {
        leaf_kind: LeafKind,
        forests: Vec<RegressionForest>,
        action_bounds: HyperRectangle,
    },
}

impl Policy {
    pub fn state_dim(&self) -> usize {
        match self {
            Policy::FqiDirect(q) => q.state_dim(),
            Policy::Fpf { forests, .. } => forests[0].input_dim(),
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Policy::FqiDirect(q) => q.action_dim(),
            Policy::Fpf { forests, .. } => forests.len(),
        }
    }

    /// The action taken in `state`. Fitted forests clamp each coordinate to
    /// the action bounds, so affine leaves cannot extrapolate outside them.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        match self {
            Policy::FqiDirect(q) => Ok(q.q_max(state)?.0),
            Policy::Fpf {
                forests,
                action_bounds,
                ..
            } => {
                let mut action = Vec::with_capacity(forests.len());
                for (d, f) in forests.iter().enumerate() {
                    let raw = f.predict(state)?;
                    action.push(raw.clamp(action_bounds.min(d), action_bounds.max(d)));
                }
                Ok(action)
            }
        }
    }

    pub fn serialize(&self) -> String {
        match self {
            Policy::FqiDirect(q) => {
                let mut out = String::from("policy fqi-direct\n");
                out.push_str(&format!("state-dim {}\n", q.state_dim()));
                out.push_str(&format!("gamma {}\n", q.gamma()));
                out.push_str(&format!("max-leafs {}\n", q.max_leafs()));
                out.push_str(&q.forest().serialize());
                out
            }
            Policy::Fpf {
                leaf_kind,
                forests,
                action_bounds,
            } => {
                let kind = match leaf_kind {
                    LeafKind::Constant => "pwc",
                    LeafKind::Linear => "pwl",
                };
                let mut out = format!("policy fpf {kind}\n");
                let mut bounds = String::from("action-bounds");
                for d in 0..action_bounds.dim() {
                    bounds.push_str(&format!(" {} {}", action_bounds.min(d), action_bounds.max(d)));
                }
                out.push_str(&bounds);
                out.push('\n');
                for f in forests {
                    out.push_str(&f.serialize());
                }
                out
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (n, header) = lines
            .next_line()
            .ok_or_else(|| parse_err(0, "empty policy document".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let policy = match toks.as_slice() {
            ["policy", "fqi-direct"] => {
                let state_dim = parse_field(&mut lines, "state-dim")?.parse::<usize>().ok();
                let gamma = parse_field(&mut lines, "gamma")?.parse::<f64>().ok();
                let max_leafs = parse_field(&mut lines, "max-leafs")?.parse::<usize>().ok();
                let (state_dim, gamma, max_leafs) = match (state_dim, gamma, max_leafs) {
                    (Some(s), Some(g), Some(m)) => (s, g, m),
                    _ => return Err(parse_err(n, "bad fqi-direct policy header fields".into())),
                };
                let forest = parse_forest(&mut lines)?;
                Policy::FqiDirect(QApproximation::new(forest, state_dim, gamma, max_leafs)?)
            }
            ["policy", "fpf", kind] => {
                let leaf_kind = match *kind {
                    "pwc" => LeafKind::Constant,
                    "pwl" => LeafKind::Linear,
                    other => return Err(parse_err(n, format!("unknown leaf kind {other:?}"))),
                };
                let (bn, bline) = lines
                    .next_line()
                    .ok_or_else(|| parse_err(n, "missing action-bounds line".into()))?;
                let mut btoks = bline.split_whitespace();
                if btoks.next() != Some("action-bounds") {
                    return Err(parse_err(bn, format!("expected action-bounds, got {bline:?}")));
                }
                let nums: Vec<f64> = btoks
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| parse_err(bn, format!("bad bound {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if nums.is_empty() || nums.len() % 2 != 0 {
                    return Err(parse_err(bn, "action-bounds needs min max pairs".into()));
                }
                let action_bounds =
                    HyperRectangle::new(nums.chunks(2).map(|c| (c[0], c[1])).collect())?;
                let forests = (0..action_bounds.dim())
                    .map(|_| parse_forest(&mut lines))
                    .collect::<Result<Vec<_>>>()?;
                new_fpf(leaf_kind, forests, action_bounds)?
            }
            _ => return Err(parse_err(n, format!("unrecognized policy header: {header:?}"))),
        };
        lines.expect_end()?;
        Ok(policy)
    }
}

fn parse_field<'a>(lines: &mut Lines<'a>, key: &str) -> Result<&'a str> {
    let (n, line) = lines
        .next_line()
        .ok_or_else(|| parse_err(0, format!("missing {key} line")))?;
    match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, v] if *k == key => Ok(v),
        _ => Err(parse_err(n, format!("expected '{key} <value>', got {line:?}"))),
    }
}

fn new_fpf(
    leaf_kind: LeafKind,
    forests: Vec<RegressionForest>,
    action_bounds: HyperRectangle,
) -> Result<Policy> {
    if forests.is_empty() {
        return Err(Error::EmptyForest);
    }
    if forests.len() != action_bounds.dim() {
        return Err(Error::DimensionMismatch {
            expected: action_bounds.dim(),
            got: forests.len(),
        });
    }
    if forests
        .iter()
        .any(|f| f.domain() != forests[0].domain())
    {
        return Err(Error::Config(
            "policy forests must share one state domain".into(),
        ));
    }
    Ok(Policy::Fpf {
        leaf_kind,
        forests,
        action_bounds,
    })
}

/// Draw `count` states uniformly over the Q function's state box and solve
/// the greedy maximization at each, yielding the regression set a fitted
/// policy forest is trained on. States come from one sequential stream of
/// the sub-seed (seed, "policy-states", 0), so the set is reproducible no
/// matter how the maximizations are scheduled.
pub fn generate_policy_samples(
    q: &QApproximation,
    count: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if count == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let bounds = q.state_bounds();
    let mut rng = sub_rng(seed, "policy-states", 0);
    let states: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            (0..bounds.dim())
                .map(|d| {
                    if bounds.edge(d) == 0.0 {
                        bounds.min(d)
                    } else {
                        rng.random_range(bounds.min(d)..bounds.max(d))
                    }
                })
                .collect()
        })
        .collect();
    let actions: Vec<Vec<f64>> = states
        .par_iter()
        .map(|s| Ok(q.q_max(s)?.0))
        .collect::<Result<Vec<_>>>()?;
    Ok((states, actions))
}

/// Fit one regression forest per action dimension to greedy (state, action)
/// pairs, then prune every tree to the leaf budget. The learner for action
/// dimension d is re-seeded from (seed, "fpf-dim", d).
pub fn fit_policy(
    states: Vec<Vec<f64>>,
    actions: &[Vec<f64>],
    state_bounds: &HyperRectangle,
    action_bounds: &HyperRectangle,
    learner: &LearnerParams,
    max_leafs: usize,
) -> Result<Policy> {
    if actions.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            got: actions.len(),
        });
    }
    if max_leafs == 0 {
        return Err(Error::ZeroLeafBudget);
    }
    let action_dim = action_bounds.dim();
    if actions.iter().any(|a| a.len() != action_dim) {
        return Err(Error::DimensionMismatch {
            expected: action_dim,
            got: actions.iter().map(Vec::len).find(|&l| l != action_dim).unwrap_or(0),
        });
    }
    let mut forests = Vec::with_capacity(action_dim);
    for d in 0..action_dim {
        let outputs: Vec<f64> = actions.iter().map(|a| a[d]).collect();
        let ts = TrainingSet::new(states.clone(), outputs, state_bounds.clone())?;
        let params = learner
            .clone()
            .with_seed(sub_seed(learner.seed, "fpf-dim", d as u64));
        let forest = learn_forest(&ts, &params)?;
        let pruned: Vec<RegressionTree> = forest
            .trees()
            .par_iter()
            .map(|t| prune_tree(t, max_leafs))
            .collect::<Result<Vec<_>>>()?;
        forests.push(RegressionForest::new(pruned)?);
    }
    new_fpf(learner.leaf_kind, forests, action_bounds.clone())
}

/// Full extraction pipeline: sample greedy actions from `q`, then compress
/// them into a fitted policy forest.
pub fn extract_policy(
    q: &QApproximation,
    count: usize,
    learner: &LearnerParams,
    max_leafs: usize,
    seed: u64,
) -> Result<Policy> {
    let (states, actions) = generate_policy_samples(q, count, seed)?;
    fit_policy(
        states,
        &actions,
        &q.state_bounds(),
        &q.action_bounds(),
        learner,
        max_leafs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{LeafModel, Node};

    /// Q over [0,1] x [0,1] whose greedy action is 0.25 below s = 0.5 and
    /// 0.75 above it (cell centers of the rewarded action blocks).
    fn step_q() -> QApproximation {
        let leaf = |v: f64| Box::new(Node::Leaf(LeafModel::Constant(v)));
        let root = Node::Split {
            dim: 0,
            value: 0.5,
            lower: Box::new(Node::Split {
                dim: 1,
                value: 0.5,
                lower: leaf(1.0),
                upper: leaf(0.0),
            }),
            upper: Box::new(Node::Split {
                dim: 1,
                value: 0.5,
                lower: leaf(0.0),
                upper: leaf(1.0),
            }),
        };
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let tree = RegressionTree::new(root, domain).unwrap();
        let forest = RegressionForest::new(vec![tree]).unwrap();
        QApproximation::new(forest, 1, 0.9, 50).unwrap()
    }

    #[test]
    fn greedy_samples_hit_the_rewarded_cells_exactly() {
        let q = step_q();
        let (states, actions) = generate_policy_samples(&q, 64, 9).unwrap();
        assert_eq!(states.len(), 64);
        for (s, a) in states.iter().zip(&actions) {
            let want = if s[0] <= 0.5 { 0.25 } else { 0.75 };
            assert_eq!(a[0], want, "state {}", s[0]);
        }
    }

    #[test]
    fn fitted_forest_recovers_a_step_policy() {
        let q = step_q();
        let learner = LearnerParams::new(3)
            .with_trees(10)
            .with_min_leaf_samples(4);
        let policy = extract_policy(&q, 400, &learner, 30, 9).unwrap();
        assert_eq!(policy.state_dim(), 1);
        assert_eq!(policy.action_dim(), 1);
        for (s, want) in [(0.1, 0.25), (0.35, 0.25), (0.65, 0.75), (0.9, 0.75)] {
            let a = policy.act(&[s]).unwrap();
            assert!(
                (a[0] - want).abs() < 0.05,
                "act({s}) = {}, expected about {want}",
                a[0]
            );
        }
    }

    #[test]
    fn constant_leaves_keep_actions_inside_the_training_hull() {
        // constant leaves average training actions, so no prediction can
        // leave [min, max] of the sampled greedy actions
        let q = step_q();
        let learner = LearnerParams::new(4).with_trees(5).with_min_leaf_samples(2);
        let policy = extract_policy(&q, 200, &learner, 20, 11).unwrap();
        let mut rng = sub_rng(12, "hull", 0);
        for _ in 0..500 {
            let s = rng.random_range(0.0..1.0);
            let a = policy.act(&[s]).unwrap()[0];
            assert!((0.25..=0.75).contains(&a), "action {a} left [0.25, 0.75]");
        }
    }

    #[test]
    fn affine_leaves_are_clamped_to_the_action_bounds() {
        // a single affine leaf extrapolating a steep slope must be cut off
        // at the declared action bounds
        let state_bounds = HyperRectangle::new(vec![(0.0, 1.0)]).unwrap();
        let action_bounds = HyperRectangle::new(vec![(-1.0, 1.0)]).unwrap();
        let tree = RegressionTree::leaf(
            LeafModel::Linear {
                intercept: 0.0,
                coefficients: vec![10.0],
            },
            state_bounds,
        )
        .unwrap();
        let policy = new_fpf(
            LeafKind::Linear,
            vec![RegressionForest::new(vec![tree]).unwrap()],
            action_bounds,
        )
        .unwrap();
        assert_eq!(policy.act(&[0.0]).unwrap()[0], 0.0);
        assert_eq!(policy.act(&[0.05]).unwrap()[0], 0.5);
        assert_eq!(policy.act(&[0.9]).unwrap()[0], 1.0);
        assert_eq!(policy.act(&[0.2]).unwrap()[0], 1.0);
    }

    #[test]
    fn policies_round_trip_through_the_text_format() {
        let q = step_q();
        let direct = Policy::FqiDirect(q.clone());
        let text = direct.serialize();
        let parsed = Policy::parse(&text).unwrap();
        assert_eq!(parsed.serialize(), text);
        assert_eq!(parsed.act(&[0.3]).unwrap(), direct.act(&[0.3]).unwrap());

        for kind in [LeafKind::Constant, LeafKind::Linear] {
            let learner = LearnerParams::new(6)
                .with_trees(4)
                .with_min_leaf_samples(20)
                .with_leaf_kind(kind);
            let fpf = extract_policy(&q, 150, &learner, 25, 13).unwrap();
            let text = fpf.serialize();
            let parsed = Policy::parse(&text).unwrap();
            assert_eq!(parsed.serialize(), text);
            for s in [0.0, 0.2, 0.51, 1.0] {
                assert_eq!(parsed.act(&[s]).unwrap(), fpf.act(&[s]).unwrap());
            }
        }
    }

    #[test]
    fn extraction_is_deterministic_in_the_seed() {
        let q = step_q();
        let learner = LearnerParams::new(7).with_trees(6).with_min_leaf_samples(5);
        let a = extract_policy(&q, 100, &learner, 20, 42).unwrap();
        let b = extract_policy(&q, 100, &learner, 20, 42).unwrap();
        let c = extract_policy(&q, 100, &learner, 20, 43).unwrap();
        assert_eq!(a.serialize(), b.serialize());
        assert_ne!(a.serialize(), c.serialize());
    }

    #[test]
    fn multidimensional_actions_get_one_forest_each() {
        // Q over s in [0,1], a in [0,1]^2 rewarding the (low, high) corner
        let leaf = |v: f64| Box::new(Node::Leaf(LeafModel::Constant(v)));
        let root = Node::Split {
            dim: 1,
            value: 0.5,
            lower: Box::new(Node::Split {
                dim: 2,
                value: 0.5,
                lower: leaf(0.0),
                upper: leaf(1.0),
            }),
            upper: leaf(0.0),
        };
        let domain = HyperRectangle::new(vec![(0.0, 1.0); 3]).unwrap();
        let tree = RegressionTree::new(root, domain).unwrap();
        let q = QApproximation::new(
            RegressionForest::new(vec![tree]).unwrap(),
            1,
            0.9,
            50,
        )
        .unwrap();
        let learner = LearnerParams::new(8).with_trees(5).with_min_leaf_samples(4);
        let policy = extract_policy(&q, 120, &learner, 20, 17).unwrap();
        assert_eq!(policy.action_dim(), 2);
        let a = policy.act(&[0.4]).unwrap();
        assert!((a[0] - 0.25).abs() < 1e-9);
        assert!((a[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn malformed_policy_documents_are_rejected() {
        assert!(Policy::parse("").is_err());
        assert!(Policy::parse("policy mystery\n").is_err());
        assert!(Policy::parse("policy fpf pwq\naction-bounds 0 1\n").is_err());
        assert!(Policy::parse("policy fpf pwc\naction-bounds 0\n").is_err());
        assert!(Policy::parse("policy fqi-direct\nstate-dim 1\n").is_err());
        // truncated forest block
        let q = step_q();
        let text = Policy::FqiDirect(q).serialize();
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(Policy::parse(&cut).is_err());
    }

    #[test]
    fn dimension_mismatches_error_out() {
        let q = step_q();
        let policy = Policy::FqiDirect(q.clone());
        assert!(policy.act(&[0.1, 0.2]).is_err());
        let learner = LearnerParams::new(9).with_trees(3).with_min_leaf_samples(4);
        let fpf = extract_policy(&q, 50, &learner, 10, 3).unwrap();
        assert!(fpf.act(&[0.1, 0.2]).is_err());
    }
}
