//! Randomized regression-forest learner.
//!
//! Trees are grown top-down Extra-Trees style: at each node a handful of
//! candidate dimensions is drawn, one random cut point per dimension, and the
//! cut with the best variance reduction wins. The cut point is drawn between
//! the n_min-th smallest and n_min-th largest sample coordinate, which
//! guarantees both children keep at least `min_leaf_samples` samples without
//! any rebalancing.
//!
//! A node becomes a leaf when it is too small to split, when the leaf model
//! already explains the outputs to within `min_variance`, or when no
//! dimension admits a valid cut (all inputs identical, or too many ties).
//! Constant leaves store the output mean; affine leaves a ridge least-squares
//! fit over the full input vector.
//!
//! Each tree draws from its own named random stream derived from the learner
//! seed and the tree index, so growing trees on worker threads changes
//! nothing about the result.

use crate::error::{Error, Result};
use crate::geometry::HyperRectangle;
use crate::seeds::sub_rng;
use crate::tree::{LeafModel, Node, RegressionForest, RegressionTree};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Regularization added to the normal equations of affine leaf fits.
const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafKind {
    #[default]
    Constant,
    Linear,
}

#[derive(Debug, Clone)]
pub struct LearnerParams {
    /// Number of trees in the forest (M).
    pub trees: usize,
    /// Candidate dimensions drawn per node (k).
    pub split_candidates: usize,
    /// Minimum samples a leaf may hold (n_min).
    pub min_leaf_samples: usize,
    /// Residual-variance threshold below which a node stops splitting.
    pub min_variance: f64,
    pub leaf_kind: LeafKind,
    pub seed: u64,
    /// Default gate refuses to split nodes under 2 * n_min samples, which is
    /// exactly when a valid bounded cut exists. The loose gate only requires
    /// n_min samples and lets the cut search discover the dead end itself.
    pub loose_split_floor: bool,
}

impl LearnerParams {
    pub fn new(seed: u64) -> Self {
        Self {
            trees: 25,
            split_candidates: 1,
            min_leaf_samples: 2,
            min_variance: 0.0,
            leaf_kind: LeafKind::Constant,
            seed,
            loose_split_floor: false,
        }
    }

    pub fn with_trees(mut self, trees: usize) -> Self {
        self.trees = trees;
        self
    }

    pub fn with_split_candidates(mut self, k: usize) -> Self {
        self.split_candidates = k;
        self
    }

    pub fn with_min_leaf_samples(mut self, n_min: usize) -> Self {
        self.min_leaf_samples = n_min;
        self
    }

    pub fn with_min_variance(mut self, v_min: f64) -> Self {
        self.min_variance = v_min;
        self
    }

    pub fn with_leaf_kind(mut self, kind: LeafKind) -> Self {
        self.leaf_kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::InvalidParameter("trees must be at least 1".into()));
        }
        if self.split_candidates == 0 {
            return Err(Error::InvalidParameter(
                "split_candidates must be at least 1".into(),
            ));
        }
        if self.min_leaf_samples == 0 {
            return Err(Error::InvalidParameter(
                "min_leaf_samples must be at least 1".into(),
            ));
        }
        if !(self.min_variance >= 0.0) || !self.min_variance.is_finite() {
            return Err(Error::InvalidParameter(
                "min_variance must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    domain: HyperRectangle,
}

impl TrainingSet {
    /// Inputs must lie inside the domain and outputs must be finite.
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>, domain: HyperRectangle) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: outputs.len(),
            });
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != domain.dim() {
                return Err(Error::DimensionMismatch {
                    expected: domain.dim(),
                    got: x.len(),
                });
            }
            if !domain.contains(x) {
                return Err(Error::InputOutsideDomain { index: i });
            }
        }
        if outputs.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite {
                context: "training outputs",
            });
        }
        Ok(Self {
            inputs,
            outputs,
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

/// Grow a forest. Trees are independent and grown in parallel; tree `i`
/// draws from the sub-stream (seed, "tree", i).
pub fn learn_forest(ts: &TrainingSet, params: &LearnerParams) -> Result<RegressionForest> {
    params.validate()?;
    let trees: Vec<RegressionTree> = (0..params.trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(params.seed, "tree", i as u64);
            grow_tree(ts, params, &mut rng)
        })
        .collect();
    RegressionForest::new(trees)
}

fn grow_tree(ts: &TrainingSet, params: &LearnerParams, rng: &mut ChaCha8Rng) -> RegressionTree {
    let indices: Vec<u32> = (0..ts.len() as u32).collect();
    let root = grow_node(ts, params, rng, indices);
    RegressionTree::from_parts(root, ts.dim(), ts.domain().clone())
}

fn grow_node(
    ts: &TrainingSet,
    params: &LearnerParams,
    rng: &mut ChaCha8Rng,
    indices: Vec<u32>,
) -> Node {
    let n = indices.len();
    let n_min = params.min_leaf_samples;
    let floor = if params.loose_split_floor {
        n_min
    } else {
        2 * n_min
    };
    if n < floor {
        return Node::Leaf(fit_leaf(ts, &indices, params.leaf_kind));
    }

    // constant outputs end the recursion regardless of the variance gate
    let first = ts.outputs[indices[0] as usize];
    if indices
        .iter()
        .all(|&i| ts.outputs[i as usize] == first)
    {
        return Node::Leaf(fit_leaf(ts, &indices, params.leaf_kind));
    }

    let model = fit_leaf(ts, &indices, params.leaf_kind);
    if residual_variance(ts, &indices, &model) < params.min_variance {
        return Node::Leaf(model);
    }

    // a dimension admits a cut when its bounded cut interval is non-empty
    let dims = ts.dim();
    let mut valid: Vec<(usize, f64, f64)> = Vec::with_capacity(dims);
    let mut coords: Vec<f64> = Vec::with_capacity(n);
    for d in 0..dims {
        coords.clear();
        coords.extend(indices.iter().map(|&i| ts.inputs[i as usize][d]));
        if n < 2 * n_min {
            continue; // order statistics would cross
        }
        let (lo, hi) = cut_interval(&mut coords, n_min);
        if lo < hi {
            valid.push((d, lo, hi));
        }
    }
    if valid.is_empty() {
        return Node::Leaf(model);
    }

    // draw up to k distinct candidate dimensions among the valid ones
    let k = params.split_candidates.min(valid.len());
    let mut candidates: Vec<(usize, f64, f64)> = Vec::with_capacity(k);
    for _ in 0..k {
        let j = rng.random_range(0..valid.len());
        candidates.push(valid.swap_remove(j));
    }

    let total_var = output_variance(ts, &indices);
    let mut best: Option<(f64, usize, f64)> = None; // (score, dim, value)
    for &(d, lo, hi) in &candidates {
        let v = rng.random_range(lo..hi);
        let (mut nl, mut sl, mut ql) = (0usize, 0.0, 0.0);
        let (mut nu, mut su, mut qu) = (0usize, 0.0, 0.0);
        for &i in &indices {
            let y = ts.outputs[i as usize];
            if ts.inputs[i as usize][d] <= v {
                nl += 1;
                sl += y;
                ql += y * y;
            } else {
                nu += 1;
                su += y;
                qu += y * y;
            }
        }
        if nl == 0 || nu == 0 {
            continue; // cannot happen with the bounded draw; kept as a guard
        }
        let var_l = (ql / nl as f64 - (sl / nl as f64).powi(2)).max(0.0);
        let var_u = (qu / nu as f64 - (su / nu as f64).powi(2)).max(0.0);
        let score = total_var - (nl as f64 * var_l + nu as f64 * var_u) / n as f64;
        if best.map_or(true, |(s, _, _)| score > s) {
            best = Some((score, d, v));
        }
    }
    let Some((_, dim, value)) = best else {
        return Node::Leaf(model);
    };

    let (lower_idx, upper_idx): (Vec<u32>, Vec<u32>) = indices
        .into_iter()
        .partition(|&i| ts.inputs[i as usize][dim] <= value);
    debug_assert!(lower_idx.len() >= n_min && upper_idx.len() >= n_min);

    let lower = grow_node(ts, params, rng, lower_idx);
    let upper = grow_node(ts, params, rng, upper_idx);
    Node::Split {
        dim,
        value,
        lower: Box::new(lower),
        upper: Box::new(upper),
    }
}

/// Interval between the n_min-th smallest and n_min-th largest coordinate.
/// Cuts drawn from [lo, hi) leave at least n_min samples on each side.
fn cut_interval(coords: &mut [f64], n_min: usize) -> (f64, f64) {
    let n = coords.len();
    let (_, lo, _) = coords.select_nth_unstable_by(n_min - 1, f64::total_cmp);
    let lo = *lo;
    let (_, hi, _) = coords.select_nth_unstable_by(n - n_min, f64::total_cmp);
    (lo, *hi)
}

fn output_variance(ts: &TrainingSet, indices: &[u32]) -> f64 {
    let n = indices.len() as f64;
    let mean = indices.iter().map(|&i| ts.outputs[i as usize]).sum::<f64>() / n;
    indices
        .iter()
        .map(|&i| (ts.outputs[i as usize] - mean).powi(2))
        .sum::<f64>()
        / n
}

fn residual_variance(ts: &TrainingSet, indices: &[u32], model: &LeafModel) -> f64 {
    let n = indices.len() as f64;
    indices
        .iter()
        .map(|&i| {
            let r = ts.outputs[i as usize] - model.evaluate(&ts.inputs[i as usize]);
            r * r
        })
        .sum::<f64>()
        / n
}

fn fit_leaf(ts: &TrainingSet, indices: &[u32], kind: LeafKind) -> LeafModel {
    match kind {
        LeafKind::Constant => {
            let n = indices.len() as f64;
            let mean = indices.iter().map(|&i| ts.outputs[i as usize]).sum::<f64>() / n;
            LeafModel::Constant(mean)
        }
        LeafKind::Linear => fit_affine(ts, indices),
    }
}

/// Ridge least squares on centered data; the intercept is not penalized.
fn fit_affine(ts: &TrainingSet, indices: &[u32]) -> LeafModel {
    let d = ts.dim();
    let n = indices.len() as f64;
    let mut x_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for &i in indices {
        let x = &ts.inputs[i as usize];
        for (m, v) in x_mean.iter_mut().zip(x) {
            *m += v;
        }
        y_mean += ts.outputs[i as usize];
    }
    for m in &mut x_mean {
        *m /= n;
    }
    y_mean /= n;

    // normal equations (X'X + ridge I) w = X'y on centered data
    let mut ata = vec![0.0; d * d];
    let mut aty = vec![0.0; d];
    for &i in indices {
        let x = &ts.inputs[i as usize];
        let dy = ts.outputs[i as usize] - y_mean;
        for a in 0..d {
            let da = x[a] - x_mean[a];
            aty[a] += da * dy;
            for b in a..d {
                ata[a * d + b] += da * (x[b] - x_mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            ata[a * d + b] = ata[b * d + a];
        }
        ata[a * d + a] += RIDGE;
    }

    let coefficients = solve_spd(&mut ata, &mut aty, d);
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    LeafModel::Linear {
        intercept,
        coefficients,
    }
}

/// Gaussian elimination with partial pivoting; `a` is d x d row-major and is
/// consumed along with `b`. The ridge term keeps the system well posed.
fn solve_spd(a: &mut [f64], b: &mut [f64], d: usize) -> Vec<f64> {
    for col in 0..d {
        let mut pivot = col;
        for row in col + 1..d {
            if a[row * d + col].abs() > a[pivot * d + col].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            for j in 0..d {
                a.swap(col * d + j, pivot * d + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * d + col];
        if diag.abs() < 1e-300 {
            continue; // dead column; its coefficient stays zero
        }
        for row in col + 1..d {
            let f = a[row * d + col] / diag;
            if f == 0.0 {
                continue;
            }
            for j in col..d {
                a[row * d + j] -= f * a[col * d + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut w = vec![0.0; d];
    for col in (0..d).rev() {
        let mut s = b[col];
        for j in col + 1..d {
            s -= a[col * d + j] * w[j];
        }
        let diag = a[col * d + col];
        w[col] = if diag.abs() < 1e-300 { 0.0 } else { s / diag };
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::sub_rng;
    use std::collections::HashMap;

    fn toy_set(n: usize, seed: u64, f: impl Fn(f64, f64) -> f64) -> TrainingSet {
        let mut rng = sub_rng(seed, "toy", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let outputs = inputs.iter().map(|x| f(x[0], x[1])).collect();
        TrainingSet::new(inputs, outputs, domain).unwrap()
    }

    #[test]
    fn same_seed_reproduces_the_forest_byte_for_byte() {
        let ts = toy_set(400, 1, |a, b| a + b);
        let params = LearnerParams::new(99)
            .with_trees(5)
            .with_split_candidates(2)
            .with_min_leaf_samples(5);
        let f1 = learn_forest(&ts, &params).unwrap();
        let f2 = learn_forest(&ts, &params).unwrap();
        assert_eq!(f1.serialize(), f2.serialize());
    }

    #[test]
    fn different_seeds_and_different_trees_differ() {
        let ts = toy_set(400, 2, |a, b| a * b);
        let params = LearnerParams::new(1)
            .with_trees(2)
            .with_split_candidates(2)
            .with_min_leaf_samples(5);
        let f1 = learn_forest(&ts, &params).unwrap();
        let f2 = learn_forest(&ts, &params.clone().with_seed(2)).unwrap();
        assert_ne!(f1.serialize(), f2.serialize());
        // the per-tree streams decorrelate trees within one forest
        assert_ne!(f1.trees()[0].serialize(), f1.trees()[1].serialize());
    }

    #[test]
    fn every_leaf_keeps_min_leaf_samples() {
        let ts = toy_set(500, 3, |a, b| (10.0 * a).sin() + b);
        for n_min in [1usize, 4, 17] {
            let params = LearnerParams::new(5)
                .with_trees(3)
                .with_split_candidates(2)
                .with_min_leaf_samples(n_min);
            let forest = learn_forest(&ts, &params).unwrap();
            for tree in forest.trees() {
                let mut counts: HashMap<String, usize> = HashMap::new();
                for x in ts.inputs() {
                    let cell = tree.leaf_rectangle(x).unwrap();
                    *counts.entry(format!("{:?}", cell.bounds())).or_default() += 1;
                }
                assert_eq!(counts.len(), tree.leaf_count());
                for (_, c) in counts {
                    assert!(c >= n_min, "a leaf holds {c} < {n_min} samples");
                }
            }
        }
    }

    #[test]
    fn nodes_below_twice_n_min_do_not_split() {
        let ts = toy_set(30, 4, |a, _| a);
        let params = LearnerParams::new(7)
            .with_trees(1)
            .with_split_candidates(2)
            .with_min_leaf_samples(16); // 30 < 32
        let forest = learn_forest(&ts, &params).unwrap();
        assert_eq!(forest.trees()[0].leaf_count(), 1);
        // the loose gate also ends at a leaf: order statistics cross
        let mut loose = params.clone();
        loose.loose_split_floor = true;
        let forest = learn_forest(&ts, &loose).unwrap();
        assert_eq!(forest.trees()[0].leaf_count(), 1);
    }

    #[test]
    fn constant_outputs_yield_a_single_exact_leaf() {
        let ts = toy_set(200, 5, |_, _| 3.25);
        let params = LearnerParams::new(8).with_trees(2).with_split_candidates(2);
        let forest = learn_forest(&ts, &params).unwrap();
        for tree in forest.trees() {
            assert_eq!(tree.leaf_count(), 1);
            assert_eq!(tree.predict(&[0.3, 0.4]).unwrap(), 3.25);
        }
    }

    #[test]
    fn identical_inputs_yield_the_mean() {
        let domain = HyperRectangle::unit(2);
        let inputs = vec![vec![0.5, 0.5]; 10];
        let outputs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ts = TrainingSet::new(inputs, outputs, domain).unwrap();
        let params = LearnerParams::new(1).with_trees(1).with_min_leaf_samples(1);
        let forest = learn_forest(&ts, &params).unwrap();
        assert_eq!(forest.trees()[0].leaf_count(), 1);
        assert!((forest.predict(&[0.5, 0.5]).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn large_variance_threshold_stops_growth() {
        let ts = toy_set(300, 6, |a, b| a + b);
        let params = LearnerParams::new(9)
            .with_trees(1)
            .with_split_candidates(2)
            .with_min_leaf_samples(2)
            .with_min_variance(1e6);
        let forest = learn_forest(&ts, &params).unwrap();
        assert_eq!(forest.trees()[0].leaf_count(), 1);
    }

    #[test]
    fn affine_leaves_recover_a_linear_function() {
        let ts = toy_set(200, 7, |a, b| 2.0 * a - b + 0.5);
        let params = LearnerParams::new(10)
            .with_trees(1)
            .with_min_leaf_samples(101) // 200 samples < 2 * 101 forces a single leaf
            .with_leaf_kind(LeafKind::Linear);
        let forest = learn_forest(&ts, &params).unwrap();
        let tree = &forest.trees()[0];
        assert_eq!(tree.leaf_count(), 1);
        match tree.root() {
            crate::tree::Node::Leaf(LeafModel::Linear {
                intercept,
                coefficients,
            }) => {
                assert!((intercept - 0.5).abs() < 1e-6);
                assert!((coefficients[0] - 2.0).abs() < 1e-6);
                assert!((coefficients[1] + 1.0).abs() < 1e-6);
            }
            other => panic!("expected an affine leaf, got {other:?}"),
        }
    }

    #[test]
    fn forests_fit_a_smooth_surface() {
        let ts = toy_set(2000, 11, |a, b| (3.0 * a).sin() * b);
        let params = LearnerParams::new(12)
            .with_trees(10)
            .with_split_candidates(2)
            .with_min_leaf_samples(4);
        let forest = learn_forest(&ts, &params).unwrap();
        let mut rng = sub_rng(13, "probe", 0);
        let mut mse = 0.0;
        let probes = 500;
        for _ in 0..probes {
            let x: Vec<f64> = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let want = (3.0 * x[0]).sin() * x[1];
            mse += (forest.predict(&x).unwrap() - want).powi(2);
        }
        mse /= probes as f64;
        assert!(mse < 0.003, "forest mse too high: {mse}");
    }

    #[test]
    fn smaller_n_min_grows_deeper_trees() {
        let ts = toy_set(800, 14, |a, b| (5.0 * a).sin() + (3.0 * b).cos());
        let base = LearnerParams::new(15).with_trees(1).with_split_candidates(2);
        let fine = learn_forest(&ts, &base.clone().with_min_leaf_samples(5)).unwrap();
        let coarse = learn_forest(&ts, &base.with_min_leaf_samples(50)).unwrap();
        assert!(fine.trees()[0].leaf_count() > coarse.trees()[0].leaf_count());
    }

    #[test]
    fn forest_prediction_matches_member_mean_exactly() {
        let ts = toy_set(300, 16, |a, b| a - b);
        let params = LearnerParams::new(17)
            .with_trees(7)
            .with_split_candidates(2)
            .with_min_leaf_samples(5);
        let forest = learn_forest(&ts, &params).unwrap();
        let mut rng = sub_rng(18, "probe", 1);
        for _ in 0..100 {
            let x = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let mean: f64 = forest
                .trees()
                .iter()
                .map(|t| t.predict(&x).unwrap())
                .sum::<f64>()
                / forest.len() as f64;
            assert!((forest.predict(&x).unwrap() - mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let domain = HyperRectangle::unit(2);
        assert!(TrainingSet::new(vec![], vec![], domain.clone()).is_err());
        assert!(
            TrainingSet::new(vec![vec![0.5, 2.0]], vec![1.0], domain.clone()).is_err(),
            "input outside the domain must be rejected"
        );
        assert!(TrainingSet::new(vec![vec![0.5, 0.5]], vec![f64::NAN], domain.clone()).is_err());
        assert!(TrainingSet::new(vec![vec![0.5, 0.5]], vec![1.0, 2.0], domain.clone()).is_err());

        let ts = TrainingSet::new(vec![vec![0.5, 0.5]], vec![1.0], domain).unwrap();
        assert!(learn_forest(&ts, &LearnerParams::new(0).with_trees(0)).is_err());
        assert!(learn_forest(&ts, &LearnerParams::new(0).with_min_leaf_samples(0)).is_err());
        assert!(learn_forest(&ts, &LearnerParams::new(0).with_min_variance(-1.0)).is_err());
    }

    #[test]
    fn single_sample_training_interpolates() {
        let domain = HyperRectangle::unit(2);
        let ts = TrainingSet::new(vec![vec![0.2, 0.9]], vec![7.5], domain).unwrap();
        let params = LearnerParams::new(3).with_trees(2).with_min_leaf_samples(1);
        let forest = learn_forest(&ts, &params).unwrap();
        assert_eq!(forest.predict(&[0.9, 0.1]).unwrap(), 7.5);
    }
}
