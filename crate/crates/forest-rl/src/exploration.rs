//! Knownness-guided exploration.
//!
//! A knownness forest is a set of kd-trees over visited (state, action)
//! points, coordinates normalized to the unit box so every dimension weighs
//! the same. Each leaf holds at most `capacity` points; inserting one more
//! splits the leaf, so resolution sharpens exactly where experience piles
//! up. Knownness at a query is a number in [0, 1] per tree (averaged over
//! the forest) comparing the local point density against the global one:
//! 1 means the neighborhood is as well covered as it needs to be, 0 means
//! unexplored.
//!
//! [`apply_optimism`] rewrites a Q forest leaf by leaf toward `r_max` in
//! poorly known regions, which is what pushes a greedy policy into them.

use crate::envs::{policy_episode, random_episode, Environment};
use crate::error::{Error, Result};
use crate::extra_trees::LearnerParams;
use crate::fqi::{fitted_q_iteration, fitted_q_iteration_from, QApproximation, Sample};
use crate::geometry::HyperRectangle;
use crate::policy::{extract_policy, Policy};
use crate::seeds::{sub_rng, sub_seed};
use crate::tree::{LeafModel, RegressionForest, RegressionTree};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Splits stop once a path is this deep; coincident points then share a
/// leaf beyond capacity instead of recursing forever.
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnownnessVariant {
    /// Density form: leaf count over leaf volume, relative to the total
    /// point count. Adapts resolution per dimension.
    #[default]
    Density,
    /// Resolution form: leaf count over capacity, scaled by the widest leaf
    /// edge against the grid resolution a uniform cover would reach.
    Resolution,
}

#[derive(Debug, Clone)]
pub struct KnownnessParams {
    pub trees: usize,
    /// Leaf capacity; one more point forces a split.
    pub capacity: usize,
    /// Randomized split placement (balanced over per-dimension draws)
    /// instead of deterministic cell midpoints.
    pub randomized: bool,
    pub variant: KnownnessVariant,
    pub seed: u64,
}

impl KnownnessParams {
    pub fn new(seed: u64) -> Self {
        Self {
            trees: 25,
            capacity: 10,
            randomized: false,
            variant: KnownnessVariant::default(),
            seed,
        }
    }

    pub fn with_trees(mut self, trees: usize) -> Self {
        self.trees = trees;
        self
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn with_randomized(mut self, randomized: bool) -> Self {
        self.randomized = randomized;
        self
    }

    pub fn with_variant(mut self, variant: KnownnessVariant) -> Self {
        self.variant = variant;
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
        if self.capacity == 0 {
            return Err(Error::InvalidParameter(
                "leaf capacity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum KNode {
    Leaf {
        points: Vec<Vec<f64>>,
    },
    Split {
        dim: usize,
        value: f64,
        lower: Box<KNode>,
        upper: Box<KNode>,
    },
}

#[derive(Debug, Clone)]
pub struct KnownnessForest {
    roots: Vec<KNode>,
    rngs: Vec<ChaCha8Rng>,
    domain: HyperRectangle,
    /// Dimensions of the domain with positive width; the rest carry no
    /// information and are ignored by splits and volumes.
    active: Vec<usize>,
    params: KnownnessParams,
    count: usize,
}

impl KnownnessForest {
    pub fn new(domain: HyperRectangle, params: KnownnessParams) -> Result<Self> {
        params.validate()?;
        let active: Vec<usize> = (0..domain.dim()).filter(|&d| domain.edge(d) > 0.0).collect();
        if active.is_empty() {
            return Err(Error::EmptyRectangle);
        }
        let rngs = (0..params.trees)
            .map(|i| sub_rng(params.seed, "knownness-tree", i as u64))
            .collect();
        Ok(Self {
            roots: vec![KNode::Leaf { points: Vec::new() }; params.trees],
            rngs,
            domain,
            active,
            params,
            count: 0,
        })
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    /// Total points inserted (each tree holds all of them).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Occupancy and normalized cell volume of every leaf, one inner vector
    /// per tree, in preorder. Each tree stores every inserted point exactly
    /// once, so occupancies sum to [`count`](Self::count) and volumes sum to
    /// 1 per tree; exposed so that callers (and tests) can audit the
    /// bookkeeping and the density normalization.
    pub fn leaf_stats(&self) -> Vec<Vec<(usize, f64)>> {
        fn walk(
            node: &KNode,
            cell: &mut Vec<(f64, f64)>,
            active: &[usize],
            out: &mut Vec<(usize, f64)>,
        ) {
            match node {
                KNode::Leaf { points } => {
                    let volume: f64 = active.iter().map(|&d| cell[d].1 - cell[d].0).product();
                    out.push((points.len(), volume));
                }
                KNode::Split {
                    dim, value, lower, upper,
                } => {
                    let saved = cell[*dim];
                    cell[*dim].1 = *value;
                    walk(lower, cell, active, out);
                    cell[*dim] = saved;
                    cell[*dim].0 = *value;
                    walk(upper, cell, active, out);
                    cell[*dim] = saved;
                }
            }
        }
        self.roots
            .iter()
            .map(|root| {
                let mut cell = vec![(0.0, 1.0); self.domain.dim()];
                let mut stats = Vec::new();
                walk(root, &mut cell, &self.active, &mut stats);
                stats
            })
            .collect()
    }

    fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: x.len(),
            });
        }
        let clamped = self.domain.clamp(x);
        Ok((0..self.domain.dim())
            .map(|d| {
                let edge = self.domain.edge(d);
                if edge == 0.0 {
                    0.0
                } else {
                    (clamped[d] - self.domain.min(d)) / edge
                }
            })
            .collect())
    }

    /// Record a visited point. Coordinates outside the domain are clamped
    /// onto it first.
    pub fn insert(&mut self, x: &[f64]) -> Result<()> {
        let p = self.normalize(x)?;
        let dim = self.domain.dim();
        for (root, rng) in self.roots.iter_mut().zip(&mut self.rngs) {
            let mut cell = vec![(0.0, 1.0); dim];
            insert_node(
                root,
                &p,
                0,
                &mut cell,
                &self.params,
                &self.active,
                rng,
            );
        }
        self.count += 1;
        Ok(())
    }

    /// Knownness in [0, 1] at a query point, averaged over the trees.
    pub fn knownness(&self, x: &[f64]) -> Result<f64> {
        let p = self.normalize(x)?;
        Ok(self.knownness_normalized(&p))
    }

    fn knownness_normalized(&self, p: &[f64]) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let sum: f64 = self.roots.iter().map(|r| self.tree_knownness(r, p)).sum();
        sum / self.roots.len() as f64
    }

    fn tree_knownness(&self, root: &KNode, p: &[f64]) -> f64 {
        let mut cell = vec![(0.0, 1.0); p.len()];
        let mut node = root;
        loop {
            match node {
                KNode::Split {
                    dim,
                    value,
                    lower,
                    upper,
                } => {
                    if p[*dim] <= *value {
                        cell[*dim].1 = *value;
                        node = lower;
                    } else {
                        cell[*dim].0 = *value;
                        node = upper;
                    }
                }
                KNode::Leaf { points } => {
                    if points.is_empty() {
                        return 0.0;
                    }
                    let occupancy = points.len() as f64;
                    let n = self.count as f64;
                    return match self.params.variant {
                        KnownnessVariant::Density => {
                            let volume: f64 =
                                self.active.iter().map(|&d| cell[d].1 - cell[d].0).product();
                            (occupancy / volume / n).min(1.0)
                        }
                        KnownnessVariant::Resolution => {
                            let k = self.active.len() as f64;
                            let nu = self.params.capacity as f64;
                            let resolution = (n * k / nu).powf(1.0 / k).floor();
                            if resolution == 0.0 {
                                // fewer points than one cell's worth: any
                                // occupied leaf counts as known
                                return 1.0;
                            }
                            let widest = self
                                .active
                                .iter()
                                .map(|&d| cell[d].1 - cell[d].0)
                                .fold(0.0, f64::max);
                            (occupancy / nu / (resolution * widest)).min(1.0)
                        }
                    };
                }
            }
        }
    }
}

fn insert_node(
    node: &mut KNode,
    p: &[f64],
    depth: usize,
    cell: &mut Vec<(f64, f64)>,
    params: &KnownnessParams,
    active: &[usize],
    rng: &mut ChaCha8Rng,
) {
    match node {
        KNode::Split {
            dim,
            value,
            lower,
            upper,
        } => {
            if p[*dim] <= *value {
                cell[*dim].1 = *value;
                insert_node(lower, p, depth + 1, cell, params, active, rng);
            } else {
                cell[*dim].0 = *value;
                insert_node(upper, p, depth + 1, cell, params, active, rng);
            }
        }
        KNode::Leaf { points } => {
            points.push(p.to_vec());
            if points.len() > params.capacity && depth < MAX_DEPTH {
                let pts = std::mem::take(points);
                *node = build_subtree(pts, depth, cell, params, active, rng);
            }
        }
    }
}

/// Split an overfull point set into a subtree; children past capacity keep
/// splitting until they fit or the depth guard trips.
fn build_subtree(
    points: Vec<Vec<f64>>,
    depth: usize,
    cell: &mut Vec<(f64, f64)>,
    params: &KnownnessParams,
    active: &[usize],
    rng: &mut ChaCha8Rng,
) -> KNode {
    if points.len() <= params.capacity || depth >= MAX_DEPTH {
        return KNode::Leaf { points };
    }
    let chosen = if params.randomized {
        choose_balanced_split(&points, active, rng)
    } else {
        // round-robin over informative dimensions, cut at the cell midpoint
        let dim = active[depth % active.len()];
        Some((dim, 0.5 * (cell[dim].0 + cell[dim].1)))
    };
    let Some((dim, value)) = chosen else {
        // every informative coordinate is identical across the points
        return KNode::Leaf { points };
    };
    let (lower_pts, upper_pts): (Vec<_>, Vec<_>) =
        points.into_iter().partition(|q| q[dim] <= value);

    let saved = cell[dim];
    cell[dim].1 = value;
    let lower = build_subtree(lower_pts, depth + 1, cell, params, active, rng);
    cell[dim] = saved;
    cell[dim].0 = value;
    let upper = build_subtree(upper_pts, depth + 1, cell, params, active, rng);
    cell[dim] = saved;

    KNode::Split {
        dim,
        value,
        lower: Box::new(lower),
        upper: Box::new(upper),
    }
}

/// One uniform cut per dimension between the point extremes; keep the cut
/// splitting the points most evenly (ties to the lowest dimension). Returns
/// None when the points coincide in every informative dimension.
fn choose_balanced_split(
    points: &[Vec<f64>],
    active: &[usize],
    rng: &mut ChaCha8Rng,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, usize)> = None;
    for &d in active {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for q in points {
            lo = lo.min(q[d]);
            hi = hi.max(q[d]);
        }
        if !(lo < hi) {
            continue;
        }
        let value = rng.random_range(lo..hi);
        let n_lower = points.iter().filter(|q| q[d] <= value).count();
        let imbalance = n_lower.abs_diff(points.len() - n_lower);
        if best.map_or(true, |(_, _, b)| imbalance < b) {
            best = Some((d, value, imbalance));
        }
    }
    best.map(|(d, v, _)| (d, v))
}

#[cfg(test)]
fn leaf_point_total(node: &KNode) -> usize {
    match node {
        KNode::Leaf { points } => points.len(),
        KNode::Split { lower, upper, .. } => leaf_point_total(lower) + leaf_point_total(upper),
    }
}

// ---------------------------------------------------------------------------
// optimism

/// Rewrite every leaf of a Q forest toward `r_max` where the knownness is
/// low: a leaf with knownness kappa at its cell center becomes
/// kappa * value + (1 - kappa) * r_max (affine leaves scale their slopes by
/// kappa so the unknown limit is flat at r_max).
pub fn apply_optimism(
    q_forest: &RegressionForest,
    knownness: &KnownnessForest,
    r_max: f64,
) -> Result<RegressionForest> {
    if q_forest.input_dim() != knownness.domain().dim() {
        return Err(Error::DimensionMismatch {
            expected: q_forest.input_dim(),
            got: knownness.domain().dim(),
        });
    }
    if !r_max.is_finite() {
        return Err(Error::NonFinite { context: "r_max" });
    }
    let trees: Vec<RegressionTree> = q_forest
        .trees()
        .iter()
        .map(|t| {
            t.map_leaves(|model, cell| {
                let kappa = knownness
                    .knownness(&cell.center())
                    .expect("dimensions checked above");
                match model {
                    LeafModel::Constant(v) => {
                        LeafModel::Constant(kappa * v + (1.0 - kappa) * r_max)
                    }
                    LeafModel::Linear {
                        intercept,
                        coefficients,
                    } => LeafModel::Linear {
                        intercept: kappa * intercept + (1.0 - kappa) * r_max,
                        coefficients: coefficients.iter().map(|c| kappa * c).collect(),
                    },
                }
            })
        })
        .collect();
    RegressionForest::new(trees)
}

/// Target-side optimism on a single regression target: blend toward the
/// value ceiling r_max / (1 - gamma) by how unknown the pair still is.
/// This is the alternative update [`apply_optimism`] replaces; it is kept
/// for comparison runs.
pub fn optimistic_target(y: f64, kappa: f64, r_max: f64, gamma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&kappa));
    kappa * y + (1.0 - kappa) * r_max / (1.0 - gamma)
}

/// [`optimistic_target`] over a whole training set, with knownness looked
/// up per (state, action) pair.
pub fn optimistic_targets(
    samples: &[Sample],
    targets: &[f64],
    knownness: &KnownnessForest,
    r_max: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    if samples.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: targets.len(),
        });
    }
    if !(gamma >= 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!(
            "discount factor must lie in [0, 1), got {gamma}"
        )));
    }
    samples
        .iter()
        .zip(targets)
        .map(|(s, &y)| {
            let mut x = s.state.clone();
            x.extend_from_slice(&s.action);
            let kappa = knownness.knownness(&x)?;
            Ok(optimistic_target(y, kappa, r_max, gamma))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// the online loop

#[derive(Debug, Clone)]
pub struct OnlineParams {
    /// Step cap per training episode.
    pub episode_steps: usize,
    pub q_learner: LearnerParams,
    /// Bellman iterations for the first fit and the final refit.
    pub q_iterations_full: usize,
    /// Warm-started iterations after every later episode.
    pub q_iterations_refine: usize,
    pub q_max_leafs: usize,
    /// Learner for the behavior policy forests (its leaf kind picks the
    /// policy representation).
    pub behavior_learner: LearnerParams,
    /// Size of the state cloud each behavior policy is fitted on.
    pub behavior_samples: usize,
    pub behavior_max_leafs: usize,
    pub knownness: KnownnessParams,
    pub seed: u64,
}

impl OnlineParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("episode_steps", self.episode_steps),
            ("q_iterations_full", self.q_iterations_full),
            ("q_iterations_refine", self.q_iterations_refine),
            ("q_max_leafs", self.q_max_leafs),
            ("behavior_samples", self.behavior_samples),
            ("behavior_max_leafs", self.behavior_max_leafs),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineEpisode {
    pub episode: usize,
    pub steps: usize,
    pub cumulative_reward: f64,
    /// Knownness forest size once this episode's visits are inserted.
    pub knownness_points: usize,
}

#[derive(Debug)]
pub struct OnlineRun {
    pub samples: Vec<Sample>,
    pub episodes: Vec<OnlineEpisode>,
    /// The behavior policy fitted after each episode (the last one is the
    /// run's product; earlier ones document the learning curve).
    pub policies: Vec<Policy>,
    pub knownness: KnownnessForest,
    /// Plain refit on everything collected, without optimism.
    pub final_q: QApproximation,
}

/// Learn by interacting: roll an episode (uniform random actions on the
/// first, the current optimistic policy afterwards), insert every visited
/// (state, action) into the knownness forest, refit Q on all collected
/// samples, push it toward r_max where knownness is low, and fit the next
/// behavior policy from the optimistic Q. Ends with a plain full refit.
pub fn online_learn(
    env: &dyn Environment,
    episodes: usize,
    params: &OnlineParams,
) -> Result<OnlineRun> {
    if episodes == 0 {
        return Err(Error::InvalidParameter("episodes must be positive".into()));
    }
    params.validate()?;
    let domain = env.joint_domain();
    let state_dim = env.state_dim();
    let knownness_params = params
        .knownness
        .clone()
        .with_seed(sub_seed(params.seed, "online-knownness", 0));
    let mut knownness = KnownnessForest::new(domain.clone(), knownness_params)?;
    let mut samples: Vec<Sample> = Vec::new();
    let mut records = Vec::new();
    let mut policies: Vec<Policy> = Vec::new();
    let mut q: Option<QApproximation> = None;

    for episode in 0..episodes {
        let mut rng = sub_rng(params.seed, "online-episode", episode as u64);
        let episode_samples = match policies.last() {
            None => random_episode(env, params.episode_steps, &mut rng),
            Some(p) => policy_episode(env, p, params.episode_steps, &mut rng)?.samples,
        };
        let mut joint = Vec::with_capacity(domain.dim());
        for s in &episode_samples {
            joint.clear();
            joint.extend_from_slice(&s.state);
            joint.extend_from_slice(&s.action);
            knownness.insert(&joint)?;
        }
        records.push(OnlineEpisode {
            episode,
            steps: episode_samples.len(),
            cumulative_reward: episode_samples.iter().map(|s| s.reward).sum(),
            knownness_points: knownness.count(),
        });
        samples.extend(episode_samples);

        let iterations = if q.is_none() {
            params.q_iterations_full
        } else {
            params.q_iterations_refine
        };
        let learner = params
            .q_learner
            .clone()
            .with_seed(sub_seed(params.seed, "online-q", episode as u64));
        let fitted = fitted_q_iteration_from(
            q.as_ref(),
            &samples,
            &domain,
            state_dim,
            env.gamma(),
            iterations,
            &learner,
            params.q_max_leafs,
        )?;
        let optimistic = QApproximation::new(
            apply_optimism(fitted.forest(), &knownness, env.r_max())?,
            state_dim,
            env.gamma(),
            params.q_max_leafs,
        )?;
        let behavior_learner = params
            .behavior_learner
            .clone()
            .with_seed(sub_seed(params.seed, "online-behavior", episode as u64));
        policies.push(extract_policy(
            &optimistic,
            params.behavior_samples,
            &behavior_learner,
            params.behavior_max_leafs,
            sub_seed(params.seed, "online-cloud", episode as u64),
        )?);
        q = Some(fitted);
    }

    let final_learner = params
        .q_learner
        .clone()
        .with_seed(sub_seed(params.seed, "online-q-final", 0));
    let final_q = fitted_q_iteration(
        &samples,
        &domain,
        state_dim,
        env.gamma(),
        params.q_iterations_full,
        &final_learner,
        params.q_max_leafs,
    )?;

    Ok(OnlineRun {
        samples,
        episodes: records,
        policies,
        knownness,
        final_q,
    })
}
