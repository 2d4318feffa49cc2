//! A closed algebra on regression trees.
//!
//! Four operations keep Q-function manipulation inside the tree family:
//!
//! * [`project_tree`] restricts a tree to a sub-rectangle, dropping every
//!   split the rectangle decides (typically: fix the state, keep the action
//!   dimensions free);
//! * [`average_trees`] builds a single tree computing the weighted mean of
//!   two trees, by walking both structures simultaneously and eliminating
//!   branches the current cell cannot reach;
//! * [`prune_tree`] shrinks a tree to a leaf budget by repeatedly collapsing
//!   the pre-leaf split whose removal distorts the function least;
//! * [`merge_forest`] left-folds a forest into one bounded-size tree with
//!   [`average_trees`] + [`prune_tree`], so that a forest's mean prediction
//!   becomes one cheap structure to maximize over.
//!
//! [`argmax_over`] then maximizes a tree in closed form by enumerating leaf
//! cells: constant leaves peak at their cell center, affine leaves at the
//! corner picked by coefficient signs.
//!
//! Boundary convention: everywhere below, a point on a split boundary belongs
//! to the lower child (`x <= value`), matching prediction routing. Where the
//! projection and averaging walks decide reachability, comparisons are chosen
//! so that a cell degenerate in the split dimension follows the same rule.

use crate::error::{Error, Result};
use crate::geometry::HyperRectangle;
use crate::tree::{LeafModel, Node, RegressionForest, RegressionTree};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Restrict `t` to the rectangle `h` (which must lie inside the tree's
/// domain). Splits decided by `h` disappear; the result predicts exactly as
/// `t` does everywhere in `h` and has domain `h`.
pub fn project_tree(t: &RegressionTree, h: &HyperRectangle) -> Result<RegressionTree> {
    if h.dim() != t.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: t.input_dim(),
            got: h.dim(),
        });
    }
    if !t.domain().contains_rect(h) {
        return Err(Error::ProjectionOutsideDomain);
    }
    fn proj(node: &Node, h: &HyperRectangle) -> Node {
        match node {
            Node::Leaf(m) => Node::Leaf(m.clone()),
            Node::Split {
                dim, value, lower, upper,
            } => {
                if *value >= h.max(*dim) {
                    // everything in h routes lower (ties route lower too)
                    proj(lower, h)
                } else if *value <= h.min(*dim) {
                    proj(upper, h)
                } else {
                    Node::Split {
                        dim: *dim,
                        value: *value,
                        lower: Box::new(proj(lower, h)),
                        upper: Box::new(proj(upper, h)),
                    }
                }
            }
        }
    }
    Ok(RegressionTree::from_parts(
        proj(t.root(), h),
        h.dim(),
        h.clone(),
    ))
}

fn combine_models(m1: &LeafModel, w1: f64, m2: &LeafModel, w2: f64, dims: usize) -> LeafModel {
    let total = w1 + w2;
    match (m1, m2) {
        (LeafModel::Constant(a), LeafModel::Constant(b)) => {
            LeafModel::Constant((w1 * a + w2 * b) / total)
        }
        _ => {
            let (b1, c1) = split_affine(m1, dims);
            let (b2, c2) = split_affine(m2, dims);
            LeafModel::Linear {
                intercept: (w1 * b1 + w2 * b2) / total,
                coefficients: (0..dims)
                    .map(|d| (w1 * c1[d] + w2 * c2[d]) / total)
                    .collect(),
            }
        }
    }
}

/// Weighted pointwise average of two trees over their (shared) domain.
///
/// The result is a single tree with `t'(x) = (w1 t1(x) + w2 t2(x)) / (w1+w2)`
/// at every point of the domain; branches that the simultaneous walk proves
/// unreachable are dropped, so no empty leaf cells appear.
pub fn average_trees(
    t1: &RegressionTree,
    t2: &RegressionTree,
    w1: f64,
    w2: f64,
) -> Result<RegressionTree> {
    if t1.input_dim() != t2.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: t1.input_dim(),
            got: t2.input_dim(),
        });
    }
    if t1.domain() != t2.domain() {
        return Err(Error::Config(
            "averaged trees must share a common domain".into(),
        ));
    }
    for w in [w1, w2] {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::NonPositiveWeight(w));
        }
    }
    let dims = t1.input_dim();
    let mut h = t1.domain().clone();
    let root = avg_nodes(t1.root(), w1, t2.root(), w2, &mut h, dims);
    Ok(RegressionTree::from_parts(root, dims, t1.domain().clone()))
}

/// Simultaneous walk. Splits of the first tree are unrolled into the result;
/// once the first tree reaches a leaf the roles swap, so both trees'
/// structures interleave. The cell `h` tracks the region being built and is
/// restored before returning.
fn avg_nodes(
    n1: &Node,
    w1: f64,
    n2: &Node,
    w2: f64,
    h: &mut HyperRectangle,
    dims: usize,
) -> Node {
    match n1 {
        Node::Leaf(m1) => match n2 {
            Node::Leaf(m2) => Node::Leaf(combine_models(m1, w1, m2, w2, dims)),
            _ => avg_nodes(n2, w2, n1, w1, h, dims),
        },
        Node::Split {
            dim, value, lower, upper,
        } => {
            let (d, v) = (*dim, *value);
            if v >= h.max(d) {
                // the whole cell routes into the lower child
                avg_nodes(n2, w2, lower, w1, h, dims)
            } else if v <= h.min(d) {
                // the cell's interior routes into the upper child
                avg_nodes(n2, w2, upper, w1, h, dims)
            } else {
                let hi = h.max(d);
                h.set_max(d, v);
                let new_lower = avg_nodes(n2, w2, lower, w1, h, dims);
                h.set_max(d, hi);
                let lo = h.min(d);
                h.set_min(d, v);
                let new_upper = avg_nodes(n2, w2, upper, w1, h, dims);
                h.set_min(d, lo);
                Node::Split {
                    dim: d,
                    value: v,
                    lower: Box::new(new_lower),
                    upper: Box::new(new_upper),
                }
            }
        }
    }
}

/// How pruning measures the damage of collapsing two sibling leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneLoss {
    /// Integrated absolute deviation between the replacement model and the
    /// children (exact for constant leaves and for affine leaves over cells
    /// with one free dimension; for affine leaves over wider cells the signed
    /// integral's magnitude is used).
    #[default]
    Absolute,
    /// Integrated signed deviation, taken literally. With constant leaves the
    /// volume-weighted replacement preserves mass, so every candidate scores
    /// zero and pruning degenerates to removal in queue order; kept for
    /// comparison only.
    Signed,
}

struct ArenaNode {
    parent: Option<usize>,
    cell: HyperRectangle,
    kind: ArenaKind,
}

enum ArenaKind {
    Split {
        dim: usize,
        value: f64,
        lower: usize,
        upper: usize,
    },
    Leaf(LeafModel),
}

struct Candidate {
    loss: f64,
    seq: u64,
    index: usize,
    replacement: LeafModel,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.loss.total_cmp(&other.loss) == Ordering::Equal && self.seq == other.seq
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // BinaryHeap is a max-heap; reverse so the smallest loss pops first,
    // ties resolved by insertion sequence.
    fn cmp(&self, other: &Self) -> Ordering {
        self.loss
            .total_cmp(&other.loss)
            .then(self.seq.cmp(&other.seq))
            .reverse()
    }
}

/// Volume of a cell measured over the given dimensions only. Projected trees
/// live on rectangles that are degenerate in the fixed dimensions; measuring
/// in the free subspace keeps the volume weights meaningful there.
fn subspace_volume(cell: &HyperRectangle, active: &[usize]) -> f64 {
    active.iter().map(|&d| cell.edge(d)).product()
}

/// Integral of the affine difference (db + dc . x) over a cell, restricted to
/// the active dimensions (the others contribute through their fixed
/// coordinate). Returns the pair (signed integral, exact absolute integral if
/// available).
fn affine_integrals(
    db: f64,
    dc: &[f64],
    cell: &HyperRectangle,
    active: &[usize],
) -> (f64, Option<f64>) {
    let mut constant = db;
    let mut free: Vec<usize> = Vec::new();
    for &d in active {
        if cell.edge(d) == 0.0 {
            constant += dc[d] * cell.min(d);
        } else {
            free.push(d);
        }
    }
    for (d, c) in dc.iter().enumerate() {
        if !active.contains(&d) {
            constant += c * cell.min(d);
        }
    }
    let volume = subspace_volume(cell, active);
    if volume == 0.0 {
        return (0.0, Some(0.0));
    }
    match free.len() {
        0 => (0.0, Some(0.0)),
        1 => {
            let d = free[0];
            let (lo, hi) = (cell.min(d), cell.max(d));
            let c = dc[d];
            // fold the other degenerate coordinates in; integrate |constant + c x|
            let f = |x: f64| constant * x + 0.5 * c * x * x;
            let signed = f(hi) - f(lo);
            let abs = if c == 0.0 {
                constant.abs() * (hi - lo)
            } else {
                let r = -constant / c;
                if r > lo && r < hi {
                    (f(r) - f(lo)).abs() + (f(hi) - f(r)).abs()
                } else {
                    signed.abs()
                }
            };
            (signed, Some(abs))
        }
        _ => {
            // signed integral of an affine function: value at center x volume
            let mut at_center = constant;
            for &d in &free {
                at_center += dc[d] * 0.5 * (cell.min(d) + cell.max(d));
            }
            (at_center * volume, None)
        }
    }
}

fn candidate_loss(
    lower: (&LeafModel, &HyperRectangle),
    upper: (&LeafModel, &HyperRectangle),
    active: &[usize],
    dims: usize,
    kind: PruneLoss,
) -> (f64, LeafModel) {
    let vol_l = subspace_volume(lower.1, active);
    let vol_u = subspace_volume(upper.1, active);
    let total = vol_l + vol_u;
    let (wl, wu) = if total > 0.0 {
        (vol_l / total, vol_u / total)
    } else {
        (0.5, 0.5)
    };

    match (lower.0, upper.0) {
        (LeafModel::Constant(cl), LeafModel::Constant(cu)) => {
            let c = wl * cl + wu * cu;
            let loss = match kind {
                PruneLoss::Absolute => vol_l * (c - cl).abs() + vol_u * (c - cu).abs(),
                PruneLoss::Signed => vol_l * (c - cl) + vol_u * (c - cu),
            };
            (loss, LeafModel::Constant(c))
        }
        (ml, mu) => {
            let (bl, cl) = split_affine(ml, dims);
            let (bu, cu) = split_affine(mu, dims);
            let b = wl * bl + wu * bu;
            let coefs: Vec<f64> = (0..dims).map(|d| wl * cl[d] + wu * cu[d]).collect();
            let mut loss = 0.0;
            for (side_b, side_c, cell) in [(bl, &cl, lower.1), (bu, &cu, upper.1)] {
                let db = b - side_b;
                let dc: Vec<f64> = (0..dims).map(|d| coefs[d] - side_c[d]).collect();
                let (signed, abs) = affine_integrals(db, &dc, cell, active);
                loss += match kind {
                    PruneLoss::Absolute => abs.unwrap_or_else(|| signed.abs()),
                    PruneLoss::Signed => signed,
                };
            }
            (
                loss,
                LeafModel::Linear {
                    intercept: b,
                    coefficients: coefs,
                },
            )
        }
    }
}

fn split_affine(m: &LeafModel, dims: usize) -> (f64, Vec<f64>) {
    match m {
        LeafModel::Constant(c) => (*c, vec![0.0; dims]),
        LeafModel::Linear {
            intercept,
            coefficients,
        } => (*intercept, coefficients.clone()),
    }
}

/// Prune with the default absolute-deviation loss.
pub fn prune_tree(t: &RegressionTree, max_leafs: usize) -> Result<RegressionTree> {
    prune_tree_with(t, max_leafs, PruneLoss::Absolute)
}

/// Collapse pre-leaf splits, cheapest first, until the tree fits the leaf
/// budget. The replacement model is the volume-weighted average of the two
/// children; when a removal turns its parent into a pre-leaf, the parent
/// joins the candidate queue. Asking for a budget at or above the current
/// leaf count returns the tree unchanged.
pub fn prune_tree_with(
    t: &RegressionTree,
    max_leafs: usize,
    kind: PruneLoss,
) -> Result<RegressionTree> {
    if max_leafs == 0 {
        return Err(Error::ZeroLeafBudget);
    }
    let mut leaves = t.leaf_count();
    if leaves <= max_leafs {
        return Ok(t.clone());
    }
    let dims = t.input_dim();
    let active: Vec<usize> = (0..dims).filter(|&d| t.domain().edge(d) > 0.0).collect();

    // flatten into an arena so nodes can be rewritten in place
    let mut arena: Vec<ArenaNode> = Vec::new();
    fn flatten(
        node: &Node,
        cell: HyperRectangle,
        parent: Option<usize>,
        arena: &mut Vec<ArenaNode>,
    ) -> usize {
        let index = arena.len();
        arena.push(ArenaNode {
            parent,
            cell: cell.clone(),
            kind: ArenaKind::Leaf(LeafModel::Constant(0.0)), // placeholder
        });
        let kind = match node {
            Node::Leaf(m) => ArenaKind::Leaf(m.clone()),
            Node::Split {
                dim, value, lower, upper,
            } => {
                let (lo_cell, hi_cell) = cell.split(*dim, *value).expect("consistent tree");
                let lower = flatten(lower, lo_cell, Some(index), arena);
                let upper = flatten(upper, hi_cell, Some(index), arena);
                ArenaKind::Split {
                    dim: *dim,
                    value: *value,
                    lower,
                    upper,
                }
            }
        };
        arena[index].kind = kind;
        index
    }
    flatten(t.root(), t.domain().clone(), None, &mut arena);

    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let push_if_preleaf = |arena: &Vec<ArenaNode>,
                               index: usize,
                               seq: &mut u64,
                               heap: &mut BinaryHeap<Candidate>| {
        if let ArenaKind::Split { lower, upper, .. } = arena[index].kind {
            if let (ArenaKind::Leaf(ml), ArenaKind::Leaf(mu)) =
                (&arena[lower].kind, &arena[upper].kind)
            {
                let (loss, replacement) = candidate_loss(
                    (ml, &arena[lower].cell),
                    (mu, &arena[upper].cell),
                    &active,
                    dims,
                    kind,
                );
                heap.push(Candidate {
                    loss,
                    seq: *seq,
                    index,
                    replacement,
                });
                *seq += 1;
            }
        }
    };
    for i in 0..arena.len() {
        push_if_preleaf(&arena, i, &mut seq, &mut heap);
    }

    while leaves > max_leafs {
        let c = heap.pop().expect("pre-leaf candidates exist while leaves > 1");
        arena[c.index].kind = ArenaKind::Leaf(c.replacement);
        leaves -= 1;
        if let Some(p) = arena[c.index].parent {
            push_if_preleaf(&arena, p, &mut seq, &mut heap);
        }
    }

    fn rebuild(arena: &[ArenaNode], index: usize) -> Node {
        match &arena[index].kind {
            ArenaKind::Leaf(m) => Node::Leaf(m.clone()),
            ArenaKind::Split {
                dim, value, lower, upper,
            } => Node::Split {
                dim: *dim,
                value: *value,
                lower: Box::new(rebuild(arena, *lower)),
                upper: Box::new(rebuild(arena, *upper)),
            },
        }
    }
    Ok(RegressionTree::from_parts(
        rebuild(&arena, 0),
        dims,
        t.domain().clone(),
    ))
}

/// Fold a forest into a single tree approximating the forest mean, pruning to
/// the leaf budget after every pairwise merge. The running average carries
/// weight equal to the number of trees already folded, so the result is the
/// uniform mean regardless of order.
pub fn merge_forest(f: &RegressionForest, max_leafs: usize) -> Result<RegressionTree> {
    if max_leafs == 0 {
        return Err(Error::ZeroLeafBudget);
    }
    let trees = f.trees();
    let mut acc = prune_tree(&trees[0], max_leafs)?;
    for (i, t) in trees.iter().enumerate().skip(1) {
        let merged = average_trees(&acc, t, i as f64, 1.0)?;
        acc = prune_tree(&merged, max_leafs)?;
    }
    Ok(acc)
}

/// Closed-form maximization: enumerate leaves, evaluate each leaf's best
/// point (cell center for constant leaves; for affine leaves the corner
/// selected by coefficient signs, centered in zero-coefficient dimensions),
/// and keep the best. Ties keep the first leaf in preorder. Returns the
/// maximizing point and the value there.
pub fn argmax_over(t: &RegressionTree) -> (Vec<f64>, f64) {
    let mut best_point: Option<Vec<f64>> = None;
    let mut best_value = f64::NEG_INFINITY;
    t.for_each_leaf(|model, cell| {
        let point: Vec<f64> = match model {
            LeafModel::Constant(_) => cell.center(),
            LeafModel::Linear { coefficients, .. } => (0..cell.dim())
                .map(|d| {
                    let c = coefficients[d];
                    if c > 0.0 {
                        cell.max(d)
                    } else if c < 0.0 {
                        cell.min(d)
                    } else {
                        0.5 * (cell.min(d) + cell.max(d))
                    }
                })
                .collect(),
        };
        let value = model.evaluate(&point);
        if value > best_value {
            best_value = value;
            best_point = Some(point);
        }
    });
    (best_point.expect("tree has at least one leaf"), best_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::sub_rng;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn constant(c: f64) -> Node {
        Node::Leaf(LeafModel::Constant(c))
    }

    fn split(dim: usize, value: f64, lower: Node, upper: Node) -> Node {
        Node::Split {
            dim,
            value,
            lower: Box::new(lower),
            upper: Box::new(upper),
        }
    }

    /// Same worked example as in the tree module tests.
    fn example_tree() -> RegressionTree {
        let root = split(
            0,
            30.0,
            split(1, 5.0, constant(0.0), constant(1.0)),
            split(1, 10.0, constant(0.2), constant(0.3)),
        );
        let domain = HyperRectangle::new(vec![(0.0, 100.0), (0.0, 100.0)]).unwrap();
        RegressionTree::new(root, domain).unwrap()
    }

    /// Random piecewise-constant tree over the given domain.
    pub(crate) fn random_tree(
        rng: &mut ChaCha8Rng,
        domain: &HyperRectangle,
        max_depth: usize,
    ) -> RegressionTree {
        fn gen(rng: &mut ChaCha8Rng, cell: &mut HyperRectangle, depth: usize) -> Node {
            let splittable: Vec<usize> =
                (0..cell.dim()).filter(|&d| cell.edge(d) > 1e-9).collect();
            if depth == 0 || splittable.is_empty() || rng.random_range(0.0..1.0) < 0.3 {
                return Node::Leaf(LeafModel::Constant(rng.random_range(-10.0..10.0)));
            }
            let d = splittable[rng.random_range(0..splittable.len())];
            let v = rng.random_range(cell.min(d)..cell.max(d));
            let hi = cell.max(d);
            cell.set_max(d, v);
            let lower = gen(rng, cell, depth - 1);
            cell.set_max(d, hi);
            let lo = cell.min(d);
            cell.set_min(d, v);
            let upper = gen(rng, cell, depth - 1);
            cell.set_min(d, lo);
            Node::Split {
                dim: d,
                value: v,
                lower: Box::new(lower),
                upper: Box::new(upper),
            }
        }
        let mut cell = domain.clone();
        let root = gen(rng, &mut cell, max_depth);
        RegressionTree::new(root, domain.clone()).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, domain: &HyperRectangle) -> Vec<f64> {
        (0..domain.dim())
            .map(|d| {
                if domain.edge(d) == 0.0 {
                    domain.min(d)
                } else {
                    rng.random_range(domain.min(d)..domain.max(d))
                }
            })
            .collect()
    }

    // ---- projection ----

    #[test]
    fn projecting_onto_a_state_slice_drops_decided_splits() {
        let t = example_tree();
        let h = HyperRectangle::new(vec![(20.0, 20.0), (0.0, 100.0)]).unwrap();
        let p = project_tree(&t, &h).unwrap();
        // x0 is fixed at 20, so only the x1 <= 5 split survives
        match p.root() {
            Node::Split { dim, value, lower, upper } => {
                assert_eq!((*dim, *value), (1, 5.0));
                assert_eq!(**lower, constant(0.0));
                assert_eq!(**upper, constant(1.0));
            }
            _ => panic!("expected one surviving split"),
        }
        assert_eq!(p.domain(), &h);
    }

    #[test]
    fn projection_agrees_with_the_original_everywhere_inside() {
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (-2.0, 2.0), (0.0, 5.0)]).unwrap();
        let mut rng = sub_rng(11, "proj", 0);
        for round in 0..300 {
            let t = random_tree(&mut rng, &domain, 6);
            // random sub-rectangle, sometimes degenerate in a dimension
            let bounds: Vec<(f64, f64)> = (0..3)
                .map(|d| {
                    if rng.random_range(0.0..1.0) < 0.5 {
                        let x = rng.random_range(domain.min(d)..domain.max(d));
                        (x, x)
                    } else {
                        let a = rng.random_range(domain.min(d)..domain.max(d));
                        let b = rng.random_range(domain.min(d)..domain.max(d));
                        (a.min(b), a.max(b))
                    }
                })
                .collect();
            let h = HyperRectangle::new(bounds).unwrap();
            let p = project_tree(&t, &h).unwrap();
            for _ in 0..20 {
                let x = random_point(&mut rng, &h);
                assert_eq!(
                    p.predict(&x).unwrap(),
                    t.predict(&x).unwrap(),
                    "round {round}: projection changed a prediction"
                );
            }
        }
    }

    #[test]
    fn projection_outside_domain_is_rejected() {
        let t = example_tree();
        let h = HyperRectangle::new(vec![(50.0, 150.0), (0.0, 100.0)]).unwrap();
        assert!(project_tree(&t, &h).is_err());
    }

    // ---- averaging ----

    #[test]
    fn average_identity_on_random_pairs() {
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let mut rng = sub_rng(12, "avg", 0);
        for _ in 0..300 {
            let t1 = random_tree(&mut rng, &domain, 6);
            let t2 = random_tree(&mut rng, &domain, 6);
            let w1 = rng.random_range(0.1..5.0);
            let w2 = rng.random_range(0.1..5.0);
            let merged = average_trees(&t1, &t2, w1, w2).unwrap();
            for _ in 0..20 {
                let x = random_point(&mut rng, &domain);
                let want =
                    (w1 * t1.predict(&x).unwrap() + w2 * t2.predict(&x).unwrap()) / (w1 + w2);
                assert!((merged.predict(&x).unwrap() - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn self_average_is_pointwise_exact_even_on_split_boundaries() {
        let t = example_tree();
        let merged = average_trees(&t, &t, 1.0, 1.0).unwrap();
        for x in [
            [30.0, 5.0],
            [30.0, 10.0],
            [0.0, 0.0],
            [100.0, 100.0],
            [30.0, 0.0],
            [31.0, 10.0],
            [29.0, 5.0],
        ] {
            assert_eq!(merged.predict(&x).unwrap(), t.predict(&x).unwrap());
        }
    }

    #[test]
    fn averaging_rejects_bad_weights_and_mismatched_domains() {
        let t = example_tree();
        assert!(average_trees(&t, &t, 0.0, 1.0).is_err());
        assert!(average_trees(&t, &t, 1.0, -2.0).is_err());
        let other = RegressionTree::leaf(LeafModel::Constant(0.0), HyperRectangle::unit(2)).unwrap();
        assert!(average_trees(&t, &other, 1.0, 1.0).is_err());
    }

    /// Frozen regression for the published two-tree merge example: equal
    /// weights, every resulting cell checked against hand-derived values.
    #[test]
    fn two_tree_merge_matches_hand_derived_cells() {
        let domain = HyperRectangle::new(vec![(0.0, 10.0), (0.0, 15.0)]).unwrap();
        let t1 = RegressionTree::new(
            split(
                0,
                5.0,
                split(1, 6.0, constant(1.0), constant(2.0)),
                split(1, 5.0, constant(3.0), constant(4.0)),
            ),
            domain.clone(),
        )
        .unwrap();
        let t2 = RegressionTree::new(
            split(
                1,
                8.0,
                split(0, 7.0, constant(5.0), constant(6.0)),
                split(1, 12.0, constant(7.0), constant(8.0)),
            ),
            domain.clone(),
        )
        .unwrap();
        let merged = average_trees(&t1, &t2, 1.0, 1.0).unwrap();
        let cases: &[([f64; 2], f64)] = &[
            ([4.0, 5.0], 3.0),   // (1+5)/2
            ([4.0, 7.0], 3.5),   // (2+5)/2
            ([4.0, 10.0], 4.5),  // (2+7)/2
            ([4.0, 14.0], 5.0),  // (2+8)/2
            ([6.0, 3.0], 4.0),   // (3+5)/2
            ([8.0, 3.0], 4.5),   // (3+6)/2
            ([6.0, 7.0], 4.5),   // (4+5)/2
            ([8.0, 7.0], 5.0),   // (4+6)/2
            ([6.0, 10.0], 5.5),  // (4+7)/2
            ([6.0, 14.0], 6.0),  // (4+8)/2
        ];
        for (x, want) in cases {
            assert_eq!(merged.predict(x).unwrap(), *want, "at {x:?}");
        }
    }

    // ---- pruning ----

    #[test]
    fn prune_collapses_cheapest_preleaf_with_volume_weighted_replacement() {
        // [0, 0.5) -> 1 ; [0.5, 0.75) -> 2 ; [0.75, 1] -> 4
        let t = RegressionTree::new(
            split(
                0,
                0.5,
                constant(1.0),
                split(0, 0.75, constant(2.0), constant(4.0)),
            ),
            HyperRectangle::unit(1),
        )
        .unwrap();

        // collapsing 2|4 costs 0.25*1 + 0.25*1 = 0.5 and yields 3
        let p2 = prune_tree(&t, 2).unwrap();
        assert_eq!(p2.leaf_count(), 2);
        assert_eq!(p2.predict(&[0.25]).unwrap(), 1.0);
        assert_eq!(p2.predict(&[0.9]).unwrap(), 3.0);

        // then collapsing 1|3 yields (0.5*1 + 0.5*3) / 1 = 2
        let p1 = prune_tree(&t, 1).unwrap();
        assert_eq!(p1.leaf_count(), 1);
        assert_eq!(p1.predict(&[0.1]).unwrap(), 2.0);
    }

    #[test]
    fn prune_picks_the_smaller_loss_first() {
        // left pair differs by 0.1 over width 0.5, right pair by 10 over 0.5:
        // the left collapse must happen first
        let t = RegressionTree::new(
            split(
                0,
                0.5,
                split(0, 0.25, constant(1.0), constant(1.1)),
                split(0, 0.75, constant(0.0), constant(10.0)),
            ),
            HyperRectangle::unit(1),
        )
        .unwrap();
        let p = prune_tree(&t, 3).unwrap();
        assert_eq!(p.leaf_count(), 3);
        assert!((p.predict(&[0.1]).unwrap() - 1.05).abs() < 1e-12);
        assert_eq!(p.predict(&[0.6]).unwrap(), 0.0);
        assert_eq!(p.predict(&[0.9]).unwrap(), 10.0);
    }

    #[test]
    fn generous_budget_is_identity() {
        let mut rng = sub_rng(13, "prune", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        for _ in 0..50 {
            let t = random_tree(&mut rng, &domain, 6);
            let p = prune_tree(&t, t.leaf_count()).unwrap();
            assert_eq!(&p, &t);
        }
    }

    #[test]
    fn prune_respects_any_budget() {
        let mut rng = sub_rng(14, "prune-b", 0);
        let domain = HyperRectangle::new(vec![(0.0, 2.0), (-1.0, 1.0)]).unwrap();
        for _ in 0..50 {
            let t = random_tree(&mut rng, &domain, 8);
            for budget in [1usize, 2, 3, 5, 8] {
                let p = prune_tree(&t, budget).unwrap();
                assert!(p.leaf_count() <= budget);
                assert_eq!(p.domain(), t.domain());
            }
        }
        assert!(prune_tree(&random_tree(&mut rng, &domain, 3), 0).is_err());
    }

    #[test]
    fn fully_pruned_tree_carries_the_volume_weighted_mean() {
        let mut rng = sub_rng(15, "prune-m", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        for _ in 0..30 {
            let t = random_tree(&mut rng, &domain, 6);
            let mut mean = 0.0;
            t.for_each_leaf(|m, cell| {
                if let LeafModel::Constant(c) = m {
                    mean += c * cell.size();
                }
            });
            let p = prune_tree(&t, 1).unwrap();
            // collapsing with volume weights preserves the integral
            assert!(
                (p.predict(&[0.3, 0.3]).unwrap() - mean).abs() < 1e-9,
                "integral not preserved"
            );
        }
    }

    /// With the literal signed deviation, the volume-weighted replacement
    /// preserves mass, so every constant-leaf candidate scores exactly zero;
    /// this is why the loss defaults to absolute deviation.
    #[test]
    fn signed_loss_degenerates_for_constant_leaves() {
        let t = RegressionTree::new(
            split(
                0,
                0.5,
                constant(1.0),
                split(0, 0.75, constant(2.0), constant(4.0)),
            ),
            HyperRectangle::unit(1),
        )
        .unwrap();
        let (loss, _) = candidate_loss(
            (
                &LeafModel::Constant(2.0),
                &HyperRectangle::new(vec![(0.5, 0.75)]).unwrap(),
            ),
            (
                &LeafModel::Constant(4.0),
                &HyperRectangle::new(vec![(0.75, 1.0)]).unwrap(),
            ),
            &[0],
            1,
            PruneLoss::Signed,
        );
        assert!(loss.abs() < 1e-15);
        // pruning still terminates and respects the budget in that mode
        let p = prune_tree_with(&t, 1, PruneLoss::Signed).unwrap();
        assert_eq!(p.leaf_count(), 1);
    }

    #[test]
    fn pruning_affine_leaves_prefers_matching_models() {
        // two pairs of affine leaves; the left pair is continuous across its
        // split, the right pair jumps, so the left pair collapses first
        let lin = |b: f64, c: f64| {
            Node::Leaf(LeafModel::Linear {
                intercept: b,
                coefficients: vec![c],
            })
        };
        let t = RegressionTree::new(
            split(
                0,
                0.5,
                split(0, 0.25, lin(0.0, 1.0), lin(0.0, 1.0)),
                split(0, 0.75, lin(5.0, 0.0), lin(-5.0, 0.0)),
            ),
            HyperRectangle::unit(1),
        )
        .unwrap();
        let p = prune_tree(&t, 3).unwrap();
        // identical left models merged into one leaf; prediction unchanged
        assert_eq!(p.leaf_count(), 3);
        for x in [0.1, 0.2, 0.4] {
            assert!((p.predict(&[x]).unwrap() - x).abs() < 1e-12);
        }
        assert_eq!(p.predict(&[0.6]).unwrap(), 5.0);
        assert_eq!(p.predict(&[0.9]).unwrap(), -5.0);
    }

    // ---- merging ----

    #[test]
    fn merging_copies_of_one_tree_reproduces_it() {
        let mut rng = sub_rng(16, "merge", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let t = random_tree(&mut rng, &domain, 5);
        let forest =
            RegressionForest::new(vec![t.clone(), t.clone(), t.clone(), t.clone()]).unwrap();
        let merged = merge_forest(&forest, usize::MAX).unwrap();
        for _ in 0..200 {
            let x = random_point(&mut rng, &domain);
            assert!((merged.predict(&x).unwrap() - t.predict(&x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn unbounded_merge_equals_forest_mean() {
        let mut rng = sub_rng(17, "merge-f", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (-1.0, 1.0)]).unwrap();
        for _ in 0..20 {
            let trees: Vec<RegressionTree> =
                (0..7).map(|_| random_tree(&mut rng, &domain, 5)).collect();
            let forest = RegressionForest::new(trees).unwrap();
            let merged = merge_forest(&forest, usize::MAX).unwrap();
            for _ in 0..50 {
                let x = random_point(&mut rng, &domain);
                let err = (merged.predict(&x).unwrap() - forest.predict(&x).unwrap()).abs();
                assert!(err <= 1e-10, "merge deviates from forest mean by {err}");
            }
        }
    }

    #[test]
    fn bounded_merge_respects_the_budget() {
        let mut rng = sub_rng(18, "merge-b", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]).unwrap();
        let trees: Vec<RegressionTree> =
            (0..10).map(|_| random_tree(&mut rng, &domain, 7)).collect();
        let forest = RegressionForest::new(trees).unwrap();
        for budget in [1usize, 5, 20, 100] {
            let merged = merge_forest(&forest, budget).unwrap();
            assert!(merged.leaf_count() <= budget);
        }
    }

    // ---- argmax ----

    #[test]
    fn argmax_of_a_constant_tree_is_the_domain_center() {
        let t = RegressionTree::leaf(
            LeafModel::Constant(0.7),
            HyperRectangle::new(vec![(-2.0, 4.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(argmax_over(&t), (vec![1.0], 0.7));
    }

    #[test]
    fn argmax_picks_the_best_constant_leaf_center() {
        let t = RegressionTree::new(
            split(0, 0.0, constant(0.2), constant(0.5)),
            HyperRectangle::new(vec![(-1.0, 1.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(argmax_over(&t), (vec![0.5], 0.5));
    }

    #[test]
    fn argmax_of_an_affine_leaf_sits_on_the_signed_corner() {
        let t = RegressionTree::leaf(
            LeafModel::Linear {
                intercept: 0.1,
                coefficients: vec![0.3],
            },
            HyperRectangle::new(vec![(-1.0, 1.0)]).unwrap(),
        )
        .unwrap();
        let (arg, value) = argmax_over(&t);
        assert_eq!(arg, vec![1.0]);
        assert!((value - 0.4).abs() < 1e-15);

        let t = RegressionTree::leaf(
            LeafModel::Linear {
                intercept: 0.1,
                coefficients: vec![-0.3],
            },
            HyperRectangle::new(vec![(-1.0, 1.0)]).unwrap(),
        )
        .unwrap();
        let (arg, value) = argmax_over(&t);
        assert_eq!(arg, vec![-1.0]);
        assert!((value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn argmax_ties_keep_the_first_leaf_in_preorder() {
        let t = RegressionTree::new(
            split(0, 0.5, constant(1.0), constant(1.0)),
            HyperRectangle::unit(1),
        )
        .unwrap();
        assert_eq!(argmax_over(&t), (vec![0.25], 1.0));
    }

    #[test]
    fn argmax_against_brute_force_on_random_trees() {
        let mut rng = sub_rng(19, "argmax", 0);
        let domain = HyperRectangle::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        for _ in 0..100 {
            let t = random_tree(&mut rng, &domain, 6);
            let (_, value) = argmax_over(&t);
            let mut brute = f64::NEG_INFINITY;
            for _ in 0..500 {
                let x = random_point(&mut rng, &domain);
                brute = brute.max(t.predict(&x).unwrap());
            }
            assert!(value >= brute - 1e-12);
        }
    }
}
