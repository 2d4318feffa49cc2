//! Walk through the tree algebra: project a tree onto a subrectangle,
//! average two trees pointwise, merge a forest into one tree, and prune
//! the result back down to a leaf budget.

use forest_rl::algebra::{argmax_over, average_trees, merge_forest, project_tree, prune_tree};
use forest_rl::tree::{LeafModel, Node};
use forest_rl::{HyperRectangle, RegressionForest, RegressionTree};

fn split(d: usize, at: f64, lower: Node, upper: Node) -> Node {
    Node::Split {
        dim: d,
        value: at,
        lower: Box::new(lower),
        upper: Box::new(upper),
    }
}

fn leaf(v: f64) -> Node {
    Node::Leaf(LeafModel::Constant(v))
}

fn main() -> forest_rl::Result<()> {
    let unit = HyperRectangle::unit(2);

    // Two small trees over the unit square with different split structure.
    let t1 = RegressionTree::new(
        split(0, 0.5, leaf(1.0), split(1, 0.5, leaf(2.0), leaf(3.0))),
        unit.clone(),
    )?;
    let t2 = RegressionTree::new(
        split(1, 0.25, leaf(10.0), leaf(20.0)),
        unit.clone(),
    )?;
    println!("t1: {} leaves, t2: {} leaves", t1.leaf_count(), t2.leaf_count());

    let window = HyperRectangle::new(vec![(0.5, 1.0), (0.0, 1.0)])?;
    let projected = project_tree(&t1, &window)?;
    println!(
        "t1 projected onto x1 in [0.5, 1]: {} leaves (the x1 split is gone)",
        projected.leaf_count()
    );

    let avg = average_trees(&t1, &t2, 1.0, 1.0)?;
    let probe = [0.75, 0.75];
    println!(
        "average at {:?}: {} = ({} + {}) / 2, {} leaves",
        probe,
        avg.predict(&probe)?,
        t1.predict(&probe)?,
        t2.predict(&probe)?,
        avg.leaf_count()
    );

    let forest = RegressionForest::new(vec![t1, t2])?;
    let merged = merge_forest(&forest, usize::MAX)?;
    println!(
        "merged forest: {} leaves, prediction at {:?} still {}",
        merged.leaf_count(),
        probe,
        merged.predict(&probe)?
    );

    let pruned = prune_tree(&merged, 3)?;
    println!(
        "pruned to 3 leaves: {} leaves, prediction at {:?} now {}",
        pruned.leaf_count(),
        probe,
        pruned.predict(&probe)?
    );

    let (arg, best) = argmax_over(&merged);
    println!("merged tree peaks at {:?} with value {}", arg, best);
    Ok(())
}
