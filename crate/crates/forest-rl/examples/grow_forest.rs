//! Fit Extra-Trees regression forests to a noisy analytic surface and
//! compare constant leaves against affine leaves on held-out points.

use forest_rl::extra_trees::{learn_forest, LeafKind, LearnerParams, TrainingSet};
use forest_rl::seeds::sub_rng;
use forest_rl::HyperRectangle;
use rand::Rng;

fn target(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() + x[1] * x[1]
}

fn main() -> forest_rl::Result<()> {
    let domain = HyperRectangle::new(vec![(-1.0, 1.0), (-1.0, 1.0)])?;
    let mut rng = sub_rng(7, "train", 0);
    let inputs: Vec<Vec<f64>> = (0..2000)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let outputs: Vec<f64> = inputs
        .iter()
        .map(|x| target(x) + rng.random_range(-0.05..0.05))
        .collect();
    let training = TrainingSet::new(inputs, outputs, domain)?;

    let probes: Vec<Vec<f64>> = {
        let mut rng = sub_rng(7, "probe", 0);
        (0..2000)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect()
    };

    println!("training points: {}", training.len());
    for (kind, n_min) in [(LeafKind::Constant, 8), (LeafKind::Linear, 40)] {
        let params = LearnerParams::new(11)
            .with_trees(25)
            .with_split_candidates(2)
            .with_min_leaf_samples(n_min)
            .with_leaf_kind(kind);
        let forest = learn_forest(&training, &params)?;
        let mut sq = 0.0;
        for p in &probes {
            let err = forest.predict(p)? - target(p);
            sq += err * err;
        }
        println!(
            "{:?} leaves (n_min {}): {} trees, {} leaves total, held-out RMSE {:.4}",
            kind,
            n_min,
            forest.len(),
            forest.total_leaf_count(),
            (sq / probes.len() as f64).sqrt()
        );
    }
    Ok(())
}
