//! Build a knownness forest over a 2-D box, feed it a clustered point
//! cloud, and show how knownness falls off away from the data. Then apply
//! the optimism transform to a value forest and print the lift.

use forest_rl::exploration::{apply_optimism, KnownnessForest, KnownnessParams, KnownnessVariant};
use forest_rl::extra_trees::{learn_forest, LearnerParams, TrainingSet};
use forest_rl::seeds::sub_rng;
use forest_rl::HyperRectangle;
use rand::Rng;

fn main() -> forest_rl::Result<()> {
    let domain = HyperRectangle::new(vec![(-1.0, 1.0), (-1.0, 1.0)])?;

    for variant in [KnownnessVariant::Density, KnownnessVariant::Resolution] {
        let params = KnownnessParams::new(3)
            .with_trees(25)
            .with_capacity(10)
            .with_variant(variant);
        let mut forest = KnownnessForest::new(domain.clone(), params)?;

        // Cluster near the origin plus a sprinkle of far points.
        let mut rng = sub_rng(3, "cloud", 0);
        for _ in 0..300 {
            let p = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)];
            forest.insert(&p)?;
        }
        for _ in 0..10 {
            let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            forest.insert(&p)?;
        }

        println!("{:?} knownness after {} insertions:", variant, forest.count());
        for probe in [[0.0, 0.0], [0.5, 0.5], [0.9, -0.9]] {
            println!("  at {:?}: {:.3}", probe, forest.knownness(&probe)?);
        }
    }

    // Optimism: where knownness is low, leaf values move toward r_max.
    let mut rng = sub_rng(3, "values", 0);
    let inputs: Vec<Vec<f64>> = (0..400)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let outputs: Vec<f64> = inputs.iter().map(|x| -x[0].abs() - x[1].abs()).collect();
    let values = learn_forest(
        &TrainingSet::new(inputs, outputs, domain.clone())?,
        &LearnerParams::new(5).with_trees(10).with_min_leaf_samples(20),
    )?;

    let params = KnownnessParams::new(3).with_trees(25).with_capacity(10);
    let mut known = KnownnessForest::new(domain, params)?;
    let mut rng = sub_rng(3, "known", 0);
    for _ in 0..200 {
        let p = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
        known.insert(&p)?;
    }

    let r_max = 0.0;
    let optimistic = apply_optimism(&values, &known, r_max)?;
    println!("optimism with r_max = {}:", r_max);
    for probe in [[0.0, 0.0], [0.8, 0.8]] {
        println!(
            "  at {:?}: value {:.3} -> optimistic {:.3} (knownness {:.3})",
            probe,
            values.predict(&probe)?,
            optimistic.predict(&probe)?,
            known.knownness(&probe)?
        );
    }
    Ok(())
}
