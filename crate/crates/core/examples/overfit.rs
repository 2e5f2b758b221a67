//! Trains on the synthetic 15-type dataset and prints the log.

use std::path::Path;

use hiertype::synthetic::{SyntheticSpec, ONTOLOGY_15};
use hiertype::{data, train, Hyperparams, PartialPathMode, TrainOptions, TypeTree, VectorSource};

fn main() -> hiertype::Result<()> {
    let mode = PartialPathMode::Exclusive;
    let tree = TypeTree::for_mode(ONTOLOGY_15.iter().copied(), mode)?;
    let records = SyntheticSpec::default().records(200, 1);
    let (tr, dv) = records.split_at(150);
    let source = VectorSource::Hashed { dim: 16, seed: 0 };
    let train_set = data::to_instances(tr, &tree, mode, &source, Path::new("train"))?;
    let dev_set = data::to_instances(dv, &tree, mode, &source, Path::new("dev"))?;
    let hyper = Hyperparams {
        alpha: 0.15,
        beta: 0.1,
        lambda: 1e-4,
        p_d: 0.1,
        learning_rate: 5e-3,
        batch_size: 16,
        max_epochs: 100,
        patience: 100,
        d_t: 32,
        k: Some(vec![2, 1, 1]),
        ..Hyperparams::default()
    };
    let t0 = std::time::Instant::now();
    let out = train(&train_set, &dev_set, &tree, &hyper, &TrainOptions::default())?;
    for r in &out.log {
        println!("{}", serde_json::to_string(r)?);
    }
    println!("best epoch {} in {:?}", out.best_epoch, t0.elapsed());
    Ok(())
}
