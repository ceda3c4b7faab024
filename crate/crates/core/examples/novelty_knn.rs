//! k-nearest-neighbour novelty of a population against an archive.
//!
//!     cargo run --release --example novelty_knn

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxons::archive::{novelty_scores, select_and_replace};

fn main() -> taxons::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut point = |spread: f64| -> Vec<f64> { (0..2).map(|_| rng.gen_range(-spread..spread)).collect() };

    // A tight archive around the origin and a population that drifts outward.
    let archive: Vec<Vec<f64>> = (0..40).map(|_| point(1.0)).collect();
    let population: Vec<Vec<f64>> = (0..10).map(|i| point(0.5 + i as f64)).collect();

    let pop: Vec<&[f64]> = population.iter().map(Vec::as_slice).collect();
    let arc: Vec<&[f64]> = archive.iter().map(Vec::as_slice).collect();
    let scores = novelty_scores(&pop, &arc, 5)?;
    for (i, (p, s)) in population.iter().zip(&scores).enumerate() {
        println!("policy {i}: b = ({:+.2}, {:+.2})  novelty {s:.3}", p[0], p[1]);
    }

    let sel = select_and_replace(&scores, 3)?;
    println!("archived {:?}, replaced {:?}", sel.best, sel.replaced);
    Ok(())
}
