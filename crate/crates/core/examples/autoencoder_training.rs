//! Train the desk-scale autoencoder on final maze frames; surprise is the
//! per-pixel reconstruction error of one frame.
//!
//!     cargo run --release --example autoencoder_training

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taxons::autoencoder::{Autoencoder, AutoencoderSpec, AutoencoderTrainer};
use taxons::envs::{ArenaSpec, Observation};
use taxons::policies::{evaluate, random_genome, ControllerSpec, IdSource};

fn main() -> taxons::Result<()> {
    let arena = ArenaSpec::maze();
    let controller = ControllerSpec::for_arena(&arena);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ids = IdSource::new();
    let mut frames: Vec<Observation> = Vec::new();
    for _ in 0..33 {
        let g = random_genome(&controller, &mut ids, &mut rng);
        frames.push(evaluate(&arena, &controller, &g, 600, 0, 32)?.observation);
    }
    let unseen = frames.pop().expect("33 frames");

    let ae = Autoencoder::new(&AutoencoderSpec::desk(), &mut rng)?;
    println!("autoencoder: {} parameters, latent dim {}", ae.network().param_count(), ae.latent_dim());
    let mut trainer = AutoencoderTrainer::new(ae, 1e-3, 16);
    for round in 0..6 {
        let losses = trainer.train(&frames, 10, &mut rng)?;
        let ae = trainer.autoencoder();
        println!(
            "after {:>3} epochs: train loss {:.5}  surprise seen {:.5}  unseen {:.5}",
            (round + 1) * 10,
            losses.last().copied().unwrap_or(f64::NAN),
            ae.surprise(&frames[0])?,
            ae.surprise(&unseen)?
        );
    }
    let z = trainer.autoencoder().encode(&frames[0])?;
    println!("descriptor of frame 0: {:.3?}", z);
    Ok(())
}
