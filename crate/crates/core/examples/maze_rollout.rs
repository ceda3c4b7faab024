//! Roll a random controller through the maze and save what the camera sees.
//!
//!     cargo run --release --example maze_rollout -- [out.ppm]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taxons::envs::{ArenaSpec, GroundTruthAccess};
use taxons::policies::{evaluate, random_genome, ControllerSpec, IdSource};

fn main() -> taxons::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "maze_final.ppm".into());
    let arena = ArenaSpec::maze();
    let controller = ControllerSpec::for_arena(&arena);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ids = IdSource::new();
    let access = GroundTruthAccess::new();

    println!("controller: {} parameters", controller.param_count());
    let mut last = None;
    for _ in 0..5 {
        let genome = random_genome(&controller, &mut ids, &mut rng);
        let r = evaluate(&arena, &controller, &genome, 1000, 0, 64)?;
        let (x, y) = *access.for_evaluation(&r.ground_truth);
        println!("policy {} ends at ({x:.2}, {y:.2}) after {} collisions", genome.id, r.collisions);
        last = Some(r);
    }
    let frame = last.expect("five rollouts").observation;
    frame.write_ppm(out.as_ref())?;
    println!("wrote {out} ({}x{})", frame.width(), frame.height());
    Ok(())
}
