//! After a search, pick the archived policy whose outcome best matches a goal
//! frame, then replay it.
//!
//!     cargo run --release --example goal_retrieval

use taxons::envs::{EnvKind, GroundTruthAccess};
use taxons::policies::{evaluate, ControllerSpec};
use taxons::taxons::{rollout_seed, run_search, select_policy_for_goal, Method, SearchConfig};

fn main() -> taxons::Result<()> {
    let mut config = SearchConfig::desk(Method::Taxons, EnvKind::Maze);
    config.budget = 20;
    config.horizon = 500;
    let out = run_search(&config)?;
    let ae = out.autoencoder.as_ref().expect("TAXONS learns an autoencoder");
    let mut archive = out.archive.clone();
    archive.refresh_descriptors(ae)?;

    let access = GroundTruthAccess::new();
    let controller = ControllerSpec::for_arena(&config.arena);
    // Goals: the final frames of a few archived policies.
    for target in archive.entries().iter().step_by(15) {
        let (hit, distance) = select_policy_for_goal(&archive, ae, &target.observation)?;
        let replay = evaluate(
            &config.arena,
            &controller,
            &hit.genome,
            config.horizon,
            rollout_seed(config.seed, hit.genome.id),
            config.observation_size,
        )?;
        let (gx, gy) = *access.for_evaluation(&target.ground_truth);
        let (rx, ry) = *access.for_evaluation(&replay.ground_truth);
        println!(
            "goal from policy {:>3} at ({gx:.2}, {gy:.2}) -> policy {:>3}, distance {distance:.3}, replay ends at ({rx:.2}, {ry:.2})",
            target.genome.id, hit.genome.id
        );
    }
    Ok(())
}
