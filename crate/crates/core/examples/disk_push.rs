//! The disk-push arena: the outcome is where the disk ends up, not the robot.
//!
//!     cargo run --release --example disk_push -- [out.ppm]

use taxons::envs::{ArenaSpec, EnvKind, GroundTruthAccess};
use taxons::taxons::{run_search, Method, SearchConfig};

fn main() -> taxons::Result<()> {
    let out_path = std::env::args().nth(1).unwrap_or_else(|| "disk_push.ppm".into());
    let arena = ArenaSpec::disk_push();
    println!("disk starts at ({:.2}, {:.2})", arena.disk_start.x, arena.disk_start.y);

    let mut config = SearchConfig::desk(Method::Taxons, EnvKind::DiskPush);
    config.budget = 20;
    config.horizon = 500;
    let out = run_search(&config)?;
    let access = GroundTruthAccess::new();
    let moved = out
        .archive
        .entries()
        .iter()
        .filter(|e| {
            let (x, y) = *access.for_evaluation(&e.ground_truth);
            (x - arena.disk_start.x).hypot(y - arena.disk_start.y) > 0.1
        })
        .count();
    println!(
        "{} archived policies, {moved} moved the disk, coverage {:.2}%",
        out.archive.len(),
        out.final_coverage()
    );
    if let Some(e) = out.archive.entries().last() {
        e.observation.write_ppm(out_path.as_ref())?;
        println!("wrote the final frame of policy {} to {out_path}", e.genome.id);
    }
    Ok(())
}
