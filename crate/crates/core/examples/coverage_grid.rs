//! Coverage of a point set on the 50x50 evaluation grid.
//!
//!     cargo run --release --example coverage_grid

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxons::envs::ArenaSpec;
use taxons::metrics::{coverage, coverage_curve, CoverageGrid, DEFAULT_RESOLUTION};

fn main() -> taxons::Result<()> {
    let bounds = ArenaSpec::maze().bounds;
    println!("one point: {}%", coverage(&[(5.0, 5.0)], bounds, DEFAULT_RESOLUTION)?);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let batches: Vec<Vec<(f64, f64)>> = (0..8)
        .map(|_| (0..50).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect())
        .collect();
    for p in coverage_curve(&batches, bounds, DEFAULT_RESOLUTION)? {
        println!("generation {:>2}: {:>4} points, {:.2}% of cells", p.generation, p.archive_size, p.coverage);
    }

    // A coarse grid drawn as text.
    let mut grid = CoverageGrid::new(bounds, 10)?;
    for &(x, y) in batches.iter().flatten().take(30) {
        grid.add(x, y)?;
    }
    for row in (0..10).rev() {
        let line: String = (0..10).map(|c| if grid.is_occupied(c, row) { '#' } else { '.' }).collect();
        println!("{line}");
    }
    Ok(())
}
