//! A short TAXONS search on the maze next to plain novelty search on (x, y).
//!
//!     cargo run --release --example maze_search -- [generations]

use taxons::envs::EnvKind;
use taxons::taxons::{run_search, Event, Method, MetricChoice, SearchConfig};

fn main() -> taxons::Result<()> {
    let generations: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    for method in [Method::Taxons, Method::Ns] {
        let mut config = SearchConfig::desk(method, EnvKind::Maze);
        config.budget = generations;
        config.horizon = 600;
        config.seed = 1;
        let out = run_search(&config)?;

        let surprise = out.metrics.iter().filter(|m| **m == MetricChoice::Surprise).count();
        let trainings = out.events.iter().filter(|e| matches!(e, Event::Train { .. })).count();
        println!("{method}: {} policies archived, {surprise} surprise generations, {trainings} trainings", out.archive.len());
        for p in out.curve.iter().step_by(10.max(generations / 4)) {
            println!("  generation {:>4}  coverage {:.2}%", p.generation, p.coverage);
        }
        println!("  final coverage {:.2}%", out.final_coverage());
        println!(
            "  ground-truth reads by selection: {}",
            out.instrumentation.ground_truth_search_reads
        );
    }
    Ok(())
}
