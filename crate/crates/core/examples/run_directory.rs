//! Write a run directory, check its manifest, then sweep and compare two
//! methods over a few seeds, all through the library calls behind the CLI.
//!
//!     cargo run --release --example run_directory -- [dir]

use std::path::PathBuf;

use taxons::cli::{compare_runs, parse_config, run_to_dir, rundir, sweep};
use taxons::taxons::Method;

const CONFIG: &str = r#"
method = "TAXONS"
population = 10
best = 2
neighbours = 3
train_interval = 4
epochs = 2
batch_size = 16
horizon = 300
budget = 12
"#;

fn main() -> taxons::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_runs".into()));
    let config = parse_config(CONFIG, "inline")?;

    let single = root.join("single");
    let summary = run_to_dir(&config, &single, true)?;
    let manifest = rundir::read_manifest(&single)?;
    println!(
        "{}: {} archived, coverage {:.2}%, {} artifacts, checksums ok: {}",
        single.display(),
        summary.archive_size,
        summary.final_coverage,
        manifest.artifacts.len(),
        rundir::verify_manifest(&single, &manifest)
    );

    let sweep_dir = root.join("sweep");
    let report = sweep(&config, &[Method::Taxons, Method::Rs], &[1, 2, 3, 4], &sweep_dir, true, false)?;
    println!("sweep: {} run, {} reused", report.completed.len(), report.skipped.len());
    let cmp = compare_runs(&[sweep_dir], 0.05)?;
    print!("{}", cmp.summary());
    Ok(())
}
