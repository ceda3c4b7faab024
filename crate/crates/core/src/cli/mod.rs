//! Command-line front end: `run`, `sweep`, `compare` and `goal`.

pub mod config;
pub mod json;
pub mod rundir;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::envs::{GroundTruthAccess, Observation};
use crate::error::{Result, TaxonsError};
use crate::policies::{evaluate, ControllerSpec};
use crate::stats::{compare_groups, ComparisonReport};
use crate::taxons::{rollout_seed, run_search_with, select_policy_for_goal, Method, SearchConfig};

pub use config::{load_config, parse_config};

#[derive(Debug, Parser)]
#[command(name = "taxons", version, about = "Novelty search in a learned outcome space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one search and write its run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Replace the artifacts of an existing run directory.
        #[arg(long)]
        force: bool,
    },
    /// One run per (method, seed) under `--out`, named `METHOD_SEED`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Skip runs whose manifest checksums still match.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        force: bool,
    },
    /// Pairwise Mann-Whitney tests on final coverage, Holm-corrected.
    Compare {
        /// Run directories, or sweep directories containing them.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Directory for `comparison.csv` and `summary.txt`; printed if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieve the archived policy whose outcome is closest to a goal image.
    Goal {
        run: PathBuf,
        /// P6 PPM image of the desired final state.
        goal: PathBuf,
        /// Re-run the selected policy and report where it ends.
        #[arg(long)]
        replay: bool,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub method: Method,
    pub seed: u64,
    pub archive_size: usize,
    pub final_coverage: f64,
}

/// Names of everything a run writes; `--force` removes exactly these.
const ARTIFACTS: [&str; 7] = [
    rundir::CONFIG,
    rundir::ARCHIVE,
    rundir::OBSERVATIONS,
    rundir::CURVE,
    rundir::METRICS,
    rundir::CHECKPOINTS,
    rundir::MANIFEST,
];

fn prepare_out_dir(out: &Path, force: bool) -> Result<()> {
    if !rundir::is_empty_dir(out)? {
        if !force {
            return Err(TaxonsError::invalid(format!(
                "output directory {} is not empty (use --force to overwrite)",
                out.display()
            )));
        }
        for name in ARTIFACTS {
            let p = out.join(name);
            let res = if p.is_dir() {
                fs::remove_dir_all(&p)
            } else if p.exists() {
                fs::remove_file(&p)
            } else {
                Ok(())
            };
            res.map_err(|e| TaxonsError::io(&p, e))?;
        }
    }
    fs::create_dir_all(out).map_err(|e| TaxonsError::io(out, e))
}

/// Runs `config` and writes the full run directory at `out`.
pub fn run_to_dir(config: &SearchConfig, out: &Path, force: bool) -> Result<RunSummary> {
    config.validate()?;
    prepare_out_dir(out, force)?;
    let started = chrono::Utc::now().to_rfc3339();
    let mut sink = rundir::DirSink::create(out)?;
    let outcome = run_search_with(config, &mut sink)?;
    sink.finish()?;
    rundir::write_outcome(out, &outcome)?;
    let manifest = rundir::RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        config: config.clone(),
        artifacts: rundir::artifacts(out)?,
    };
    rundir::write_manifest(out, &manifest)?;
    log::info!(
        "{} seed {}: {} archived, coverage {:.2}%",
        config.method,
        config.seed,
        outcome.archive.len(),
        outcome.final_coverage()
    );
    Ok(RunSummary {
        dir: out.to_path_buf(),
        method: config.method,
        seed: config.seed,
        archive_size: outcome.archive.len(),
        final_coverage: outcome.final_coverage(),
    })
}

pub fn cmd_run(config: &Path, seed: Option<u64>, out: &Path, force: bool) -> Result<RunSummary> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    run_to_dir(&cfg, out, force)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepReport {
    pub completed: Vec<RunSummary>,
    pub skipped: Vec<PathBuf>,
    pub failed: Vec<(PathBuf, String)>,
}

pub fn sweep_dir_name(method: Method, seed: u64) -> String {
    format!("{}_{seed}", method.name())
}

/// Runs every (method, seed) pair; a failed run is recorded and the sweep goes on.
pub fn sweep(
    base: &SearchConfig,
    methods: &[Method],
    seeds: &[u64],
    out: &Path,
    resume: bool,
    force: bool,
) -> Result<SweepReport> {
    fs::create_dir_all(out).map_err(|e| TaxonsError::io(out, e))?;
    let mut report = SweepReport::default();
    for &method in methods {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.method = method;
            cfg.seed = seed;
            let dir = out.join(sweep_dir_name(method, seed));
            if resume {
                if let Ok(m) = rundir::read_manifest(&dir) {
                    if m.config == cfg && rundir::verify_manifest(&dir, &m) {
                        log::info!("{}: complete, skipped", dir.display());
                        report.skipped.push(dir);
                        continue;
                    }
                }
            }
            match run_to_dir(&cfg, &dir, force || resume) {
                Ok(s) => report.completed.push(s),
                Err(e) => {
                    log::error!("{}: {e}", dir.display());
                    report.failed.push((dir, e.to_string()));
                }
            }
        }
    }
    Ok(report)
}

pub fn cmd_sweep(
    config: &Path,
    methods: &[Method],
    seeds: &[u64],
    out: &Path,
    resume: bool,
    force: bool,
) -> Result<SweepReport> {
    sweep(&load_config(config)?, methods, seeds, out, resume, force)
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub method: Method,
    pub runs: usize,
    pub median: f64,
    pub coverages: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub groups: Vec<GroupSummary>,
    /// Groups left out for having fewer than two runs.
    pub excluded: Vec<(Method, usize)>,
    pub comparisons: Vec<ComparisonReport>,
    pub alpha: f64,
}

impl CompareReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("pair,U,p,adjusted_p,reject\n");
        for c in &self.comparisons {
            s.push_str(&format!("{} vs {},{},{},{},{}\n", c.a, c.b, c.u, c.p, c.adjusted_p, c.reject));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for g in &self.groups {
            s.push_str(&format!("{:<7} n={:<3} median coverage {:.4}%\n", g.method.name(), g.runs, g.median));
        }
        for (m, n) in &self.excluded {
            s.push_str(&format!("{:<7} excluded: {n} run(s), need at least 2\n", m.name()));
        }
        s.push_str(&format!("Holm-Bonferroni at alpha = {}\n", self.alpha));
        for c in &self.comparisons {
            let verdict = if c.reject { "different" } else { "not different" };
            let kind = if c.exact { "exact" } else { "normal approx." };
            s.push_str(&format!(
                "{} vs {}: U = {}, p = {:.4e} ({kind}), adjusted p = {:.4e} -> {verdict}\n",
                c.a, c.b, c.u, c.p, c.adjusted_p
            ));
        }
        s
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Expands sweep directories into the run directories they contain.
fn expand_runs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.join(rundir::CONFIG).is_file() {
            out.push(p.clone());
            continue;
        }
        let mut subs: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| TaxonsError::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| d.join(rundir::CONFIG).is_file())
            .collect();
        if subs.is_empty() {
            return Err(TaxonsError::invalid(format!("{} holds no run directory", p.display())));
        }
        subs.sort();
        out.extend(subs);
    }
    Ok(out)
}

pub fn compare_runs(runs: &[PathBuf], alpha: f64) -> Result<CompareReport> {
    let mut by_method: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for dir in expand_runs(runs)? {
        let cfg = rundir::read_config(&dir)?;
        let cov = rundir::read_curve(&dir)?.last().map_or(0.0, |p| p.coverage);
        by_method.entry(cfg.method).or_default().push(cov);
    }
    let mut groups = Vec::new();
    let mut excluded = Vec::new();
    for (method, coverages) in by_method {
        if coverages.len() < 2 {
            log::warn!("{method}: only {} run(s); excluded from comparison", coverages.len());
            excluded.push((method, coverages.len()));
            continue;
        }
        groups.push(GroupSummary {
            method,
            runs: coverages.len(),
            median: median(&coverages),
            coverages,
        });
    }
    if groups.len() < 2 {
        return Err(TaxonsError::invalid(format!(
            "need at least two methods with two or more runs each, found {}",
            groups.len()
        )));
    }
    let samples: Vec<(String, Vec<f64>)> = groups
        .iter()
        .map(|g| (g.method.name().to_string(), g.coverages.clone()))
        .collect();
    let comparisons = compare_groups(&samples, alpha)?;
    Ok(CompareReport {
        groups,
        excluded,
        comparisons,
        alpha,
    })
}

pub fn cmd_compare(runs: &[PathBuf], alpha: f64, out: Option<&Path>) -> Result<CompareReport> {
    let report = compare_runs(runs, alpha)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| TaxonsError::io(dir, e))?;
            let csv = dir.join("comparison.csv");
            fs::write(&csv, report.csv()).map_err(|e| TaxonsError::io(&csv, e))?;
            let txt = dir.join("summary.txt");
            fs::write(&txt, report.summary()).map_err(|e| TaxonsError::io(&txt, e))?;
        }
        None => print!("{}\n{}", report.csv(), report.summary()),
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct GoalReport {
    /// Position in `archive.jsonl`.
    pub index: usize,
    pub policy_id: u64,
    pub distance: f64,
    /// Generation of the checkpoint used to encode the goal.
    pub checkpoint: usize,
    /// Final position recorded during the search.
    pub archived_position: (f64, f64),
    /// Final position of a fresh rollout, with `--replay`.
    pub replayed_position: Option<(f64, f64)>,
}

pub fn goal_from_observation(run: &Path, goal: &Observation, replay: bool) -> Result<GoalReport> {
    let cfg = rundir::read_config(run)?;
    if !cfg.method.learns() {
        return Err(TaxonsError::invalid(format!(
            "run {} used {}, whose outcome space is not learned; goal retrieval needs TAXONS, TAXO-N or TAXO-S",
            run.display(),
            cfg.method
        )));
    }
    let size = cfg.observation_size;
    if goal.shape() != [3, size, size] {
        return Err(TaxonsError::Shape {
            expected: vec![size, size, 3],
            got: vec![goal.width(), goal.height(), 3],
        });
    }
    let (checkpoint, ae) = rundir::latest_checkpoint(run)?
        .ok_or_else(|| TaxonsError::NoResult(format!("{} has no autoencoder checkpoint", run.display())))?;
    let mut archive = rundir::read_archive(run)?;
    if archive.is_empty() {
        return Err(TaxonsError::NoResult(format!("archive of {} is empty", run.display())));
    }
    archive.refresh_descriptors(&ae)?;
    let (entry, distance) = select_policy_for_goal(&archive, &ae, goal)?;
    let index = archive
        .entries()
        .iter()
        .position(|e| std::ptr::eq(e, entry))
        .expect("entry comes from the archive");
    let access = GroundTruthAccess::new();
    let archived_position = *access.for_evaluation(&entry.ground_truth);
    let replayed_position = if replay {
        let controller = ControllerSpec::for_arena(&cfg.arena);
        let r = evaluate(
            &cfg.arena,
            &controller,
            &entry.genome,
            cfg.horizon,
            rollout_seed(cfg.seed, entry.genome.id),
            cfg.observation_size,
        )?;
        Some(*access.for_evaluation(&r.ground_truth))
    } else {
        None
    };
    Ok(GoalReport {
        index,
        policy_id: entry.genome.id,
        distance,
        checkpoint,
        archived_position,
        replayed_position,
    })
}

pub fn cmd_goal(run: &Path, goal: &Path, replay: bool) -> Result<GoalReport> {
    goal_from_observation(run, &Observation::read_ppm(goal)?, replay)
}

/// Executes a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            force,
        } => {
            let s = cmd_run(&config, seed, &out, force)?;
            println!(
                "{} seed {}: {} policies archived, final coverage {:.6}% -> {}",
                s.method,
                s.seed,
                s.archive_size,
                s.final_coverage,
                s.dir.display()
            );
            Ok(0)
        }
        Command::Sweep {
            config,
            methods,
            seeds,
            out,
            resume,
            force,
        } => {
            let r = cmd_sweep(&config, &methods, &seeds, &out, resume, force)?;
            for s in &r.completed {
                println!("{:<7} seed {:<4} coverage {:.6}%", s.method.name(), s.seed, s.final_coverage);
            }
            for d in &r.skipped {
                println!("skipped {}", d.display());
            }
            for (d, e) in &r.failed {
                eprintln!("failed {}: {e}", d.display());
            }
            Ok(i32::from(!r.failed.is_empty()))
        }
        Command::Compare { runs, alpha, out } => {
            cmd_compare(&runs, alpha, out.as_deref())?;
            Ok(0)
        }
        Command::Goal { run, goal, replay } => {
            let r = cmd_goal(&run, &goal, replay)?;
            println!("policy {} (archive entry {}), descriptor distance {}", r.policy_id, r.index, r.distance);
            let (x, y) = r.archived_position;
            println!("archived final position ({x:.4}, {y:.4})");
            if let Some((x, y)) = r.replayed_position {
                println!("replayed final position ({x:.4}, {y:.4})");
            }
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from([
            "taxons", "sweep", "--config", "c.toml", "--methods", "TAXONS,RS", "--seeds", "1,2,3", "--out", "o",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep { methods, seeds, .. } => {
                assert_eq!(methods, vec![Method::Taxons, Method::Rs]);
                assert_eq!(seeds, vec![1, 2, 3]);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["taxons", "sweep", "--config", "c", "--methods", "BOGUS", "--seeds", "1", "--out", "o"]).is_err());
    }
}
