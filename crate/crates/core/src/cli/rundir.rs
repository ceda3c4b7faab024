//! Reading and writing run directories.
//!
//! ```text
//! config.json            resolved configuration
//! archive.jsonl          one archived policy per line
//! observations/NNNNNN.ppm  final observation of archive entry NNNNNN
//! curve.csv              generation, archive size, coverage
//! metrics.log            line-delimited JSON events
//! ae_checkpoints/        ae_genNNNN.bin at generation 0 and every training
//! manifest.json          artifact list with SHA-256 checksums
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::json;
use crate::archive::{Archive, ArchiveEntry};
use crate::autoencoder::Autoencoder;
use crate::descriptors::OutcomeDescriptor;
use crate::envs::{GroundTruthAccess, Observation, Sealed};
use crate::error::{Result, TaxonsError};
use crate::metrics::CurvePoint;
use crate::policies::Genome;
use crate::taxons::{Event, RunSink, SearchConfig, SearchOutcome};

pub const CONFIG: &str = "config.json";
pub const ARCHIVE: &str = "archive.jsonl";
pub const OBSERVATIONS: &str = "observations";
pub const CURVE: &str = "curve.csv";
pub const METRICS: &str = "metrics.log";
pub const CHECKPOINTS: &str = "ae_checkpoints";
pub const MANIFEST: &str = "manifest.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TaxonsError + '_ {
    move |e| TaxonsError::io(path, e)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

pub fn observation_file(index: usize) -> String {
    format!("{OBSERVATIONS}/{index:06}.ppm")
}

pub fn checkpoint_file(generation: usize) -> String {
    format!("{CHECKPOINTS}/ae_gen{generation:04}.bin")
}

/// One line of `archive.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveRecord {
    pub index: usize,
    pub id: u64,
    pub parent: Option<u64>,
    /// Generation in which the genome was created.
    pub born: usize,
    /// Generation in which it entered the archive.
    pub generation: usize,
    /// Selection score at insertion; `null` for a rollout that was aborted.
    pub score: Option<f64>,
    pub ground_truth: [f64; 2],
    pub descriptor: Option<OutcomeDescriptor>,
    pub observation: String,
    pub genome: Vec<f64>,
}

impl ArchiveRecord {
    pub fn from_entry(index: usize, e: &ArchiveEntry, access: &GroundTruthAccess) -> Self {
        let &(x, y) = access.for_evaluation(&e.ground_truth);
        ArchiveRecord {
            index,
            id: e.genome.id,
            parent: e.genome.parent,
            born: e.genome.generation,
            generation: e.generation,
            score: e.score.is_finite().then_some(e.score),
            ground_truth: [x, y],
            descriptor: e.descriptor.clone(),
            observation: observation_file(index),
            genome: e.genome.params.clone(),
        }
    }

    pub fn into_entry(self, observation: Observation) -> ArchiveEntry {
        ArchiveEntry {
            genome: Genome {
                id: self.id,
                parent: self.parent,
                generation: self.born,
                params: self.genome,
            },
            observation,
            descriptor: self.descriptor,
            ground_truth: Sealed::new((self.ground_truth[0], self.ground_truth[1])),
            generation: self.generation,
            score: self.score.unwrap_or(f64::NEG_INFINITY),
        }
    }
}

pub fn archive_jsonl(archive: &Archive, access: &GroundTruthAccess) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (i, e) in archive.entries().iter().enumerate() {
        out.extend(json::to_line(&ArchiveRecord::from_entry(i, e, access))?);
    }
    Ok(out)
}

pub fn parse_archive_jsonl(bytes: &[u8], origin: &Path) -> Result<Vec<ArchiveRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| TaxonsError::Format {
        path: origin.into(),
        reason: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| TaxonsError::Format {
                path: origin.into(),
                reason: format!("line {}: {e}", n + 1),
            })
        })
        .collect()
}

pub fn curve_csv(curve: &[CurvePoint]) -> Vec<u8> {
    let mut s = String::from("generation,archive_size,coverage\n");
    for p in curve {
        s.push_str(&format!("{},{},{:.6}\n", p.generation, p.archive_size, p.coverage));
    }
    s.into_bytes()
}

pub fn parse_curve_csv(bytes: &[u8], origin: &Path) -> Result<Vec<CurvePoint>> {
    let bad = |reason: String| TaxonsError::Format {
        path: origin.into(),
        reason,
    };
    let text = std::str::from_utf8(bytes).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next() != Some("generation,archive_size,coverage") {
        return Err(bad("missing curve header".into()));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let parse_err = |_| bad(format!("row {}: `{line}`", n + 1));
            if f.len() != 3 {
                return Err(bad(format!("row {}: expected 3 fields", n + 1)));
            }
            Ok(CurvePoint {
                generation: f[0].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
                archive_size: f[1].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
                coverage: f[2].parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?,
            })
        })
        .collect()
}

/// Streams the run log and checkpoints into a run directory while the search runs.
pub struct DirSink {
    root: PathBuf,
    log: BufWriter<File>,
}

impl DirSink {
    pub fn create(root: &Path) -> Result<Self> {
        for sub in [OBSERVATIONS, CHECKPOINTS] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let path = root.join(METRICS);
        let log = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        Ok(DirSink {
            root: root.to_path_buf(),
            log,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        let path = self.root.join(METRICS);
        self.log.flush().map_err(io_err(&path))
    }
}

impl RunSink for DirSink {
    fn event(&mut self, event: &Event) -> Result<()> {
        let path = self.root.join(METRICS);
        self.log.write_all(&json::to_line(event)?).map_err(io_err(&path))
    }

    fn checkpoint(&mut self, generation: usize, ae: &Autoencoder) -> Result<()> {
        write_file(&self.root.join(checkpoint_file(generation)), &ae.to_bytes())
    }
}

/// Writes everything except the manifest and the streamed files.
pub fn write_outcome(root: &Path, outcome: &SearchOutcome) -> Result<()> {
    let access = GroundTruthAccess::new();
    write_file(&root.join(CONFIG), &json::to_pretty(&outcome.config)?)?;
    write_file(&root.join(ARCHIVE), &archive_jsonl(&outcome.archive, &access)?)?;
    for (i, e) in outcome.archive.entries().iter().enumerate() {
        write_file(&root.join(observation_file(i)), &e.observation.to_ppm())?;
    }
    write_file(&root.join(CURVE), &curve_csv(&outcome.curve))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub config: SearchConfig,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io_err(dir))?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("inside root");
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            if rel != MANIFEST {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Checksums every file of the run directory except the manifest itself.
pub fn artifacts(root: &Path) -> Result<Vec<Artifact>> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    files
        .into_iter()
        .map(|rel| {
            let bytes = read_file(&root.join(&rel))?;
            Ok(Artifact {
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
                path: rel,
            })
        })
        .collect()
}

pub fn write_manifest(root: &Path, manifest: &RunManifest) -> Result<()> {
    write_file(&root.join(MANIFEST), &json::to_pretty(manifest)?)
}

pub fn read_manifest(root: &Path) -> Result<RunManifest> {
    let p = root.join(MANIFEST);
    Ok(serde_json::from_slice(&read_file(&p)?)?)
}

/// Whether every artifact listed in the manifest is present with a matching checksum.
pub fn verify_manifest(root: &Path, manifest: &RunManifest) -> bool {
    manifest.artifacts.iter().all(|a| {
        read_file(&root.join(&a.path)).is_ok_and(|b| b.len() as u64 == a.bytes && sha256_hex(&b) == a.sha256)
    })
}

pub fn read_config(root: &Path) -> Result<SearchConfig> {
    let p = root.join(CONFIG);
    serde_json::from_slice(&read_file(&p)?).map_err(|e| TaxonsError::Format {
        path: p,
        reason: e.to_string(),
    })
}

pub fn read_archive(root: &Path) -> Result<Archive> {
    let p = root.join(ARCHIVE);
    let records = parse_archive_jsonl(&read_file(&p)?, &p)?;
    let entries = records
        .into_iter()
        .map(|r| {
            let obs = Observation::read_ppm(&root.join(&r.observation))?;
            Ok(r.into_entry(obs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Archive::from_entries(entries))
}

pub fn read_curve(root: &Path) -> Result<Vec<CurvePoint>> {
    let p = root.join(CURVE);
    parse_curve_csv(&read_file(&p)?, &p)
}

/// The checkpoint with the highest generation number.
pub fn latest_checkpoint(root: &Path) -> Result<Option<(usize, Autoencoder)>> {
    let dir = root.join(CHECKPOINTS);
    if !dir.is_dir() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for e in fs::read_dir(&dir).map_err(io_err(&dir))? {
        let p = e.map_err(io_err(&dir))?.path();
        let gen = p
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("ae_gen"))
            .and_then(|n| n.strip_suffix(".bin"))
            .and_then(|n| n.parse::<usize>().ok());
        if let Some(g) = gen {
            if best.as_ref().is_none_or(|(b, _)| g > *b) {
                best = Some((g, p));
            }
        }
    }
    best.map(|(g, p)| {
        let bytes = read_file(&p)?;
        Autoencoder::from_bytes(&bytes)
            .map(|ae| (g, ae))
            .map_err(|e| TaxonsError::Format {
                path: p,
                reason: e.to_string(),
            })
    })
    .transpose()
}

/// Whether `dir` is missing or has no entries.
pub fn is_empty_dir(dir: &Path) -> Result<bool> {
    match fs::read_dir(dir) {
        Ok(mut it) => Ok(it.next().is_none()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(true),
        Err(e) => Err(TaxonsError::io(dir, e)),
    }
}
