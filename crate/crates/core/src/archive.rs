//! k-nearest-neighbour novelty, rank-based selection and replacement, and the
//! append-only repertoire of selected policies.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::autoencoder::Autoencoder;
use crate::descriptors::{describe_encoder, squared_distance, ObserverKind, OutcomeDescriptor};
use crate::envs::{Observation, Sealed};
use crate::error::{Result, TaxonsError};
use crate::policies::Genome;

/// Mean Euclidean distance from `candidate` to its `k` nearest references
/// (fewer if fewer exist; 0 with none).
pub fn novelty<'a, I>(candidate: &[f64], references: I, k: usize) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if k == 0 {
        return Err(TaxonsError::invalid("k must be at least 1"));
    }
    if candidate.iter().any(|v| !v.is_finite()) {
        return Err(TaxonsError::NonFinite("novelty candidate".into()));
    }
    let mut dists = Vec::new();
    for r in references {
        if r.len() != candidate.len() {
            return Err(TaxonsError::Shape {
                expected: vec![candidate.len()],
                got: vec![r.len()],
            });
        }
        dists.push(squared_distance(candidate, r).sqrt());
    }
    Ok(mean_of_smallest(&mut dists, k))
}

fn mean_of_smallest(dists: &mut [f64], k: usize) -> f64 {
    if dists.is_empty() {
        return 0.0;
    }
    let take = k.min(dists.len());
    if take < dists.len() {
        dists.select_nth_unstable_by(take - 1, f64::total_cmp);
    }
    let nearest = &mut dists[..take];
    // summing in sorted order makes the result independent of the selection pivot
    nearest.sort_unstable_by(f64::total_cmp);
    nearest.iter().sum::<f64>() / take as f64
}

/// Novelty of every population member against the rest of the population
/// plus the archive.
pub fn novelty_scores(population: &[&[f64]], archive: &[&[f64]], k: usize) -> Result<Vec<f64>> {
    (0..population.len())
        .into_par_iter()
        .map(|i| {
            let refs = population
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, d)| *d)
                .chain(archive.iter().copied());
            novelty(population[i], refs, k)
        })
        .collect()
}

/// Outcome of ranking one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Indices sorted best first (stable; non-finite scores last).
    pub ranking: Vec<usize>,
    /// The `q` best, best first.
    pub best: Vec<usize>,
    /// The `q` worst, overwritten by copies of `best` (pairwise).
    pub replaced: Vec<usize>,
    /// For each slot of the next population, the index it is copied from.
    pub next: Vec<usize>,
}

pub fn select_and_replace(scores: &[f64], q: usize) -> Result<Selection> {
    let m = scores.len();
    if q == 0 || 2 * q > m {
        return Err(TaxonsError::invalid(format!(
            "need 1 <= Q <= M/2, got Q={q}, M={m}"
        )));
    }
    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.sort_by(|&a, &b| rank_cmp(scores[a], scores[b]));
    let best = ranking[..q].to_vec();
    let replaced = ranking[m - q..].to_vec();
    let mut next: Vec<usize> = (0..m).collect();
    for (&w, &b) in replaced.iter().zip(&best) {
        next[w] = b;
    }
    Ok(Selection {
        ranking,
        best,
        replaced,
        next,
    })
}

fn rank_cmp(a: f64, b: f64) -> Ordering {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => b.total_cmp(&a),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => Ordering::Equal,
    }
}

/// One evaluated policy of the current population.
#[derive(Debug, Clone)]
pub struct Individual {
    pub genome: Genome,
    pub observation: Observation,
    /// Absent for the random-search baseline, which never describes policies.
    pub descriptor: Option<OutcomeDescriptor>,
    pub ground_truth: Sealed<(f64, f64)>,
    pub valid: bool,
}

/// Exactly M evaluated individuals.
#[derive(Debug, Clone)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>, size: usize) -> Result<Self> {
        if members.len() != size {
            return Err(TaxonsError::invalid(format!(
                "population has {} members, expected {size}",
                members.len()
            )));
        }
        Ok(Population { members })
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub genome: Genome,
    pub observation: Observation,
    pub descriptor: Option<OutcomeDescriptor>,
    pub ground_truth: Sealed<(f64, f64)>,
    pub generation: usize,
    pub score: f64,
}

impl ArchiveEntry {
    pub fn from_individual(ind: &Individual, generation: usize, score: f64) -> Self {
        ArchiveEntry {
            genome: ind.genome.clone(),
            observation: ind.observation.clone(),
            descriptor: ind.descriptor.clone(),
            ground_truth: ind.ground_truth.clone(),
            generation,
            score,
        }
    }
}

/// Append-only repertoire. Descriptors change only through [`Archive::refresh_descriptors`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<ArchiveEntry>) -> Self {
        Archive { entries }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, entries: impl IntoIterator<Item = ArchiveEntry>) {
        self.entries.extend(entries);
    }

    pub fn descriptors(&self) -> Vec<&[f64]> {
        self.entries
            .iter()
            .filter_map(|e| e.descriptor.as_ref().map(|d| d.values.as_slice()))
            .collect()
    }

    /// Recomputes every encoder descriptor from its stored final observation.
    pub fn refresh_descriptors(&mut self, ae: &Autoencoder) -> Result<()> {
        self.entries
            .par_iter_mut()
            .filter(|e| matches!(e.descriptor, Some(OutcomeDescriptor { kind: ObserverKind::Encoder, .. })))
            .try_for_each(|e| {
                e.descriptor = Some(describe_encoder(ae, &e.observation)?);
                Ok(())
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_novelty() {
        let refs: Vec<&[f64]> = vec![&[1.0, 0.0], &[0.0, 1.0], &[3.0, 4.0]];
        assert_eq!(novelty(&[0.0, 0.0], refs.clone(), 2).unwrap(), 1.0);
        // fewer than k: mean over all three
        assert!((novelty(&[0.0, 0.0], refs, 15).unwrap() - 7.0 / 3.0).abs() < 1e-15);
        let none: Vec<&[f64]> = vec![];
        assert_eq!(novelty(&[0.0, 0.0], none, 3).unwrap(), 0.0);
    }

    #[test]
    fn identical_references_give_zero() {
        let p = [0.3, -0.2, 0.9];
        let refs: Vec<&[f64]> = vec![&p; 20];
        assert_eq!(novelty(&p, refs, 15).unwrap(), 0.0);
    }

    #[test]
    fn novelty_errors() {
        let refs: Vec<&[f64]> = vec![&[1.0, 0.0, 2.0]];
        assert!(novelty(&[0.0, 0.0], refs.clone(), 1).is_err());
        assert!(novelty(&[0.0, 0.0, 0.0], refs.clone(), 0).is_err());
        assert!(novelty(&[f64::NAN, 0.0, 0.0], refs, 1).is_err());
    }

    #[test]
    fn population_scores_exclude_self() {
        let pop: Vec<&[f64]> = vec![&[0.0], &[1.0], &[3.0]];
        let arc: Vec<&[f64]> = vec![&[10.0]];
        let s = novelty_scores(&pop, &arc, 1).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn selection_by_hand() {
        let s = select_and_replace(&[3.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(s.best, vec![0]);
        assert_eq!(s.replaced, vec![1]);
        assert_eq!(s.next, vec![0, 0, 2]);
    }

    #[test]
    fn equal_scores_keep_stable_order() {
        let s = select_and_replace(&[0.5; 6], 2).unwrap();
        assert_eq!(s.ranking, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(s.best, vec![0, 1]);
        assert_eq!(s.next, vec![0, 1, 2, 3, 0, 1]);
    }

    #[test]
    fn non_finite_scores_rank_last() {
        let s = select_and_replace(&[f64::NAN, 0.1, f64::NEG_INFINITY, 0.2], 2).unwrap();
        assert_eq!(s.best, vec![3, 1]);
        assert_eq!(s.replaced, vec![0, 2]);
    }

    #[test]
    fn selection_bounds() {
        assert!(select_and_replace(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(select_and_replace(&[1.0, 2.0], 0).is_err());
        assert_eq!(select_and_replace(&[1.0, 2.0], 1).unwrap().best, vec![1]);
    }
}
