//! The search loop: evaluate, describe, score (novelty or surprise), select,
//! archive, buffer final observations and periodically retrain the
//! autoencoder that defines the outcome space.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{novelty_scores, select_and_replace, Archive, ArchiveEntry, Individual};
use crate::autoencoder::{Autoencoder, AutoencoderSpec, AutoencoderTrainer};
use crate::descriptors::{
    describe_encoder, describe_frozen_ae, describe_ground_truth, describe_parameters, describe_random,
    squared_distance, FrozenEncoder, ObserverKind, OutcomeDescriptor,
};
use crate::envs::{ArenaSpec, EnvKind, GroundTruthAccess, Observation};
use crate::error::{Result, TaxonsError};
use crate::metrics::{CoverageGrid, CurvePoint};
use crate::policies::{evaluate, mutate, random_genome, ControllerSpec, Genome, IdSource};

/// Named search variants: the full method, its two single-metric ablations
/// and the baselines that swap the outcome space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Taxons,
    TaxoN,
    TaxoS,
    /// Novelty on the ground-truth final position.
    Ns,
    /// Novelty in parameter space.
    Pns,
    /// Novelty on random 10-D descriptors.
    Rns,
    /// Uniform random scores.
    Rs,
    /// Novelty on the features of an untrained autoencoder.
    Nt,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Taxons,
        Method::TaxoN,
        Method::TaxoS,
        Method::Ns,
        Method::Pns,
        Method::Rns,
        Method::Rs,
        Method::Nt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Taxons => "TAXONS",
            Method::TaxoN => "TAXO-N",
            Method::TaxoS => "TAXO-S",
            Method::Ns => "NS",
            Method::Pns => "PNS",
            Method::Rns => "RNS",
            Method::Rs => "RS",
            Method::Nt => "NT",
        }
    }

    /// `None` for random search, which never describes policies.
    pub fn observer(self) -> Option<ObserverKind> {
        match self {
            Method::Taxons | Method::TaxoN | Method::TaxoS => Some(ObserverKind::Encoder),
            Method::Ns => Some(ObserverKind::GroundTruth),
            Method::Pns => Some(ObserverKind::ParameterSpace),
            Method::Rns => Some(ObserverKind::Random10D),
            Method::Nt => Some(ObserverKind::FrozenRandomAe),
            Method::Rs => None,
        }
    }

    /// Whether the outcome space is learned online.
    pub fn learns(self) -> bool {
        self.observer() == Some(ObserverKind::Encoder)
    }

    pub fn uses_autoencoder(self) -> bool {
        matches!(self.observer(), Some(ObserverKind::Encoder | ObserverKind::FrozenRandomAe))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = TaxonsError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key || m.name().replace('-', "") == key)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                TaxonsError::Config(format!("unknown method `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    Novelty,
    Surprise,
    /// Random search: scores are uniform draws.
    Random,
}

/// The selection metric for one generation. Only TAXONS consumes randomness.
pub fn choose_metric<R: Rng + ?Sized>(rng: &mut R, method: Method) -> MetricChoice {
    match method {
        Method::Taxons => {
            if rng.gen_bool(0.5) {
                MetricChoice::Surprise
            } else {
                MetricChoice::Novelty
            }
        }
        Method::TaxoS => MetricChoice::Surprise,
        Method::Rs => MetricChoice::Random,
        Method::TaxoN | Method::Ns | Method::Pns | Method::Rns | Method::Nt => MetricChoice::Novelty,
    }
}

/// What the search budget counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetUnit {
    Generations,
    /// Individual rollouts; converted to `budget / population` generations.
    Evaluations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub method: Method,
    /// M
    pub population: usize,
    /// Q
    pub best: usize,
    /// k
    pub neighbours: usize,
    /// p_d
    pub mutation_prob: f64,
    /// σ
    pub mutation_sigma: f64,
    /// I: generations between autoencoder trainings.
    pub train_interval: usize,
    /// J
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// T: rollout length in steps.
    pub horizon: usize,
    pub budget: usize,
    pub budget_unit: BudgetUnit,
    pub observation_size: usize,
    pub env: EnvKind,
    pub arena: ArenaSpec,
    pub autoencoder: AutoencoderSpec,
    pub coverage_resolution: usize,
    pub seed: u64,
}

impl SearchConfig {
    /// Population and learning hyperparameters of the original protocol, at
    /// 32×32 observations and a 100-generation budget.
    pub fn new(method: Method, env: EnvKind) -> Self {
        SearchConfig {
            method,
            population: 100,
            best: 5,
            neighbours: 15,
            mutation_prob: 0.2,
            mutation_sigma: 0.05,
            train_interval: 30,
            epochs: 5,
            learning_rate: 0.001,
            batch_size: 64,
            horizon: 1000,
            budget: 100,
            budget_unit: BudgetUnit::Generations,
            observation_size: 32,
            env,
            arena: ArenaSpec::default_for(env),
            autoencoder: AutoencoderSpec::desk(),
            coverage_resolution: crate::metrics::DEFAULT_RESOLUTION,
            seed: 0,
        }
    }

    /// The reduced setting used for laptop-scale comparisons: M=20, Q=3, k=5, I=10.
    pub fn desk(method: Method, env: EnvKind) -> Self {
        SearchConfig {
            population: 20,
            best: 3,
            neighbours: 5,
            train_interval: 10,
            batch_size: 32,
            budget: 150,
            ..SearchConfig::new(method, env)
        }
    }

    pub fn generations(&self) -> usize {
        match self.budget_unit {
            BudgetUnit::Generations => self.budget,
            BudgetUnit::Evaluations => self.budget / self.population.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TaxonsError::Config(m));
        if self.population < 2 {
            return bad(format!("population must be at least 2, got {}", self.population));
        }
        if self.best == 0 || 2 * self.best > self.population {
            return bad(format!(
                "best must satisfy 1 <= best <= population/2, got {} with population {}",
                self.best, self.population
            ));
        }
        if self.neighbours == 0 {
            return bad("neighbours must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad(format!("mutation_prob {} not in [0, 1]", self.mutation_prob));
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad(format!("mutation_sigma {} must be finite and >= 0", self.mutation_sigma));
        }
        if self.train_interval == 0 {
            return bad("train_interval must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.coverage_resolution == 0 {
            return bad("coverage_resolution must be at least 1".into());
        }
        if self.observation_size < 16 {
            return bad(format!("observation_size {} below 16", self.observation_size));
        }
        if self.arena.kind != self.env {
            return bad(format!(
                "arena kind {} does not match env {}",
                self.arena.kind.name(),
                self.env.name()
            ));
        }
        self.arena.validate()?;
        if self.method.uses_autoencoder() {
            if self.autoencoder.image_size != self.observation_size {
                return bad(format!(
                    "autoencoder image_size {} differs from observation_size {}",
                    self.autoencoder.image_size, self.observation_size
                ));
            }
            self.autoencoder.layers()?;
        }
        Ok(())
    }
}

/// Named substreams of the master seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Init = 1,
    Mutation = 2,
    Metric = 3,
    AeShuffle = 4,
    RandomScores = 5,
    AeInit = 6,
    FrozenInit = 7,
    RandomDescriptors = 8,
}

fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    rng
}

/// Seed of the rollout of policy `id` (only matters when the arena jitters its start).
pub fn rollout_seed(master: u64, id: u64) -> u64 {
    master ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn rng_seed(seed: u64, s: Stream) -> u64 {
    stream(seed, s).gen()
}

/// Line-delimited run log records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// Resolved configuration and the number of generations the budget buys.
    Start {
        config: Box<SearchConfig>,
        generations: usize,
    },
    Generation {
        generation: usize,
        metric: MetricChoice,
        archive_size: usize,
        coverage: f64,
        invalid_rollouts: usize,
        buffer_size: usize,
    },
    Train {
        generation: usize,
        buffer_size: usize,
        losses: Vec<f64>,
    },
    Refresh {
        generation: usize,
        entries: usize,
    },
}

/// Counters that back the method-conformance and firewall properties.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instrumentation {
    /// Ground-truth reads that can influence selection.
    pub ground_truth_search_reads: u64,
    /// Ground-truth reads by the coverage logger.
    pub ground_truth_evaluation_reads: u64,
    pub evaluations: u64,
    pub novelty_evaluations: u64,
    pub surprise_evaluations: u64,
    pub describe_calls: u64,
    pub trainings: u64,
    pub autoencoders_built: u64,
}

/// Receives artifacts as the run produces them.
pub trait RunSink {
    fn event(&mut self, _event: &Event) -> Result<()> {
        Ok(())
    }

    /// Called for the initial autoencoder (generation 0) and after every training.
    fn checkpoint(&mut self, _generation: usize, _ae: &Autoencoder) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl RunSink for NullSink {}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub config: SearchConfig,
    pub archive: Archive,
    pub curve: Vec<CurvePoint>,
    pub events: Vec<Event>,
    pub metrics: Vec<MetricChoice>,
    /// Final learned autoencoder, or the frozen one for NT.
    pub autoencoder: Option<Autoencoder>,
    pub instrumentation: Instrumentation,
}

impl SearchOutcome {
    pub fn final_coverage(&self) -> f64 {
        self.curve.last().map_or(0.0, |c| c.coverage)
    }
}

enum Observer {
    Learned(AutoencoderTrainer),
    Frozen(FrozenEncoder),
    GroundTruth,
    Parameters,
    Random(u64),
    None,
}

impl Observer {
    fn autoencoder(&self) -> Option<&Autoencoder> {
        match self {
            Observer::Learned(t) => Some(t.autoencoder()),
            Observer::Frozen(f) => Some(f.autoencoder()),
            _ => None,
        }
    }
}

pub fn run_search(config: &SearchConfig) -> Result<SearchOutcome> {
    run_search_with(config, &mut NullSink)
}

pub fn run_search_with(config: &SearchConfig, sink: &mut dyn RunSink) -> Result<SearchOutcome> {
    config.validate()?;
    let cfg = config;
    let seed = cfg.seed;
    let generations = cfg.generations();
    let controller = ControllerSpec::for_arena(&cfg.arena);
    let access = GroundTruthAccess::new();
    let mut counters = Instrumentation::default();
    let mut events = Vec::new();
    let emit = |e: Event, sink: &mut dyn RunSink, events: &mut Vec<Event>| -> Result<()> {
        sink.event(&e)?;
        events.push(e);
        Ok(())
    };

    let mut init_rng = stream(seed, Stream::Init);
    let mut mutation_rng = stream(seed, Stream::Mutation);
    let mut metric_rng = stream(seed, Stream::Metric);
    let mut shuffle_rng = stream(seed, Stream::AeShuffle);
    let mut score_rng = stream(seed, Stream::RandomScores);

    let mut observer = match cfg.method.observer() {
        Some(ObserverKind::Encoder) => {
            let ae = Autoencoder::new(&cfg.autoencoder, &mut stream(seed, Stream::AeInit))?;
            counters.autoencoders_built += 1;
            Observer::Learned(AutoencoderTrainer::new(ae, cfg.learning_rate, cfg.batch_size))
        }
        Some(ObserverKind::FrozenRandomAe) => {
            let ae = Autoencoder::new(&cfg.autoencoder, &mut stream(seed, Stream::FrozenInit))?;
            counters.autoencoders_built += 1;
            Observer::Frozen(FrozenEncoder::new(ae))
        }
        Some(ObserverKind::GroundTruth) => Observer::GroundTruth,
        Some(ObserverKind::ParameterSpace) => Observer::Parameters,
        Some(ObserverKind::Random10D) => Observer::Random(rng_seed(seed, Stream::RandomDescriptors)),
        None => Observer::None,
    };

    emit(
        Event::Start {
            config: Box::new(cfg.clone()),
            generations,
        },
        sink,
        &mut events,
    )?;
    if let Some(ae) = observer.autoencoder() {
        sink.checkpoint(0, ae)?;
    }

    let mut ids = IdSource::new();
    let mut genomes: Vec<Genome> = (0..cfg.population)
        .map(|_| random_genome(&controller, &mut ids, &mut init_rng))
        .collect();
    let mut archive = Archive::new();
    let mut buffer: Vec<Observation> = Vec::new();
    let mut grid = CoverageGrid::new(cfg.arena.bounds, cfg.coverage_resolution)?;
    let mut curve = Vec::with_capacity(generations);
    let mut metrics = Vec::with_capacity(generations);

    for generation in 1..=generations {
        // evaluate
        let rollouts: Vec<_> = genomes
            .par_iter()
            .map(|g| evaluate(&cfg.arena, &controller, g, cfg.horizon, rollout_seed(seed, g.id), cfg.observation_size))
            .collect::<Result<_>>()?;
        counters.evaluations += genomes.len() as u64;

        // describe
        let descriptors: Vec<Option<OutcomeDescriptor>> = match &observer {
            Observer::Learned(t) => rollouts
                .par_iter()
                .map(|r| describe_encoder(t.autoencoder(), &r.observation).map(Some))
                .collect::<Result<_>>()?,
            Observer::Frozen(f) => rollouts
                .par_iter()
                .map(|r| describe_frozen_ae(f, &r.observation).map(Some))
                .collect::<Result<_>>()?,
            Observer::GroundTruth => rollouts
                .iter()
                .map(|r| Some(describe_ground_truth(r, &access)))
                .collect(),
            Observer::Parameters => genomes.iter().map(|g| Some(describe_parameters(g))).collect(),
            Observer::Random(s) => genomes.iter().map(|g| Some(describe_random(g.id, *s))).collect(),
            Observer::None => vec![None; genomes.len()],
        };
        if !matches!(observer, Observer::None) {
            counters.describe_calls += genomes.len() as u64;
        }

        let population: Vec<Individual> = genomes
            .iter()
            .zip(rollouts)
            .zip(descriptors)
            .map(|((g, r), descriptor)| Individual {
                genome: g.clone(),
                observation: r.observation,
                descriptor,
                ground_truth: r.ground_truth,
                valid: r.valid,
            })
            .collect();

        // score
        let metric = choose_metric(&mut metric_rng, cfg.method);
        metrics.push(metric);
        let mut scores = match metric {
            MetricChoice::Novelty => {
                let own: Vec<&[f64]> = population
                    .iter()
                    .map(|i| i.descriptor.as_ref().map(|d| d.values.as_slice()).expect("described"))
                    .collect();
                let refs = archive.descriptors();
                counters.novelty_evaluations += own.len() as u64;
                novelty_scores(&own, &refs, cfg.neighbours)?
            }
            MetricChoice::Surprise => {
                let ae = observer
                    .autoencoder()
                    .ok_or_else(|| TaxonsError::invalid("surprise requires an autoencoder"))?;
                counters.surprise_evaluations += population.len() as u64;
                population
                    .par_iter()
                    .map(|i| ae.surprise(&i.observation))
                    .collect::<Result<_>>()?
            }
            MetricChoice::Random => population.iter().map(|_| score_rng.gen::<f64>()).collect::<Vec<_>>(),
        };
        let mut invalid = 0;
        for (s, ind) in scores.iter_mut().zip(&population) {
            if !ind.valid {
                *s = f64::NEG_INFINITY;
                invalid += 1;
            }
        }

        // select, archive
        let selection = select_and_replace(&scores, cfg.best)?;
        let added: Vec<ArchiveEntry> = selection
            .best
            .iter()
            .map(|&i| ArchiveEntry::from_individual(&population[i], generation, scores[i]))
            .collect();
        for e in &added {
            let &(x, y) = access.for_evaluation(&e.ground_truth);
            grid.add(x, y)?;
        }
        archive.insert(added);

        // buffer and train
        if cfg.method.learns() {
            buffer.extend(population.iter().map(|i| i.observation.clone()));
        }
        let point = CurvePoint {
            generation,
            archive_size: archive.len(),
            coverage: grid.percentage(),
        };
        curve.push(point);
        emit(
            Event::Generation {
                generation,
                metric,
                archive_size: archive.len(),
                coverage: point.coverage,
                invalid_rollouts: invalid,
                buffer_size: buffer.len(),
            },
            sink,
            &mut events,
        )?;

        if let Observer::Learned(trainer) = &mut observer {
            if generation % cfg.train_interval == 0 {
                let losses = trainer.train(&buffer, cfg.epochs, &mut shuffle_rng)?;
                counters.trainings += 1;
                emit(
                    Event::Train {
                        generation,
                        buffer_size: buffer.len(),
                        losses,
                    },
                    sink,
                    &mut events,
                )?;
                buffer.clear();
                archive.refresh_descriptors(trainer.autoencoder())?;
                emit(
                    Event::Refresh {
                        generation,
                        entries: archive.len(),
                    },
                    sink,
                    &mut events,
                )?;
                sink.checkpoint(generation, trainer.autoencoder())?;
            }
        }

        // next population: copies per the selection, then every member mutated
        genomes = selection
            .next
            .iter()
            .map(|&src| {
                mutate(
                    &population[src].genome,
                    cfg.mutation_prob,
                    cfg.mutation_sigma,
                    &mut ids,
                    generation + 1,
                    &mut mutation_rng,
                )
            })
            .collect::<Result<_>>()?;
    }

    counters.ground_truth_search_reads = access.search_reads();
    counters.ground_truth_evaluation_reads = access.evaluation_reads();
    let autoencoder = match observer {
        Observer::Learned(t) => Some(t.into_autoencoder()),
        Observer::Frozen(f) => Some(f.autoencoder().clone()),
        _ => None,
    };
    Ok(SearchOutcome {
        config: cfg.clone(),
        archive,
        curve,
        events,
        metrics,
        autoencoder,
        instrumentation: counters,
    })
}

/// Archived entry whose descriptor is nearest to `E(goal)`, with that distance.
/// Ties go to the earliest insertion.
pub fn select_policy_for_goal<'a>(
    archive: &'a Archive,
    ae: &Autoencoder,
    goal: &Observation,
) -> Result<(&'a ArchiveEntry, f64)> {
    if archive.is_empty() {
        return Err(TaxonsError::NoResult("archive is empty".into()));
    }
    let z = ae.encode(goal)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in archive.entries().iter().enumerate() {
        let d = e
            .descriptor
            .as_ref()
            .filter(|d| d.dim() == z.len())
            .ok_or_else(|| TaxonsError::invalid(format!("entry {i} has no latent descriptor")))?;
        let dist = squared_distance(&z, &d.values);
        if best.is_none_or(|(_, b)| dist < b) {
            best = Some((i, dist));
        }
    }
    let (i, d2) = best.expect("non-empty archive");
    Ok((&archive.entries()[i], d2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(method: Method) -> SearchConfig {
        let mut c = SearchConfig::desk(method, EnvKind::Maze);
        c.population = 6;
        c.best = 2;
        c.neighbours = 3;
        c.horizon = 60;
        c.train_interval = 2;
        c.epochs = 1;
        c.batch_size = 4;
        c.budget = 4;
        c.observation_size = 16;
        c.autoencoder = AutoencoderSpec::for_size(16);
        c
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("taxo_n".parse::<Method>().unwrap(), Method::TaxoN);
        assert!("GA".parse::<Method>().is_err());
    }

    #[test]
    fn fixed_metric_presets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..200).all(|_| choose_metric(&mut rng, Method::TaxoN) == MetricChoice::Novelty));
        assert!((0..200).all(|_| choose_metric(&mut rng, Method::TaxoS) == MetricChoice::Surprise));
        assert_eq!(choose_metric(&mut rng, Method::Rs), MetricChoice::Random);
        for m in [Method::Ns, Method::Pns, Method::Rns, Method::Nt] {
            assert_eq!(choose_metric(&mut rng, m), MetricChoice::Novelty);
        }
    }

    #[test]
    fn zero_budget_does_no_work() {
        let mut c = tiny(Method::Taxons);
        c.budget = 0;
        let out = run_search(&c).unwrap();
        assert!(out.archive.is_empty() && out.curve.is_empty());
        assert_eq!(out.instrumentation.evaluations, 0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = tiny(Method::Ns);
        c.best = 4;
        assert!(run_search(&c).is_err());
        let mut c = tiny(Method::Taxons);
        c.autoencoder = AutoencoderSpec::desk();
        assert!(matches!(run_search(&c), Err(TaxonsError::Config(_))));
    }

    #[test]
    fn evaluation_budget_converts_to_generations() {
        let mut c = tiny(Method::Rs);
        c.budget_unit = BudgetUnit::Evaluations;
        c.budget = 20;
        assert_eq!(c.generations(), 3);
        assert_eq!(run_search(&c).unwrap().archive.len(), 3 * c.best);
    }

    #[test]
    fn training_schedule_follows_interval() {
        let c = tiny(Method::Taxons);
        let out = run_search(&c).unwrap();
        let trains: Vec<_> = out
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Train { buffer_size, losses, .. } => Some((*buffer_size, losses.len())),
                _ => None,
            })
            .collect();
        assert_eq!(trains, vec![(2 * c.population, 1); 2]);
        assert_eq!(out.instrumentation.trainings, 2);
        assert_eq!(out.archive.len(), 4 * c.best);
    }

    #[test]
    fn baselines_keep_to_their_observers() {
        let pns = run_search(&tiny(Method::Pns)).unwrap();
        assert_eq!(pns.instrumentation.autoencoders_built, 0);
        assert!(pns.autoencoder.is_none());
        let rs = run_search(&tiny(Method::Rs)).unwrap();
        assert_eq!(rs.instrumentation.novelty_evaluations + rs.instrumentation.surprise_evaluations, 0);
        assert_eq!(rs.instrumentation.describe_calls, 0);
        assert!(rs.archive.entries().iter().all(|e| e.descriptor.is_none()));
        let nt = run_search(&tiny(Method::Nt)).unwrap();
        assert_eq!(nt.instrumentation.trainings, 0);
        assert_eq!(nt.instrumentation.autoencoders_built, 1);
        let ns = run_search(&tiny(Method::Ns)).unwrap();
        assert!(ns.instrumentation.ground_truth_search_reads > 0);
    }

    #[test]
    fn goal_retrieval_finds_exact_entry() {
        let out = run_search(&tiny(Method::TaxoN)).unwrap();
        let ae = out.autoencoder.as_ref().unwrap();
        let (entry, d) = select_policy_for_goal(&out.archive, ae, &out.archive.entries()[5].observation).unwrap();
        assert_eq!(d, 0.0);
        // identical observations share a descriptor, so ties resolve to the first of them
        assert_eq!(entry.observation, out.archive.entries()[5].observation);
        let first = out
            .archive
            .entries()
            .iter()
            .position(|e| e.observation == entry.observation)
            .unwrap();
        assert_eq!(entry.genome.id, out.archive.entries()[first].genome.id);
        assert!(select_policy_for_goal(&Archive::new(), ae, &entry.observation).is_err());
        let wrong = Observation::filled(32, 32, [0.0; 3]);
        assert!(select_policy_for_goal(&out.archive, ae, &wrong).is_err());
    }
}
