//! Policy genomes, the fully connected tanh controller they parameterize, and
//! per-parameter Gaussian mutation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::envs::{self, ArenaSpec, Policy, RolloutResult};
use crate::error::{Result, TaxonsError};
use crate::nn::{Activation, LayerSpec, Network};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
}

impl ControllerSpec {
    /// One hidden layer of 16 tanh units between the sensors and the two outputs.
    pub fn for_arena(arena: &ArenaSpec) -> Self {
        ControllerSpec {
            inputs: envs::input_dim(arena),
            hidden: vec![16],
            outputs: envs::action_dim(arena),
        }
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        let mut sizes = vec![self.inputs];
        sizes.extend(&self.hidden);
        sizes.push(self.outputs);
        sizes
            .windows(2)
            .map(|w| LayerSpec::dense(w[0], w[1], Activation::Tanh))
            .collect()
    }

    pub fn network(&self) -> Result<Network> {
        Network::new(self.layers())
    }

    pub fn param_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| {
                let (w, b) = l.param_shape();
                w + b
            })
            .sum()
    }
}

/// Flat controller parameters plus lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub id: u64,
    pub parent: Option<u64>,
    pub generation: usize,
    pub params: Vec<f64>,
}

/// Hands out fresh policy ids.
#[derive(Debug, Clone, Default)]
pub struct IdSource {
    next: u64,
}

impl IdSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }
}

/// Parameters ~ N(0, 1) / sqrt(fan-in) of the layer they belong to.
pub fn random_genome<R: Rng + ?Sized>(spec: &ControllerSpec, ids: &mut IdSource, rng: &mut R) -> Genome {
    let mut params = Vec::with_capacity(spec.param_count());
    for layer in spec.layers() {
        let (nw, nb) = layer.param_shape();
        let scale = 1.0 / (layer.fan_in() as f64).sqrt();
        for _ in 0..nw + nb {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            params.push(z * scale);
        }
    }
    Genome {
        id: ids.next_id(),
        parent: None,
        generation: 0,
        params,
    }
}

/// Controller network instantiated from a genome.
#[derive(Debug, Clone)]
pub struct Controller {
    net: Network,
}

impl Controller {
    pub fn new(spec: &ControllerSpec, genome: &Genome) -> Result<Self> {
        let mut net = spec.network()?;
        net.set_params(&genome.params)?;
        Ok(Controller { net })
    }
}

impl Policy for Controller {
    fn act(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(input)
    }
}

pub fn act(spec: &ControllerSpec, genome: &Genome, input: &[f64]) -> Result<Vec<f64>> {
    Controller::new(spec, genome)?.act(input)
}

/// Output of [`mutate_traced`]: the child and the noise actually added.
#[derive(Debug, Clone)]
pub struct Mutation {
    pub child: Genome,
    pub noise: Vec<f64>,
}

/// Each parameter independently receives N(0, `sigma`) noise with probability `p_d`.
pub fn mutate<R: Rng + ?Sized>(
    genome: &Genome,
    p_d: f64,
    sigma: f64,
    ids: &mut IdSource,
    generation: usize,
    rng: &mut R,
) -> Result<Genome> {
    mutate_traced(genome, p_d, sigma, ids, generation, rng).map(|m| m.child)
}

pub fn mutate_traced<R: Rng + ?Sized>(
    genome: &Genome,
    p_d: f64,
    sigma: f64,
    ids: &mut IdSource,
    generation: usize,
    rng: &mut R,
) -> Result<Mutation> {
    if !(0.0..=1.0).contains(&p_d) {
        return Err(TaxonsError::invalid(format!("mutation probability {p_d} not in [0, 1]")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(TaxonsError::invalid(format!("mutation std-dev {sigma} must be >= 0")));
    }
    let normal = Normal::new(0.0, sigma).expect("validated std-dev");
    let mut params = genome.params.clone();
    let mut noise = vec![0.0; params.len()];
    for (p, n) in params.iter_mut().zip(&mut noise) {
        if rng.gen::<f64>() < p_d {
            *n = normal.sample(rng);
            *p += *n;
        }
    }
    Ok(Mutation {
        child: Genome {
            id: ids.next_id(),
            parent: Some(genome.id),
            generation,
            params,
        },
        noise,
    })
}

/// Runs one genome in the given arena.
pub fn evaluate(
    arena: &ArenaSpec,
    spec: &ControllerSpec,
    genome: &Genome,
    horizon: usize,
    seed: u64,
    observation_size: usize,
) -> Result<RolloutResult> {
    if genome.params.len() != spec.param_count() {
        return Err(TaxonsError::Shape {
            expected: vec![spec.param_count()],
            got: vec![genome.params.len()],
        });
    }
    let controller = Controller::new(spec, genome)?;
    envs::rollout(arena, &controller, horizon, seed, observation_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> ControllerSpec {
        ControllerSpec::for_arena(&ArenaSpec::maze())
    }

    #[test]
    fn maze_controller_shape() {
        let s = spec();
        assert_eq!((s.inputs, s.outputs), (5, 2));
        assert_eq!(s.param_count(), 5 * 16 + 16 + 16 * 2 + 2);
    }

    #[test]
    fn random_genomes_are_seeded() {
        let s = spec();
        let mut ids = IdSource::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_genome(&s, &mut ids, &mut rng);
        let b = random_genome(&s, &mut ids, &mut rng);
        assert_ne!(a.params, b.params);
        assert_ne!(a.id, b.id);
        let mut rng2 = ChaCha8Rng::seed_from_u64(4);
        let c = random_genome(&s, &mut IdSource::new(), &mut rng2);
        assert_eq!(a, c);
    }

    #[test]
    fn init_sample_mean_is_zero() {
        // every parameter has std 1/sqrt(fan_in) <= 1, so 3/sqrt(n) bounds the mean
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ids = IdSource::new();
        let mut all = Vec::new();
        while all.len() < 100_000 {
            all.extend(random_genome(&s, &mut ids, &mut rng).params);
        }
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let sd = (all.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn zero_genome_outputs_zero() {
        let s = spec();
        let g = Genome {
            id: 0,
            parent: None,
            generation: 0,
            params: vec![0.0; s.param_count()],
        };
        assert_eq!(act(&s, &g, &[0.3; 5]).unwrap(), vec![0.0, 0.0]);
        assert!(act(&s, &g, &[0.3; 4]).is_err());
    }

    #[test]
    fn single_weight_forward_by_hand() {
        let s = ControllerSpec {
            inputs: 1,
            hidden: vec![1],
            outputs: 1,
        };
        // [w1, b1, w2, b2]
        let g = Genome {
            id: 0,
            parent: None,
            generation: 0,
            params: vec![0.8, 0.1, -1.5, 0.2],
        };
        let x = 0.6;
        let expected = (-1.5 * (0.8f64 * x + 0.1).tanh() + 0.2).tanh();
        let out = act(&s, &g, &[x]).unwrap();
        assert!((out[0] - expected).abs() < 1e-15);
        assert_eq!(act(&s, &g, &[x]).unwrap(), out);
    }

    #[test]
    fn mutation_edge_cases() {
        let s = spec();
        let mut ids = IdSource::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_genome(&s, &mut ids, &mut rng);
        let c = mutate(&g, 0.0, 0.05, &mut ids, 1, &mut rng).unwrap();
        assert_eq!(c.params, g.params);
        assert_eq!(c.parent, Some(g.id));
        assert_ne!(c.id, g.id);
        let c = mutate(&g, 0.7, 0.0, &mut ids, 1, &mut rng).unwrap();
        assert_eq!(c.params, g.params);
        assert!(mutate(&g, 1.5, 0.1, &mut ids, 1, &mut rng).is_err());
        assert!(mutate(&g, 0.5, -0.1, &mut ids, 1, &mut rng).is_err());
    }

    #[test]
    fn mutated_fraction_is_binomial() {
        let n = 100_000usize;
        let g = Genome {
            id: 0,
            parent: None,
            generation: 0,
            params: vec![0.0; n],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let c = mutate(&g, 0.2, 0.05, &mut IdSource::new(), 1, &mut rng).unwrap();
        let changed = c.params.iter().filter(|&&v| v != 0.0).count() as f64;
        // 99% normal interval for Binomial(n, 0.2)
        let mean = 0.2 * n as f64;
        let sd = (n as f64 * 0.2 * 0.8).sqrt();
        assert!((changed - mean).abs() < 2.576 * sd, "{changed}");
    }

    #[test]
    fn straight_driving_genome_matches_kinematics() {
        // output biases only: both wheels receive tanh(0.3) whatever the sensors read
        let mut arena = ArenaSpec::maze();
        arena.walls.clear();
        arena.start = envs::Pose {
            x: 1.0,
            y: 5.0,
            heading: 0.0,
        };
        let s = ControllerSpec::for_arena(&arena);
        let mut p = vec![0.0; s.param_count()];
        // layer 2 biases sit at 128..130
        p[128] = 0.3;
        p[129] = 0.3;
        let g = Genome {
            id: 0,
            parent: None,
            generation: 0,
            params: p,
        };
        let horizon = 300;
        let r = evaluate(&arena, &s, &g, horizon, 0, 32).unwrap();
        let cmd = 0.3f64.tanh();
        let expected = 1.0 + horizon as f64 * arena.max_speed * cmd * arena.dt;
        let access = envs::GroundTruthAccess::new();
        let (x, y) = *access.for_evaluation(&r.ground_truth);
        assert!((x - expected).abs() < 1e-9, "{x} vs {expected}");
        assert_eq!(y, 5.0);
        assert_eq!(evaluate(&arena, &s, &g, horizon, 0, 32).unwrap(), r);
    }
}
