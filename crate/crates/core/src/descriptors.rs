//! Observer functions: how each method turns an evaluated policy into a point
//! of its outcome space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::Autoencoder;
use crate::envs::{GroundTruthAccess, Observation, RolloutResult};
use crate::error::{Result, TaxonsError};
use crate::policies::Genome;

pub const RANDOM_DESCRIPTOR_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    /// Encoder of the autoencoder trained online.
    Encoder,
    /// Final (x, y) position; the hand-designed baseline.
    GroundTruth,
    /// Raw controller parameters.
    ParameterSpace,
    /// Uniform [0, 1]^10 vector drawn once per policy.
    Random10D,
    /// Encoder of an autoencoder that is never trained.
    FrozenRandomAe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDescriptor {
    pub kind: ObserverKind,
    pub values: Vec<f64>,
}

impl OutcomeDescriptor {
    fn checked(kind: ObserverKind, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TaxonsError::NonFinite(format!("{kind:?} descriptor")));
        }
        Ok(OutcomeDescriptor { kind, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn distance(&self, other: &OutcomeDescriptor) -> Result<f64> {
        euclidean(&self.values, &other.values)
    }
}

/// Euclidean distance; a dimension mismatch is an error.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(TaxonsError::Shape {
            expected: vec![a.len()],
            got: vec![b.len()],
        });
    }
    Ok(squared_distance(a, b).sqrt())
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// f(θ) = E(o_T)
pub fn describe_encoder(ae: &Autoencoder, final_obs: &Observation) -> Result<OutcomeDescriptor> {
    OutcomeDescriptor::checked(ObserverKind::Encoder, ae.encode(final_obs)?)
}

/// Final position, read through the search side of the firewall.
pub fn describe_ground_truth(rollout: &RolloutResult, access: &GroundTruthAccess) -> OutcomeDescriptor {
    let (x, y) = *access.for_search(&rollout.ground_truth);
    OutcomeDescriptor {
        kind: ObserverKind::GroundTruth,
        values: vec![x, y],
    }
}

pub fn describe_parameters(genome: &Genome) -> OutcomeDescriptor {
    OutcomeDescriptor {
        kind: ObserverKind::ParameterSpace,
        values: genome.params.clone(),
    }
}

/// Uniform [0, 1]^10 vector that depends only on `(stream_seed, policy_id)`.
pub fn describe_random(policy_id: u64, stream_seed: u64) -> OutcomeDescriptor {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    rng.set_stream(policy_id);
    OutcomeDescriptor {
        kind: ObserverKind::Random10D,
        values: (0..RANDOM_DESCRIPTOR_DIM).map(|_| rng.gen::<f64>()).collect(),
    }
}

/// An autoencoder whose weights are fixed once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenEncoder(Autoencoder);

impl FrozenEncoder {
    pub fn new(ae: Autoencoder) -> Self {
        FrozenEncoder(ae)
    }

    pub fn autoencoder(&self) -> &Autoencoder {
        &self.0
    }
}

pub fn describe_frozen_ae(frozen: &FrozenEncoder, final_obs: &Observation) -> Result<OutcomeDescriptor> {
    OutcomeDescriptor::checked(ObserverKind::FrozenRandomAe, frozen.0.encode(final_obs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::AutoencoderSpec;
    use crate::envs::{self, ArenaSpec};
    use crate::policies::{mutate_traced, random_genome, ControllerSpec, IdSource};

    fn obs_at(x: f64, y: f64) -> Observation {
        let mut spec = ArenaSpec::maze();
        spec.start.x = x;
        spec.start.y = y;
        envs::render(&envs::initial_state(&spec, 0), &spec, 32).unwrap()
    }

    #[test]
    fn encoder_descriptor_is_forward_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ae = Autoencoder::new(&AutoencoderSpec::desk(), &mut rng).unwrap();
        let o = obs_at(2.0, 2.0);
        let d = describe_encoder(&ae, &o).unwrap();
        assert_eq!(d.dim(), 10);
        let (enc, _) = ae.to_parts();
        assert_eq!(d.values, enc.forward(o.as_slice()).unwrap());
        assert_eq!(describe_encoder(&ae, &o.clone()).unwrap(), d);
    }

    #[test]
    fn frozen_encoders_differ_by_seed() {
        let spec = AutoencoderSpec::desk();
        let a = FrozenEncoder::new(Autoencoder::new(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap());
        let b = FrozenEncoder::new(Autoencoder::new(&spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap());
        let o = obs_at(5.0, 8.0);
        let da = describe_frozen_ae(&a, &o).unwrap();
        assert_eq!(da, describe_frozen_ae(&a, &o).unwrap());
        assert_ne!(da.values, describe_frozen_ae(&b, &o).unwrap().values);
        assert_eq!(da.values, a.autoencoder().encode(&o).unwrap());
    }

    #[test]
    fn ground_truth_descriptor_passes_position_through() {
        let spec = ArenaSpec::maze();
        let still = |_: &[f64]| vec![0.0, 0.0];
        let r = envs::rollout(&spec, &still, 10, 0, 32).unwrap();
        let access = GroundTruthAccess::new();
        let d = describe_ground_truth(&r, &access);
        assert_eq!(d.values, vec![spec.start.x, spec.start.y]);
        assert_eq!(access.search_reads(), 1);

        let e = OutcomeDescriptor {
            kind: ObserverKind::GroundTruth,
            values: vec![spec.start.x + 0.03, spec.start.y - 0.04],
        };
        assert!((d.distance(&e).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn parameter_descriptor_distance_is_noise_norm() {
        let cs = ControllerSpec::for_arena(&ArenaSpec::maze());
        let mut ids = IdSource::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let parent = random_genome(&cs, &mut ids, &mut rng);
        let m = mutate_traced(&parent, 0.2, 0.05, &mut ids, 1, &mut rng).unwrap();
        let dp = describe_parameters(&parent);
        let dc = describe_parameters(&m.child);
        assert_eq!(dp.dim(), cs.param_count());
        let noise_norm = m.noise.iter().map(|n| n * n).sum::<f64>().sqrt();
        assert!((dp.distance(&dc).unwrap() - noise_norm).abs() < 1e-12);
        let same = mutate_traced(&parent, 0.2, 0.0, &mut ids, 1, &mut rng).unwrap();
        assert_eq!(describe_parameters(&same.child).values, dp.values);
    }

    #[test]
    fn random_descriptor_is_stable_and_uniform() {
        let a = describe_random(17, 99);
        assert_eq!(a, describe_random(17, 99));
        assert_eq!(a.dim(), RANDOM_DESCRIPTOR_DIM);
        assert_ne!(a.values, describe_random(18, 99).values);
        // mean of U(0,1) over 10^5 draws: sd = sqrt(1/12)/sqrt(n)
        let n = 10_000u64;
        let mut sum = 0.0;
        for id in 0..n {
            sum += describe_random(id, 5).values.iter().sum::<f64>();
        }
        let count = (n as usize * RANDOM_DESCRIPTOR_DIM) as f64;
        let mean = sum / count;
        let sd = (1.0f64 / 12.0).sqrt() / count.sqrt();
        assert!((mean - 0.5).abs() < 3.29 * sd, "{mean}");
    }

    #[test]
    fn mismatched_dimensions_error() {
        assert!(euclidean(&[0.0, 1.0], &[0.0]).is_err());
    }
}
