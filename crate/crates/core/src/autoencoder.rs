//! Convolutional autoencoder over final observations: strided convolutions
//! down to a 10-D latent code, transposed convolutions back up.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::Observation;
use crate::error::{Result, TaxonsError};
use crate::nn::io::{read_networks, write_networks};
use crate::nn::{mse, Activation, AdamConfig, AdamState, Gradients, LayerSpec, Network};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    pub image_size: usize,
    /// Output channels of each encoder convolution (kernel 4, stride 2, padding 1).
    pub encoder_channels: Vec<usize>,
    /// Encoder dense layer sizes; the last one is the latent dimension.
    pub encoder_dense: Vec<usize>,
    /// Decoder dense layer sizes; the last one is reshaped into the first decoder feature map.
    pub decoder_dense: Vec<usize>,
    /// Output channels of each decoder transposed convolution; the last one is 3.
    pub decoder_channels: Vec<usize>,
}

const KERNEL: usize = 4;
const STRIDE: usize = 2;
const PADDING: usize = 1;
/// Samples accumulated sequentially per parallel task during training.
const GRADIENT_CHUNK: usize = 8;

impl AutoencoderSpec {
    /// 64×64 architecture: conv [32, 128, 128, 64], dense [1024, 256, 10] /
    /// dense [256, 512], transposed conv [64, 32, 32, 3].
    pub fn full() -> Self {
        AutoencoderSpec {
            image_size: 64,
            encoder_channels: vec![32, 128, 128, 64],
            encoder_dense: vec![1024, 256, 10],
            decoder_dense: vec![256, 512],
            decoder_channels: vec![64, 32, 32, 3],
        }
    }

    /// Scaled-down 32×32 variant with the same layer pattern and a 10-D latent.
    pub fn desk() -> Self {
        AutoencoderSpec {
            image_size: 32,
            encoder_channels: vec![16, 32, 32],
            encoder_dense: vec![256, 64, 10],
            decoder_dense: vec![64, 512],
            decoder_channels: vec![32, 16, 3],
        }
    }

    /// Default architecture for an observation size.
    pub fn for_size(image_size: usize) -> Self {
        match image_size {
            64 => AutoencoderSpec::full(),
            32 => AutoencoderSpec::desk(),
            _ => {
                let mut s = AutoencoderSpec::desk();
                s.image_size = image_size;
                s
            }
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder_dense.last().copied().unwrap_or(0)
    }

    /// Full layer list and the number of layers that make up the encoder.
    pub fn layers(&self) -> Result<(Vec<LayerSpec>, usize)> {
        let bad = |m: String| TaxonsError::Config(format!("autoencoder: {m}"));
        if self.encoder_channels.is_empty() || self.encoder_dense.is_empty() {
            return Err(bad("encoder needs convolutional and dense layers".into()));
        }
        if self.decoder_dense.is_empty() || self.decoder_channels.last() != Some(&3) {
            return Err(bad("decoder needs dense layers and must end with 3 channels".into()));
        }
        let mut layers = Vec::new();
        let mut shape = [3, self.image_size, self.image_size];
        for &c in &self.encoder_channels {
            let l = LayerSpec::conv(shape, c, KERNEL, STRIDE, PADDING, Activation::Selu)?;
            shape = [l.output[0], l.output[1], l.output[2]];
            layers.push(l);
        }
        layers.push(LayerSpec::flatten(shape.to_vec()));
        let mut width = shape.iter().product::<usize>();
        for &n in &self.encoder_dense {
            layers.push(LayerSpec::dense(width, n, Activation::Selu));
            width = n;
        }
        let encoder_len = layers.len();
        for &n in &self.decoder_dense {
            layers.push(LayerSpec::dense(width, n, Activation::Selu));
            width = n;
        }
        let ups = self.decoder_channels.len() as u32;
        let base = self.image_size >> ups;
        if base == 0 || base << ups != self.image_size {
            return Err(bad(format!(
                "image size {} is not divisible by 2^{ups}",
                self.image_size
            )));
        }
        if width % (base * base) != 0 {
            return Err(bad(format!("{width} decoder units cannot be reshaped to {base}x{base} maps")));
        }
        let mut shape = [width / (base * base), base, base];
        layers.push(LayerSpec::reshape(vec![width], shape.to_vec()));
        for (i, &c) in self.decoder_channels.iter().enumerate() {
            let last = i + 1 == self.decoder_channels.len();
            let act = if last { Activation::Relu } else { Activation::Selu };
            let l = LayerSpec::conv_transpose(shape, c, KERNEL, STRIDE, PADDING, act)?;
            shape = [l.output[0], l.output[1], l.output[2]];
            layers.push(l);
        }
        Ok((layers, encoder_len))
    }
}

/// Encoder and decoder held as one network; the first `encoder_len` layers encode.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    net: Network,
    encoder_len: usize,
}

impl Autoencoder {
    pub fn new<R: Rng + ?Sized>(spec: &AutoencoderSpec, rng: &mut R) -> Result<Self> {
        let (layers, encoder_len) = spec.layers()?;
        Ok(Autoencoder {
            net: Network::init(layers, rng)?,
            encoder_len,
        })
    }

    pub fn from_parts(encoder: Network, decoder: Network) -> Result<Self> {
        if encoder.output_shape() != decoder.input_shape() {
            return Err(TaxonsError::invalid("encoder output does not feed the decoder"));
        }
        let encoder_len = encoder.layers().len();
        let mut layers = encoder.layers().to_vec();
        layers.extend_from_slice(decoder.layers());
        let mut net = Network::new(layers)?;
        let mut params = encoder.params().to_vec();
        params.extend_from_slice(decoder.params());
        net.set_params(&params)?;
        Ok(Autoencoder { net, encoder_len })
    }

    /// Splits into standalone encoder and decoder networks.
    pub fn to_parts(&self) -> (Network, Network) {
        let layers = self.net.layers();
        let split = self.net.slots()[self.encoder_len].weight.start;
        let mut enc = Network::new(layers[..self.encoder_len].to_vec()).expect("valid prefix");
        enc.set_params(&self.net.params()[..split]).expect("matching lengths");
        let mut dec = Network::new(layers[self.encoder_len..].to_vec()).expect("valid suffix");
        dec.set_params(&self.net.params()[split..]).expect("matching lengths");
        (enc, dec)
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn encoder_len(&self) -> usize {
        self.encoder_len
    }

    pub fn input_shape(&self) -> &[usize] {
        self.net.input_shape()
    }

    pub fn latent_dim(&self) -> usize {
        self.net.layers()[self.encoder_len - 1].output_len()
    }

    fn check(&self, obs: &Observation) -> Result<()> {
        if obs.shape().as_slice() != self.input_shape() {
            return Err(TaxonsError::Shape {
                expected: self.input_shape().to_vec(),
                got: obs.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// E(o)
    pub fn encode(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.check(obs)?;
        self.net.forward_range(obs.as_slice(), 0..self.encoder_len)
    }

    /// D(z)
    pub fn decode(&self, latent: &[f64]) -> Result<Vec<f64>> {
        self.net
            .forward_range(latent, self.encoder_len..self.net.layers().len())
    }

    /// D(E(o)), channel-major like the observation.
    pub fn reconstruct(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.check(obs)?;
        self.net.forward(obs.as_slice())
    }

    /// Reconstruction error: mean over pixels and channels of (o - D(E(o)))².
    pub fn surprise(&self, obs: &Observation) -> Result<f64> {
        Ok(mse(&self.reconstruct(obs)?, obs.as_slice()))
    }

    /// Parameter file holding an `encoder` and a `decoder` network.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (enc, dec) = self.to_parts();
        let mut out = Vec::new();
        write_networks(&mut out, &[("encoder", &enc), ("decoder", &dec)]).expect("writing to memory");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut nets = read_networks(bytes)?;
        let pick = |nets: &mut Vec<(String, Network)>, name: &str| {
            nets.iter()
                .position(|(n, _)| n == name)
                .map(|i| nets.swap_remove(i).1)
                .ok_or_else(|| TaxonsError::invalid(format!("parameter file has no `{name}` network")))
        };
        let enc = pick(&mut nets, "encoder")?;
        let dec = pick(&mut nets, "decoder")?;
        Autoencoder::from_parts(enc, dec)
    }
}

/// An autoencoder together with its optimizer state, persisted across training events.
#[derive(Debug, Clone)]
pub struct AutoencoderTrainer {
    ae: Autoencoder,
    adam: AdamState,
    pub batch_size: usize,
}

impl AutoencoderTrainer {
    pub fn new(ae: Autoencoder, lr: f64, batch_size: usize) -> Self {
        let adam = AdamState::new(ae.net.param_count(), AdamConfig::with_lr(lr));
        AutoencoderTrainer {
            ae,
            adam,
            batch_size: batch_size.max(1),
        }
    }

    pub fn autoencoder(&self) -> &Autoencoder {
        &self.ae
    }

    pub fn into_autoencoder(self) -> Autoencoder {
        self.ae
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.adam.config.lr = lr;
    }

    pub fn adam_steps(&self) -> u64 {
        self.adam.step
    }

    /// Mean batch loss and gradient. The batch is split into fixed-size
    /// chunks that run in parallel; chunk sums are combined in index order so
    /// the result does not depend on scheduling or thread count.
    pub fn batch_gradient(&self, batch: &[&Observation]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(TaxonsError::invalid("empty training batch"));
        }
        for o in batch {
            self.ae.check(o)?;
        }
        let n_params = self.ae.net.param_count();
        let partial: Vec<(Gradients, f64)> = batch
            .par_chunks(GRADIENT_CHUNK)
            .map(|chunk| {
                let mut g = Gradients::zeros(n_params);
                let mut loss = 0.0;
                for o in chunk {
                    loss += self.ae.net.backward_into(o.as_slice(), o.as_slice(), &mut g)?;
                }
                Ok((g, loss))
            })
            .collect::<Result<_>>()?;
        let mut parts = partial.into_iter();
        let (mut total, mut loss) = parts.next().expect("non-empty batch");
        for (g, l) in parts {
            total.add_assign(&g);
            loss += l;
        }
        let n = batch.len() as f64;
        total.scale(1.0 / n);
        Ok((loss / n, total))
    }

    /// One Adam step on `batch`; returns the loss before the step.
    pub fn step(&mut self, batch: &[&Observation]) -> Result<f64> {
        let (loss, grads) = self.batch_gradient(batch)?;
        self.adam.step(&mut self.ae.net, &grads)?;
        Ok(loss)
    }

    /// `epochs` passes of shuffled minibatch training; returns the mean loss of each epoch.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        buffer: &[Observation],
        epochs: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if buffer.is_empty() {
            return Err(TaxonsError::invalid("training buffer is empty"));
        }
        let mut order: Vec<usize> = (0..buffer.len()).collect();
        let mut history = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(rng);
            let mut weighted = 0.0;
            for chunk in order.chunks(self.batch_size) {
                let batch: Vec<&Observation> = chunk.iter().map(|&i| &buffer[i]).collect();
                weighted += self.step(&batch)? * chunk.len() as f64;
            }
            history.push(weighted / buffer.len() as f64);
        }
        Ok(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_architecture_composes() {
        let (layers, enc) = AutoencoderSpec::full().layers().unwrap();
        let net = Network::new(layers).unwrap();
        assert_eq!(net.input_shape(), &[3, 64, 64]);
        assert_eq!(net.output_shape(), &[3, 64, 64]);
        // flatten of the last conv map is 64·4·4
        assert_eq!(net.layers()[4].output, vec![1024]);
        assert_eq!(net.layers()[enc - 1].output, vec![10]);
    }

    #[test]
    fn desk_architecture_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ae = Autoencoder::new(&AutoencoderSpec::desk(), &mut rng).unwrap();
        assert_eq!(ae.latent_dim(), 10);
        let obs = Observation::filled(32, 32, [0.5, 0.2, 0.9]);
        assert_eq!(ae.encode(&obs).unwrap().len(), 10);
        let rec = ae.reconstruct(&obs).unwrap();
        assert_eq!(rec.len(), 3 * 32 * 32);
        assert!(rec.iter().all(|&v| v >= 0.0));
        let wrong = Observation::filled(16, 16, [0.0; 3]);
        assert!(ae.encode(&wrong).is_err());
        assert!(ae.surprise(&wrong).is_err());
    }

    #[test]
    fn parts_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ae = Autoencoder::new(&AutoencoderSpec::desk(), &mut rng).unwrap();
        let (enc, dec) = ae.to_parts();
        let back = Autoencoder::from_parts(enc.clone(), dec.clone()).unwrap();
        assert_eq!(back, ae);
        let obs = Observation::filled(32, 32, [0.1, 0.7, 0.3]);
        let z = enc.forward(obs.as_slice()).unwrap();
        assert_eq!(z, ae.encode(&obs).unwrap());
        assert_eq!(dec.forward(&z).unwrap(), ae.reconstruct(&obs).unwrap());
        assert_eq!(Autoencoder::from_bytes(&ae.to_bytes()).unwrap(), ae);
        assert!(Autoencoder::from_bytes(&enc.to_bytes()).is_err());
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ae = Autoencoder::new(&AutoencoderSpec::desk(), &mut rng).unwrap();
        let mut t = AutoencoderTrainer::new(ae.clone(), 1e-3, 4);
        let buf = vec![Observation::filled(32, 32, [0.3; 3])];
        assert!(t.train(&buf, 0, &mut rng).unwrap().is_empty());
        assert_eq!(t.autoencoder(), &ae);
        assert!(t.train(&[], 1, &mut rng).is_err());
    }
}
