//! Binary parameter files: an 8-byte magic, a little-endian `u64` header
//! length, a JSON header describing every network (layer specs, parameter
//! shapes, byte offsets into the data section), then all parameters as
//! little-endian `f64`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::layer::{LayerKind, LayerSpec};
use super::network::Network;
use crate::error::{Result, TaxonsError};

pub const MAGIC: &[u8; 8] = b"TAXNET01";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileHeader {
    networks: Vec<NetworkHeader>,
    data_bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkHeader {
    name: String,
    param_count: usize,
    byte_offset: u64,
    layers: Vec<LayerHeader>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerHeader {
    spec: LayerSpec,
    weight_shape: Vec<usize>,
    weight_offset: u64,
    bias_shape: Vec<usize>,
    bias_offset: u64,
}

fn weight_shape(spec: &LayerSpec) -> Vec<usize> {
    match spec.kind {
        LayerKind::Dense => vec![spec.output[0], spec.input[0]],
        LayerKind::Conv => {
            let k = spec.kernel.unwrap_or(0);
            vec![spec.output[0], spec.input[0], k, k]
        }
        LayerKind::ConvTranspose => {
            let k = spec.kernel.unwrap_or(0);
            vec![spec.input[0], spec.output[0], k, k]
        }
        LayerKind::Flatten | LayerKind::Reshape => vec![0],
    }
}

pub fn write_networks<W: Write>(mut out: W, nets: &[(&str, &Network)]) -> std::io::Result<()> {
    let mut headers = Vec::with_capacity(nets.len());
    let mut offset = 0u64;
    for (name, net) in nets {
        let layers = net
            .layers()
            .iter()
            .zip(net.slots())
            .map(|(spec, slot)| LayerHeader {
                spec: spec.clone(),
                weight_shape: weight_shape(spec),
                weight_offset: offset + 8 * slot.weight.start as u64,
                bias_shape: vec![slot.bias.len()],
                bias_offset: offset + 8 * slot.bias.start as u64,
            })
            .collect();
        headers.push(NetworkHeader {
            name: name.to_string(),
            param_count: net.param_count(),
            byte_offset: offset,
            layers,
        });
        offset += 8 * net.param_count() as u64;
    }
    let header = serde_json::to_vec(&FileHeader {
        networks: headers,
        data_bytes: offset,
    })?;
    out.write_all(MAGIC)?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    for (_, net) in nets {
        for p in net.params() {
            out.write_all(&p.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_networks<R: Read>(mut input: R) -> Result<Vec<(String, Network)>> {
    let malformed = |reason: &str| TaxonsError::Format {
        path: "<network stream>".into(),
        reason: reason.to_string(),
    };
    let io = |e: std::io::Error| TaxonsError::io("<network stream>", e);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(malformed("bad magic"));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len).map_err(io)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut header = vec![0u8; len];
    input.read_exact(&mut header).map_err(io)?;
    let header: FileHeader = serde_json::from_slice(&header)?;
    let mut data = Vec::new();
    input.read_to_end(&mut data).map_err(io)?;
    if data.len() as u64 != header.data_bytes {
        return Err(malformed("data section length does not match header"));
    }
    let mut nets = Vec::with_capacity(header.networks.len());
    for nh in header.networks {
        let specs = nh.layers.into_iter().map(|l| l.spec).collect();
        let mut net = Network::new(specs)?;
        if net.param_count() != nh.param_count {
            return Err(malformed("parameter count does not match layer specs"));
        }
        let start = nh.byte_offset as usize;
        let end = start + 8 * nh.param_count;
        let bytes = data.get(start..end).ok_or_else(|| malformed("offset out of range"))?;
        for (p, chunk) in net.params_mut().iter_mut().zip(bytes.chunks_exact(8)) {
            *p = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        nets.push((nh.name, net));
    }
    Ok(nets)
}

impl Network {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_networks(&mut buf, &[("network", self)]).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut nets = read_networks(bytes)?;
        if nets.len() != 1 {
            return Err(TaxonsError::Format {
                path: "<network stream>".into(),
                reason: format!("expected one network, found {}", nets.len()),
            });
        }
        Ok(nets.remove(0).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;

    #[test]
    fn round_trip_preserves_bits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let net = Network::init(
            vec![
                LayerSpec::conv([3, 8, 8], 4, 4, 2, 1, Activation::Selu).unwrap(),
                LayerSpec::flatten(vec![4, 4, 4]),
                LayerSpec::dense(64, 3, Activation::Tanh),
            ],
            &mut rng,
        )
        .unwrap();
        let bytes = net.to_bytes();
        let back = Network::from_bytes(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let net = Network::new(vec![LayerSpec::dense(2, 2, Activation::Linear)]).unwrap();
        let bytes = net.to_bytes();
        assert!(Network::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Network::from_bytes(b"NOTANET0").is_err());
    }
}
