//! Finite-difference check of backpropagation through each layer kind.
//!
//!     cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxons::nn::{grad_check, Activation, LayerSpec, Network};

fn main() -> taxons::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nets = [
        ("dense/tanh", vec![LayerSpec::dense(6, 4, Activation::Tanh)]),
        (
            "conv + flatten + dense",
            vec![
                LayerSpec::conv([2, 6, 6], 3, 3, 2, 1, Activation::Selu)?,
                LayerSpec::flatten(vec![3, 3, 3]),
                LayerSpec::dense(27, 4, Activation::Linear),
            ],
        ),
        (
            "reshape + transposed conv",
            vec![
                LayerSpec::dense(5, 12, Activation::Relu),
                LayerSpec::reshape(vec![12], vec![3, 2, 2]),
                LayerSpec::conv_transpose([3, 2, 2], 2, 3, 2, 1, Activation::Tanh)?,
            ],
        ),
    ];
    for (name, layers) in nets {
        let net = Network::init(layers, &mut rng)?;
        let x: Vec<f64> = (0..net.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..net.output_len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let r = grad_check(&net, &x, &t, 1e-5)?;
        println!(
            "{name:<28} {} params, max relative error {:.2e} ({} kinks skipped)",
            net.param_count(),
            r.max_rel_error,
            r.skipped_kinks
        );
    }
    Ok(())
}
