use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{mse, Gradients, Network};
use crate::error::{Result, TaxonsError};

/// Denominator floor for the relative error, so gradients that are zero up to
/// round-off do not register as failures.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Networks with more parameters than this are checked on a random subsample.
    pub full_check_limit: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            full_check_limit: 4096,
            sample_size: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub checked: usize,
    /// Parameters whose ±eps perturbation moved a pre-activation across a kink
    /// (relu/selu at 0), where central differences are not meaningful.
    pub skipped_kinks: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Central-difference check of [`Network::backward`] on the MSE loss.
pub fn grad_check(net: &Network, input: &[f64], target: &[f64], eps: f64) -> Result<GradCheckReport> {
    let (grads, _) = net.backward(input, target)?;
    grad_check_against(net, input, target, eps, &grads, GradCheckOptions::default())
}

/// Checks the supplied `analytic` gradients against central differences.
pub fn grad_check_against(
    net: &Network,
    input: &[f64],
    target: &[f64],
    eps: f64,
    analytic: &Gradients,
    options: GradCheckOptions,
) -> Result<GradCheckReport> {
    if !(eps > 0.0) {
        return Err(TaxonsError::invalid("eps must be positive"));
    }
    if analytic.as_slice().len() != net.param_count() {
        return Err(TaxonsError::Shape {
            expected: vec![net.param_count()],
            got: vec![analytic.as_slice().len()],
        });
    }
    let n = net.param_count();
    let indices: Vec<usize> = if n <= options.full_check_limit {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut idx = sample(&mut rng, n, options.sample_size.min(n)).into_vec();
        idx.sort_unstable();
        idx
    };

    let mut probe = net.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: None,
        checked: 0,
        skipped_kinks: 0,
    };
    for i in indices {
        let original = net.params()[i];
        probe.params_mut()[i] = original + eps;
        let plus = probe.forward_trace(input)?;
        probe.params_mut()[i] = original - eps;
        let minus = probe.forward_trace(input)?;
        probe.params_mut()[i] = original;

        if crosses_kink(net, &plus.pre, &minus.pre) {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (mse(plus.output(), target) - mse(minus.output(), target)) / (2.0 * eps);
        let err = relative_error(analytic.as_slice()[i], numeric);
        report.checked += 1;
        if report.worst_index.is_none() || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = Some(i);
        }
    }
    Ok(report)
}

fn crosses_kink(net: &Network, plus: &[Vec<f64>], minus: &[Vec<f64>]) -> bool {
    net.layers()
        .iter()
        .zip(plus.iter().zip(minus))
        .filter(|(layer, _)| layer.activation.has_kink())
        .any(|(_, (p, m))| p.iter().zip(m).any(|(a, b)| (*a > 0.0) != (*b > 0.0)))
}
