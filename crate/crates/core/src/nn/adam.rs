use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use crate::error::{Result, TaxonsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Moment estimates for bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            first: vec![0.0; param_count],
            second: vec![0.0; param_count],
            step: 0,
        }
    }

    /// Applies one update to `net`. An all-zero gradient is a null step: the
    /// counter advances but parameters and moments are left as they are.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let g = grads.as_slice();
        if g.len() != net.param_count() || g.len() != self.first.len() {
            return Err(TaxonsError::Shape {
                expected: vec![net.param_count()],
                got: vec![g.len()],
            });
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(TaxonsError::NonFinite(format!("gradient element {i}")));
        }
        self.step += 1;
        if g.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let params = net.params_mut();
        for i in 0..g.len() {
            let m = beta1 * self.first[i] + (1.0 - beta1) * g[i];
            let v = beta2 * self.second[i] + (1.0 - beta2) * g[i] * g[i];
            self.first[i] = m;
            self.second[i] = v;
            let m_hat = m / c1;
            let v_hat = v / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn scalar_net(w: f64) -> Network {
        // single weight, single bias
        let mut net = Network::new(vec![LayerSpec::dense(1, 1, Activation::Linear)]).unwrap();
        net.set_params(&[w, 0.0]).unwrap();
        net
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = scalar_net(0.0);
        let mut st = AdamState::new(2, AdamConfig::with_lr(0.001));
        st.step(&mut net, &Gradients(vec![1.0, 0.0])).unwrap();
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((net.params()[0] - expected).abs() < 1e-15);
        assert_eq!(net.params()[1], 0.0);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut net = scalar_net(0.5);
        let mut st = AdamState::new(2, AdamConfig::default());
        st.step(&mut net, &Gradients(vec![0.0, 0.0])).unwrap();
        assert_eq!(net.params(), &[0.5, 0.0]);
        assert_eq!(st.step, 1);
        assert!(st.first.iter().all(|&m| m == 0.0));

        st.step(&mut net, &Gradients(vec![0.3, -0.2])).unwrap();
        let after = net.params().to_vec();
        st.step(&mut net, &Gradients(vec![0.0, 0.0])).unwrap();
        st.step(&mut net, &Gradients(vec![0.0, 0.0])).unwrap();
        assert_eq!(net.params(), after.as_slice());
        assert_eq!(st.step, 4);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut net = scalar_net(0.5);
        let mut st = AdamState::new(2, AdamConfig::default());
        let err = st.step(&mut net, &Gradients(vec![f64::NAN, 0.0]));
        assert!(matches!(err, Err(TaxonsError::NonFinite(_))));
        assert_eq!(st.step, 0);
        assert_eq!(net.params(), &[0.5, 0.0]);
    }
}
