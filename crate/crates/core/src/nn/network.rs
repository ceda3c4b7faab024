use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{LayerKind, LayerSpec};
use crate::error::{Result, TaxonsError};

/// Location of one layer's weights and biases inside the flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub weight: Range<usize>,
    pub bias: Range<usize>,
}

/// A feed-forward stack of layers with all parameters in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<LayerSpec>,
    slots: Vec<ParamSlot>,
    params: Vec<f64>,
}

/// Gradient buffer with the same layout as [`Network::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }

    /// Weight and bias gradients of layer `index`.
    pub fn layer<'a>(&'a self, net: &Network, index: usize) -> (&'a [f64], &'a [f64]) {
        let slot = &net.slots[index];
        (&self.0[slot.weight.clone()], &self.0[slot.bias.clone()])
    }
}

/// Per-layer values recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[i]` is the input of layer `i`; the last element is the network output.
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation of layer `i` (empty for shape-only layers).
    pub pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Network {
    /// Builds a network with all parameters set to zero.
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(TaxonsError::invalid("network needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            layer.validate()?;
            if i > 0 && layers[i - 1].output != layer.input {
                return Err(TaxonsError::invalid(format!(
                    "layer {} outputs {:?} but layer {} expects {:?}",
                    i - 1,
                    layers[i - 1].output,
                    i,
                    layer.input
                )));
            }
        }
        let mut slots = Vec::with_capacity(layers.len());
        let mut offset = 0;
        for layer in &layers {
            let (nw, nb) = layer.param_shape();
            slots.push(ParamSlot {
                weight: offset..offset + nw,
                bias: offset + nw..offset + nw + nb,
            });
            offset += nw + nb;
        }
        Ok(Network {
            layers,
            slots,
            params: vec![0.0; offset],
        })
    }

    /// Builds a network with fan-in scaled uniform weights and zero biases.
    pub fn init<R: Rng + ?Sized>(layers: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let mut net = Network::new(layers)?;
        for (layer, slot) in net.layers.iter().zip(&net.slots) {
            let bound = (3.0 / layer.fan_in() as f64).sqrt();
            for p in &mut net.params[slot.weight.clone()] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.layers[0].input
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.layers[self.layers.len() - 1].output
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].input_len()
    }

    pub fn output_len(&self) -> usize {
        self.layers[self.layers.len() - 1].output_len()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(TaxonsError::Shape {
                expected: vec![self.params.len()],
                got: vec![params.len()],
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Weights and biases of layer `index`.
    pub fn layer_params(&self, index: usize) -> (&[f64], &[f64]) {
        let slot = &self.slots[index];
        (&self.params[slot.weight.clone()], &self.params[slot.bias.clone()])
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(TaxonsError::Shape {
                expected: self.input_shape().to_vec(),
                got: vec![input.len()],
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_range(input, 0..self.layers.len())
    }

    /// Runs only `layers[range]`; `input` must match the first of those layers.
    pub fn forward_range(&self, input: &[f64], range: Range<usize>) -> Result<Vec<f64>> {
        if range.is_empty() || range.end > self.layers.len() {
            return Err(TaxonsError::invalid(format!("layer range {range:?} out of bounds")));
        }
        let first = &self.layers[range.start];
        if input.len() != first.input_len() {
            return Err(TaxonsError::Shape {
                expected: first.input.clone(),
                got: vec![input.len()],
            });
        }
        let mut x = input.to_vec();
        for i in range {
            let layer = &self.layers[i];
            if matches!(layer.kind, LayerKind::Flatten | LayerKind::Reshape) {
                continue;
            }
            let (w, b) = self.layer_params(i);
            let mut y = linear_forward(layer, w, b, &x);
            for v in &mut y {
                *v = layer.activation.apply(*v);
            }
            x = y;
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(input.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = &inputs[i];
            if matches!(layer.kind, LayerKind::Flatten | LayerKind::Reshape) {
                let y = x.clone();
                pre.push(Vec::new());
                inputs.push(y);
                continue;
            }
            let (w, b) = self.layer_params(i);
            let z = linear_forward(layer, w, b, x);
            let y = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            inputs.push(y);
        }
        Ok(Trace { inputs, pre })
    }

    /// Reverse pass from `grad_output` (loss gradient w.r.t. the network output).
    /// Returns parameter gradients and, if requested, the gradient w.r.t. the input.
    pub fn backprop(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        want_input_grad: bool,
    ) -> (Gradients, Option<Vec<f64>>) {
        let mut grads = Gradients::zeros(self.params.len());
        let dx = self.backprop_into(trace, grad_output, &mut grads, want_input_grad);
        (grads, dx)
    }

    /// As [`Network::backprop`], adding the parameter gradients into `grads`.
    pub fn backprop_into(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        grads: &mut Gradients,
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let mut delta = grad_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if matches!(layer.kind, LayerKind::Flatten | LayerKind::Reshape) {
                continue;
            }
            let z = &trace.pre[i];
            let y = &trace.inputs[i + 1];
            for ((d, &zv), &yv) in delta.iter_mut().zip(z).zip(y) {
                *d *= layer.activation.derivative(zv, yv);
            }
            let slot = &self.slots[i];
            let (w, _) = self.layer_params(i);
            let need_dx = i > 0 || want_input_grad;
            let (gw, gb) = split_grads(&mut grads.0, slot);
            delta = linear_backward(layer, w, &trace.inputs[i], &delta, gw, gb, need_dx)?;
        }
        want_input_grad.then_some(delta)
    }

    /// Mean-squared-error loss against `target` and its exact parameter gradients.
    pub fn backward(&self, input: &[f64], target: &[f64]) -> Result<(Gradients, f64)> {
        let mut grads = Gradients::zeros(self.params.len());
        let loss = self.backward_into(input, target, &mut grads)?;
        Ok((grads, loss))
    }

    /// As [`Network::backward`], adding the gradients into `grads`; returns the loss.
    pub fn backward_into(&self, input: &[f64], target: &[f64], grads: &mut Gradients) -> Result<f64> {
        if target.len() != self.output_len() {
            return Err(TaxonsError::Shape {
                expected: self.output_shape().to_vec(),
                got: vec![target.len()],
            });
        }
        if grads.0.len() != self.params.len() {
            return Err(TaxonsError::Shape {
                expected: vec![self.params.len()],
                got: vec![grads.0.len()],
            });
        }
        let trace = self.forward_trace(input)?;
        let (loss, grad) = mse_with_grad(trace.output(), target);
        self.backprop_into(&trace, &grad, grads, false);
        Ok(loss)
    }
}

fn split_grads<'a>(buf: &'a mut [f64], slot: &ParamSlot) -> (&'a mut [f64], &'a mut [f64]) {
    let (head, tail) = buf.split_at_mut(slot.bias.start);
    (&mut head[slot.weight.clone()], &mut tail[..slot.bias.len()])
}

/// Mean over elements of squared differences.
pub fn mse(output: &[f64], target: &[f64]) -> f64 {
    let n = output.len().max(1) as f64;
    output
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

pub(crate) fn mse_with_grad(output: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = output.len().max(1) as f64;
    let grad = output
        .iter()
        .zip(target)
        .map(|(a, b)| 2.0 * (a - b) / n)
        .collect();
    (mse(output, target), grad)
}

fn linear_forward(layer: &LayerSpec, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    match layer.kind {
        LayerKind::Dense => {
            let n_in = layer.input[0];
            b.iter()
                .zip(w.chunks_exact(n_in))
                .map(|(&bias, row)| bias + dot(row, x))
                .collect()
        }
        LayerKind::Conv => conv_forward(layer, w, b, x),
        LayerKind::ConvTranspose => tconv_forward(layer, w, b, x),
        LayerKind::Flatten | LayerKind::Reshape => x.to_vec(),
    }
}

fn linear_backward(
    layer: &LayerSpec,
    w: &[f64],
    x: &[f64],
    delta: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    need_dx: bool,
) -> Option<Vec<f64>> {
    match layer.kind {
        LayerKind::Dense => {
            let n_in = layer.input[0];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                axpy(d, x, &mut gw[o * n_in..(o + 1) * n_in]);
            }
            need_dx.then(|| {
                let mut dx = vec![0.0; n_in];
                for (o, &d) in delta.iter().enumerate() {
                    axpy(d, &w[o * n_in..(o + 1) * n_in], &mut dx);
                }
                dx
            })
        }
        LayerKind::Conv => conv_backward(layer, w, x, delta, gw, gb, need_dx),
        LayerKind::ConvTranspose => tconv_backward(layer, w, x, delta, gw, gb, need_dx),
        LayerKind::Flatten | LayerKind::Reshape => need_dx.then(|| delta.to_vec()),
    }
}

/// Geometry shared by the two convolution kinds. `small` is the strided grid
/// (conv output, transposed-conv input); `big` is the dense grid.
struct ConvGeom {
    k: usize,
    s: usize,
    p: usize,
    small_h: usize,
    small_w: usize,
    big_h: usize,
    big_w: usize,
}

impl ConvGeom {
    fn new(layer: &LayerSpec, small: &[usize], big: &[usize]) -> Self {
        ConvGeom {
            k: layer.kernel.unwrap(),
            s: layer.stride.unwrap(),
            p: layer.padding.unwrap(),
            small_h: small[1],
            small_w: small[2],
            big_h: big[1],
            big_w: big[2],
        }
    }

    /// Range of small-grid indices `o` for which `o*s + off - p` lands inside `[0, big)`.
    #[inline]
    fn valid(&self, off: usize, small: usize, big: usize) -> Range<usize> {
        // o*s + off >= p  and  o*s + off - p < big
        let lo = if off >= self.p {
            0
        } else {
            (self.p - off).div_ceil(self.s)
        };
        let hi_num = big + self.p;
        let hi = if hi_num > off {
            (hi_num - off).div_ceil(self.s).min(small)
        } else {
            0
        };
        lo..hi.max(lo)
    }

    #[inline]
    fn big_index(&self, o: usize, off: usize) -> usize {
        o * self.s + off - self.p
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

/// Both convolution kinds store weights as a `small_channels × (big_channels·k·k)`
/// matrix; this unrolls the dense grid into the matching column matrix
/// (`big_channels·k·k` rows, one column per small-grid pixel).
fn im2col(g: &ConvGeom, big_c: usize, big: &[f64]) -> Vec<f64> {
    let k = g.k;
    let small_plane = g.small_h * g.small_w;
    let big_plane = g.big_h * g.big_w;
    let mut cols = vec![0.0; big_c * k * k * small_plane];
    for c in 0..big_c {
        let src = &big[c * big_plane..(c + 1) * big_plane];
        for ky in 0..k {
            let sy_range = g.valid(ky, g.small_h, g.big_h);
            for kx in 0..k {
                let sx_range = g.valid(kx, g.small_w, g.big_w);
                let r = (c * k + ky) * k + kx;
                let dst = &mut cols[r * small_plane..(r + 1) * small_plane];
                for sy in sy_range.clone() {
                    let row = &src[g.big_index(sy, ky) * g.big_w..];
                    let drow = &mut dst[sy * g.small_w..(sy + 1) * g.small_w];
                    for sx in sx_range.clone() {
                        drow[sx] = row[g.big_index(sx, kx)];
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-adds columns back onto the dense grid.
fn col2im(g: &ConvGeom, big_c: usize, cols: &[f64], big: &mut [f64]) {
    let k = g.k;
    let small_plane = g.small_h * g.small_w;
    let big_plane = g.big_h * g.big_w;
    for c in 0..big_c {
        let dst = &mut big[c * big_plane..(c + 1) * big_plane];
        for ky in 0..k {
            let sy_range = g.valid(ky, g.small_h, g.big_h);
            for kx in 0..k {
                let sx_range = g.valid(kx, g.small_w, g.big_w);
                let r = (c * k + ky) * k + kx;
                let src = &cols[r * small_plane..(r + 1) * small_plane];
                for sy in sy_range.clone() {
                    let iy = g.big_index(sy, ky);
                    let srow = &src[sy * g.small_w..(sy + 1) * g.small_w];
                    let row = &mut dst[iy * g.big_w..(iy + 1) * g.big_w];
                    for sx in sx_range.clone() {
                        row[g.big_index(sx, kx)] += srow[sx];
                    }
                }
            }
        }
    }
}

/// `out (m × n) += W (m × r) · cols (r × n)`
fn mat_mul_add(w: &[f64], cols: &[f64], m: usize, r: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for j in 0..r {
            let a = w[i * r + j];
            if a != 0.0 {
                axpy(a, &cols[j * n..(j + 1) * n], orow);
            }
        }
    }
}

/// `Wᵀ (r × m) · d (m × n)`
fn mat_t_mul(w: &[f64], d: &[f64], m: usize, r: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * n];
    for i in 0..m {
        let drow = &d[i * n..(i + 1) * n];
        for j in 0..r {
            axpy(w[i * r + j], drow, &mut out[j * n..(j + 1) * n]);
        }
    }
    out
}

/// `gw (m × r) += d (m × n) · colsᵀ`
fn outer_add(d: &[f64], cols: &[f64], m: usize, r: usize, n: usize, gw: &mut [f64]) {
    for i in 0..m {
        let drow = &d[i * n..(i + 1) * n];
        for j in 0..r {
            gw[i * r + j] += dot(drow, &cols[j * n..(j + 1) * n]);
        }
    }
}

fn conv_forward(layer: &LayerSpec, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let (ic_n, oc_n) = (layer.input[0], layer.output[0]);
    let g = ConvGeom::new(layer, &layer.output, &layer.input);
    let n = g.small_h * g.small_w;
    let r = ic_n * g.k * g.k;
    let cols = im2col(&g, ic_n, x);
    let mut y = vec![0.0; oc_n * n];
    for oc in 0..oc_n {
        y[oc * n..(oc + 1) * n].fill(b[oc]);
    }
    mat_mul_add(w, &cols, oc_n, r, n, &mut y);
    y
}

fn conv_backward(
    layer: &LayerSpec,
    w: &[f64],
    x: &[f64],
    delta: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    need_dx: bool,
) -> Option<Vec<f64>> {
    let (ic_n, oc_n) = (layer.input[0], layer.output[0]);
    let g = ConvGeom::new(layer, &layer.output, &layer.input);
    let n = g.small_h * g.small_w;
    let r = ic_n * g.k * g.k;
    for oc in 0..oc_n {
        gb[oc] += delta[oc * n..(oc + 1) * n].iter().sum::<f64>();
    }
    let cols = im2col(&g, ic_n, x);
    outer_add(delta, &cols, oc_n, r, n, gw);
    need_dx.then(|| {
        let dcols = mat_t_mul(w, delta, oc_n, r, n);
        let mut dx = vec![0.0; x.len()];
        col2im(&g, ic_n, &dcols, &mut dx);
        dx
    })
}

fn tconv_forward(layer: &LayerSpec, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let (ic_n, oc_n) = (layer.input[0], layer.output[0]);
    let g = ConvGeom::new(layer, &layer.input, &layer.output);
    let n = g.small_h * g.small_w;
    let r = oc_n * g.k * g.k;
    let big_plane = g.big_h * g.big_w;
    let cols = mat_t_mul(w, x, ic_n, r, n);
    let mut y = vec![0.0; oc_n * big_plane];
    for oc in 0..oc_n {
        y[oc * big_plane..(oc + 1) * big_plane].fill(b[oc]);
    }
    col2im(&g, oc_n, &cols, &mut y);
    y
}

fn tconv_backward(
    layer: &LayerSpec,
    w: &[f64],
    x: &[f64],
    delta: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    need_dx: bool,
) -> Option<Vec<f64>> {
    let (ic_n, oc_n) = (layer.input[0], layer.output[0]);
    let g = ConvGeom::new(layer, &layer.input, &layer.output);
    let n = g.small_h * g.small_w;
    let r = oc_n * g.k * g.k;
    let big_plane = g.big_h * g.big_w;
    for oc in 0..oc_n {
        gb[oc] += delta[oc * big_plane..(oc + 1) * big_plane].iter().sum::<f64>();
    }
    let cols = im2col(&g, oc_n, delta);
    outer_add(x, &cols, ic_n, r, n, gw);
    need_dx.then(|| {
        let mut dx = vec![0.0; x.len()];
        mat_mul_add(w, &cols, ic_n, r, n, &mut dx);
        dx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn identity_dense_passes_input_through() {
        let mut net = Network::new(vec![LayerSpec::dense(3, 3, Activation::Linear)]).unwrap();
        let mut p = vec![0.0; 12];
        p[0] = 1.0;
        p[4] = 1.0;
        p[8] = 1.0;
        net.set_params(&p).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn scalar_linear_loss_and_gradient() {
        // y = w x with x = 2, target 0, w = 1: loss 4, dloss/dw = 2 y x = 8
        let mut net = Network::new(vec![LayerSpec::dense(1, 1, Activation::Linear)]).unwrap();
        net.set_params(&[1.0, 0.0]).unwrap();
        let (g, loss) = net.backward(&[2.0], &[0.0]).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(g.0[0], 8.0);
        assert_eq!(g.0[1], 4.0);
    }

    #[test]
    fn target_equal_to_output_gives_zero_loss_and_gradient() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::SeedableRng;
        let net = Network::init(
            vec![
                LayerSpec::conv([2, 6, 6], 3, 4, 2, 1, Activation::Selu).unwrap(),
                LayerSpec::flatten(vec![3, 3, 3]),
                LayerSpec::dense(27, 4, Activation::Tanh),
            ],
            &mut rng,
        )
        .unwrap();
        let x: Vec<f64> = (0..72).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = net.forward(&x).unwrap();
        let (g, loss) = net.backward(&x, &y).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = Network::new(vec![LayerSpec::dense(3, 2, Activation::Linear)]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(TaxonsError::Shape { .. })));
        assert!(net.backward(&[1.0, 2.0, 3.0], &[0.0]).is_err());
    }

    #[test]
    fn chain_mismatch_is_rejected() {
        let r = Network::new(vec![
            LayerSpec::dense(3, 2, Activation::Linear),
            LayerSpec::dense(3, 2, Activation::Linear),
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn param_count_is_sum_of_layers() {
        let net = Network::new(vec![
            LayerSpec::conv([3, 8, 8], 4, 4, 2, 1, Activation::Selu).unwrap(),
            LayerSpec::conv_transpose([4, 4, 4], 2, 4, 2, 1, Activation::Relu).unwrap(),
        ])
        .unwrap();
        assert_eq!(net.param_count(), 3 * 4 * 16 + 4 + 4 * 2 * 16 + 2);
        assert_eq!(net.output_shape(), &[2, 8, 8]);
    }

    /// Direct definition of a padded strided convolution, used as an oracle.
    fn naive_conv(layer: &LayerSpec, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
        let (c, h, wd) = (layer.input[0], layer.input[1], layer.input[2]);
        let (oc, oh, ow) = (layer.output[0], layer.output[1], layer.output[2]);
        let (k, s, p) = (
            layer.kernel.unwrap() as isize,
            layer.stride.unwrap() as isize,
            layer.padding.unwrap() as isize,
        );
        let mut y = vec![0.0; oc * oh * ow];
        for o in 0..oc {
            for yy in 0..oh as isize {
                for xx in 0..ow as isize {
                    let mut acc = b[o];
                    for i in 0..c {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = yy * s + ky - p;
                                let ix = xx * s + kx - p;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                    continue;
                                }
                                let wi = ((o * c + i) as isize * k + ky) * k + kx;
                                acc += w[wi as usize]
                                    * x[(i * h * wd) + iy as usize * wd + ix as usize];
                            }
                        }
                    }
                    y[o * oh * ow + yy as usize * ow + xx as usize] = acc;
                }
            }
        }
        y
    }

    #[test]
    fn conv_matches_naive_definition() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (shape, oc, k, s, p) in [([2, 7, 5], 3, 3, 1, 1), ([3, 8, 8], 2, 4, 2, 1), ([1, 9, 9], 2, 2, 3, 0)] {
            let layer = LayerSpec::conv(shape, oc, k, s, p, Activation::Linear).unwrap();
            let net = Network::init(vec![layer.clone()], &mut rng).unwrap();
            let x: Vec<f64> = (0..layer.input_len()).map(|i| ((i * 7 % 13) as f64) / 13.0 - 0.4).collect();
            let (w, b) = net.layer_params(0);
            let expected = naive_conv(&layer, w, b, &x);
            let got = net.forward(&x).unwrap();
            for (a, e) in got.iter().zip(&expected) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transposed_conv_is_adjoint_of_conv() {
        // <conv(x), y> == <x, tconv(y)> when both share weights and have zero bias.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let conv = LayerSpec::conv([2, 8, 8], 3, 4, 2, 1, Activation::Linear).unwrap();
        let tconv = LayerSpec::conv_transpose([3, 4, 4], 2, 4, 2, 1, Activation::Linear).unwrap();
        let mut cn = Network::new(vec![conv]).unwrap();
        let mut tn = Network::new(vec![tconv]).unwrap();
        // conv weight [oc=3][ic=2][k][k]; tconv weight [ic=3][oc=2][k][k]: same memory layout
        let w: Vec<f64> = (0..3 * 2 * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut cp = w.clone();
        cp.extend([0.0; 3]);
        let mut tp = w;
        tp.extend([0.0; 2]);
        cn.set_params(&cp).unwrap();
        tn.set_params(&tp).unwrap();
        let x: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cx = cn.forward(&x).unwrap();
        let ty = tn.forward(&y).unwrap();
        let lhs: f64 = cx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&ty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}
