use serde::{Deserialize, Serialize};

use crate::error::{Result, TaxonsError};

/// Self-normalizing scale constant.
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
/// Self-normalizing negative-branch constant.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Selu,
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative with respect to the pre-activation `x`; `y` is `apply(x)`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA
                } else {
                    y + SELU_LAMBDA * SELU_ALPHA
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    /// Whether the activation has a non-differentiable point at 0.
    pub fn has_kink(self) -> bool {
        matches!(self, Activation::Selu | Activation::Relu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Dense,
    Conv,
    ConvTranspose,
    Flatten,
    Reshape,
}

/// Declarative description of one layer. Tensors are flat `f64` buffers laid
/// out channel-major (`[c][h][w]`) for the convolutional kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::Dense,
            input: vec![inputs],
            output: vec![outputs],
            kernel: None,
            stride: None,
            padding: None,
            activation,
        }
    }

    /// Plain convolution over a `[channels, height, width]` input.
    pub fn conv(
        input: [usize; 3],
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: Activation,
    ) -> Result<Self> {
        let [c, h, w] = input;
        let oh = conv_out(h, kernel, stride, padding)?;
        let ow = conv_out(w, kernel, stride, padding)?;
        Ok(LayerSpec {
            kind: LayerKind::Conv,
            input: vec![c, h, w],
            output: vec![out_channels, oh, ow],
            kernel: Some(kernel),
            stride: Some(stride),
            padding: Some(padding),
            activation,
        })
    }

    pub fn conv_transpose(
        input: [usize; 3],
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: Activation,
    ) -> Result<Self> {
        let [c, h, w] = input;
        let oh = tconv_out(h, kernel, stride, padding)?;
        let ow = tconv_out(w, kernel, stride, padding)?;
        Ok(LayerSpec {
            kind: LayerKind::ConvTranspose,
            input: vec![c, h, w],
            output: vec![out_channels, oh, ow],
            kernel: Some(kernel),
            stride: Some(stride),
            padding: Some(padding),
            activation,
        })
    }

    pub fn flatten(input: Vec<usize>) -> Self {
        let n = input.iter().product();
        LayerSpec {
            kind: LayerKind::Flatten,
            input,
            output: vec![n],
            kernel: None,
            stride: None,
            padding: None,
            activation: Activation::Linear,
        }
    }

    pub fn reshape(input: Vec<usize>, output: Vec<usize>) -> Self {
        LayerSpec {
            kind: LayerKind::Reshape,
            input,
            output,
            kernel: None,
            stride: None,
            padding: None,
            activation: Activation::Linear,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.output.iter().product()
    }

    pub fn is_conv(&self) -> bool {
        matches!(self.kind, LayerKind::Conv | LayerKind::ConvTranspose)
    }

    /// (weight count, bias count)
    pub fn param_shape(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Dense => (self.input[0] * self.output[0], self.output[0]),
            LayerKind::Conv | LayerKind::ConvTranspose => {
                let k = self.kernel.unwrap_or(0);
                (self.input[0] * self.output[0] * k * k, self.output[0])
            }
            LayerKind::Flatten | LayerKind::Reshape => (0, 0),
        }
    }

    /// Number of inputs feeding one output unit, used to scale initialization.
    pub fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Dense => self.input[0],
            LayerKind::Conv | LayerKind::ConvTranspose => {
                let k = self.kernel.unwrap_or(1);
                self.input[0] * k * k
            }
            LayerKind::Flatten | LayerKind::Reshape => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TaxonsError::invalid(msg));
        let geometry = (self.kernel, self.stride, self.padding);
        match self.kind {
            LayerKind::Dense | LayerKind::Flatten | LayerKind::Reshape => {
                if geometry != (None, None, None) {
                    return bad(format!("{:?} layer must not set kernel/stride/padding", self.kind));
                }
            }
            LayerKind::Conv | LayerKind::ConvTranspose => {
                if geometry.0.is_none() || geometry.1.is_none() || geometry.2.is_none() {
                    return bad(format!("{:?} layer requires kernel, stride and padding", self.kind));
                }
            }
        }
        match self.kind {
            LayerKind::Dense => {
                if self.input.len() != 1 || self.output.len() != 1 {
                    return bad("dense layer takes flat input and output".into());
                }
            }
            LayerKind::Conv | LayerKind::ConvTranspose => {
                if self.input.len() != 3 || self.output.len() != 3 {
                    return bad("conv layer takes [c, h, w] input and output".into());
                }
                let (k, s, p) = (self.kernel.unwrap(), self.stride.unwrap(), self.padding.unwrap());
                let f = if self.kind == LayerKind::Conv { conv_out } else { tconv_out };
                let oh = f(self.input[1], k, s, p)?;
                let ow = f(self.input[2], k, s, p)?;
                if self.output[1] != oh || self.output[2] != ow {
                    return bad(format!(
                        "conv output {:?} inconsistent with geometry (expected {oh}x{ow})",
                        self.output
                    ));
                }
            }
            LayerKind::Flatten | LayerKind::Reshape => {
                if self.input_len() != self.output_len() {
                    return bad(format!(
                        "reshape {:?} -> {:?} changes element count",
                        self.input, self.output
                    ));
                }
                if self.activation != Activation::Linear {
                    return bad("flatten/reshape cannot carry an activation".into());
                }
            }
        }
        if self.input_len() == 0 || self.output_len() == 0 {
            return bad("layer with empty input or output".into());
        }
        Ok(())
    }
}

fn conv_out(size: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 || size + 2 * padding < kernel {
        return Err(TaxonsError::invalid(format!(
            "conv geometry k={kernel} s={stride} p={padding} invalid for size {size}"
        )));
    }
    Ok((size + 2 * padding - kernel) / stride + 1)
}

fn tconv_out(size: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    let full = (size.saturating_sub(1)) * stride + kernel;
    if kernel == 0 || stride == 0 || size == 0 || full <= 2 * padding {
        return Err(TaxonsError::invalid(format!(
            "transposed conv geometry k={kernel} s={stride} p={padding} invalid for size {size}"
        )));
    }
    Ok(full - 2 * padding)
}
