use std::ops::Range;

use rand::Rng;

use super::arch::{Architecture, Layer};
use crate::error::{GolError, Result};
use crate::image::Image;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Shape {
    channels: usize,
    height: usize,
    width: usize,
}

impl Shape {
    fn len(&self) -> usize {
        self.channels * self.height * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    /// Valid 2-D convolution, stride 1, followed by tanh.
    Conv {
        input: Shape,
        output: Shape,
        kernel: usize,
        weights: usize,
        biases: usize,
    },
    MaxPool {
        input: Shape,
        output: Shape,
        size: usize,
    },
    /// Fully connected; tanh unless it is the output layer.
    Dense {
        inputs: usize,
        outputs: usize,
        weights: usize,
        biases: usize,
        activate: bool,
    },
}

impl Op {
    fn params(&self) -> Range<usize> {
        match *self {
            Op::Conv { weights, biases, output, .. } => weights..biases + output.channels,
            Op::Dense { weights, biases, outputs, .. } => weights..biases + outputs,
            Op::MaxPool { .. } => 0..0,
        }
    }

    fn output_len(&self) -> usize {
        match self {
            Op::Conv { output, .. } | Op::MaxPool { output, .. } => output.len(),
            Op::Dense { outputs, .. } => *outputs,
        }
    }
}

/// Intermediate values of one forward pass.
pub struct Trace {
    /// `activations[i]` is the input of op `i`; the last entry holds the logits.
    pub activations: Vec<Vec<f64>>,
    pool_argmax: Vec<Vec<usize>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("at least one op")
    }
}

/// A feed-forward network with all parameters in one flat array.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    ops: Vec<Op>,
    params: Vec<f64>,
}

impl Network {
    /// A network with every parameter set to zero.
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        let (ops, count) = plan(arch)?;
        Ok(Self {
            arch: arch.clone(),
            ops,
            params: vec![0.0; count],
        })
    }

    /// Fan-in scaled uniform weights `U(-sqrt(3 / fan_in), sqrt(3 / fan_in))`, zero biases.
    pub fn initialized(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let mut rng = stream_rng(seed, 0);
        for op in &net.ops {
            let (range, fan_in) = match *op {
                Op::Conv { input, kernel, weights, biases, .. } => {
                    (weights..biases, input.channels * kernel * kernel)
                }
                Op::Dense { inputs, weights, biases, .. } => (weights..biases, inputs),
                Op::MaxPool { .. } => continue,
            };
            let limit = (3.0 / fan_in as f64).sqrt();
            for p in &mut net.params[range] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn from_params(arch: &Architecture, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if params.len() != net.params.len() {
            return Err(GolError::DimensionMismatch {
                context: "network parameters",
                expected: net.params.len(),
                found: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn op_count(&self) -> usize {
        self.ops.len()
    }

    /// Index range of the parameters owned by op `op` (empty for pooling).
    pub fn op_params(&self, op: usize) -> Range<usize> {
        self.ops[op].params()
    }

    /// Converts an image into the channel-major input tensor.
    pub fn input_tensor(&self, image: &Image) -> Result<Vec<f64>> {
        let a = &self.arch;
        if image.width() != a.width || image.height() != a.height || image.channels() != a.channels {
            return Err(GolError::config(format!(
                "image {}x{}x{} does not match network input {}x{}x{}",
                image.width(),
                image.height(),
                image.channels(),
                a.width,
                a.height,
                a.channels
            )));
        }
        let mut t = vec![0.0; image.pixels().len()];
        let plane = a.width * a.height;
        for (i, px) in image.pixels().chunks_exact(a.channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                t[c * plane + i] = v;
            }
        }
        Ok(t)
    }

    pub fn forward(&self, input: &[f64]) -> Trace {
        self.forward_from(0, input.to_vec())
    }

    /// Runs ops `first..` on `input`, which must be the input of op `first`.
    pub fn forward_from(&self, first: usize, input: Vec<f64>) -> Trace {
        let mut activations = Vec::with_capacity(self.ops.len() + 1 - first);
        let mut pool_argmax = Vec::new();
        activations.push(input);
        for op in &self.ops[first..] {
            let x = activations.last().expect("non-empty");
            let mut y = vec![0.0; op.output_len()];
            match *op {
                Op::Conv { input, output, kernel, weights, biases } => {
                    conv_forward(&self.params, x, &mut y, input, output, kernel, weights, biases);
                }
                Op::MaxPool { input, output, size } => {
                    let mut argmax = vec![0; output.len()];
                    pool_forward(x, &mut y, &mut argmax, input, output, size);
                    pool_argmax.push(argmax);
                }
                Op::Dense { inputs, outputs, weights, biases, activate } => {
                    for o in 0..outputs {
                        let row = &self.params[weights + o * inputs..weights + (o + 1) * inputs];
                        let z = self.params[biases + o] + dot(row, x);
                        y[o] = if activate { z.tanh() } else { z };
                    }
                }
            }
            activations.push(y);
        }
        Trace {
            activations,
            pool_argmax,
        }
    }

    pub fn logits(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input).activations.pop().expect("logits")
    }

    /// Cross-entropy of one sample; accumulates `d loss / d params` into `grad`.
    pub fn backward(&self, input: &[f64], label: usize, grad: &mut [f64]) -> f64 {
        let trace = self.forward(input);
        let probs = softmax(trace.logits());
        let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
        let mut delta = probs;
        delta[label] -= 1.0;

        let mut pools = trace.pool_argmax.iter().rev();
        for (i, op) in self.ops.iter().enumerate().rev() {
            let x = &trace.activations[i];
            let y = &trace.activations[i + 1];
            let need_input_grad = i > 0;
            delta = match *op {
                Op::Dense { inputs, outputs, weights, biases, activate } => {
                    if activate {
                        for (d, a) in delta.iter_mut().zip(y) {
                            *d *= 1.0 - a * a;
                        }
                    }
                    let mut dx = vec![0.0; if need_input_grad { inputs } else { 0 }];
                    for o in 0..outputs {
                        let d = delta[o];
                        grad[biases + o] += d;
                        let w = weights + o * inputs;
                        for (g, xi) in grad[w..w + inputs].iter_mut().zip(x) {
                            *g += d * xi;
                        }
                        if need_input_grad {
                            for (dxi, wi) in dx.iter_mut().zip(&self.params[w..w + inputs]) {
                                *dxi += d * wi;
                            }
                        }
                    }
                    dx
                }
                Op::MaxPool { input, .. } => {
                    let argmax = pools.next().expect("pool trace");
                    let mut dx = vec![0.0; input.len()];
                    for (&src, &d) in argmax.iter().zip(&delta) {
                        dx[src] += d;
                    }
                    dx
                }
                Op::Conv { input, output, kernel, weights, biases } => {
                    for (d, a) in delta.iter_mut().zip(y) {
                        *d *= 1.0 - a * a;
                    }
                    conv_backward(
                        &self.params,
                        grad,
                        x,
                        &delta,
                        input,
                        output,
                        kernel,
                        weights,
                        biases,
                        need_input_grad,
                    )
                }
            };
        }
        loss
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn plan(arch: &Architecture) -> Result<(Vec<Op>, usize)> {
    let mut ops = Vec::new();
    let mut offset = 0;
    let mut shape = Shape {
        channels: arch.channels,
        height: arch.height,
        width: arch.width,
    };
    let mut flat: Option<usize> = None;
    let dense = |ops: &mut Vec<Op>, offset: &mut usize, inputs: usize, outputs: usize, activate: bool| {
        ops.push(Op::Dense {
            inputs,
            outputs,
            weights: *offset,
            biases: *offset + inputs * outputs,
            activate,
        });
        *offset += inputs * outputs + outputs;
    };
    for layer in &arch.hidden {
        match *layer {
            Layer::Conv { .. } | Layer::MaxPool { .. } if flat.is_some() => {
                return Err(GolError::config(format!(
                    "layer {layer} cannot follow a fully-connected layer"
                )));
            }
            Layer::Conv { filters, kernel } => {
                if kernel == 0 || filters == 0 || kernel > shape.height || kernel > shape.width {
                    return Err(GolError::config(format!(
                        "{layer} does not fit a {}x{} input",
                        shape.width, shape.height
                    )));
                }
                let output = Shape {
                    channels: filters,
                    height: shape.height - kernel + 1,
                    width: shape.width - kernel + 1,
                };
                let weights = offset;
                let biases = offset + filters * shape.channels * kernel * kernel;
                ops.push(Op::Conv {
                    input: shape,
                    output,
                    kernel,
                    weights,
                    biases,
                });
                offset = biases + filters;
                shape = output;
            }
            Layer::MaxPool { size, .. } => {
                if size == 0 || size > shape.height || size > shape.width {
                    return Err(GolError::config(format!(
                        "{layer} does not fit a {}x{} input",
                        shape.width, shape.height
                    )));
                }
                let output = Shape {
                    channels: shape.channels,
                    height: shape.height / size,
                    width: shape.width / size,
                };
                ops.push(Op::MaxPool {
                    input: shape,
                    output,
                    size,
                });
                shape = output;
            }
            Layer::Dense { units } => {
                if units == 0 {
                    return Err(GolError::config("fully-connected layer with 0 units"));
                }
                let inputs = flat.unwrap_or(shape.len());
                dense(&mut ops, &mut offset, inputs, units, true);
                flat = Some(units);
            }
        }
    }
    if arch.classes < 2 {
        return Err(GolError::config("a classifier needs at least 2 classes"));
    }
    let inputs = flat.unwrap_or(shape.len());
    dense(&mut ops, &mut offset, inputs, arch.classes, false);
    Ok((ops, offset))
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    params: &[f64],
    x: &[f64],
    y: &mut [f64],
    input: Shape,
    output: Shape,
    k: usize,
    weights: usize,
    biases: usize,
) {
    let (ih, iw) = (input.height, input.width);
    let (oh, ow) = (output.height, output.width);
    for f in 0..output.channels {
        let out = &mut y[f * oh * ow..(f + 1) * oh * ow];
        out.fill(params[biases + f]);
        for c in 0..input.channels {
            let plane = &x[c * ih * iw..(c + 1) * ih * iw];
            for ky in 0..k {
                for kx in 0..k {
                    let w = params[weights + ((f * input.channels + c) * k + ky) * k + kx];
                    for oy in 0..oh {
                        let src = &plane[(oy + ky) * iw + kx..(oy + ky) * iw + kx + ow];
                        let dst = &mut out[oy * ow..(oy + 1) * ow];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
        for v in out.iter_mut() {
            *v = v.tanh();
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    params: &[f64],
    grad: &mut [f64],
    x: &[f64],
    dz: &[f64],
    input: Shape,
    output: Shape,
    k: usize,
    weights: usize,
    biases: usize,
    need_input_grad: bool,
) -> Vec<f64> {
    let (ih, iw) = (input.height, input.width);
    let (oh, ow) = (output.height, output.width);
    let mut dx = vec![0.0; if need_input_grad { input.len() } else { 0 }];
    for f in 0..output.channels {
        let d = &dz[f * oh * ow..(f + 1) * oh * ow];
        grad[biases + f] += d.iter().sum::<f64>();
        for c in 0..input.channels {
            let plane = &x[c * ih * iw..(c + 1) * ih * iw];
            for ky in 0..k {
                for kx in 0..k {
                    let wi = weights + ((f * input.channels + c) * k + ky) * k + kx;
                    let mut acc = 0.0;
                    for oy in 0..oh {
                        let src = &plane[(oy + ky) * iw + kx..(oy + ky) * iw + kx + ow];
                        acc += dot(&d[oy * ow..(oy + 1) * ow], src);
                    }
                    grad[wi] += acc;
                    if need_input_grad {
                        let w = params[wi];
                        let dplane = &mut dx[c * ih * iw..(c + 1) * ih * iw];
                        for oy in 0..oh {
                            let dst = &mut dplane[(oy + ky) * iw + kx..(oy + ky) * iw + kx + ow];
                            for (t, s) in dst.iter_mut().zip(&d[oy * ow..(oy + 1) * ow]) {
                                *t += w * s;
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

fn pool_forward(x: &[f64], y: &mut [f64], argmax: &mut [usize], input: Shape, output: Shape, size: usize) {
    for c in 0..output.channels {
        for oy in 0..output.height {
            for ox in 0..output.width {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for dy in 0..size {
                    for dx in 0..size {
                        let idx = (c * input.height + oy * size + dy) * input.width + ox * size + dx;
                        // first maximum wins on ties
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = (c * output.height + oy) * output.width + ox;
                y[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
}
