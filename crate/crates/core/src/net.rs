//! Declarative network description, parameter accounting and the
//! layer-by-layer (batch) inference path.
//!
//! The batch path materializes every intermediate tensor. It is the
//! reference implementation the streaming engine is checked against, and
//! its peak two-buffer footprint is what the streaming engine improves on.

use crate::error::{Error, Result};
use crate::tensor::{avg_pool, conv2d_same, relu, sigmoid, ConvKernel, Tensor3};
use crate::weights::WeightStore;

/// Layer role within a sequential network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    /// Identity at inference; kept for structural fidelity.
    Dropout,
    /// Mean over the full frequency axis. The `kf` field records the
    /// canonical window width.
    AvgPoolF,
    /// Mean over the full time axis. The `kt` field records the canonical
    /// window width.
    AvgPoolT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

/// One row of the network table.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub kt: usize,
    pub kf: usize,
    pub stride_t: usize,
    pub stride_f: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn conv(
        name: &str,
        kt: usize,
        kf: usize,
        stride: usize,
        c_in: usize,
        c_out: usize,
        activation: Activation,
    ) -> Self {
        Self {
            name: name.to_string(),
            kind: LayerKind::Conv,
            kt,
            kf,
            stride_t: stride,
            stride_f: stride,
            c_in,
            c_out,
            activation,
        }
    }

    fn passthrough(name: &str, kind: LayerKind, kt: usize, kf: usize, c: usize) -> Self {
        Self {
            name: name.to_string(),
            kind,
            kt,
            kf,
            stride_t: 1,
            stride_f: 1,
            c_in: c,
            c_out: c,
            activation: Activation::None,
        }
    }

    /// Weights plus biases; zero for non-convolutional layers.
    pub fn parameter_count(&self) -> usize {
        match self.kind {
            LayerKind::Conv => self.kt * self.kf * self.c_in * self.c_out + self.c_out,
            _ => 0,
        }
    }
}

/// (time, frequency, channel) extents.
pub type Shape = (usize, usize, usize);

/// Ordered sequential network plus its nominal input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub input_t: usize,
    pub input_f: usize,
    pub input_c: usize,
}

/// The canonical seismic classifier: eight convolutions, three dropout
/// rows, frequency and time average pooling, logistic output. 38,403
/// parameters on a 24x64x1 input.
pub fn canonical_network() -> NetworkSpec {
    use Activation::{Relu, Sigmoid};
    let layers = vec![
        LayerSpec::conv("C0", 3, 3, 1, 1, 32, Relu),
        LayerSpec::conv("C1", 3, 3, 2, 32, 32, Relu),
        LayerSpec::passthrough("D0", LayerKind::Dropout, 0, 0, 32),
        LayerSpec::conv("C2", 3, 3, 1, 32, 32, Relu),
        LayerSpec::conv("C3", 3, 3, 2, 32, 32, Relu),
        LayerSpec::passthrough("D1", LayerKind::Dropout, 0, 0, 32),
        LayerSpec::conv("C4", 3, 3, 1, 32, 32, Relu),
        LayerSpec::conv("C5", 1, 1, 1, 32, 32, Relu),
        LayerSpec::passthrough("D2", LayerKind::Dropout, 0, 0, 32),
        LayerSpec::conv("C6", 1, 1, 1, 32, 1, Relu),
        LayerSpec::passthrough("Af", LayerKind::AvgPoolF, 1, 16, 1),
        LayerSpec::passthrough("At", LayerKind::AvgPoolT, 6, 1, 1),
        LayerSpec::conv("C7", 1, 1, 1, 1, 1, Sigmoid),
    ];
    NetworkSpec {
        layers,
        input_t: 24,
        input_f: 64,
        input_c: 1,
    }
}

impl NetworkSpec {
    /// Sequential network made only of convolution layers, for ad-hoc
    /// stacks without a pooling head.
    pub fn conv_stack(
        layers: Vec<LayerSpec>,
        input_t: usize,
        input_f: usize,
        input_c: usize,
    ) -> Self {
        Self {
            layers,
            input_t,
            input_f,
            input_c,
        }
    }

    /// Total parameter count over all layers.
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameter_count()).sum()
    }

    /// Convolution layers in execution order.
    pub fn conv_layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers.iter().filter(|l| l.kind == LayerKind::Conv)
    }

    /// Per-layer (input, output) shapes for the given input length,
    /// checking that consecutive layers chain.
    pub fn shape_chain(&self, input_t: usize) -> Result<Vec<(Shape, Shape)>> {
        let mut shape = (input_t, self.input_f, self.input_c);
        let mut chain = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (t, f, c) = shape;
            let out = match layer.kind {
                LayerKind::Conv => {
                    if c != layer.c_in {
                        return Err(Error::Dimension(format!(
                            "layer {} expects {} input channels, got {}",
                            layer.name, layer.c_in, c
                        )));
                    }
                    (
                        t.div_ceil(layer.stride_t),
                        f.div_ceil(layer.stride_f),
                        layer.c_out,
                    )
                }
                LayerKind::Dropout => (t, f, c),
                LayerKind::AvgPoolF => (t, 1, c),
                LayerKind::AvgPoolT => (1, f, c),
            };
            chain.push((shape, out));
            shape = out;
        }
        Ok(chain)
    }

    /// Validates the chain at the nominal input length.
    pub fn validate(&self) -> Result<()> {
        self.shape_chain(self.input_t).map(|_| ())
    }
}

/// Materialized convolution weights in layer order.
#[derive(Debug, Clone)]
pub struct DecodedWeights {
    pub kernels: Vec<ConvKernel>,
}

impl DecodedWeights {
    pub fn from_store(net: &NetworkSpec, store: &WeightStore) -> Result<Self> {
        let conv_count = net.conv_layers().count();
        if store.layers.len() != conv_count {
            return Err(Error::Weight(format!(
                "store has {} conv layers, network has {}",
                store.layers.len(),
                conv_count
            )));
        }
        let mut kernels = Vec::with_capacity(conv_count);
        for (spec, layer) in net.conv_layers().zip(&store.layers) {
            let (weights, bias) = layer.decode();
            let kernel = ConvKernel::new(spec.kt, spec.kf, spec.c_in, spec.c_out, weights, bias)
                .map_err(|e| Error::Weight(format!("layer {}: {}", spec.name, e)))?;
            kernels.push(kernel);
        }
        Ok(Self { kernels })
    }
}

/// Runs the convolution layers only (dropout skipped, pooling head
/// excluded), returning the tensor entering the first pooling layer, or
/// the final tensor when the network has no pooling head.
pub fn forward_conv_stack(
    net: &NetworkSpec,
    weights: &DecodedWeights,
    input: &Tensor3,
) -> Result<Tensor3> {
    let mut x = input.clone();
    let mut kernel_idx = 0;
    for layer in &net.layers {
        match layer.kind {
            LayerKind::Conv => {
                let kernel = &weights.kernels[kernel_idx];
                kernel_idx += 1;
                x = conv2d_same(&x, kernel, layer.stride_t, layer.stride_f)?;
                x = apply_activation(&x, layer.activation);
            }
            LayerKind::Dropout => {}
            LayerKind::AvgPoolF | LayerKind::AvgPoolT => break,
        }
    }
    Ok(x)
}

fn apply_activation(x: &Tensor3, activation: Activation) -> Tensor3 {
    match activation {
        Activation::None => x.clone(),
        Activation::Relu => relu(x),
        Activation::Sigmoid => {
            let mut out = x.clone();
            for v in out.data_mut() {
                *v = sigmoid(*v);
            }
            out
        }
    }
}

fn check_input_shape(net: &NetworkSpec, input: &Tensor3) -> Result<()> {
    let (t, f, c) = input.shape();
    if f != net.input_f || c != net.input_c {
        return Err(Error::Dimension(format!(
            "input shape {}x{}x{} does not match network input {}x{}x{}",
            t, f, c, net.input_t, net.input_f, net.input_c
        )));
    }
    let stride_product: usize = net.conv_layers_before_pool_stride_product();
    if t < net.input_t || !t.is_multiple_of(stride_product) {
        return Err(Error::Dimension(format!(
            "input length {} must be at least {} and a multiple of {}",
            t, net.input_t, stride_product
        )));
    }
    Ok(())
}

impl NetworkSpec {
    /// Product of the temporal strides of the convolution layers that run
    /// before the first pooling layer.
    pub fn conv_layers_before_pool_stride_product(&self) -> usize {
        let mut product = 1;
        for layer in &self.layers {
            match layer.kind {
                LayerKind::Conv => product *= layer.stride_t,
                LayerKind::Dropout => {}
                _ => break,
            }
        }
        product
    }
}

/// Full batch inference: convolution stack, frequency average, time
/// average over the whole remaining extent, then the logistic output
/// layer. Inputs longer than the nominal window widen the time average.
pub fn infer_batch(net: &NetworkSpec, store: &WeightStore, input: &Tensor3) -> Result<f32> {
    check_input_shape(net, input)?;
    let weights = DecodedWeights::from_store(net, store)?;
    let mut x = forward_conv_stack(net, &weights, input)?;

    let mut kernel_idx = net
        .layers
        .iter()
        .take_while(|l| !matches!(l.kind, LayerKind::AvgPoolF | LayerKind::AvgPoolT))
        .filter(|l| l.kind == LayerKind::Conv)
        .count();
    let mut saw_head = false;
    for layer in net
        .layers
        .iter()
        .skip_while(|l| !matches!(l.kind, LayerKind::AvgPoolF | LayerKind::AvgPoolT))
    {
        match layer.kind {
            LayerKind::AvgPoolF => {
                saw_head = true;
                x = avg_pool(&x, 1, x.f_len())?;
            }
            LayerKind::AvgPoolT => {
                saw_head = true;
                x = avg_pool(&x, x.t_len(), 1)?;
            }
            LayerKind::Conv => {
                let kernel = &weights.kernels[kernel_idx];
                kernel_idx += 1;
                x = conv2d_same(&x, kernel, layer.stride_t, layer.stride_f)?;
                x = apply_activation(&x, layer.activation);
            }
            LayerKind::Dropout => {}
        }
    }
    if !saw_head {
        return Err(Error::UnsupportedArchitecture(
            "network has no pooling head; use forward_conv_stack".into(),
        ));
    }
    if x.shape() != (1, 1, 1) {
        return Err(Error::Dimension(format!(
            "head reduced to {:?}, expected a single value",
            x.shape()
        )));
    }
    Ok(x.get(0, 0, 0))
}

/// Batch counterpart of the streaming classifier: one probability per
/// sliding time-average window. The convolution stack runs once over the
/// whole input; the head then slides over its output one entry at a time.
/// On an input of the nominal length this emits exactly one value, equal
/// to [`infer_batch`].
pub fn infer_batch_sliding(
    net: &NetworkSpec,
    store: &WeightStore,
    input: &Tensor3,
) -> Result<Vec<f32>> {
    check_input_shape(net, input)?;
    let weights = DecodedWeights::from_store(net, store)?;
    let stack = forward_conv_stack(net, &weights, input)?;
    let pooled = avg_pool(&stack, 1, stack.f_len())?;
    if pooled.c_len() != 1 {
        return Err(Error::UnsupportedArchitecture(
            "sliding head expects a single channel after frequency pooling".into(),
        ));
    }
    let window = net
        .layers
        .iter()
        .find(|l| l.kind == LayerKind::AvgPoolT)
        .map(|l| l.kt)
        .ok_or_else(|| {
            Error::UnsupportedArchitecture("network has no time-average layer".into())
        })?;
    let output_kernel = weights.kernels.last().ok_or_else(|| {
        Error::Weight("network has no output layer weights".into())
    })?;

    let entries: Vec<f32> = (0..pooled.t_len()).map(|t| pooled.get(t, 0, 0)).collect();
    let mut probs = Vec::new();
    if entries.len() < window {
        return Ok(probs);
    }
    for e in 0..=(entries.len() - window) {
        let mut acc = 0.0f32;
        for v in &entries[e..e + window] {
            acc += v;
        }
        let mean = acc / window as f32;
        let mut out = output_kernel.bias(0);
        out += mean * output_kernel.weight(0, 0, 0, 0);
        probs.push(sigmoid(out));
    }
    Ok(probs)
}

/// Peak intermediate memory of layer-by-layer execution with 4-byte
/// values: the producing and consuming buffers of some adjacent pair of
/// layers must coexist, and the input buffer counts as the first producer.
/// Dropout layers run in place and are skipped.
pub fn peak_intermediate_bytes(net: &NetworkSpec, input_t: usize) -> u64 {
    let mut sizes: Vec<u64> = vec![(input_t * net.input_f * net.input_c) as u64 * 4];
    let mut shape = (input_t, net.input_f, net.input_c);
    for layer in &net.layers {
        let (t, f, c) = shape;
        let out = match layer.kind {
            LayerKind::Conv => (
                t.div_ceil(layer.stride_t),
                f.div_ceil(layer.stride_f),
                layer.c_out,
            ),
            LayerKind::Dropout => continue,
            LayerKind::AvgPoolF => (t, 1, c),
            LayerKind::AvgPoolT => (1, f, c),
        };
        sizes.push((out.0 * out.1 * out.2) as u64 * 4);
        shape = out;
    }
    sizes
        .windows(2)
        .map(|pair| pair[0] + pair[1])
        .max()
        .unwrap_or(0)
}
