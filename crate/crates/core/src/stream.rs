//! Pipelined inference over temporal data. Each convolution layer keeps a
//! small ring of recent input columns (a carry buffer plus a processing
//! window) and consumes a fixed number of new columns per step, so buffer
//! memory and per-step cost do not depend on the total input length.
//!
//! Outputs are numerically identical to running the batch path over the
//! whole sequence: rings are primed with zeros to reproduce the leading
//! zero padding, and [`StreamEngine::finish`] drains the pipeline with
//! zero columns standing in for the trailing padding.

use crate::error::{Error, Result};
use crate::net::{Activation, DecodedWeights, LayerKind, NetworkSpec};
use crate::tensor::{relu_scalar, same_pad_left, sigmoid, ConvKernel};
use crate::weights::WeightStore;

/// Streaming parameters of one convolution layer.
#[derive(Debug, Clone)]
pub struct PlanLayer {
    pub name: String,
    pub kernel_t: usize,
    pub kernel_f: usize,
    pub stride_t: usize,
    pub stride_f: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub activation: Activation,
    pub f_in: usize,
    pub f_out: usize,
    /// New input columns consumed per step.
    pub p_in: usize,
    /// Output columns produced per step.
    pub p_out: usize,
    /// Columns carried between steps; the ring holds `carry + p_in`.
    pub carry: usize,
    pub ring_cols: usize,
    pad_left_t: usize,
    pad_left_f: usize,
    /// Position of the newest input column after step 0.
    in_newest_offset: i64,
    /// Position of the newest output column after step 0.
    newest_offset: i64,
}

/// Classifier head appended after the streaming layers: a frequency mean,
/// a sliding time mean and a 1x1 output convolution.
#[derive(Debug, Clone)]
pub struct HeadPlan {
    /// Width of the column entering the frequency mean.
    pub f_len: usize,
    /// Entries in the sliding time mean.
    pub time_window: usize,
    pub activation: Activation,
}

/// Derived execution plan for a sequential network.
#[derive(Debug, Clone)]
pub struct StreamPlan {
    pub layers: Vec<PlanLayer>,
    pub head: Option<HeadPlan>,
    /// Input columns consumed per step.
    pub p0: usize,
    /// Zero-fed steps needed to drain the pipeline after the last push.
    pub flush_steps: usize,
    input_f: usize,
    input_c: usize,
}

impl StreamPlan {
    /// Total buffer bytes: every layer ring plus the head staging column
    /// and time-mean accumulator. Independent of the input length.
    pub fn memory_bytes(&self) -> u64 {
        let rings: u64 = self
            .layers
            .iter()
            .map(|l| (l.ring_cols * l.f_in * l.c_in) as u64 * 4)
            .sum();
        let head = self
            .head
            .as_ref()
            .map(|h| (h.f_len + h.time_window) as u64 * 4)
            .unwrap_or(0);
        rings + head
    }

    /// Multiply-accumulates per step; identical for every step, warm-up
    /// and flush included. Pooling accumulations and the 1x1 output
    /// convolution count as one MAC per tap.
    pub fn step_cost_macs(&self) -> u64 {
        let convs: u64 = self
            .layers
            .iter()
            .map(|l| {
                (l.p_out * l.f_out * l.c_out) as u64
                    * (l.kernel_t * l.kernel_f * l.c_in) as u64
            })
            .sum();
        let head = self
            .head
            .as_ref()
            .map(|h| (h.f_len + h.time_window + 1) as u64)
            .unwrap_or(0);
        convs + head
    }
}

/// Derives processing-window sizes, carry buffers and production offsets
/// for every convolution layer up to the pooling head.
///
/// The processing window of layer i is the product of the temporal
/// strides of layers i..L. The carry is the smallest number of retained
/// columns such that each step's outputs only read columns still held in
/// the ring, given when upstream columns are produced.
pub fn derive_plan(net: &NetworkSpec) -> Result<StreamPlan> {
    net.validate()?;

    let mut stream_specs = Vec::new();
    let mut rest = Vec::new();
    let mut in_head = false;
    for layer in &net.layers {
        match layer.kind {
            LayerKind::Dropout => {}
            LayerKind::Conv if !in_head => stream_specs.push(layer.clone()),
            _ => {
                in_head = true;
                rest.push(layer.clone());
            }
        }
    }
    if stream_specs.is_empty() {
        return Err(Error::UnsupportedArchitecture(
            "no convolution layers to stream".into(),
        ));
    }
    for spec in &stream_specs {
        if spec.stride_t > spec.kt {
            return Err(Error::UnsupportedArchitecture(format!(
                "layer {}: temporal stride {} exceeds kernel {}",
                spec.name, spec.stride_t, spec.kt
            )));
        }
        if !(1..=2).contains(&spec.stride_t) {
            return Err(Error::UnsupportedArchitecture(format!(
                "layer {}: temporal stride {} not in {{1, 2}}",
                spec.name, spec.stride_t
            )));
        }
    }

    // Head must be: frequency mean, time mean, one 1x1 output convolution.
    let head = if rest.is_empty() {
        None
    } else {
        let kinds: Vec<LayerKind> = rest.iter().map(|l| l.kind).collect();
        if kinds != [LayerKind::AvgPoolF, LayerKind::AvgPoolT, LayerKind::Conv] {
            return Err(Error::UnsupportedArchitecture(
                "head must be frequency mean, time mean, then a 1x1 convolution".into(),
            ));
        }
        let out = &rest[2];
        if out.kt != 1 || out.kf != 1 || out.c_in != 1 || out.c_out != 1 {
            return Err(Error::UnsupportedArchitecture(
                "output convolution must be 1x1 on a single channel".into(),
            ));
        }
        let last = stream_specs.last().unwrap();
        if last.c_out != 1 {
            return Err(Error::UnsupportedArchitecture(
                "layer before the frequency mean must have one output channel".into(),
            ));
        }
        Some((rest[0].kf, rest[1].kt, out.activation))
    };

    let count = stream_specs.len();
    let mut p = vec![1usize; count + 1];
    for i in (0..count).rev() {
        p[i] = p[i + 1] * stream_specs[i].stride_t;
    }

    let mut layers = Vec::with_capacity(count);
    let mut f_in = net.input_f;
    let mut d_prev: i64 = p[0] as i64 - 1;
    for (i, spec) in stream_specs.iter().enumerate() {
        // Inputs to a stride-2 layer always have even length because the
        // stream advances in multiples of the downstream stride product,
        // so the left padding is fixed.
        let pad_left_t = spec.kt.saturating_sub(spec.stride_t) / 2;
        let pad_left_f = same_pad_left(f_in, spec.kf, spec.stride_f);
        let f_out = f_in.div_ceil(spec.stride_f);
        let p_in = p[i];
        let p_out = p[i + 1];

        let d = (d_prev - spec.kt as i64 + 1 + pad_left_t as i64).div_euclid(spec.stride_t as i64);
        let ring_cols =
            (d_prev - (d - p_out as i64 + 1) * spec.stride_t as i64 + pad_left_t as i64 + 1) as usize;
        debug_assert!(ring_cols >= p_in && ring_cols >= spec.kt);

        layers.push(PlanLayer {
            name: spec.name.clone(),
            kernel_t: spec.kt,
            kernel_f: spec.kf,
            stride_t: spec.stride_t,
            stride_f: spec.stride_f,
            c_in: spec.c_in,
            c_out: spec.c_out,
            activation: spec.activation,
            f_in,
            f_out,
            p_in,
            p_out,
            carry: ring_cols - p_in,
            ring_cols,
            pad_left_t,
            pad_left_f,
            in_newest_offset: d_prev,
            newest_offset: d,
        });
        f_in = f_out;
        d_prev = d;
    }

    let flush_steps = (-d_prev).max(0) as usize;
    let head = match head {
        None => None,
        Some((kf, kt, activation)) => {
            let f_len = layers.last().unwrap().f_out;
            if kf != f_len {
                return Err(Error::UnsupportedArchitecture(format!(
                    "frequency mean window {kf} does not match column width {f_len}"
                )));
            }
            Some(HeadPlan {
                f_len,
                time_window: kt.max(1),
                activation,
            })
        }
    };

    Ok(StreamPlan {
        layers,
        head,
        p0: p[0],
        flush_steps,
        input_f: net.input_f,
        input_c: net.input_c,
    })
}

/// One emitted classification: the index of the first time-mean entry of
/// its window. Multiply by the plan's `p0` for the spectrogram column
/// where the window starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub window_index: u64,
    pub probability: f32,
}

/// Everything produced by one step (or by the final flush).
#[derive(Debug, Clone, Default)]
pub struct StepEmit {
    /// Valid output columns of the last streamed layer, with positions.
    pub columns: Vec<(u64, Vec<f32>)>,
    /// Head outputs, present only for networks with a classifier head.
    pub classifications: Vec<Classification>,
}

/// Ring of the most recent input columns of one layer. A step shifts the
/// window left by `p_in` columns and writes the new columns at the tail.
#[derive(Debug)]
struct LayerRing {
    cols: usize,
    col_len: usize,
    data: Vec<f32>,
    newest_pos: i64,
}

impl LayerRing {
    fn new(cols: usize, col_len: usize, newest_pos: i64) -> Self {
        Self {
            cols,
            col_len,
            data: vec![0.0; cols * col_len],
            newest_pos,
        }
    }

    fn shift(&mut self, n_new: usize) {
        debug_assert!(n_new <= self.cols);
        self.data.copy_within(n_new * self.col_len.., 0);
        self.newest_pos += n_new as i64;
    }

    /// Tail slot `slot` of the `n_new` columns written this step.
    fn tail_slot_mut(&mut self, slot: usize, n_new: usize) -> &mut [f32] {
        let base = (self.cols - n_new + slot) * self.col_len;
        &mut self.data[base..base + self.col_len]
    }

    fn column(&self, pos: i64) -> &[f32] {
        let oldest = self.newest_pos - self.cols as i64 + 1;
        debug_assert!(
            pos >= oldest && pos <= self.newest_pos,
            "position {pos} outside ring [{oldest}, {}]",
            self.newest_pos
        );
        let idx = (pos - oldest) as usize;
        &self.data[idx * self.col_len..(idx + 1) * self.col_len]
    }

    fn bytes(&self) -> u64 {
        (self.data.len() * 4) as u64
    }
}

/// Incremental executor for one input stream. Allocates every buffer up
/// front; pushing never allocates into the rings.
pub struct StreamEngine {
    plan: StreamPlan,
    kernels: Vec<ConvKernel>,
    head_kernel: Option<ConvKernel>,
    rings: Vec<LayerRing>,
    last_column: Vec<f32>,
    at_buffer: Vec<f32>,
    step: u64,
    true_output_lens: Option<Vec<u64>>,
    finished: bool,
}

impl StreamEngine {
    pub fn new(net: &NetworkSpec, store: &WeightStore) -> Result<Self> {
        let plan = derive_plan(net)?;
        let decoded = DecodedWeights::from_store(net, store)?;
        let mut kernels = decoded.kernels;
        let head_kernel = if plan.head.is_some() {
            Some(kernels.pop().expect("head conv kernel present"))
        } else {
            None
        };
        if kernels.len() != plan.layers.len() {
            return Err(Error::Weight(format!(
                "{} kernels for {} streamed layers",
                kernels.len(),
                plan.layers.len()
            )));
        }

        let rings = plan
            .layers
            .iter()
            .map(|l| {
                LayerRing::new(
                    l.ring_cols,
                    l.f_in * l.c_in,
                    l.in_newest_offset - l.p_in as i64,
                )
            })
            .collect();
        let last = plan.layers.last().unwrap();
        let last_column = vec![0.0; last.f_out * last.c_out];
        let at_buffer = plan
            .head
            .as_ref()
            .map(|h| vec![0.0; h.time_window])
            .unwrap_or_default();

        Ok(Self {
            plan,
            kernels,
            head_kernel,
            rings,
            last_column,
            at_buffer,
            step: 0,
            true_output_lens: None,
            finished: false,
        })
    }

    pub fn plan(&self) -> &StreamPlan {
        &self.plan
    }

    /// Bytes held in rings and head staging; constant for the lifetime of
    /// the engine and equal to the plan's accounting.
    pub fn buffer_bytes(&self) -> u64 {
        let rings: u64 = self.rings.iter().map(|r| r.bytes()).sum();
        rings + (self.last_column.len() * 4) as u64 + (self.at_buffer.len() * 4) as u64
    }

    /// Columns expected per push: `p0 * input_f * input_c` values.
    pub fn push_len(&self) -> usize {
        self.plan.p0 * self.plan.input_f * self.plan.input_c
    }

    /// Feeds exactly `p0` new input columns (time-major, each column
    /// `input_f * input_c` values) and advances every layer one step.
    pub fn push_columns(&mut self, cols: &[f32]) -> Result<StepEmit> {
        if self.finished {
            return Err(Error::State("engine already finished".into()));
        }
        if cols.len() != self.push_len() {
            return Err(Error::Dimension(format!(
                "push of {} values, expected {} ({} columns of {})",
                cols.len(),
                self.push_len(),
                self.plan.p0,
                self.plan.input_f * self.plan.input_c
            )));
        }
        Ok(self.run_step(Some(cols)))
    }

    /// Marks the end of the input and drains the pipeline with zero
    /// columns standing in for the trailing padding. Outputs whose
    /// position lies past the true sequence end are suppressed.
    pub fn finish(&mut self) -> Result<StepEmit> {
        if self.finished {
            return Err(Error::State("engine already finished".into()));
        }
        let true_in = self.step * self.plan.p0 as u64;
        let mut lens = Vec::with_capacity(self.plan.layers.len() + 1);
        lens.push(true_in);
        let mut len = true_in;
        for layer in &self.plan.layers {
            len = len.div_ceil(layer.stride_t as u64);
            lens.push(len);
        }
        self.true_output_lens = Some(lens);

        let mut emit = StepEmit::default();
        for _ in 0..self.plan.flush_steps {
            let step_emit = self.run_step(None);
            emit.columns.extend(step_emit.columns);
            emit.classifications.extend(step_emit.classifications);
        }
        self.finished = true;
        Ok(emit)
    }

    fn true_len(&self, layer_index: usize) -> Option<u64> {
        self.true_output_lens.as_ref().map(|l| l[layer_index + 1])
    }

    fn run_step(&mut self, input: Option<&[f32]>) -> StepEmit {
        let k = self.step as i64;
        self.step += 1;
        let mut emit = StepEmit::default();

        // Input ring: new columns are at non-negative positions by
        // construction; flush steps write zeros.
        let p0 = self.plan.p0;
        let col_len = self.plan.input_f * self.plan.input_c;
        self.rings[0].shift(p0);
        for slot in 0..p0 {
            let dst = self.rings[0].tail_slot_mut(slot, p0);
            match input {
                Some(cols) => dst.copy_from_slice(&cols[slot * col_len..(slot + 1) * col_len]),
                None => dst.fill(0.0),
            }
        }

        let mut final_pos: Option<u64> = None;
        for i in 0..self.plan.layers.len() {
            let layer = &self.plan.layers[i];
            let newest_out = layer.newest_offset + k * layer.p_out as i64;
            let true_out = self.true_len(i);
            let last_layer = i + 1 == self.plan.layers.len();

            let (before, after) = self.rings.split_at_mut(i + 1);
            let ring_in = &before[i];
            if !last_layer {
                after[0].shift(layer.p_out);
            }
            for slot in 0..layer.p_out {
                let out_pos = newest_out - layer.p_out as i64 + 1 + slot as i64;
                let dst: &mut [f32] = if last_layer {
                    // The last layer's downstream stride product is 1, so
                    // it stages exactly one column per step.
                    debug_assert_eq!(layer.p_out, 1);
                    &mut self.last_column
                } else {
                    after[0].tail_slot_mut(slot, layer.p_out)
                };
                conv_column(ring_in, layer, &self.kernels[i], out_pos, dst);
                // A column before the sequence start or past its end is
                // the batch zero padding of the next layer.
                let valid =
                    out_pos >= 0 && true_out.is_none_or(|t| (out_pos as u64) < t);
                if !valid {
                    dst.fill(0.0);
                }
                if last_layer && valid {
                    final_pos = Some(out_pos as u64);
                }
            }
        }
        if let Some(pos) = final_pos {
            self.emit_output(pos, &mut emit);
        }
        emit
    }

    fn emit_output(&mut self, pos: u64, emit: &mut StepEmit) {
        match (&self.plan.head, &self.head_kernel) {
            (Some(head), Some(kernel)) => {
                // Frequency mean over the staged column, one entry per step.
                let mut acc = 0.0f32;
                for &v in &self.last_column {
                    acc += v;
                }
                let entry = acc / head.f_len as f32;
                let window = head.time_window as u64;
                self.at_buffer[(pos % window) as usize] = entry;
                if pos + 1 >= window {
                    let start = pos + 1 - window;
                    let mut sum = 0.0f32;
                    for i in 0..window {
                        sum += self.at_buffer[((start + i) % window) as usize];
                    }
                    let mean = sum / head.time_window as f32;
                    let mut out = kernel.bias(0);
                    out += mean * kernel.weight(0, 0, 0, 0);
                    let probability = match head.activation {
                        Activation::Sigmoid => sigmoid(out),
                        Activation::Relu => relu_scalar(out),
                        Activation::None => out,
                    };
                    emit.classifications.push(Classification {
                        window_index: start,
                        probability,
                    });
                }
            }
            _ => emit.columns.push((pos, self.last_column.clone())),
        }
    }
}

/// Convolves one output column from the layer's ring; identical tap order
/// to the batch kernel, so results match bit for bit.
fn conv_column(ring: &LayerRing, layer: &PlanLayer, kernel: &ConvKernel, out_pos: i64, dst: &mut [f32]) {
    let c_in = layer.c_in;
    for of in 0..layer.f_out {
        for oc in 0..layer.c_out {
            let mut acc = kernel.bias(oc);
            for ikt in 0..layer.kernel_t {
                let t_pos = out_pos * layer.stride_t as i64 - layer.pad_left_t as i64 + ikt as i64;
                let col = ring.column(t_pos);
                for ikf in 0..layer.kernel_f {
                    let raw = of * layer.stride_f + ikf;
                    if raw < layer.pad_left_f {
                        continue;
                    }
                    let fi = raw - layer.pad_left_f;
                    if fi >= layer.f_in {
                        continue;
                    }
                    for ic in 0..c_in {
                        acc += col[fi * c_in + ic] * kernel.weight(ikt, ikf, ic, oc);
                    }
                }
            }
            dst[of * layer.c_out + oc] = match layer.activation {
                Activation::Relu => relu_scalar(acc),
                Activation::Sigmoid => sigmoid(acc),
                Activation::None => acc,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{canonical_network, Activation, LayerSpec, NetworkSpec};

    fn toy_network() -> NetworkSpec {
        NetworkSpec::conv_stack(
            vec![
                LayerSpec::conv("L0", 3, 1, 1, 1, 1, Activation::None),
                LayerSpec::conv("L1", 3, 1, 2, 1, 1, Activation::None),
            ],
            8,
            1,
            1,
        )
    }

    #[test]
    fn canonical_plan_values() {
        let plan = derive_plan(&canonical_network()).unwrap();
        assert_eq!(plan.p0, 4);
        let p: Vec<usize> = plan.layers.iter().map(|l| l.p_in).collect();
        assert_eq!(p, [4, 4, 2, 2, 1, 1, 1]);
        let carry: Vec<usize> = plan.layers.iter().map(|l| l.carry).collect();
        assert_eq!(carry, [2, 1, 2, 2, 2, 0, 0]);
        assert_eq!(plan.flush_steps, 3);
        assert_eq!(plan.head.as_ref().unwrap().time_window, 6);
    }

    #[test]
    fn toy_plan_matches_hand_derivation() {
        // Two temporal layers, kernel 3, strides 1 then 2.
        let plan = derive_plan(&toy_network()).unwrap();
        assert_eq!(plan.p0, 2);
        assert_eq!(plan.layers[0].p_in, 2);
        assert_eq!(plan.layers[1].p_in, 2);
        assert_eq!(plan.layers[1].p_out, 1);
        assert_eq!(plan.layers[0].carry, 2);
        assert_eq!(plan.layers[1].carry, 1);
    }

    #[test]
    fn all_stride_one_network_has_unit_windows() {
        let layers = (0..5)
            .map(|i| LayerSpec::conv(&format!("L{i}"), 3, 3, 1, 1, 1, Activation::Relu))
            .collect();
        let plan = derive_plan(&NetworkSpec::conv_stack(layers, 16, 8, 1)).unwrap();
        assert!(plan.layers.iter().all(|l| l.p_in == 1));
    }

    #[test]
    fn stride_above_kernel_is_rejected() {
        let net = NetworkSpec::conv_stack(
            vec![LayerSpec::conv("L0", 1, 1, 2, 1, 1, Activation::None)],
            8,
            4,
            1,
        );
        assert!(matches!(
            derive_plan(&net),
            Err(Error::UnsupportedArchitecture(_))
        ));
    }

    #[test]
    fn canonical_plan_memory() {
        let plan = derive_plan(&canonical_network()).unwrap();
        // Rings: 6*64*1 + 5*64*32 + 4*32*32 + 4*32*32 + 3*16*32 + 1*16*32
        // + 1*16*32 = 21376 values, plus 16 staged and 6 accumulated.
        assert_eq!(plan.memory_bytes(), 85_592);
    }

    #[test]
    fn single_unit_layer_memory_and_cost() {
        let f_len = 9;
        let net = NetworkSpec::conv_stack(
            vec![LayerSpec::conv("L0", 1, 1, 1, 1, 1, Activation::None)],
            4,
            f_len,
            1,
        );
        let plan = derive_plan(&net).unwrap();
        assert_eq!(plan.memory_bytes(), (f_len * 4) as u64);
        assert_eq!(plan.step_cost_macs(), f_len as u64);
    }

    #[test]
    fn toy_plan_is_smaller_than_batch_peak() {
        let net = toy_network();
        let plan = derive_plan(&net).unwrap();
        let batch = crate::net::peak_intermediate_bytes(&net, 8);
        assert!(plan.memory_bytes() < batch);
        assert_eq!(plan.memory_bytes(), 28);
        assert_eq!(batch, 64);
    }

    #[test]
    fn toy_stream_matches_direct_convolution() {
        use crate::weights::{LayerWeights, WeightStore};
        let net = toy_network();
        let store = WeightStore {
            layers: vec![
                LayerWeights::Float {
                    weights: vec![0.25, 0.5, 0.25],
                    bias: vec![0.1],
                },
                LayerWeights::Float {
                    weights: vec![1.0, -1.0, 2.0],
                    bias: vec![-0.05],
                },
            ],
        };
        let x: Vec<f32> = (1..=8).map(|v| v as f32).collect();

        // Direct evaluation of the two same-padded layers.
        let at = |v: &[f32], i: i64| -> f32 {
            if i < 0 || i >= v.len() as i64 {
                0.0
            } else {
                v[i as usize]
            }
        };
        let y: Vec<f32> = (0..8)
            .map(|t| 0.1 + 0.25 * at(&x, t - 1) + 0.5 * at(&x, t) + 0.25 * at(&x, t + 1))
            .collect();
        let z: Vec<f32> = (0..4)
            .map(|j| -0.05 + at(&y, 2 * j) - at(&y, 2 * j + 1) + 2.0 * at(&y, 2 * j + 2))
            .collect();

        let mut engine = StreamEngine::new(&net, &store).unwrap();
        let mut got = Vec::new();
        for chunk in x.chunks(2) {
            for (pos, col) in engine.push_columns(chunk).unwrap().columns {
                got.push((pos, col[0]));
            }
        }
        for (pos, col) in engine.finish().unwrap().columns {
            got.push((pos, col[0]));
        }
        assert_eq!(got.len(), 4);
        for (i, (pos, value)) in got.iter().enumerate() {
            assert_eq!(*pos, i as u64);
            assert!((value - z[i]).abs() <= 1e-6, "{} vs {}", value, z[i]);
        }
    }

    #[test]
    fn push_validates_length_and_state() {
        let net = canonical_network();
        let store = WeightStore::zeros(&net);
        let mut engine = StreamEngine::new(&net, &store).unwrap();
        assert!(matches!(
            engine.push_columns(&[0.0; 3]),
            Err(Error::Dimension(_))
        ));
        engine.finish().unwrap();
        assert!(matches!(
            engine.push_columns(&vec![0.0; 4 * 64]),
            Err(Error::State(_))
        ));
        assert!(matches!(engine.finish(), Err(Error::State(_))));
    }

    #[test]
    fn zero_stream_outputs_one_half() {
        let net = canonical_network();
        let store = WeightStore::zeros(&net);
        let mut engine = StreamEngine::new(&net, &store).unwrap();
        let mut classifications = Vec::new();
        for _ in 0..6 {
            classifications.extend(
                engine
                    .push_columns(&vec![0.0; engine.push_len()])
                    .unwrap()
                    .classifications,
            );
        }
        classifications.extend(engine.finish().unwrap().classifications);
        assert_eq!(classifications.len(), 1);
        assert_eq!(classifications[0].window_index, 0);
        assert_eq!(classifications[0].probability, 0.5);
    }

    #[test]
    fn buffer_bytes_stay_constant_and_match_plan() {
        use rand::SeedableRng;
        let net = canonical_network();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let store = WeightStore::random(&net, &mut rng);
        let mut engine = StreamEngine::new(&net, &store).unwrap();
        let expected = engine.plan().memory_bytes();
        assert_eq!(engine.buffer_bytes(), expected);
        use rand::Rng;
        for _ in 0..20 {
            let cols: Vec<f32> = (0..engine.push_len())
                .map(|_| rng.gen_range(-1.0f32..1.0))
                .collect();
            engine.push_columns(&cols).unwrap();
            assert_eq!(engine.buffer_bytes(), expected);
        }
        engine.finish().unwrap();
        assert_eq!(engine.buffer_bytes(), expected);
    }
}
