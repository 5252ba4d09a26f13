//! Dense rank-3 tensors and the numeric kernels shared by batch and
//! streaming inference: same-padded 2D convolution, ReLU, average pooling
//! and the logistic function.
//!
//! All kernels are pure functions on immutable inputs and may be called
//! from multiple threads; 32-bit floats throughout.

use crate::error::{Error, Result};

/// Dense (time x frequency x channel) tensor, row-major with the channel
/// axis innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    t_len: usize,
    f_len: usize,
    c_len: usize,
    data: Vec<f32>,
}

impl Tensor3 {
    /// All-zero tensor of the given shape.
    pub fn zeros(t_len: usize, f_len: usize, c_len: usize) -> Self {
        Self {
            t_len,
            f_len,
            c_len,
            data: vec![0.0; t_len * f_len * c_len],
        }
    }

    /// Wraps an existing buffer; `data.len()` must equal `t * f * c`.
    pub fn from_vec(t_len: usize, f_len: usize, c_len: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != t_len * f_len * c_len {
            return Err(Error::Dimension(format!(
                "tensor data length {} does not match {}x{}x{}",
                data.len(),
                t_len,
                f_len,
                c_len
            )));
        }
        Ok(Self {
            t_len,
            f_len,
            c_len,
            data,
        })
    }

    /// Constant-filled tensor.
    pub fn filled(t_len: usize, f_len: usize, c_len: usize, value: f32) -> Self {
        Self {
            t_len,
            f_len,
            c_len,
            data: vec![value; t_len * f_len * c_len],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.t_len, self.f_len, self.c_len)
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn f_len(&self) -> usize {
        self.f_len
    }

    pub fn c_len(&self) -> usize {
        self.c_len
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize, c: usize) -> f32 {
        debug_assert!(t < self.t_len && f < self.f_len && c < self.c_len);
        self.data[(t * self.f_len + f) * self.c_len + c]
    }

    #[inline]
    pub fn set(&mut self, t: usize, f: usize, c: usize, value: f32) {
        debug_assert!(t < self.t_len && f < self.f_len && c < self.c_len);
        self.data[(t * self.f_len + f) * self.c_len + c] = value;
    }

    /// One temporal column (`f_len * c_len` contiguous values).
    pub fn column(&self, t: usize) -> &[f32] {
        let w = self.f_len * self.c_len;
        &self.data[t * w..(t + 1) * w]
    }

    /// True when every element is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Convolution kernel with weights indexed (kt, kf, c_in, c_out), plus a
/// per-output-channel bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    pub kt: usize,
    pub kf: usize,
    pub c_in: usize,
    pub c_out: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvKernel {
    pub fn new(
        kt: usize,
        kf: usize,
        c_in: usize,
        c_out: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if weights.len() != kt * kf * c_in * c_out {
            return Err(Error::Dimension(format!(
                "kernel weight count {} does not match {}x{}x{}x{}",
                weights.len(),
                kt,
                kf,
                c_in,
                c_out
            )));
        }
        if bias.len() != c_out {
            return Err(Error::Dimension(format!(
                "bias length {} does not match c_out {}",
                bias.len(),
                c_out
            )));
        }
        Ok(Self {
            kt,
            kf,
            c_in,
            c_out,
            weights,
            bias,
        })
    }

    /// Weights plus biases.
    pub fn parameter_count(&self) -> usize {
        self.kt * self.kf * self.c_in * self.c_out + self.c_out
    }

    #[inline]
    pub fn weight(&self, ikt: usize, ikf: usize, ic: usize, oc: usize) -> f32 {
        self.weights[((ikt * self.kf + ikf) * self.c_in + ic) * self.c_out + oc]
    }

    #[inline]
    pub fn bias(&self, oc: usize) -> f32 {
        self.bias[oc]
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn biases(&self) -> &[f32] {
        &self.bias
    }
}

/// Left-edge zero padding that keeps `ceil(n/stride)` outputs aligned the
/// same way for every input length the layer can see. With an odd total
/// deficit the extra zero goes on the trailing edge.
#[inline]
pub(crate) fn same_pad_left(n: usize, kernel: usize, stride: usize) -> usize {
    let out = n.div_ceil(stride);
    let total = ((out - 1) * stride + kernel).saturating_sub(n);
    total / 2
}

/// Running sum inside the convolution inner loop. f32 is the default
/// everywhere; f64 exists as an opt-in wider accumulator.
pub(crate) trait ConvAccum: Copy {
    fn from_bias(bias: f32) -> Self;
    fn mac(self, x: f32, w: f32) -> Self;
    fn into_f32(self) -> f32;
}

impl ConvAccum for f32 {
    #[inline]
    fn from_bias(bias: f32) -> Self {
        bias
    }
    #[inline]
    fn mac(self, x: f32, w: f32) -> Self {
        self + x * w
    }
    #[inline]
    fn into_f32(self) -> f32 {
        self
    }
}

impl ConvAccum for f64 {
    #[inline]
    fn from_bias(bias: f32) -> Self {
        f64::from(bias)
    }
    #[inline]
    fn mac(self, x: f32, w: f32) -> Self {
        self + f64::from(x) * f64::from(w)
    }
    #[inline]
    fn into_f32(self) -> f32 {
        self as f32
    }
}

/// 2D convolution with "same" zero padding: stride-1 output extents equal
/// the input extents. Linear plus bias; activations are applied separately.
pub fn conv2d_same(
    input: &Tensor3,
    kernel: &ConvKernel,
    stride_t: usize,
    stride_f: usize,
) -> Result<Tensor3> {
    conv2d_same_impl::<f32>(input, kernel, stride_t, stride_f)
}

/// [`conv2d_same`] with 64-bit accumulation, rounding each output back to
/// f32. Not used by the inference paths, which accumulate in f32.
pub fn conv2d_same_f64acc(
    input: &Tensor3,
    kernel: &ConvKernel,
    stride_t: usize,
    stride_f: usize,
) -> Result<Tensor3> {
    conv2d_same_impl::<f64>(input, kernel, stride_t, stride_f)
}

fn conv2d_same_impl<A: ConvAccum>(
    input: &Tensor3,
    kernel: &ConvKernel,
    stride_t: usize,
    stride_f: usize,
) -> Result<Tensor3> {
    if input.is_empty() {
        return Err(Error::Dimension("convolution input is empty".into()));
    }
    if input.c_len != kernel.c_in {
        return Err(Error::Dimension(format!(
            "input has {} channels, kernel expects {}",
            input.c_len, kernel.c_in
        )));
    }
    if stride_t == 0 || stride_f == 0 {
        return Err(Error::Parameter("strides must be at least 1".into()));
    }

    let out_t = input.t_len.div_ceil(stride_t);
    let out_f = input.f_len.div_ceil(stride_f);
    let pad_t = same_pad_left(input.t_len, kernel.kt, stride_t);
    let pad_f = same_pad_left(input.f_len, kernel.kf, stride_f);

    let mut out = Tensor3::zeros(out_t, out_f, kernel.c_out);
    for ot in 0..out_t {
        for of in 0..out_f {
            for oc in 0..kernel.c_out {
                let mut acc = A::from_bias(kernel.bias(oc));
                for ikt in 0..kernel.kt {
                    let raw_t = ot * stride_t + ikt;
                    if raw_t < pad_t {
                        continue;
                    }
                    let it = raw_t - pad_t;
                    if it >= input.t_len {
                        continue;
                    }
                    for ikf in 0..kernel.kf {
                        let raw = of * stride_f + ikf;
                        if raw < pad_f {
                            continue;
                        }
                        let ifr = raw - pad_f;
                        if ifr >= input.f_len {
                            continue;
                        }
                        for ic in 0..kernel.c_in {
                            acc = acc.mac(input.get(it, ifr, ic), kernel.weight(ikt, ikf, ic, oc));
                        }
                    }
                }
                out.set(ot, of, oc, acc.into_f32());
            }
        }
    }
    Ok(out)
}

/// Elementwise max(0, x). Maps both signed zeros to +0.0 so downstream
/// comparisons stay deterministic.
pub fn relu(input: &Tensor3) -> Tensor3 {
    let mut out = input.clone();
    for v in out.data.iter_mut() {
        *v = relu_scalar(*v);
    }
    out
}

#[inline]
pub(crate) fn relu_scalar(x: f32) -> f32 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Non-overlapping mean pooling; each window extent must divide the
/// corresponding input extent exactly.
pub fn avg_pool(input: &Tensor3, window_t: usize, window_f: usize) -> Result<Tensor3> {
    if window_t == 0 || window_f == 0 {
        return Err(Error::Parameter("pooling window must be at least 1".into()));
    }
    if !input.t_len.is_multiple_of(window_t) || !input.f_len.is_multiple_of(window_f) {
        return Err(Error::Dimension(format!(
            "pool window {}x{} does not divide input {}x{}",
            window_t, window_f, input.t_len, input.f_len
        )));
    }
    let out_t = input.t_len / window_t;
    let out_f = input.f_len / window_f;
    let norm = (window_t * window_f) as f32;
    let mut out = Tensor3::zeros(out_t, out_f, input.c_len);
    for ot in 0..out_t {
        for of in 0..out_f {
            for c in 0..input.c_len {
                let mut acc = 0.0f32;
                for wt in 0..window_t {
                    for wf in 0..window_f {
                        acc += input.get(ot * window_t + wt, of * window_f + wf, c);
                    }
                }
                out.set(ot, of, c, acc / norm);
            }
        }
    }
    Ok(out)
}

/// Logistic function, 1 / (1 + e^-x).
#[inline]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ones_kernel(kt: usize, kf: usize, c_in: usize, c_out: usize) -> ConvKernel {
        ConvKernel::new(
            kt,
            kf,
            c_in,
            c_out,
            vec![1.0; kt * kf * c_in * c_out],
            vec![0.0; c_out],
        )
        .unwrap()
    }

    #[test]
    fn identity_kernel_preserves_input() {
        let kernel = ConvKernel::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let input = Tensor3::from_vec(2, 3, 1, (0..6).map(|v| v as f32).collect()).unwrap();
        let out = conv2d_same(&input, &kernel, 1, 1).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn zero_input_yields_bias() {
        let kernel = ConvKernel::new(3, 3, 1, 2, vec![0.5; 18], vec![1.25, -0.5]).unwrap();
        let input = Tensor3::zeros(4, 4, 1);
        let out = conv2d_same(&input, &kernel, 1, 1).unwrap();
        for t in 0..4 {
            for f in 0..4 {
                assert_eq!(out.get(t, f, 0), 1.25);
                assert_eq!(out.get(t, f, 1), -0.5);
            }
        }
    }

    #[test]
    fn same_padding_sums_on_ones() {
        // 3x3 all-ones kernel over a 3x3 field of ones: the output counts
        // how many in-bounds taps each position sees.
        let kernel = ones_kernel(3, 3, 1, 1);
        let input = Tensor3::filled(3, 3, 1, 1.0);
        let out = conv2d_same(&input, &kernel, 1, 1).unwrap();
        let expected = [[4.0, 6.0, 4.0], [6.0, 9.0, 6.0], [4.0, 6.0, 4.0]];
        for (t, row) in expected.iter().enumerate() {
            for (f, want) in row.iter().enumerate() {
                assert_eq!(out.get(t, f, 0), *want);
            }
        }
    }

    #[test]
    fn stride_one_preserves_extents() {
        let kernel = ones_kernel(3, 3, 1, 4);
        let input = Tensor3::filled(24, 64, 1, 0.5);
        let out = conv2d_same(&input, &kernel, 1, 1).unwrap();
        assert_eq!(out.shape(), (24, 64, 4));
    }

    #[test]
    fn stride_two_halves_even_extents() {
        let kernel = ones_kernel(3, 3, 2, 3);
        let input = Tensor3::filled(24, 64, 2, 1.0);
        let out = conv2d_same(&input, &kernel, 2, 2).unwrap();
        assert_eq!(out.shape(), (12, 32, 3));
    }

    #[test]
    fn odd_padding_goes_to_trailing_edge() {
        // Length 4, kernel 3, stride 2: one pad column, placed at the end.
        // Output 0 reads x[0..3] fully in-bounds, output 1 reads x[2], x[3], pad.
        let kernel = ones_kernel(3, 1, 1, 1);
        let input = Tensor3::from_vec(4, 1, 1, vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        let out = conv2d_same(&input, &kernel, 2, 1).unwrap();
        assert_eq!(out.get(0, 0, 0), 7.0);
        assert_eq!(out.get(1, 0, 0), 12.0);
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let kernel = ones_kernel(1, 1, 2, 1);
        let input = Tensor3::zeros(2, 2, 1);
        assert!(matches!(
            conv2d_same(&input, &kernel, 1, 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn empty_input_is_rejected() {
        let kernel = ones_kernel(1, 1, 1, 1);
        let input = Tensor3::zeros(0, 4, 1);
        assert!(matches!(
            conv2d_same(&input, &kernel, 1, 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn wide_accumulation_tracks_the_default_path() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let kernel = ConvKernel::new(
            3,
            3,
            4,
            2,
            (0..72).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            vec![0.3, -0.2],
        )
        .unwrap();
        let input = Tensor3::from_vec(
            6,
            8,
            4,
            (0..192).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let narrow = conv2d_same(&input, &kernel, 1, 1).unwrap();
        let wide = conv2d_same_f64acc(&input, &kernel, 1, 1).unwrap();
        assert_eq!(narrow.shape(), wide.shape());
        for (a, b) in narrow.data().iter().zip(wide.data()) {
            assert_relative_eq!(a, b, max_relative = 1e-5, epsilon = 1e-6);
        }
    }

    #[test]
    fn conv_is_linear_in_its_input() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let kernel = ConvKernel::new(
            3,
            3,
            2,
            2,
            (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            vec![0.0, 0.0],
        )
        .unwrap();
        let x = Tensor3::from_vec(5, 6, 2, (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let y = Tensor3::from_vec(5, 6, 2, (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let (a, b) = (0.7f32, -1.3f32);

        let mixed = Tensor3::from_vec(
            5,
            6,
            2,
            x.data()
                .iter()
                .zip(y.data())
                .map(|(xv, yv)| a * xv + b * yv)
                .collect(),
        )
        .unwrap();

        let conv_mixed = conv2d_same(&mixed, &kernel, 1, 1).unwrap();
        let conv_x = conv2d_same(&x, &kernel, 1, 1).unwrap();
        let conv_y = conv2d_same(&y, &kernel, 1, 1).unwrap();
        for i in 0..conv_mixed.data().len() {
            let lhs = conv_mixed.data()[i];
            let rhs = a * conv_x.data()[i] + b * conv_y.data()[i];
            assert_relative_eq!(lhs, rhs, max_relative = 1e-5, epsilon = 1e-6);
        }
    }

    #[test]
    fn relu_examples() {
        let input = Tensor3::from_vec(3, 1, 1, vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&input).data(), &[0.0, 0.0, 2.0]);

        let nonneg = Tensor3::from_vec(2, 2, 1, vec![0.0, 1.0, 2.5, 7.0]).unwrap();
        assert_eq!(relu(&nonneg), nonneg);

        let neg = Tensor3::filled(2, 2, 1, -3.0);
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_is_idempotent() {
        let input = Tensor3::from_vec(2, 3, 1, vec![-2.0, -0.0, 0.0, 0.5, 3.0, -8.0]).unwrap();
        let once = relu(&input);
        assert_eq!(relu(&once), once);
    }

    #[test]
    fn avg_pool_examples() {
        let constant = Tensor3::filled(6, 16, 1, 3.25);
        let pooled = avg_pool(&constant, 1, 16).unwrap();
        assert_eq!(pooled.shape(), (6, 1, 1));
        assert!(pooled.data().iter().all(|&v| v == 3.25));

        let ramp = Tensor3::from_vec(6, 1, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let mean = avg_pool(&ramp, 6, 1).unwrap();
        assert_eq!(mean.data(), &[2.5]);

        let grid = Tensor3::from_vec(2, 2, 1, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let rows = avg_pool(&grid, 1, 2).unwrap();
        assert_eq!(rows.data(), &[2.0, 6.0]);
    }

    #[test]
    fn avg_pool_rejects_non_divisible_window() {
        let input = Tensor3::zeros(5, 4, 1);
        assert!(matches!(
            avg_pool(&input, 2, 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(100.0) - 1.0).abs() < 1e-12);
        for x in [-8.0f32, -1.5, -0.25, 0.0, 0.3, 2.0, 9.0] {
            assert_relative_eq!(sigmoid(x) + sigmoid(-x), 1.0, epsilon = 1e-6);
        }
    }
}
