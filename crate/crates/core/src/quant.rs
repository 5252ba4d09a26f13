//! Power-of-two weight quantization: per-layer codebook fitting, nearest
//! projection onto {0} U {+-2^k}, and the one-byte code used to store each
//! parameter.
//!
//! Code byte layout: bit 7 sign, bit 6 zero flag, bits 0..2 exponent index
//! (k - n1). Bits 3..5 are reserved zero, so corrupted bytes are
//! detectable.

use crate::error::{Error, Result};
use crate::net::NetworkSpec;
use crate::tensor::Tensor3;
use crate::weights::{LayerWeights, WeightStore};

/// Exponent levels per codebook. Seven levels plus sign and zero fit in
/// one byte.
pub const EXPONENT_LEVELS: i32 = 7;

const ZERO_CODE: u8 = 0x40;
const SIGN_BIT: u8 = 0x80;
const INDEX_MASK: u8 = 0x07;

/// Representable set {0} U {+-2^k : n1 <= k <= n2} for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pow2Codebook {
    pub n1: i32,
    pub n2: i32,
}

impl Pow2Codebook {
    /// Codebook sized to the largest parameter magnitude of a layer:
    /// n2 = floor(log2(4 * max/3)), n1 = n2 - 6. A layer with no nonzero
    /// parameters gets a placeholder book (every code is the zero code).
    pub fn fit(max_abs: f32) -> Self {
        if !max_abs.is_finite() || max_abs <= 0.0 {
            return Self { n1: -6, n2: 0 };
        }
        let n2 = (4.0 * f64::from(max_abs) / 3.0).log2().floor() as i32;
        Self {
            n1: n2 - (EXPONENT_LEVELS - 1),
            n2,
        }
    }

    pub fn from_range(n1: i32, n2: i32) -> Result<Self> {
        if n2 - n1 != EXPONENT_LEVELS - 1 {
            return Err(Error::Format(format!(
                "codebook range {}..{} does not span {} levels",
                n1, n2, EXPONENT_LEVELS
            )));
        }
        Ok(Self { n1, n2 })
    }

    /// Every representable non-negative magnitude, zero first.
    pub fn magnitudes(&self) -> Vec<f32> {
        let mut out = vec![0.0];
        out.extend((self.n1..=self.n2).map(pow2));
        out
    }

    /// Nearest element of the representable set in absolute distance;
    /// exact ties round toward the larger magnitude.
    pub fn quantize(&self, w: f32) -> f32 {
        if w == 0.0 {
            return 0.0;
        }
        let a = w.abs();
        let mut best = 0.0f32;
        let mut best_dist = a;
        for k in self.n1..=self.n2 {
            let mag = pow2(k);
            let dist = (a - mag).abs();
            if dist < best_dist || (dist == best_dist && mag > best) {
                best = mag;
                best_dist = dist;
            }
        }
        if w < 0.0 {
            -best
        } else {
            best
        }
    }

    /// Projects and encodes in one step.
    pub fn encode(&self, w: f32) -> u8 {
        let q = self.quantize(w);
        if q == 0.0 {
            return ZERO_CODE;
        }
        let idx = (q.abs().log2().round() as i32 - self.n1) as u8;
        debug_assert!(idx < EXPONENT_LEVELS as u8);
        let sign = if q < 0.0 { SIGN_BIT } else { 0 };
        sign | (idx & INDEX_MASK)
    }

    pub fn decode(&self, code: u8) -> Result<f32> {
        if code == ZERO_CODE {
            return Ok(0.0);
        }
        if code & !(SIGN_BIT | INDEX_MASK) != 0 {
            return Err(Error::Format(format!("corrupt weight code 0x{code:02x}")));
        }
        let idx = (code & INDEX_MASK) as i32;
        if idx >= EXPONENT_LEVELS {
            return Err(Error::Format(format!("corrupt weight code 0x{code:02x}")));
        }
        let mag = pow2(self.n1 + idx);
        Ok(if code & SIGN_BIT != 0 { -mag } else { mag })
    }
}

#[inline]
fn pow2(k: i32) -> f32 {
    (k as f64).exp2() as f32
}

/// Per-layer summary of a quantization pass.
#[derive(Debug, Clone)]
pub struct LayerQuantReport {
    pub name: String,
    pub parameter_count: usize,
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub max_abs_error: f32,
    pub book: Pow2Codebook,
}

/// Projects every layer of a float store onto its fitted power-of-two
/// codebook. Already-quantized layers pass through the same fit + project
/// path, which leaves them unchanged.
pub fn quantize_store(net: &NetworkSpec, store: &WeightStore) -> Result<(WeightStore, Vec<LayerQuantReport>)> {
    let conv_specs: Vec<_> = net.conv_layers().collect();
    if conv_specs.len() != store.layers.len() {
        return Err(Error::Weight(format!(
            "store has {} conv layers, network has {}",
            store.layers.len(),
            conv_specs.len()
        )));
    }
    let mut layers = Vec::with_capacity(store.layers.len());
    let mut reports = Vec::with_capacity(store.layers.len());
    for (spec, layer) in conv_specs.iter().zip(&store.layers) {
        let (weights, bias) = layer.decode();
        for v in weights.iter().chain(&bias) {
            if !v.is_finite() {
                return Err(Error::Weight(format!(
                    "layer {} contains a non-finite parameter",
                    spec.name
                )));
            }
        }
        let max_abs = weights
            .iter()
            .chain(&bias)
            .fold(0.0f32, |m, v| m.max(v.abs()));
        let book = Pow2Codebook::fit(max_abs);

        let mut max_err = 0.0f32;
        let mut encode_all = |values: &[f32]| -> Vec<u8> {
            values
                .iter()
                .map(|&v| {
                    let code = book.encode(v);
                    let q = book.decode(code).expect("own code is valid");
                    max_err = max_err.max((v - q).abs());
                    code
                })
                .collect()
        };
        let weight_codes = encode_all(&weights);
        let bias_codes = encode_all(&bias);

        let params = weights.len() + bias.len();
        reports.push(LayerQuantReport {
            name: spec.name.clone(),
            parameter_count: params,
            bytes_before: params as u64 * 4,
            bytes_after: params as u64,
            max_abs_error: max_err,
            book,
        });
        layers.push(LayerWeights::Quantized {
            weight_codes,
            bias_codes,
            book,
        });
    }
    Ok((WeightStore { layers }, reports))
}

/// Validates the codes of a quantized store and runs batch inference on
/// the decoded values. Bit-identical to decoding first and inferring on
/// the resulting float store.
pub fn dequantize_infer(net: &NetworkSpec, store: &WeightStore, input: &Tensor3) -> Result<f32> {
    store.validate_codes()?;
    crate::net::infer_batch(net, store, input)
}
