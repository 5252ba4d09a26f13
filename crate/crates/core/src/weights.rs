//! Weight containers: in-memory store with float or quantized payloads
//! per convolution layer, and the little-endian `TDPW` file format that
//! embeds the network description alongside the payloads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::net::{Activation, LayerKind, LayerSpec, NetworkSpec};
use crate::quant::Pow2Codebook;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"TDPW";
pub const WEIGHTS_VERSION: u16 = 1;

/// Payload of one convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    Float {
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Quantized {
        weight_codes: Vec<u8>,
        bias_codes: Vec<u8>,
        book: Pow2Codebook,
    },
}

impl LayerWeights {
    pub fn parameter_count(&self) -> usize {
        match self {
            LayerWeights::Float { weights, bias } => weights.len() + bias.len(),
            LayerWeights::Quantized {
                weight_codes,
                bias_codes,
                ..
            } => weight_codes.len() + bias_codes.len(),
        }
    }

    pub fn is_quantized(&self) -> bool {
        matches!(self, LayerWeights::Quantized { .. })
    }

    /// Materializes (weights, bias) as floats. Codes must have been
    /// validated beforehand; see [`WeightStore::validate_codes`].
    pub fn decode(&self) -> (Vec<f32>, Vec<f32>) {
        match self {
            LayerWeights::Float { weights, bias } => (weights.clone(), bias.clone()),
            LayerWeights::Quantized {
                weight_codes,
                bias_codes,
                book,
            } => {
                let decode = |codes: &[u8]| {
                    codes
                        .iter()
                        .map(|&c| book.decode(c).expect("codes validated on construction"))
                        .collect()
                };
                (decode(weight_codes), decode(bias_codes))
            }
        }
    }
}

/// Ordered payloads for every convolution layer of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub layers: Vec<LayerWeights>,
}

impl WeightStore {
    /// All-zero float weights shaped for `net`.
    pub fn zeros(net: &NetworkSpec) -> Self {
        let layers = net
            .conv_layers()
            .map(|l| LayerWeights::Float {
                weights: vec![0.0; l.kt * l.kf * l.c_in * l.c_out],
                bias: vec![0.0; l.c_out],
            })
            .collect();
        Self { layers }
    }

    /// Uniform random float weights in [-0.5, 0.5).
    pub fn random<R: Rng>(net: &NetworkSpec, rng: &mut R) -> Self {
        let layers = net
            .conv_layers()
            .map(|l| LayerWeights::Float {
                weights: (0..l.kt * l.kf * l.c_in * l.c_out)
                    .map(|_| rng.gen_range(-0.5..0.5))
                    .collect(),
                bias: (0..l.c_out).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            })
            .collect();
        Self { layers }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameter_count()).sum()
    }

    /// Bytes needed for all parameters as 32-bit floats.
    pub fn float_payload_bytes(&self) -> u64 {
        self.parameter_count() as u64 * 4
    }

    /// Bytes needed for all parameters as one-byte codes.
    pub fn quantized_payload_bytes(&self) -> u64 {
        self.parameter_count() as u64
    }

    /// Bytes of the payloads as currently stored.
    pub fn stored_payload_bytes(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| match l {
                LayerWeights::Float { .. } => l.parameter_count() as u64 * 4,
                LayerWeights::Quantized { .. } => l.parameter_count() as u64,
            })
            .sum()
    }

    pub fn is_fully_quantized(&self) -> bool {
        self.layers.iter().all(|l| l.is_quantized())
    }

    /// Checks every stored code byte against its codebook.
    pub fn validate_codes(&self) -> Result<()> {
        for layer in &self.layers {
            if let LayerWeights::Quantized {
                weight_codes,
                bias_codes,
                book,
            } = layer
            {
                for &code in weight_codes.iter().chain(bias_codes) {
                    book.decode(code)?;
                }
            }
        }
        Ok(())
    }

    /// Shape compatibility against the conv layers of `net`.
    pub fn matches(&self, net: &NetworkSpec) -> Result<()> {
        let specs: Vec<&LayerSpec> = net.conv_layers().collect();
        if specs.len() != self.layers.len() {
            return Err(Error::Weight(format!(
                "store has {} conv layers, network has {}",
                self.layers.len(),
                specs.len()
            )));
        }
        for (spec, layer) in specs.iter().zip(&self.layers) {
            let expected_w = spec.kt * spec.kf * spec.c_in * spec.c_out;
            let (w_len, b_len) = match layer {
                LayerWeights::Float { weights, bias } => (weights.len(), bias.len()),
                LayerWeights::Quantized {
                    weight_codes,
                    bias_codes,
                    ..
                } => (weight_codes.len(), bias_codes.len()),
            };
            if w_len != expected_w || b_len != spec.c_out {
                return Err(Error::Weight(format!(
                    "layer {}: payload {}+{} does not match kernel {}+{}",
                    spec.name, w_len, b_len, expected_w, spec.c_out
                )));
            }
        }
        Ok(())
    }
}

/// Writes the network description and weight payloads to `path`.
pub fn save_weights(net: &NetworkSpec, store: &WeightStore, path: &Path) -> Result<()> {
    store.matches(net)?;
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_weights(net, store, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a weight container, returning the embedded network and payloads.
pub fn load_weights(path: &Path) -> Result<(NetworkSpec, WeightStore)> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    read_weights(&mut r)
}

pub fn write_weights<W: Write>(net: &NetworkSpec, store: &WeightStore, w: &mut W) -> Result<()> {
    w.write_all(WEIGHTS_MAGIC)?;
    w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
    w.write_all(&u16_checked(net.layers.len(), "layer count")?.to_le_bytes())?;
    w.write_all(&u16_checked(net.input_t, "input_t")?.to_le_bytes())?;
    w.write_all(&u16_checked(net.input_f, "input_f")?.to_le_bytes())?;
    w.write_all(&u16_checked(net.input_c, "input_c")?.to_le_bytes())?;

    let mut conv_idx = 0;
    for layer in &net.layers {
        let name = layer.name.as_bytes();
        if name.len() > u8::MAX as usize {
            return Err(Error::Format(format!("layer name {} too long", layer.name)));
        }
        w.write_all(&[name.len() as u8])?;
        w.write_all(name)?;
        w.write_all(&[kind_tag(layer.kind), activation_tag(layer.activation)])?;
        for v in [
            layer.kt,
            layer.kf,
            layer.stride_t,
            layer.stride_f,
            layer.c_in,
            layer.c_out,
        ] {
            w.write_all(&u16_checked(v, "layer field")?.to_le_bytes())?;
        }
        if layer.kind != LayerKind::Conv {
            w.write_all(&[DTYPE_NONE])?;
            continue;
        }
        match &store.layers[conv_idx] {
            LayerWeights::Float { weights, bias } => {
                w.write_all(&[DTYPE_F32])?;
                for v in weights.iter().chain(bias) {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            LayerWeights::Quantized {
                weight_codes,
                bias_codes,
                book,
            } => {
                w.write_all(&[DTYPE_POW2])?;
                w.write_all(&[book.n1 as i8 as u8, book.n2 as i8 as u8])?;
                w.write_all(weight_codes)?;
                w.write_all(bias_codes)?;
            }
        }
        conv_idx += 1;
    }
    Ok(())
}

pub fn read_weights<R: Read>(r: &mut R) -> Result<(NetworkSpec, WeightStore)> {
    let mut magic = [0u8; 4];
    read_all(r, &mut magic)?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected {:02x?}",
            magic, WEIGHTS_MAGIC
        )));
    }
    let version = read_u16(r)?;
    if version != WEIGHTS_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version}"
        )));
    }
    let layer_count = read_u16(r)? as usize;
    let input_t = read_u16(r)? as usize;
    let input_f = read_u16(r)? as usize;
    let input_c = read_u16(r)? as usize;

    let mut layers = Vec::with_capacity(layer_count);
    let mut payloads = Vec::new();
    for _ in 0..layer_count {
        let mut len = [0u8; 1];
        read_all(r, &mut len)?;
        let mut name = vec![0u8; len[0] as usize];
        read_all(r, &mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Format("layer name is not valid UTF-8".into()))?;
        let mut tags = [0u8; 2];
        read_all(r, &mut tags)?;
        let kind = kind_from_tag(tags[0])?;
        let activation = activation_from_tag(tags[1])?;
        let kt = read_u16(r)? as usize;
        let kf = read_u16(r)? as usize;
        let stride_t = read_u16(r)? as usize;
        let stride_f = read_u16(r)? as usize;
        let c_in = read_u16(r)? as usize;
        let c_out = read_u16(r)? as usize;
        let mut dtype = [0u8; 1];
        read_all(r, &mut dtype)?;

        let spec = LayerSpec {
            name,
            kind,
            kt,
            kf,
            stride_t,
            stride_f,
            c_in,
            c_out,
            activation,
        };
        match (kind, dtype[0]) {
            (LayerKind::Conv, DTYPE_F32) => {
                let w_count = kt * kf * c_in * c_out;
                let mut read_f32s = |n: usize| -> Result<Vec<f32>> {
                    let mut out = Vec::with_capacity(n);
                    let mut buf = [0u8; 4];
                    for _ in 0..n {
                        read_all(r, &mut buf)?;
                        out.push(f32::from_le_bytes(buf));
                    }
                    Ok(out)
                };
                let weights = read_f32s(w_count)?;
                let bias = read_f32s(c_out)?;
                payloads.push(LayerWeights::Float { weights, bias });
            }
            (LayerKind::Conv, DTYPE_POW2) => {
                let mut range = [0u8; 2];
                read_all(r, &mut range)?;
                let book = Pow2Codebook::from_range(range[0] as i8 as i32, range[1] as i8 as i32)?;
                let mut weight_codes = vec![0u8; kt * kf * c_in * c_out];
                read_all(r, &mut weight_codes)?;
                let mut bias_codes = vec![0u8; c_out];
                read_all(r, &mut bias_codes)?;
                payloads.push(LayerWeights::Quantized {
                    weight_codes,
                    bias_codes,
                    book,
                });
            }
            (LayerKind::Conv, other) => {
                return Err(Error::Format(format!("unknown dtype tag {other}")));
            }
            (_, DTYPE_NONE) => {}
            (_, other) => {
                return Err(Error::Format(format!(
                    "non-conv layer carries dtype tag {other}"
                )));
            }
        }
        layers.push(spec);
    }

    let net = NetworkSpec {
        layers,
        input_t,
        input_f,
        input_c,
    };
    net.validate()
        .map_err(|e| Error::Format(format!("embedded network does not chain: {e}")))?;
    let store = WeightStore { layers: payloads };
    store
        .matches(&net)
        .map_err(|e| Error::Format(format!("payload shape mismatch: {e}")))?;
    store.validate_codes()?;
    Ok((net, store))
}

const DTYPE_F32: u8 = 0;
const DTYPE_POW2: u8 = 1;
const DTYPE_NONE: u8 = 255;

fn kind_tag(kind: LayerKind) -> u8 {
    match kind {
        LayerKind::Conv => 0,
        LayerKind::Dropout => 1,
        LayerKind::AvgPoolF => 2,
        LayerKind::AvgPoolT => 3,
    }
}

fn kind_from_tag(tag: u8) -> Result<LayerKind> {
    Ok(match tag {
        0 => LayerKind::Conv,
        1 => LayerKind::Dropout,
        2 => LayerKind::AvgPoolF,
        3 => LayerKind::AvgPoolT,
        other => return Err(Error::Format(format!("unknown layer kind tag {other}"))),
    })
}

fn activation_tag(activation: Activation) -> u8 {
    match activation {
        Activation::None => 0,
        Activation::Relu => 1,
        Activation::Sigmoid => 2,
    }
}

fn activation_from_tag(tag: u8) -> Result<Activation> {
    Ok(match tag {
        0 => Activation::None,
        1 => Activation::Relu,
        2 => Activation::Sigmoid,
        other => return Err(Error::Format(format!("unknown activation tag {other}"))),
    })
}

fn u16_checked(v: usize, what: &str) -> Result<u16> {
    u16::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u16")))
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut buf = [0u8; 2];
    read_all(r, &mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_all<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated container".into())
        } else {
            Error::Io(e)
        }
    })
}
