//! Constant-memory pipelined inference for small temporal CNNs, together
//! with the surrounding seismic sensing pipeline: a spectrogram front end,
//! power-of-two weight quantization, dual-threshold event triggering,
//! co-detection aggregation and a sensor-network energy model.
//!
//! The streaming engine in [`stream`] consumes spectrogram columns as they
//! arrive and produces the same probabilities as layer-by-layer batch
//! inference ([`net::infer_batch_sliding`]) while holding only a small
//! carry buffer per layer, so memory and per-step cost are independent of
//! the input length.

pub mod codetect;
pub mod error;
pub mod net;
pub mod preprocess;
pub mod quant;
pub mod stream;
pub mod tensor;
pub mod weights;

pub use error::{Error, Result};
