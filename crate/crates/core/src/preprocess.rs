//! Raw-signal front end: strided segmentation with a double buffer, Tukey
//! windowing, one-sided power spectra, a 64-band triangular filterbank and
//! log compression. A 1 ksps stream becomes one 64-value spectrogram
//! column per 512 new samples.
//!
//! Internals run in f64 and columns are emitted as f32; the pipeline is
//! deterministic, so the same input bytes always give the same columns.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Samples per second of the geophone stream.
pub const SAMPLE_RATE: f64 = 1000.0;
/// Samples per analysis segment.
pub const SEGMENT_SIZE: usize = 1024;
/// New samples between consecutive segments.
pub const SEGMENT_STRIDE: usize = 512;
/// One-sided spectrum length for a 1024-point transform.
pub const SPECTRUM_BINS: usize = SEGMENT_SIZE / 2 + 1;
/// Output bands of the filterbank.
pub const FILTER_BANDS: usize = 64;
/// Tukey taper fraction used for every segment.
pub const TUKEY_ALPHA: f64 = 0.25;
/// Additive floor before log compression.
pub const LOG_EPSILON: f64 = 1e-10;

/// Tapered-cosine window: flat center, raised-cosine tapers of
/// `alpha * n / 2` samples on each side. `alpha = 0` is rectangular,
/// `alpha = 1` is the Hann window.
pub fn tukey_window(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Parameter("window needs at least 2 points".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!(
            "tukey alpha {alpha} outside [0, 1]"
        )));
    }
    if alpha == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let m = (n - 1) as f64;
    let width = (alpha * m / 2.0).floor() as usize;
    let mut w = vec![1.0; n];
    for (k, value) in w.iter_mut().enumerate().take(width + 1) {
        let x = 2.0 * k as f64 / (alpha * m) - 1.0;
        *value = 0.5 * (1.0 + (std::f64::consts::PI * x).cos());
    }
    for k in (n - width - 1)..n {
        w[k] = w[n - 1 - k];
    }
    Ok(w)
}

/// One spectrogram column with its provenance in the sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramColumn {
    pub frame_index: u64,
    pub start_sample: u64,
    pub values: Vec<f32>,
}

/// Splits an arbitrary-chunked sample stream into overlapping segments.
/// Emits one frame per 512 new samples once the first 1024 have arrived;
/// the pending buffer never holds more than two segments.
#[derive(Debug, Clone)]
pub struct Segmenter {
    pending: Vec<f32>,
    frame_index: u64,
    consumed: u64,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new()
    }
}

impl Segmenter {
    pub fn new() -> Self {
        Self {
            pending: Vec::with_capacity(2 * SEGMENT_SIZE),
            frame_index: 0,
            consumed: 0,
        }
    }

    /// Feeds samples and returns every newly completed frame. Chunk
    /// boundaries do not affect the output.
    pub fn push(&mut self, samples: &[f32]) -> Vec<(u64, u64, Vec<f32>)> {
        self.pending.extend_from_slice(samples);
        let mut frames = Vec::new();
        while self.pending.len() >= SEGMENT_SIZE {
            let frame = self.pending[..SEGMENT_SIZE].to_vec();
            let start = self.consumed;
            frames.push((self.frame_index, start, frame));
            self.frame_index += 1;
            self.consumed += SEGMENT_STRIDE as u64;
            self.pending.drain(..SEGMENT_STRIDE);
        }
        frames
    }

    pub fn frames_emitted(&self) -> u64 {
        self.frame_index
    }
}

/// Full front end: segmentation, windowing, power spectrum, filterbank,
/// log compression.
pub struct SpectrogramPipeline {
    segmenter: Segmenter,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
    filters: Vec<(usize, Vec<f64>)>,
}

impl SpectrogramPipeline {
    pub fn new() -> Self {
        let window = tukey_window(SEGMENT_SIZE, TUKEY_ALPHA).expect("fixed parameters are valid");
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(SEGMENT_SIZE);
        Self {
            segmenter: Segmenter::new(),
            window,
            window_power,
            fft,
            filters: build_filterbank(),
        }
    }

    /// Feeds samples, returning every newly completed column.
    pub fn push(&mut self, samples: &[f32]) -> Vec<SpectrogramColumn> {
        let frames = self.segmenter.push(samples);
        frames
            .into_iter()
            .map(|(frame_index, start_sample, frame)| {
                let spectrum = self.power_spectrum_f64(&frame);
                let banded = apply_filterbank(&self.filters, &spectrum);
                let values = banded
                    .iter()
                    .map(|&e| ((e + LOG_EPSILON).ln()) as f32)
                    .collect();
                SpectrogramColumn {
                    frame_index,
                    start_sample,
                    values,
                }
            })
            .collect()
    }

    fn power_spectrum_f64(&self, frame: &[f32]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(&x, &w)| Complex::new(f64::from(x) * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        one_sided_psd(&buf, self.window_power)
    }
}

impl Default for SpectrogramPipeline {
    fn default() -> Self {
        Self::new()
    }
}

/// Windowed one-sided power spectral density of one 1024-sample frame:
/// squared transform magnitudes scaled by 1/(fs * sum(w^2)), interior
/// bins doubled.
pub fn power_spectrum(frame: &[f32]) -> Result<Vec<f64>> {
    if frame.len() != SEGMENT_SIZE {
        return Err(Error::Dimension(format!(
            "frame length {} must be {}",
            frame.len(),
            SEGMENT_SIZE
        )));
    }
    let pipeline = SpectrogramPipeline::new();
    Ok(pipeline.power_spectrum_f64(frame))
}

fn one_sided_psd(spectrum: &[Complex<f64>], window_power: f64) -> Vec<f64> {
    let scale = 1.0 / (SAMPLE_RATE * window_power);
    (0..SPECTRUM_BINS)
        .map(|k| {
            let power = spectrum[k].norm_sqr() * scale;
            if k == 0 || k == SPECTRUM_BINS - 1 {
                power
            } else {
                2.0 * power
            }
        })
        .collect()
}

/// 64 unit-sum triangular filters with 50% overlap, centers linearly
/// spaced from bin 1 to bin 512.
fn build_filterbank() -> Vec<(usize, Vec<f64>)> {
    let first_center = 1.0;
    let last_center = (SPECTRUM_BINS - 1) as f64;
    let spacing = (last_center - first_center) / (FILTER_BANDS - 1) as f64;
    (0..FILTER_BANDS)
        .map(|m| {
            let center = first_center + m as f64 * spacing;
            let lo = ((center - spacing).ceil().max(0.0)) as usize;
            let hi = ((center + spacing).floor() as usize).min(SPECTRUM_BINS - 1);
            let mut taps: Vec<f64> = (lo..=hi)
                .map(|k| {
                    let d = (k as f64 - center).abs() / spacing;
                    (1.0 - d).max(0.0)
                })
                .collect();
            let sum: f64 = taps.iter().sum();
            for t in taps.iter_mut() {
                *t /= sum;
            }
            (lo, taps)
        })
        .collect()
}

fn apply_filterbank(filters: &[(usize, Vec<f64>)], spectrum: &[f64]) -> Vec<f64> {
    filters
        .iter()
        .map(|(lo, taps)| {
            taps.iter()
                .enumerate()
                .map(|(i, t)| t * spectrum[lo + i])
                .sum()
        })
        .collect()
}

/// Maps a one-sided spectrum onto the 64 bands.
pub fn filterbank_64(spectrum: &[f64]) -> Result<Vec<f64>> {
    if spectrum.len() != SPECTRUM_BINS {
        return Err(Error::Dimension(format!(
            "spectrum length {} must be {}",
            spectrum.len(),
            SPECTRUM_BINS
        )));
    }
    Ok(apply_filterbank(&build_filterbank(), spectrum))
}

/// Natural log of (x + 1e-10), elementwise. Negative energies are a
/// caller bug and rejected.
pub fn log_compress(energies: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = energies.iter().find(|&&e| e < 0.0) {
        return Err(Error::Domain(format!("negative energy {bad}")));
    }
    Ok(energies.iter().map(|&e| (e + LOG_EPSILON).ln()).collect())
}

/// Seconds of signal needed to produce `columns` spectrogram columns.
pub fn acquisition_time(columns: usize) -> f64 {
    assert!(columns >= 1);
    (SEGMENT_SIZE as f64 + (columns as f64 - 1.0) * SEGMENT_STRIDE as f64) / SAMPLE_RATE
}

/// Raw on-disk sample encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    /// Little-endian 32-bit floats.
    F32,
    /// Little-endian 24-bit signed integers, emitted as their count value.
    I24,
}

impl RawFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "f32" => Ok(RawFormat::F32),
            "i24" => Ok(RawFormat::I24),
            other => Err(Error::Parameter(format!("unknown raw format {other}"))),
        }
    }
}

/// Decodes a headerless raw sample file.
pub fn read_raw_samples(path: &Path, format: RawFormat) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_raw_samples(&bytes, format)
}

pub fn decode_raw_samples(bytes: &[u8], format: RawFormat) -> Result<Vec<f32>> {
    match format {
        RawFormat::F32 => {
            if !bytes.len().is_multiple_of(4) {
                return Err(Error::Format(format!(
                    "f32 stream length {} is not a multiple of 4",
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect())
        }
        RawFormat::I24 => {
            if !bytes.len().is_multiple_of(3) {
                return Err(Error::Format(format!(
                    "i24 stream length {} is not a multiple of 3",
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(3)
                .map(|c| {
                    let raw = (c[0] as i32) | ((c[1] as i32) << 8) | ((c[2] as i32) << 16);
                    // Sign-extend from 24 bits.
                    let value = (raw << 8) >> 8;
                    value as f32
                })
                .collect())
        }
    }
}

pub const SPECTROGRAM_MAGIC: &[u8; 4] = b"TDPS";
pub const SPECTROGRAM_VERSION: u32 = 1;

/// Writes columns as flat binary: 16-byte header (magic, version, T, F)
/// then T*F little-endian f32 values, time-major.
pub fn save_spectrogram(columns: &[SpectrogramColumn], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(SPECTROGRAM_MAGIC)?;
    w.write_all(&SPECTROGRAM_VERSION.to_le_bytes())?;
    w.write_all(&(columns.len() as u32).to_le_bytes())?;
    w.write_all(&(FILTER_BANDS as u32).to_le_bytes())?;
    for col in columns {
        if col.values.len() != FILTER_BANDS {
            return Err(Error::Dimension(format!(
                "column has {} bands, expected {}",
                col.values.len(),
                FILTER_BANDS
            )));
        }
        for v in &col.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one CSV row of 64 values per column.
pub fn save_spectrogram_csv(columns: &[SpectrogramColumn], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for col in columns {
        let row: Vec<String> = col.values.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a binary or CSV spectrogram into a (T, 64, 1) tensor.
pub fn load_spectrogram(path: &Path) -> Result<Tensor3> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(SPECTROGRAM_MAGIC) {
        parse_spectrogram_binary(&bytes)
    } else {
        parse_spectrogram_csv(&bytes)
    }
}

fn parse_spectrogram_binary(bytes: &[u8]) -> Result<Tensor3> {
    if bytes.len() < 16 {
        return Err(Error::Format("truncated spectrogram header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SPECTROGRAM_VERSION {
        return Err(Error::Format(format!(
            "unsupported spectrogram version {version}"
        )));
    }
    let t = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let f = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = 16 + t * f * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "spectrogram payload is {} bytes, header implies {}",
            bytes.len(),
            expected
        )));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor3::from_vec(t, f, 1, data)
}

fn parse_spectrogram_csv(bytes: &[u8]) -> Result<Tensor3> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::Format("spectrogram CSV is not UTF-8".into()))?;
    let mut data = Vec::new();
    let mut f_len = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f32> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f32>()
                    .map_err(|_| Error::Format(format!("bad number on line {}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        match f_len {
            None => f_len = Some(row.len()),
            Some(f) if f != row.len() => {
                return Err(Error::Format(format!(
                    "ragged CSV: line {} has {} values, expected {}",
                    lineno + 1,
                    row.len(),
                    f
                )));
            }
            _ => {}
        }
        data.extend(row);
    }
    let f = f_len.ok_or_else(|| Error::Format("empty spectrogram CSV".into()))?;
    let t = data.len() / f;
    Tensor3::from_vec(t, f, 1, data)
}

/// Converts owned columns into the (T, 64, 1) tensor shape used by the
/// network.
pub fn columns_to_tensor(columns: &[SpectrogramColumn]) -> Result<Tensor3> {
    let mut data = Vec::with_capacity(columns.len() * FILTER_BANDS);
    for col in columns {
        if col.values.len() != FILTER_BANDS {
            return Err(Error::Dimension(format!(
                "column has {} bands, expected {}",
                col.values.len(),
                FILTER_BANDS
            )));
        }
        data.extend_from_slice(&col.values);
    }
    Tensor3::from_vec(columns.len(), FILTER_BANDS, 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Direct O(n^2) transform used as the independent reference for the
    /// FFT-based path.
    fn dft_psd(frame: &[f32], window: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let windowed: Vec<f64> = frame
            .iter()
            .zip(window)
            .map(|(&x, &w)| f64::from(x) * w)
            .collect();
        let window_power: f64 = window.iter().map(|w| w * w).sum();
        let scale = 1.0 / (SAMPLE_RATE * window_power);
        (0..SPECTRUM_BINS)
            .map(|k| {
                let (mut re, mut im) = (0.0f64, 0.0f64);
                for (i, &x) in windowed.iter().enumerate() {
                    let phase = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                    re += x * phase.cos();
                    im += x * phase.sin();
                }
                let power = (re * re + im * im) * scale;
                if k == 0 || k == SPECTRUM_BINS - 1 {
                    power
                } else {
                    2.0 * power
                }
            })
            .collect()
    }

    fn test_frame(seed: u64) -> Vec<f32> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..SEGMENT_SIZE).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn tukey_limits() {
        let rect = tukey_window(64, 0.0).unwrap();
        assert!(rect.iter().all(|&w| w == 1.0));

        let hann = tukey_window(64, 1.0).unwrap();
        for (k, &w) in hann.iter().enumerate() {
            let expected = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / 63.0).cos());
            assert_relative_eq!(w, expected, epsilon = 1e-12);
        }

        assert!(tukey_window(64, 1.5).is_err());
        assert!(tukey_window(64, -0.1).is_err());
    }

    #[test]
    fn tukey_1024_quarter_alpha() {
        let w = tukey_window(1024, 0.25).unwrap();
        assert_eq!(w[0], 0.0);
        assert_eq!(w[512], 1.0);
        for k in 0..1024 {
            assert_relative_eq!(w[k], w[1023 - k], epsilon = 1e-15);
        }
        // Taper region ends after floor(0.25 * 1023 / 2) = 127 points.
        assert!(w[100] < 1.0);
        assert_eq!(w[128], 1.0);
    }

    #[test]
    fn zero_frame_gives_zero_spectrum() {
        let psd = power_spectrum(&vec![0.0; SEGMENT_SIZE]).unwrap();
        assert!(psd.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn fft_path_matches_direct_transform() {
        let frame = test_frame(7);
        let window = tukey_window(SEGMENT_SIZE, TUKEY_ALPHA).unwrap();
        let fft = power_spectrum(&frame).unwrap();
        let direct = dft_psd(&frame, &window);
        let peak = direct.iter().cloned().fold(0.0f64, f64::max);
        for (a, b) in fft.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-9 * peak.max(1e-30));
        }
    }

    #[test]
    fn bin_centered_sinusoid_concentrates_at_its_bin() {
        // 62.5 Hz = bin 64 of a 1024-point transform at 1 ksps.
        let frame: Vec<f32> = (0..SEGMENT_SIZE)
            .map(|i| {
                let t = i as f64 / SAMPLE_RATE;
                (2.0 * std::f64::consts::PI * 62.5 * t).sin() as f32
            })
            .collect();
        let psd = power_spectrum(&frame).unwrap();
        let peak_bin = psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak_bin, 64);
        let peak = psd[64];
        for (k, &p) in psd.iter().enumerate() {
            if (k as i64 - 64).unsigned_abs() > 4 {
                assert!(
                    p < 0.01 * peak,
                    "bin {k} leaks {p:.3e} against peak {peak:.3e}"
                );
            }
        }
    }

    #[test]
    fn parseval_identity_holds() {
        let frame = test_frame(13);
        let window = tukey_window(SEGMENT_SIZE, TUKEY_ALPHA).unwrap();
        let psd = power_spectrum(&frame).unwrap();
        let sum: f64 = psd.iter().sum();
        let window_power: f64 = window.iter().map(|w| w * w).sum();
        let weighted: f64 = frame
            .iter()
            .zip(&window)
            .map(|(&x, &w)| (f64::from(x) * w).powi(2))
            .sum();
        let expected = SEGMENT_SIZE as f64 * weighted / (SAMPLE_RATE * window_power);
        assert_relative_eq!(sum, expected, max_relative = 1e-6);
    }

    #[test]
    fn filterbank_preserves_constant_spectra() {
        let banded = filterbank_64(&vec![3.5; SPECTRUM_BINS]).unwrap();
        assert_eq!(banded.len(), FILTER_BANDS);
        for &v in &banded {
            assert_relative_eq!(v, 3.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_bin_touches_at_most_two_bands() {
        for bin in [0usize, 1, 37, 100, 256, 400, 511, 512] {
            let mut spectrum = vec![0.0; SPECTRUM_BINS];
            spectrum[bin] = 1.0;
            let banded = filterbank_64(&spectrum).unwrap();
            let nonzero = banded.iter().filter(|&&v| v != 0.0).count();
            assert!(nonzero <= 2, "bin {bin} lit {nonzero} bands");
            assert!(nonzero >= 1, "bin {bin} lit no band");
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_bands() {
        let banded = filterbank_64(&vec![0.0; SPECTRUM_BINS]).unwrap();
        assert!(banded.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn log_compress_examples() {
        let out = log_compress(&[0.0]).unwrap();
        assert_relative_eq!(out[0], (1e-10f64).ln(), epsilon = 1e-12);
        let near_one = log_compress(&[1.0 - 1e-10]).unwrap();
        assert!(near_one[0].abs() < 1e-9);
        assert!(log_compress(&[-0.5]).is_err());

        // Scaling by 10 shifts the output by ln(10) away from the floor.
        let a = log_compress(&[0.25]).unwrap()[0];
        let b = log_compress(&[2.5]).unwrap()[0];
        assert_relative_eq!(b - a, 10.0f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn acquisition_times() {
        assert_eq!(acquisition_time(4), 2.56);
        assert_eq!(acquisition_time(1), 1.024);
        assert_eq!(acquisition_time(24), 12.8);
    }

    #[test]
    fn segmenter_frame_counts() {
        let mut seg = Segmenter::new();
        let frames = seg.push(&vec![0.0; 12_800]);
        assert_eq!(frames.len(), 24);

        let mut seg = Segmenter::new();
        let frames = seg.push(&vec![0.0; 119_296]);
        assert_eq!(frames.len(), 232);
    }

    #[test]
    fn segmenter_is_chunking_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let signal: Vec<f32> = (0..10_000).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut whole = Segmenter::new();
        let expected = whole.push(&signal);

        for chunk_sizes in [vec![1usize; 0], vec![513], vec![1, 7, 512, 1024, 3]] {
            let mut seg = Segmenter::new();
            let mut got = Vec::new();
            let mut offset = 0;
            let mut sizes = chunk_sizes.iter().cycle();
            while offset < signal.len() {
                let take = (*sizes.next().unwrap_or(&997)).clamp(1, signal.len() - offset);
                got.extend(seg.push(&signal[offset..offset + take]));
                offset += take;
            }
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn pipeline_is_deterministic_and_chunking_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let signal: Vec<f32> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut p1 = SpectrogramPipeline::new();
        let all = p1.push(&signal);

        let mut p2 = SpectrogramPipeline::new();
        let mut chunked = Vec::new();
        for chunk in signal.chunks(333) {
            chunked.extend(p2.push(chunk));
        }
        assert_eq!(all, chunked);
        assert_eq!(all.len(), 7);
        assert!(all.iter().all(|c| c.values.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn raw_decoders() {
        let floats = [1.5f32, -2.25, 0.0];
        let bytes: Vec<u8> = floats.iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(decode_raw_samples(&bytes, RawFormat::F32).unwrap(), floats);
        assert!(decode_raw_samples(&bytes[..5], RawFormat::F32).is_err());

        // -2 as 24-bit two's complement, then 5.
        let bytes = [0xFE, 0xFF, 0xFF, 0x05, 0x00, 0x00];
        assert_eq!(
            decode_raw_samples(&bytes, RawFormat::I24).unwrap(),
            vec![-2.0, 5.0]
        );
        assert!(decode_raw_samples(&bytes[..4], RawFormat::I24).is_err());
    }

    #[test]
    fn spectrogram_container_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.tdps");
        let columns: Vec<SpectrogramColumn> = (0..3)
            .map(|i| SpectrogramColumn {
                frame_index: i,
                start_sample: i * 512,
                values: (0..FILTER_BANDS).map(|k| (i * 100 + k as u64) as f32).collect(),
            })
            .collect();
        save_spectrogram(&columns, &path).unwrap();
        let tensor = load_spectrogram(&path).unwrap();
        assert_eq!(tensor.shape(), (3, 64, 1));
        assert_eq!(tensor.get(1, 0, 0), 100.0);
        assert_eq!(tensor.get(2, 63, 0), 263.0);

        let csv_path = dir.path().join("spec.csv");
        save_spectrogram_csv(&columns, &csv_path).unwrap();
        let from_csv = load_spectrogram(&csv_path).unwrap();
        assert_eq!(from_csv, tensor);
    }
}
