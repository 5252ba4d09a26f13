//! `tdp` command-line tool: spectrogram preprocessing, batch and streaming
//! inference, weight quantization, memory accounting and the sensor
//! network simulator.
//!
//! Exit codes: 0 success, 2 usage error, 3 data-format error, 4 numeric or
//! shape error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tdp_core::codetect::sim::{run_scenario, ScenarioConfig};
use tdp_core::codetect::{codetections_to_csv, events_to_csv, interarrival_to_csv};
use tdp_core::net::{infer_batch_sliding, peak_intermediate_bytes, NetworkSpec};
use tdp_core::preprocess::{
    load_spectrogram, read_raw_samples, save_spectrogram, save_spectrogram_csv, RawFormat,
    SpectrogramPipeline, FILTER_BANDS,
};
use tdp_core::quant::quantize_store;
use tdp_core::stream::{derive_plan, Classification, StreamEngine};
use tdp_core::tensor::Tensor3;
use tdp_core::weights::{load_weights, save_weights, WeightStore};
use tdp_core::Error;

#[derive(Parser)]
#[command(
    name = "tdp",
    version,
    about = "Streaming CNN inference for event-triggered seismic sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InferMode {
    Batch,
    Stream,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw sample file into a spectrogram file.
    Preprocess {
        /// Headerless little-endian sample stream at 1 ksps.
        raw: PathBuf,
        /// Output spectrogram (binary container, or CSV with --csv).
        out: PathBuf,
        /// Raw sample encoding: f32 or i24.
        #[arg(long, default_value = "f32")]
        format: String,
        /// Write CSV rows instead of the binary container.
        #[arg(long)]
        csv: bool,
    },
    /// Classify a spectrogram file, printing one probability per window.
    Infer {
        /// Weight container.
        weights: PathBuf,
        /// Spectrogram produced by `preprocess`.
        spectrogram: PathBuf,
        /// Batch reference path or the streaming engine.
        #[arg(long, value_enum, default_value_t = InferMode::Batch)]
        mode: InferMode,
        /// Emit every Nth sliding window.
        #[arg(long, default_value_t = 1)]
        decimate: usize,
    },
    /// Stream a raw sample file end to end, printing
    /// `frame_index,probability,decision` per classification.
    Stream {
        /// Weight container.
        weights: PathBuf,
        /// Headerless little-endian sample stream at 1 ksps.
        raw: PathBuf,
        /// Raw sample encoding: f32 or i24.
        #[arg(long, default_value = "f32")]
        format: String,
        /// Emit every Nth sliding window.
        #[arg(long, default_value_t = 1)]
        decimate: usize,
        /// Decision threshold on the probability.
        #[arg(long, default_value_t = 0.5)]
        threshold: f32,
    },
    /// Project weights onto per-layer power-of-two codebooks.
    Quantize {
        input: PathBuf,
        output: PathBuf,
        /// Print per-layer storage and projection-error figures.
        #[arg(long)]
        report: bool,
    },
    /// Print memory and per-step cost accounting for a network.
    Account {
        weights: PathBuf,
        /// Spectrogram columns of the batch input being compared against.
        #[arg(long, default_value_t = 24)]
        input_cols: usize,
    },
    /// Run a sensor-network scenario from a key = value config file.
    Simulate { config: PathBuf },
    /// F1 score of a confusion matrix.
    F1 {
        #[arg(long)]
        tp: u64,
        #[arg(long)]
        fp: u64,
        #[arg(long = "fn")]
        fn_: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Format(_) | Error::Io(_) => 3,
        Error::Parameter(_) => 2,
        _ => 4,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Preprocess {
            raw,
            out,
            format,
            csv,
        } => cmd_preprocess(&raw, &out, &format, csv),
        Command::Infer {
            weights,
            spectrogram,
            mode,
            decimate,
        } => cmd_infer(&weights, &spectrogram, mode, decimate),
        Command::Stream {
            weights,
            raw,
            format,
            decimate,
            threshold,
        } => cmd_stream(&weights, &raw, &format, decimate, threshold),
        Command::Quantize {
            input,
            output,
            report,
        } => cmd_quantize(&input, &output, report),
        Command::Account {
            weights,
            input_cols,
        } => cmd_account(&weights, input_cols),
        Command::Simulate { config } => cmd_simulate(&config),
        Command::F1 { tp, fp, fn_ } => {
            println!("{:.6}", tdp_core::codetect::energy::f1_score(tp, fp, fn_)?);
            Ok(())
        }
    }
}

fn cmd_preprocess(raw: &Path, out: &Path, format: &str, csv: bool) -> Result<(), Error> {
    let format = RawFormat::parse(format)?;
    let samples = read_raw_samples(raw, format)?;
    if samples.is_empty() {
        return Err(Error::Format(format!("{} holds no samples", raw.display())));
    }
    let mut pipeline = SpectrogramPipeline::new();
    let columns = pipeline.push(&samples);
    if columns.is_empty() {
        return Err(Error::Format(format!(
            "{} is shorter than one 1024-sample segment",
            raw.display()
        )));
    }
    if csv {
        save_spectrogram_csv(&columns, out)?;
    } else {
        save_spectrogram(&columns, out)?;
    }
    eprintln!("wrote {} columns to {}", columns.len(), out.display());
    Ok(())
}

fn check_decimate(decimate: usize) -> Result<(), Error> {
    if decimate == 0 {
        return Err(Error::Parameter("decimate must be at least 1".into()));
    }
    Ok(())
}

fn cmd_infer(
    weights: &Path,
    spectrogram: &Path,
    mode: InferMode,
    decimate: usize,
) -> Result<(), Error> {
    check_decimate(decimate)?;
    let (net, store) = load_weights(weights)?;
    let input = load_spectrogram(spectrogram)?;
    let probs: Vec<(u64, f32)> = match mode {
        InferMode::Batch => infer_batch_sliding(&net, &store, &input)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p))
            .collect(),
        InferMode::Stream => stream_tensor(&net, &store, &input)?
            .into_iter()
            .map(|c| (c.window_index, c.probability))
            .collect(),
    };
    for (idx, p) in probs {
        if idx % decimate as u64 == 0 {
            println!("{p:.6}");
        }
    }
    Ok(())
}

fn stream_tensor(
    net: &NetworkSpec,
    store: &WeightStore,
    input: &Tensor3,
) -> Result<Vec<Classification>, Error> {
    // Same admission rule as the batch path, so both modes agree on
    // which inputs they accept.
    if input.t_len() < net.input_t {
        return Err(Error::Dimension(format!(
            "input has {} columns, the network needs at least {}",
            input.t_len(),
            net.input_t
        )));
    }
    let mut engine = StreamEngine::new(net, store)?;
    let p0 = engine.plan().p0;
    if !input.t_len().is_multiple_of(p0) {
        return Err(Error::Dimension(format!(
            "input length {} is not a multiple of the {p0}-column step",
            input.t_len()
        )));
    }
    let col_len = input.f_len() * input.c_len();
    let mut out = Vec::new();
    for start in (0..input.t_len()).step_by(p0) {
        let cols = &input.data()[start * col_len..(start + p0) * col_len];
        out.extend(engine.push_columns(cols)?.classifications);
    }
    out.extend(engine.finish()?.classifications);
    Ok(out)
}

fn cmd_stream(
    weights: &Path,
    raw: &Path,
    format: &str,
    decimate: usize,
    threshold: f32,
) -> Result<(), Error> {
    check_decimate(decimate)?;
    let format = RawFormat::parse(format)?;
    let (net, store) = load_weights(weights)?;
    if net.input_f != FILTER_BANDS {
        return Err(Error::Weight(format!(
            "network expects {} frequency bins, preprocessing emits {}",
            net.input_f, FILTER_BANDS
        )));
    }
    let samples = read_raw_samples(raw, format)?;
    let mut pipeline = SpectrogramPipeline::new();
    let mut engine = StreamEngine::new(&net, &store)?;
    let p0 = engine.plan().p0;

    let mut staged: Vec<f32> = Vec::with_capacity(engine.push_len());
    let mut staged_cols = 0usize;
    let emit = |classifications: Vec<Classification>| {
        for c in classifications {
            if c.window_index % decimate as u64 == 0 {
                let frame = c.window_index * p0 as u64;
                let decision = u8::from(c.probability >= threshold);
                println!("{frame},{:.6},{decision}", c.probability);
            }
        }
    };

    // Feed the sample stream in ADC-sized chunks; the segmenter and the
    // engine both tolerate arbitrary chunking.
    for chunk in samples.chunks(4096) {
        for column in pipeline.push(chunk) {
            staged.extend_from_slice(&column.values);
            staged_cols += 1;
            if staged_cols == p0 {
                emit(engine.push_columns(&staged)?.classifications);
                staged.clear();
                staged_cols = 0;
            }
        }
    }
    if staged_cols > 0 {
        eprintln!(
            "note: {staged_cols} trailing columns dropped (the engine consumes {p0} at a time)"
        );
    }
    emit(engine.finish()?.classifications);
    Ok(())
}

fn cmd_quantize(input: &Path, output: &Path, report: bool) -> Result<(), Error> {
    let (net, store) = load_weights(input)?;
    let (qstore, reports) = quantize_store(&net, &store)?;
    save_weights(&net, &qstore, output)?;
    if report {
        for r in &reports {
            println!(
                "layer {}: params {}, bytes {} -> {}, exponents [{}, {}], max_error {:.6}",
                r.name,
                r.parameter_count,
                r.bytes_before,
                r.bytes_after,
                r.book.n1,
                r.book.n2,
                r.max_abs_error
            );
        }
        let before: u64 = reports.iter().map(|r| r.bytes_before).sum();
        let after: u64 = reports.iter().map(|r| r.bytes_after).sum();
        println!(
            "total: params {}, bytes {before} -> {after}, factor {:.2}",
            store.parameter_count(),
            before as f64 / after as f64
        );
    }
    eprintln!("wrote quantized container to {}", output.display());
    Ok(())
}

fn cmd_account(weights: &Path, input_cols: usize) -> Result<(), Error> {
    let (net, store) = load_weights(weights)?;
    let plan = derive_plan(&net)?;
    let batch = peak_intermediate_bytes(&net, input_cols);
    let streaming = plan.memory_bytes();
    println!("input_columns: {input_cols}");
    println!("batch_peak_bytes: {batch}");
    println!("stream_buffer_bytes: {streaming}");
    println!(
        "reduction_factor: {:.2}",
        batch as f64 / streaming as f64
    );
    println!("params: {}", store.parameter_count());
    println!("params_float_bytes: {}", store.float_payload_bytes());
    println!(
        "params_quantized_bytes: {}",
        store.quantized_payload_bytes()
    );
    println!("step_macs: {}", plan.step_cost_macs());
    Ok(())
}

fn cmd_simulate(config: &Path) -> Result<(), Error> {
    let text = fs::read_to_string(config)?;
    let cfg = ScenarioConfig::parse(&text)?;
    let out = run_scenario(&cfg)?;

    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("events.csv"), events_to_csv(&out.events))?;
    fs::write(
        dir.join("codetections.csv"),
        codetections_to_csv(&out.bins),
    )?;
    if let Some(stats) = &out.interarrival {
        fs::write(dir.join("interarrival.csv"), interarrival_to_csv(stats))?;
    }
    fs::write(dir.join("energy.txt"), &out.energy_report)?;
    eprintln!(
        "scenario complete: {} events, {} co-detection windows, outputs in {}",
        out.events.len(),
        out.bins.len(),
        dir.display()
    );
    Ok(())
}
