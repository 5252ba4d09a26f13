//! Seeded scenario runner for event-triggered sensor networks. Scenarios
//! are described by a flat key = value config with `#` comments; output is
//! plot-ready CSV plus a key-value energy report.
//!
//! The default mode draws per-node Poisson event schedules directly. The
//! waveform mode synthesizes signals and runs the trigger chain on them,
//! which is only practical for short scenarios.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::codetect::energy::{
    continuous_daily_bytes, daily_acquisition_bytes, estimate_lifetime, EnergyModel,
    BYTES_PER_SAMPLE_24BIT, EVENT_RECORD_OVERHEAD_BYTES,
};
use crate::codetect::synth::{synth_signal, PulseSpec};
use crate::codetect::{
    codetect, detect_events, interarrival_stats, CodetectionBin, EventRecord, InterarrivalStats,
    TriggerConfig, INTERARRIVAL_BIN_S,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Draw event records directly from the configured rates.
    Events,
    /// Synthesize waveforms and run the trigger chain on them.
    Waveform,
}

/// Parsed scenario description.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub mode: SimMode,
    pub nodes: u32,
    pub duration_s: f64,
    pub seed: u64,
    pub events_per_hour_per_node: f64,
    pub mean_event_length_s: f64,
    pub codetect_window_s: f64,
    /// Fixed event onsets applied to every node; overrides the Poisson
    /// schedule when present.
    pub event_times_s: Option<Vec<f64>>,
    pub energy: EnergyModel,
    pub out_dir: String,
    // Waveform-mode settings.
    pub sample_rate: f64,
    pub upper_threshold: f32,
    pub lower_threshold: f32,
    pub post_trigger_interval_s: f64,
    pub pulse_amplitude: f32,
    pub noise_amplitude: f32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: SimMode::Events,
            nodes: 1,
            duration_s: 3600.0,
            seed: 0,
            events_per_hour_per_node: 0.0,
            mean_event_length_s: 3.5,
            codetect_window_s: 0.5,
            event_times_s: None,
            energy: EnergyModel::default(),
            out_dir: ".".into(),
            sample_rate: 1000.0,
            upper_threshold: 0.5,
            lower_threshold: -0.5,
            post_trigger_interval_s: 1.0,
            pulse_amplitude: 1.0,
            noise_amplitude: 0.02,
        }
    }
}

impl ScenarioConfig {
    /// Parses the flat key = value format. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Format(format!("line {}: bad {what}", lineno + 1));
            match key {
                "mode" => {
                    cfg.mode = match value {
                        "events" => SimMode::Events,
                        "waveform" => SimMode::Waveform,
                        _ => return Err(bad("mode")),
                    }
                }
                "nodes" => cfg.nodes = value.parse().map_err(|_| bad("nodes"))?,
                "duration_s" => cfg.duration_s = value.parse().map_err(|_| bad("duration_s"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "events_per_hour_per_node" => {
                    cfg.events_per_hour_per_node =
                        value.parse().map_err(|_| bad("events_per_hour_per_node"))?
                }
                "mean_event_length_s" => {
                    cfg.mean_event_length_s =
                        value.parse().map_err(|_| bad("mean_event_length_s"))?
                }
                "codetect_window_s" => {
                    cfg.codetect_window_s = value.parse().map_err(|_| bad("codetect_window_s"))?
                }
                "event_times_s" => {
                    let times: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    cfg.event_times_s = Some(times.map_err(|_| bad("event_times_s"))?);
                }
                "out_dir" => cfg.out_dir = value.to_string(),
                "sample_rate" => cfg.sample_rate = value.parse().map_err(|_| bad("sample_rate"))?,
                "upper_threshold" => {
                    cfg.upper_threshold = value.parse().map_err(|_| bad("upper_threshold"))?
                }
                "lower_threshold" => {
                    cfg.lower_threshold = value.parse().map_err(|_| bad("lower_threshold"))?
                }
                "post_trigger_interval_s" => {
                    cfg.post_trigger_interval_s =
                        value.parse().map_err(|_| bad("post_trigger_interval_s"))?
                }
                "pulse_amplitude" => {
                    cfg.pulse_amplitude = value.parse().map_err(|_| bad("pulse_amplitude"))?
                }
                "noise_amplitude" => {
                    cfg.noise_amplitude = value.parse().map_err(|_| bad("noise_amplitude"))?
                }
                "battery_capacity_mah" => {
                    cfg.energy.battery_capacity_mah =
                        value.parse().map_err(|_| bad("battery_capacity_mah"))?
                }
                "avg_current_comm_ma" => {
                    cfg.energy.avg_current_comm_ma =
                        value.parse().map_err(|_| bad("avg_current_comm_ma"))?
                }
                "active_current_sense_ma" => {
                    cfg.energy.active_current_sense_ma =
                        value.parse().map_err(|_| bad("active_current_sense_ma"))?
                }
                "sleep_current_sense_ma" => {
                    cfg.energy.sleep_current_sense_ma =
                        value.parse().map_err(|_| bad("sleep_current_sense_ma"))?
                }
                other => {
                    return Err(Error::Format(format!(
                        "line {}: unknown key {other}",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::Parameter("scenario needs at least one node".into()));
        }
        if self.duration_s <= 0.0 {
            return Err(Error::Parameter("duration must be positive".into()));
        }
        if self.mode == SimMode::Waveform {
            let samples = self.duration_s * self.sample_rate;
            if samples > 50_000_000.0 {
                return Err(Error::Parameter(
                    "waveform scenario too large; use events mode".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    /// All events, sorted by timestamp then node.
    pub events: Vec<EventRecord>,
    pub bins: Vec<CodetectionBin>,
    /// Absent when fewer than two events occurred.
    pub interarrival: Option<InterarrivalStats>,
    /// Key-value energy and data-volume report.
    pub energy_report: String,
}

/// Runs a scenario deterministically for its seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut events = Vec::new();
    for node in 0..cfg.nodes {
        match cfg.mode {
            SimMode::Events => events.extend(draw_node_events(cfg, node, &mut rng)),
            SimMode::Waveform => events.extend(synthesize_node_events(cfg, node, &mut rng)?),
        }
    }
    events.sort_by(|a, b| {
        a.event_timestamp
            .total_cmp(&b.event_timestamp)
            .then(a.node_id.cmp(&b.node_id))
    });

    let bins = codetect(&events, cfg.codetect_window_s)?;
    let interarrival = if events.len() >= 2 {
        Some(interarrival_stats(&events, INTERARRIVAL_BIN_S)?)
    } else {
        None
    };
    let energy_report = energy_report(cfg, &events)?;
    Ok(SimOutput {
        events,
        bins,
        interarrival,
        energy_report,
    })
}

fn event_onsets(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if let Some(times) = &cfg.event_times_s {
        return times
            .iter()
            .copied()
            .filter(|t| *t >= 0.0 && *t < cfg.duration_s)
            .collect();
    }
    let rate_per_s = cfg.events_per_hour_per_node / 3600.0;
    if rate_per_s <= 0.0 {
        return Vec::new();
    }
    let mut onsets = Vec::new();
    let mut t = 0.0f64;
    loop {
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / rate_per_s;
        if t >= cfg.duration_s {
            break;
        }
        onsets.push(t);
    }
    onsets
}

fn draw_node_events(cfg: &ScenarioConfig, node: u32, rng: &mut ChaCha8Rng) -> Vec<EventRecord> {
    event_onsets(cfg, rng)
        .into_iter()
        .map(|t| {
            let peak: f32 = rng.gen_range(0.05..2.0);
            EventRecord {
                node_id: node,
                event_timestamp: t,
                duration: cfg.mean_event_length_s,
                pos_trigger_count: rng.gen_range(1..6),
                neg_trigger_count: rng.gen_range(0..4),
                peak_amplitude: peak,
                peak_position: rng.gen_range(0.0..cfg.mean_event_length_s),
            }
        })
        .collect()
}

fn synthesize_node_events(
    cfg: &ScenarioConfig,
    node: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<EventRecord>> {
    let pulses: Vec<PulseSpec> = event_onsets(cfg, rng)
        .into_iter()
        .map(|t| PulseSpec::at(t, cfg.pulse_amplitude))
        .collect();
    let signal = synth_signal(
        cfg.duration_s,
        cfg.sample_rate,
        &pulses,
        cfg.noise_amplitude,
        rng,
    );
    let trigger = TriggerConfig {
        upper_threshold: cfg.upper_threshold,
        lower_threshold: cfg.lower_threshold,
        bias: 0.0,
        post_trigger_interval: cfg.post_trigger_interval_s,
        sample_rate: cfg.sample_rate,
    };
    detect_events(&signal, &trigger, node)
}

fn energy_report(cfg: &ScenarioConfig, events: &[EventRecord]) -> Result<String> {
    let hours = cfg.duration_s / 3600.0;
    let total = events.len() as f64;
    let rate_per_sensor = total / (cfg.nodes as f64 * hours);
    let on_time: f64 = events.iter().map(|e| e.duration).sum();
    let duty = (on_time / (cfg.nodes as f64 * cfg.duration_s)).clamp(0.0, 1.0);
    let mean_len = if events.is_empty() {
        0.0
    } else {
        on_time / total
    };
    let report = estimate_lifetime(&cfg.energy, duty)?;

    let daily = daily_acquisition_bytes(
        rate_per_sensor,
        mean_len,
        cfg.sample_rate,
        BYTES_PER_SAMPLE_24BIT,
        EVENT_RECORD_OVERHEAD_BYTES,
    );
    let continuous = continuous_daily_bytes(cfg.sample_rate, BYTES_PER_SAMPLE_24BIT);

    let mut out = String::new();
    out.push_str(&format!("nodes: {}\n", cfg.nodes));
    out.push_str(&format!("duration_s: {:.3}\n", cfg.duration_s));
    out.push_str(&format!("events_total: {}\n", events.len()));
    out.push_str(&format!(
        "events_per_hour_per_sensor: {rate_per_sensor:.4}\n"
    ));
    out.push_str(&format!("mean_event_length_s: {mean_len:.4}\n"));
    out.push_str(&format!("duty_cycle_percent: {:.4}\n", duty * 100.0));
    out.push_str(&format!(
        "avg_current_sense_ma: {:.4}\n",
        report.avg_current_sense_ma
    ));
    out.push_str(&format!(
        "avg_current_comm_ma: {:.4}\n",
        cfg.energy.avg_current_comm_ma
    ));
    out.push_str(&format!(
        "avg_current_total_ma: {:.4}\n",
        report.avg_current_total_ma
    ));
    out.push_str(&format!(
        "energy_per_day_mah: {:.4}\n",
        report.energy_per_day_mah
    ));
    out.push_str(&format!(
        "estimated_lifetime_days: {:.2}\n",
        report.lifetime_days
    ));
    out.push_str(&format!(
        "daily_acquisition_bytes_per_sensor: {daily:.0}\n"
    ));
    out.push_str(&format!(
        "continuous_daily_bytes_per_sensor: {continuous:.0}\n"
    ));
    if daily > 0.0 {
        out.push_str(&format!(
            "continuous_to_triggered_ratio: {:.2}\n",
            continuous / daily
        ));
    }
    Ok(out)
}
