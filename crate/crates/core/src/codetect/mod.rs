//! Digital model of the event-triggered sensing chain: dual-threshold
//! triggering with a post-trigger quiet interval, event records, and
//! network-level aggregation (co-detection windows, inter-arrival
//! statistics).

pub mod energy;
pub mod sim;
pub mod synth;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Dual-sided trigger settings. The signal is biased; an event opens on a
/// rising crossing of the upper threshold or a falling crossing of the
/// lower one, and closes once the signal has stayed inside the band for
/// the post-trigger interval.
#[derive(Debug, Clone, Copy)]
pub struct TriggerConfig {
    pub upper_threshold: f32,
    pub lower_threshold: f32,
    pub bias: f32,
    /// Quiet seconds required to close an event.
    pub post_trigger_interval: f64,
    pub sample_rate: f64,
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower_threshold < self.bias && self.bias < self.upper_threshold) {
            return Err(Error::Parameter(format!(
                "thresholds must straddle the bias: {} < {} < {}",
                self.lower_threshold, self.bias, self.upper_threshold
            )));
        }
        if self.post_trigger_interval <= 0.0 || self.sample_rate <= 0.0 {
            return Err(Error::Parameter(
                "post-trigger interval and sample rate must be positive".into(),
            ));
        }
        Ok(())
    }

    fn post_samples(&self) -> u64 {
        (self.post_trigger_interval * self.sample_rate).round() as u64
    }
}

/// One triggered event as assembled by the acquisition chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub node_id: u32,
    /// Seconds from stream start to the opening crossing.
    pub event_timestamp: f64,
    /// Seconds from the opening crossing until the close, post-trigger
    /// interval included.
    pub duration: f64,
    pub pos_trigger_count: u32,
    pub neg_trigger_count: u32,
    /// Largest |sample - bias| while the event was open.
    pub peak_amplitude: f32,
    /// Seconds from event start to the peak.
    pub peak_position: f64,
}

#[derive(Debug, Clone, Copy)]
struct ActiveEvent {
    start_index: u64,
    last_outside_index: u64,
    pos_count: u32,
    neg_count: u32,
    peak: f32,
    peak_index: u64,
}

/// Streaming trigger state machine. Feeding the same samples in different
/// chunk sizes produces identical records.
#[derive(Debug, Clone)]
pub struct EventDetector {
    cfg: TriggerConfig,
    node_id: u32,
    index: u64,
    prev: Option<f32>,
    active: Option<ActiveEvent>,
}

impl EventDetector {
    pub fn new(node_id: u32, cfg: TriggerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            node_id,
            index: 0,
            prev: None,
            active: None,
        })
    }

    /// Consumes samples, returning events that closed inside this chunk.
    pub fn push(&mut self, samples: &[f32]) -> Vec<EventRecord> {
        let mut closed = Vec::new();
        let post = self.cfg.post_samples();
        for &x in samples {
            let i = self.index;
            self.index += 1;
            let outside = x > self.cfg.upper_threshold || x < self.cfg.lower_threshold;
            let rising = x > self.cfg.upper_threshold
                && self.prev.is_none_or(|p| p <= self.cfg.upper_threshold);
            let falling = x < self.cfg.lower_threshold
                && self.prev.is_none_or(|p| p >= self.cfg.lower_threshold);
            self.prev = Some(x);

            match self.active.as_mut() {
                Some(ev) => {
                    let amplitude = (x - self.cfg.bias).abs();
                    if amplitude > ev.peak {
                        ev.peak = amplitude;
                        ev.peak_index = i;
                    }
                    if rising {
                        ev.pos_count += 1;
                    }
                    if falling {
                        ev.neg_count += 1;
                    }
                    if outside {
                        ev.last_outside_index = i;
                    } else if i - ev.last_outside_index >= post {
                        let ev = self.active.take().unwrap();
                        closed.push(self.close(ev));
                    }
                }
                None => {
                    if rising || falling {
                        self.active = Some(ActiveEvent {
                            start_index: i,
                            last_outside_index: i,
                            pos_count: rising as u32,
                            neg_count: falling as u32,
                            peak: (x - self.cfg.bias).abs(),
                            peak_index: i,
                        });
                    }
                }
            }
        }
        closed
    }

    /// Closes a still-open event as if the stream had stayed quiet.
    pub fn finish(&mut self) -> Option<EventRecord> {
        self.active.take().map(|ev| self.close(ev))
    }

    fn close(&self, ev: ActiveEvent) -> EventRecord {
        let fs = self.cfg.sample_rate;
        EventRecord {
            node_id: self.node_id,
            event_timestamp: ev.start_index as f64 / fs,
            duration: (ev.last_outside_index + 1 - ev.start_index) as f64 / fs
                + self.cfg.post_trigger_interval,
            pos_trigger_count: ev.pos_count,
            neg_trigger_count: ev.neg_count,
            peak_amplitude: ev.peak,
            peak_position: (ev.peak_index - ev.start_index) as f64 / fs,
        }
    }
}

/// Runs the trigger over a complete signal.
pub fn detect_events(samples: &[f32], cfg: &TriggerConfig, node_id: u32) -> Result<Vec<EventRecord>> {
    let mut detector = EventDetector::new(node_id, *cfg)?;
    let mut events = detector.push(samples);
    events.extend(detector.finish());
    Ok(events)
}

/// How event timestamps are grouped into co-detection windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Non-overlapping windows anchored at multiples of the width.
    Tumbling,
    /// One window starting at each distinct event timestamp.
    Sliding,
}

/// One co-detection window with at least one event in it.
#[derive(Debug, Clone, PartialEq)]
pub struct CodetectionBin {
    pub window_start: f64,
    pub distinct_sensor_count: usize,
    pub max_peak_amplitude: f32,
}

/// Tumbling-window co-detection, the default aggregation.
pub fn codetect(events: &[EventRecord], window: f64) -> Result<Vec<CodetectionBin>> {
    codetect_windows(events, window, WindowMode::Tumbling)
}

pub fn codetect_windows(
    events: &[EventRecord],
    window: f64,
    mode: WindowMode,
) -> Result<Vec<CodetectionBin>> {
    if window <= 0.0 {
        return Err(Error::Parameter("window must be positive".into()));
    }
    match mode {
        WindowMode::Tumbling => {
            let mut bins: BTreeMap<u64, (Vec<u32>, f32)> = BTreeMap::new();
            for ev in events {
                let k = (ev.event_timestamp / window).floor() as u64;
                let entry = bins.entry(k).or_insert((Vec::new(), f32::NEG_INFINITY));
                if !entry.0.contains(&ev.node_id) {
                    entry.0.push(ev.node_id);
                }
                entry.1 = entry.1.max(ev.peak_amplitude);
            }
            Ok(bins
                .into_iter()
                .map(|(k, (nodes, peak))| CodetectionBin {
                    window_start: k as f64 * window,
                    distinct_sensor_count: nodes.len(),
                    max_peak_amplitude: peak,
                })
                .collect())
        }
        WindowMode::Sliding => {
            let mut sorted: Vec<&EventRecord> = events.iter().collect();
            sorted.sort_by(|a, b| a.event_timestamp.total_cmp(&b.event_timestamp));
            let mut bins = Vec::new();
            let mut last_start = f64::NEG_INFINITY;
            for (i, ev) in sorted.iter().enumerate() {
                let start = ev.event_timestamp;
                if start == last_start {
                    continue;
                }
                last_start = start;
                let mut nodes = Vec::new();
                let mut peak = f32::NEG_INFINITY;
                for other in &sorted[i..] {
                    if other.event_timestamp >= start + window {
                        break;
                    }
                    if !nodes.contains(&other.node_id) {
                        nodes.push(other.node_id);
                    }
                    peak = peak.max(other.peak_amplitude);
                }
                bins.push(CodetectionBin {
                    window_start: start,
                    distinct_sensor_count: nodes.len(),
                    max_peak_amplitude: peak,
                });
            }
            Ok(bins)
        }
    }
}

/// Default histogram bin width for inter-arrival statistics, seconds.
pub const INTERARRIVAL_BIN_S: f64 = 0.1;

/// Network-wide inter-arrival statistics.
#[derive(Debug, Clone)]
pub struct InterarrivalStats {
    /// Gaps between consecutive events across all nodes, in time order.
    pub deltas: Vec<f64>,
    pub mean: f64,
    pub bin_width: f64,
    /// (bin start, count) for every non-empty bin up to the largest delta.
    pub histogram: Vec<(f64, usize)>,
    /// (bin end, cumulative fraction of deltas below it).
    pub cdf: Vec<(f64, f64)>,
}

impl InterarrivalStats {
    /// Fraction of gaps strictly below `threshold` seconds.
    pub fn fraction_below(&self, threshold: f64) -> f64 {
        let n = self.deltas.len();
        self.deltas.iter().filter(|&&d| d < threshold).count() as f64 / n as f64
    }
}

pub fn interarrival_stats(events: &[EventRecord], bin_width: f64) -> Result<InterarrivalStats> {
    if events.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 events, got {}",
            events.len()
        )));
    }
    if bin_width <= 0.0 {
        return Err(Error::Parameter("bin width must be positive".into()));
    }
    let mut times: Vec<f64> = events.iter().map(|e| e.event_timestamp).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let deltas: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;

    let max_delta = deltas.iter().cloned().fold(0.0f64, f64::max);
    let bins = (max_delta / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; bins];
    for &d in &deltas {
        let k = ((d / bin_width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let histogram: Vec<(f64, usize)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k as f64 * bin_width, c))
        .collect();
    let total = deltas.len() as f64;
    let mut running = 0usize;
    let cdf = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            running += c;
            ((k + 1) as f64 * bin_width, running as f64 / total)
        })
        .collect();

    Ok(InterarrivalStats {
        deltas,
        mean,
        bin_width,
        histogram,
        cdf,
    })
}

/// CSV with the record layout used by the tooling:
/// `node_id,timestamp_s,duration_s,pos_trig,neg_trig,peak,peak_pos_s`.
pub fn events_to_csv(events: &[EventRecord]) -> String {
    let mut out = String::from("node_id,timestamp_s,duration_s,pos_trig,neg_trig,peak,peak_pos_s\n");
    for ev in events {
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{},{:.6},{:.6}\n",
            ev.node_id,
            ev.event_timestamp,
            ev.duration,
            ev.pos_trigger_count,
            ev.neg_trigger_count,
            ev.peak_amplitude,
            ev.peak_position
        ));
    }
    out
}

/// CSV mirroring the co-detection plot axes.
pub fn codetections_to_csv(bins: &[CodetectionBin]) -> String {
    let mut out = String::from("window_start_s,distinct_sensor_count,max_peak_amplitude\n");
    for bin in bins {
        out.push_str(&format!(
            "{:.6},{},{:.6}\n",
            bin.window_start, bin.distinct_sensor_count, bin.max_peak_amplitude
        ));
    }
    out
}

/// CSV of the inter-arrival histogram plus cumulative density.
pub fn interarrival_to_csv(stats: &InterarrivalStats) -> String {
    let mut out = String::from("bin_start_s,count,cdf_at_bin_end\n");
    let mut counts = std::collections::BTreeMap::new();
    for (start, count) in &stats.histogram {
        counts.insert((start / stats.bin_width).round() as u64, *count);
    }
    for (end, cdf) in &stats.cdf {
        let k = (end / stats.bin_width).round() as u64 - 1;
        let count = counts.get(&k).copied().unwrap_or(0);
        out.push_str(&format!(
            "{:.6},{},{:.6}\n",
            k as f64 * stats.bin_width,
            count,
            cdf
        ));
    }
    out
}
