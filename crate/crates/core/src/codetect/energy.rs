//! Current, energy and lifetime arithmetic for an event-triggered sensor
//! node, plus the data-volume model and the F1 metric.

use crate::error::{Error, Result};

/// Current draw and battery parameters of one node. Defaults are the lab
/// measurements of the reference platform; the communication average is a
/// field-measured input, not derived from traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub active_current_sense_ma: f64,
    pub sleep_current_sense_ma: f64,
    pub active_current_comm_ma: f64,
    pub sleep_current_comm_ma: f64,
    pub avg_current_comm_ma: f64,
    pub battery_capacity_mah: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            active_current_sense_ma: 35.0,
            sleep_current_sense_ma: 0.035,
            active_current_comm_ma: 28.0,
            sleep_current_comm_ma: 0.005,
            avg_current_comm_ma: 0.845,
            battery_capacity_mah: 13_000.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.active_current_sense_ma,
            self.sleep_current_sense_ma,
            self.active_current_comm_ma,
            self.sleep_current_comm_ma,
            self.avg_current_comm_ma,
            self.battery_capacity_mah,
        ];
        if all.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Parameter("currents must be non-negative".into()));
        }
        if self.sleep_current_sense_ma > self.active_current_sense_ma
            || self.sleep_current_comm_ma > self.active_current_comm_ma
        {
            return Err(Error::Parameter("sleep current exceeds active current".into()));
        }
        Ok(())
    }
}

/// Fraction of time the sensing chain is active, capped at 1.
pub fn duty_cycle(events_per_hour: f64, mean_event_length_s: f64) -> f64 {
    (events_per_hour * mean_event_length_s / 3600.0).clamp(0.0, 1.0)
}

/// Lifetime estimate broken into its intermediate quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeReport {
    pub avg_current_sense_ma: f64,
    pub avg_current_total_ma: f64,
    pub energy_per_day_mah: f64,
    pub lifetime_days: f64,
}

/// Duty-weighted sensing current plus the communication average, scaled
/// to daily energy and battery lifetime.
pub fn estimate_lifetime(model: &EnergyModel, duty: f64) -> Result<LifetimeReport> {
    model.validate()?;
    if !(0.0..=1.0).contains(&duty) {
        return Err(Error::Parameter(format!("duty {duty} outside [0, 1]")));
    }
    let avg_sense =
        duty * model.active_current_sense_ma + (1.0 - duty) * model.sleep_current_sense_ma;
    let total = avg_sense + model.avg_current_comm_ma;
    if total <= 0.0 {
        return Err(Error::UndefinedLifetime("total current is zero".into()));
    }
    let energy_per_day = 24.0 * total;
    Ok(LifetimeReport {
        avg_current_sense_ma: avg_sense,
        avg_current_total_ma: total,
        energy_per_day_mah: energy_per_day,
        lifetime_days: model.battery_capacity_mah / energy_per_day,
    })
}

/// Bytes of one raw 24-bit sample.
pub const BYTES_PER_SAMPLE_24BIT: f64 = 3.0;
/// Fixed packet overhead charged per event record.
pub const EVENT_RECORD_OVERHEAD_BYTES: f64 = 32.0;

/// Modeled bytes acquired per sensor per day under event triggering.
pub fn daily_acquisition_bytes(
    events_per_hour_per_sensor: f64,
    mean_event_length_s: f64,
    sample_rate_hz: f64,
    bytes_per_sample: f64,
    record_overhead_bytes: f64,
) -> f64 {
    let per_event = mean_event_length_s * sample_rate_hz * bytes_per_sample + record_overhead_bytes;
    events_per_hour_per_sensor * 24.0 * per_event
}

/// Bytes per sensor per day when sampling continuously.
pub fn continuous_daily_bytes(sample_rate_hz: f64, bytes_per_sample: f64) -> f64 {
    86_400.0 * sample_rate_hz * bytes_per_sample
}

/// F1 = 2 tp / (2 tp + fn + fp). Undefined when all three counts are zero.
pub fn f1_score(tp: u64, fp: u64, fn_: u64) -> Result<f64> {
    if tp == 0 && fp == 0 && fn_ == 0 {
        return Err(Error::UndefinedMetric(
            "F1 undefined for an empty confusion matrix".into(),
        ));
    }
    Ok(2.0 * tp as f64 / (2.0 * tp as f64 + fn_ as f64 + fp as f64))
}
