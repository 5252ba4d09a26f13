//! Seeded synthetic waveforms for exercising the trigger chain: damped
//! sinusoid pulses on a uniform noise floor. Not a geophysics simulation.

use rand::Rng;

/// One synthetic event in a waveform.
#[derive(Debug, Clone, Copy)]
pub struct PulseSpec {
    /// Onset, seconds from stream start.
    pub time_s: f64,
    pub amplitude: f32,
    pub frequency_hz: f64,
    /// Exponential decay rate, 1/s.
    pub decay: f64,
    /// Synthesized extent of the pulse, seconds.
    pub duration_s: f64,
}

impl PulseSpec {
    pub fn at(time_s: f64, amplitude: f32) -> Self {
        Self {
            time_s,
            amplitude,
            frequency_hz: 40.0,
            decay: 3.0,
            duration_s: 1.5,
        }
    }
}

/// Renders pulses over uniform noise in [-noise_amplitude, noise_amplitude].
pub fn synth_signal<R: Rng>(
    duration_s: f64,
    sample_rate: f64,
    pulses: &[PulseSpec],
    noise_amplitude: f32,
    rng: &mut R,
) -> Vec<f32> {
    let n = (duration_s * sample_rate).round() as usize;
    let mut signal: Vec<f32> = if noise_amplitude > 0.0 {
        (0..n)
            .map(|_| rng.gen_range(-noise_amplitude..noise_amplitude))
            .collect()
    } else {
        vec![0.0; n]
    };
    for pulse in pulses {
        let start = (pulse.time_s * sample_rate).round() as usize;
        let len = (pulse.duration_s * sample_rate).round() as usize;
        for i in 0..len {
            let idx = start + i;
            if idx >= n {
                break;
            }
            let tau = i as f64 / sample_rate;
            let value = f64::from(pulse.amplitude)
                * (-pulse.decay * tau).exp()
                * (2.0 * std::f64::consts::PI * pulse.frequency_hz * tau).sin();
            signal[idx] += value as f32;
        }
    }
    signal
}
