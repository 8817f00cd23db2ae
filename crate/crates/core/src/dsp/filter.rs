//! Butterworth IIR filters as cascaded second-order sections, applied
//! forward-backward for zero phase.
//!
//! Sections come from the bilinear transform with frequency prewarping, so
//! the -3 dB points sit exactly at the requested cutoffs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::DspError;

/// Direct-form II transposed section. First-order sections have `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// State that holds the section at steady state for a constant input `x`.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let y = self.dc_gain() * x;
        let z2 = self.b2 * x - self.a2 * y;
        let z1 = self.b1 * x - self.a1 * y + z2;
        [z1, z2]
    }

    fn response(&self, w: f64) -> (f64, f64) {
        // H(e^{jw}) = (b0 + b1 e^{-jw} + b2 e^{-2jw}) / (1 + a1 e^{-jw} + a2 e^{-2jw})
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let nr = self.b0 + self.b1 * c1 + self.b2 * c2;
        let ni = self.b1 * s1 + self.b2 * s2;
        let dr = 1.0 + self.a1 * c1 + self.a2 * c2;
        let di = self.a1 * s1 + self.a2 * s2;
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

#[derive(Clone, Copy)]
enum Kind {
    Low,
    High,
}

fn butterworth(kind: Kind, order: usize, cutoff_hz: f64, fs: f64) -> Result<SosFilter, DspError> {
    if order == 0 {
        return Err(DspError::Parameter("filter order must be >= 1".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(DspError::Parameter(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, fs/2 = {})",
            fs / 2.0
        )));
    }
    let k = (PI * cutoff_hz / fs).tan();
    let k2 = k * k;
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for i in 0..order / 2 {
        let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.sin());
        let norm = 1.0 / (1.0 + k / q + k2);
        let a1 = 2.0 * (k2 - 1.0) * norm;
        let a2 = (1.0 - k / q + k2) * norm;
        let (b0, b1, b2) = match kind {
            Kind::Low => (k2 * norm, 2.0 * k2 * norm, k2 * norm),
            Kind::High => (norm, -2.0 * norm, norm),
        };
        sections.push(Biquad { b0, b1, b2, a1, a2 });
    }
    if order % 2 == 1 {
        let a1 = (k - 1.0) / (k + 1.0);
        let (b0, b1) = match kind {
            Kind::Low => (k / (1.0 + k), k / (1.0 + k)),
            Kind::High => (1.0 / (1.0 + k), -1.0 / (1.0 + k)),
        };
        sections.push(Biquad { b0, b1, b2: 0.0, a1, a2: 0.0 });
    }
    Ok(SosFilter { sections })
}

impl SosFilter {
    pub fn butter_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Self, DspError> {
        butterworth(Kind::Low, order, cutoff_hz, fs)
    }

    pub fn butter_highpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Self, DspError> {
        butterworth(Kind::High, order, cutoff_hz, fs)
    }

    pub fn then(mut self, other: SosFilter) -> Self {
        self.sections.extend(other.sections);
        self
    }

    /// Single causal pass, started at steady state for the first sample.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let Some(&x0) = y.first() else { break };
            let [mut z1, mut z2] = s.steady_state(x0);
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b0 * xin + z1;
                z1 = s.b1 * xin - s.a1 * out + z2;
                z2 = s.b2 * xin - s.a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Forward-backward filtering with `pad` samples of mirror padding per side.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = pad.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend(x[1..=pad].iter().rev());
        ext.extend_from_slice(x);
        ext.extend(x[n - 1 - pad..n - 1].iter().rev());
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }

    /// Magnitude response of one pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                (re * re + im * im).sqrt()
            })
            .product()
    }
}

/// Band-pass realization: Butterworth high-pass at `low_hz` cascaded with a
/// Butterworth low-pass at `high_hz`, applied forward-backward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandpassDesign {
    pub low_hz: f64,
    pub high_hz: f64,
    pub highpass_order: usize,
    pub lowpass_order: usize,
    /// Mirror padding per side, seconds.
    pub pad_seconds: f64,
}

impl Default for BandpassDesign {
    fn default() -> Self {
        Self {
            low_hz: 0.5,
            high_hz: 40.0,
            highpass_order: 4,
            lowpass_order: 6,
            pad_seconds: 1.0,
        }
    }
}

impl BandpassDesign {
    pub fn build(&self, fs: f64) -> Result<SosFilter, DspError> {
        if !(fs > 2.0 * self.high_hz) {
            return Err(DspError::Parameter(format!(
                "fs = {fs} Hz must exceed 2 x {} Hz",
                self.high_hz
            )));
        }
        if !(self.low_hz < self.high_hz) {
            return Err(DspError::Parameter("low_hz must be below high_hz".into()));
        }
        Ok(SosFilter::butter_highpass(self.highpass_order, self.low_hz, fs)?
            .then(SosFilter::butter_lowpass(self.lowpass_order, self.high_hz, fs)?))
    }

    pub fn apply(&self, samples: &[f64], fs: f64) -> Result<Vec<f64>, DspError> {
        let filter = self.build(fs)?;
        let need = fs.ceil() as usize;
        if samples.len() < need {
            return Err(DspError::TooShort {
                got: samples.len(),
                need,
            });
        }
        let pad = (self.pad_seconds * fs).round() as usize;
        Ok(filter.filtfilt(samples, pad))
    }
}

/// Zero-phase band-pass between `lo` and `hi` Hz with the default orders.
pub fn bandpass(samples: &[f64], fs: f64, lo: f64, hi: f64) -> Result<Vec<f64>, DspError> {
    BandpassDesign {
        low_hz: lo,
        high_hz: hi,
        ..Default::default()
    }
    .apply(samples, fs)
}
