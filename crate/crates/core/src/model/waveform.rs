//! Trapezoidal square waves and the symmetric triangle wave.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A periodic two-level wave with optional linear switching ramps.
///
/// Within one period, measured from `phase_offset`, the wave sits at
/// `high_level` for the first `duty` fraction and at `low_level` for the
/// rest. Each switching instant is smoothed by a linear ramp of duration
/// `edge_time` centred on it. With `edge_time == 0` the value at a rising
/// instant is `high_level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareWaveSpec {
    /// ns
    pub period: f64,
    pub duty: f64,
    /// ns
    pub phase_offset: f64,
    pub low_level: f64,
    pub high_level: f64,
    /// Full duration of each linear ramp, ns.
    pub edge_time: f64,
}

impl SquareWaveSpec {
    /// A 0 → 1 wave starting high at t = 0 with instantaneous switching.
    pub fn new(period: f64, duty: f64) -> Result<Self> {
        let spec = SquareWaveSpec {
            period,
            duty,
            phase_offset: 0.0,
            low_level: 0.0,
            high_level: 1.0,
            edge_time: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_levels(mut self, low: f64, high: f64) -> Self {
        self.low_level = low;
        self.high_level = high;
        self
    }

    pub fn with_edge_time(mut self, edge_time: f64) -> Result<Self> {
        self.edge_time = edge_time;
        self.validate()?;
        Ok(self)
    }

    pub fn with_phase_offset(mut self, offset: f64) -> Self {
        self.phase_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::config("period", "must be finite and > 0"));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::config("duty", "must lie in (0, 1)"));
        }
        if !self.phase_offset.is_finite() {
            return Err(Error::config("phase_offset", "must be finite"));
        }
        if !(self.low_level.is_finite() && self.high_level.is_finite()) {
            return Err(Error::config("levels", "must be finite"));
        }
        if !(self.edge_time.is_finite() && self.edge_time >= 0.0) {
            return Err(Error::config("edge_time", "must be finite and >= 0"));
        }
        let high_span = self.duty * self.period;
        let low_span = (1.0 - self.duty) * self.period;
        if self.edge_time > 0.0 && (high_span <= self.edge_time || low_span <= self.edge_time) {
            return Err(Error::config(
                "edge_time",
                format!(
                    "{} ns ramps do not fit inside the {high_span} ns high and {low_span} ns low levels",
                    self.edge_time
                ),
            ));
        }
        Ok(())
    }

    /// Level at time `t`. Assumes the spec is valid.
    pub fn level(&self, t: f64) -> f64 {
        let frac = self.high_fraction(t);
        self.low_level + (self.high_level - self.low_level) * frac
    }

    /// Position between the two levels: 1 at `high_level`, 0 at `low_level`.
    pub fn high_fraction(&self, t: f64) -> f64 {
        let p = self.period;
        let x = (t - self.phase_offset).rem_euclid(p);
        let fall = self.duty * p;
        let e = self.edge_time;
        if e == 0.0 {
            return if x < fall { 1.0 } else { 0.0 };
        }
        let h = 0.5 * e;
        if x < h {
            0.5 + x / e
        } else if x >= p - h {
            0.5 + (x - p) / e
        } else if x < fall - h {
            1.0
        } else if x <= fall + h {
            0.5 - (x - fall) / e
        } else {
            0.0
        }
    }
}

/// Checked evaluation of a square wave at time `t`.
pub fn eval_square_wave(spec: &SquareWaveSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.level(t))
}

/// Symmetric triangle wave in `[0, 1]`: 1 at zero shift, 0 at half a period.
///
/// Equals the normalised overlap `(1 + <s(t) s(t - shift)>) / 2` of two
/// identical 50 % duty ±1 square waves, averaged over one period.
pub fn eval_triangle_wave(period: f64, t: f64) -> f64 {
    let r = t - period * (t / period).round();
    1.0 - 2.0 * r.abs() / period
}
