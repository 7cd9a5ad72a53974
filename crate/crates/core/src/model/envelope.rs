//! Polarization mode envelopes ζ_{σ,k}(t) of the two beam-splitter inputs.
//!
//! A single polarization modulator switches the laser between H and V
//! before the field is split into two arms. The modulator is lossless, so
//! a square wave describing the fraction of power routed to H fixes both
//! amplitudes: `ζ_H = sqrt(s)` and `ζ_V = sqrt(1 - s)`. Arm 1 carries the
//! same pattern as arm 2 delayed by the optical delay τ_Opt.

use serde::{Deserialize, Serialize};

use super::waveform::SquareWaveSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolarizationAxis {
    H,
    V,
}

impl PolarizationAxis {
    pub const ALL: [PolarizationAxis; 2] = [PolarizationAxis::H, PolarizationAxis::V];
}

/// Beam-splitter input arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::One, Arm::Two];

    fn index(self) -> usize {
        match self {
            Arm::One => 0,
            Arm::Two => 1,
        }
    }
}

/// Envelope amplitudes of the four input modes at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeAmplitudes {
    /// `[arm 1, arm 2]`
    pub h: [f64; 2],
    /// `[arm 1, arm 2]`
    pub v: [f64; 2],
}

impl ModeAmplitudes {
    pub fn get(&self, axis: PolarizationAxis, arm: Arm) -> f64 {
        match axis {
            PolarizationAxis::H => self.h[arm.index()],
            PolarizationAxis::V => self.v[arm.index()],
        }
    }

    pub fn axis(&self, axis: PolarizationAxis) -> [f64; 2] {
        match axis {
            PolarizationAxis::H => self.h,
            PolarizationAxis::V => self.v,
        }
    }

    /// Summed intensity of all four modes.
    pub fn total_intensity(&self) -> f64 {
        self.h.iter().chain(self.v.iter()).map(|z| z * z).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Modulation {
    /// Unmodulated laser, H polarized in both arms.
    Continuous,
    /// H-power square wave per arm, arm 1 already delayed by τ_Opt.
    Square([SquareWaveSpec; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSet {
    modulation: Modulation,
    tau_opt: f64,
}

impl EnvelopeSet {
    /// Constant H-polarized envelopes: the plain CW HOM configuration.
    pub fn continuous() -> Self {
        EnvelopeSet {
            modulation: Modulation::Continuous,
            tau_opt: 0.0,
        }
    }

    /// Square-wave modulation with the same duty cycle in both arms.
    ///
    /// `base` must have levels 0 → 1; it describes the H power fraction of
    /// arm 2, and arm 1 is the same wave delayed by `tau_opt`.
    pub fn square(base: SquareWaveSpec, tau_opt: f64) -> Result<Self> {
        Self::with_arm_duties(base, tau_opt, base.duty, base.duty)
    }

    pub fn with_arm_duties(
        base: SquareWaveSpec,
        tau_opt: f64,
        duty_arm1: f64,
        duty_arm2: f64,
    ) -> Result<Self> {
        base.validate()?;
        if base.low_level != 0.0 || base.high_level != 1.0 {
            return Err(Error::config("levels", "envelope base wave must run 0 -> 1"));
        }
        if !tau_opt.is_finite() {
            return Err(Error::config("tau_opt", "must be finite"));
        }
        let arm2 = SquareWaveSpec {
            duty: duty_arm2,
            ..base
        };
        let arm1 = SquareWaveSpec {
            duty: duty_arm1,
            phase_offset: base.phase_offset + tau_opt,
            ..base
        };
        arm1.validate().map_err(|e| rename(e, "duty_arm1"))?;
        arm2.validate().map_err(|e| rename(e, "duty_arm2"))?;
        Ok(EnvelopeSet {
            modulation: Modulation::Square([arm1, arm2]),
            tau_opt,
        })
    }

    pub fn tau_opt(&self) -> f64 {
        self.tau_opt
    }

    /// Modulation period, `None` for unmodulated fields.
    pub fn period(&self) -> Option<f64> {
        match &self.modulation {
            Modulation::Continuous => None,
            Modulation::Square(arms) => Some(arms[1].period),
        }
    }

    pub fn is_modulated(&self) -> bool {
        matches!(self.modulation, Modulation::Square(_))
    }

    /// H power fraction of `arm` at time `t`.
    pub fn h_power(&self, arm: Arm, t: f64) -> f64 {
        match &self.modulation {
            Modulation::Continuous => 1.0,
            Modulation::Square(arms) => arms[arm.index()].high_fraction(t).clamp(0.0, 1.0),
        }
    }

    pub fn amplitude(&self, axis: PolarizationAxis, arm: Arm, t: f64) -> f64 {
        let s = self.h_power(arm, t);
        match axis {
            PolarizationAxis::H => s.sqrt(),
            PolarizationAxis::V => (1.0 - s).sqrt(),
        }
    }

    pub fn amplitudes(&self, t: f64) -> ModeAmplitudes {
        let s1 = self.h_power(Arm::One, t);
        let s2 = self.h_power(Arm::Two, t);
        ModeAmplitudes {
            h: [s1.sqrt(), s2.sqrt()],
            v: [(1.0 - s1).sqrt(), (1.0 - s2).sqrt()],
        }
    }
}

fn rename(err: Error, field: &str) -> Error {
    match err {
        Error::Config { field: f, reason } if f == "duty" => Error::Config {
            field: field.to_string(),
            reason,
        },
        other => other,
    }
}

/// ζ_{σ,k}(t).
pub fn envelope(env: &EnvelopeSet, axis: PolarizationAxis, arm: Arm, t: f64) -> f64 {
    env.amplitude(axis, arm, t)
}
