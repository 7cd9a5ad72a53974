//! Closed-form correlation functions used as the oracle for simulated data.
//!
//! All normalized values are scaled so that coincidences between
//! distinguishable (non-interfering) fields equal 1.

mod polarization;
mod rate;

use serde::{Deserialize, Serialize};

use crate::model::{eval_triangle_wave, CoherenceSpec};
use crate::{Error, Result};

pub use polarization::{
    cross_correlation, g2_from_amplitudes, g2_pol_general, g2_pol_ideal, mean_pol_g2,
    polarization_terms, t0_averaged_g2, t0_averaged_terms, windowed_phase_profile, CorrelationTerms, FoldGeometry,
    G2Point,
};
pub use rate::coincidence_rate;

/// What the abscissa of a [`G2Curve`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaKind {
    /// Detection-time difference τ = t₄ − t₃.
    DetectionDelay,
    /// Time since the most recent modulator trigger, t₀.
    ModulatorPhase,
    /// Optical delay τ_Opt between the two inputs.
    OpticalDelay,
}

impl AbscissaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AbscissaKind::DetectionDelay => "tau",
            AbscissaKind::ModulatorPhase => "t0",
            AbscissaKind::OpticalDelay => "tau_opt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tau" => Some(AbscissaKind::DetectionDelay),
            "t0" => Some(AbscissaKind::ModulatorPhase),
            "tau_opt" => Some(AbscissaKind::OpticalDelay),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// ns
    pub x: f64,
    pub value: f64,
    /// 1σ, when known.
    pub uncertainty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Curve {
    pub kind: AbscissaKind,
    pub samples: Vec<CurveSample>,
}

impl G2Curve {
    pub fn new(kind: AbscissaKind) -> Self {
        G2Curve {
            kind,
            samples: Vec::new(),
        }
    }

    pub fn from_points(kind: AbscissaKind, points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        G2Curve {
            kind,
            samples: points
                .into_iter()
                .map(|(x, value)| CurveSample {
                    x,
                    value,
                    uncertainty: None,
                })
                .collect(),
        }
    }

    pub fn push(&mut self, x: f64, value: f64, uncertainty: Option<f64>) {
        self.samples.push(CurveSample {
            x,
            value,
            uncertainty,
        });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.x)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityValue {
    pub value: f64,
    pub uncertainty: f64,
}

/// Normalized CW HOM dip, 1 − ½·|G¹(τ)|².
pub fn g2_cw(tau: f64, coh: &CoherenceSpec) -> f64 {
    1.0 - 0.5 * coh.g1_abs_sq(tau)
}

/// (max − min)/max over the curve samples.
///
/// The uncertainty is propagated from the extreme samples when the curve
/// carries per-sample uncertainties, and is zero otherwise.
pub fn visibility(curve: &G2Curve) -> Result<VisibilityValue> {
    let (mut lo, mut hi) = match curve.samples.first() {
        Some(first) => (first, first),
        None => return Err(Error::analysis("visibility of an empty curve")),
    };
    for s in &curve.samples {
        if s.value < lo.value {
            lo = s;
        }
        if s.value > hi.value {
            hi = s;
        }
    }
    if !(hi.value > 0.0) {
        return Err(Error::analysis("visibility needs a positive maximum"));
    }
    let max = hi.value;
    let min = lo.value;
    let s_min = lo.uncertainty.unwrap_or(0.0) / max;
    let s_max = hi.uncertainty.unwrap_or(0.0) * min / (max * max);
    Ok(VisibilityValue {
        value: (max - min) / max,
        uncertainty: s_min.hypot(s_max),
    })
}

/// Coincidences integrated over the modulator phase for a measurement
/// time `t_meas`: `t_meas · (1 − ½·TW(τ_Opt))`.
pub fn g2_triangle(tau_opt: f64, t_mod: f64, t_meas: f64) -> f64 {
    t_meas * (1.0 - 0.5 * eval_triangle_wave(t_mod, tau_opt))
}
