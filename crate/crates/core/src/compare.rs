//! Scoring measured curves against the analytic oracle.
//!
//! The oracle is evaluated with the same discretization the measurement
//! used: tick-grid detection times, the coincidence window, and the bin
//! layout, so that finite-window smearing is part of the expectation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analytic::{t0_averaged_terms, windowed_phase_profile, CorrelationTerms, FoldGeometry, G2Curve};
use crate::model::RunConfig;
use crate::{Error, Result};

/// Agreement threshold, in standard deviations, for a single bin. Curves
/// with more bins use the per-bin limit with the same overall false-alarm
/// probability, see [`z_limit`].
pub const PASS_SIGMA: f64 = 3.0;

/// Per-bin |z| limit for `n` bins: the two-sided tail probability of
/// [`PASS_SIGMA`] is shared across bins (Šidák), so `z_limit(1) == 3`.
pub fn z_limit(n: usize) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let p_single = 2.0 * (1.0 - std.cdf(PASS_SIGMA));
    let p_bin = -(-p_single).ln_1p() / n.max(1) as f64;
    // 1 - (1 - p)^(1/n), computed without cancellation.
    let p_bin = -(-p_bin).exp_m1();
    std.inverse_cdf(1.0 - p_bin / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinScore {
    pub x: f64,
    pub measured: f64,
    pub expected: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scores: Vec<BinScore>,
    pub chi2: f64,
    pub dof: usize,
    pub max_abs_z: f64,
    /// Per-bin limit applied, [`z_limit`] of the bin count.
    pub z_limit: f64,
    /// Every bin within `z_limit` and χ² no more than 3σ above its mean.
    pub pass: bool,
}

impl Comparison {
    pub fn chi2_per_dof(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }
}

/// z-scores of `measured` against `expected`, sample by sample.
pub fn compare_curve(measured: &G2Curve, expected: &[f64]) -> Result<Comparison> {
    if measured.is_empty() {
        return Err(Error::analysis("cannot compare an empty curve"));
    }
    if measured.len() != expected.len() {
        return Err(Error::analysis(format!(
            "curve has {} samples but the oracle has {}",
            measured.len(),
            expected.len()
        )));
    }
    let mut scores = Vec::with_capacity(expected.len());
    for (s, &e) in measured.samples.iter().zip(expected) {
        let sigma = s
            .uncertainty
            .filter(|u| u.is_finite() && *u > 0.0)
            .ok_or_else(|| Error::analysis(format!("sample at x = {} has no uncertainty", s.x)))?;
        if !s.value.is_finite() {
            return Err(Error::analysis(format!("sample at x = {} is not finite", s.x)));
        }
        scores.push(BinScore {
            x: s.x,
            measured: s.value,
            expected: e,
            sigma,
            z: (s.value - e) / sigma,
        });
    }
    let chi2 = scores.iter().map(|b| b.z * b.z).sum();
    let max_abs_z = scores.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
    let dof = scores.len();
    let limit = z_limit(dof);
    let chi2_ok = chi2 <= dof as f64 + PASS_SIGMA * (2.0 * dof as f64).sqrt();
    Ok(Comparison {
        dof,
        chi2,
        max_abs_z,
        z_limit: limit,
        pass: max_abs_z <= limit && chi2_ok,
        scores,
    })
}

/// How a measured curve was binned, which fixes its oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Modulator-phase histogram folded over `periods` with the given bin
    /// width (ns) and coincidence half-window (ticks).
    ModulatorPhase {
        periods: u64,
        bin_width: f64,
        window_ticks: u64,
    },
    /// Dip histogram with bins of `2·half_bin_ticks + 1` ticks.
    DetectionDelay { half_bin_ticks: u64 },
    /// Visibility scan from dip centre bins of `2·half_bin_ticks + 1` ticks;
    /// abscissae are nominal delays.
    OpticalDelay { half_bin_ticks: u64 },
}

/// Oracle values at abscissae `xs` for the run `run`.
pub fn oracle_values(run: &RunConfig, spec: &OracleSpec, xs: &[f64]) -> Result<Vec<f64>> {
    run.validate()?;
    let exp = &run.experiment;
    let tick = exp.tick;
    let period = exp.period_ticks();
    let coh = run.coherence()?;
    match *spec {
        OracleSpec::ModulatorPhase {
            periods,
            bin_width,
            window_ticks,
        } => {
            let geom = FoldGeometry {
                tick,
                period_ticks: period,
                periods,
                bin_width,
                window_ticks,
            };
            let profile = windowed_phase_profile(&run.envelopes()?, &coh, &geom);
            xs.iter()
                .map(|&x| {
                    let b = (x / bin_width).floor();
                    let ok = b >= 0.0
                        && (b as usize) < profile.len()
                        && (geom.bin_center(b as usize) - x).abs() <= 1e-6 * bin_width;
                    if ok {
                        Ok(profile[b as usize])
                    } else {
                        Err(Error::analysis(format!(
                            "abscissa {x} ns is not a bin centre of the {}-bin fold",
                            profile.len()
                        )))
                    }
                })
                .collect()
        }
        OracleSpec::DetectionDelay { half_bin_ticks } => {
            let env = run.envelopes()?;
            Ok(xs
                .iter()
                .map(|&x| {
                    let c = (x / tick).round() as i64;
                    bin_terms(&env, &coh, c, half_bin_ticks, tick, period).ratio()
                })
                .collect())
        }
        OracleSpec::OpticalDelay { half_bin_ticks } => xs
            .iter()
            .map(|&x| {
                let mut at = run.clone();
                at.experiment.tau_opt = x;
                let env = at.envelopes()?;
                Ok(1.0 - bin_terms(&env, &coh, 0, half_bin_ticks, tick, period).ratio())
            })
            .collect(),
    }
}

fn bin_terms(
    env: &crate::model::EnvelopeSet,
    coh: &crate::model::CoherenceSpec,
    centre: i64,
    half: u64,
    tick: f64,
    period: u64,
) -> CorrelationTerms {
    let h = half as i64;
    let mut acc = CorrelationTerms::default();
    for d in centre - h..=centre + h {
        acc.add(t0_averaged_terms(env, coh, d as f64 * tick, tick, period));
    }
    acc
}
