//! Polarization-resolved coincidences for modulated envelopes.
//!
//! Each polarization carries its own random relative phase between the two
//! arms, so H and V never interfere with each other. For amplitudes ζ at the
//! two detection instants the coincidence correlation is
//!
//! ```text
//! G(t3, t4) = ¼·A(t3)·A(t4) − ½·Σσ Bσ(t3)·Bσ(t4)·|G¹(t4 − t3)|²
//! ```
//!
//! with `A = Σ ζ²` over all four modes and `Bσ = ζσ1·ζσ2`. The first term is
//! the level reached by distinguishable fields and is used for normalization.

use crate::model::{CoherenceSpec, EnvelopeSet, ModeAmplitudes, PolarizationAxis, SquareWaveSpec};

/// Normalized coincidence value at one modulator phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Point {
    pub value: f64,
    /// All envelopes vanish; `value` is the no-interference level.
    pub degenerate: bool,
}

/// Interfering and non-interfering parts of an (unnormalized) coincidence
/// correlation. Sums of terms stay meaningful, ratios are taken last.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelationTerms {
    /// Full correlation including two-photon interference.
    pub correlated: f64,
    /// Level for distinguishable fields.
    pub uncorrelated: f64,
}

impl CorrelationTerms {
    pub fn add(&mut self, other: CorrelationTerms) {
        self.correlated += other.correlated;
        self.uncorrelated += other.uncorrelated;
    }

    /// `correlated / uncorrelated`, or 1 when nothing reaches the detectors.
    pub fn ratio(&self) -> f64 {
        if self.uncorrelated > 0.0 {
            self.correlated / self.uncorrelated
        } else {
            1.0
        }
    }
}

/// Equal-time four-term decomposition `[σ3][σ4]` of the coincidence rate
/// for detector-3 polarization σ3 and detector-4 polarization σ4.
pub fn polarization_terms(z: &ModeAmplitudes) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for (i, a) in PolarizationAxis::ALL.iter().enumerate() {
        for (j, b) in PolarizationAxis::ALL.iter().enumerate() {
            let [a1, a2] = z.axis(*a);
            let [b1, b2] = z.axis(*b);
            let sa = a1 * a1 + a2 * a2;
            let sb = b1 * b1 + b2 * b2;
            out[i][j] = if i == j {
                0.25 * (sa * sb) - 0.5 * (a1 * a2) * (a1 * a2)
            } else {
                0.25 * sa * sb
            };
        }
    }
    out
}

/// Two-time correlation for detection-3 amplitudes `z3`, detection-4
/// amplitudes `z4` and relative-phase coherence `coherence_sq` between them.
pub fn cross_correlation(
    z3: &ModeAmplitudes,
    z4: &ModeAmplitudes,
    coherence_sq: f64,
) -> CorrelationTerms {
    let uncorrelated = 0.25 * z3.total_intensity() * z4.total_intensity();
    let overlap: f64 = PolarizationAxis::ALL
        .iter()
        .map(|&axis| {
            let [a1, a2] = z3.axis(axis);
            let [b1, b2] = z4.axis(axis);
            a1 * a2 * b1 * b2
        })
        .sum();
    CorrelationTerms {
        correlated: uncorrelated - 0.5 * overlap * coherence_sq,
        uncorrelated,
    }
}

pub fn g2_from_amplitudes(z: &ModeAmplitudes) -> G2Point {
    let terms = polarization_terms(z);
    let raw: f64 = terms.iter().flatten().sum();
    let noint = 0.25 * z.total_intensity().powi(2);
    if noint > 0.0 {
        G2Point {
            value: raw / noint,
            degenerate: false,
        }
    } else {
        G2Point {
            value: 1.0,
            degenerate: true,
        }
    }
}

/// Equal-time normalized coincidences at modulator phase `t0`.
pub fn g2_pol_general(t0: f64, env: &EnvelopeSet) -> G2Point {
    g2_from_amplitudes(&env.amplitudes(t0))
}

/// `¼·(3 − SW(t0)·SW(t0 − τ_Opt))` for a symmetric ±1 square wave.
///
/// `t_mod` must be positive.
pub fn g2_pol_ideal(t0: f64, tau_opt: f64, t_mod: f64) -> f64 {
    let sw = SquareWaveSpec {
        period: t_mod,
        duty: 0.5,
        phase_offset: 0.0,
        low_level: -1.0,
        high_level: 1.0,
        edge_time: 0.0,
    };
    0.25 * (3.0 - sw.level(t0) * sw.level(t0 - tau_opt))
}

/// Ratio of period-averaged equal-time correlations, sampled at `samples`
/// midpoints of one modulation period.
pub fn mean_pol_g2(env: &EnvelopeSet, samples: usize) -> f64 {
    let Some(period) = env.period() else {
        return g2_pol_general(0.0, env).value;
    };
    let n = samples.max(1);
    let mut acc = CorrelationTerms::default();
    for i in 0..n {
        let t = (i as f64 + 0.5) * period / n as f64;
        acc.add(cross_correlation(&env.amplitudes(t), &env.amplitudes(t), 1.0));
    }
    acc.ratio()
}

/// Summed correlation terms over detection times `t3 = k·tick`,
/// `k = 0..period_ticks`, with `t4 = t3 + tau`.
pub fn t0_averaged_terms(
    env: &EnvelopeSet,
    coh: &CoherenceSpec,
    tau: f64,
    tick: f64,
    period_ticks: u64,
) -> CorrelationTerms {
    let c = coh.g1_abs_sq(tau);
    let n = if env.is_modulated() { period_ticks.max(1) } else { 1 };
    let mut acc = CorrelationTerms::default();
    for k in 0..n {
        let t3 = k as f64 * tick;
        acc.add(cross_correlation(&env.amplitudes(t3), &env.amplitudes(t3 + tau), c));
    }
    acc
}

/// Normalized coincidences at detection delay `tau`, averaged over the
/// modulator phase on the tick grid.
pub fn t0_averaged_g2(
    env: &EnvelopeSet,
    coh: &CoherenceSpec,
    tau: f64,
    tick: f64,
    period_ticks: u64,
) -> f64 {
    t0_averaged_terms(env, coh, tau, tick, period_ticks).ratio()
}

/// Tick-grid layout of a folded modulator-phase histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldGeometry {
    /// ns
    pub tick: f64,
    pub period_ticks: u64,
    /// Modulation periods covered by the fold.
    pub periods: u64,
    /// ns
    pub bin_width: f64,
    /// Coincidence half-window in ticks.
    pub window_ticks: u64,
}

impl FoldGeometry {
    pub fn span_ticks(&self) -> u64 {
        self.period_ticks * self.periods
    }

    pub fn n_bins(&self) -> usize {
        let span = self.span_ticks() as f64 * self.tick;
        ((span / self.bin_width).round() as usize).max(1)
    }

    /// Histogram bin holding folded tick index `k`.
    pub fn bin_of(&self, k: u64) -> usize {
        let b = (k as f64 * self.tick / self.bin_width + 1e-9).floor() as usize;
        b.min(self.n_bins() - 1)
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.bin_width
    }
}

/// Expected normalized coincidences per modulator-phase bin, for
/// coincidences found within `±window_ticks` and labelled by the DET3 time.
pub fn windowed_phase_profile(
    env: &EnvelopeSet,
    coh: &CoherenceSpec,
    geom: &FoldGeometry,
) -> Vec<f64> {
    let n_bins = geom.n_bins();
    let mut acc = vec![CorrelationTerms::default(); n_bins];
    let w = geom.window_ticks as i64;
    let coherence: Vec<f64> = (-w..=w)
        .map(|d| coh.g1_abs_sq(d as f64 * geom.tick))
        .collect();
    for k in 0..geom.span_ticks() {
        let z3 = env.amplitudes(k as f64 * geom.tick);
        let bin = geom.bin_of(k);
        for (i, d) in (-w..=w).enumerate() {
            let z4 = env.amplitudes((k as i64 + d) as f64 * geom.tick);
            acc[bin].add(cross_correlation(&z3, &z4, coherence[i]));
        }
    }
    acc.iter().map(CorrelationTerms::ratio).collect()
}
