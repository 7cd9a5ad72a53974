//! Laser phase noise with a Voigt line shape.
//!
//! A Wiener process of increment variance `2·dt/τ_c` produces the
//! exponential part of |G¹| and a static Gaussian detuning of standard
//! deviation `√2/τ_c`, drawn once per realization, produces the Gaussian
//! part. The difference of two independent such phases has twice both
//! rates, so its coherence is |G¹|².

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::model::CoherenceSpec;
use crate::{Error, Result};

/// One sampled phase realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    /// Sample spacing, ns.
    pub dt: f64,
    /// θ(k·dt), radians.
    pub theta: Vec<f64>,
    /// Detuning of this realization, rad/ns.
    pub detuning: f64,
}

/// Samples a single-laser phase over `[0, duration]`.
///
/// `dt` must resolve the coherence time: `dt <= τ_c / 100`.
pub fn simulate_phase(
    coh: &CoherenceSpec,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<PhaseTrace> {
    coh.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dt", "must be finite and > 0"));
    }
    if dt > coh.tau_coh / 100.0 * (1.0 + 1e-12) {
        return Err(Error::config(
            "dt",
            format!("{dt} ns is coarser than tau_coh/100 = {} ns", coh.tau_coh / 100.0),
        ));
    }
    if !(duration.is_finite() && duration >= dt) {
        return Err(Error::config("duration", "must be >= dt"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walker = PhaseWalker::laser(coh, &mut rng);
    let n = (duration / dt + 1e-9).floor() as usize + 1;
    let mut theta = Vec::with_capacity(n);
    theta.push(walker.theta);
    for k in 1..n {
        theta.push(walker.advance_to(k as f64 * dt, &mut rng));
    }
    Ok(PhaseTrace {
        dt,
        theta,
        detuning: walker.detuning,
    })
}

impl PhaseTrace {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Successive differences θ(t + dt) − θ(t).
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta.windows(2).map(|w| w[1] - w[0])
    }
}

/// Ensemble coherence `⟨cos(θ(t + lag·dt) − θ(t))⟩`, averaged over traces
/// and all time origins. `None` when no trace is long enough for `lag`.
pub fn empirical_coherence(traces: &[PhaseTrace], lag: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for tr in traces {
        let per: Vec<f64> = tr
            .theta
            .iter()
            .zip(tr.theta.iter().skip(lag))
            .map(|(a, b)| (b - a).cos())
            .collect();
        if !per.is_empty() {
            // Weight each realization equally: the detuning is shared by
            // every origin of one trace.
            sum += per.iter().sum::<f64>() / per.len() as f64;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Phase sampled lazily at increasing times with exact Wiener increments.
#[derive(Debug, Clone)]
pub struct PhaseWalker {
    t: f64,
    theta: f64,
    detuning: f64,
    /// Increment variance per ns.
    diffusion: f64,
}

impl PhaseWalker {
    /// Phase of one laser, uniformly random start at t = 0.
    pub fn laser<R: Rng + ?Sized>(coh: &CoherenceSpec, rng: &mut R) -> Self {
        Self::with_rates(coh, 1.0, 0.0, rng)
    }

    /// Relative phase between two independent lasers, starting at `t0`.
    pub fn relative<R: Rng + ?Sized>(coh: &CoherenceSpec, t0: f64, rng: &mut R) -> Self {
        Self::with_rates(coh, 2.0, t0, rng)
    }

    fn with_rates<R: Rng + ?Sized>(coh: &CoherenceSpec, scale: f64, t0: f64, rng: &mut R) -> Self {
        let theta = rng.random::<f64>() * TAU;
        let sd = (2.0 * scale).sqrt() / coh.tau_coh;
        let detuning = Normal::new(0.0, sd).expect("finite sd").sample(rng);
        PhaseWalker {
            t: t0,
            theta,
            detuning,
            diffusion: 2.0 * scale / coh.tau_coh,
        }
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Phase at `t`. Times earlier than the last query return the last
    /// phase unchanged.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> f64 {
        let step = t - self.t;
        if step > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            self.theta += z * (self.diffusion * step).sqrt() + self.detuning * step;
            self.t = t;
        }
        self.theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_step() {
        let coh = CoherenceSpec::new(100.0).unwrap();
        let err = simulate_phase(&coh, 10.0, 1.5, 1).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "dt"));
        assert!(simulate_phase(&coh, 10.0, 1.0, 1).is_ok());
        assert!(simulate_phase(&coh, 0.5, 1.0, 1).is_err());
    }

    #[test]
    fn deterministic() {
        let coh = CoherenceSpec::new(100.0).unwrap();
        let a = simulate_phase(&coh, 50.0, 0.5, 9).unwrap();
        let b = simulate_phase(&coh, 50.0, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 101);
        assert_ne!(a, simulate_phase(&coh, 50.0, 0.5, 10).unwrap());
    }

    #[test]
    fn increment_variance() {
        // Sample variance of the increments of one long trace.
        let coh = CoherenceSpec::new(100.0).unwrap();
        let dt = 1.0;
        let tr = simulate_phase(&coh, 200_000.0, dt, 3).unwrap();
        let inc: Vec<f64> = tr.increments().collect();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
        let expected = 2.0 * dt / coh.tau_coh;
        assert!((var / expected - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn zero_lag_coherence_is_one() {
        let coh = CoherenceSpec::new(100.0).unwrap();
        let traces: Vec<PhaseTrace> = (0..50)
            .map(|s| simulate_phase(&coh, 10.0, 1.0, s).unwrap())
            .collect();
        assert_eq!(empirical_coherence(&traces, 0), Some(1.0));
        assert_eq!(empirical_coherence(&traces, 11), None);
    }

    #[test]
    fn relative_walker_decoheres_as_squared_modulus() {
        let coh = CoherenceSpec::new(100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut w = PhaseWalker::relative(&coh, 0.0, &mut rng);
            let a = w.advance_to(0.0, &mut rng);
            let b = w.advance_to(50.0, &mut rng);
            acc += (b - a).cos();
        }
        let got = acc / n as f64;
        assert!((got - coh.g1_abs_sq(50.0)).abs() < 0.02, "{got}");
    }
}
