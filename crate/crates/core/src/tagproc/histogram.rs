//! Coincidences folded onto the modulator phase.
//!
//! A coincidence is labelled by its DET3 time relative to the trigger grid,
//! folded over `periods` modulation periods. The expected count for
//! distinguishable fields is built from the singles folded the same way:
//! for folded singles `s3`, `s4` over `L` ticks and `M` folds,
//! `E_b = Σ_{k∈b} Σ_{|Δ|≤W} s3[k]·s4[(k+Δ) mod L] / M`.

use serde::{Deserialize, Serialize};

use super::coincidence::CoincidenceList;
use crate::analytic::{AbscissaKind, FoldGeometry, G2Curve};
use crate::tags::{Channel, TagStream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseHistogram {
    /// ns
    pub bin_width: f64,
    /// ns
    pub tick: f64,
    pub period_ticks: u64,
    pub periods: u64,
    pub window_ticks: u64,
    pub counts: Vec<u64>,
    /// Expected counts per bin for non-interfering fields.
    pub expected: Vec<f64>,
    /// Coincidences before the first trigger.
    pub skipped: u64,
}

impl PhaseHistogram {
    pub fn geometry(&self) -> FoldGeometry {
        FoldGeometry {
            tick: self.tick,
            period_ticks: self.period_ticks,
            periods: self.periods,
            bin_width: self.bin_width,
            window_ticks: self.window_ticks,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        self.geometry().bin_center(b)
    }

    /// Counts over expected counts, with Poisson errors (zero counts use 1).
    pub fn normalized(&self) -> G2Curve {
        let mut curve = G2Curve::new(AbscissaKind::ModulatorPhase);
        for (b, (&n, &e)) in self.counts.iter().zip(&self.expected).enumerate() {
            let (v, s) = if e > 0.0 {
                (n as f64 / e, (n.max(1) as f64).sqrt() / e)
            } else {
                (f64::NAN, f64::NAN)
            };
            curve.push(self.bin_center(b), v, Some(s));
        }
        curve
    }

    /// Raw counts with √N errors.
    pub fn raw(&self) -> G2Curve {
        let mut curve = G2Curve::new(AbscissaKind::ModulatorPhase);
        for (b, &n) in self.counts.iter().enumerate() {
            curve.push(self.bin_center(b), n as f64, Some((n.max(1) as f64).sqrt()));
        }
        curve
    }
}

/// Folds tick times onto `[0, periods·P)` relative to the trigger grid.
struct Folder<'a> {
    triggers: &'a [u64],
    next: usize,
    period: u64,
    periods: u64,
}

impl<'a> Folder<'a> {
    fn new(triggers: &'a [u64], period: u64, periods: u64) -> Self {
        Folder {
            triggers,
            next: 0,
            period,
            periods,
        }
    }

    /// Folded tick of `t`, `None` before the first trigger. Calls must come
    /// in non-decreasing `t`.
    fn fold(&mut self, t: u64) -> Option<u64> {
        while self.next < self.triggers.len() && self.triggers[self.next] <= t {
            self.next += 1;
        }
        let trig = *self.triggers.get(self.next.checked_sub(1)?)?;
        let k = (trig - self.triggers[0]) / self.period;
        let span = self.period * self.periods;
        Some((t - trig + (k % self.periods) * self.period) % span)
    }
}

pub fn phase_histogram(
    coins: &CoincidenceList,
    stream: &TagStream,
    bin_width: f64,
    periods: u64,
) -> Result<PhaseHistogram> {
    let period = stream.header.period_ticks;
    if period == 0 {
        return Err(Error::analysis("stream has no trigger period"));
    }
    if periods == 0 {
        return Err(Error::config("periods", "must be >= 1"));
    }
    let tick = stream.header.tick_ns();
    if !(bin_width.is_finite() && bin_width >= tick) {
        return Err(Error::config("bin_width", "must be >= one tick"));
    }
    let triggers: Vec<u64> = stream.times(Channel::Trigger).collect();
    if triggers.is_empty() {
        return Err(Error::analysis("stream has no trigger records"));
    }
    stream.validate()?;

    let geom = FoldGeometry {
        tick,
        period_ticks: period,
        periods,
        bin_width,
        window_ticks: coins.window_ticks,
    };
    let span = geom.span_ticks();
    let mut counts = vec![0u64; geom.n_bins()];
    let mut skipped = 0;
    let mut folder = Folder::new(&triggers, period, periods);
    for c in &coins.pairs {
        match folder.fold(c.t3) {
            Some(k) => counts[geom.bin_of(k)] += 1,
            None => skipped += 1,
        }
    }

    let mut singles = [vec![0u64; span as usize], vec![0u64; span as usize]];
    let mut folder = Folder::new(&triggers, period, periods);
    for r in &stream.records {
        let slot = match r.channel {
            Channel::Det3 => 0,
            Channel::Det4 => 1,
            Channel::Trigger => continue,
        };
        if let Some(k) = folder.fold(r.time) {
            singles[slot][k as usize] += 1;
        }
    }
    let end = stream.header.duration_ticks.max(stream.records.last().map_or(0, |r| r.time + 1));
    let folds = end.saturating_sub(triggers[0]) as f64 / span as f64;
    let mut expected = vec![0.0; counts.len()];
    if folds > 0.0 {
        let w = coins.window_ticks as i64;
        let l = span as i64;
        for k in 0..span {
            let s3 = singles[0][k as usize] as f64;
            if s3 == 0.0 {
                continue;
            }
            let s4: u64 = (-w..=w)
                .map(|d| singles[1][(k as i64 + d).rem_euclid(l) as usize])
                .sum();
            expected[geom.bin_of(k)] += s3 * s4 as f64 / folds;
        }
    }

    Ok(PhaseHistogram {
        bin_width,
        tick,
        period_ticks: period,
        periods,
        window_ticks: coins.window_ticks,
        counts,
        expected,
        skipped,
    })
}
