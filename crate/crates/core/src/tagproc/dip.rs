//! HOM dip: all-pairs histogram of detection-time differences.

use serde::{Deserialize, Serialize};

use super::coincidence::for_each_pair;
use crate::analytic::{AbscissaKind, G2Curve};
use crate::tags::TagStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipOptions {
    /// Half-width of each bin in ticks; bins span `2h + 1` ticks centred on
    /// multiples of `2h + 1`.
    pub half_bin_ticks: u64,
    /// Largest |τ| histogrammed, ns.
    pub max_lag: f64,
    /// Bins with |τ| at or beyond this form the normalization baseline, ns.
    pub baseline_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipHistogram {
    pub tick: f64,
    pub half_bin_ticks: u64,
    /// Bin index of τ = 0.
    pub center: usize,
    pub counts: Vec<u64>,
    pub baseline_min: f64,
}

impl DipHistogram {
    pub fn bin_ticks(&self) -> u64 {
        2 * self.half_bin_ticks + 1
    }

    /// Bin centre in ns.
    pub fn lag(&self, b: usize) -> f64 {
        (b as f64 - self.center as f64) * self.bin_ticks() as f64 * self.tick
    }

    /// Mean baseline count and the number of baseline counts.
    pub fn baseline(&self) -> Result<(f64, u64)> {
        let mut n = 0usize;
        let mut total = 0u64;
        for (b, &c) in self.counts.iter().enumerate() {
            if self.lag(b).abs() >= self.baseline_min {
                n += 1;
                total += c;
            }
        }
        if n == 0 || total == 0 {
            return Err(Error::analysis("dip baseline region is empty"));
        }
        Ok((total as f64 / n as f64, total))
    }

    /// Counts over the baseline mean, with Poisson errors of both.
    pub fn normalized(&self) -> Result<G2Curve> {
        let (mean, total) = self.baseline()?;
        let mut curve = G2Curve::new(AbscissaKind::DetectionDelay);
        for (b, &c) in self.counts.iter().enumerate() {
            let g = c as f64 / mean;
            let rel = (1.0 / c.max(1) as f64 + 1.0 / total as f64).sqrt();
            let sigma = if c == 0 { 1.0 / mean } else { g * rel };
            curve.push(self.lag(b), g, Some(sigma));
        }
        Ok(curve)
    }
}

pub fn dip_histogram(stream: &TagStream, opts: &DipOptions) -> Result<DipHistogram> {
    let tick = stream.header.tick_ns();
    if !(opts.max_lag.is_finite() && opts.max_lag > 0.0) {
        return Err(Error::config("max_lag", "must be finite and > 0"));
    }
    if !(opts.baseline_min.is_finite() && opts.baseline_min > 0.0 && opts.baseline_min <= opts.max_lag) {
        return Err(Error::config("baseline_min", "must lie in (0, max_lag]"));
    }
    let h = opts.half_bin_ticks;
    let width = 2 * h + 1;
    let max_ticks = (opts.max_lag / tick).floor() as u64;
    if max_ticks < h {
        return Err(Error::config("max_lag", "shorter than half a bin"));
    }
    let side = (max_ticks - h) / width;
    let reach = side * width + h;
    let mut counts = vec![0u64; (2 * side + 1) as usize];
    for_each_pair(&stream.records, reach, |t3, t4| {
        let d = t4 as i64 - t3 as i64 + reach as i64;
        counts[(d as u64 / width) as usize] += 1;
    })?;
    Ok(DipHistogram {
        tick,
        half_bin_ticks: h,
        center: side as usize,
        counts,
        baseline_min: opts.baseline_min,
    })
}

/// Normalized coincidences against detection delay.
pub fn dip_curve(stream: &TagStream, opts: &DipOptions) -> Result<G2Curve> {
    dip_histogram(stream, opts)?.normalized()
}
