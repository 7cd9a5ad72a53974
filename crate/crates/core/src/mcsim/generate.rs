//! Poisson-thinned detection events on the tick clock.
//!
//! Detector `i` fires in tick `k` with probability
//! `η_i·(μ/2)·I_i(k·tick)·tick/T_Mod`. Candidates are drawn at the maximal
//! rate (I = 2) by geometric skips and accepted with probability `I_i/2`,
//! which is the same Bernoulli process without visiting every tick.
//!
//! The run is cut into segments of about 1000 coherence times, each a whole
//! number of modulation periods. A segment owns an RNG stream derived from
//! the seed and its index, and fresh relative phases, so segments are
//! independent and may be generated in parallel; they are concatenated in
//! order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use super::fields::intensities_split;
use super::phase::PhaseWalker;
use crate::model::{CoherenceSpec, EnvelopeSet, ExperimentConfig, ModeAmplitudes, TriggerRecording};
use crate::tags::{Channel, StreamHeader, TagRecord, TagStream, FORMAT_VERSION};
use crate::{Error, Result};

/// Largest allowed per-tick detection probability.
pub const MAX_TICK_PROBABILITY: f64 = 0.1;

/// EveryPeriod recording refuses runs with more triggers than this.
pub const MAX_PERIODIC_TRIGGERS: u64 = 1 << 28;

/// Segments generated per parallel batch.
const BATCH: usize = 64;

/// Tag stream with triggers recorded in the default (gated) mode.
pub fn generate_tags(
    cfg: &ExperimentConfig,
    coh: &CoherenceSpec,
    env: &EnvelopeSet,
    seed: u64,
) -> Result<TagStream> {
    generate_tags_with(cfg, coh, env, seed, TriggerRecording::Gated)
}

pub fn generate_tags_with(
    cfg: &ExperimentConfig,
    coh: &CoherenceSpec,
    env: &EnvelopeSet,
    seed: u64,
    triggers: TriggerRecording,
) -> Result<TagStream> {
    cfg.validate()?;
    coh.validate()?;
    let period = cfg.period_ticks();
    let duration = cfg.duration_ticks();
    let p_max = [cfg.eta1 * cfg.mu / period as f64, cfg.eta2 * cfg.mu / period as f64];
    if p_max.iter().any(|&p| p >= MAX_TICK_PROBABILITY) {
        return Err(Error::config(
            "mu",
            format!(
                "per-tick detection probability {:.3} is not small; lower mu or eta",
                p_max[0].max(p_max[1])
            ),
        ));
    }
    match triggers {
        TriggerRecording::Divided(0) => {
            return Err(Error::config("triggers", "divider must be >= 1"));
        }
        TriggerRecording::EveryPeriod if duration / period > MAX_PERIODIC_TRIGGERS => {
            return Err(Error::config(
                "triggers",
                format!(
                    "recording every period would store {} triggers; use gated or divided",
                    duration / period
                ),
            ));
        }
        _ => {}
    }

    let ctx = Context {
        tick: cfg.tick,
        period,
        duration,
        coh: *coh,
        seed,
        triggers,
        amps: amplitude_table(env, cfg.tick, period),
        skip: [geometric(p_max[0]), geometric(p_max[1])],
    };
    let periods_per_segment = ((1000.0 * coh.tau_coh / cfg.tick) / period as f64).round().max(1.0) as u64;
    let seg_len = periods_per_segment * period;
    let n_segments = duration.div_ceil(seg_len);

    let mut records = Vec::new();
    let mut first = 0u64;
    while first < n_segments {
        let last = (first + BATCH as u64).min(n_segments);
        let batch: Vec<Vec<TagRecord>> = (first..last)
            .into_par_iter()
            .map(|i| ctx.segment(i, i * seg_len, ((i + 1) * seg_len).min(duration)))
            .collect();
        for part in batch {
            records.extend_from_slice(&part);
        }
        first = last;
    }

    Ok(TagStream::new(
        StreamHeader {
            version: FORMAT_VERSION,
            tick_fs: cfg.tick_fs(),
            seed,
            period_ticks: period,
            duration_ticks: duration,
        },
        records,
    ))
}

fn geometric(p: f64) -> Option<Geometric> {
    (p > 0.0).then(|| Geometric::new(p).expect("probability in (0, 1)"))
}

/// Envelope amplitudes at `k·tick` for one period of ticks. The envelope
/// period is exactly `period` ticks, so this covers every tick.
fn amplitude_table(env: &EnvelopeSet, tick: f64, period: u64) -> Vec<ModeAmplitudes> {
    let n = if env.is_modulated() { period } else { 1 };
    (0..n).map(|k| env.amplitudes(k as f64 * tick)).collect()
}

struct Context {
    tick: f64,
    period: u64,
    duration: u64,
    coh: CoherenceSpec,
    seed: u64,
    triggers: TriggerRecording,
    amps: Vec<ModeAmplitudes>,
    skip: [Option<Geometric>; 2],
}

impl Context {
    fn segment(&self, index: u64, start: u64, end: u64) -> Vec<TagRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let t0 = start as f64 * self.tick;
        let mut phase_h = PhaseWalker::relative(&self.coh, t0, &mut rng);
        let mut phase_v = PhaseWalker::relative(&self.coh, t0, &mut rng);

        let mut next = [
            self.draw(0, start, &mut rng),
            self.draw(1, start, &mut rng),
        ];
        let mut out = Vec::new();
        let mut last_trigger: Option<u64> = None;
        if let TriggerRecording::EveryPeriod | TriggerRecording::Divided(_) = self.triggers {
            self.push_grid_triggers(start, end, &mut out);
        }
        loop {
            let (k, det) = match next {
                [Some(a), Some(b)] if b < a => (b, 1),
                [Some(a), _] => (a, 0),
                [None, Some(b)] => (b, 1),
                [None, None] => break,
            };
            if k >= end {
                break;
            }
            let t = k as f64 * self.tick;
            let th = phase_h.advance_to(t, &mut rng);
            let tv = phase_v.advance_to(t, &mut rng);
            let z = &self.amps[(k % self.amps.len() as u64) as usize];
            let (i3, i4) = intensities_split(z, th, tv);
            let intensity = if det == 0 { i3 } else { i4 };
            if rng.random::<f64>() * 2.0 < intensity {
                if self.triggers == TriggerRecording::Gated {
                    let g = k / self.period * self.period;
                    if last_trigger != Some(g) {
                        out.push(TagRecord::new(g, Channel::Trigger));
                        last_trigger = Some(g);
                    }
                }
                let channel = if det == 0 { Channel::Det3 } else { Channel::Det4 };
                out.push(TagRecord::new(k, channel));
            }
            next[det] = self.draw(det, k + 1, &mut rng);
        }
        if self.triggers != TriggerRecording::Gated {
            out.sort_by_key(TagRecord::sort_key);
        }
        out
    }

    /// First candidate tick at or after `from` for detector `det`.
    fn draw(&self, det: usize, from: u64, rng: &mut ChaCha8Rng) -> Option<u64> {
        let g = self.skip[det].as_ref()?;
        from.checked_add(g.sample(rng)).filter(|&k| k < self.duration)
    }

    fn push_grid_triggers(&self, start: u64, end: u64, out: &mut Vec<TagRecord>) {
        let step = match self.triggers {
            TriggerRecording::Divided(n) => n * self.period,
            _ => self.period,
        };
        let mut g = start.div_ceil(step) * step;
        while g < end {
            out.push(TagRecord::new(g, Channel::Trigger));
            g += step;
        }
    }
}
