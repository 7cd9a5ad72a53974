use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tags::{Channel, TagRecord, TagStream};
use crate::{Error, Result};

/// Adds Gaussian timing jitter and a non-paralyzable dead time to the
/// detector channels. Dead time is counted from the last kept event of the
/// same channel. Trigger records pass through unchanged.
pub fn apply_detector_imperfections(
    stream: &TagStream,
    dead_time: f64,
    jitter_sigma: f64,
    seed: u64,
) -> Result<TagStream> {
    if !(dead_time.is_finite() && dead_time >= 0.0) {
        return Err(Error::config("dead_time", "must be finite and >= 0"));
    }
    if !(jitter_sigma.is_finite() && jitter_sigma >= 0.0) {
        return Err(Error::config("jitter_sigma", "must be finite and >= 0"));
    }
    let tick = stream.header.tick_ns();
    let mut records = stream.records.clone();

    if jitter_sigma > 0.0 {
        let sigma = jitter_sigma / tick;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for r in records.iter_mut().filter(|r| r.channel != Channel::Trigger) {
            let z: f64 = StandardNormal.sample(&mut rng);
            r.time = (r.time as f64 + sigma * z).round().max(0.0) as u64;
        }
        records.sort_by_key(TagRecord::sort_key);
    }

    let dead = (dead_time / tick).round() as u64;
    if dead > 0 {
        let mut last: [Option<u64>; 2] = [None, None];
        records.retain(|r| {
            let slot = match r.channel {
                Channel::Det3 => 0,
                Channel::Det4 => 1,
                Channel::Trigger => return true,
            };
            match last[slot] {
                Some(prev) if r.time - prev < dead => false,
                _ => {
                    last[slot] = Some(r.time);
                    true
                }
            }
        });
    }
    Ok(TagStream::new(stream.header, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::{StreamHeader, FORMAT_VERSION};

    fn stream(records: Vec<TagRecord>) -> TagStream {
        TagStream::new(
            StreamHeader {
                version: FORMAT_VERSION,
                tick_fs: 78_125,
                seed: 0,
                period_ticks: 36,
                duration_ticks: 1 << 30,
            },
            records,
        )
    }

    #[test]
    fn identity_without_imperfections() {
        let s = stream(vec![
            TagRecord::new(0, Channel::Trigger),
            TagRecord::new(1, Channel::Det3),
            TagRecord::new(2, Channel::Det3),
        ]);
        assert_eq!(apply_detector_imperfections(&s, 0.0, 0.0, 1).unwrap(), s);
    }

    #[test]
    fn dead_time_removes_close_event() {
        let tick = 0.078125;
        let s = stream(vec![
            TagRecord::new(100, Channel::Det3),
            TagRecord::new(101, Channel::Det3),
            TagRecord::new(101, Channel::Det4),
            TagRecord::new(110, Channel::Det3),
        ]);
        let out = apply_detector_imperfections(&s, 10.0 * tick, 0.0, 1).unwrap();
        assert_eq!(
            out.records,
            vec![
                TagRecord::new(100, Channel::Det3),
                TagRecord::new(101, Channel::Det4),
                TagRecord::new(110, Channel::Det3),
            ]
        );
    }

    #[test]
    fn jitter_spread_matches_sigma() {
        let tick = 0.078125;
        let records: Vec<TagRecord> = (0..20_000u64)
            .map(|k| TagRecord::new(1000 + 100 * k, Channel::Det4))
            .collect();
        let s = stream(records);
        let out = apply_detector_imperfections(&s, 0.0, 2.0 * tick, 7).unwrap();
        let dev: Vec<f64> = out
            .records
            .iter()
            .zip(&s.records)
            .map(|(a, b)| a.time as f64 - b.time as f64)
            .collect();
        let var = dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64;
        // Rounding to ticks adds 1/12 tick² of variance.
        assert!((var.sqrt() - (4.0f64 + 1.0 / 12.0).sqrt()).abs() < 0.05, "{}", var.sqrt());
    }

    #[test]
    fn triggers_untouched() {
        let s = stream(vec![
            TagRecord::new(36, Channel::Trigger),
            TagRecord::new(37, Channel::Det3),
            TagRecord::new(72, Channel::Trigger),
        ]);
        let out = apply_detector_imperfections(&s, 1.0, 0.5, 3).unwrap();
        let trig: Vec<u64> = out.times(Channel::Trigger).collect();
        assert_eq!(trig, vec![36, 72]);
    }

    #[test]
    fn rejects_negative_parameters() {
        let s = stream(vec![]);
        assert!(apply_detector_imperfections(&s, -1.0, 0.0, 0).is_err());
        assert!(apply_detector_imperfections(&s, 0.0, f64::NAN, 0).is_err());
    }
}
