use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::tags::{Channel, TagRecord, TagStream};
use crate::{Error, Result};

/// How detector events are matched into coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Each event pairs at most once, with the earliest unpaired partner.
    #[default]
    Greedy,
    /// Every DET3/DET4 combination inside the window counts.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coincidence {
    pub t3: u64,
    pub t4: u64,
}

impl Coincidence {
    /// t4 − t3 in ticks.
    pub fn delay(&self) -> i64 {
        self.t4 as i64 - self.t3 as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceList {
    /// |t4 − t3| ≤ window_ticks for every pair.
    pub window_ticks: u64,
    pub pairing: Pairing,
    /// Ordered by t3, then t4.
    pub pairs: Vec<Coincidence>,
}

impl CoincidenceList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Greedy earliest-first coincidences within `window_ticks`.
pub fn find_coincidences(stream: &TagStream, window_ticks: u64) -> Result<CoincidenceList> {
    find_coincidences_with(stream, window_ticks, Pairing::Greedy)
}

pub fn find_coincidences_with(
    stream: &TagStream,
    window_ticks: u64,
    pairing: Pairing,
) -> Result<CoincidenceList> {
    let mut pairs = Vec::new();
    match pairing {
        Pairing::Greedy => greedy(&stream.records, window_ticks, &mut pairs)?,
        Pairing::AllPairs => for_each_pair(&stream.records, window_ticks, |t3, t4| {
            pairs.push(Coincidence { t3, t4 })
        })?,
    }
    pairs.sort_unstable_by_key(|c| (c.t3, c.t4));
    Ok(CoincidenceList {
        window_ticks,
        pairing,
        pairs,
    })
}

fn greedy(records: &[TagRecord], w: u64, pairs: &mut Vec<Coincidence>) -> Result<()> {
    // Unpaired events still able to pair; at most one queue is non-empty.
    let mut queue: [VecDeque<u64>; 2] = [VecDeque::new(), VecDeque::new()];
    let mut last = 0u64;
    for (i, r) in records.iter().enumerate() {
        check_order(i, r.time, &mut last)?;
        let own = match r.channel {
            Channel::Det3 => 0,
            Channel::Det4 => 1,
            Channel::Trigger => continue,
        };
        let t = r.time;
        for q in queue.iter_mut() {
            while q.front().is_some_and(|&s| s + w < t) {
                q.pop_front();
            }
        }
        match queue[1 - own].pop_front() {
            Some(partner) => pairs.push(if own == 0 {
                Coincidence { t3: t, t4: partner }
            } else {
                Coincidence { t3: partner, t4: t }
            }),
            None => queue[own].push_back(t),
        }
    }
    Ok(())
}

/// Calls `f(t3, t4)` once for every DET3/DET4 pair with |t4 − t3| ≤ `max_lag`.
pub fn for_each_pair(
    records: &[TagRecord],
    max_lag: u64,
    mut f: impl FnMut(u64, u64),
) -> Result<()> {
    let mut recent: [VecDeque<u64>; 2] = [VecDeque::new(), VecDeque::new()];
    let mut last = 0u64;
    for (i, r) in records.iter().enumerate() {
        check_order(i, r.time, &mut last)?;
        let own = match r.channel {
            Channel::Det3 => 0,
            Channel::Det4 => 1,
            Channel::Trigger => continue,
        };
        let t = r.time;
        for q in recent.iter_mut() {
            while q.front().is_some_and(|&s| s + max_lag < t) {
                q.pop_front();
            }
        }
        for &s in &recent[1 - own] {
            if own == 0 {
                f(t, s);
            } else {
                f(s, t);
            }
        }
        recent[own].push_back(t);
    }
    Ok(())
}

fn check_order(i: usize, t: u64, last: &mut u64) -> Result<()> {
    if t < *last {
        return Err(Error::Data(format!(
            "stream not sorted: record {i} at tick {t} follows tick {last}"
        )));
    }
    *last = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::{StreamHeader, FORMAT_VERSION};
    use proptest::prelude::*;

    fn stream(events: &[(u64, Channel)]) -> TagStream {
        let mut records: Vec<TagRecord> =
            events.iter().map(|&(t, c)| TagRecord::new(t, c)).collect();
        records.sort_by_key(TagRecord::sort_key);
        TagStream::new(
            StreamHeader {
                version: FORMAT_VERSION,
                tick_fs: 78_125,
                seed: 0,
                period_ticks: 36,
                duration_ticks: 1 << 20,
            },
            records,
        )
    }

    use Channel::{Det3, Det4, Trigger};

    #[test]
    fn examples() {
        let c = find_coincidences(&stream(&[(100, Det3), (103, Det4)]), 4).unwrap();
        assert_eq!(c.pairs, vec![Coincidence { t3: 100, t4: 103 }]);

        let c = find_coincidences(&stream(&[(100, Det3), (200, Det4)]), 4).unwrap();
        assert!(c.is_empty());

        let c = find_coincidences(&stream(&[(100, Det3), (98, Det4), (103, Det4)]), 4).unwrap();
        assert_eq!(c.pairs, vec![Coincidence { t3: 100, t4: 98 }]);
    }

    #[test]
    fn window_edge_inclusive() {
        let c = find_coincidences(&stream(&[(10, Det4), (14, Det3)]), 4).unwrap();
        assert_eq!(c.len(), 1);
        let c = find_coincidences(&stream(&[(10, Det4), (15, Det3)]), 4).unwrap();
        assert_eq!(c.len(), 0);
    }

    #[test]
    fn triggers_ignored_and_same_channel_never_pairs() {
        let c = find_coincidences(
            &stream(&[(0, Trigger), (1, Det3), (2, Det3), (3, Trigger)]),
            4,
        )
        .unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn all_pairs_counts_every_combination() {
        let s = stream(&[(100, Det3), (98, Det4), (103, Det4), (101, Det3)]);
        let c = find_coincidences_with(&s, 4, Pairing::AllPairs).unwrap();
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn unsorted_is_data_error() {
        let mut s = stream(&[(100, Det3), (103, Det4)]);
        s.records.reverse();
        assert!(matches!(find_coincidences(&s, 4), Err(Error::Data(_))));
    }

    fn events() -> impl Strategy<Value = Vec<(u64, Channel)>> {
        prop::collection::vec(
            (0u64..400, prop_oneof![Just(Det3), Just(Det4), Just(Trigger)]),
            0..120,
        )
    }

    proptest! {
        #[test]
        fn pairing_conservation(ev in events(), w in 0u64..12) {
            let s = stream(&ev);
            let c = find_coincidences(&s, w).unwrap();
            prop_assert!(c.len() <= s.count(Det3).min(s.count(Det4)));
            let mut used3 = std::collections::HashMap::new();
            let mut used4 = std::collections::HashMap::new();
            for p in &c.pairs {
                prop_assert!(p.delay().unsigned_abs() <= w);
                *used3.entry(p.t3).or_insert(0) += 1;
                *used4.entry(p.t4).or_insert(0) += 1;
            }
            for (t, n) in used3 {
                prop_assert!(n <= s.records.iter().filter(|r| r.channel == Det3 && r.time == t).count());
            }
            for (t, n) in used4 {
                prop_assert!(n <= s.records.iter().filter(|r| r.channel == Det4 && r.time == t).count());
            }
            prop_assert!(c.pairs.windows(2).all(|w| (w[0].t3, w[0].t4) <= (w[1].t3, w[1].t4)));
        }

        #[test]
        fn all_pairs_matches_brute_force(ev in events(), w in 0u64..12) {
            let s = stream(&ev);
            let c = find_coincidences_with(&s, w, Pairing::AllPairs).unwrap();
            let d3: Vec<u64> = s.times(Det3).collect();
            let d4: Vec<u64> = s.times(Det4).collect();
            let brute = d3.iter()
                .flat_map(|a| d4.iter().map(move |b| (a, b)))
                .filter(|(a, b)| a.abs_diff(**b) <= w)
                .count();
            prop_assert_eq!(c.len(), brute);
        }
    }
}
