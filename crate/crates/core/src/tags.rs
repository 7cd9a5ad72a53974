//! In-memory time-tag streams.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tag channel. The discriminants are the on-disk channel codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Channel {
    Det3 = 0,
    Det4 = 1,
    Trigger = 2,
}

impl Channel {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Channel> {
        match code {
            0 => Some(Channel::Det3),
            1 => Some(Channel::Det4),
            2 => Some(Channel::Trigger),
            _ => None,
        }
    }

    /// Order among records sharing a tick: the trigger comes first.
    fn tie_rank(self) -> u8 {
        match self {
            Channel::Trigger => 0,
            Channel::Det3 => 1,
            Channel::Det4 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagRecord {
    /// Ticks since the start of the run.
    pub time: u64,
    pub channel: Channel,
}

impl TagRecord {
    pub fn new(time: u64, channel: Channel) -> Self {
        TagRecord { time, channel }
    }

    /// Canonical stream order.
    pub fn sort_key(&self) -> (u64, u8) {
        (self.time, self.channel.tie_rank())
    }
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub version: u32,
    /// Tick length in femtoseconds.
    pub tick_fs: u64,
    pub seed: u64,
    /// Trigger grid spacing in ticks; 0 when the run had no modulation.
    pub period_ticks: u64,
    pub duration_ticks: u64,
}

impl StreamHeader {
    /// Tick length in ns.
    pub fn tick_ns(&self) -> f64 {
        self.tick_fs as f64 * 1e-6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagStream {
    pub header: StreamHeader,
    pub records: Vec<TagRecord>,
}

impl TagStream {
    pub fn new(header: StreamHeader, records: Vec<TagRecord>) -> Self {
        TagStream { header, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.records.iter().filter(|r| r.channel == channel).count()
    }

    pub fn times(&self, channel: Channel) -> impl Iterator<Item = u64> + '_ {
        self.records
            .iter()
            .filter(move |r| r.channel == channel)
            .map(|r| r.time)
    }

    /// Puts records into canonical order.
    pub fn sort(&mut self) {
        self.records.sort_by_key(TagRecord::sort_key);
    }

    /// Checks time ordering and that every trigger sits on the trigger grid.
    pub fn validate(&self) -> Result<()> {
        if self.header.tick_fs == 0 {
            return Err(Error::Data("tick length is zero".into()));
        }
        for (i, w) in self.records.windows(2).enumerate() {
            if w[1].time < w[0].time {
                return Err(Error::Data(format!(
                    "record {} at tick {} precedes record {} at tick {}",
                    i + 1,
                    w[1].time,
                    i,
                    w[0].time
                )));
            }
        }
        let p = self.header.period_ticks;
        let mut last: Option<u64> = None;
        for t in self.times(Channel::Trigger) {
            if p == 0 {
                return Err(Error::Data("trigger in a stream without a period".into()));
            }
            if let Some(prev) = last {
                if t == prev || (t - prev) % p != 0 {
                    return Err(Error::Data(format!(
                        "trigger at tick {t} is off the {p}-tick grid started at {prev}"
                    )));
                }
            }
            last = Some(t);
        }
        Ok(())
    }
}
