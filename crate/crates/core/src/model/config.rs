//! Run configuration and its TOML file schema.
//!
//! ```toml
//! [experiment]          # ExperimentConfig, times in ns
//! mu = 3.4e-3           # mean photon number per modulation period
//! eta1 = 1.0            # detection efficiency, detector 3
//! eta2 = 1.0            # detection efficiency, detector 4
//! t_mod = 2.83          # modulation period
//! tau_opt = 0.0         # nominal optical delay
//! t_coin = 0.3125       # coincidence half-window |t4 - t3| <= t_coin
//! tick = 0.078125       # time-tag resolution
//! bin_width = 0.15625   # modulator-phase histogram bin
//! duration = 6.0e9      # simulated acquisition time
//! rng_seed = 1
//!
//! [modulation]
//! enabled = true
//! duty = 0.5            # H fraction of the period
//! # duty_arm1 = 0.5     # per-arm overrides
//! # duty_arm2 = 0.5
//! edge_time = 0.0       # linear rise/fall duration
//! phase_offset = 0.0
//! delay_offset = 0.0    # true delay = tau_opt - delay_offset
//!
//! [coherence]
//! tau_coh = 2000.0
//! omega0 = 0.0
//!
//! [detector]
//! dead_time = 0.0
//! jitter_sigma = 0.0
//!
//! [recording]
//! triggers = "gated"    # "gated" | "every_period" | { divided = N }
//! ```
//!
//! The time-tag clock only represents integer ticks, so the simulated
//! modulation period is `t_mod` rounded to a whole number of ticks
//! (see [`ExperimentConfig::modulation_period`]).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coherence::CoherenceSpec;
use super::envelope::EnvelopeSet;
use super::waveform::SquareWaveSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mu: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub t_mod: f64,
    pub tau_opt: f64,
    pub t_coin: f64,
    pub tick: f64,
    pub bin_width: f64,
    pub duration: f64,
    pub rng_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mu: 3.4e-3,
            eta1: 1.0,
            eta2: 1.0,
            t_mod: 2.83,
            tau_opt: 0.0,
            t_coin: 0.3125,
            tick: 0.078125,
            bin_width: 0.15625,
            duration: 6.0e9,
            rng_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        positive("mu", self.mu)?;
        for (name, eta) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        positive("tick", self.tick)?;
        positive("t_mod", self.t_mod)?;
        positive("t_coin", self.t_coin)?;
        positive("bin_width", self.bin_width)?;
        if !self.tau_opt.is_finite() {
            return Err(Error::config("tau_opt", "must be finite"));
        }
        let fs = self.tick * 1e6;
        if (fs - fs.round()).abs() > 1e-6 {
            return Err(Error::config("tick", "must be a whole number of femtoseconds"));
        }
        if self.bin_width < self.tick {
            return Err(Error::config("bin_width", "must be >= tick"));
        }
        if self.t_coin < self.bin_width {
            return Err(Error::config("t_coin", "must be >= bin_width"));
        }
        if self.t_coin >= self.t_mod {
            return Err(Error::config("t_coin", "must be < t_mod"));
        }
        if self.period_ticks() < 2 {
            return Err(Error::config("t_mod", "must span at least two ticks"));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::config("duration", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn tick_fs(&self) -> u64 {
        (self.tick * 1e6).round() as u64
    }

    /// Modulation period in whole ticks.
    pub fn period_ticks(&self) -> u64 {
        (self.t_mod / self.tick).round() as u64
    }

    /// Modulation period actually simulated, ns.
    pub fn modulation_period(&self) -> f64 {
        self.period_ticks() as f64 * self.tick
    }

    /// Largest tick offset `w` such that `w * tick <= t_coin`.
    pub fn window_ticks(&self) -> u64 {
        (self.t_coin / self.tick + 1e-9).floor() as u64
    }

    pub fn duration_ticks(&self) -> u64 {
        (self.duration / self.tick).round() as u64
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(name, "must be finite and > 0"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationSection {
    pub enabled: bool,
    pub duty: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duty_arm1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duty_arm2: Option<f64>,
    pub edge_time: f64,
    pub phase_offset: f64,
    pub delay_offset: f64,
}

impl Default for ModulationSection {
    fn default() -> Self {
        ModulationSection {
            enabled: true,
            duty: 0.5,
            duty_arm1: None,
            duty_arm2: None,
            edge_time: 0.0,
            phase_offset: 0.0,
            delay_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSection {
    pub tau_coh: f64,
    pub omega0: f64,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        CoherenceSection {
            tau_coh: 2000.0,
            omega0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub dead_time: f64,
    pub jitter_sigma: f64,
}

/// Which modulator triggers end up in the tag stream.
///
/// Recording every trigger of a 353 MHz modulator produces billions of
/// records per second of acquisition, so the default keeps only the trigger
/// immediately preceding each detection. All modes place triggers on the
/// same strictly periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerRecording {
    #[default]
    Gated,
    EveryPeriod,
    /// One trigger every N modulation periods.
    Divided(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordingSection {
    pub triggers: TriggerRecording,
}

/// Everything needed to reproduce one simulated acquisition.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub modulation: ModulationSection,
    pub coherence: CoherenceSection,
    pub detector: DetectorSection,
    pub recording: RecordingSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<file>")
                .to_string();
            Error::Config {
                field,
                reason: e.to_string().trim().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate().map_err(|e| prefix(e, "experiment"))?;
        self.coherence().map_err(|e| prefix(e, "coherence"))?;
        self.envelopes().map_err(|e| prefix(e, "modulation"))?;
        let d = &self.detector;
        if !(d.dead_time.is_finite() && d.dead_time >= 0.0) {
            return Err(Error::config("detector.dead_time", "must be >= 0"));
        }
        if !(d.jitter_sigma.is_finite() && d.jitter_sigma >= 0.0) {
            return Err(Error::config("detector.jitter_sigma", "must be >= 0"));
        }
        if self.recording.triggers == TriggerRecording::Divided(0) {
            return Err(Error::config("recording.triggers", "divider must be >= 1"));
        }
        Ok(())
    }

    pub fn coherence(&self) -> Result<CoherenceSpec> {
        let spec = CoherenceSpec {
            tau_coh: self.coherence.tau_coh,
            omega0: self.coherence.omega0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Optical delay seen by the fields: nominal delay minus the offset.
    pub fn true_delay(&self) -> f64 {
        self.experiment.tau_opt - self.modulation.delay_offset
    }

    /// Mode envelopes on the tick-snapped modulation period.
    pub fn envelopes(&self) -> Result<EnvelopeSet> {
        let m = &self.modulation;
        if !m.enabled {
            return Ok(EnvelopeSet::continuous());
        }
        let base = SquareWaveSpec {
            period: self.experiment.modulation_period(),
            duty: m.duty,
            phase_offset: m.phase_offset,
            low_level: 0.0,
            high_level: 1.0,
            edge_time: m.edge_time,
        };
        EnvelopeSet::with_arm_duties(
            base,
            self.true_delay(),
            m.duty_arm1.unwrap_or(m.duty),
            m.duty_arm2.unwrap_or(m.duty),
        )
    }
}

fn prefix(err: Error, section: &str) -> Error {
    match err {
        Error::Config { field, reason } => Error::Config {
            field: format!("{section}.{field}"),
            reason,
        },
        other => other,
    }
}
