//! Physical parameter types and the deterministic functions shared by the
//! analytic oracle and the Monte-Carlo simulator.

mod coherence;
mod config;
mod envelope;
mod waveform;

pub use coherence::{g1, CoherenceSpec};
pub use config::{
    CoherenceSection, DetectorSection, ExperimentConfig, ModulationSection, RecordingSection,
    RunConfig, TriggerRecording,
};
pub use envelope::{envelope, Arm, EnvelopeSet, ModeAmplitudes, PolarizationAxis};
pub use waveform::{eval_square_wave, eval_triangle_wave, SquareWaveSpec};
