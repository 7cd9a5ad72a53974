//! Monte-Carlo generation of time-tag streams.
//!
//! Fields are treated semiclassically: each polarization carries a random
//! relative phase between the two arms, the beam splitter turns that phase
//! into complementary output intensities, and detections are Bernoulli
//! draws per tick with probability proportional to the local intensity.

mod detector;
mod fields;
mod generate;
mod phase;

pub use detector::apply_detector_imperfections;
pub use fields::{intensities_split, output_intensities};
pub use generate::{
    generate_tags, generate_tags_with, MAX_PERIODIC_TRIGGERS, MAX_TICK_PROBABILITY,
};
pub use phase::{empirical_coherence, simulate_phase, PhaseTrace, PhaseWalker};

use crate::model::RunConfig;
use crate::tags::TagStream;
use crate::Result;

/// Generates the tag stream of a complete run, detector effects included.
pub fn simulate_run(run: &RunConfig) -> Result<TagStream> {
    run.validate()?;
    let seed = run.experiment.rng_seed;
    let stream = generate_tags_with(
        &run.experiment,
        &run.coherence()?,
        &run.envelopes()?,
        seed,
        run.recording.triggers,
    )?;
    let d = &run.detector;
    if d.dead_time == 0.0 && d.jitter_sigma == 0.0 {
        return Ok(stream);
    }
    apply_detector_imperfections(&stream, d.dead_time, d.jitter_sigma, seed ^ 0x6a09_e667_f3bc_c908)
}
