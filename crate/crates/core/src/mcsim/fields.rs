use crate::model::{EnvelopeSet, ModeAmplitudes};

/// Beam-splitter output intensities `(I3, I4)` at time `t` when both
/// polarizations see the same relative phase `theta`.
pub fn output_intensities(env: &EnvelopeSet, theta: f64, t: f64) -> (f64, f64) {
    intensities_split(&env.amplitudes(t), theta, theta)
}

/// Output intensities with a separate relative phase per polarization.
///
/// Unit field amplitudes; `I3 + I4` is the summed input intensity for any
/// phases.
pub fn intensities_split(z: &ModeAmplitudes, theta_h: f64, theta_v: f64) -> (f64, f64) {
    let [h1, h2] = z.h;
    let [v1, v2] = z.v;
    let sum = 0.5 * (h1 * h1 + h2 * h2 + v1 * v1 + v2 * v2);
    let cross = h1 * h2 * theta_h.cos() + v1 * v2 * theta_v.cos();
    (sum + cross, sum - cross)
}
