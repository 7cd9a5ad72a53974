use crate::{Error, Result};

/// Expected coincidences from detection windows of width `dt` centred on
/// `t0` (detector 3) and `t0 + tau` (detector 4).
///
/// `g2(t3, t4)` is the two-time correlation. The double integral is split
/// along the diagonal `t3 = t4`, where stationary correlations have a cusp,
/// so each piece is smooth for the double-exponential rule.
pub fn coincidence_rate(
    t0: f64,
    tau: f64,
    dt: f64,
    eta1: f64,
    eta2: f64,
    g2: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dT", "must be finite and > 0"));
    }
    for (name, eta) in [("eta1", eta1), ("eta2", eta2)] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::config(name, "must lie in [0, 1]"));
        }
    }
    if !(t0.is_finite() && tau.is_finite()) {
        return Err(Error::config("t0", "times must be finite"));
    }
    if eta1 == 0.0 || eta2 == 0.0 {
        return Ok(0.0);
    }
    let (a1, b1) = (t0 - 0.5 * dt, t0 + 0.5 * dt);
    let (a2, b2) = (a1 + tau, b1 + tau);
    let tol_inner = 1e-12 * dt;
    let tol_outer = 1e-12 * dt * dt;

    let inner = |t1: f64| -> f64 {
        split(a2, b2, &[t1])
            .map(|(lo, hi)| quadrature::integrate(|t2| g2(t1, t2), lo, hi, tol_inner).integral)
            .sum()
    };
    let total: f64 = split(a1, b1, &[a2, b2])
        .map(|(lo, hi)| quadrature::integrate(inner, lo, hi, tol_outer).integral)
        .sum();
    Ok(eta1 * eta2 * total)
}

/// Sub-intervals of `[a, b]` cut at the points strictly inside it.
fn split(a: f64, b: f64, cuts: &[f64]) -> impl Iterator<Item = (f64, f64)> {
    let mut edges = vec![a];
    let mut inside: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    inside.sort_by(f64::total_cmp);
    edges.extend(inside);
    edges.push(b);
    let pairs: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    pairs.into_iter()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::g2_cw;
    use crate::model::CoherenceSpec;

    #[test]
    fn unit_square() {
        let r = coincidence_rate(0.0, 0.0, 1.0, 1.0, 1.0, |_, _| 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_efficiency() {
        assert_eq!(coincidence_rate(0.0, 0.0, 1.0, 0.0, 1.0, |_, _| 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_window() {
        for dt in [0.0, -1.0, f64::NAN] {
            let err = coincidence_rate(0.0, 0.0, dt, 1.0, 1.0, |_, _| 1.0).unwrap_err();
            assert!(matches!(err, Error::Config { .. }));
        }
    }

    /// Reduction to a single integral over the time difference u:
    /// ∫∫ g(t2 − t1) = ∫ (dt − |u − tau|) g(u) du, done with composite
    /// Simpson on each side of the cusp at u = 0.
    fn reference(tau: f64, dt: f64, g: impl Fn(f64) -> f64) -> f64 {
        let simpson = |lo: f64, hi: f64| {
            let n = 20_000;
            let h = (hi - lo) / n as f64;
            let f = |u: f64| (dt - (u - tau).abs()) * g(u);
            let mut acc = f(lo) + f(hi);
            for i in 1..n {
                acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let (lo, hi) = (tau - dt, tau + dt);
        let mut cuts = vec![lo, tau, hi];
        if lo < 0.0 && 0.0 < hi {
            cuts.push(0.0);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2).map(|w| simpson(w[0], w[1])).sum()
    }

    #[test]
    fn matches_reduced_integral() {
        let coh = CoherenceSpec::new(100.0).unwrap();
        for (tau, dt) in [(0.0, 1.0), (0.0, 40.0), (25.0, 40.0), (-3.0, 5.0)] {
            let got = coincidence_rate(7.0, tau, dt, 0.6, 0.9, |a, b| g2_cw(b - a, &coh)).unwrap();
            let want = 0.6 * 0.9 * reference(tau, dt, |u| g2_cw(u, &coh));
            assert!(((got - want) / want).abs() < 1e-9, "tau {tau} dt {dt}: {got} vs {want}");
        }
    }

    #[test]
    fn smooth_integrand_accuracy() {
        // ∫∫ exp(t1 + t2) over [−½, ½]² = (e^½ − e^−½)².
        let got = coincidence_rate(0.0, 0.0, 1.0, 1.0, 1.0, |a, b| (a + b).exp()).unwrap();
        let want = (0.5f64.exp() - (-0.5f64).exp()).powi(2);
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn approaches_point_estimate() {
        let coh = CoherenceSpec::new(100.0).unwrap();
        let mut last = f64::INFINITY;
        let mut dt = 1.0;
        for _ in 0..6 {
            let exact = coincidence_rate(0.0, 0.0, dt, 1.0, 1.0, |a, b| g2_cw(b - a, &coh)).unwrap();
            let approx = dt * dt * g2_cw(0.0, &coh);
            let rel = ((exact - approx) / exact).abs();
            assert!(rel < last);
            last = rel;
            dt /= 2.0;
        }
    }
}
