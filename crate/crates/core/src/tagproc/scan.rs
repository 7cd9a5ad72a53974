use crate::analytic::{visibility, AbscissaKind, G2Curve};
use crate::{Error, Result};

/// Fewest delay settings accepted for a scan.
pub const MIN_SCAN_POINTS: usize = 8;

/// HOM visibility against optical delay.
///
/// Each dip curve is reduced to its baseline level (1 by normalization) and
/// its sample nearest τ = 0; the visibility of that pair is reported with the
/// centre sample's uncertainty. `period` is the modulation period the scan
/// must cover.
pub fn visibility_scan(dips: &[(f64, G2Curve)], period: f64) -> Result<G2Curve> {
    if dips.len() < MIN_SCAN_POINTS {
        return Err(Error::analysis(format!(
            "a scan needs at least {MIN_SCAN_POINTS} delays, got {}",
            dips.len()
        )));
    }
    let lo = dips.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let hi = dips.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < period * (1.0 - 1e-9) {
        return Err(Error::analysis(format!(
            "delays span {} ns, less than one period of {period} ns",
            hi - lo
        )));
    }
    let mut out = G2Curve::new(AbscissaKind::OpticalDelay);
    for (delay, dip) in dips {
        let centre = dip
            .samples
            .iter()
            .min_by(|a, b| a.x.abs().total_cmp(&b.x.abs()))
            .ok_or_else(|| Error::analysis(format!("empty dip curve at delay {delay} ns")))?;
        let mut pair = G2Curve::new(AbscissaKind::DetectionDelay);
        pair.push(f64::INFINITY, 1.0, None);
        pair.push(centre.x, centre.value, centre.uncertainty);
        let v = visibility(&pair)?;
        out.push(*delay, v.value, Some(v.uncertainty));
    }
    out.samples.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::g2_triangle;

    const T: f64 = 2.83;

    fn ideal_dip(delay: f64) -> G2Curve {
        let g = g2_triangle(delay, T, 1.0);
        G2Curve::from_points(
            AbscissaKind::DetectionDelay,
            [(-100.0, 1.0), (0.0, g), (100.0, 1.0)],
        )
    }

    #[test]
    fn ideal_endpoints_and_quarter() {
        let delays: Vec<f64> = (0..9).map(|i| i as f64 * T / 8.0).collect();
        let dips: Vec<(f64, G2Curve)> = delays.iter().map(|&d| (d, ideal_dip(d))).collect();
        let scan = visibility_scan(&dips, T).unwrap();
        assert!((scan.samples[0].value - 0.5).abs() < 1e-12);
        assert!((scan.samples[2].value - 0.25).abs() < 1e-12);
        assert!(scan.samples[4].value.abs() < 1e-12);
        // Monotone decrease from 0 to T/2.
        assert!(scan.samples[..5].windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn too_few_delays() {
        let dips: Vec<(f64, G2Curve)> = (0..5).map(|i| (i as f64, ideal_dip(i as f64))).collect();
        assert!(visibility_scan(&dips, T).is_err());
    }

    #[test]
    fn too_short_span() {
        let dips: Vec<(f64, G2Curve)> =
            (0..10).map(|i| (i as f64 * 0.1, ideal_dip(i as f64 * 0.1))).collect();
        assert!(visibility_scan(&dips, T).is_err());
    }
}
