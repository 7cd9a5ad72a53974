//! Weighted Levenberg-Marquardt fits of the dip and triangle models.
//!
//! Residuals are `(model − y)/σ` with the per-sample uncertainties of the
//! curve (unit weights when a sample carries none). Parameter errors come
//! from `(JᵀJ)⁻¹·χ²/(n − p)`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use serde::{Deserialize, Serialize};

use crate::analytic::G2Curve;
use crate::model::eval_triangle_wave;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// 1σ
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: Vec<FitParameter>,
    pub chi2: f64,
    pub dof: usize,
    /// Euclidean norm of the weighted residuals.
    pub residual_norm: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.value)
    }

    pub fn uncertainty(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.uncertainty)
    }

    pub fn chi2_per_dof(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }
}

/// Model value at `x` for parameters `p`; writes ∂f/∂p into `grad`.
/// `None` marks parameters outside the model's domain.
type ModelFn = fn(&[f64], f64, &mut [f64]) -> Option<f64>;

struct Problem<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    sigma: &'a [f64],
    params: DVector<f64>,
    model: ModelFn,
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let p = self.params.as_slice();
        let mut grad = vec![0.0; p.len()];
        let mut r = DVector::zeros(self.xs.len());
        for i in 0..self.xs.len() {
            let f = (self.model)(p, self.xs[i], &mut grad)?;
            r[i] = (f - self.ys[i]) / self.sigma[i];
        }
        Some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let p = self.params.as_slice();
        let mut grad = vec![0.0; p.len()];
        let mut j = DMatrix::zeros(self.xs.len(), p.len());
        for i in 0..self.xs.len() {
            (self.model)(p, self.xs[i], &mut grad)?;
            for (k, g) in grad.iter().enumerate() {
                j[(i, k)] = g / self.sigma[i];
            }
        }
        Some(j)
    }
}

struct Data {
    xs: Vec<f64>,
    ys: Vec<f64>,
    sigma: Vec<f64>,
}

impl Data {
    fn from_curve(curve: &G2Curve) -> Result<Self> {
        let mut d = Data {
            xs: vec![],
            ys: vec![],
            sigma: vec![],
        };
        for s in &curve.samples {
            if !(s.x.is_finite() && s.value.is_finite()) {
                continue;
            }
            let sigma = match s.uncertainty {
                Some(u) if u.is_finite() && u > 0.0 => u,
                Some(_) => continue,
                None => 1.0,
            };
            d.xs.push(s.x);
            d.ys.push(s.value);
            d.sigma.push(sigma);
        }
        if d.xs.is_empty() {
            return Err(Error::analysis("no usable samples to fit"));
        }
        Ok(d)
    }
}

fn run_fit(data: &Data, p0: &[f64], model: ModelFn, names: &[&str], label: &str) -> Result<FitResult> {
    let n = data.xs.len();
    let np = p0.len();
    if n <= np {
        return Err(Error::analysis(format!(
            "{label} fit needs more than {np} samples, got {n}"
        )));
    }
    let problem = Problem {
        xs: &data.xs,
        ys: &data.ys,
        sigma: &data.sigma,
        params: DVector::from_row_slice(p0),
        model,
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_patience(200)
        .minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::analysis(format!(
            "{label} fit did not converge: {:?}",
            report.termination
        )));
    }
    let r = problem
        .residuals()
        .ok_or_else(|| Error::analysis(format!("{label} fit left the model domain")))?;
    let j = problem
        .jacobian()
        .ok_or_else(|| Error::analysis(format!("{label} fit left the model domain")))?;
    let chi2 = r.norm_squared();
    let dof = n - np;
    let jtj = j.transpose() * &j;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::analysis(format!("{label} fit has a singular curvature matrix")))?;
    let scale = chi2 / dof as f64;
    let parameters = names
        .iter()
        .enumerate()
        .map(|(k, name)| FitParameter {
            name: name.to_string(),
            value: problem.params[k],
            uncertainty: (cov[(k, k)] * scale).max(0.0).sqrt(),
        })
        .collect();
    Ok(FitResult {
        model: label.to_string(),
        parameters,
        chi2,
        dof,
        residual_norm: chi2.sqrt(),
        converged: true,
    })
}

/// `1 − V·exp(−2|x|/τ − 2x²/τ²)`, parameters `[V, τ]`.
fn voigt_model(p: &[f64], x: f64, grad: &mut [f64]) -> Option<f64> {
    let (v, tau) = (p[0], p[1]);
    if !(tau > 0.0) {
        return None;
    }
    let u = x.abs() / tau;
    let e = (-2.0 * u - 2.0 * u * u).exp();
    grad[0] = -e;
    grad[1] = -v * e * (2.0 * u + 4.0 * u * u) / tau;
    Some(1.0 - v * e)
}

/// Half-depth half-width of the dip in units of τ: the root of 2u + 2u² = ln 2.
fn half_depth_ratio() -> f64 {
    0.5 * ((1.0 + 2.0 * std::f64::consts::LN_2).sqrt() - 1.0)
}

/// Fits the stationary HOM dip; parameters `visibility` and `tau_coh`.
///
/// The curve must extend to at least 3·τ_coh on both sides.
pub fn fit_voigt_dip(curve: &G2Curve) -> Result<FitResult> {
    let data = Data::from_curve(curve)?;
    let (imin, ymin) = data
        .ys
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let v0 = 1.0 - ymin;
    if !(v0 > 0.0) {
        return Err(Error::analysis("curve shows no dip below 1"));
    }
    let x0 = data.xs[imin];
    let half = 1.0 - 0.5 * v0;
    let mut order: Vec<usize> = (0..data.xs.len()).collect();
    order.sort_by(|&a, &b| data.xs[a].total_cmp(&data.xs[b]));
    let crossing = |right: bool| -> Option<f64> {
        let idx: Vec<usize> = if right {
            order.iter().copied().filter(|&i| data.xs[i] >= x0).collect()
        } else {
            order.iter().rev().copied().filter(|&i| data.xs[i] <= x0).collect()
        };
        idx.iter()
            .find(|&&i| data.ys[i] >= half)
            .map(|&i| (data.xs[i] - x0).abs())
    };
    let widths: Vec<f64> = [crossing(false), crossing(true)].into_iter().flatten().collect();
    if widths.is_empty() {
        return Err(Error::analysis("dip never recovers to half depth"));
    }
    let hw = (widths.iter().sum::<f64>() / widths.len() as f64).max(1e-12);
    let tau0 = hw / half_depth_ratio();

    let fit = run_fit(&data, &[v0, tau0], voigt_model, &["visibility", "tau_coh"], "voigt")?;
    let tau = fit.value("tau_coh");
    let lo = data.xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > -3.0 * tau || hi < 3.0 * tau {
        return Err(Error::analysis(format!(
            "dip curve spans [{lo}, {hi}] ns, needs ±3·tau_coh = ±{} ns",
            3.0 * tau
        )));
    }
    Ok(fit)
}

/// `floor + amplitude·TW(x − offset)` with free period, parameters
/// `[floor, amplitude, offset, period]`.
fn triangle_model(p: &[f64], x: f64, grad: &mut [f64]) -> Option<f64> {
    let (floor, amp, offset, period) = (p[0], p[1], p[2], p[3]);
    if !(period > 0.0) {
        return None;
    }
    let r = x - offset;
    let n = (r / period).round();
    let d = r - n * period;
    let tw = eval_triangle_wave(period, r);
    let sign = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    };
    grad[0] = 1.0;
    grad[1] = tw;
    grad[2] = amp * 2.0 * sign / period;
    grad[3] = amp * 2.0 * (n * sign * period + d.abs()) / (period * period);
    Some(floor + amp * tw)
}

/// Period and phase of the strongest Fourier component on a fine frequency
/// grid. Returns `(period, offset)` with the fundamental's maximum at
/// `offset`.
fn periodogram_peak(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return None;
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let spacing = span / (xs.len() - 1).max(1) as f64;
    let f_lo = 0.5 / span;
    let f_hi = 0.5 / spacing;
    let steps = 4000;
    let mut best = (0.0, f_lo, 0.0);
    for i in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * i as f64 / steps as f64;
        let w = std::f64::consts::TAU * f;
        let (mut re, mut im) = (0.0, 0.0);
        for (x, y) in xs.iter().zip(ys) {
            re += (y - mean) * (w * x).cos();
            im -= (y - mean) * (w * x).sin();
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, f, im.atan2(re));
        }
    }
    let (_, f, arg) = best;
    let period = 1.0 / f;
    Some((period, (-arg / (std::f64::consts::TAU * f)).rem_euclid(period)))
}

/// Fits a triangle wave of free period to a visibility scan; parameters
/// `floor`, `amplitude`, `offset` (reduced to `[0, period)`) and `period`.
///
/// The scan must cover at least 1.5 fitted periods, with 5% slack for the
/// fit's own period error.
pub fn fit_triangle(scan: &G2Curve) -> Result<FitResult> {
    let data = Data::from_curve(scan)?;
    let (p0, o0) = periodogram_peak(&data.xs, &data.ys)
        .ok_or_else(|| Error::analysis("scan has no extent"))?;
    let ymin = data.ys.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = data.ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let names = ["floor", "amplitude", "offset", "period"];

    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for scale in [1.0, 0.95, 1.05, 0.9, 1.1] {
        for shift in [0.0, 0.25, -0.25] {
            let period = p0 * scale;
            let start = [ymin, ymax - ymin, o0 + shift * period, period];
            match run_fit(&data, &start, triangle_model, &names, "triangle") {
                Ok(fit) if best.as_ref().is_none_or(|b| fit.chi2 < b.chi2) => best = Some(fit),
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
        }
    }
    let mut fit = best.ok_or_else(|| last_err.expect("at least one start"))?;
    // floor + a·TW(x − o) equals (floor + a) − a·TW(x − o − P/2); report the
    // branch with a positive amplitude so the offset marks the maximum.
    if fit.value("amplitude") < 0.0 {
        let (f, a, o, p) = (
            fit.value("floor"),
            fit.value("amplitude"),
            fit.value("offset"),
            fit.value("period"),
        );
        fit = run_fit(&data, &[f + a, -a, o + 0.5 * p, p], triangle_model, &names, "triangle")?;
    }
    let period = fit.value("period");
    let lo = data.xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1.5 * period * 0.95 {
        return Err(Error::analysis(format!(
            "scan spans {} ns, less than 1.5 fitted periods of {period} ns",
            hi - lo
        )));
    }
    if let Some(p) = fit.parameters.iter_mut().find(|p| p.name == "offset") {
        p.value = p.value.rem_euclid(period);
    }
    Ok(fit)
}
