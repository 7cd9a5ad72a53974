use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use homwave::analytic::{visibility, AbscissaKind, G2Curve};
use homwave::compare::{compare_curve, oracle_values, Comparison, OracleSpec};
use homwave::mcsim::simulate_run;
use homwave::model::RunConfig;
use homwave::tagfile::{read_tag_file, write_tag_file};
use homwave::tagproc::{
    dip_histogram, find_coincidences_with, fit_triangle, fit_voigt_dip, phase_histogram,
    visibility_scan, DipOptions, Pairing,
};
use homwave::tags::{Channel, TagStream};
use homwave::textio::CurveFile;
use serde_json::{json, Map, Value};

use crate::manifest::ManifestBuilder;
use crate::{ComparisonFailed, Mode, OutputArgs, RunArgs};

pub const TAG_FILE: &str = "tags.homtag";
pub const CONFIG_FILE: &str = "config.toml";

pub type Summary = Map<String, Value>;

pub fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

/// Prints `summary` as `key: value` lines or as one JSON object.
pub fn emit(out: &OutputArgs, summary: &Summary) {
    if out.json_summary {
        println!("{}", Value::Object(summary.clone()));
        return;
    }
    for (k, v) in summary {
        match v {
            Value::String(s) => println!("{k}: {s}"),
            other => println!("{k}: {other}"),
        }
    }
}

fn analysis(reason: impl Into<String>) -> homwave::Error {
    homwave::Error::Analysis(reason.into())
}

fn data(reason: impl Into<String>) -> homwave::Error {
    homwave::Error::Data(reason.into())
}

pub fn simulate(args: &RunArgs, out: &OutputArgs) -> Result<()> {
    let cfg = args.resolve(None)?;
    let mut m = ManifestBuilder::begin(&out.out, "simulate", Some(&cfg))?;
    if let Some(p) = &args.config {
        m.input(p)?;
    }
    if cfg.experiment.duration == 0.0 {
        warn("duration is 0 s; writing an empty tag stream");
    }
    let stream = simulate_run(&cfg)?;
    write_tag_file(&stream, m.path(TAG_FILE))?;
    let digest = m.output(TAG_FILE)?.sha256.clone();
    m.write_text(CONFIG_FILE, &cfg.to_toml_string())?;
    m.finish()?;

    let mut s = stream_summary(&stream, cfg.experiment.duration * 1e-9);
    s.insert("seed".into(), json!(cfg.experiment.rng_seed));
    s.insert("tag_file".into(), json!(out.out.join(TAG_FILE).display().to_string()));
    s.insert("sha256".into(), json!(digest));
    emit(out, &s);
    Ok(())
}

fn stream_summary(stream: &TagStream, seconds: f64) -> Summary {
    let rate = |n: usize| if seconds > 0.0 { n as f64 / seconds } else { 0.0 };
    let d3 = stream.count(Channel::Det3);
    let d4 = stream.count(Channel::Det4);
    let mut s = Summary::new();
    s.insert("duration_s".into(), json!(seconds));
    s.insert("records".into(), json!(stream.len()));
    s.insert("singles_det3".into(), json!(d3));
    s.insert("singles_det4".into(), json!(d4));
    s.insert("singles_rate_det3_per_s".into(), json!(rate(d3)));
    s.insert("singles_rate_det4_per_s".into(), json!(rate(d4)));
    s.insert("triggers".into(), json!(stream.count(Channel::Trigger)));
    s
}

/// Tag file behind `input` and the run configuration stored next to it.
fn locate(input: &Path) -> (PathBuf, PathBuf) {
    if input.is_dir() {
        (input.join(TAG_FILE), input.join(CONFIG_FILE))
    } else {
        let dir = input.parent().unwrap_or(Path::new("."));
        (input.to_path_buf(), dir.join(CONFIG_FILE))
    }
}

pub struct AnalyzeOptions {
    pub mode: Mode,
    pub periods: u64,
    pub max_lag: Option<f64>,
    pub baseline_min: Option<f64>,
    pub all_pairs: bool,
}

impl AnalyzeOptions {
    fn pairing(&self) -> Pairing {
        if self.all_pairs {
            Pairing::AllPairs
        } else {
            Pairing::Greedy
        }
    }
}

pub fn pairing_name(p: Pairing) -> &'static str {
    match p {
        Pairing::Greedy => "greedy",
        Pairing::AllPairs => "all_pairs",
    }
}

/// Dip binning: the centre bin spans the coincidence window; lags reach
/// 5 τ_c with the baseline beyond 4 τ_c unless overridden.
pub fn dip_options(cfg: &RunConfig, max_lag: Option<f64>, baseline_min: Option<f64>) -> DipOptions {
    let tc = cfg.coherence.tau_coh;
    DipOptions {
        half_bin_ticks: cfg.experiment.window_ticks(),
        max_lag: max_lag.unwrap_or(5.0 * tc),
        baseline_min: baseline_min.unwrap_or(4.0 * tc),
    }
}

/// Normalized phase histogram with raw counts and expectations as columns.
pub fn phase_curve(
    cfg: &RunConfig,
    stream: &TagStream,
    periods: u64,
    pairing: Pairing,
) -> Result<(CurveFile, usize)> {
    let w = cfg.experiment.window_ticks();
    let coins = find_coincidences_with(stream, w, pairing)?;
    if coins.is_empty() {
        return Err(analysis("no coincidences in the tag stream").into());
    }
    let hist = phase_histogram(&coins, stream, cfg.experiment.bin_width, periods)?;
    if hist.skipped > 0 {
        warn(format!("{} coincidences precede the first trigger and were skipped", hist.skipped));
    }
    let file = CurveFile::new(hist.normalized())
        .param("periods", periods)
        .param("bin_width", cfg.experiment.bin_width)
        .param("window_ticks", w)
        .param("pairing", pairing_name(pairing))
        .param("tau_opt", cfg.experiment.tau_opt)
        .column("counts", hist.counts.iter().map(|&c| c as f64).collect())
        .column("expected", hist.expected.clone());
    Ok((file, coins.len()))
}

pub fn dip_curve_file(cfg: &RunConfig, stream: &TagStream, opts: &DipOptions) -> Result<CurveFile> {
    let h = dip_histogram(stream, opts)?;
    Ok(CurveFile::new(h.normalized()?)
        .param("half_bin_ticks", opts.half_bin_ticks)
        .param("max_lag", opts.max_lag)
        .param("baseline_min", opts.baseline_min)
        .param("tau_opt", cfg.experiment.tau_opt)
        .column("counts", h.counts.iter().map(|&c| c as f64).collect()))
}

fn centre(curve: &G2Curve) -> Option<homwave::analytic::CurveSample> {
    curve
        .samples
        .iter()
        .min_by(|a, b| a.x.abs().total_cmp(&b.x.abs()))
        .copied()
}

pub fn analyze(inputs: &[PathBuf], opts: &AnalyzeOptions, args: &RunArgs, out: &OutputArgs) -> Result<()> {
    let mut s = Summary::new();
    match opts.mode {
        Mode::PhaseHistogram | Mode::Dip => {
            let [input] = inputs else {
                return Err(homwave::Error::Config {
                    field: "inputs".into(),
                    reason: "this mode takes exactly one tag file".into(),
                }
                .into());
            };
            let (tags, sibling) = locate(input);
            let cfg = args.resolve(Some(&sibling))?;
            let stream = read_tag_file(&tags).with_context(|| format!("reading {}", tags.display()))?;
            let mode_name = if opts.mode == Mode::Dip { "dip" } else { "phase-histogram" };
            let mut m = ManifestBuilder::begin(&out.out, &format!("analyze {mode_name}"), Some(&cfg))?;
            m.input(&tags)?;
            m.write_text(CONFIG_FILE, &cfg.to_toml_string())?;
            s.insert("mode".into(), json!(mode_name));
            if opts.mode == Mode::PhaseHistogram {
                let (file, n) = phase_curve(&cfg, &stream, opts.periods, opts.pairing())?;
                m.write_text("phase_histogram.tsv", &file.to_text())?;
                s.insert("coincidences".into(), json!(n));
                s.insert("pairing".into(), json!(pairing_name(opts.pairing())));
                s.insert("bins".into(), json!(file.curve.len()));
                let v = visibility(&file.curve)?;
                s.insert("pattern_visibility".into(), json!(v.value));
                s.insert("pattern_visibility_sigma".into(), json!(v.uncertainty));
                s.insert("curve".into(), json!(m.path("phase_histogram.tsv").display().to_string()));
            } else {
                let dopts = dip_options(&cfg, opts.max_lag, opts.baseline_min);
                let file = dip_curve_file(&cfg, &stream, &dopts)?;
                m.write_text("dip.tsv", &file.to_text())?;
                if let Some(c) = centre(&file.curve) {
                    s.insert("centre_g2".into(), json!(c.value));
                    s.insert("centre_g2_sigma".into(), json!(c.uncertainty));
                }
                match fit_voigt_dip(&file.curve) {
                    Ok(fit) => {
                        m.write_text("dip_fit.json", &serde_json::to_string_pretty(&fit)?)?;
                        s.insert("fit_visibility".into(), json!(fit.value("visibility")));
                        s.insert("fit_tau_coh_ns".into(), json!(fit.value("tau_coh")));
                        s.insert("fit_tau_coh_sigma_ns".into(), json!(fit.uncertainty("tau_coh")));
                    }
                    Err(e) => warn(format!("dip fit skipped: {e}")),
                }
                s.insert("curve".into(), json!(m.path("dip.tsv").display().to_string()));
            }
            m.finish()?;
        }
        Mode::Scan => {
            let mut m = ManifestBuilder::begin(&out.out, "analyze scan", None)?;
            let mut dips = Vec::new();
            let mut first: Option<RunConfig> = None;
            for input in inputs {
                let (tags, sibling) = locate(input);
                if args.config.is_none() && !sibling.is_file() {
                    return Err(homwave::Error::Config {
                        field: "inputs".into(),
                        reason: format!(
                            "no {CONFIG_FILE} next to {}; a scan reads each run's delay from it",
                            tags.display()
                        ),
                    }
                    .into());
                }
                let cfg = args.resolve(Some(&sibling))?;
                let stream = read_tag_file(&tags).with_context(|| format!("reading {}", tags.display()))?;
                m.input(&tags)?;
                let dopts = dip_options(&cfg, opts.max_lag, opts.baseline_min);
                let curve = dip_histogram(&stream, &dopts)?.normalized()?;
                dips.push((cfg.experiment.tau_opt, curve));
                first.get_or_insert(cfg);
            }
            let cfg = first.ok_or_else(|| data("no scan inputs"))?;
            let scan = visibility_scan(&dips, cfg.experiment.modulation_period())?;
            let file = CurveFile::new(scan)
                .param("half_bin_ticks", cfg.experiment.window_ticks())
                .param("delay_offset", cfg.modulation.delay_offset);
            m.write_text(CONFIG_FILE, &cfg.to_toml_string())?;
            m.write_text("scan.tsv", &file.to_text())?;
            s.insert("mode".into(), json!("scan"));
            s.insert("delays".into(), json!(file.curve.len()));
            match fit_triangle(&file.curve) {
                Ok(fit) => {
                    m.write_text("scan_fit.json", &serde_json::to_string_pretty(&fit)?)?;
                    s.insert("fit_period_ns".into(), json!(fit.value("period")));
                    s.insert("fit_period_sigma_ns".into(), json!(fit.uncertainty("period")));
                    s.insert("fit_offset_ns".into(), json!(fit.value("offset")));
                    s.insert("fit_offset_sigma_ns".into(), json!(fit.uncertainty("offset")));
                }
                Err(e) => warn(format!("triangle fit skipped: {e}")),
            }
            s.insert("curve".into(), json!(m.path("scan.tsv").display().to_string()));
            m.finish()?;
        }
    }
    emit(out, &s);
    Ok(())
}

fn param<T: std::str::FromStr>(file: &CurveFile, key: &str) -> Result<T> {
    let raw = file
        .get_param(key)
        .ok_or_else(|| data(format!("curve header lacks `{key}`")))?;
    raw.parse()
        .map_err(|_| data(format!("curve header `{key}={raw}` is not valid")).into())
}

/// Oracle binning recorded in a curve file's header.
pub fn oracle_spec(file: &CurveFile) -> Result<OracleSpec> {
    Ok(match file.curve.kind {
        AbscissaKind::ModulatorPhase => OracleSpec::ModulatorPhase {
            periods: param(file, "periods")?,
            bin_width: param(file, "bin_width")?,
            window_ticks: param(file, "window_ticks")?,
        },
        AbscissaKind::DetectionDelay => OracleSpec::DetectionDelay {
            half_bin_ticks: param(file, "half_bin_ticks")?,
        },
        AbscissaKind::OpticalDelay => OracleSpec::OpticalDelay {
            half_bin_ticks: param(file, "half_bin_ticks")?,
        },
    })
}

/// Scores `file` against the oracle of `cfg`; returns the comparison and
/// the oracle values.
pub fn score(cfg: &RunConfig, file: &CurveFile) -> Result<(Comparison, Vec<f64>)> {
    if file.curve.is_empty() {
        return Err(analysis("cannot compare an empty curve").into());
    }
    let spec = oracle_spec(file)?;
    let xs: Vec<f64> = file.curve.xs().collect();
    let oracle = oracle_values(cfg, &spec, &xs)?;
    Ok((compare_curve(&file.curve, &oracle)?, oracle))
}

pub fn comparison_file(kind: AbscissaKind, c: &Comparison) -> CurveFile {
    let mut curve = G2Curve::new(kind);
    for b in &c.scores {
        curve.push(b.x, b.measured, Some(b.sigma));
    }
    CurveFile::new(curve)
        .param("chi2", c.chi2)
        .param("dof", c.dof)
        .param("pass", c.pass)
        .column("expected", c.scores.iter().map(|b| b.expected).collect())
        .column("z", c.scores.iter().map(|b| b.z).collect())
}

pub fn compare(curve: &Path, args: &RunArgs, out: &OutputArgs) -> Result<()> {
    let file = CurveFile::read(curve).with_context(|| format!("reading {}", curve.display()))?;
    let sibling = curve.parent().unwrap_or(Path::new(".")).join(CONFIG_FILE);
    let cfg = args.resolve(Some(&sibling))?;
    let (c, _) = score(&cfg, &file)?;
    let mut m = ManifestBuilder::begin(&out.out, "compare", Some(&cfg))?;
    m.input(curve)?;
    m.write_text("comparison.tsv", &comparison_file(file.curve.kind, &c).to_text())?;
    m.finish()?;

    let mut s = Summary::new();
    s.insert("kind".into(), json!(file.curve.kind.as_str()));
    s.insert("bins".into(), json!(c.dof));
    s.insert("chi2".into(), json!(c.chi2));
    s.insert("chi2_per_dof".into(), json!(c.chi2_per_dof()));
    s.insert("max_abs_z".into(), json!(c.max_abs_z));
    s.insert("pass".into(), json!(c.pass));
    emit(out, &s);
    if c.pass {
        Ok(())
    } else {
        Err(ComparisonFailed {
            max_abs_z: c.max_abs_z,
            chi2_per_dof: c.chi2_per_dof(),
        }
        .into())
    }
}
