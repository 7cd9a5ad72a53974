//! Data bundles behind the published figures.
//!
//! Each figure runs simulate → analyze → compare in memory and writes
//! overlay-ready curve files (measurement next to its oracle) plus a
//! gnuplot script that draws them.

use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;
use homwave::analytic::{g2_pol_general, AbscissaKind, G2Curve};
use homwave::mcsim::simulate_run;
use homwave::model::{Arm, RunConfig};
use homwave::tagproc::{fit_triangle, visibility_scan, Pairing};
use homwave::textio::CurveFile;
use serde_json::{json, Value};

use crate::commands::{dip_curve_file, dip_options, emit, phase_curve, score, Summary};
use crate::manifest::ManifestBuilder;
use crate::{OutputArgs, RunArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    #[value(name = "1b")]
    Fig1b,
    #[value(name = "2b")]
    Fig2b,
    #[value(name = "3")]
    Fig3,
    #[value(name = "4")]
    Fig4,
}

impl FigureId {
    fn name(self) -> &'static str {
        match self {
            FigureId::Fig1b => "1b",
            FigureId::Fig2b => "2b",
            FigureId::Fig3 => "3",
            FigureId::Fig4 => "4",
        }
    }
}

/// Periods shown per phase histogram.
const FOLD_PERIODS: u64 = 2;
/// Samples per modulation period in theory traces.
const THEORY_SAMPLES: usize = 200;
/// Delay settings in the triangle scan and the span they cover, in periods.
const SCAN_POINTS: usize = 24;
const SCAN_PERIODS: f64 = 2.5;
/// Optical-delay offset of the scan setup, ns.
const SCAN_DELAY_OFFSET: f64 = 0.85;
/// Slightly short half-period delay of the non-ideal theory panels, in periods.
const NONIDEAL_DELAY: f64 = 0.48;

/// The three canonical delays: in phase, quarter period, half period.
const CASES: [(&str, f64); 3] = [("tau0", 0.0), ("quarter", 0.25), ("half", 0.5)];

pub fn run(id: FigureId, all_pairs: bool, args: &RunArgs, out: &OutputArgs) -> Result<()> {
    let base = args.resolve(None)?;
    let pairing = if all_pairs { Pairing::AllPairs } else { Pairing::Greedy };
    let mut m = ManifestBuilder::begin(&out.out, &format!("figures {}", id.name()), Some(&base))?;
    if let Some(p) = &args.config {
        m.input(p)?;
    }
    let mut s = Summary::new();
    s.insert("figure".into(), json!(id.name()));
    match id {
        FigureId::Fig1b => fig1b(&mut m, &base, &mut s)?,
        FigureId::Fig2b => fig2b(&mut m, &base, pairing, &mut s)?,
        FigureId::Fig3 => fig3(&mut m, &base, &mut s)?,
        FigureId::Fig4 => fig4(&mut m, &base, pairing, &mut s)?,
    }
    s.insert("out".into(), json!(m.dir().display().to_string()));
    m.finish()?;
    emit(out, &s);
    Ok(())
}

/// Nominal delay giving a true delay of `fraction` periods.
fn nominal_delay(cfg: &RunConfig, fraction: f64) -> f64 {
    cfg.modulation.delay_offset + fraction * cfg.experiment.modulation_period()
}

/// Analytic g² and both arms' H power over two periods.
fn theory_trace(cfg: &RunConfig) -> Result<CurveFile> {
    let env = cfg.envelopes()?;
    let t = cfg.experiment.modulation_period();
    let n = FOLD_PERIODS as usize * THEORY_SAMPLES;
    let mut curve = G2Curve::new(AbscissaKind::ModulatorPhase);
    let mut arm1 = Vec::with_capacity(n);
    let mut arm2 = Vec::with_capacity(n);
    for i in 0..=n {
        let t0 = i as f64 * t / THEORY_SAMPLES as f64;
        curve.push(t0, g2_pol_general(t0, &env).value, None);
        arm1.push(env.h_power(Arm::One, t0));
        arm2.push(env.h_power(Arm::Two, t0));
    }
    Ok(CurveFile::new(curve)
        .param("tau_opt", cfg.experiment.tau_opt)
        .param("duty", cfg.modulation.duty)
        .param("edge_time", cfg.modulation.edge_time)
        .column("arm1_h", arm1)
        .column("arm2_h", arm2))
}

/// Simulated phase histogram with its oracle, written as `name`.
fn phase_case(
    m: &mut ManifestBuilder,
    cfg: &RunConfig,
    name: &str,
    pairing: Pairing,
) -> Result<Value> {
    let stream = simulate_run(cfg)?;
    let (file, n) = phase_curve(cfg, &stream, FOLD_PERIODS, pairing)?;
    let (c, oracle) = score(cfg, &file)?;
    let file = file
        .param("chi2_per_dof", c.chi2_per_dof())
        .column("oracle", oracle)
        .column("z", c.scores.iter().map(|b| b.z).collect());
    m.write_text(name, &file.to_text())?;
    Ok(json!({
        "file": name,
        "tau_opt_ns": cfg.experiment.tau_opt,
        "duty": cfg.modulation.duty,
        "coincidences": n,
        "chi2_per_dof": c.chi2_per_dof(),
        "max_abs_z": c.max_abs_z,
        "pass": c.pass,
    }))
}

fn fig1b(m: &mut ManifestBuilder, base: &RunConfig, s: &mut Summary) -> Result<()> {
    let mut files = Vec::new();
    for (tag, f) in CASES {
        let mut cfg = base.clone();
        cfg.experiment.tau_opt = nominal_delay(base, f);
        let name = format!("fig1b_{tag}.tsv");
        m.write_text(&name, &theory_trace(&cfg)?.to_text())?;
        files.push(name);
    }
    let mut gp = header("Polarization overlap and normalized coincidences");
    gp.push_str("set multiplot layout 3,1\n");
    for name in &files {
        let _ = writeln!(
            gp,
            "plot '{name}' u 1:4 w l dt 3 t 'arm 1 H', '' u 1:5 w l dt 2 t 'arm 2 H', '' u 1:2 w l lw 2 t 'g2'"
        );
    }
    gp.push_str("unset multiplot\n");
    m.write_text("fig1b.gp", &gp)?;
    s.insert("files".into(), json!(files));
    Ok(())
}

fn fig2b(m: &mut ManifestBuilder, base: &RunConfig, pairing: Pairing, s: &mut Summary) -> Result<()> {
    let mut cases = Vec::new();
    let mut gp = header("Modulator-phase histograms");
    gp.push_str("set multiplot layout 3,1\n");
    for (i, (tag, f)) in CASES.into_iter().enumerate() {
        let mut cfg = base.clone();
        cfg.experiment.tau_opt = nominal_delay(base, f);
        cfg.experiment.rng_seed = base.experiment.rng_seed.wrapping_add(i as u64);
        let name = format!("fig2b_{tag}.tsv");
        cases.push(phase_case(m, &cfg, &name, pairing)?);
        let _ = writeln!(
            gp,
            "plot '{name}' u 1:2:3 w yerr t 'MC', '' u 1:6 w histeps lw 2 t 'oracle'"
        );
    }
    gp.push_str("unset multiplot\n");
    m.write_text("fig2b.gp", &gp)?;
    s.insert("cases".into(), json!(cases));
    Ok(())
}

fn fig3(m: &mut ManifestBuilder, base: &RunConfig, s: &mut Summary) -> Result<()> {
    let t = base.experiment.modulation_period();
    let mut dips = Vec::with_capacity(SCAN_POINTS);
    let mut cfg = base.clone();
    cfg.modulation.delay_offset = SCAN_DELAY_OFFSET;
    for i in 0..SCAN_POINTS {
        cfg.experiment.tau_opt = SCAN_PERIODS * t * i as f64 / (SCAN_POINTS - 1) as f64;
        cfg.experiment.rng_seed = base.experiment.rng_seed.wrapping_add(i as u64);
        let stream = simulate_run(&cfg)?;
        let file = dip_curve_file(&cfg, &stream, &dip_options(&cfg, None, None))?;
        m.write_text(&format!("fig3_dip_{i:02}.tsv"), &file.to_text())?;
        dips.push((cfg.experiment.tau_opt, file.curve));
    }
    let scan = visibility_scan(&dips, t)?;
    let fit = fit_triangle(&scan)?;
    let file = CurveFile::new(scan)
        .param("half_bin_ticks", cfg.experiment.window_ticks())
        .param("delay_offset", SCAN_DELAY_OFFSET);
    let (c, oracle) = score(&cfg, &file)?;
    let model: Vec<f64> = file
        .curve
        .xs()
        .map(|x| {
            let p = |k: &str| fit.value(k);
            p("floor") + p("amplitude") * homwave::model::eval_triangle_wave(p("period"), x - p("offset"))
        })
        .collect();
    let file = file
        .param("chi2_per_dof", c.chi2_per_dof())
        .column("oracle", oracle)
        .column("fit", model);
    m.write_text("fig3_scan.tsv", &file.to_text())?;
    m.write_text("fig3_fit.json", &serde_json::to_string_pretty(&fit)?)?;
    let mut gp = header("Dip visibility against optical delay");
    gp.push_str("plot 'fig3_scan.tsv' u 1:2:3 w yerr t 'MC', '' u 1:5 w l t 'fit', '' u 1:4 w l dt 2 t 'oracle'\n");
    m.write_text("fig3.gp", &gp)?;
    s.insert("delays".into(), json!(SCAN_POINTS));
    s.insert("fit_period_ns".into(), json!(fit.value("period")));
    s.insert("fit_period_sigma_ns".into(), json!(fit.uncertainty("period")));
    s.insert("fit_offset_ns".into(), json!(fit.value("offset")));
    s.insert("fit_offset_sigma_ns".into(), json!(fit.uncertainty("offset")));
    s.insert("oracle_chi2_per_dof".into(), json!(c.chi2_per_dof()));
    Ok(())
}

fn fig4(m: &mut ManifestBuilder, base: &RunConfig, pairing: Pairing, s: &mut Summary) -> Result<()> {
    for (name, duty) in [("fig4_theory_duty50.tsv", 0.5), ("fig4_theory_duty70.tsv", 0.7)] {
        let mut cfg = base.clone();
        cfg.modulation.duty = duty;
        cfg.experiment.tau_opt = nominal_delay(base, NONIDEAL_DELAY);
        m.write_text(name, &theory_trace(&cfg)?.to_text())?;
    }
    let mut cfg = base.clone();
    cfg.modulation.duty = 0.7;
    cfg.experiment.tau_opt = nominal_delay(base, 0.5);
    let case = phase_case(m, &cfg, "fig4_mc.tsv", pairing)?;
    let mut gp = header("Asymmetric duty cycle at half-period delay");
    gp.push_str("set multiplot layout 3,1\n");
    for name in ["fig4_theory_duty50.tsv", "fig4_theory_duty70.tsv"] {
        let _ = writeln!(
            gp,
            "plot '{name}' u 1:4 w l dt 3 t 'arm 1 H', '' u 1:5 w l dt 2 t 'arm 2 H', '' u 1:2 w l lw 2 t 'g2'"
        );
    }
    gp.push_str("plot 'fig4_mc.tsv' u 1:2:3 w yerr t 'MC', '' u 1:6 w histeps lw 2 t 'oracle'\n");
    gp.push_str("unset multiplot\n");
    m.write_text("fig4.gp", &gp)?;
    s.insert("case".into(), case);
    Ok(())
}

fn header(title: &str) -> String {
    format!(
        "# gnuplot script; run from this directory: gnuplot -p <script>\n\
         set title '{title}'\nset key outside\nset grid\n"
    )
}
