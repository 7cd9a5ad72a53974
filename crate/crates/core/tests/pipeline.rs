//! Simulate → reduce → compare against the oracle for a spread of
//! modulation settings, and the file formats in between.

use homwave::compare::{compare_curve, oracle_values, OracleSpec};
use homwave::mcsim::simulate_run;
use homwave::model::{RunConfig, TriggerRecording};
use homwave::tagfile::{read_tag_file, write_tag_file};
use homwave::tagproc::{
    dip_histogram, find_coincidences_with, phase_histogram, DipOptions, Pairing,
};
use homwave::textio::CurveFile;

fn run(duty: f64, edge: f64, tau_opt_ticks: u64, seed: u64) -> RunConfig {
    let mut run = RunConfig::default();
    run.experiment.mu = 0.1;
    run.experiment.duration = 0.15e9;
    run.experiment.tau_opt = tau_opt_ticks as f64 * run.experiment.tick;
    run.experiment.rng_seed = seed;
    run.modulation.duty = duty;
    run.modulation.edge_time = edge;
    run.coherence.tau_coh = 100.0;
    run.recording.triggers = TriggerRecording::Divided(1000);
    run
}

fn phase_closure(run: &RunConfig, periods: u64) -> homwave::compare::Comparison {
    let stream = simulate_run(run).unwrap();
    let w = run.experiment.window_ticks();
    let coins = find_coincidences_with(&stream, w, Pairing::AllPairs).unwrap();
    let hist = phase_histogram(&coins, &stream, run.experiment.bin_width, periods).unwrap();
    let curve = hist.normalized();
    let xs: Vec<f64> = curve.xs().collect();
    let spec = OracleSpec::ModulatorPhase {
        periods,
        bin_width: run.experiment.bin_width,
        window_ticks: w,
    };
    compare_curve(&curve, &oracle_values(run, &spec, &xs).unwrap()).unwrap()
}

#[test]
fn phase_histograms_match_oracle() {
    // (duty, edge ns, delay ticks): ideal, asymmetric duty, ramps, mixed.
    let cases = [
        (0.5, 0.0, 9),
        (0.3, 0.0, 18),
        (0.5, 0.4, 0),
        (0.6, 0.2, 9),
        (0.5, 0.0, 5),
    ];
    // 90 bins in total: a 4 sigma per-bin gate keeps the family-wise false
    // alarm rate below 1%.
    for (i, &(duty, edge, d)) in cases.iter().enumerate() {
        let c = phase_closure(&run(duty, edge, d, 100 + i as u64), 1);
        assert!(
            c.max_abs_z < 4.0 && c.chi2_per_dof() < 2.0,
            "duty {duty} edge {edge} delay {d}: max |z| {:.2}, chi2/dof {:.2}",
            c.max_abs_z,
            c.chi2_per_dof()
        );
    }
}

#[test]
fn two_period_fold_matches_oracle() {
    let c = phase_closure(&run(0.5, 0.0, 9, 7), 2);
    assert_eq!(c.scores.len(), 36);
    assert!(c.chi2_per_dof() < 2.0, "chi2/dof {:.2}", c.chi2_per_dof());
}

#[test]
fn greedy_pairing_never_exceeds_all_pairs() {
    let r = run(0.5, 0.0, 9, 3);
    let stream = simulate_run(&r).unwrap();
    let w = r.experiment.window_ticks();
    let greedy = find_coincidences_with(&stream, w, Pairing::Greedy).unwrap();
    let all = find_coincidences_with(&stream, w, Pairing::AllPairs).unwrap();
    assert!(greedy.len() <= all.len());
    // At this rate multi-photon windows are rare.
    assert!(greedy.len() as f64 > 0.97 * all.len() as f64);
    assert!(greedy.pairs.iter().all(|c| c.delay().unsigned_abs() <= w));
}

#[test]
fn dip_histogram_matches_oracle() {
    let mut r = run(0.5, 0.0, 9, 11);
    r.experiment.duration = 0.3e9;
    let stream = simulate_run(&r).unwrap();
    let half = 2;
    let h = dip_histogram(
        &stream,
        &DipOptions {
            half_bin_ticks: half,
            max_lag: 600.0,
            baseline_min: 400.0,
        },
    )
    .unwrap();
    let curve = h.normalized().unwrap();
    let xs: Vec<f64> = curve.xs().collect();
    let oracle = oracle_values(
        &r,
        &OracleSpec::DetectionDelay {
            half_bin_ticks: half,
        },
        &xs,
    )
    .unwrap();
    // Score the modulated core; the wings are flat at 1.
    let (core, expected): (Vec<_>, Vec<_>) = curve
        .samples
        .iter()
        .zip(&oracle)
        .filter(|(s, _)| s.x.abs() <= 6.0)
        .map(|(s, &e)| (*s, e))
        .unzip();
    let mut sub = homwave::analytic::G2Curve::new(curve.kind);
    for s in core {
        sub.push(s.x, s.value, s.uncertainty);
    }
    let c = compare_curve(&sub, &expected).unwrap();
    assert!(c.chi2_per_dof() < 2.0, "chi2/dof {:.2}, max |z| {:.2}", c.chi2_per_dof(), c.max_abs_z);
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = run(0.5, 0.0, 9, 5);
    r.experiment.duration = 1e6;
    let stream = simulate_run(&r).unwrap();
    let path = dir.path().join("tags.bin");
    write_tag_file(&stream, &path).unwrap();
    assert_eq!(read_tag_file(&path).unwrap(), stream);

    let toml = r.to_toml_string();
    assert_eq!(RunConfig::from_toml_str(&toml).unwrap(), r);

    let w = r.experiment.window_ticks();
    let coins = find_coincidences_with(&stream, w, Pairing::Greedy).unwrap();
    let hist = phase_histogram(&coins, &stream, r.experiment.bin_width, 1).unwrap();
    let file = CurveFile::new(hist.normalized()).param("periods", 1);
    let cpath = dir.path().join("curve.tsv");
    file.write(&cpath).unwrap();
    let back = CurveFile::read(&cpath).unwrap();
    assert_eq!(back.curve.len(), 18);
    assert_eq!(back.get_param("periods"), Some("1"));
}
