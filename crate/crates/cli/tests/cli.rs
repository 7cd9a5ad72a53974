use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn homwave(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homwave"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HOMWAVE_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|_| {
        panic!("stdout is not JSON: {}", String::from_utf8_lossy(&o.stdout))
    })
}

/// Bright, short-coherence config so small runs carry statistics.
fn quick_config(dir: &Path, mu: f64, seconds: f64, modulated: bool) -> PathBuf {
    let path = dir.join(format!("quick_{mu}_{seconds}_{modulated}.toml"));
    let text = format!(
        "[experiment]\nmu = {mu}\nduration = {}\n\n[modulation]\nenabled = {modulated}\n\n\
         [coherence]\ntau_coh = 100.0\n\n[recording]\ntriggers = {{ divided = 1000 }}\n",
        seconds * 1e9
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 0.05, 0.002, true);
    let mut digests = Vec::new();
    for out in ["a", "b"] {
        let o = homwave(
            &["simulate", "--config", s(&cfg), "--seed", "9", "--out", out, "--json-summary"],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let j = summary(&o);
        assert!(j["singles_det3"].as_u64().unwrap() > 0);
        assert!(j["triggers"].as_u64().unwrap() > 0);
        digests.push(j["sha256"].as_str().unwrap().to_string());
        let man: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(out).join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(man["command"], "simulate");
        assert_eq!(man["seed"], 9);
        let outputs: Vec<&str> = man["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["path"].as_str().unwrap())
            .collect();
        assert_eq!(outputs, ["tags.homtag", "config.toml"]);
        assert_eq!(man["outputs"][0]["sha256"], j["sha256"]);
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn default_run_singles_rate_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = homwave(&["simulate", "--duration", "0.05", "--out", "r", "--json-summary"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = summary(&o);
    let total = j["singles_rate_det3_per_s"].as_f64().unwrap() + j["singles_rate_det4_per_s"].as_f64().unwrap();
    assert!((0.5e6..3e6).contains(&total), "singles {total}/s");
}

#[test]
fn zero_duration_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = homwave(&["simulate", "--duration", "0", "--out", "z"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
    assert!(dir.path().join("z/tags.homtag").is_file());
}

#[test]
fn invalid_config_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = homwave(&["simulate", "--duty", "1.5", "--out", "x"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("modulation.duty"), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.toml"), "[experiment]\nmu = -1\n").unwrap();
    let o = homwave(&["simulate", "--config", "bad.toml", "--out", "x"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("experiment.mu"), "{}", stderr(&o));
}

#[test]
fn corrupt_tag_file_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 0.05, 0.001, true);
    let o = homwave(&["simulate", "--config", s(&cfg), "--out", "r"], dir.path());
    assert_eq!(code(&o), 0);
    let tags = dir.path().join("r/tags.homtag");
    let bytes = std::fs::read(&tags).unwrap();
    std::fs::write(&tags, &bytes[..bytes.len() - 5]).unwrap();
    let o = homwave(&["analyze", "r", "--out", "a"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("byte offset"), "{}", stderr(&o));
}

#[test]
fn analyze_then_compare_detects_wrong_delay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 0.1, 0.1, true);
    let o = homwave(
        &["simulate", "--config", s(&cfg), "--delay", "0.703125", "--out", "r"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = homwave(&["analyze", "r", "--all-pairs", "--out", "a", "--json-summary"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = summary(&o);
    assert_eq!(j["bins"], 18);
    assert!((j["pattern_visibility"].as_f64().unwrap() - 0.5).abs() < 0.1);

    let o = homwave(&["compare", "a/phase_histogram.tsv", "--out", "c", "--json-summary"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(summary(&o)["pass"], true);
    assert!(dir.path().join("c/comparison.tsv").is_file());

    let o = homwave(
        &["compare", "a/phase_histogram.tsv", "--delay", "0", "--out", "w", "--json-summary"],
        dir.path(),
    );
    assert_eq!(code(&o), 6);
    let j = summary(&o);
    assert_eq!(j["pass"], false);
    assert!(j["chi2_per_dof"].as_f64().unwrap() > 10.0);
}

#[test]
fn compare_rejects_empty_and_misaligned_curves() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("empty.tsv"),
        "# homwave-curve kind=t0 periods=1 bin_width=0.15625 window_ticks=4\n# x\tvalue\tuncertainty\n",
    )
    .unwrap();
    let o = homwave(&["compare", "empty.tsv", "--out", "c1"], dir.path());
    assert_eq!(code(&o), 5, "{}", stderr(&o));

    std::fs::write(
        dir.path().join("off.tsv"),
        "# homwave-curve kind=t0 periods=1 bin_width=0.15625 window_ticks=4\n# x\tvalue\tuncertainty\n0.1\t1\t0.1\n",
    )
    .unwrap();
    let o = homwave(&["compare", "off.tsv", "--out", "c2"], dir.path());
    assert_eq!(code(&o), 5, "{}", stderr(&o));

    std::fs::write(
        dir.path().join("nohead.tsv"),
        "# homwave-curve kind=t0\n# x\tvalue\tuncertainty\n0.078125\t1\t0.1\n",
    )
    .unwrap();
    let o = homwave(&["compare", "nohead.tsv", "--out", "c3"], dir.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn cw_dip_reaches_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 0.05, 0.5, false);
    let o = homwave(&["simulate", "--config", s(&cfg), "--out", "r"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = homwave(&["analyze", "r", "--mode", "dip", "--out", "d", "--json-summary"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = summary(&o);
    let g = j["centre_g2"].as_f64().unwrap();
    let sg = j["centre_g2_sigma"].as_f64().unwrap();
    assert!((g - 0.5).abs() < 3.0 * sg, "centre {g} ± {sg}");
    assert!(dir.path().join("d/dip_fit.json").is_file());
    let o = homwave(&["compare", "d/dip.tsv", "--out", "c"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn scan_over_run_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 0.05, 0.05, true);
    let mut runs = Vec::new();
    for i in 0..10 {
        let delay = format!("{}", i as f64 * 0.3125);
        let out = format!("r{i}");
        let o = homwave(
            &["simulate", "--config", s(&cfg), "--delay", &delay, "--seed", &i.to_string(), "--out", &out],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        runs.push(out);
    }
    let mut args = vec!["analyze", "--mode", "scan", "--out", "s", "--json-summary"];
    args.extend(runs.iter().map(String::as_str));
    let o = homwave(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(summary(&o)["delays"], 10);
    assert!(dir.path().join("s/scan.tsv").is_file());

    // Too few delays for a scan.
    let o = homwave(&["analyze", "--mode", "scan", "--out", "t", "r0", "r1"], dir.path());
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn figures_write_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let o = homwave(&["figures", "1b", "--out", "f1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["fig1b_tau0.tsv", "fig1b_quarter.tsv", "fig1b_half.tsv", "fig1b.gp", "manifest.json"] {
        assert!(dir.path().join("f1").join(f).is_file(), "{f}");
    }

    let cfg = quick_config(dir.path(), 0.1, 0.05, true);
    let o = homwave(&["figures", "2b", "--config", s(&cfg), "--out", "f2", "--json-summary"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cases = summary(&o)["cases"].as_array().unwrap().clone();
    assert_eq!(cases.len(), 3);
    let text = std::fs::read_to_string(dir.path().join("f2/fig2b_tau0.tsv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("oracle"));

    let o = homwave(&["figures", "4", "--config", s(&cfg), "--out", "f4"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("f4/fig4_mc.tsv").is_file());
}

#[test]
fn figure_3_recovers_period() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 0.05, 0.2, true);
    let o = homwave(&["figures", "3", "--config", s(&cfg), "--out", "f3", "--json-summary"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = summary(&o);
    let p = j["fit_period_ns"].as_f64().unwrap();
    assert!((p / 2.8125 - 1.0).abs() < 0.03, "period {p}");
    // The scan setup injects a 0.85 ns delay offset; the fit reports the peak.
    let off = j["fit_offset_ns"].as_f64().unwrap();
    assert!((off - 0.85).abs() < 0.3, "offset {off}");
}

#[test]
fn output_dir_from_environment_and_reuse_guard() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_homwave"))
        .args(["simulate", "--duration", "0"])
        .current_dir(dir.path())
        .env("HOMWAVE_OUT", "envout")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("envout/manifest.json").is_file());

    let o = homwave(&["figures", "1b", "--out", "envout"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}
