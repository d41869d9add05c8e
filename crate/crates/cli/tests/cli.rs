use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrwave_cli::RunManifest;
use tempfile::TempDir;

fn lrwave(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrwave"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env("LRWAVE_JOBS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PROPAGATE: &str = r#"
mode = "propagate"

[medium]
epsilon = 0.1
depth = 1.0
model = { kind = "long_range", gamma = { kind = "constant", value = 0.8 } }

[source]
shape = { kind = "gaussian", width = 1.0 }
samples = 1024

[ensemble]
n_realizations = 2
base_seed = 5
"#;

#[test]
fn verify_subset_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "v.toml", "mode = \"verify\"\n[verify]\ncriteria = [1, 4]\n");
    let out = dir.path().join("out");
    let o = lrwave(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 2, "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 2);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn profile_outside_long_range_regime_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = PROPAGATE.replace(
        r#"gamma = { kind = "constant", value = 0.8 }"#,
        r#"h = { kind = "linear", start = 0.6, slope = 0.5 }"#,
    );
    let cfg = write_config(&dir, "bad.toml", &text);
    let o = lrwave(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("0 < γK < 1"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "typo.toml", &PROPAGATE.replace("depth = 1.0", "depth = 1.0\ndepht = 2.0"));
    let o = lrwave(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("depht"), "{}", stderr(&o));
}

#[test]
fn empty_limit_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = "mode = \"limits\"\n[limits]\nprocess = { kind = \"fbm\", h = 0.7 }\nn = 0\n";
    let cfg = write_config(&dir, "n0.toml", text);
    let o = lrwave(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_fails() {
    let dir = TempDir::new().unwrap();
    let o = lrwave(&dir.path().join("nope.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runs_are_reproducible_and_manifests_replay() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.toml", PROPAGATE);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(lrwave(&cfg, &a, &[]).status.success());
    assert!(lrwave(&cfg, &b, &[]).status.success());
    let ma = RunManifest::load(&a.join("manifest.json")).unwrap();
    let mb = RunManifest::load(&b.join("manifest.json")).unwrap();
    assert_eq!(ma.artifacts, mb.artifacts);
    let names: Vec<&str> = ma.artifacts.iter().map(|x| x.path.as_str()).collect();
    for want in ["source.csv", "spectrum_0000.csv", "transmitted_0001.csv", "theory_0000.csv", "propagate_records.json"] {
        assert!(names.contains(&want), "{names:?}");
    }

    // The manifest is itself a config and reproduces every artifact.
    let o = lrwave(&a.join("manifest.json"), &c, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mc = RunManifest::load(&c.join("manifest.json")).unwrap();
    assert_eq!(ma.artifacts, mc.artifacts);

    // A different seed changes the media.
    let d = dir.path().join("d");
    assert!(lrwave(&cfg, &d, &["--seed", "6"]).status.success());
    let md = RunManifest::load(&d.join("manifest.json")).unwrap();
    assert_ne!(ma.artifacts, md.artifacts);
}

#[test]
fn propagate_records_have_expected_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.toml", PROPAGATE);
    let out = dir.path().join("out");
    assert!(lrwave(&cfg, &out, &[]).status.success());
    let recs: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("propagate_records.json")).unwrap()).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 2);
    for key in ["seed", "l2_to_theory", "sup_to_theory", "best_shift", "v1_half", "det_drift"] {
        assert!(recs[0].get(key).is_some(), "missing {key}");
    }
    assert!(recs[0]["det_drift"].as_f64().unwrap() < 1e-8);
    let spectrum = fs::read_to_string(out.join("spectrum_0000.csv")).unwrap();
    assert_eq!(spectrum.lines().next().unwrap(), "omega,t_re,t_im,r_re,r_im");
}

#[test]
fn sweep_writes_one_record_per_epsilon() {
    let dir = TempDir::new().unwrap();
    let text = PROPAGATE.replace("mode = \"propagate\"", "mode = \"sweep\"") + "\n[sweep]\nepsilons = [0.1, 0.05]\n";
    let cfg = write_config(&dir, "s.toml", &text);
    let out = dir.path().join("out");
    let o = lrwave(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 2);
    for r in recs {
        for key in ["epsilon", "n_realizations", "median_l2", "median_width_ratio", "shift_vs_v1_corr"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(recs[1]["epsilon"], 0.05);
}

#[test]
fn synth_writes_media_and_travel_times() {
    let dir = TempDir::new().unwrap();
    let text = PROPAGATE.replace("mode = \"propagate\"", "mode = \"synth\"");
    let cfg = write_config(&dir, "y.toml", &text);
    let out = dir.path().join("out");
    assert!(lrwave(&cfg, &out, &[]).status.success());
    let medium = fs::read_to_string(out.join("medium_0001.csv")).unwrap();
    assert_eq!(medium.lines().count(), 101);
    let v1 = fs::read_to_string(out.join("v1_0000.csv")).unwrap();
    assert_eq!(v1.lines().count(), 102);
    assert!(out.join("synth_report.json").exists());
}

#[test]
fn limits_mode_writes_paths_oracle_and_figures() {
    let dir = TempDir::new().unwrap();
    let text = r#"
mode = "limits"

[limits]
process = { kind = "multifrac", h = { kind = "linear", start = 0.55, slope = 0.3 } }
n = 512
figures = true
cov_grid = 3
"#;
    let cfg = write_config(&dir, "l.toml", text);
    let out = dir.path().join("out");
    let o = lrwave(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("limit_0000.csv")).unwrap().lines().count(), 514);
    for fig in ["figure_increasing.csv", "figure_periodic.csv"] {
        assert_eq!(fs::read_to_string(out.join(fig)).unwrap().lines().count(), 513, "{fig}");
    }
    let oracle = fs::read_to_string(out.join("covariance_oracle.csv")).unwrap();
    assert_eq!(oracle.lines().count(), 10);
    assert_eq!(oracle.lines().next().unwrap(), "t1,t2,covariance");
}

#[test]
fn mode_override_needs_matching_sections() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.toml", PROPAGATE);
    let o = lrwave(&cfg, &dir.path().join("out"), &["--mode", "limits"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[limits]"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = lrwave_cli::ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
