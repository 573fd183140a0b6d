use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SCENARIO: &str = r#"
[scenario]
carrier_hz = 3.5e9
bandwidth_hz = 100e6
num_freq = 129
num_time = 64
snapshot_interval_s = 0.0014285714285714286

[[scenario.snapshots]]
label = "a"
targets = [
  { range_m = 40.0, velocity_mps = 5.0, elevation_deg = 20.0, azimuth_deg = -10.0, gain_db = 0.0 },
  { range_m = 80.0, velocity_mps = -6.0, elevation_deg = -15.0, azimuth_deg = 25.0, gain_db = -6.0 },
  { range_m = 120.0, velocity_mps = 2.0, elevation_deg = 0.0, azimuth_deg = 0.0, gain_db = -10.0 },
]

[[scenario.snapshots]]
label = "b"
targets = [
  { range_m = 45.0, velocity_mps = 4.0, elevation_deg = 10.0, azimuth_deg = -20.0, gain_db = 0.0 },
  { range_m = 75.0, velocity_mps = -8.0, elevation_deg = -5.0, azimuth_deg = 30.0, gain_db = -6.0 },
  { range_m = 130.0, velocity_mps = 1.0, elevation_deg = 5.0, azimuth_deg = 5.0, gain_db = -10.0 },
]
"#;

const CUSTOM: &str = r#"
kind = "custom"
scenario_file = "scenario.toml"

[dut]
rows = 2
cols = 4

[processing]
max_range_m = 150.0
grid_step_deg = 2.0
"#;

fn wclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wclab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", "kind = \"distance-sweep\"\n");
    let out = wclab(&["validate", s(&cfg)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seeds = [1, 2, 3"), "{text}");
    assert!(text.contains("standoffs_m = [0.01, 0.3, 0.8]"), "{text}");
    assert!(text.contains("relative_error_db = -40"), "{text}");
    assert!(text.contains("spacing_m = 0.0428"), "{text}");
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_kind.toml", "kind = \"teleport\"\n", "kind"),
        ("negative_spacing.toml", "kind = \"distance-sweep\"\n[dut]\nspacing_m = -0.01\n", "dut.spacing_m"),
        ("syntax.toml", "kind = \n", ""),
        ("unknown_key.toml", "kind = \"distance-sweep\"\nflux = 1\n", "flux"),
    ];
    for (name, text, needle) in cases {
        let cfg = write(dir.path(), name, text);
        for cmd in ["validate", "run"] {
            let out = wclab(&[cmd, s(&cfg)]);
            assert_eq!(out.status.code(), Some(2), "{cmd} {name}");
            let err = String::from_utf8(out.stderr).unwrap();
            assert!(err.contains(needle), "{name}: {err}");
        }
    }
}

#[test]
fn missing_config_is_a_plain_failure() {
    let out = wclab(&["validate", "/nonexistent/wclab.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn summarize_of_empty_bundle_prints_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = wclab(&["summarize", s(dir.path())]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.ends_with("psp_conducted,psp_ota\n"));

    let out = wclab(&["summarize", s(&dir.path().join("missing"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_scenario_run_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "scenario.toml", SCENARIO);
    let cfg = write(dir.path(), "custom.toml", CUSTOM);
    let first = dir.path().join("first");
    let second = dir.path().join("second");

    let out = wclab(&["run", s(&cfg), "--seed", "7", "--out", s(&first)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(first.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7, "{summary}");
    let manifest = fs::read_to_string(first.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seeds = 7\n"), "{manifest}");
    assert!(first.join("isolation_ota-s7.csv").exists());

    // Estimates land on the configured ranges to within a couple of metres.
    for line in summary.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').skip(2).take(3).map(|c| c.parse().unwrap()).collect();
        assert!((cells[0] - cells[1]).abs() < 2.0 && (cells[0] - cells[2]).abs() < 2.0, "{line}");
    }

    let out = wclab(&["--quiet", "run", s(&cfg), "--seed", "7", "--out", s(&second)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    for name in ["summary.csv", "estimates.csv", "psp.csv", "targets.csv"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }

    // Re-summarizing from disk reproduces the table written by the run.
    let out = wclab(&["--quiet", "summarize", s(&first)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(first.join("summary.csv")).unwrap(), summary);
}

#[test]
fn mode_flag_restricts_compared_modes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "scenario.toml", SCENARIO);
    let cfg = write(dir.path(), "custom.toml", CUSTOM);
    let out_dir = dir.path().join("bundle");
    let out = wclab(&["--quiet", "run", s(&cfg), "--mode", "conducted", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let estimates = fs::read_to_string(out_dir.join("estimates.csv")).unwrap();
    assert!(estimates.contains(",conducted,"));
    assert!(!estimates.contains(",ota,"));
    assert!(!out_dir.join("isolation_ota-s1.csv").exists());
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut checked = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if text.contains("\nkind = ") || text.starts_with("kind = ") {
            let out = wclab(&["--quiet", "validate", s(&path)]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            checked += 1;
        }
    }
    assert_eq!(checked, 5);
}
