use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adsb-relay")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn encode_then_decode() {
    let out = bin(&["encode", "--lat", "40.8518", "--lon", "14.2681", "--alt", "500"]);
    assert!(out.status.success());
    let hex = stdout(&out).trim().to_string();
    assert_eq!(hex.len(), 28);
    assert!(hex.starts_with("8DA32DEA"), "{hex}");

    let dec = bin(&["decode", &hex]);
    assert!(dec.status.success());
    let text = stdout(&dec);
    for line in ["df: 17", "ca: 5", "icao: A32DEA", "altitude_ft: 500", "cpr: even", "CRC: OK"] {
        assert!(text.contains(line), "missing {line:?} in\n{text}");
    }
}

#[test]
fn known_frame_decodes() {
    let out = bin(&["decode", "8D40621D58C382D690C8AC2863A7"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("icao: 40621D"));
    assert!(text.contains("altitude_ft: 38000"));
}

#[test]
fn corrupted_frame_fails_crc() {
    // last payload nibble of the frame above, 0xA -> 0xB
    let out = bin(&["decode", "8D40621D58C382D690C8AC2863A6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("CRC: FAIL"));
}

#[test]
fn decode_file_reports_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.txt");
    std::fs::write(&path, "# pair\n8D40621D58C382D690C8AC2863A7\n\n8D40621D58C386435CC412692AD6\n").unwrap();
    let out = bin(&["decode", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).matches("CRC: OK").count(), 2);
}

#[test]
fn bad_hex_is_a_validation_error() {
    let out = bin(&["decode", "8D40621D"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_empty_sweep_is_header_only() {
    let out = bin(&["analyze", "--max-drones", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn analyze_covers_default_gateway_counts() {
    let out = bin(&["analyze", "--max-drones", "1000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut ks: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    ks.dedup();
    assert_eq!(ks, ["1", "2", "5", "10", "100"]);
}

#[test]
fn simulate_is_reproducible_and_near_theory() {
    let config = configs().join("k2_poisson.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = bin(&["simulate", config.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["report.csv", "events.csv", "broadcast_log.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let report = std::fs::read_to_string(a.path().join("report.csv")).unwrap();
    let header: Vec<&str> = report.lines().next().unwrap().split(',').collect();
    let system: Vec<&str> = report.lines().find(|l| l.starts_with("system,")).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "avg_in_system").unwrap();
    let n: f64 = system[col].parse().unwrap();
    assert!((n - 1.5).abs() / 1.5 < 0.02, "N = {n}");
}

#[test]
fn seed_override_changes_the_run() {
    let config = configs().join("k2_poisson.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, seed: &str| {
        let out = bin(&["simulate", config.to_str().unwrap(), "--out-dir", dir.to_str().unwrap(), "--seed", seed]);
        assert!(out.status.success());
        std::fs::read(dir.join("report.csv")).unwrap()
    };
    assert_ne!(run(a.path(), "1"), run(b.path(), "2"));
}

fn simulate_text(config: &str) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, config).unwrap();
    bin(&["simulate", path.to_str().unwrap(), "--out-dir", dir.path().join("out").to_str().unwrap()])
}

#[test]
fn drone_outside_region_is_a_scenario_error() {
    let out = simulate_text(
        "seed = 1\nduration_s = 1\n[grid]\nrows = 1\ncols = 1\ncell_width_m = 100\n\
         [drones]\ncount = 0\n[[drones.fixed]]\nicao = \"ABC123\"\nx_m = 500\ny_m = 50\n\
         altitude_ft = 200\nvelocity_mps = [0, 0, 0]\n[arrivals]\nmodel = \"periodic\"\n",
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = simulate_text(
        "seed = 1\nduration_s = 1\nbogus = 3\n[grid]\nrows = 1\ncols = 1\ncell_width_m = 100\n\
         [drones]\ncount = 1\n[arrivals]\nmodel = \"periodic\"\n",
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_fails() {
    let out = bin(&["simulate", "/nonexistent/scenario.toml", "--out-dir", "/tmp/never"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn loopback_default_track() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("t.iq");
    let out = bin(&["loopback", "--iq-out", iq.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("sent: 60"));
    assert!(text.contains("decoded: 60"));
    assert!(text.contains("field_match: 60/60"));
    assert_eq!(std::fs::metadata(&iq).unwrap().len(), 115_200);
    let mut side = iq.into_os_string();
    side.push(".sidecar.txt");
    assert!(Path::new(&side).is_file());
}

#[test]
fn loopback_zero_duration_sends_nothing() {
    let out = bin(&["loopback", "--duration", "0"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("sent: 0"));
}
