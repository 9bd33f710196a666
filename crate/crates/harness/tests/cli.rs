use std::fs;
use std::path::Path;
use std::process::Command;

fn spiralwave(cmd: &str, config: &str, dir: &Path) -> (i32, String) {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spiralwave"))
        .args([cmd, "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

const CENTRED: &str = "q = 0.3\n[domain]\nlx = 200.0\nly = 200.0\n[[spirals]]\nx = 100.0\ny = 100.0\n[k_table]\nq = [0.05, 0.2, 0.3, 0.45]\n";

#[test]
fn k_table_is_written_with_manifest_and_reproduces_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = spiralwave("k", CENTRED, dir.path());
    assert_eq!(code, 0, "{err}");
    let first = fs::read(dir.path().join("out/k.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,eps,k_canonical,k_near_field,k_uniform,note");
    assert_eq!(lines.count(), 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "k");
    assert_eq!(manifest["config_sha256"], spiralwave::commands::hex_digest(CENTRED.as_bytes()));
    assert!(manifest["c1"].as_f64().unwrap() < -0.1);
    assert_eq!(manifest["outputs"][0], "k.csv");

    let (code, _) = spiralwave("k", CENTRED, dir.path());
    assert_eq!(code, 0);
    assert_eq!(fs::read(dir.path().join("out/k.csv")).unwrap(), first);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = spiralwave("k", "q = 2.0\n[domain]\nlx = 1.0\nly = 1.0\n", dir.path());
    assert_eq!(code, 2, "{err}");
    let (code, err) = spiralwave("compare", CENTRED, dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("comparison requires sim params"), "{err}");
    let (code, _) = spiralwave("bogus", CENTRED, dir.path());
    assert_eq!(code, 2);
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "q = 0.3\n[domain]\nlx = 200.0\nly = 200.0\n[profile]\nr_max = 80.0\nn_nodes = 2000\ntol = 1e-30\nmax_iter = 2\n";
    let (code, err) = spiralwave("core", cfg, dir.path());
    assert_eq!(code, 3, "{err}");
}

#[test]
fn empty_scan_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "q = 0.3\n[domain]\nlx = 200.0\nly = 200.0\n[scan]\nq = []\n";
    let (code, err) = spiralwave("scan", cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(dir.path().join("out/scan.csv")).unwrap(), "q,orbit_found,crossing_x,period\n");
}

#[test]
fn independent_starts_give_one_trajectory_each() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = String::from("q = 0.45\n[domain]\nlx = 200.0\nly = 200.0\n");
    for x in [110, 120, 130, 140, 150, 160, 170] {
        cfg += &format!("[[spirals]]\nx = {x}.0\ny = 100.0\n");
    }
    cfg += "[integration]\nt_end = 200.0\nh = 20.0\nindependent = true\n";
    let (code, err) = spiralwave("trajectory", &cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    for i in 1..=7 {
        let csv = fs::read_to_string(dir.path().join(format!("out/trajectory_{i}.csv"))).unwrap();
        assert!(csv.starts_with("t,x_1,y_1,k,eps\n"));
        assert_eq!(csv.lines().count(), 12);
    }
    let svg = fs::read_to_string(dir.path().join("out/trajectory.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 7);
    assert_eq!(svg.matches("<rect").count(), 1);
}

#[test]
fn simulate_writes_tracks_probe_and_field_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "q = 0.1\n[domain]\nlx = 30.0\nly = 30.0\n[[spirals]]\nx = 15.0\ny = 15.0\n\
               [sim]\nt_end = 10.0\nsnapshot_interval = 200\nprobe = [25.0, 15.0]\ndump_every = 2\n\
               [compare]\ntransient = 0.0\n";
    let (code, err) = spiralwave("simulate", cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    let tracks = fs::read_to_string(dir.path().join("out/tracks.csv")).unwrap();
    assert!(tracks.starts_with("t,id,x,y,winding,min_modulus\n"));
    assert_eq!(tracks.lines().count(), 1 + 5);
    let dumps = fs::read_dir(dir.path().join("out/fields")).unwrap().count();
    assert_eq!(dumps, 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert!(summary["rotation_rate"].as_f64().unwrap() > 0.0);
}
