use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn finopt(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finopt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn column(path: &Path, index: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(index).unwrap().parse().unwrap())
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("case.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const PIN: &str = r#"
[geometry]
a0 = 1.0
length = 100.0

[physics]
k = 10.0
h = { kind = "constant", value = 10.0 }
t_d = 10.0
t_inf = 0.0
"#;

#[test]
fn solve_pins_the_inlet_and_cools_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let out = finopt(&["solve"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = column(&dir.path().join("temperature.csv"), 1);
    assert_eq!(t.len(), 501);
    assert_eq!(t[0], 10.0);
    assert!(t.windows(2).all(|w| w[1] <= w[0]));
    let header = std::fs::read_to_string(dir.path().join("temperature.csv")).unwrap();
    assert!(header.starts_with("x [m],T [°C]"));
}

#[test]
fn equal_temperatures_carry_no_flux() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &PIN.replace("t_d = 10.0", "t_d = 0.0"));
    let out = finopt(&["solve", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert!(out.status.success());
    let report = json(&dir.path().join("o/flux_report.json"));
    assert_eq!(report["f_boundary_w"], 0.0);
    assert_eq!(report["f_integral_w"], 0.0);
}

#[test]
fn profile_csv_reingests_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let cfg = configs().join("oscillating.toml");
    assert!(finopt(&["solve", "--config", cfg.to_str().unwrap()], &first).status.success());

    let profile = first.join("profile.csv");
    let text = PIN.to_string() + &format!("\n[profile]\nkind = \"csv\"\npath = {:?}\n", profile.to_str().unwrap());
    let cfg = write_config(dir.path(), &text);
    let second = dir.path().join("second");
    let out = finopt(&["solve", "--config", cfg.to_str().unwrap()], &second);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["profile.csv", "temperature.csv"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<PathBuf> = ["a", "b"].iter().map(|r| dir.path().join(r)).collect();
    for r in &runs {
        assert!(finopt(&["sweep", "--n-cells", "200", "--seed", "7"], r).status.success());
    }
    for name in ["b_opt.csv", "a_opt.csv", "T_opt.csv", "objective_trace.csv", "structure_report.json"] {
        assert_eq!(std::fs::read(runs[0].join(name)).unwrap(), std::fs::read(runs[1].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn reports_carry_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    assert!(finopt(&["optimize", "--n-cells", "100"], dir.path()).status.success());
    assert_eq!(json(&dir.path().join("structure_report.json"))["schema_version"], 1);

    let json_dir = dir.path().join("json");
    assert!(finopt(&["solve", "--format", "json"], &json_dir).status.success());
    let table = json(&json_dir.join("temperature.json"));
    assert_eq!(table["schema_version"], 1);
    assert_eq!(table["columns"][1]["unit"], "°C");
}

#[test]
fn bad_config_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &PIN.replace("k = 10.0", "k = -10.0"));
    let out = finopt(&["solve", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 7") && err.contains("physics.k"), "{err}");
}

#[test]
fn coarse_verify_exits_two_after_writing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = finopt(&["verify", "--n-cells", "8"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = json(&dir.path().join("verify_report.json"));
    let grid = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "grid_convergence")
        .unwrap();
    assert_eq!(grid["status"], "fail");
}

#[test]
fn numerical_failure_exits_three() {
    // Valid inputs whose Biot-like ratio overflows double precision.
    let dir = tempfile::tempdir().unwrap();
    let text = PIN.replace("value = 10.0 }", "value = 1e306 }").replace("k = 10.0", "k = 1e-6");
    let cfg = write_config(dir.path(), &text);
    let out = finopt(&["solve", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oscillating_member_approaches_supremum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oscillating.toml");
    assert!(finopt(&["solve", "--config", cfg.to_str().unwrap()], dir.path()).status.success());
    let report = json(&dir.path().join("flux_report.json"));
    let shortfall = report["supremum_shortfall"].as_f64().unwrap();
    assert!((0.0..0.02).contains(&shortfall), "{shortfall}");
}

#[test]
fn every_shipped_config_parses() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = finopt(&["solve", "--n-cells", "50", "--config", path.to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}
