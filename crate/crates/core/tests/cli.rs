use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotnbody"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/configs").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("rnb_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn info_prints_period() {
    let o = bin().args(["info", "--config"]).arg(config("trefoil.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("T      = 1.785209272759583"), "{s}");
    assert!(s.contains("k~     = 3"), "{s}");
}

#[test]
fn config_and_usage_errors_exit_3() {
    let o = bin().args(["info", "--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().arg("info").output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(3));

    let dir = scratch("bad");
    let cfg = dir.join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"n": 5, "k": 3, "p": 3, "q": 1, "m": 25, "nu": 1.03, "seed": "bundled", "extra": true}"#,
    )
    .unwrap();
    let o = bin().arg("solve").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3));

    std::fs::write(
        &cfg,
        r#"{"n": 5, "k": 3, "p": 3, "q": 1, "m": 25, "nu": 1.03, "seed": "file:missing.json"}"#,
    )
    .unwrap();
    let o = bin().arg("prove").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn help_exits_0() {
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("prove"));
}

#[test]
fn export_writes_both_frames() {
    let dir = scratch("export");
    let o = bin()
        .args(["export", "--samples", "100", "--config"])
        .arg(config("trefoil.json"))
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("torus type (3, 2)"));
    for f in ["rotating.csv", "inertial.csv"] {
        let text = std::fs::read_to_string(dir.join("trefoil").join(f)).unwrap();
        let rows = rotnbody::choreography::parse_csv(&text).unwrap();
        assert_eq!(rows.len(), 5 * 100);
    }
    let o = bin()
        .args(["export", "--format", "svg", "--config"])
        .arg(config("trefoil.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_writes_coefficients() {
    let dir = scratch("solve");
    let o = bin()
        .arg("solve")
        .arg("--config")
        .arg(config("trefoil.json"))
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("trefoil/xbar.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn prove_exit_code_follows_certificate() {
    let dir = scratch("prove");
    for (name, label, want) in [("n4_10_9_m40.json", "n4_10_9_m40", 0), ("trefoil.json", "trefoil", 1)] {
        let o = bin()
            .arg("prove")
            .arg("--config")
            .arg(config(name))
            .arg("--out")
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(want), "{name}: {}", stdout(&o));
        let text = std::fs::read_to_string(dir.join(label).join("certificate.json")).unwrap();
        let cert: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(cert["verified"].as_bool(), Some(want == 0));
        for f in ["xbar.json", "rotating.csv", "inertial.csv"] {
            assert!(dir.join(label).join(f).exists(), "{f}");
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}
