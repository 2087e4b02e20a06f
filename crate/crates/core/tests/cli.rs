use std::path::{Path, PathBuf};
use std::process::Command;

fn krein(cmd: &str, config: &Path, out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_krein"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_default_config_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = krein("verify", &default_config(), tmp.path());
    assert_eq!(code, 0, "{err}");
    let v = json(&tmp.path().join("verify.json"));
    assert_eq!(v["pass"], true);
    let names: Vec<&str> = v["suites"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    for want in ["special_functions", "threshold", "uniqueness_monotonicity", "norm_identity", "monotonicity_audit", "determinism"] {
        assert!(names.contains(&want), "{want} missing");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": "big"}"#);
    assert_eq!(krein("solve", &bad, tmp.path()).0, 2);
    let outside = write_config(
        tmp.path(),
        r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": 0, "x0": [2.0, 0.0]}"#,
    );
    let (code, err) = krein("solve", &outside, tmp.path());
    assert_eq!(code, 2, "{err}");
    assert_eq!(krein("solve", &tmp.path().join("missing.json"), tmp.path()).0, 2);
}

#[test]
fn ball_threshold_solve_gives_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let alpha = -1.0 / (4.0 * std::f64::consts::PI);
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"domain": {{"kind": "ball", "radius": 1.0}}, "resolution": 0.1, "alpha": {alpha:e}, "x0": [0, 0, 0]}}"#),
    );
    let (code, err) = krein("solve", &cfg, &tmp.path().join("out"));
    assert_eq!(code, 0, "{err}");
    let v = json(&tmp.path().join("out/solve.json"));
    let xi = v["xi"].as_f64().unwrap();
    let lam = v["lambda0"].as_f64().unwrap();
    assert!(xi.abs() < 1e-6 * lam, "xi = {xi}");
}

#[test]
fn disk_sigma_complement_is_the_centre() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": 0}"#);
    let (code, err) = krein("sigma", &cfg, &tmp.path().join("out"));
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(tmp.path().join("out/sigma.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,sigma,sigma_prime,admissible"));
    let mut kept = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f[4] == "1" {
            let (x, y): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            assert!(x.hypot(y) < 0.08, "admissible node at ({x}, {y})");
            kept += 1;
        }
    }
    assert!(kept >= 1);
    assert!(!text.contains('\r'));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"domain": {"kind": "rectangle", "a": 1.0, "b": 1.0}, "resolution": 0.05, "alpha": 1.0, "lattice_spacing": 0.2, "atlas": {"angles": 16, "offsets": 32}}"#,
    );
    for cmd in ["basis", "h-eval", "solve", "landscape", "sigma", "resolvent"] {
        let (a, b) = (tmp.path().join(format!("{cmd}-a")), tmp.path().join(format!("{cmd}-b")));
        assert_eq!(krein(cmd, &cfg, &a).0, 0, "{cmd}");
        assert_eq!(krein(cmd, &cfg, &b).0, 0, "{cmd}");
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.len() >= 2);
        for n in names {
            assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{cmd} {n:?}");
        }
    }
    let resolved = tmp.path().join("solve-a/config.json");
    let again = tmp.path().join("again");
    assert_eq!(krein("solve", &resolved, &again).0, 0);
    assert_eq!(std::fs::read(&resolved).unwrap(), std::fs::read(again.join("config.json")).unwrap());
}

#[test]
fn landscape_csv_has_fixed_format() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.1, "alpha": 0.5, "lattice_spacing": 0.2, "atlas": {"angles": 16, "offsets": 32}}"#,
    );
    assert_eq!(krein("landscape", &cfg, tmp.path()).0, 0);
    let text = std::fs::read_to_string(tmp.path().join("landscape.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,xi,dxi_dx,dxi_dy,fd_dx,fd_dy"));
    let re = |s: &str| {
        let (m, e) = s.split_once('e').unwrap();
        let digits = m.trim_start_matches('-');
        digits.len() == 14 && digits.as_bytes()[1] == b'.' && (e.starts_with('+') || e.starts_with('-')) && e.len() >= 3
    };
    for l in lines {
        assert!(l.split(',').all(|f| f == "nan" || re(f)), "{l}");
    }
    assert!(tmp.path().join("landscape.gp").exists());
}
