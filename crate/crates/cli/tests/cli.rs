use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polyhelm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyhelm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 8] = [
    "--set",
    "k=4",
    "--set",
    "forward_n=41",
    "--set",
    "inverse_n=37",
    "--workers",
    "1",
];

#[test]
fn verify_with_no_suites_is_an_empty_pass() {
    let o = polyhelm(&["verify"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 checks, 0 failed"));
}

#[test]
fn verify_fast_suites() {
    let o = polyhelm(&["verify", "pie", "zeta"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS")).count(),
        4,
        "{out}"
    );
}

#[test]
fn verify_rejects_unknown_suite() {
    let o = polyhelm(&["verify", "nonsense"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown check suite"));
}

#[test]
fn oracle_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", "--mode", "oracle", "--out", out, "--seed", "3"];
    args.extend(SMALL);
    let o = polyhelm(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("corrected_rel_err"));
    for f in [
        "config.toml",
        "manifest.toml",
        "errors.csv",
        "data_l1.csv",
        "spectrum_l2.csv",
        "image_l1_corrected.pgm",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let echo = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(echo.contains("seed = 3") && echo.contains("mode = \"oracle\""));

    let r = polyhelm(&["report", out]);
    assert!(r.status.success());
    let text = stdout(&r);
    assert!(
        text.contains("stage: run") && text.contains("provenance: oracle"),
        "{text}"
    );
}

#[test]
fn measure_then_invert() {
    let data = tempfile::tempdir().unwrap();
    let inv = tempfile::tempdir().unwrap();
    let mut args = vec![
        "measure",
        "--mode",
        "full",
        "--out",
        data.path().to_str().unwrap(),
    ];
    args.extend(SMALL);
    let o = polyhelm(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(data.path().join("data_l2.csv").is_file());
    let manifest: toml::Table = fs::read_to_string(data.path().join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let solves = &manifest["solves"];
    assert_eq!(
        solves["forward"].as_integer(),
        solves["expected_forward"].as_integer()
    );

    let mut args = vec![
        "invert",
        "--mode",
        "full",
        "--data",
        data.path().to_str().unwrap(),
        "--out",
        inv.path().to_str().unwrap(),
    ];
    args.extend(SMALL);
    let o = polyhelm(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(inv.path().join("errors.csv").is_file());
    assert!(inv.path().join("field_l1_corrected.helm").is_file());
}

#[test]
fn forward_writes_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "forward",
        "--angle",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    args.extend(SMALL);
    let o = polyhelm(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("picard iterations"));
    assert!(dir.path().join("u1.helm").is_file());
}

#[test]
fn config_file_and_overrides_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(
        &cfg,
        "k = 4.0\nm = 2\nforward_n = 41\ninverse_n = 37\nmode = \"oracle\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = polyhelm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "interpolation=bicubic",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(
        echo.contains("interpolation = \"bicubic\"") && echo.contains("k = 4.0"),
        "{echo}"
    );
}

#[test]
fn invalid_config_lists_each_problem_and_leaves_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyhelm(&[
        "run",
        "--set",
        "m=1",
        "--set",
        "amplitude=-1",
        "--set",
        "forward_n=51",
        "--set",
        "inverse_n=51",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(
        err.lines().filter(|l| l.starts_with("config: ")).count(),
        3,
        "{err}"
    );
    let record: toml::Table = fs::read_to_string(dir.path().join("error.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(record["kind"].as_str(), Some("config"));
}

#[test]
fn unknown_key_and_preset_fail() {
    assert!(!polyhelm(&["run", "--set", "wavenumber=3"]).status.success());
    assert!(!polyhelm(&["run", "--preset", "m9"]).status.success());
}

#[test]
fn report_of_empty_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!Path::new(dir.path()).join("manifest.toml").exists());
    assert!(!polyhelm(&["report", dir.path().to_str().unwrap()])
        .status
        .success());
}
