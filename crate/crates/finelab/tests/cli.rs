use std::path::Path;
use std::process::{Command, Output};

use finelab::export::read_field_csv;

fn finelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finelab")).args(args).env("FINELAB_THREADS", "2").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

#[test]
fn invalid_exponent_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = finelab(&["cap", "--set", "ball:0,0,0.25", "--p", "0.5", "--h", "0.25", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("problem.p"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[problem]\noperation = \"capacity\"\nset = \"empty\"\np = 2.0\nbogus = 1\n").unwrap();
    let o = finelab(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn missing_files_are_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = finelab(&["space", "load", tmp.path().join("nope.space").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = finelab(&["run", "--config", tmp.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn disconnected_space_is_a_space_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("two.space");
    std::fs::write(&file, "space dim=1\nn 0 1 0\nn 1 1 1\nn 2 1 2\ne 0 1 1 1\n").unwrap();
    let o = finelab(&["space", "load", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn space_files_round_trip_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("g.space");
    let o = finelab(&["space", "build", "--lo", "-1,-1", "--hi", "1,1", "--h", "0.25", "-o", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(&file).unwrap();
    let o = finelab(&["space", "load", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("81"), "{}", String::from_utf8_lossy(&o.stdout));
    let space = finelab::spacefile::load_space(&file).unwrap();
    assert_eq!(finelab::spacefile::write_space(&space).into_bytes(), first);
}

#[test]
fn potential_csv_matches_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = finelab(&[
        "potential",
        "--set",
        "ball:0,0,0.25",
        "--domain",
        "ball:0,0,0.75",
        "--p",
        "2",
        "--h",
        "0.125",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (ids, values) = read_field_csv(&std::fs::read(out.join("field.csv")).unwrap()).unwrap();
    assert_eq!(ids.len(), 17 * 17);
    assert!(values.iter().all(|v| (0.0..=1.0 + 1e-9).contains(v)));
    // nodes of the set carry the value one
    assert_eq!(values[ids.iter().position(|&i| i == 8 * 17 + 8).unwrap()], 1.0);
}

#[test]
fn wiener_scenario_writes_its_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("w");
    let o = finelab(&["run", "--config", &scenario("cusp_wiener.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["wiener.json", "terms.csv", "manifest.json", "timings.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["operation"], "wiener");
    let terms = std::fs::read_to_string(out.join("terms.csv")).unwrap();
    assert!(terms.starts_with("j,r_j,cap_num,cap_den,t_j,partial_sum"));
    assert_eq!(terms.lines().count(), 1 + 6);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let o = Command::new(env!("CARGO_BIN_EXE_finelab"))
            .args(["run", "--config", &scenario("annulus_capacity.toml"), "--out", out.to_str().unwrap()])
            .env("FINELAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("manifest.json")).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "3"));
}
