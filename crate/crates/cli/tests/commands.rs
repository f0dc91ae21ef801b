use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use specconv::config::load_config;
use specconv::measure::{build_mu_n, DEFAULT_ATOM_CAP};
use specconv::output::{parse_atoms_csv, parse_pgm};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn specconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specconv")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_example1_cube_exits_zero() {
    let out = specconv(&["certify", path_str(&config("example1.json")), "--strategy", "cube"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("verdict: PASS"));
}

#[test]
fn certify_equipositivity_exits_two() {
    let out = specconv(&["certify", path_str(&config("jp.json")), "--strategy", "equipos", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_pair_exit_codes() {
    let out = specconv(&["check-pair", path_str(&config("cantor3.json")), "--pair", "c", "--exact"]);
    assert_eq!(out.status.code(), Some(1));
    let out = specconv(&["check-pair", path_str(&config("example1.json")), "--pair", "p1", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    let out = specconv(&["check-pair", path_str(&config("example1.json")), "--pair", "zz"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown pair"));
}

#[test]
fn render_has_zero_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("jp.pgm");
    let out = specconv(&["render", path_str(&config("jp.json")), "--quantity", "muhat2", "--res", "1024", "--out", path_str(&pgm)]);
    assert!(out.status.success());
    let img = parse_pgm(&std::fs::read(&pgm).unwrap()).unwrap();
    assert_eq!((img.width, img.height, img.maxval, img.binary), (1024, 1, 65535, false));
    // default box [0,4): pixel j sits at 4j/1024
    assert_eq!(img.pixels[256], 0);
    assert_eq!(img.pixels[0], 65535);
}

#[test]
fn render_binary_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("q.pgm");
    let out = specconv(&[
        "render",
        path_str(&config("example1.json")),
        "--quantity",
        "Q",
        "--box",
        "-1,1,-0.5,0.5",
        "--res",
        "20",
        "--depth",
        "2",
        "--binary",
        "--out",
        path_str(&pgm),
    ]);
    assert!(out.status.success());
    let img = parse_pgm(&std::fs::read(&pgm).unwrap()).unwrap();
    assert_eq!((img.width, img.height, img.binary), (20, 20, true));
    assert_eq!(img.pixels.len(), 400);
}

#[test]
fn build_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("atoms.csv");
    let out = specconv(&["build", path_str(&config("example1.json")), "--depth", "3", "--out", path_str(&csv)]);
    assert!(out.status.success());
    let parsed = parse_atoms_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    let cfg = load_config(&config("example1.json")).unwrap();
    assert_eq!(parsed, build_mu_n(&cfg.system, 3, DEFAULT_ATOM_CAP).unwrap());
}

#[test]
fn schema_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dimension": 1, "pairs": [], "word": {"cycle": []}, "extra": 1}"#).unwrap();
    let out = specconv(&["build", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field `extra`"));
}

#[test]
fn corrected_spectrum_level_gap_error() {
    let out = specconv(&[
        "spectrum",
        path_str(&config("example1.json")),
        "--corrected",
        "--levels",
        "2,4,6",
        "--gamma",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("level gap too small"));
    let out = specconv(&["spectrum", path_str(&config("example1.json")), "--corrected", "--levels", "2,4", "--gamma", "0.2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    // header, the 12 elements of level 1, then one correction per level-1 element
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12 + 12);
}

#[test]
fn zeroscan_header_records_parameters() {
    let out = specconv(&["zeroscan", path_str(&config("jp.json")), "--grid", "64", "--lattice", "8", "--tol", "1e-6", "--truncation", "40"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# lattice=8\n") && text.contains("# truncation=40\n") && text.contains("# candidates=0\n"));
}
