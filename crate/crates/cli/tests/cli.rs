use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rdmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdmd")).args(args).output().expect("binary runs")
}

fn synth(dir: &Path, seed: &str) {
    let out = rdmd(&["synth", "--height", "24", "--width", "24", "--frames", "40", "--seed", seed, "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_then_bgsub_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "3");
    assert_eq!(fs::read_dir(dir.path().join("frames")).unwrap().count(), 40);
    assert_eq!(fs::read_dir(dir.path().join("truth")).unwrap().count(), 40);

    let run = dir.path().join("run");
    let frames = dir.path().join("frames");
    let truth = format!("{}/*.pgm", dir.path().join("truth").display());
    let out = rdmd(&[
        "bgsub", "--frames", frames.to_str().unwrap(), "--truth", &truth, "--chunk-length", "20", "-k", "5",
        "--seed", "1", "--out", run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.txt", "omega.csv", "metrics.csv", "metrics_filtered.csv", "roc.csv", "roc_summary.txt"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    assert!(run.join("masks/frame_0039.pgm").is_file());
    let header = fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert!(header.starts_with("tau,tp,fp,tn,fn,recall,precision,specificity,f_measure\n"));

    let masks = format!("{}/*.pgm", run.join("masks").display());
    let out = rdmd(&["eval", "--masks", &masks, "--truth", &truth]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn decompose_writes_decomposition_and_omega_table() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "4");
    let out_dir = dir.path().join("dec");
    let out = rdmd(&[
        "decompose", "--frames", dir.path().join("frames").to_str().unwrap(), "-k", "4", "--seed", "9",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dec = rdmd::dmd::load_decomposition(&out_dir).unwrap();
    assert_eq!(dec.rank(), 4);
    assert_eq!(dec.seed, Some(9));
    let table = fs::read_to_string(out_dir.join("omega.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn seeded_runs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    synth(&dir.path().join("a"), "8");
    synth(&dir.path().join("b"), "8");
    for f in ["frames/frame_0017.pgm", "truth/frame_0017.pgm"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn svd_benchmark_csv() {
    let out = rdmd(&["svd", "--rows", "80", "--cols", "40", "--ranks", "5", "--iterations", "0,2", "--seeds", "1,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("rows,cols,k,p,q,seed,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn failures_map_to_category_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // missing required --seed is a usage error
    let out = rdmd(&["decompose", "--frames", "x", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));

    // fewer than two frames
    let empty = dir.path().join("none");
    fs::create_dir_all(&empty).unwrap();
    let out = rdmd(&["decompose", "--frames", empty.to_str().unwrap(), "--seed", "1", "--out", "z"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input error"));

    // a sweep without truth is a configuration error
    synth(dir.path(), "1");
    let out = rdmd(&[
        "bgsub", "--frames", dir.path().join("frames").to_str().unwrap(), "--seed", "1", "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // sketch larger than the snapshot count
    let out = rdmd(&[
        "decompose", "--frames", dir.path().join("frames").to_str().unwrap(), "-k", "60", "--seed", "1", "--out",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));

    // non-P5 input
    let bad = dir.path().join("bad");
    fs::create_dir_all(&bad).unwrap();
    fs::write(bad.join("a.pgm"), b"P2\n1 1\n255\n0\n").unwrap();
    fs::write(bad.join("b.pgm"), b"P2\n1 1\n255\n0\n").unwrap();
    let out = rdmd(&["decompose", "--frames", bad.to_str().unwrap(), "--seed", "1", "--out", "z"]);
    assert_eq!(out.status.code(), Some(7));
}
