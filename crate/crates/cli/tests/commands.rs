use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adaptmark::fixtures;
use adaptmark::image::{load_image, save_image};

const HEX: &str = "0123456789abcdef00ff00ff00ff00fffedcba9876543210a5a5a5a55a5a5a5a";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptmark"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cover(dir: &Path) -> PathBuf {
    let p = dir.join("cover.png");
    save_image(&fixtures::waves(), &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn embed_then_extract_recovers_payload() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let marked = dir.path().join("marked.png");
    let o = run(&["embed", s(&cover), "--payload", HEX, "-o", s(&marked)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("psnr ") && stdout(&o).contains("ssim "));
    assert!(marked.is_file());

    let o = run(&["extract", s(&marked)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(HEX));
    assert_eq!(lines.next(), Some("mean_confidence 1.0000"));
    assert_eq!(lines.next().unwrap().split(',').count(), 256);
}

#[test]
fn pgm_output_and_non_adaptive_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let marked = dir.path().join("marked.pgm");
    let o = run(&["embed", s(&cover), "--payload", HEX, "--non-adaptive", "--fixed-sf", "0.05", "-o", s(&marked)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(load_image(&marked).unwrap().dimensions(), (512, 512));
    let o = run(&["extract", s(&marked), "--non-adaptive", "--fixed-sf", "0.05"]);
    assert_eq!(stdout(&o).lines().next(), Some(HEX));
}

#[test]
fn short_payload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let out = dir.path().join("m.png");
    let o = run(&["embed", s(&cover), "--payload", &HEX[..63], "-o", s(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("payload must be 256 bits"), "{}", stderr(&o));
    assert_eq!(stderr(&o).trim().lines().count(), 1);
    assert!(!out.exists());
}

#[test]
fn wrong_dimensions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.png");
    save_image(&adaptmark::GrayImage::filled(300, 300, 128).unwrap(), &small).unwrap();
    let o = run(&["embed", s(&small), "--payload", HEX, "-o", s(&dir.path().join("m.png"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("300"), "{}", stderr(&o));
    let o = run(&["extract", s(&small)]);
    assert!(!o.status.success());
}

/// Expected agreement of an 11-copy majority vote over fair coin flips.
fn random_vote_confidence() -> f64 {
    let mut binom = 1.0f64;
    let mut sum = 0.0;
    for k in 0..=11u32 {
        if k > 0 {
            binom = binom * f64::from(12 - k) / f64::from(k);
        }
        sum += binom * f64::from(k.max(11 - k)) / 11.0;
    }
    sum / 2048.0
}

#[test]
fn unmarked_image_extracts_with_chance_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("noise.png");
    save_image(&fixtures::noise(1234), &p).unwrap();
    let o = run(&["extract", s(&p)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mean: f64 = out.lines().nth(1).unwrap().trim_start_matches("mean_confidence ").parse().unwrap();
    let expected = random_vote_confidence();
    assert!((mean - expected).abs() < 0.03, "{mean} vs {expected}");
}

#[test]
fn attacks_are_written_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let med = dir.path().join("med.png");
    let o = run(&["attack", s(&cover), "--kind", "median", "--kernel", "3", "-o", s(&med)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(load_image(&med).unwrap(), load_image(&cover).unwrap());

    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    for out in [&a, &b] {
        let o = run(&["attack", s(&cover), "--kind", "gaussian", "--variance", "0.003", "--seed", "7", "-o", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    for kind in ["salt-pepper", "hist-eq", "jpeg", "none"] {
        let o = run(&["attack", s(&cover), "--kind", kind, "-o", s(&dir.path().join("x.png"))]);
        assert!(o.status.success(), "{kind}: {}", stderr(&o));
    }
}

#[test]
fn unknown_attack_kind_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let o = run(&["attack", s(&cover), "--kind", "rotate", "-o", s(&dir.path().join("x.png"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("possible values: none, median, salt-pepper"), "{}", stderr(&o));
}

#[test]
fn config_file_drives_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"embed": {"adaptive": false, "fixed_sf": 0.1, "magnitude_floor": 3.0}}"#).unwrap();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    let o = run(&["--config", s(&cfg), "embed", s(&cover), "--payload", HEX, "-o", s(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    run(&["embed", s(&cover), "--payload", HEX, "-o", s(&b)]);
    assert_ne!(load_image(&a).unwrap(), load_image(&b).unwrap());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"embed": {"redundancy": 10}}"#).unwrap();
    let o = run(&["--config", s(&bad), "extract", s(&a)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("redundancy"), "{}", stderr(&o));
}

#[test]
fn bench_writes_reports_and_fails_on_missing_images() {
    let dir = tempfile::tempdir().unwrap();
    let cover = cover(dir.path());
    let out = dir.path().join("report");
    let o = bin()
        .args(["bench", "--trials", "1", "--image"])
        .arg(format!("waves={}", cover.display()))
        .arg("--out")
        .arg(&out)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["timestamp"], "1700000000");
    assert_eq!(report["trials"], 1);
    let csv = std::fs::read_to_string(out.join("robustness.csv")).unwrap();
    // header + 2 schemes x 10 default attacks
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.contains("waves,adaptive,none,1,1.000000,0.000000"));

    let o = run(&["bench", "--image", "x=/nonexistent/x.png", "--out", s(&out)]);
    assert!(!o.status.success());
    let o = run(&["bench", "--out", s(&out)]);
    assert!(!o.status.success());
}
