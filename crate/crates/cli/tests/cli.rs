use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dif"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dif(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn oracle(dir: &Path, name: &str, pattern: &str, count: usize) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "oracle", "--pattern", pattern, "--amplitude", "12", "--count", &count.to_string(), "--size", "32",
        "--model-id", name, "--out", s(&out),
    ]);
    out.join("manifest.json")
}

fn extract(manifest: &Path, out: &Path, denoiser: &str) {
    ok(&[
        "--seed", "5", "extract", "--manifest", s(manifest), "--denoiser", denoiser, "--out", s(out), "--steps", "20",
        "--batch", "4",
    ]);
}

#[test]
fn oracle_train_extract_detect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = oracle(d, "gen-a", "random:7:16", 16);
    assert!(d.join("gen-a/provenance.json").exists());

    let den = d.join("den.ckpt");
    ok(&[
        "--seed", "1", "train-denoiser", "--manifest", s(&manifest), "--out", s(&den), "--epochs", "2", "--depth", "3",
        "--width", "4", "--crop", "16", "--images", "4", "--denoiser-batch", "2",
    ]);
    let prov: Value = serde_json::from_str(&std::fs::read_to_string(d.join("den.ckpt.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["command"], "train-denoiser");
    assert!(prov["outputs"][0]["sha256"].as_str().unwrap().len() == 64);

    let fp = d.join("fp.ckpt");
    extract(&manifest, &fp, s(&den));
    assert!(fp.exists());

    let metrics = d.join("metrics.json");
    let per_image = d.join("decisions.csv");
    let stdout = ok(&[
        "detect", "--fingerprint", s(&fp), "--denoiser", s(&den), "--manifest", s(&manifest), "--out", s(&metrics),
        "--csv", s(&per_image),
    ]);
    let m: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(m["n_real"].as_u64().unwrap() + m["n_gen"].as_u64().unwrap(), 16);
    let acc = m["accuracy"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&acc));
    let rows = std::fs::read_to_string(&per_image).unwrap();
    assert_eq!(rows.lines().count(), 17);
    assert!(rows.starts_with("path,truth,label,rho"));

    let one = ok(&[
        "detect", "--fingerprint", s(&fp), "--denoiser", s(&den), "--image", s(&d.join("gen-a/generated/00000.png")),
    ]);
    assert_eq!(one.trim().lines().count(), 1);
    let v: Value = serde_json::from_str(one.trim()).unwrap();
    assert!(v.get("label").is_some() && v.get("rho").is_some());
}

#[test]
fn exit_codes_separate_config_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = oracle(d, "g", "checkerboard:2", 8);
    let fp = d.join("fp.ckpt");
    extract(&manifest, &fp, "highpass:3");

    // fingerprint was extracted with a different residual filter
    let out = dif(&["detect", "--fingerprint", s(&fp), "--denoiser", "highpass:2", "--manifest", s(&manifest)]);
    assert_eq!(out.status.code(), Some(2));

    let out = dif(&["detect", "--fingerprint", s(&fp), "--denoiser", "highpass:3", "--image", s(&d.join("missing.png"))]);
    assert_eq!(out.status.code(), Some(3));

    let out = dif(&["extract", "--manifest", s(&manifest)]);
    assert_eq!(out.status.code(), Some(2));

    let bad = d.join("bad.json");
    std::fs::write(&bad, "{\"extraction\": {\"steps\": \"many\"}}").unwrap();
    let out = dif(&["--config", s(&bad), "lineage", "--matrix", s(&manifest)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lineage_from_matrix_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    std::fs::write(&m, "id,a,b,c\na,100,95,50\nb,92,100,48\nc,51,55,100\n").unwrap();
    let report = dir.path().join("lineage.json");
    let stdout = ok(&["lineage", "--matrix", s(&m), "--out", s(&report)]);
    let v: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["clusters"], serde_json::json!([["a", "b"], ["c"]]));
    assert_eq!(v["related_pairs"][0]["min_acc"], 92.0);

    let strict = ok(&["lineage", "--matrix", s(&m), "--t-sym", "2"]);
    let v: Value = serde_json::from_str(strict.trim()).unwrap();
    assert_eq!(v["clusters"].as_array().unwrap().len(), 3);
}

#[test]
fn cross_detect_writes_square_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ma = oracle(d, "a", "random:1:8", 8);
    let mb = oracle(d, "b", "random:2:8", 8);
    let (fa, fb) = (d.join("a.ckpt"), d.join("b.ckpt"));
    extract(&ma, &fa, "highpass");
    extract(&mb, &fb, "highpass");
    let out = d.join("cross.csv");
    ok(&[
        "cross-detect", "--fingerprints", s(&fa), s(&fb), "--manifests", s(&ma), s(&mb), "--denoiser", "highpass",
        "--out", s(&out), "--heatmap", s(&d.join("h.png")),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id,a,b"));
    assert_eq!(text.lines().count(), 3);
    assert!(d.join("h.png").exists());

    let dup = dif(&[
        "cross-detect", "--fingerprints", s(&fa), s(&fb), "--manifests", s(&ma), s(&ma), "--denoiser", "highpass",
        "--out", s(&out),
    ]);
    assert_eq!(dup.status.code(), Some(2));
}

#[test]
fn perturb_mirrors_tree_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    oracle(d, "src", "grid:8", 3);
    let out = d.join("jpeg");
    ok(&["perturb", "--in-dir", s(&d.join("src")), "--out-dir", s(&out), "--kind", "jpeg", "--quality", "75"]);
    for i in 0..3 {
        assert!(out.join(format!("real/{i:05}.png")).exists());
        assert!(out.join(format!("generated/{i:05}.png")).exists());
    }
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["entries"].as_array().unwrap().len(), 6);

    let bad = dif(&["perturb", "--in-dir", s(&d.join("src")), "--out-dir", s(&d.join("x")), "--kind", "swirl"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = oracle(d, "g", "random:3:8", 8);
    let out = d.join("sweep.csv");
    ok(&[
        "--seed", "2", "sweep-train-size", "--manifest", s(&manifest), "--denoiser", "highpass", "--sizes", "4,8",
        "--steps", "10", "--batch", "2", "--out", s(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_s,n_real,n_gen,accuracy,tpr,tnr,mu_real,mu_gen");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4,"));
}

#[test]
fn jpeg_quality_reports_median() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    oracle(d, "src", "grid:8", 2);
    let jdir = d.join("jpegs");
    std::fs::create_dir(&jdir).unwrap();
    let img = image_bytes(&d.join("src/real/00000.png"), 80);
    std::fs::write(jdir.join("a.jpg"), img).unwrap();
    let stdout = ok(&["jpeg-quality", "--dir", s(&jdir)]);
    let v: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["median"], 80.0);
}

fn image_bytes(png: &Path, quality: u8) -> Vec<u8> {
    let img = dif_core::image::load(png).unwrap();
    dif_core::data::jpeg::encode(&img, quality).unwrap()
}
