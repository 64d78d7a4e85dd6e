use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sfw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfw")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = sfw(args);
    assert!(
        out.status.success(),
        "sfw {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn err_json(args: &[&str]) -> (i32, Value) {
    let out = sfw(args);
    assert!(!out.status.success());
    let v = serde_json::from_slice(&out.stderr).expect("stderr is json");
    (out.status.code().unwrap(), v)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn key_embed_attack_extract_detect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (key, noise) = (d.join("k.json"), d.join("n.json"));
    let (marked, attacked, clean) = (d.join("m.lat"), d.join("a.lat"), d.join("c.lat"));

    ok_json(&[
        "keygen", "--method", "hsqr", "--seed", "5", "--payload", "0123456789abcdef01", "--out", p(&key),
    ]);
    let out = sfw(&["keygen", "--method", "noise", "--seed", "6"]);
    assert!(out.status.success());
    fs::write(&noise, &out.stdout).unwrap();

    ok_json(&["embed", "--key", p(&key), "--key", p(&noise), "--seed", "1", "--out", p(&marked)]);
    ok_json(&[
        "attack", "--latent", p(&marked), "--attack", r#"{"kind":"noise","sigma":0.05}"#, "--out", p(&attacked),
    ]);
    let v = ok_json(&["extract", "--latent", p(&attacked), "--key", p(&key)]);
    assert_eq!(v["decoded"], true);
    assert_eq!(v["payload"], "0123456789abcdef01");

    // a clean latent to compare against
    ok_json(&["attack", "--latent", p(&marked), "--attack", r#"{"kind":"identity"}"#, "--sigma", "0", "--out", p(&clean)]);
    let fresh = d.join("fresh.lat");
    sfw_core::LatentTensor::gaussian(99).save(&fresh).unwrap();
    let near = ok_json(&["detect", "--latent", p(&attacked), "--key", p(&key), "--noise-key", p(&noise)]);
    let far = ok_json(&["detect", "--latent", p(&fresh), "--key", p(&key), "--noise-key", p(&noise)]);
    assert!(near["distance"].as_f64().unwrap() < far["distance"].as_f64().unwrap());

    let roc = ok_json(&[
        "verify", "--key", p(&key), "--pos", p(&attacked), p(&clean), "--neg", p(&fresh),
    ]);
    assert_eq!(roc["auc"], 1.0);

    let g = ok_json(&["gaussianity", p(&marked), p(&fresh)]);
    assert_eq!(g["latents"].as_array().unwrap().len(), 2);
}

#[test]
fn run_writes_outputs_and_identify_uses_the_same_pool() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    fs::write(
        &cfg,
        r#"{"method":"hstr","n_samples":6,"pool_size":32,"seed":3,
            "attacks":[{"kind":"identity"},{"kind":"crop_center","scale":0.5}]}"#,
    )
    .unwrap();
    let out = d.join("out");
    let v = ok_json(&["run", "--config", p(&cfg), "--out", p(&out), "--threads", "2", "--roc-svg"]);
    assert_eq!(v["method"], "hstr:center_aware:both");
    for f in ["results.csv", "roc_points.csv", "manifest.json", "roc.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    // rerun with a different thread count gives identical bytes
    let out2 = d.join("out2");
    ok_json(&["run", "--config", p(&cfg), "--out", p(&out2), "--threads", "1"]);
    for f in ["results.csv", "roc_points.csv", "manifest.json"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(out2.join(f)).unwrap(), "{f}");
    }

    // --seed overrides the config's seed
    let out3 = d.join("out3");
    ok_json(&["run", "--config", p(&cfg), "--out", p(&out3), "--seed", "4"]);
    let m: Value = serde_json::from_str(&fs::read_to_string(out3.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["runs"][0]["seed"], 4);

    let lat = d.join("q.lat");
    sfw_core::LatentTensor::gaussian(1).save(&lat).unwrap();
    let v = ok_json(&["identify", "--latent", p(&lat), "--config", p(&cfg)]);
    assert_eq!(v["pool_size"], 32);
    assert!(v["index"].as_u64().unwrap() < 32);
}

#[test]
fn failures_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (code, v) = err_json(&["extract", "--latent", "/no/such.lat", "--key", "/no/such.json"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"], "io");
    assert!(v["message"].is_string());

    let cfg = d.join("bad.json");
    fs::write(&cfg, r#"{"method":"hsqr","n_samples":0}"#).unwrap();
    let (_, v) = err_json(&["run", "--config", p(&cfg), "--out", p(&d.join("o"))]);
    assert_eq!(v["error"], "invalid_parameter");
    assert!(!d.join("o").exists());

    fs::write(&cfg, r#"{"method":"hsqr","typo":1}"#).unwrap();
    let (_, v) = err_json(&["run", "--config", p(&cfg), "--out", p(&d.join("o"))]);
    assert_eq!(v["error"], "json");

    let lat = d.join("x.lat");
    sfw_core::LatentTensor::gaussian(1).save(&lat).unwrap();
    let (_, v) = err_json(&["attack", "--latent", p(&lat), "--attack", r#"{"kind":"jpeg","quality":0}"#, "--out", p(&lat)]);
    assert_eq!(v["error"], "invalid_parameter");

    let (code, v) = err_json(&["frobnicate"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "usage");
}

#[test]
fn help_and_version_go_to_stdout() {
    let out = sfw(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["keygen", "embed", "extract", "attack", "detect", "verify", "identify", "gaussianity", "run", "bench"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    assert!(sfw(&["--version"]).status.success());
}
