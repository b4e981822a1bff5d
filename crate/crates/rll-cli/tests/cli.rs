//! End-to-end checks of the CLI surface: encode/decode file roundtrips,
//! validation exit codes, and report formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rll"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn capacity_text_and_json() {
    let out = rll(&["capacity", "--d", "1", "--k", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("0.551463"), "{}", stdout(&out));

    let out = rll(&["capacity", "--d", "0", "--k", "inf", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["capacity"].as_f64().unwrap(), 1.0);
    assert!(v["k"].is_null());
}

#[test]
fn optimize_reports_known_optimum() {
    let out = rll(&["optimize", "--d", "1", "--k", "3", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["j_star"].as_u64().unwrap(), 2);
    assert!((v["efficiency"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_2() {
    // k <= d is rejected by the library as a parameter error
    let out = rll(&["capacity", "--d", "3", "--k", "2"]);
    assert_eq!(code(&out), 2);
    // unknown flags are clap usage errors
    let out = rll(&["capacity", "--d", "1", "--k", "3", "--bogus"]);
    assert_eq!(code(&out), 2);
    // il on a prime phrase count cannot be constructed
    let out = rll(&["factor", "--d", "1", "--k", "3"]);
    assert_eq!(code(&out), 2);
}

fn roundtrip(algo: &str, d: &str, k: &str, extra: &[&str], dir: &Path, payload: &[u8]) {
    let input = dir.join(format!("in-{algo}-{d}-{k}.bin"));
    let encoded = dir.join(format!("enc-{algo}-{d}-{k}.rll"));
    let decoded = dir.join(format!("dec-{algo}-{d}-{k}.bin"));
    fs::write(&input, payload).unwrap();
    let mut args = vec![
        "encode",
        "--algo",
        algo,
        "--d",
        d,
        "--k",
        k,
        "--in",
        input.to_str().unwrap(),
        "--out",
        encoded.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = rll(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = rll(&[
        "decode",
        "--in",
        encoded.to_str().unwrap(),
        "--out",
        decoded.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&decoded).unwrap(), payload, "{algo} ({d},{k})");
}

#[test]
fn encode_decode_roundtrips_files() {
    let dir = tempfile::tempdir().unwrap();
    let payload: Vec<u8> = (0..=255u8).cycle().take(3000).collect();
    roundtrip(
        "ss",
        "1",
        "3",
        &["--j", "2", "--p", "0.6823"],
        dir.path(),
        &payload,
    );
    roundtrip("ss", "2", "5", &[], dir.path(), &payload); // optimized defaults
    roundtrip("ss", "1", "inf", &[], dir.path(), &payload);
    roundtrip("il", "1", "4", &[], dir.path(), &payload);
    roundtrip("il", "0", "11", &[], dir.path(), &payload);
    roundtrip(
        "ss",
        "0",
        "1",
        &["--j", "0", "--p", "0.38"],
        dir.path(),
        b"",
    );
}

#[test]
fn corrupted_container_fails_decode() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let encoded = dir.path().join("enc.rll");
    let decoded = dir.path().join("dec.bin");
    fs::write(&input, b"some message payload").unwrap();
    let out = rll(&[
        "encode",
        "--algo",
        "ss",
        "--d",
        "1",
        "--k",
        "3",
        "--j",
        "2",
        "--p",
        "0.68",
        "--in",
        input.to_str().unwrap(),
        "--out",
        encoded.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let mut bytes = fs::read(&encoded).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xFF;
    fs::write(&encoded, &bytes).unwrap();
    let out = rll(&[
        "decode",
        "--in",
        encoded.to_str().unwrap(),
        "--out",
        decoded.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!decoded.exists(), "no partial output on failure");
}

#[test]
fn check_validates_raw_streams() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.bin");
    let bad = dir.path().join("bad.bin");
    // 0x24 = 00100100: gaps of 2 within (1,3); trailing zeros are not judged
    fs::write(&good, [0x24u8, 0x92, 0x49, 0x24]).unwrap();
    let out = rll(&[
        "check",
        "--in",
        good.to_str().unwrap(),
        "--d",
        "1",
        "--k",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    // 0xFF has adjacent ones: violates d = 1
    fs::write(&bad, [0xFFu8]).unwrap();
    let out = rll(&[
        "check",
        "--in",
        bad.to_str().unwrap(),
        "--d",
        "1",
        "--k",
        "3",
    ]);
    assert_eq!(code(&out), 1);
    let out = rll(&[
        "check",
        "--in",
        bad.to_str().unwrap(),
        "--d",
        "1",
        "--k",
        "3",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ok"].as_bool(), Some(false));
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn table4_csv_shape() {
    let out = rll(&["table4", "--csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 8); // header + 7 rows
    assert!(lines[0].starts_with("d,k,capacity"));
    assert!(lines[1].starts_with("1,3,"));
}

#[test]
fn simulate_json_fields() {
    let out = rll(&[
        "simulate", "--algo", "ss", "--d", "1", "--k", "3", "--j", "2", "--p", "0.6823", "--bits",
        "50000", "--seed", "7", "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for field in [
        "d",
        "k",
        "algorithm",
        "analytic_rate",
        "empirical_rate",
        "capacity",
        "efficiency",
        "sample_bits",
        "seed",
    ] {
        assert!(!v[field].is_null(), "missing field {field}");
    }
    assert_eq!(v["seed"].as_u64(), Some(7));
    let (emp, ana) = (
        v["empirical_rate"].as_f64().unwrap(),
        v["analytic_rate"].as_f64().unwrap(),
    );
    assert!((emp - ana).abs() / ana < 0.02);
}

#[test]
fn factor_lists_chain_biases() {
    let out = rll(&["factor", "--d", "0", "--k", "11", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["transformer_count"].as_u64(), Some(4));
    let factors = v["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 3);
    assert_eq!(factors[2]["arity"].as_u64(), Some(3));
    let biases = factors[2]["biases"].as_array().unwrap();
    assert!((biases[0].as_f64().unwrap() - 0.937698694726).abs() < 1e-9);
}
