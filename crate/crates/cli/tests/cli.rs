use std::fs;
use std::path::Path;
use std::process::Command;

fn yzero(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_yzero"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bounds_run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        "[constellation]\nM = [4, 8]\nS = 1.0\n",
    );
    let out = dir.path().join("out");
    let o = yzero(&[
        "bounds",
        "--config",
        &cfg,
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "M,S,method,p_error,dim_used,truncation_deficit"
    );
    assert_eq!(csv.lines().count(), 2 + 6);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"timestamp_unix\": 1700000000"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.toml", "[constellation]\nM = []\nS = 1.0\n");
    let o = yzero(&[
        "bounds",
        "--config",
        &cfg,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn cap_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "[constellation]\nM = 16\nS = 1.0\n[keystream]\nkey_bits = 24\n[scenario]\nn = 32\n",
    );
    let o = yzero(&[
        "attack",
        "--config",
        &cfg,
        "--seed",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn seed_and_thread_count_do_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "[constellation]\nM = 16\nS = 4.0\n[keystream]\nkey_bits = 8\n[scenario]\nn = 32\ntrials = 4\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let o = yzero(&[
            "attack",
            "--config",
            &cfg,
            "--seed",
            "9",
            "--threads",
            threads,
            "--out-dir",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["attack.json", "attack_seeds.csv", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}
