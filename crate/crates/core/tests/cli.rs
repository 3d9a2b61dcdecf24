use std::process::Command;

fn etatrace(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_etatrace")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).trim().to_string())
}

#[test]
fn partition_100() {
    assert_eq!(etatrace(&["partition", "100"]), (0, "190569292".to_string()));
}

#[test]
fn qexp_f2_display() {
    assert_eq!(etatrace(&["qexp", "F_v", "--param", "2", "--terms", "4"]), (0, "q^-2 - 50 - 832q - 5693q^2".to_string()));
}

#[test]
fn verify_selberg_passes() {
    let (code, out) = etatrace(&["verify", "selberg"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("4100/4100 passed"), "{out}");
}

#[test]
fn verify_failure_exits_one() {
    // a tolerance below the working precision makes some cases fail
    let (code, _) = etatrace(&["verify", "selberg", "--tol", "1e-60"]);
    assert_eq!(code, 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(etatrace(&["frobnicate"]).0, 2);
    assert_eq!(etatrace(&["verify", "nonsense"]).0, 2);
    assert_eq!(etatrace(&["partition", "5", "--prec", "32"]).0, 2);
    assert_eq!(etatrace(&["weyl", "2", "1", "1", "3"]).0, 2);
}

#[test]
fn json_numbers_are_strings() {
    let (code, out) = etatrace(&["kloosterman", "1", "1", "7", "--output", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let obj = v.as_object().unwrap();
    assert!(obj.values().all(|x| x.is_string()), "{out}");
    assert_eq!(obj["c"], "7");
}

#[test]
fn cache_round_trip() {
    let dir = std::env::temp_dir().join(format!("etatrace-cache-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cache.json");
    let p = path.to_str().unwrap();
    let first = etatrace(&["qexp", "g_m", "--param", "25", "--terms", "4", "--cache", p]);
    assert!(path.exists());
    let second = etatrace(&["qexp", "g_m", "--param", "25", "--terms", "4", "--cache", p]);
    assert_eq!(first, second);
    assert_eq!(first.1, "q^(-25/24) + 196885q^(23/24) + 21690645q^(47/24) + 886187500q^(71/24)");
    std::fs::remove_dir_all(&dir).unwrap();
}
