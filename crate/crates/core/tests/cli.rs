use std::process::Command;

fn hopf(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hopf")).args(args).output().expect("spawn hopf");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn record<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

#[test]
fn eval_zero_h_returns_initial_data() {
    let (code, out, _) = hopf(&["eval", "--problem", "zero-h", "--t", "0.5", "--x", "0.3"]);
    assert_eq!(code, 0);
    let u: f64 = record(&out, "u").unwrap().parse().unwrap();
    assert!((u - 1.09f64.sqrt()).abs() < 1e-10);
}

#[test]
fn repro_is_byte_identical() {
    let a = hopf(&["repro", "--case", "remark44"]);
    let b = hopf(&["repro", "--case", "remark44"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_eq!(record(&a.1, "status"), Some("pass"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hopf(&["frobnicate"]).0, 2);
    assert_eq!(hopf(&["eval", "--problem", "nope", "--t", "1", "--x", "0"]).0, 2);
    assert_eq!(hopf(&["eval", "--problem", "log-example", "--t", "1", "--x", "0,1"]).0, 2);
    assert_eq!(hopf(&["eval", "--problem", "log-example", "--t", "9", "--x", "0"]).0, 2);
    let (code, _, err) = hopf(&["--output", "/nonexistent/dir/out.csv", "eval", "--problem", "zero-h", "--t", "1", "--x", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("/nonexistent/dir/out.csv"));
    assert_eq!(hopf(&["--help"]).0, 0);
}

#[test]
fn field_csv_header_and_order() {
    let (code, out, _) = hopf(&["field", "--problem", "log-example", "--t", "1,0.5", "--window", "-1:1", "--nodes", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "t,x1,u,diam,singleton");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0.5,-1,"));
    assert!(lines[5].starts_with("1,0,") && lines[5].ends_with(",false"));
}

#[test]
fn trace_csv_and_lost_exit_code() {
    let (code, out, _) = hopf(&["trace", "--problem", "log-example", "--t0", "0.6", "--x0", "0", "--t-end", "0.8"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("k,t,x1,diameter"));
    // (0.3, 0) lies in the regular strip, so there is nothing to trace
    assert_eq!(hopf(&["trace", "--problem", "log-example", "--t0", "0.3", "--x0", "0", "--t-end", "0.8"]).0, 2);
}

#[test]
fn check_and_strip_records() {
    let (code, out, _) = hopf(&["check", "--problem", "log-example", "--nodes", "41"]);
    assert_eq!(code, 0);
    assert_eq!(record(&out, "t_star"), Some("0.25"));
    assert_eq!(record(&out, "injective"), Some("true"));
    // above the first singular time the plane audit must fail
    let (code, out, _) = hopf(&["check", "--problem", "log-example", "--t-star", "1", "--nodes", "41"]);
    assert_eq!(code, 1);
    assert_eq!(record(&out, "singleton_plane"), Some("false"));

    let (code, out, _) = hopf(&["--format", "kv", "strip", "--problem", "log-example"]);
    assert_eq!(code, 0);
    let theta: f64 = record(&out, "theta_estimate").unwrap().parse().unwrap();
    assert!((theta - 0.5).abs() < 0.01);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = std::env::temp_dir().join(format!("hopf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    let out_path = dir.join("eval.txt");
    std::fs::write(
        &cfg,
        format!("[problem]\ncatalog = \"zero-h\"\n[run]\nformat = \"csv\"\noutput = {:?}\n", out_path.display().to_string()),
    )
    .unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let (code, stdout, _) = hopf(&["--config", cfg_s, "eval", "--t", "1", "--x", "0"]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.starts_with("key,value\n"));
    // flags override the file
    let (code, stdout, _) = hopf(&["--config", cfg_s, "--problem", "log-example", "--format", "kv", "--output", "/dev/stdout", "eval", "--t", "1", "--x", "0"]);
    assert_eq!(code, 0);
    assert_eq!(record(&stdout, "problem"), Some("log-example"));
    assert_eq!(record(&stdout, "singleton"), Some("false"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_uses_fixed_seed() {
    let a = hopf(&["verify", "--problem", "log-example", "--samples", "10"]);
    let b = hopf(&["verify", "--problem", "log-example", "--samples", "10"]);
    let c = hopf(&["verify", "--problem", "log-example", "--samples", "10", "--seed", "7"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_ne!(a.1, c.1);
}
