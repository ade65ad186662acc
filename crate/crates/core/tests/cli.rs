use cache_channel::cli::{execute, Cli, Output};
use cache_channel::Error;
use clap::Parser;
use serde_json::Value;

fn run(args: &[&str]) -> Result<Output, Error> {
    let cli = Cli::try_parse_from(std::iter::once("cache-channel").chain(args.iter().copied()))
        .expect("arguments parse");
    execute(&cli)
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&out.stdout).expect("json output")
}

fn write_config(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("cache-channel-{}-{name}.json", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn region_check_verdicts() {
    let inside = run(&["region-check", "--scheme", "symmetric-2rx", "--rates", "0.2", "--memories", "1"]).unwrap();
    assert_eq!(inside.code, 0);
    let outside = run(&["region-check", "--scheme", "separate-asym-2rx", "--rates", "0.35", "--memories", "1"]).unwrap();
    assert_eq!(outside.code, 1);
    assert_eq!(json(&outside)["inside"], Value::Bool(false));
    let degraded = run(&["region-check", "--scheme", "degraded", "--rates", "0.1,0.1"]).unwrap();
    assert_eq!(degraded.code, 0);
}

#[test]
fn general_check_reports_both_verdicts() {
    let cfg = write_config(
        "general",
        r#"{"K":3,"D":3,"F":1,"deltas":[0.7,0.5,0.2],"rates":[0.3,0.3,0.3],"memories":[0.5,0.5,0.5],"n":1000}"#,
    );
    let out = run(&["--config", &cfg, "region-check", "--scheme", "general", "--rates", "0.05", "--memories", "0.5"]).unwrap();
    assert_eq!(out.code, 0);
    let v = json(&out);
    assert!(v["phase_lp_max_rate"].as_f64().unwrap() > 0.05);
    assert!(v["printed_conditions_max_rate"].is_number());
}

#[test]
fn sweep_is_long_format_csv() {
    let out = run(&["region-sweep", "--scheme", "joint-2rx", "--grid", "0:1:2"]).unwrap();
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "M,scheme,R_analytical,pe_hat,ci_lo,ci_hi,n,trials,seed");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2,joint-2rx,0.56"));
}

#[test]
fn schedule_show_verifies() {
    let ok = run(&["schedule-show", "--demand", "3,7"]).unwrap();
    assert_eq!(ok.code, 0);
    assert_eq!(json(&ok)["verification"]["ok"], Value::Bool(true));
    let over = run(&["schedule-show", "--demand", "3,7", "--backoff", "1.2"]).unwrap();
    assert_eq!(over.code, 1);
}

#[test]
fn placement_respects_budgets() {
    let out = run(&["placement-show"]).unwrap();
    for r in json(&out)["receivers"].as_array().unwrap() {
        assert!(r["used_bits"].as_u64() <= r["capacity_bits"].as_u64());
    }
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--trials", "8", "--seed", "11", "--backoff", "0.8"];
    let a = run(&args).unwrap();
    let b = run(&args).unwrap();
    assert_eq!(a, b);
    assert_eq!(json(&a)["pe_hat"].as_f64(), Some(0.0));
}

#[test]
fn optimize_emits_json() {
    let v = json(&run(&["optimize"]).unwrap());
    assert!((v["phase_lp"][0]["rate"].as_f64().unwrap() - 0.36).abs() < 1e-6);
}

#[test]
fn config_errors() {
    assert!(matches!(run(&["--config", "/nonexistent.json", "optimize"]), Err(Error::Io(_)) | Err(Error::InvalidConfig { .. })));
    let bad = write_config("bad", r#"{"K":2,"D":1,"F":65,"deltas":[0.1,0.1],"rates":[1],"memories":[0,0],"n":10}"#);
    assert!(matches!(run(&["--config", &bad, "optimize"]), Err(Error::InvalidConfig { .. })));
    assert!(Cli::try_parse_from(["cache-channel", "no-such-verb"]).is_err());
}
