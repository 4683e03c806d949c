use std::fs;
use std::process::{Command, Output};

use padic_potts::PadicContext;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padic-potts"))
        .args(args)
        .env_remove("PADIC_POTTS_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn measure_table_is_complete_and_normalised() {
    let o = run(&["measure", "--depth", "1", "--cutoff", "3", "--precision", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("configuration,measure"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 81);

    let ctx = PadicContext::new(5, 16).unwrap();
    let mut total = ctx.zero();
    let mut previous = String::new();
    for row in &rows {
        let (sigma, value) = row.split_once(',').unwrap();
        assert!(sigma > previous.as_str());
        previous = sigma.to_string();
        total = &total + &ctx.parse(value.trim_matches('"')).unwrap();
    }
    assert!((&total - &ctx.one()).is_within(12));
}

#[test]
fn measure_refuses_oversized_state_space() {
    let o = run(&["measure", "--depth", "2", "--cutoff", "5", "--order", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("enumeration budget"));
}

#[test]
fn zero_coupling_is_a_configuration_error() {
    let o = run(&["solve", "--coupling", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("coupling norm out of range"));
}

#[test]
fn unit_coupling_is_rejected() {
    let o = run(&["solve", "--coupling", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_suite_is_a_configuration_error() {
    let o = run(&["verify", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown suite `bogus`"));
}

#[test]
fn perturbed_compatibility_fails_with_status_one() {
    let o = run(&["verify", "--suite", "compatibility", "--perturb"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] compatibility"));
}

#[test]
fn passing_suite_exits_zero() {
    let o = run(&["verify", "--suite", "contraction"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stderr(&o).contains("0 failed"));
}

#[test]
fn solve_reproduces_the_power_field() {
    let o = run(&["solve", "--prime", "3", "--precision", "24", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ctx = PadicContext::new(3, 24).unwrap();
    let field = report["field"].as_array().unwrap();
    assert!(field.len() >= 20);
    for e in field {
        let i = e["i"].as_i64().unwrap();
        let hat = ctx.parse(e["hat"].as_str().unwrap()).unwrap();
        assert!((&hat - &ctx.p_power(i)).is_within(20), "coordinate {i}");
    }
}

#[test]
fn config_file_and_suite_sections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("records.json");
    fs::write(
        &cfg,
        format!(
            "prime = 5\nprecision = 20\nout = {:?}\n\n[weight]\nfamily = \"geometric\"\nratio = 25\n\n[suites.exp-log]\nprimes = [3]\ncases = 50\n",
            out
        ),
    )
    .unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "verify", "--suite", "exp-log"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let records: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r["parameters"]["p"] == 3 && r["pass"] == true));
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "primes = [5]\ncolour = \"blue\"\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_supplies_flags() {
    let o = Command::new(env!("CARGO_BIN_EXE_padic-potts"))
        .args(["solve", "--json"])
        .env("PADIC_POTTS_PRIME", "7")
        .env("PADIC_POTTS_PRECISION", "12")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["p"], 7);
    assert_eq!(report["N"], 12);
}
