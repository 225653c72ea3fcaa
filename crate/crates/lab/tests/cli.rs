use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbgc_lab::export::{AUDIT_FILE, METRICS_FILE, TRACE_FILE};
use rbgc_lab::lottery::{self, LotteryParams};
use serde_json::Value;

fn rbgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbgc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn simulate(name: &str, dir: &Path) -> (Value, String) {
    let o = rbgc(&[
        "simulate",
        "--scenario",
        scenario(name).to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        o.status.success(),
        "{name}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let audit: Value =
        serde_json::from_str(&fs::read_to_string(dir.join(AUDIT_FILE)).unwrap()).unwrap();
    assert_eq!(audit["supply_conserved"], Value::Bool(true));
    (audit, fs::read_to_string(dir.join(METRICS_FILE)).unwrap())
}

fn settlements(audit: &Value) -> Vec<(String, Value)> {
    audit["requests"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let out = &r["settlement"]["output"];
            (out["kind"].as_str().unwrap().to_string(), out.clone())
        })
        .collect()
}

#[test]
fn equilibrium_holds_for_four() {
    let o = rbgc(&["verify-equilibrium", "--players", "4"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("max coalition gain: 0/1"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn one_player_is_a_usage_error() {
    let o = rbgc(&["verify-equilibrium", "--players", "1"]);
    assert!(!o.status.success());
    let o = rbgc(&["verify-equilibrium"]);
    assert!(!o.status.success());
}

#[test]
fn six_players_all_biased_profiles_falsified() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbgc(&[
        "verify-equilibrium",
        "--players",
        "6",
        "--falsify",
        "1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("falsified: 1000/1000 biased profiles"));
    let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(metrics.lines().count(), 1001);
    assert!(!metrics.contains(",false"));
}

#[test]
fn all_honest_scenario_succeeds_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let (audit, _) = simulate("all_honest.json", dir.path());
    let s = settlements(&audit);
    assert!(!s.is_empty());
    assert!(s.iter().all(|(k, _)| k == "success"));
    assert_eq!(audit["escrow_left_total"], 0);
}

#[test]
fn non_revealer_triggers_penalty_every_time() {
    let dir = tempfile::tempdir().unwrap();
    let (audit, _) = simulate("one_non_revealer.json", dir.path());
    let s = settlements(&audit);
    assert!(!s.is_empty());
    for (kind, out) in s {
        assert_eq!(kind, "penalty");
        assert!(out["compensation"].as_u64().unwrap() >= 500);
    }
}

#[test]
fn zero_agents_refund_everything() {
    let dir = tempfile::tempdir().unwrap();
    let (audit, metrics) = simulate("no_agents.json", dir.path());
    for (kind, out) in settlements(&audit) {
        assert_eq!(kind, "failure");
        assert_eq!(out["refund"], 1600);
    }
    for line in metrics.lines().skip(1) {
        assert!(line.ends_with(",failure,,0,0,0,1600"), "{line}");
    }
}

#[test]
fn every_sample_scenario_audits_clean_and_repeats_exactly() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        simulate(&name, a.path());
        simulate(&name, b.path());
        for f in [METRICS_FILE, TRACE_FILE, AUDIT_FILE] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{name}/{f}"
            );
        }
    }
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let path = scenario("mixed_adversaries.json");
    for (dir, seed) in [(&a, "11"), (&b, "12")] {
        let o = rbgc(&[
            "simulate",
            "--scenario",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
    }
    assert_ne!(
        fs::read(a.path().join(TRACE_FILE)).unwrap(),
        fs::read(b.path().join(TRACE_FILE)).unwrap()
    );
}

#[test]
fn malformed_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"schema_version": 1, "sim": {}}"#).unwrap();
    let o = rbgc(&[
        "simulate",
        "--scenario",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed scenario"));
}

#[test]
fn throughput_writes_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbgc(&[
        "throughput",
        "--rate",
        "64",
        "--tgen-base",
        "14133",
        "--speed",
        "0.01",
        "--duration",
        "5000",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    let t_gens: Vec<&str> = metrics
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(t_gens, ["17", "35", "70", "141", "282"]);
    assert!(dir.path().join(TRACE_FILE).exists());
}

#[test]
fn lottery_single_participant_wins() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbgc(&[
        "lottery-demo",
        "--participants",
        "1",
        "--price",
        "25",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("winner: participant 1 receives 25"));
}

#[test]
fn lottery_reports_mapping_bias() {
    let o = rbgc(&[
        "lottery-demo",
        "--participants",
        "3",
        "--price",
        "10",
        "--seed",
        "4",
    ]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("max-min win probability 0.2500"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn two_player_lottery_is_fair() {
    let draws = 10_000;
    let wins_one = (0..draws)
        .filter(|&seed| {
            let r = lottery::run(&LotteryParams::new(2, 3, seed)).unwrap();
            assert!(r.audit.pot_conserved && r.audit.generator_supply_conserved);
            assert_eq!(r.tickets.iter().map(|t| t.payout).sum::<u64>(), 6);
            r.audit.winner == Some(1)
        })
        .count();
    let freq = wins_one as f64 / draws as f64;
    assert!((freq - 0.5).abs() <= 0.02, "{freq}");
}
