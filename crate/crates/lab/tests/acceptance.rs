//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbgc_core::agents::{tournament, AgentPolicy, RoundParams, TournamentReport};
use rbgc_core::chainsim::censorship_trial;
use rbgc_core::game::{reward_shares, RbgOutcome};
use rbgc_core::protocol::OutputKind;
use rbgc_lab::commands;
use rbgc_lab::export;
use rbgc_lab::scenario::{AgentEntry, CensorKind, MinerEntry, Scenario};
use rbgc_lab::sim;
use rbgc_lab::sweep::{self, SweepParams};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_equilibrium() -> Verdict {
    let start = Instant::now();
    let mut gains = Vec::new();
    for n in 2..=6 {
        let out = commands::verify_equilibrium(n, 0, 0).map_err(|e| e.to_string())?;
        if !out.audit.holds || out.audit.pairs_checked != 3u64.pow(n as u32) - 1 {
            return Err(format!("n={n}: max gain {}", out.audit.max_gain));
        }
        gains.push(out.audit.max_gain);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 60.0,
        format!("max gain {} for n=2..6 in {secs:.2}s", gains.join(",")),
    )
}

fn c2_falsification() -> Verdict {
    let mut counts = Vec::new();
    for n in 2..=6 {
        let out =
            commands::verify_equilibrium(n, 1000, 100 + n as u64).map_err(|e| e.to_string())?;
        let f = out.audit.falsification.expect("requested");
        if f.falsified != 1000 {
            return Err(format!("n={n}: {}/1000", f.falsified));
        }
        counts.push(format!("n={n} {}/1000", f.falsified));
    }
    Ok(counts.join(", "))
}

const WINS: [(u8, u8); 4] = [(1, 0), (2, 1), (3, 2), (0, 3)];

fn pairwise(a: u8, b: u8) -> i128 {
    if WINS.contains(&(a, b)) {
        1
    } else if WINS.contains(&(b, a)) {
        -1
    } else {
        0
    }
}

fn c3_rewards() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..10_000 {
        let n = rng.gen_range(1..=100usize);
        let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let fee: u64 = rng.gen_range(0..1u64 << 48);
        let outcome = RbgOutcome::from_bits(&bits).unwrap();
        let raw: Vec<u8> = outcome.strategies().iter().map(|s| s.value()).collect();
        let split = reward_shares(&outcome.counts(), outcome.strategies(), fee)
            .map_err(|e| e.to_string())?;
        let nn = n as i128;
        for (i, &share) in split.shares.iter().enumerate() {
            let u: i128 = (0..n)
                .filter(|&j| j != i)
                .map(|j| pairwise(raw[i], raw[j]))
                .sum();
            let oracle = (i128::from(fee) * (nn + u)) / (nn * nn);
            if i128::from(share) != oracle {
                return Err(format!("case {case}: share {share} vs oracle {oracle}"));
            }
        }
        let total: u64 = split.shares.iter().sum();
        if total + split.dust != fee || split.dust >= (n * n) as u64 {
            return Err(format!(
                "case {case}: sum {total} + dust {} vs fee {fee}",
                split.dust
            ));
        }
    }
    Ok("10^4 instances: conservation, dust < n'^2, pairwise oracle match".into())
}

fn params() -> RoundParams {
    RoundParams {
        fee: 1_600,
        value_bound: 500,
        t_gen: 1_000,
    }
}

fn c4_randomness() -> Verdict {
    let policies = [
        AgentPolicy::HonestUniform,
        AgentPolicy::ConstantBit { bit: false },
        AgentPolicy::ConstantBit { bit: false },
        AgentPolicy::ConstantBit { bit: false },
    ];
    let report = tournament(&policies, &params(), 100_000, 4).map_err(|e| e.to_string())?;
    let p = report.ones as f64 / report.outputs as f64;
    check(
        report.outputs == 100_000 && (0.495..=0.505).contains(&p),
        format!("P(output=1) = {p:.4} over {} requests", report.outputs),
    )
}

fn c5_censorship() -> Verdict {
    let half = censorship_trial(Ratio::new(1, 2), 4, 10_000, 5).map_err(|e| e.to_string())?;
    let quarter = censorship_trial(Ratio::new(1, 4), 4, 10_000, 6).map_err(|e| e.to_string())?;
    let ok_half = (half.rate - 0.0625).abs() <= 0.01;
    let bound = 0.004 + 3.0 * quarter.sigma;
    check(
        ok_half && quarter.rate <= bound,
        format!(
            "q=1/2: {:.4} (0.0625 +/- 0.01); q=1/4: {:.4} <= {bound:.4}",
            half.rate, quarter.rate
        ),
    )
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let t_gen = rng.gen_range(20..200);
    let mut agents = Vec::new();
    for (policy, max) in [
        (AgentPolicy::HonestUniform, 3),
        (AgentPolicy::NonRevealer, 2),
        (
            AgentPolicy::LastMover {
                preferred: rng.gen(),
            },
            1,
        ),
        (AgentPolicy::ConstantBit { bit: rng.gen() }, 1),
        (
            AgentPolicy::SybilCoalition {
                bits: vec![rng.gen(), rng.gen()],
            },
            1,
        ),
    ] {
        let count = rng.gen_range(0..=max);
        if count > 0 && rng.gen_bool(0.6) {
            agents.push(AgentEntry::new(policy, count));
        }
    }
    let mut s = Scenario::simple(
        t_gen,
        t_gen * rng.gen_range(2..8),
        1000.0 / (t_gen as f64 * 2.0),
        agents,
    );
    s.protocol.t_reg_blocks = rng.gen_range(2..6);
    s.protocol.t_min_blocks = s.protocol.t_reg_blocks + rng.gen_range(3..8);
    s.requests.deadline_offset_blocks = Some(s.protocol.t_min_blocks + rng.gen_range(1..5));
    s.requests.value_bound = rng.gen_range(1..1_000);
    s.requests.fee = rng.gen_range(0..5_000);
    if rng.gen_bool(0.3) {
        let censor = if rng.gen_bool(0.5) {
            CensorKind::Reveals
        } else {
            CensorKind::Registrations
        };
        s.miners = vec![
            MinerEntry {
                hash_power: "1/3".into(),
                censor: Some(censor),
            },
            MinerEntry {
                hash_power: "2/3".into(),
                censor: None,
            },
        ];
    }
    s
}

fn c6_settlement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut penalty, mut zero, mut success, mut silent) = (0, 0, 0, 0);
    for i in 0..1_000 {
        let scenario = random_scenario(&mut rng);
        let out = sim::run(&scenario, i).map_err(|e| e.to_string())?;
        let a = &out.audit;
        if !a.supply_conserved || a.requests_unsettled > 0 {
            return Err(format!(
                "scenario {i}: supply {} unsettled {}",
                a.supply_conserved, a.requests_unsettled
            ));
        }
        for r in &a.requests {
            let s = r.settlement.expect("settled");
            let bad = |why: &str| {
                Err(format!(
                    "scenario {i} request {}: {why}: {:?}",
                    r.id.0, s.output
                ))
            };
            match s.output {
                OutputKind::Failure { refund } if r.registrants == 0 => {
                    zero += 1;
                    if refund != r.fee {
                        return bad("partial refund");
                    }
                }
                OutputKind::Failure { refund } if r.revealed == 0 => {
                    // Registrants but not one reveal: nothing to derive a bit
                    // from, so the fee and every deposit go to the client.
                    silent += 1;
                    if refund != r.fee || s.confiscated != r.registrants * r.value_bound {
                        return bad("silent round not fully refunded");
                    }
                }
                OutputKind::Success { .. } if r.revealed == r.registrants && r.registrants > 0 => {
                    success += 1
                }
                OutputKind::Penalty { compensation, .. }
                    if 0 < r.revealed && r.revealed < r.registrants =>
                {
                    penalty += 1;
                    if compensation < r.value_bound {
                        return bad("compensation below v");
                    }
                }
                _ => return bad("settlement does not match reveals"),
            }
        }
    }
    check(
        penalty > 0 && zero > 0 && success > 0,
        format!("1000 traces: {success} success, {penalty} penalty (>= v), {zero} zero-participation refunds, {silent} no-reveal refunds; supply constant"),
    )
}

fn sweep_params() -> SweepParams {
    SweepParams {
        rate_bits_per_s: 256.0,
        t_gen_base_ms: sweep::DEFAULT_T_GEN_BASE_MS,
        speed: 0.01,
        duration_ms: 60_000,
        seed: 7,
        honest_agents: 3,
    }
}

fn c7_c8_sweep() -> (Verdict, Verdict) {
    let out = match sweep::run_sweep(&sweep_params()) {
        Ok(o) => o,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let latency: Vec<f64> = out
        .rows
        .iter()
        .map(|r| r.mean_processing_ms.unwrap_or(f64::NAN))
        .collect();
    let blocks: Vec<f64> = out
        .rows
        .iter()
        .map(|r| r.mean_processing_blocks.unwrap_or(f64::NAN))
        .collect();
    let monotone = latency.windows(2).all(|w| w[0] < w[1]);
    let bounded = blocks.iter().all(|&b| (10.0..=13.0).contains(&b));
    let c7 = check(
        monotone && bounded && out.audit.supply_conserved,
        format!(
            "mean processing (in t_gen) {}",
            blocks
                .iter()
                .map(|b| format!("{b:.2}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );

    let tp: Vec<f64> = out.rows.iter().map(|r| r.throughput_bits_per_s).collect();
    let ratio = |v: &[f64]| {
        v.iter().cloned().fold(f64::MIN, f64::max) / v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let (tp_ratio, lat_ratio) = (ratio(&tp), ratio(&latency));
    let c8 = check(
        tp.iter().all(|&t| t > 0.0 && t <= 256.0) && tp_ratio <= 4.0 && lat_ratio >= 10.0,
        format!(
            "throughput {} bits/s, max/min {tp_ratio:.2}; latency max/min {lat_ratio:.2}",
            tp.iter()
                .map(|t| format!("{t:.1}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    (c7, c8)
}

fn uplift(report: &TournamentReport, slot: usize, fair: f64) -> Result<f64, String> {
    let row = &report.rows[slot];
    if row.mean_payoff > fair + 3.0 * row.std_error {
        return Err(format!(
            "{} earned {:.2} vs fair {fair:.2} (se {:.2})",
            row.policy, row.mean_payoff, row.std_error
        ));
    }
    Ok(row.mean_payoff - fair)
}

fn c9_tournament() -> Verdict {
    let p = params();
    let fee = p.fee as f64;
    let honest = vec![AgentPolicy::HonestUniform; 4];
    let base = tournament(&honest, &p, 10_000, 9).map_err(|e| e.to_string())?;
    for row in &base.rows {
        if (row.mean_payoff - fee / 4.0).abs() > 3.0 * row.std_error {
            return Err(format!(
                "honest agent {} mean {:.2}",
                row.agent, row.mean_payoff
            ));
        }
    }
    let mut constant = honest.clone();
    constant[0] = AgentPolicy::ConstantBit { bit: false };
    let r = tournament(&constant, &p, 10_000, 10).map_err(|e| e.to_string())?;
    let d_constant = uplift(&r, 0, fee / 4.0)?;

    let mut details = Vec::new();
    for bits in [[false, false], [false, true], [true, false], [true, true]] {
        let mut sybil = honest.clone();
        sybil[0] = AgentPolicy::SybilCoalition {
            bits: bits.to_vec(),
        };
        let r = tournament(&sybil, &p, 10_000, 11).map_err(|e| e.to_string())?;
        // Five identities in play; the coalition's fair share is two fifths.
        let d = uplift(&r, 0, 2.0 * fee / 5.0)?;
        details.push(format!("{:+.1}", d));
    }
    Ok(format!(
        "honest means {}; constant-bit uplift {d_constant:+.1}; sybil uplifts {}",
        base.rows
            .iter()
            .map(|r| format!("{:.1}", r.mean_payoff))
            .collect::<Vec<_>>()
            .join("/"),
        details.join(" ")
    ))
}

fn c10_determinism() -> Verdict {
    let tmp = std::env::temp_dir().join(format!("rbgc-acceptance-{}", std::process::id()));
    let mut compared = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let scenarios: Vec<Scenario> = (0..3).map(|_| random_scenario(&mut rng)).collect();
    for (i, s) in scenarios.iter().enumerate() {
        for run in ["a", "b"] {
            let out = sim::run(s, 99).map_err(|e| e.to_string())?;
            export::write_run(&tmp.join(format!("sim{i}{run}")), &out)
                .map_err(|e| e.to_string())?;
        }
    }
    let mut small = sweep_params();
    small.duration_ms = 5_000;
    for run in ["a", "b"] {
        let out = sweep::run_sweep(&small).map_err(|e| e.to_string())?;
        commands::write_throughput(&tmp.join(format!("sweep{run}")), &out)
            .map_err(|e| e.to_string())?;
        let eq = commands::verify_equilibrium(4, 50, 3).map_err(|e| e.to_string())?;
        commands::write_equilibrium(&tmp.join(format!("eq{run}")), &eq)
            .map_err(|e| e.to_string())?;
        let lot = commands::lottery_demo(&rbgc_lab::lottery::LotteryParams::new(5, 10, 3))
            .map_err(|e| e.to_string())?;
        commands::write_lottery(&tmp.join(format!("lot{run}")), &lot).map_err(|e| e.to_string())?;
        let t = tournament(&vec![AgentPolicy::HonestUniform; 3], &params(), 200, 5)
            .map_err(|e| e.to_string())?;
        export::write_json(&tmp.join(format!("tour{run}.json")), &t).map_err(|e| e.to_string())?;
    }
    let mut dirs: Vec<String> = (0..scenarios.len()).map(|i| format!("sim{i}")).collect();
    dirs.extend(["sweep", "eq", "lot"].map(String::from));
    for d in &dirs {
        for f in [export::METRICS_FILE, export::TRACE_FILE, export::AUDIT_FILE] {
            let a = std::fs::read(tmp.join(format!("{d}a")).join(f)).map_err(|e| e.to_string())?;
            let b = std::fs::read(tmp.join(format!("{d}b")).join(f)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{d}/{f} differs"));
            }
            compared += 1;
        }
    }
    let same =
        std::fs::read(tmp.join("toura.json")).ok() == std::fs::read(tmp.join("tourb.json")).ok();
    compared += 1;
    let _ = std::fs::remove_dir_all(&tmp);
    check(
        same,
        format!("{compared} output files byte-identical across repeated runs"),
    )
}

fn main() -> ExitCode {
    let ((r1, r2, r3), (r4, r5, r6), ((r7, r8), r9, r10)) = (
        (c1_equilibrium(), c2_falsification(), c3_rewards()),
        (c4_randomness(), c5_censorship(), c6_settlement()),
        (c7_c8_sweep(), c9_tournament(), c10_determinism()),
    );
    let results = [
        ("equilibrium of the uniform profile", r1),
        ("uniqueness by falsification", r2),
        ("reward formula", r3),
        ("single honest participant randomises output", r4),
        ("withholding bound", r5),
        ("penalty and failure settlement", r6),
        ("latency shape", r7),
        ("throughput shape", r8),
        ("incentive tournament", r9),
        ("determinism", r10),
    ];
    let mut failed = 0;
    for (i, (name, verdict)) in results.iter().enumerate() {
        match verdict {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
