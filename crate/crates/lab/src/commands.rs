//! The work behind each `rbgc` subcommand, separated from argument parsing
//! so tests and the acceptance suite can call it directly.

use std::path::Path;

use anyhow::{bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbgc_core::game::{
    coalition_expected_total, coalition_profile_total, find_profitable_coalition_deviation,
    verify_quasi_strong_uniform, EquilibriumReport, MixedProfile, ENUMERATION_CAP,
};
use serde::Serialize;

use crate::export::{self, write_csv, write_json, AUDIT_FILE, METRICS_FILE, TRACE_FILE};
use crate::lottery::{self, LotteryParams, LotteryResult};
use crate::scenario::Scenario;
use crate::sim::{self, SimOutput};
use crate::sweep::{self, SweepOutput, SweepParams};

/// `numerator/denominator`, always with both parts, e.g. `0/1`.
pub fn fraction(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Marginals drawn as multiples of 1/1000 until at least one sits at least
/// 0.01 away from 1/2.
pub fn random_biased_marginals<R: Rng>(rng: &mut R, players: usize) -> Vec<BigRational> {
    let half = BigRational::new(1.into(), 2.into());
    let tolerance = BigRational::new(1.into(), 100.into());
    loop {
        let lower: Vec<BigRational> = (0..players)
            .map(|_| BigRational::new(BigInt::from(rng.gen_range(0..=1000)), BigInt::from(1000)))
            .collect();
        if lower.iter().any(|q| (q - &half).abs() >= tolerance) {
            return lower;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsifyRow {
    pub sample: u64,
    pub coalition_size: usize,
    pub coalition: String,
    pub deviation: String,
    pub gain: String,
    pub gain_approx: f64,
    pub recomputed_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsifyTraceRow {
    pub sample: u64,
    pub marginals: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsifySummary {
    pub samples: u64,
    pub falsified: u64,
    pub min_gain: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumAudit {
    pub players: usize,
    pub coalitions: u64,
    pub pairs_checked: u64,
    pub max_gain: String,
    pub holds: bool,
    pub falsification: Option<FalsifySummary>,
}

#[derive(Debug, Clone)]
pub struct EquilibriumOutcome {
    pub report: EquilibriumReport,
    pub rows: Vec<FalsifyRow>,
    pub trace: Vec<FalsifyTraceRow>,
    pub audit: EquilibriumAudit,
}

impl EquilibriumOutcome {
    pub fn success(&self) -> bool {
        self.audit.holds
            && self
                .audit
                .falsification
                .as_ref()
                .is_none_or(|f| f.falsified == f.samples)
    }

    pub fn summary(&self) -> String {
        let a = &self.audit;
        let mut s = format!(
            "players: {}\ncoalitions checked: {}\ncoalition/deviation pairs: {}\nmax coalition gain: {}\n",
            a.players, a.coalitions, a.pairs_checked, a.max_gain
        );
        if let Some(f) = &a.falsification {
            s += &format!("falsified: {}/{} biased profiles\n", f.falsified, f.samples);
            if let Some(g) = &f.min_gain {
                s += &format!("smallest gain found: {g}\n");
            }
        }
        s
    }
}

/// Exhaustive equilibrium check plus `falsify` random biased profiles,
/// each of whose deviation gains is recomputed independently.
pub fn verify_equilibrium(players: usize, falsify: u64, seed: u64) -> Result<EquilibriumOutcome> {
    if !(2..=ENUMERATION_CAP).contains(&players) {
        bail!("--players must be between 2 and {ENUMERATION_CAP}, got {players}");
    }
    let report = verify_quasi_strong_uniform(players)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    let mut min_gain: Option<BigRational> = None;
    for sample in 0..falsify {
        let lower = random_biased_marginals(&mut rng, players);
        trace.push(FalsifyTraceRow {
            sample,
            marginals: lower.iter().map(fraction).collect::<Vec<_>>().join(" "),
        });
        let profile = MixedProfile::new(lower)?;
        let Some(dev) = find_profitable_coalition_deviation(&profile)? else {
            rows.push(FalsifyRow {
                sample,
                coalition_size: 0,
                coalition: String::new(),
                deviation: String::new(),
                gain: "0/1".into(),
                gain_approx: 0.0,
                recomputed_match: false,
            });
            continue;
        };
        let recomputed = coalition_expected_total(&profile, &dev.coalition, &dev.deviation)?
            - coalition_profile_total(&profile, &dev.coalition)?;
        let ok = recomputed == dev.gain && recomputed.is_positive();
        if ok && min_gain.as_ref().is_none_or(|m| &recomputed < m) {
            min_gain = Some(recomputed.clone());
        }
        let join = |v: Vec<String>| v.join(" ");
        rows.push(FalsifyRow {
            sample,
            coalition_size: dev.coalition.len(),
            coalition: join(dev.coalition.iter().map(|p| p.to_string()).collect()),
            deviation: join(dev.deviation.iter().map(|s| s.to_string()).collect()),
            gain: fraction(&dev.gain),
            gain_approx: dev.gain.to_f64().unwrap_or(f64::NAN),
            recomputed_match: ok,
        });
    }
    let falsification = (falsify > 0).then(|| FalsifySummary {
        samples: falsify,
        falsified: rows.iter().filter(|r| r.recomputed_match).count() as u64,
        min_gain: min_gain.as_ref().map(fraction),
    });
    let audit = EquilibriumAudit {
        players,
        coalitions: report.coalitions,
        pairs_checked: report.pairs_checked,
        max_gain: fraction(&report.max_gain),
        holds: report.max_gain.is_zero(),
        falsification,
    };
    Ok(EquilibriumOutcome {
        report,
        rows,
        trace,
        audit,
    })
}

pub fn write_equilibrium(dir: &Path, out: &EquilibriumOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    export::write_csv_with_header(
        &dir.join(METRICS_FILE),
        &[
            "sample",
            "coalition_size",
            "coalition",
            "deviation",
            "gain",
            "gain_approx",
            "recomputed_match",
        ],
        &out.rows,
    )?;
    export::write_csv_with_header(&dir.join(TRACE_FILE), &["sample", "marginals"], &out.trace)?;
    write_json(&dir.join(AUDIT_FILE), &out.audit)
}

/// Loads and runs a scenario. A `seed` given here overrides the file's.
pub fn simulate(path: &Path, seed: Option<u64>) -> Result<(Scenario, SimOutput)> {
    let scenario = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let seed = seed.unwrap_or(scenario.sim.seed);
    let out = sim::run(&scenario, seed)?;
    Ok((scenario, out))
}

pub fn simulate_summary(out: &SimOutput) -> String {
    let a = &out.audit;
    let mean = a
        .mean_processing_ms
        .map_or("n/a".to_string(), |m| format!("{m:.1} ms"));
    format!(
        "blocks: {}\nrequests: {} broadcast, {} opened, {} rejected, {} unsettled\n\
         settlements: {} success, {} penalty, {} failure\nmean processing time: {}\n\
         dust paid to clients: {}\ntotal supply: {} -> {} ({})\n",
        a.blocks,
        a.requests_broadcast,
        a.requests_opened,
        a.requests_rejected,
        a.requests_unsettled,
        a.settlements.success,
        a.settlements.penalty,
        a.settlements.failure,
        mean,
        a.dust_total,
        a.supply_before,
        a.supply_after,
        if a.supply_conserved {
            "conserved"
        } else {
            "VIOLATED"
        },
    )
}

pub fn throughput(params: &SweepParams) -> Result<SweepOutput> {
    if !(params.rate_bits_per_s > 0.0 && params.speed > 0.0 && params.duration_ms > 0) {
        bail!("rate, speed and duration must all be positive");
    }
    Ok(sweep::run_sweep(params)?)
}

pub fn write_throughput(dir: &Path, out: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_csv(&dir.join(METRICS_FILE), &out.rows)?;
    export::write_csv_with_header(
        &dir.join(TRACE_FILE),
        &[
            "t_gen_ms",
            "request_id",
            "created_ms",
            "settled_ms",
            "processing_ms",
            "settlement",
        ],
        &out.trace,
    )?;
    write_json(&dir.join(AUDIT_FILE), &out.audit)
}

pub fn throughput_table(out: &SweepOutput) -> String {
    let mut s = String::from("t_gen_ms  mean_processing_ms  blocks  throughput_bits/s  success/penalty/failure/rejected\n");
    for r in &out.rows {
        s += &format!(
            "{:>8}  {:>18.1}  {:>6.2}  {:>17.2}  {}/{}/{}/{}\n",
            r.t_gen_ms,
            r.mean_processing_ms.unwrap_or(f64::NAN),
            r.mean_processing_blocks.unwrap_or(f64::NAN),
            r.throughput_bits_per_s,
            r.success,
            r.penalty,
            r.failure,
            r.rejected
        );
    }
    s
}

pub fn lottery_demo(params: &LotteryParams) -> Result<LotteryResult> {
    Ok(lottery::run(params)?)
}

pub fn write_lottery(dir: &Path, out: &LotteryResult) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_csv(&dir.join(METRICS_FILE), &out.tickets)?;
    let trace: Vec<_> = out
        .log
        .receipts
        .iter()
        .map(|(t, r)| export::tx_row("instant", 0, *t, 0, r))
        .collect();
    export::write_csv_with_header(&dir.join(TRACE_FILE), export::TRACE_HEADER, &trace)?;
    write_json(&dir.join(AUDIT_FILE), &out.audit)
}

pub fn lottery_announcement(out: &LotteryResult) -> String {
    let a = &out.audit;
    let mut s = format!(
        "{} tickets at {} each, pot {}\nrandom bits drawn: {}\n",
        a.participants, a.price, a.pot, a.bits
    );
    match (a.draw, a.winner) {
        (Some(d), Some(w)) => {
            s += &format!(
                "draw value: {d}\nwinner: participant {w} receives {}\n",
                a.pot
            )
        }
        _ => s += "randomness unavailable, every ticket refunded\n",
    }
    if a.mapping_bias > 0.0 {
        s += &format!(
            "note: {} is not a power of two, so draw mod {} favours low indices (max-min win probability {:.4})\n",
            a.participants, a.participants, a.mapping_bias
        );
    }
    s
}
