//! Block-time sweep measuring request latency and delivered throughput.

use rayon::prelude::*;
use rbgc_core::agents::AgentPolicy;
use rbgc_core::protocol::Millis;
use serde::Serialize;

use crate::scenario::{AgentEntry, Scenario};
use crate::sim::{self, Audit, SimError};

/// Mean block interval the sweep is centred on before speed scaling.
pub const DEFAULT_T_GEN_BASE_MS: Millis = 14_133;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub rate_bits_per_s: f64,
    pub t_gen_base_ms: Millis,
    /// Multiplies every block interval; `0.01` runs a hundred times faster
    /// in simulated time.
    pub speed: f64,
    pub duration_ms: Millis,
    pub seed: u64,
    pub honest_agents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t_gen_ms: Millis,
    pub requests: u64,
    pub opened: u64,
    pub rejected: u64,
    pub success: u64,
    pub penalty: u64,
    pub failure: u64,
    pub unsettled: u64,
    pub mean_processing_ms: Option<f64>,
    pub mean_processing_blocks: Option<f64>,
    pub throughput_bits_per_s: f64,
}

/// Per-request processing time, one line per request per sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTraceRow {
    pub t_gen_ms: Millis,
    pub request_id: u64,
    pub created_ms: Millis,
    pub settled_ms: Option<Millis>,
    pub processing_ms: Option<Millis>,
    pub settlement: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAudit {
    pub rate_bits_per_s: f64,
    pub duration_ms: Millis,
    pub seed: u64,
    pub supply_conserved: bool,
    /// Per-run audits without the per-request detail.
    pub runs: Vec<Audit>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub trace: Vec<SweepTraceRow>,
    pub audit: SweepAudit,
}

/// `{t/8, t/4, t/2, t, 2t}` with `t = base * speed`, each at least 1 ms.
pub fn sweep_points(t_gen_base_ms: Millis, speed: f64) -> Vec<Millis> {
    let t = ((t_gen_base_ms as f64 * speed).round() as Millis).max(1);
    [t / 8, t / 4, t / 2, t, 2 * t]
        .into_iter()
        .map(|x| x.max(1))
        .collect()
}

pub fn scenario_for(params: &SweepParams, t_gen_ms: Millis) -> Scenario {
    let mut s = Scenario::simple(
        t_gen_ms,
        params.duration_ms,
        params.rate_bits_per_s,
        vec![AgentEntry::new(
            AgentPolicy::HonestUniform,
            params.honest_agents,
        )],
    );
    s.name = format!("sweep t_gen={t_gen_ms}ms");
    s.sim.seed = params.seed;
    s
}

/// Runs every sweep point in parallel. Each run owns its own chain and RNG,
/// seeded from `params.seed` and its position in the sweep.
pub fn run_sweep(params: &SweepParams) -> Result<SweepOutput, SimError> {
    let points = sweep_points(params.t_gen_base_ms, params.speed);
    let runs: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            sim::run(&scenario_for(params, t), params.seed.wrapping_add(i as u64)).map(|o| (t, o))
        })
        .collect::<Result<_, _>>()?;

    let seconds = params.duration_ms as f64 / 1000.0;
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    let mut audits = Vec::new();
    for (t, out) in runs {
        let a = &out.audit;
        rows.push(SweepRow {
            t_gen_ms: t,
            requests: a.requests_broadcast,
            opened: a.requests_opened,
            rejected: a.requests_rejected,
            success: a.settlements.success,
            penalty: a.settlements.penalty,
            failure: a.settlements.failure,
            unsettled: a.requests_unsettled,
            mean_processing_ms: a.mean_processing_ms,
            mean_processing_blocks: a.mean_processing_ms.map(|m| m / t as f64),
            throughput_bits_per_s: if seconds > 0.0 {
                a.bits_delivered as f64 / seconds
            } else {
                0.0
            },
        });
        trace.extend(out.metrics.iter().map(|m| SweepTraceRow {
            t_gen_ms: t,
            request_id: m.request_id,
            created_ms: m.created_ms,
            settled_ms: m.settled_ms,
            processing_ms: m.processing_ms,
            settlement: m.settlement,
        }));
        let mut summary = out.audit;
        summary.requests.clear();
        audits.push(summary);
    }
    Ok(SweepOutput {
        rows,
        trace,
        audit: SweepAudit {
            rate_bits_per_s: params.rate_bits_per_s,
            duration_ms: params.duration_ms,
            seed: params.seed,
            supply_conserved: audits.iter().all(|a| a.supply_conserved),
            runs: audits,
        },
    })
}
