//! Drives a scenario on the simulated chain and audits the result.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbgc_core::agents::{Agent, AgentId, Observation, SettlementTally};
use rbgc_core::chainsim::{Block, Chain, ChainError, SimParams, Tx, TxEffect};
use rbgc_core::protocol::{AccountId, Millis, Money, OutputKind, RequestId, Settlement};
use serde::Serialize;
use thiserror::Error;

use crate::scenario::{Scenario, ScenarioError};

/// The account every scenario's requests are paid from.
pub const CLIENT: AccountId = AccountId(0);

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("chain setup failed: {0}")]
    Chain(#[from] ChainError),
    #[error("balance overflow while funding accounts")]
    Funding,
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub request_id: u64,
    pub created_ms: Millis,
    pub deadline_ms: Millis,
    pub settled_ms: Option<Millis>,
    pub processing_ms: Option<Millis>,
    pub settlement: &'static str,
    pub bit: Option<u8>,
    pub registrants: u64,
    pub revealed: u64,
    pub compensation: Money,
    pub refund: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestAudit {
    pub id: RequestId,
    pub fee: Money,
    pub value_bound: Money,
    pub created_at: Millis,
    pub deadline: Millis,
    pub registrants: u64,
    pub revealed: u64,
    pub escrow_left: Money,
    pub settlement: Option<Settlement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub scenario: String,
    pub seed: u64,
    pub t_gen_ms: Millis,
    pub blocks: u64,
    pub end_ms: Millis,
    pub supply_before: u128,
    pub supply_after: u128,
    pub supply_conserved: bool,
    pub requests_broadcast: u64,
    pub requests_opened: u64,
    pub requests_rejected: u64,
    pub requests_unsettled: u64,
    pub settlements: SettlementTally,
    pub bits_delivered: u64,
    pub dust_total: Money,
    pub compensation_total: Money,
    pub refund_total: Money,
    pub confiscated_total: Money,
    pub escrow_left_total: Money,
    pub mean_processing_ms: Option<f64>,
    pub requests: Vec<RequestAudit>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.supply_conserved
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub blocks: Vec<Block>,
    pub metrics: Vec<MetricsRow>,
    pub audit: Audit,
}

/// Runs `scenario` with `seed`. Requests are broadcast on schedule during
/// `[0, duration)`, after which blocks keep coming until everything has
/// settled or a generous time cap is reached.
pub fn run(scenario: &Scenario, seed: u64) -> Result<SimOutput, SimError> {
    scenario.validate()?;
    let config = scenario
        .config()
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let req = &scenario.requests;
    let arrivals = scenario.arrivals();
    let n_requests = arrivals.len() as u64;
    let mut master = ChaCha8Rng::seed_from_u64(seed);

    let mut engine = rbgc_core::Rbgc::new(config);
    let client_balance = match req.client_balance {
        Some(b) => b,
        None => req.fee.checked_mul(n_requests).ok_or(SimError::Funding)?,
    };
    engine.mint(CLIENT, client_balance);

    let deposits_needed = n_requests
        .checked_mul(req.bits_per_request as u64)
        .and_then(|n| n.checked_mul(req.value_bound))
        .ok_or(SimError::Funding)?;
    let mut agents = Vec::new();
    for entry in &scenario.agents {
        for _ in 0..entry.count {
            let slot = agents.len();
            let account = AccountId(slot as u64 + 1);
            let balance = match entry.balance {
                Some(b) => b,
                None => deposits_needed
                    .checked_mul(entry.policy.identities() as u64)
                    .ok_or(SimError::Funding)?,
            };
            engine.mint(account, balance);
            let agent = Agent::new(
                AgentId(slot as u32),
                account,
                entry.policy.clone(),
                master.gen(),
            )
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            agents.push(agent);
        }
    }
    let supply_before = engine.ledger().total_supply();

    let params = SimParams {
        t_gen: scenario.sim.t_gen_ms,
        seed: master.gen(),
        duration: scenario.sim.duration_ms,
    };
    let mut chain = Chain::new(params, scenario.miner_specs()?, engine)?;
    let offset = scenario.deadline_offset();
    for &at in &arrivals {
        let tx = if req.bits_per_request == 1 {
            Tx::RequestBit {
                client: CLIENT,
                fee: req.fee,
                deadline: at + offset,
                value_bound: req.value_bound,
            }
        } else {
            Tx::RequestWord {
                client: CLIENT,
                bits: req.bits_per_request,
                fee: req.fee,
                deadline: at + offset,
                value_bound: req.value_bound,
            }
        };
        chain.submit_at(at, tx);
    }

    let cap = scenario.sim.duration_ms + 2 * offset + 100 * scenario.sim.t_gen_ms;
    let mut opened: Vec<RequestId> = Vec::new();
    let mut order: Vec<usize> = (0..agents.len()).collect();
    loop {
        let finished = chain.now() >= scenario.sim.duration_ms
            && chain.scheduled_len() == 0
            && chain.mempool_len() == 0
            && agents.iter().all(|a| a.open_requests() == 0)
            && opened.iter().all(|&id| {
                chain
                    .engine()
                    .request(id)
                    .is_some_and(|r| r.settlement.is_some())
            });
        if finished || chain.now() > cap {
            break;
        }
        let block = chain.next_block();
        let new_requests: Vec<RequestId> = block
            .transactions
            .iter()
            .filter_map(|r| match &r.result {
                Ok(TxEffect::Opened { requests }) => Some(requests.clone()),
                _ => None,
            })
            .flatten()
            .collect();
        for &id in &new_requests {
            let deadline = chain.engine().request(id).expect("just opened").deadline;
            chain.submit_at(
                deadline + 1,
                Tx::GetOutput {
                    request: id,
                    caller: CLIENT,
                },
            );
        }
        opened.extend_from_slice(&new_requests);

        order.shuffle(&mut master);
        for &slot in &order {
            let actions = {
                let obs = Observation {
                    now: chain.now(),
                    engine: chain.engine(),
                    new_requests: &new_requests,
                    pending_registrations: chain.pending_registration_map(),
                };
                agents[slot].act(&obs)
            };
            for action in actions {
                match action.at {
                    Some(at) => chain.submit_at(at, action.tx),
                    None => chain.submit_tx(action.tx),
                }
            }
        }
    }

    let requests_broadcast = chain
        .blocks()
        .iter()
        .flat_map(|b| &b.transactions)
        .filter(|r| matches!(r.tx, Tx::RequestBit { .. } | Tx::RequestWord { .. }))
        .count() as u64;
    let requests_rejected = chain
        .blocks()
        .iter()
        .flat_map(|b| &b.transactions)
        .filter(|r| {
            matches!(r.tx, Tx::RequestBit { .. } | Tx::RequestWord { .. }) && r.result.is_err()
        })
        .count() as u64;

    let engine = chain.engine();
    let mut metrics = Vec::with_capacity(opened.len());
    let mut requests = Vec::with_capacity(opened.len());
    let mut tally = SettlementTally::default();
    let (mut dust, mut compensation, mut refund, mut confiscated) = (0, 0, 0, 0);
    let (mut bits_delivered, mut unsettled) = (0, 0);
    let (mut latency_sum, mut latency_n) = (0u128, 0u64);
    for r in engine.requests() {
        let revealed = r
            .registrants
            .iter()
            .filter(|x| x.revealed_bit().is_some())
            .count() as u64;
        let escrow_left = engine.ledger().escrow(r.id);
        let mut row = MetricsRow {
            request_id: r.id.0,
            created_ms: r.created_at,
            deadline_ms: r.deadline,
            settled_ms: None,
            processing_ms: None,
            settlement: "unsettled",
            bit: None,
            registrants: r.registrants.len() as u64,
            revealed,
            compensation: 0,
            refund: 0,
        };
        match r.settlement {
            Some(s) => {
                tally.record(&s.output);
                dust += s.dust;
                confiscated += s.confiscated;
                let took = s.settled_at - r.created_at;
                latency_sum += u128::from(took);
                latency_n += 1;
                row.settled_ms = Some(s.settled_at);
                row.processing_ms = Some(took);
                row.settlement = s.output.label();
                row.bit = s.output.bit().map(u8::from);
                if s.output.bit().is_some() {
                    bits_delivered += 1;
                }
                match s.output {
                    OutputKind::Penalty {
                        compensation: c, ..
                    } => {
                        compensation += c;
                        row.compensation = c;
                    }
                    OutputKind::Failure { refund: f } => {
                        refund += f;
                        row.refund = f;
                    }
                    OutputKind::Success { .. } => {}
                }
            }
            None => unsettled += 1,
        }
        metrics.push(row);
        requests.push(RequestAudit {
            id: r.id,
            fee: r.fee,
            value_bound: r.value_bound,
            created_at: r.created_at,
            deadline: r.deadline,
            registrants: r.registrants.len() as u64,
            revealed,
            escrow_left,
            settlement: r.settlement,
        });
    }
    let supply_after = engine.ledger().total_supply();
    let audit = Audit {
        scenario: scenario.name.clone(),
        seed,
        t_gen_ms: scenario.sim.t_gen_ms,
        blocks: chain.blocks().len() as u64,
        end_ms: chain.now(),
        supply_before,
        supply_after,
        supply_conserved: supply_before == supply_after,
        requests_broadcast,
        requests_opened: requests.len() as u64,
        requests_rejected,
        requests_unsettled: unsettled,
        settlements: tally,
        bits_delivered,
        dust_total: dust,
        compensation_total: compensation,
        refund_total: refund,
        confiscated_total: confiscated,
        escrow_left_total: requests.iter().map(|r| r.escrow_left).sum(),
        mean_processing_ms: (latency_n > 0).then(|| latency_sum as f64 / latency_n as f64),
        requests,
    };
    Ok(SimOutput {
        blocks: chain.blocks().to_vec(),
        metrics,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AgentEntry;
    use rbgc_core::agents::AgentPolicy;

    fn scenario(agents: Vec<AgentEntry>) -> Scenario {
        Scenario::simple(100, 3_000, 2.0, agents)
    }

    #[test]
    fn honest_agents_settle_and_claim_everything() {
        let out = run(
            &scenario(vec![AgentEntry::new(AgentPolicy::HonestUniform, 3)]),
            1,
        )
        .unwrap();
        let a = &out.audit;
        assert!(a.passed());
        assert_eq!(a.requests_broadcast, 6);
        assert_eq!(a.requests_opened + a.requests_rejected, 6);
        assert_eq!(a.requests_unsettled, 0);
        assert_eq!(a.escrow_left_total, 0);
        for row in &out.metrics {
            assert!(row.processing_ms.unwrap() >= 1_000);
        }
    }

    #[test]
    fn no_agents_means_refunds() {
        let out = run(&scenario(vec![]), 2).unwrap();
        assert_eq!(out.audit.settlements.failure, out.audit.requests_opened);
        assert_eq!(out.audit.refund_total, 1_600 * out.audit.requests_opened);
    }

    #[test]
    fn same_seed_same_output() {
        let s = scenario(vec![
            AgentEntry::new(AgentPolicy::HonestUniform, 2),
            AgentEntry::new(AgentPolicy::LastMover { preferred: true }, 1),
        ]);
        let a = run(&s, 5).unwrap();
        let b = run(&s, 5).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.audit, b.audit);
        assert_eq!(a.blocks, b.blocks);
    }
}
