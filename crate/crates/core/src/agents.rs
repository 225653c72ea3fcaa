//! Participant behaviours and the tournament used to measure incentives.
//!
//! Agents only ever see an [`Observation`]: the public contract state
//! (commitments, revealed bits, windows), the ids of requests opened in the
//! latest block and the number of registrations still waiting in the
//! mempool. Unrevealed bits exist only inside the agent that chose them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainsim::{apply_tx, Receipt, Tx, TxEffect};
use crate::commitment::{commit, Commitment, CommitmentInput, Nonce};
use crate::protocol::{
    AccountId, Config, Millis, Money, OutputKind, ProtocolError, Rbgc, RequestId,
};
use crate::stats::Running;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("a tournament needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("a sybil coalition needs at least one member")]
    EmptyCoalition,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("ledger supply changed from {before} to {after}")]
    SupplyChanged { before: u128, after: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum AgentPolicy {
    /// Fresh uniform bit per request, reveals as soon as the window opens.
    HonestUniform,
    ConstantBit {
        bit: bool,
    },
    /// Registers and never reveals.
    NonRevealer,
    /// Waits until every other registrant has revealed, then reveals only if
    /// the resulting output equals `preferred`.
    LastMover {
        preferred: bool,
    },
    /// One economic actor holding several registrations with a fixed joint
    /// pure profile; payoffs pool in a single account.
    SybilCoalition {
        bits: Vec<bool>,
    },
}

impl AgentPolicy {
    pub fn identities(&self) -> usize {
        match self {
            AgentPolicy::SybilCoalition { bits } => bits.len(),
            _ => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            AgentPolicy::HonestUniform => "honest_uniform".into(),
            AgentPolicy::ConstantBit { bit } => format!("constant_bit_{}", u8::from(*bit)),
            AgentPolicy::NonRevealer => "non_revealer".into(),
            AgentPolicy::LastMover { preferred } => {
                format!("last_mover_{}", u8::from(*preferred))
            }
            AgentPolicy::SybilCoalition { bits } => {
                let joint: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                format!("sybil_{}_{joint}", bits.len())
            }
        }
    }
}

/// Public, on-chain information available to an agent at time `now`.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub now: Millis,
    pub engine: &'a Rbgc,
    /// Requests opened in the block just observed.
    pub new_requests: &'a [RequestId],
    /// Registrations broadcast but not yet mined, per request.
    pub pending_registrations: &'a BTreeMap<RequestId, u64>,
}

impl Observation<'_> {
    fn pending(&self, id: RequestId) -> u64 {
        self.pending_registrations.get(&id).copied().unwrap_or(0)
    }
}

/// A transaction to broadcast, immediately or once the clock reaches `at`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub at: Option<Millis>,
    pub tx: Tx,
}

impl Action {
    fn now(tx: Tx) -> Self {
        Self { at: None, tx }
    }

    fn at(at: Millis, tx: Tx) -> Self {
        Self { at: Some(at), tx }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Broadcast,
    Registered,
    RevealSent,
    Done,
}

#[derive(Debug, Clone)]
struct Ticket {
    bit: bool,
    nonce: Nonce,
    predicted: u64,
    commitment: Commitment,
    number: Option<u64>,
    stage: Stage,
}

#[derive(Debug, Clone)]
pub struct Agent {
    id: AgentId,
    account: AccountId,
    policy: AgentPolicy,
    rng: ChaCha8Rng,
    tickets: BTreeMap<RequestId, Vec<Ticket>>,
}

impl Agent {
    pub fn new(
        id: AgentId,
        account: AccountId,
        policy: AgentPolicy,
        seed: u64,
    ) -> Result<Self, AgentError> {
        if policy.identities() == 0 {
            return Err(AgentError::EmptyCoalition);
        }
        Ok(Self {
            id,
            account,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            tickets: BTreeMap::new(),
        })
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn account(&self) -> AccountId {
        self.account
    }

    pub fn policy(&self) -> &AgentPolicy {
        &self.policy
    }

    /// Number of requests this agent still has unfinished business in.
    pub fn open_requests(&self) -> usize {
        self.tickets.len()
    }

    fn choose_bit(&mut self, identity: usize) -> bool {
        match &self.policy {
            AgentPolicy::ConstantBit { bit } => *bit,
            AgentPolicy::SybilCoalition { bits } => bits[identity],
            AgentPolicy::HonestUniform
            | AgentPolicy::NonRevealer
            | AgentPolicy::LastMover { .. } => self.rng.gen(),
        }
    }

    /// Reacts to the latest chain state.
    pub fn act(&mut self, obs: &Observation<'_>) -> Vec<Action> {
        let mut actions = Vec::new();
        for &id in obs.new_requests {
            self.join(obs, id, &mut actions);
        }

        let policy = self.policy.clone();
        let account = self.account;
        self.tickets.retain(|&id, tickets| {
            let Some(request) = obs.engine.request(id) else {
                return false;
            };
            let own: Vec<u64> = tickets.iter().filter_map(|t| t.number).collect();
            for ticket in tickets.iter_mut() {
                advance(
                    &policy,
                    account,
                    obs.now,
                    request,
                    &own,
                    id,
                    ticket,
                    &mut actions,
                );
            }
            tickets.iter().any(|t| t.stage != Stage::Done)
        });
        actions
    }

    fn join(&mut self, obs: &Observation<'_>, id: RequestId, actions: &mut Vec<Action>) {
        let Some(request) = obs.engine.request(id) else {
            return;
        };
        if !request.registration_open(obs.now) || self.tickets.contains_key(&id) {
            return;
        }
        let base = request.registrants.len() as u64 + obs.pending(id);
        let deposit = request.value_bound;
        let mut tickets = Vec::with_capacity(self.policy.identities());
        for k in 0..self.policy.identities() {
            let bit = self.choose_bit(k);
            let nonce: Nonce = self.rng.gen();
            let predicted = base + k as u64 + 1;
            let commitment = commit(&CommitmentInput {
                bit,
                nonce,
                participant: predicted,
                request_id: id.0,
            });
            actions.push(Action::now(Tx::Register {
                request: id,
                account: self.account,
                deposit,
                commitment,
            }));
            tickets.push(Ticket {
                bit,
                nonce,
                predicted,
                commitment,
                number: None,
                stage: Stage::Broadcast,
            });
        }
        self.tickets.insert(id, tickets);
    }
}

#[allow(clippy::too_many_arguments)]
fn advance(
    policy: &AgentPolicy,
    account: AccountId,
    now: Millis,
    request: &crate::protocol::Request,
    own: &[u64],
    id: RequestId,
    ticket: &mut Ticket,
    actions: &mut Vec<Action>,
) {
    if ticket.stage == Stage::Broadcast {
        let found = request
            .registrants
            .iter()
            .find(|r| r.account == account && r.commitment == ticket.commitment)
            .map(|r| r.number);
        match found {
            // A different number than predicted means the commitment can
            // never be opened; the deposit is lost.
            Some(n) if n != ticket.predicted => ticket.stage = Stage::Done,
            Some(n) => {
                ticket.number = Some(n);
                ticket.stage = Stage::Registered;
            }
            None if now > request.registration_closes => ticket.stage = Stage::Done,
            None => return,
        }
    }
    let Some(number) = ticket.number else {
        return;
    };
    let reveal = Tx::Reveal {
        request: id,
        participant: number,
        bit: ticket.bit,
        nonce: ticket.nonce,
    };

    if ticket.stage == Stage::Registered {
        if now > request.deadline {
            ticket.stage = Stage::Done;
            return;
        }
        match policy {
            AgentPolicy::NonRevealer => ticket.stage = Stage::Done,
            AgentPolicy::LastMover { preferred } => {
                if !request.reveal_open(now) {
                    return;
                }
                let others: Vec<_> = request
                    .registrants
                    .iter()
                    .filter(|r| !own.contains(&r.number))
                    .collect();
                if others.iter().any(|r| r.revealed_bit().is_none()) {
                    return;
                }
                let xor = others
                    .iter()
                    .filter_map(|r| r.revealed_bit())
                    .fold(ticket.bit, |acc, b| acc ^ b);
                if xor == *preferred {
                    actions.push(Action::now(reveal));
                    ticket.stage = Stage::RevealSent;
                } else {
                    ticket.stage = Stage::Done;
                }
            }
            _ => {
                actions.push(Action::at(request.registration_closes + 1, reveal));
                ticket.stage = Stage::RevealSent;
            }
        }
    }

    if ticket.stage == Stage::RevealSent {
        let revealed = request
            .registrant(number)
            .and_then(|r| r.revealed_bit())
            .is_some();
        if revealed {
            let after = request.deadline + 1;
            actions.push(Action::at(
                after,
                Tx::ReturnDeposit {
                    request: id,
                    participant: number,
                },
            ));
            actions.push(Action::at(
                after,
                Tx::RequestReward {
                    request: id,
                    participant: number,
                },
            ));
            ticket.stage = Stage::Done;
        } else if now > request.deadline {
            ticket.stage = Stage::Done;
        }
    }
}

/// Everything that happened while driving requests to completion.
#[derive(Debug, Clone, Default)]
pub struct RoundLog {
    pub receipts: Vec<(Millis, Receipt)>,
    pub opened: Vec<RequestId>,
    pub outputs: BTreeMap<RequestId, OutputKind>,
}

/// Runs the contract with every transaction applied the moment it is
/// broadcast: an idealised chain with no block delay and no censorship.
///
/// `opening` is applied at `start` on behalf of `client`, which then claims
/// the output of every request it opened right after the deadline. Agents
/// act in the given `order` and see each other's transactions immediately.
pub fn run_instant(
    engine: &mut Rbgc,
    agents: &mut [Agent],
    order: &[usize],
    client: AccountId,
    opening: Vec<Tx>,
    start: Millis,
) -> RoundLog {
    const MAX_PASSES: usize = 16;
    let mut log = RoundLog::default();
    let mut queue: BTreeMap<(Millis, u64), Tx> = BTreeMap::new();
    let mut sequence = 0u64;
    let no_pending = BTreeMap::new();

    let mut now = start;
    let mut new_requests = Vec::new();
    let mut due: Vec<Tx> = opening;
    loop {
        for tx in due.drain(..) {
            apply_logged(
                engine,
                tx,
                now,
                client,
                &mut log,
                &mut new_requests,
                &mut queue,
                &mut sequence,
            );
        }
        for pass in 0..MAX_PASSES {
            let mut acted = false;
            for &slot in order {
                let obs = Observation {
                    now,
                    engine,
                    new_requests: if pass == 0 { &new_requests } else { &[] },
                    pending_registrations: &no_pending,
                };
                let actions = agents[slot].act(&obs);
                for action in actions {
                    match action.at {
                        Some(at) if at > now => {
                            queue.insert((at, sequence), action.tx);
                            sequence += 1;
                        }
                        _ => {
                            acted = true;
                            let mut ignored = Vec::new();
                            apply_logged(
                                engine,
                                action.tx,
                                now,
                                client,
                                &mut log,
                                &mut ignored,
                                &mut queue,
                                &mut sequence,
                            );
                        }
                    }
                }
            }
            if !acted {
                break;
            }
        }
        new_requests.clear();

        let Some(((next, _), tx)) = queue.pop_first() else {
            break;
        };
        now = next;
        due.push(tx);
        while let Some(entry) = queue.first_entry() {
            if entry.key().0 != now {
                break;
            }
            due.push(entry.remove());
        }
    }
    log
}

#[allow(clippy::too_many_arguments)]
fn apply_logged(
    engine: &mut Rbgc,
    tx: Tx,
    now: Millis,
    client: AccountId,
    log: &mut RoundLog,
    new_requests: &mut Vec<RequestId>,
    queue: &mut BTreeMap<(Millis, u64), Tx>,
    sequence: &mut u64,
) {
    let result = apply_tx(engine, &tx, now);
    match &result {
        Ok(TxEffect::Opened { requests }) => {
            for &id in requests {
                new_requests.push(id);
                log.opened.push(id);
                let deadline = engine.request(id).expect("just opened").deadline;
                queue.insert(
                    (deadline + 1, *sequence),
                    Tx::GetOutput {
                        request: id,
                        caller: client,
                    },
                );
                *sequence += 1;
            }
        }
        Ok(TxEffect::Output { output }) => {
            if let Tx::GetOutput { request, .. } = tx {
                log.outputs.insert(request, *output);
            }
        }
        _ => {}
    }
    log.receipts.push((
        now,
        Receipt {
            tx,
            submitted_at: now,
            result,
        },
    ));
}

/// Net ledger change of one agent over one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub agent: AgentId,
    pub request: RequestId,
    pub net_payoff: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub request: RequestId,
    pub output: Option<OutputKind>,
    pub payoffs: Vec<AgentOutcome>,
    pub client_payoff: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundParams {
    pub fee: Money,
    pub value_bound: Money,
    pub t_gen: Millis,
}

pub const TOURNAMENT_CLIENT: AccountId = AccountId(0);

/// Account used by the agent at position `slot`.
pub fn agent_account(slot: usize) -> AccountId {
    AccountId(slot as u64 + 1)
}

/// Plays one request from opening to full settlement on a fresh contract.
/// Registration order follows `order`.
pub fn play_round(
    agents: &mut [Agent],
    order: &[usize],
    params: &RoundParams,
) -> Result<RoundOutcome, AgentError> {
    let config = Config::from_block_time(params.t_gen)?;
    let mut engine = Rbgc::new(config);
    engine.mint(TOURNAMENT_CLIENT, params.fee);
    for agent in agents.iter() {
        engine.mint(
            agent.account(),
            params.value_bound * agent.policy().identities() as Money,
        );
    }
    let before: Vec<Money> = agents
        .iter()
        .map(|a| engine.ledger().balance(a.account()))
        .collect();
    let client_before = engine.ledger().balance(TOURNAMENT_CLIENT);
    let supply = engine.ledger().total_supply();

    let opening = vec![Tx::RequestBit {
        client: TOURNAMENT_CLIENT,
        fee: params.fee,
        deadline: config.t_min,
        value_bound: params.value_bound,
    }];
    let log = run_instant(&mut engine, agents, order, TOURNAMENT_CLIENT, opening, 0);
    if let Some((_, receipt)) = log.receipts.first() {
        if let Err(e) = &receipt.result {
            return Err(e.clone().into());
        }
    }
    let after = engine.ledger().total_supply();
    if after != supply {
        return Err(AgentError::SupplyChanged {
            before: supply,
            after,
        });
    }
    let request = log.opened[0];
    let payoffs = agents
        .iter()
        .zip(&before)
        .map(|(a, &b)| AgentOutcome {
            agent: a.id(),
            request,
            net_payoff: engine.ledger().balance(a.account()) as i64 - b as i64,
        })
        .collect();
    Ok(RoundOutcome {
        request,
        output: log.outputs.get(&request).copied(),
        payoffs,
        client_payoff: engine.ledger().balance(TOURNAMENT_CLIENT) as i64 - client_before as i64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentRow {
    pub agent: AgentId,
    pub policy: String,
    pub rounds: u64,
    pub mean_payoff: f64,
    pub std_error: f64,
    pub total_payoff: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementTally {
    pub success: u64,
    pub penalty: u64,
    pub failure: u64,
}

impl SettlementTally {
    pub fn record(&mut self, output: &OutputKind) {
        match output {
            OutputKind::Success { .. } => self.success += 1,
            OutputKind::Penalty { .. } => self.penalty += 1,
            OutputKind::Failure { .. } => self.failure += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.success + self.penalty + self.failure
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub rows: Vec<TournamentRow>,
    pub settlements: SettlementTally,
    /// Rounds whose output bit was 1.
    pub ones: u64,
    /// Rounds that produced an output bit.
    pub outputs: u64,
    pub client_mean_payoff: f64,
}

/// Plays `rounds` independent requests with every policy participating in
/// each, shuffling registration order every round, and reports per-agent
/// Monte Carlo mean payoffs.
pub fn tournament(
    policies: &[AgentPolicy],
    params: &RoundParams,
    rounds: u64,
    seed: u64,
) -> Result<TournamentReport, AgentError> {
    if policies.len() < 2 {
        return Err(AgentError::TooFewAgents(policies.len()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut agents = policies
        .iter()
        .enumerate()
        .map(|(slot, p)| {
            Agent::new(
                AgentId(slot as u32),
                agent_account(slot),
                p.clone(),
                master.gen(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut stats = vec![Running::default(); agents.len()];
    let mut totals = vec![0i64; agents.len()];
    let mut client = Running::default();
    let mut settlements = SettlementTally::default();
    let (mut ones, mut outputs) = (0u64, 0u64);
    let mut order: Vec<usize> = (0..agents.len()).collect();

    for _ in 0..rounds {
        order.shuffle(&mut master);
        let round = play_round(&mut agents, &order, params)?;
        for (slot, outcome) in round.payoffs.iter().enumerate() {
            stats[slot].push(outcome.net_payoff as f64);
            totals[slot] += outcome.net_payoff;
        }
        client.push(round.client_payoff as f64);
        if let Some(output) = round.output {
            settlements.record(&output);
            if let Some(bit) = output.bit() {
                outputs += 1;
                ones += u64::from(bit);
            }
        }
    }

    let rows = agents
        .iter()
        .zip(stats.iter().zip(&totals))
        .map(|(a, (s, &total))| TournamentRow {
            agent: a.id(),
            policy: a.policy().label(),
            rounds,
            mean_payoff: s.mean(),
            std_error: s.std_error(),
            total_payoff: total,
        })
        .collect();
    Ok(TournamentReport {
        rows,
        settlements,
        ones,
        outputs,
        client_mean_payoff: client.mean(),
    })
}
