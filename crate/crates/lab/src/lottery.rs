//! A small lottery contract that buys its randomness from the bit
//! generator. Players pay a ticket price into a pot; once the draw is in,
//! the whole pot goes to the winner.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbgc_core::agents::{agent_account, run_instant, Agent, AgentId, AgentPolicy, RoundLog};
use rbgc_core::chainsim::Tx;
use rbgc_core::protocol::{AccountId, Config, Millis, Money, OutputKind, Rbgc, RequestId};
use serde::Serialize;
use thiserror::Error;

/// Account the lottery contract uses as a client of the bit generator.
pub const LOTTERY_CLIENT: AccountId = AccountId(0);

#[derive(Debug, Error)]
pub enum LotteryError {
    #[error("a lottery needs at least one participant")]
    NoParticipants,
    #[error("pot size overflows")]
    PotOverflow,
    #[error("randomness request rejected: {0}")]
    Rejected(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LotteryParams {
    pub participants: u64,
    pub price: Money,
    pub seed: u64,
    /// Fee offered for the whole random word.
    pub fee: Money,
    pub value_bound: Money,
    /// Honest participants of the bit generator, distinct from the players.
    pub generator_agents: usize,
    pub t_gen: Millis,
}

impl LotteryParams {
    pub fn new(participants: u64, price: Money, seed: u64) -> Self {
        Self {
            participants,
            price,
            seed,
            fee: 1_600,
            value_bound: 500,
            generator_agents: 3,
            t_gen: 1_000,
        }
    }
}

/// One line of the lottery's `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TicketRow {
    pub participant: u64,
    pub paid: Money,
    pub payout: Money,
    pub win_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LotteryAudit {
    pub participants: u64,
    pub price: Money,
    pub pot: Money,
    pub bits: u32,
    pub outputs: Vec<Option<OutputKind>>,
    /// The drawn word, least significant bit first in request order.
    pub draw: Option<u64>,
    pub winner: Option<u64>,
    pub refunded: bool,
    /// Largest minus smallest win probability under `draw mod k`.
    pub mapping_bias: f64,
    pub pot_conserved: bool,
    pub generator_supply_conserved: bool,
}

#[derive(Debug, Clone)]
pub struct LotteryResult {
    pub tickets: Vec<TicketRow>,
    pub log: RoundLog,
    pub audit: LotteryAudit,
}

/// Smallest `m` with `2^m >= k`.
pub fn bits_needed(k: u64) -> u32 {
    if k <= 1 {
        0
    } else {
        64 - (k - 1).leading_zeros()
    }
}

/// Exact probability that each participant wins when a uniform `m`-bit
/// value is reduced modulo `k`.
pub fn win_probabilities(k: u64) -> Vec<f64> {
    let m = bits_needed(k);
    let space = 1u128 << m;
    (0..k as u128)
        .map(|i| {
            let hits = space / k as u128 + u128::from(i < space % k as u128);
            hits as f64 / space as f64
        })
        .collect()
}

pub fn winner_for(draw: u64, k: u64) -> u64 {
    draw % k + 1
}

pub fn run(params: &LotteryParams) -> Result<LotteryResult, LotteryError> {
    let k = params.participants;
    if k == 0 {
        return Err(LotteryError::NoParticipants);
    }
    let pot = k
        .checked_mul(params.price)
        .ok_or(LotteryError::PotOverflow)?;
    let mut wallets: BTreeMap<u64, Money> = (1..=k).map(|p| (p, params.price)).collect();
    let book_before: u128 = wallets.values().map(|&v| u128::from(v)).sum();
    for w in wallets.values_mut() {
        *w -= params.price;
    }
    let m = bits_needed(k);
    let probabilities = win_probabilities(k);
    let bias = probabilities.iter().cloned().fold(f64::MIN, f64::max)
        - probabilities.iter().cloned().fold(f64::MAX, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let config = Config::from_block_time(params.t_gen).expect("positive block time");
    let mut engine = Rbgc::new(config);
    engine.mint(LOTTERY_CLIENT, params.fee);
    let mut agents: Vec<Agent> = (0..params.generator_agents)
        .map(|slot| {
            let account = agent_account(slot);
            engine.mint(account, params.value_bound * Money::from(m.max(1)));
            Agent::new(
                AgentId(slot as u32),
                account,
                AgentPolicy::HonestUniform,
                rng.gen(),
            )
            .expect("honest agents have one identity")
        })
        .collect();
    let supply_before = engine.ledger().total_supply();

    let (log, outputs, draw) = if m == 0 {
        (RoundLog::default(), Vec::new(), Some(0))
    } else {
        let opening = vec![Tx::RequestWord {
            client: LOTTERY_CLIENT,
            bits: m as usize,
            fee: params.fee,
            deadline: config.t_min,
            value_bound: params.value_bound,
        }];
        let order: Vec<usize> = (0..agents.len()).collect();
        let log = run_instant(&mut engine, &mut agents, &order, LOTTERY_CLIENT, opening, 0);
        if let Some((_, r)) = log.receipts.first() {
            if let Err(e) = &r.result {
                return Err(LotteryError::Rejected(e.to_string()));
            }
        }
        let ids: Vec<RequestId> = log.opened.clone();
        let outputs: Vec<Option<OutputKind>> =
            ids.iter().map(|id| log.outputs.get(id).copied()).collect();
        let draw = outputs.iter().enumerate().try_fold(0u64, |acc, (i, o)| {
            o.and_then(|o| o.bit()).map(|b| acc | (u64::from(b) << i))
        });
        (log, outputs, draw)
    };

    let winner = draw.map(|d| winner_for(d, k));
    match winner {
        Some(w) => *wallets.get_mut(&w).expect("winner is a participant") += pot,
        None => wallets.values_mut().for_each(|v| *v += params.price),
    }
    let book_after: u128 = wallets.values().map(|&v| u128::from(v)).sum();

    let tickets = (1..=k)
        .map(|p| TicketRow {
            participant: p,
            paid: params.price,
            payout: wallets[&p],
            win_probability: probabilities[(p - 1) as usize],
        })
        .collect();
    Ok(LotteryResult {
        tickets,
        audit: LotteryAudit {
            participants: k,
            price: params.price,
            pot,
            bits: m,
            outputs,
            draw,
            winner,
            refunded: winner.is_none(),
            mapping_bias: bias,
            pot_conserved: book_before == book_after,
            generator_supply_conserved: engine.ledger().total_supply() == supply_before,
        },
        log,
    })
}
