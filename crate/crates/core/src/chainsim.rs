//! Discrete-event proof-of-work chain carrying contract transactions.
//!
//! One canonical chain, no forks. Inter-block delays are exponential with
//! mean `t_gen` and each block's miner is drawn independently in proportion
//! to hash power. A block includes every released mempool transaction its
//! miner does not censor, in FIFO order, and applies them to the contract
//! engine at the block timestamp. Block capacity is unbounded.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commitment::{commit, Commitment, CommitmentInput, Nonce};
use crate::protocol::{
    AccountId, Config, Millis, Money, OutputKind, ProtocolError, Rbgc, RequestId,
};
use crate::stats::binomial_sigma;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("at least one miner is required")]
    NoMiners,
    #[error("miner {0} hash power must lie in (0, 1]")]
    HashPowerOutOfRange(MinerId),
    #[error("hash powers sum to {0}, expected 1")]
    HashPowerSum(Ratio<u64>),
    #[error("hash power denominators are too large")]
    HashPowerOverflow,
    #[error("mean block interval must be positive")]
    ZeroBlockTime,
    #[error("adversary hash power must lie strictly between 0 and 1")]
    AdversaryPowerOutOfRange,
    #[error("reveal window must span at least one block")]
    EmptyWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinerId(pub u32);

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A contract call waiting for, or included in, a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Tx {
    RequestBit {
        client: AccountId,
        fee: Money,
        deadline: Millis,
        value_bound: Money,
    },
    RequestWord {
        client: AccountId,
        bits: usize,
        fee: Money,
        deadline: Millis,
        value_bound: Money,
    },
    Register {
        request: RequestId,
        account: AccountId,
        deposit: Money,
        commitment: Commitment,
    },
    Reveal {
        request: RequestId,
        participant: u64,
        bit: bool,
        nonce: Nonce,
    },
    ReturnDeposit {
        request: RequestId,
        participant: u64,
    },
    RequestReward {
        request: RequestId,
        participant: u64,
    },
    GetOutput {
        request: RequestId,
        caller: AccountId,
    },
}

impl Tx {
    pub fn kind(&self) -> &'static str {
        match self {
            Tx::RequestBit { .. } => "request_bit",
            Tx::RequestWord { .. } => "request_word",
            Tx::Register { .. } => "register",
            Tx::Reveal { .. } => "reveal",
            Tx::ReturnDeposit { .. } => "return_deposit",
            Tx::RequestReward { .. } => "request_reward",
            Tx::GetOutput { .. } => "get_output",
        }
    }

    /// The request this transaction targets, if it already exists.
    pub fn request(&self) -> Option<RequestId> {
        match *self {
            Tx::RequestBit { .. } | Tx::RequestWord { .. } => None,
            Tx::Register { request, .. }
            | Tx::Reveal { request, .. }
            | Tx::ReturnDeposit { request, .. }
            | Tx::RequestReward { request, .. }
            | Tx::GetOutput { request, .. } => Some(request),
        }
    }
}

/// What a successfully applied transaction did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum TxEffect {
    Opened { requests: Vec<RequestId> },
    Registered { participant: u64 },
    Revealed,
    DepositReturned { amount: Money },
    RewardPaid { amount: Money },
    Output { output: OutputKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub tx: Tx,
    pub submitted_at: Millis,
    pub result: Result<TxEffect, ProtocolError>,
}

/// Applies one transaction to the engine at time `now`.
pub fn apply_tx(engine: &mut Rbgc, tx: &Tx, now: Millis) -> Result<TxEffect, ProtocolError> {
    match *tx {
        Tx::RequestBit {
            client,
            fee,
            deadline,
            value_bound,
        } => engine
            .request_random_bit(client, fee, deadline, value_bound, now)
            .map(|id| TxEffect::Opened {
                requests: alloc::vec![id],
            }),
        Tx::RequestWord {
            client,
            bits,
            fee,
            deadline,
            value_bound,
        } => engine
            .request_random_word(client, bits, fee, deadline, value_bound, now)
            .map(|requests| TxEffect::Opened { requests }),
        Tx::Register {
            request,
            account,
            deposit,
            commitment,
        } => engine
            .register(request, account, deposit, commitment, now)
            .map(|participant| TxEffect::Registered { participant }),
        Tx::Reveal {
            request,
            participant,
            bit,
            nonce,
        } => engine
            .reveal(request, participant, bit, &nonce, now)
            .map(|()| TxEffect::Revealed),
        Tx::ReturnDeposit {
            request,
            participant,
        } => engine
            .return_deposit(request, participant, now)
            .map(|amount| TxEffect::DepositReturned { amount }),
        Tx::RequestReward {
            request,
            participant,
        } => engine
            .request_reward(request, participant, now)
            .map(|amount| TxEffect::RewardPaid { amount }),
        Tx::GetOutput { request, caller } => engine
            .get_output(request, caller, now)
            .map(|output| TxEffect::Output { output }),
    }
}

/// Which transactions a censoring miner leaves out of its blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "censor", rename_all = "snake_case")]
pub enum TxFilter {
    All,
    Reveals,
    Registrations,
    RevealsOf {
        request: RequestId,
        participant: u64,
    },
}

impl TxFilter {
    pub fn matches(&self, tx: &Tx) -> bool {
        match (self, tx) {
            (TxFilter::All, _) => true,
            (TxFilter::Reveals, Tx::Reveal { .. }) => true,
            (TxFilter::Registrations, Tx::Register { .. }) => true,
            (
                TxFilter::RevealsOf {
                    request,
                    participant,
                },
                Tx::Reveal {
                    request: r,
                    participant: p,
                    ..
                },
            ) => request == r && participant == p,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MinerPolicy {
    Honest,
    Censor { filter: TxFilter },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerSpec {
    pub id: MinerId,
    pub hash_power: Ratio<u64>,
    pub policy: MinerPolicy,
}

impl MinerSpec {
    pub fn honest(id: u32, hash_power: Ratio<u64>) -> Self {
        Self {
            id: MinerId(id),
            hash_power,
            policy: MinerPolicy::Honest,
        }
    }

    pub fn censor(id: u32, hash_power: Ratio<u64>, filter: TxFilter) -> Self {
        Self {
            id: MinerId(id),
            hash_power,
            policy: MinerPolicy::Censor { filter },
        }
    }

    fn censors(&self, tx: &Tx) -> bool {
        match &self.policy {
            MinerPolicy::Honest => false,
            MinerPolicy::Censor { filter } => filter.matches(tx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimParams {
    /// Mean inter-block delay.
    pub t_gen: Millis,
    pub seed: u64,
    pub duration: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub height: u64,
    pub timestamp: Millis,
    pub miner: MinerId,
    pub transactions: Vec<Receipt>,
}

#[derive(Debug, Clone)]
struct Pending {
    tx: Tx,
    submitted_at: Millis,
}

/// Integer weights over a common denominator so miner selection is exact.
fn miner_weights(miners: &[MinerSpec]) -> Result<(Vec<u64>, u64), ChainError> {
    if miners.is_empty() {
        return Err(ChainError::NoMiners);
    }
    let mut sum = Ratio::<u64>::zero();
    let mut denominator = 1u64;
    for m in miners {
        if m.hash_power.is_zero() || m.hash_power > Ratio::one() {
            return Err(ChainError::HashPowerOutOfRange(m.id));
        }
        denominator = denominator.lcm(m.hash_power.denom());
        if denominator > u64::MAX / 2 {
            return Err(ChainError::HashPowerOverflow);
        }
        sum += m.hash_power;
    }
    if !sum.is_one() {
        return Err(ChainError::HashPowerSum(sum));
    }
    let weights = miners
        .iter()
        .map(|m| m.hash_power.numer() * (denominator / m.hash_power.denom()))
        .collect();
    Ok((weights, denominator))
}

/// Exponential sample with the given mean, rounded to whole milliseconds and
/// never below 1 so timestamps strictly increase.
pub fn sample_block_delay<R: Rng + ?Sized>(rng: &mut R, mean: Millis) -> Millis {
    let u: f64 = rng.gen();
    let delay = -libm::log1p(-u) * mean as f64;
    (libm::round(delay) as Millis).max(1)
}

/// Chain state plus the contract engine it drives.
#[derive(Debug, Clone)]
pub struct Chain {
    params: SimParams,
    miners: Vec<MinerSpec>,
    weights: Vec<u64>,
    weight_total: u64,
    rng: ChaCha8Rng,
    engine: Rbgc,
    mempool: VecDeque<Pending>,
    scheduled: BTreeMap<(Millis, u64), Tx>,
    sequence: u64,
    pending_registrations: BTreeMap<RequestId, u64>,
    now: Millis,
    blocks: Vec<Block>,
}

impl Chain {
    pub fn new(
        params: SimParams,
        miners: Vec<MinerSpec>,
        engine: Rbgc,
    ) -> Result<Self, ChainError> {
        if params.t_gen == 0 {
            return Err(ChainError::ZeroBlockTime);
        }
        let (weights, weight_total) = miner_weights(&miners)?;
        Ok(Self {
            params,
            miners,
            weights,
            weight_total,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            engine,
            mempool: VecDeque::new(),
            scheduled: BTreeMap::new(),
            sequence: 0,
            pending_registrations: BTreeMap::new(),
            now: 0,
            blocks: Vec::new(),
        })
    }

    /// Moves the clock forward before the first block.
    pub fn starting_at(mut self, now: Millis) -> Self {
        self.now = now;
        self
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn engine(&self) -> &Rbgc {
        &self.engine
    }

    /// Direct engine access for genesis setup.
    pub fn engine_mut(&mut self) -> &mut Rbgc {
        &mut self.engine
    }

    pub fn into_engine(self) -> Rbgc {
        self.engine
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn last_block(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    /// Transactions waiting for their broadcast time.
    pub fn scheduled_len(&self) -> usize {
        self.scheduled.len()
    }

    pub fn mempool(&self) -> impl Iterator<Item = &Tx> {
        self.mempool.iter().map(|p| &p.tx)
    }

    /// Registrations broadcast for `request` but not yet in a block.
    pub fn pending_registrations(&self, request: RequestId) -> u64 {
        self.pending_registrations
            .get(&request)
            .copied()
            .unwrap_or(0)
    }

    pub fn pending_registration_map(&self) -> &BTreeMap<RequestId, u64> {
        &self.pending_registrations
    }

    /// Broadcasts `tx` now.
    pub fn submit_tx(&mut self, tx: Tx) {
        let submitted_at = self.now;
        self.enqueue(tx, submitted_at);
    }

    /// Broadcasts `tx` once the clock reaches `at`.
    pub fn submit_at(&mut self, at: Millis, tx: Tx) {
        if at <= self.now {
            self.submit_tx(tx);
        } else {
            self.scheduled.insert((at, self.sequence), tx);
            self.sequence += 1;
        }
    }

    fn enqueue(&mut self, tx: Tx, submitted_at: Millis) {
        if let Tx::Register { request, .. } = tx {
            *self.pending_registrations.entry(request).or_default() += 1;
        }
        self.mempool.push_back(Pending { tx, submitted_at });
    }

    fn release_until(&mut self, t: Millis) {
        while let Some(entry) = self.scheduled.first_entry() {
            let (at, _) = *entry.key();
            if at > t {
                break;
            }
            let tx = entry.remove();
            self.enqueue(tx, at);
        }
    }

    fn sample_miner(&mut self) -> usize {
        let mut ticket = self.rng.gen_range(0..self.weight_total);
        for (slot, &w) in self.weights.iter().enumerate() {
            if ticket < w {
                return slot;
            }
            ticket -= w;
        }
        unreachable!("weights sum to the sampled range")
    }

    /// Mines the next block and applies its transactions.
    pub fn next_block(&mut self) -> &Block {
        let delay = sample_block_delay(&mut self.rng, self.params.t_gen);
        let timestamp = self.now + delay;
        self.release_until(timestamp);
        let miner_slot = self.sample_miner();
        let miner = &self.miners[miner_slot];

        let mut kept = VecDeque::with_capacity(self.mempool.len());
        let mut included = Vec::new();
        for pending in self.mempool.drain(..) {
            if miner.censors(&pending.tx) {
                kept.push_back(pending);
            } else {
                included.push(pending);
            }
        }
        self.mempool = kept;

        let mut receipts = Vec::with_capacity(included.len());
        for Pending { tx, submitted_at } in included {
            if let Tx::Register { request, .. } = tx {
                if let Some(n) = self.pending_registrations.get_mut(&request) {
                    *n -= 1;
                    if *n == 0 {
                        self.pending_registrations.remove(&request);
                    }
                }
            }
            let result = apply_tx(&mut self.engine, &tx, timestamp);
            receipts.push(Receipt {
                tx,
                submitted_at,
                result,
            });
        }

        self.now = timestamp;
        let block = Block {
            height: self.blocks.len() as u64,
            timestamp,
            miner: miner.id,
            transactions: receipts,
        };
        self.blocks.push(block);
        self.blocks.last().expect("just pushed")
    }
}

/// Outcome of [`censorship_trial`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorshipStats {
    pub trials: u64,
    pub withheld: u64,
    pub rate: f64,
    /// `q^m`, the chance the adversary mines every block of the window.
    pub expected: f64,
    /// Binomial standard deviation of `rate` around `expected`.
    pub sigma: f64,
}

/// Estimates how often an adversary holding `adversary_power` of the hash
/// rate keeps one reveal out of a reveal window `window_blocks` blocks long.
///
/// Each trial runs a fresh two-miner chain: the adversary censors reveals,
/// the rest of the hash power is honest. A request with one registered
/// participant is set up at genesis, the reveal is broadcast as the reveal
/// window opens, and `window_blocks` blocks are mined.
pub fn censorship_trial(
    adversary_power: Ratio<u64>,
    window_blocks: u32,
    trials: u64,
    seed: u64,
) -> Result<CensorshipStats, ChainError> {
    if adversary_power.is_zero() || adversary_power >= Ratio::one() {
        return Err(ChainError::AdversaryPowerOutOfRange);
    }
    if window_blocks == 0 {
        return Err(ChainError::EmptyWindow);
    }
    const T_GEN: Millis = 1_000;
    const CLIENT: AccountId = AccountId(0);
    const PARTICIPANT: AccountId = AccountId(1);
    let miners = alloc::vec![
        MinerSpec::censor(0, adversary_power, TxFilter::Reveals),
        MinerSpec::honest(1, Ratio::one() - adversary_power),
    ];
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let mut withheld = 0u64;
    for _ in 0..trials {
        let config = Config::new(Millis::MAX / 4, 1).expect("static config is valid");
        let mut engine = Rbgc::new(config);
        engine.mint(CLIENT, 1);
        engine.mint(PARTICIPANT, 1);
        let id = engine
            .request_random_bit(CLIENT, 1, Millis::MAX / 2, 1, 0)
            .expect("genesis request");
        let nonce: Nonce = seeder.gen();
        let bit: bool = seeder.gen();
        let c = commit(&CommitmentInput {
            bit,
            nonce,
            participant: 1,
            request_id: id.0,
        });
        engine
            .register(id, PARTICIPANT, 1, c, 0)
            .expect("genesis registration");
        let params = SimParams {
            t_gen: T_GEN,
            seed: seeder.gen(),
            duration: T_GEN * u64::from(window_blocks),
        };
        let mut chain = Chain::new(params, miners.clone(), engine)?.starting_at(2);
        chain.submit_tx(Tx::Reveal {
            request: id,
            participant: 1,
            bit,
            nonce,
        });
        for _ in 0..window_blocks {
            chain.next_block();
        }
        let revealed = chain
            .engine()
            .request(id)
            .and_then(|r| r.registrant(1))
            .and_then(|r| r.revealed_bit());
        if revealed.is_none() {
            withheld += 1;
        }
    }
    let q = *adversary_power.numer() as f64 / *adversary_power.denom() as f64;
    let expected = libm::pow(q, f64::from(window_blocks));
    Ok(CensorshipStats {
        trials,
        withheld,
        rate: if trials == 0 {
            0.0
        } else {
            withheld as f64 / trials as f64
        },
        expected,
        sigma: binomial_sigma(expected, trials.max(1)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Config;

    fn params(seed: u64) -> SimParams {
        SimParams {
            t_gen: 14_133,
            seed,
            duration: 1_000_000,
        }
    }

    fn engine() -> Rbgc {
        let mut e = Rbgc::new(Config::from_block_time(14_133).unwrap());
        e.mint(AccountId(0), 1_000);
        e
    }

    fn request_tx() -> Tx {
        Tx::RequestBit {
            client: AccountId(0),
            fee: 1,
            deadline: 10_000_000,
            value_bound: 1,
        }
    }

    #[test]
    fn validates_miners() {
        let half = Ratio::new(1, 2);
        assert!(matches!(
            Chain::new(params(1), alloc::vec![], engine()),
            Err(ChainError::NoMiners)
        ));
        assert!(matches!(
            Chain::new(params(1), alloc::vec![MinerSpec::honest(0, half)], engine()),
            Err(ChainError::HashPowerSum(_))
        ));
        assert!(matches!(
            Chain::new(
                params(1),
                alloc::vec![
                    MinerSpec::honest(0, Ratio::new(0, 1)),
                    MinerSpec::honest(1, Ratio::one())
                ],
                engine()
            ),
            Err(ChainError::HashPowerOutOfRange(MinerId(0)))
        ));
        let zero = SimParams {
            t_gen: 0,
            ..params(1)
        };
        assert!(matches!(
            Chain::new(
                zero,
                alloc::vec![MinerSpec::honest(0, Ratio::one())],
                engine()
            ),
            Err(ChainError::ZeroBlockTime)
        ));
    }

    #[test]
    fn honest_miner_includes_everything_in_order() {
        let mut chain = Chain::new(
            params(3),
            alloc::vec![MinerSpec::honest(0, Ratio::one())],
            engine(),
        )
        .unwrap();
        chain.submit_tx(request_tx());
        chain.submit_tx(request_tx());
        let block = chain.next_block();
        assert_eq!(block.transactions.len(), 2);
        let ids: Vec<_> = block
            .transactions
            .iter()
            .map(|r| r.result.clone().unwrap())
            .collect();
        assert_eq!(
            ids,
            alloc::vec![
                TxEffect::Opened {
                    requests: alloc::vec![RequestId(0)]
                },
                TxEffect::Opened {
                    requests: alloc::vec![RequestId(1)]
                },
            ]
        );
        assert_eq!(chain.mempool_len(), 0);
    }

    #[test]
    fn censor_all_never_drains() {
        let mut chain = Chain::new(
            params(4),
            alloc::vec![MinerSpec::censor(0, Ratio::one(), TxFilter::All)],
            engine(),
        )
        .unwrap();
        chain.submit_tx(request_tx());
        for _ in 0..50 {
            assert!(chain.next_block().transactions.is_empty());
        }
        assert_eq!(chain.mempool_len(), 1);
    }

    #[test]
    fn timestamps_strictly_increase_and_mean_delay() {
        let mut chain = Chain::new(
            params(5),
            alloc::vec![MinerSpec::honest(0, Ratio::one())],
            engine(),
        )
        .unwrap();
        let mut last = 0;
        for _ in 0..10_000 {
            let b = chain.next_block();
            assert!(b.timestamp > last);
            last = b.timestamp;
        }
        let mean = last as f64 / 10_000.0;
        assert!(
            (mean - 14_133.0).abs() / 14_133.0 < 0.02,
            "mean delay {mean}"
        );
        let heights: Vec<u64> = chain.blocks().iter().map(|b| b.height).collect();
        assert!(heights.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn miner_selection_tracks_hash_power() {
        let miners = alloc::vec![
            MinerSpec::honest(0, Ratio::new(1, 4)),
            MinerSpec::honest(1, Ratio::new(3, 4)),
        ];
        let mut chain = Chain::new(params(6), miners, engine()).unwrap();
        let n = 20_000;
        let first = (0..n)
            .filter(|_| chain.next_block().miner == MinerId(0))
            .count();
        let share = first as f64 / n as f64;
        assert!(
            (share - 0.25).abs() < 3.0 * binomial_sigma(0.25, n as u64) + 1e-9,
            "{share}"
        );
    }

    #[test]
    fn scheduled_transactions_wait_for_their_time() {
        let mut chain = Chain::new(
            params(7),
            alloc::vec![MinerSpec::honest(0, Ratio::one())],
            engine(),
        )
        .unwrap();
        chain.submit_at(5_000_000, request_tx());
        loop {
            let b = chain.next_block();
            if b.timestamp < 5_000_000 {
                assert!(b.transactions.is_empty());
            } else {
                assert_eq!(b.transactions.len(), 1);
                assert_eq!(b.transactions[0].submitted_at, 5_000_000);
                break;
            }
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let run = |seed| {
            let miners = alloc::vec![
                MinerSpec::honest(0, Ratio::new(1, 3)),
                MinerSpec::censor(1, Ratio::new(2, 3), TxFilter::Reveals),
            ];
            let mut chain = Chain::new(params(seed), miners, engine()).unwrap();
            chain.submit_tx(request_tx());
            for _ in 0..100 {
                chain.next_block();
            }
            (chain.blocks().to_vec(), chain.engine().clone())
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11).0, run(12).0);
    }

    #[test]
    fn censorship_trial_preconditions() {
        assert_eq!(
            censorship_trial(Ratio::new(1, 2), 0, 10, 1).unwrap_err(),
            ChainError::EmptyWindow
        );
        assert_eq!(
            censorship_trial(Ratio::one(), 3, 10, 1).unwrap_err(),
            ChainError::AdversaryPowerOutOfRange
        );
        let near_total = censorship_trial(Ratio::new(999, 1000), 1, 2_000, 9).unwrap();
        assert!(near_total.rate > 0.99);
    }

    #[test]
    fn tx_filters() {
        let reveal = Tx::Reveal {
            request: RequestId(3),
            participant: 2,
            bit: true,
            nonce: [0; 16],
        };
        assert!(TxFilter::Reveals.matches(&reveal));
        assert!(TxFilter::All.matches(&reveal));
        assert!(!TxFilter::Registrations.matches(&reveal));
        assert!(TxFilter::RevealsOf {
            request: RequestId(3),
            participant: 2
        }
        .matches(&reveal));
        assert!(!TxFilter::RevealsOf {
            request: RequestId(3),
            participant: 1
        }
        .matches(&reveal));
        assert!(!TxFilter::Reveals.matches(&request_tx()));
    }
}
