//! The random bit generator contract: request, register, reveal, deposit
//! return, reward, output. Money lives in a closed [`Ledger`]; every transfer
//! moves units between an account balance and a per-request escrow, so the
//! total supply never changes after genesis.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commitment::{verify_reveal, Commitment, CommitmentInput, NONCE_LEN};
use crate::game::{self, PlayerIndex, StrategyCounts};

/// Integer base units.
pub type Money = u64;
/// Milliseconds of simulated time.
pub type Millis = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub u64);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolError {
    #[error("deadline leaves {available} ms, at least {required} ms required")]
    DeadlineTooClose { available: Millis, required: Millis },
    #[error("account {account} holds {available}, needs {needed}")]
    InsufficientFunds {
        account: AccountId,
        needed: Money,
        available: Money,
    },
    #[error("unknown request {0}")]
    UnknownRequest(RequestId),
    #[error("registration is closed")]
    RegistrationClosed,
    #[error("deposit must be exactly {expected}, got {got}")]
    WrongDeposit { expected: Money, got: Money },
    #[error("outside the reveal window")]
    OutsideRevealWindow,
    #[error("unknown participant {0}")]
    UnknownParticipant(u64),
    #[error("participant already revealed")]
    AlreadyRevealed,
    #[error("reveal does not open the stored commitment")]
    BadPreimage,
    #[error("participant did not reveal in time")]
    NotRevealed,
    #[error("already claimed")]
    AlreadyClaimed,
    #[error("only possible after the deadline")]
    TooEarly,
    #[error("only the requesting client may do this")]
    NotClient,
    #[error("a word needs at least one bit")]
    EmptyWord,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Contract timing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    /// Minimum time between request and deadline.
    pub t_min: Millis,
    /// Length of the registration window.
    pub t_reg: Millis,
    pub nonce_len: usize,
}

impl Config {
    pub fn new(t_min: Millis, t_reg: Millis) -> Result<Self, ProtocolError> {
        if t_reg == 0 {
            return Err(ProtocolError::InvalidConfig("t_reg must be positive"));
        }
        if t_min <= t_reg {
            return Err(ProtocolError::InvalidConfig("t_min must exceed t_reg"));
        }
        Ok(Self {
            t_min,
            t_reg,
            nonce_len: NONCE_LEN,
        })
    }

    /// Windows as multiples of the mean block interval: registration lasts
    /// `3 * t_gen` and the whole process at least `10 * t_gen`.
    pub fn from_block_time(t_gen: Millis) -> Result<Self, ProtocolError> {
        Self::new(10 * t_gen, 3 * t_gen)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ledger {
    balances: BTreeMap<AccountId, Money>,
    escrow: BTreeMap<RequestId, Money>,
}

impl Ledger {
    /// Genesis allocation. The only way money enters the system.
    pub fn mint(&mut self, account: AccountId, amount: Money) {
        *self.balances.entry(account).or_default() += amount;
    }

    pub fn balance(&self, account: AccountId) -> Money {
        self.balances.get(&account).copied().unwrap_or(0)
    }

    pub fn escrow(&self, id: RequestId) -> Money {
        self.escrow.get(&id).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> impl Iterator<Item = (AccountId, Money)> + '_ {
        self.balances.iter().map(|(&a, &m)| (a, m))
    }

    pub fn total_supply(&self) -> u128 {
        let held: u128 = self.balances.values().map(|&m| u128::from(m)).sum();
        let escrowed: u128 = self.escrow.values().map(|&m| u128::from(m)).sum();
        held + escrowed
    }

    fn ensure(&self, account: AccountId, needed: Money) -> Result<(), ProtocolError> {
        let available = self.balance(account);
        if available < needed {
            return Err(ProtocolError::InsufficientFunds {
                account,
                needed,
                available,
            });
        }
        Ok(())
    }

    fn lock(
        &mut self,
        account: AccountId,
        id: RequestId,
        amount: Money,
    ) -> Result<(), ProtocolError> {
        self.ensure(account, amount)?;
        *self.balances.entry(account).or_default() -= amount;
        *self.escrow.entry(id).or_default() += amount;
        Ok(())
    }

    fn release(&mut self, id: RequestId, account: AccountId, amount: Money) {
        let held = self.escrow.entry(id).or_default();
        assert!(*held >= amount, "escrow for request {id} would go negative");
        *held -= amount;
        *self.balances.entry(account).or_default() += amount;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RevealState {
    Pending,
    Revealed { bit: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registrant {
    pub account: AccountId,
    pub number: u64,
    pub commitment: Commitment,
    pub deposited: Money,
    pub reveal: RevealState,
    pub registered_at: Millis,
    pub revealed_at: Option<Millis>,
    pub deposit_returned: bool,
    pub reward_claimed: bool,
}

impl Registrant {
    pub fn revealed_bit(&self) -> Option<bool> {
        match self.reveal {
            RevealState::Revealed { bit } => Some(bit),
            RevealState::Pending => None,
        }
    }
}

/// What the client receives from [`Rbgc::get_output`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputKind {
    Success { bit: bool },
    Penalty { bit: bool, compensation: Money },
    Failure { refund: Money },
}

impl OutputKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutputKind::Success { .. } => "success",
            OutputKind::Penalty { .. } => "penalty",
            OutputKind::Failure { .. } => "failure",
        }
    }

    pub fn bit(&self) -> Option<bool> {
        match *self {
            OutputKind::Success { bit } | OutputKind::Penalty { bit, .. } => Some(bit),
            OutputKind::Failure { .. } => None,
        }
    }

    /// Total paid to the client at settlement.
    pub fn paid_to_client(&self, settlement: &Settlement) -> Money {
        match *self {
            OutputKind::Success { .. } => settlement.dust,
            OutputKind::Penalty { compensation, .. } => compensation,
            OutputKind::Failure { refund } => refund + settlement.confiscated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settlement {
    pub output: OutputKind,
    pub settled_at: Millis,
    /// Deposits of registrants that never revealed.
    pub confiscated: Money,
    /// Reward rounding remainder.
    pub dust: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub client: AccountId,
    pub fee: Money,
    pub deadline: Millis,
    pub value_bound: Money,
    pub created_at: Millis,
    pub registration_closes: Millis,
    pub registrants: Vec<Registrant>,
    pub counts: StrategyCounts,
    pub settlement: Option<Settlement>,
}

impl Request {
    pub fn registration_open(&self, now: Millis) -> bool {
        now >= self.created_at && now <= self.registration_closes
    }

    pub fn reveal_open(&self, now: Millis) -> bool {
        now > self.registration_closes && now <= self.deadline
    }

    pub fn registrant(&self, number: u64) -> Option<&Registrant> {
        number
            .checked_sub(1)
            .and_then(|slot| self.registrants.get(slot as usize))
    }

    /// XOR of every correctly revealed bit so far.
    pub fn xor_of_reveals(&self) -> bool {
        self.registrants
            .iter()
            .filter_map(Registrant::revealed_bit)
            .fold(false, |acc, b| acc ^ b)
    }

    pub fn all_revealed(&self) -> bool {
        self.registrants.iter().all(|r| r.revealed_bit().is_some())
    }

    /// Recomputes the five tallies from the reveal states.
    pub fn derived_counts(&self) -> StrategyCounts {
        let mut counts = StrategyCounts::default();
        for r in &self.registrants {
            if let Some(bit) = r.revealed_bit() {
                counts.record(player(r.number).strategy_for_bit(bit));
            }
        }
        counts
    }
}

fn player(number: u64) -> PlayerIndex {
    PlayerIndex::new(number as usize).expect("participant numbers start at 1")
}

/// The contract engine. Single writer: callers own it mutably and apply
/// operations in chain order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rbgc {
    config: Config,
    ledger: Ledger,
    requests: BTreeMap<RequestId, Request>,
    next_id: u64,
}

impl Rbgc {
    pub fn new(config: Config) -> Self {
        Self {
            config,
            ledger: Ledger::default(),
            requests: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn mint(&mut self, account: AccountId, amount: Money) {
        self.ledger.mint(account, amount);
    }

    pub fn request(&self, id: RequestId) -> Option<&Request> {
        self.requests.get(&id)
    }

    pub fn requests(&self) -> impl Iterator<Item = &Request> {
        self.requests.values()
    }

    fn request_mut(&mut self, id: RequestId) -> Result<&mut Request, ProtocolError> {
        self.requests
            .get_mut(&id)
            .ok_or(ProtocolError::UnknownRequest(id))
    }

    /// Opens a new request and locks `fee` in its escrow.
    pub fn request_random_bit(
        &mut self,
        client: AccountId,
        fee: Money,
        deadline: Millis,
        value_bound: Money,
        now: Millis,
    ) -> Result<RequestId, ProtocolError> {
        self.check_deadline(deadline, now)?;
        self.ledger.ensure(client, fee)?;
        Ok(self.open_request(client, fee, deadline, value_bound, now))
    }

    fn check_deadline(&self, deadline: Millis, now: Millis) -> Result<(), ProtocolError> {
        let available = deadline.saturating_sub(now);
        if available < self.config.t_min {
            return Err(ProtocolError::DeadlineTooClose {
                available,
                required: self.config.t_min,
            });
        }
        Ok(())
    }

    fn open_request(
        &mut self,
        client: AccountId,
        fee: Money,
        deadline: Millis,
        value_bound: Money,
        now: Millis,
    ) -> RequestId {
        let id = RequestId(self.next_id);
        self.next_id += 1;
        self.ledger
            .lock(client, id, fee)
            .expect("balance checked before opening");
        self.requests.insert(
            id,
            Request {
                id,
                client,
                fee,
                deadline,
                value_bound,
                created_at: now,
                registration_closes: now + self.config.t_reg,
                registrants: Vec::new(),
                counts: StrategyCounts::default(),
                settlement: None,
            },
        );
        id
    }

    /// Opens `bits` independent requests, one per bit of a word. The fee is
    /// split evenly with the remainder going to the first instance.
    pub fn request_random_word(
        &mut self,
        client: AccountId,
        bits: usize,
        fee: Money,
        deadline: Millis,
        value_bound: Money,
        now: Millis,
    ) -> Result<Vec<RequestId>, ProtocolError> {
        if bits == 0 {
            return Err(ProtocolError::EmptyWord);
        }
        self.check_deadline(deadline, now)?;
        self.ledger.ensure(client, fee)?;
        let base = fee / bits as Money;
        let remainder = fee % bits as Money;
        Ok((0..bits)
            .map(|k| {
                let share = if k == 0 { base + remainder } else { base };
                self.open_request(client, share, deadline, value_bound, now)
            })
            .collect())
    }

    /// Registers a new participant and returns its number. The same account
    /// may register several times; each registration is its own participant.
    pub fn register(
        &mut self,
        id: RequestId,
        account: AccountId,
        deposit: Money,
        commitment: Commitment,
        now: Millis,
    ) -> Result<u64, ProtocolError> {
        let request = self.request(id).ok_or(ProtocolError::UnknownRequest(id))?;
        if request.settlement.is_some() || !request.registration_open(now) {
            return Err(ProtocolError::RegistrationClosed);
        }
        if deposit != request.value_bound {
            return Err(ProtocolError::WrongDeposit {
                expected: request.value_bound,
                got: deposit,
            });
        }
        self.ledger.lock(account, id, deposit)?;
        let request = self.request_mut(id)?;
        let number = request.registrants.len() as u64 + 1;
        request.registrants.push(Registrant {
            account,
            number,
            commitment,
            deposited: deposit,
            reveal: RevealState::Pending,
            registered_at: now,
            revealed_at: None,
            deposit_returned: false,
            reward_claimed: false,
        });
        Ok(number)
    }

    /// Opens participant `number`'s commitment. A reveal that does not match
    /// changes nothing.
    pub fn reveal(
        &mut self,
        id: RequestId,
        number: u64,
        bit: bool,
        nonce: &[u8],
        now: Millis,
    ) -> Result<(), ProtocolError> {
        let request = self.request_mut(id)?;
        if !request.reveal_open(now) {
            return Err(ProtocolError::OutsideRevealWindow);
        }
        let slot = number
            .checked_sub(1)
            .filter(|&s| (s as usize) < request.registrants.len())
            .ok_or(ProtocolError::UnknownParticipant(number))? as usize;
        let registrant = &mut request.registrants[slot];
        if registrant.revealed_bit().is_some() {
            return Err(ProtocolError::AlreadyRevealed);
        }
        let input = CommitmentInput::new(bit, nonce, number, id.0)
            .map_err(|_| ProtocolError::BadPreimage)?;
        if !verify_reveal(&input, &registrant.commitment) {
            return Err(ProtocolError::BadPreimage);
        }
        registrant.reveal = RevealState::Revealed { bit };
        registrant.revealed_at = Some(now);
        request.counts.record(player(number).strategy_for_bit(bit));
        Ok(())
    }

    fn claimable(
        &self,
        id: RequestId,
        number: u64,
        now: Millis,
    ) -> Result<(&Request, &Registrant), ProtocolError> {
        let request = self.request(id).ok_or(ProtocolError::UnknownRequest(id))?;
        if now <= request.deadline {
            return Err(ProtocolError::TooEarly);
        }
        let registrant = request
            .registrant(number)
            .ok_or(ProtocolError::UnknownParticipant(number))?;
        if registrant.revealed_bit().is_none() {
            return Err(ProtocolError::NotRevealed);
        }
        Ok((request, registrant))
    }

    /// Returns the deposit of a participant that revealed in time.
    pub fn return_deposit(
        &mut self,
        id: RequestId,
        number: u64,
        now: Millis,
    ) -> Result<Money, ProtocolError> {
        let (_, registrant) = self.claimable(id, number, now)?;
        if registrant.deposit_returned {
            return Err(ProtocolError::AlreadyClaimed);
        }
        let (account, amount) = (registrant.account, registrant.deposited);
        self.ledger.release(id, account, amount);
        self.request_mut(id)?.registrants[number as usize - 1].deposit_returned = true;
        Ok(amount)
    }

    /// Pays a revealer its share of the fee, scaled by its game utility.
    pub fn request_reward(
        &mut self,
        id: RequestId,
        number: u64,
        now: Millis,
    ) -> Result<Money, ProtocolError> {
        let (request, registrant) = self.claimable(id, number, now)?;
        if registrant.reward_claimed {
            return Err(ProtocolError::AlreadyClaimed);
        }
        let bit = registrant.revealed_bit().expect("checked by claimable");
        let strategy = player(number).strategy_for_bit(bit);
        let amount = game::reward_share(&request.counts, strategy, request.fee)
            .expect("a revealer implies n' >= 1 and its strategy was counted");
        let account = registrant.account;
        self.ledger.release(id, account, amount);
        self.request_mut(id)?.registrants[number as usize - 1].reward_claimed = true;
        Ok(amount)
    }

    /// Settles the request on first call and returns the same result on every
    /// later call.
    pub fn get_output(
        &mut self,
        id: RequestId,
        caller: AccountId,
        now: Millis,
    ) -> Result<OutputKind, ProtocolError> {
        let request = self.request(id).ok_or(ProtocolError::UnknownRequest(id))?;
        if caller != request.client {
            return Err(ProtocolError::NotClient);
        }
        if now <= request.deadline {
            return Err(ProtocolError::TooEarly);
        }
        if let Some(settled) = request.settlement {
            return Ok(settled.output);
        }

        let confiscated: Money = request
            .registrants
            .iter()
            .filter(|r| r.revealed_bit().is_none())
            .map(|r| r.deposited)
            .sum();
        let (output, dust) = if request.counts.n_prime() == 0 {
            (
                OutputKind::Failure {
                    refund: request.fee,
                },
                0,
            )
        } else {
            let dust =
                game::reward_dust(&request.counts, request.fee).expect("n' >= 1 in this branch");
            let bit = request.xor_of_reveals();
            if request.all_revealed() {
                (OutputKind::Success { bit }, dust)
            } else {
                (
                    OutputKind::Penalty {
                        bit,
                        compensation: confiscated + dust,
                    },
                    dust,
                )
            }
        };
        let settlement = Settlement {
            output,
            settled_at: now,
            confiscated,
            dust,
        };
        let client = request.client;
        self.ledger
            .release(id, client, output.paid_to_client(&settlement));
        self.request_mut(id)?.settlement = Some(settlement);
        Ok(output)
    }
}
