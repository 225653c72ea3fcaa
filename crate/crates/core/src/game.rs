//! The n-player Random Bit Generation game.
//!
//! Odd-numbered players choose from `{1, 3}`, even-numbered players from
//! `{0, 2}`. Every pair of opposite-parity players plays a minigame on the
//! mod-4 cycle `0 -> 1 -> 2 -> 3 -> 0` where the strategy one step ahead wins a
//! point from the other. A player's utility is the sum over its minigames.
//!
//! All game-theoretic quantities are exact: pure utilities are integers and
//! mixed-profile expectations are [`BigRational`]s.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest game size accepted by the exhaustive equilibrium check.
pub const ENUMERATION_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("strategy value {0} is not in 0..=3")]
    InvalidStrategy(u8),
    #[error("player indices start at 1")]
    ZeroPlayerIndex,
    #[error("strategy {strategy} is not legal for player {player}")]
    IllegalStrategy { player: usize, strategy: u8 },
    #[error("player {index} is out of range for a game with {players} players")]
    PlayerOutOfRange { index: usize, players: usize },
    #[error("a game needs at least one player")]
    EmptyGame,
    #[error("probability for player {player} is outside [0, 1]")]
    ProbabilityOutOfRange { player: usize },
    #[error("no revealer played strategy {0}")]
    StrategyNotPlayed(u8),
    #[error("{players} players given, at least {min} required")]
    TooFewPlayers { players: usize, min: usize },
    #[error("{players} players exceeds the enumeration cap of {cap}")]
    TooManyPlayers { players: usize, cap: usize },
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("player {0} appears twice in the coalition")]
    DuplicateMember(usize),
    #[error("coalition has {members} members but {strategies} deviation strategies")]
    DeviationLengthMismatch { members: usize, strategies: usize },
    #[error("no participant revealed, rewards are undefined")]
    NoRevealers,
    #[error("strategy assignments do not match the recorded counts")]
    CountsMismatch,
}

/// A 1-based player number. Parity selects the strategy set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerIndex(usize);

impl PlayerIndex {
    pub fn new(index: usize) -> Result<Self, GameError> {
        if index == 0 {
            return Err(GameError::ZeroPlayerIndex);
        }
        Ok(Self(index))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn is_even(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Strategy this player plays when submitting `bit`.
    pub fn strategy_for_bit(self, bit: bool) -> Strategy {
        let parity = (self.0 % 2) as u8;
        Strategy(2 * u8::from(bit) + parity)
    }

    /// The smaller of the two legal strategies (0 or 1).
    pub fn lower_strategy(self) -> Strategy {
        self.strategy_for_bit(false)
    }

    pub fn upper_strategy(self) -> Strategy {
        self.strategy_for_bit(true)
    }

    fn slot(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for PlayerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One of the four RBG actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Strategy(u8);

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy(0), Strategy(1), Strategy(2), Strategy(3)];

    pub fn new(value: u8) -> Result<Self, GameError> {
        if value > 3 {
            return Err(GameError::InvalidStrategy(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_legal_for(self, player: PlayerIndex) -> bool {
        usize::from(self.0 % 2) == player.get() % 2
    }

    /// The bit a participant encoded by playing this strategy.
    pub fn bit(self) -> bool {
        self.0 >= 2
    }

    /// The strategy that wins against `self`.
    pub fn beaten_by(self) -> Strategy {
        Strategy((self.0 + 1) % 4)
    }

    /// The other strategy of the same parity.
    pub fn flipped(self) -> Strategy {
        Strategy((self.0 + 2) % 4)
    }

    fn slot(self) -> usize {
        usize::from(self.0)
    }
}

impl TryFrom<u8> for Strategy {
    type Error = GameError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Strategy::new(value)
    }
}

impl From<Strategy> for u8 {
    fn from(s: Strategy) -> u8 {
        s.0
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Points won by `a` in a minigame against `b`.
pub fn minigame_payoff(a: Strategy, b: Strategy) -> i64 {
    if a.0 == (b.0 + 1) % 4 {
        1
    } else if (a.0 + 1) % 4 == b.0 {
        -1
    } else {
        0
    }
}

/// A pure strategy per player, in player order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbgOutcome {
    strategies: Vec<Strategy>,
}

impl RbgOutcome {
    pub fn new(strategies: Vec<Strategy>) -> Result<Self, GameError> {
        if strategies.is_empty() {
            return Err(GameError::EmptyGame);
        }
        for (slot, s) in strategies.iter().enumerate() {
            let player = PlayerIndex(slot + 1);
            if !s.is_legal_for(player) {
                return Err(GameError::IllegalStrategy {
                    player: player.get(),
                    strategy: s.value(),
                });
            }
        }
        Ok(Self { strategies })
    }

    /// Builds the outcome in which player `i` submitted `bits[i - 1]`.
    pub fn from_bits(bits: &[bool]) -> Result<Self, GameError> {
        let strategies = bits
            .iter()
            .enumerate()
            .map(|(slot, &b)| PlayerIndex(slot + 1).strategy_for_bit(b))
            .collect();
        Self::new(strategies)
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn strategy(&self, player: PlayerIndex) -> Result<Strategy, GameError> {
        self.strategies
            .get(player.slot())
            .copied()
            .ok_or(GameError::PlayerOutOfRange {
                index: player.get(),
                players: self.players(),
            })
    }

    /// Sum of `player`'s minigame points against every other player.
    pub fn utility(&self, player: PlayerIndex) -> Result<i64, GameError> {
        let mine = self.strategy(player)?;
        Ok(self
            .strategies
            .iter()
            .enumerate()
            .filter(|(slot, _)| *slot != player.slot())
            .map(|(_, &theirs)| minigame_payoff(mine, theirs))
            .sum())
    }

    pub fn counts(&self) -> StrategyCounts {
        let mut counts = StrategyCounts::default();
        for &s in &self.strategies {
            counts.record(s);
        }
        counts
    }
}

/// The five reveal-phase tallies: how many revealers played each strategy,
/// plus their total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyCounts {
    n0: u64,
    n1: u64,
    n2: u64,
    n3: u64,
    n_prime: u64,
}

impl StrategyCounts {
    pub fn new(n0: u64, n1: u64, n2: u64, n3: u64) -> Self {
        Self {
            n0,
            n1,
            n2,
            n3,
            n_prime: n0 + n1 + n2 + n3,
        }
    }

    pub fn get(&self, s: Strategy) -> u64 {
        match s.0 {
            0 => self.n0,
            1 => self.n1,
            2 => self.n2,
            _ => self.n3,
        }
    }

    pub fn n_prime(&self) -> u64 {
        self.n_prime
    }

    pub fn record(&mut self, s: Strategy) {
        match s.0 {
            0 => self.n0 += 1,
            1 => self.n1 += 1,
            2 => self.n2 += 1,
            _ => self.n3 += 1,
        }
        self.n_prime += 1;
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.n0, self.n1, self.n2, self.n3]
    }
}

/// Utility of any revealer who played `s`, read off the tallies alone.
pub fn utility_from_counts(counts: &StrategyCounts, s: Strategy) -> Result<i64, GameError> {
    if counts.get(s) == 0 {
        return Err(GameError::StrategyNotPlayed(s.value()));
    }
    let beaten = counts.get(Strategy((s.0 + 3) % 4)) as i64;
    let beats_me = counts.get(s.beaten_by()) as i64;
    Ok(beaten - beats_me)
}

/// Per-player probability of playing the lower legal strategy (0 for even
/// players, 1 for odd players).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedProfile {
    lower: Vec<BigRational>,
}

impl MixedProfile {
    pub fn new(lower: Vec<BigRational>) -> Result<Self, GameError> {
        if lower.is_empty() {
            return Err(GameError::EmptyGame);
        }
        for (slot, q) in lower.iter().enumerate() {
            if q.is_negative() || *q > BigRational::one() {
                return Err(GameError::ProbabilityOutOfRange { player: slot + 1 });
            }
        }
        Ok(Self { lower })
    }

    /// Every player mixes 50/50.
    pub fn uniform(players: usize) -> Result<Self, GameError> {
        Self::new(vec![half(); players])
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_ratios(ratios: &[(i64, i64)]) -> Result<Self, GameError> {
        Self::new(
            ratios
                .iter()
                .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
                .collect(),
        )
    }

    pub fn players(&self) -> usize {
        self.lower.len()
    }

    pub fn lower_probability(&self, player: PlayerIndex) -> Result<&BigRational, GameError> {
        self.lower
            .get(player.slot())
            .ok_or(GameError::PlayerOutOfRange {
                index: player.get(),
                players: self.players(),
            })
    }

    /// Probability that `player` plays `s` (zero for illegal strategies).
    pub fn probability(&self, player: PlayerIndex, s: Strategy) -> Result<BigRational, GameError> {
        let q = self.lower_probability(player)?;
        Ok(if s == player.lower_strategy() {
            q.clone()
        } else if s == player.upper_strategy() {
            BigRational::one() - q
        } else {
            BigRational::zero()
        })
    }

    pub fn is_uniform(&self) -> bool {
        let h = half();
        self.lower.iter().all(|q| *q == h)
    }

    fn check(&self, player: PlayerIndex) -> Result<(), GameError> {
        if player.slot() >= self.players() {
            return Err(GameError::PlayerOutOfRange {
                index: player.get(),
                players: self.players(),
            });
        }
        Ok(())
    }

    fn players_iter(&self) -> impl Iterator<Item = PlayerIndex> {
        (1..=self.players()).map(PlayerIndex)
    }

    /// Probability mass per strategy summed over every player for which
    /// `include` holds.
    fn mass(&self, include: impl Fn(PlayerIndex) -> bool) -> [BigRational; 4] {
        let mut mass: [BigRational; 4] = Default::default();
        for p in self.players_iter().filter(|&p| include(p)) {
            let q = &self.lower[p.slot()];
            mass[p.lower_strategy().slot()] += q;
            mass[p.upper_strategy().slot()] += BigRational::one() - q;
        }
        mass
    }
}

pub(crate) fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// Expected points of pure strategy `a` against an aggregated opponent mass.
fn payoff_against(a: Strategy, mass: &[BigRational; 4]) -> BigRational {
    let mut total = BigRational::zero();
    for b in Strategy::ALL {
        match minigame_payoff(a, b) {
            1 => total += &mass[b.slot()],
            -1 => total -= &mass[b.slot()],
            _ => {}
        }
    }
    total
}

/// Exact expected utility of `player` under `profile`.
///
/// Expected utility is bilinear in the two marginals of each minigame, so the
/// opponents are first collapsed into one strategy mass. Same-parity
/// opponents land on strategies `player` scores 0 against.
pub fn expected_utility(
    profile: &MixedProfile,
    player: PlayerIndex,
) -> Result<BigRational, GameError> {
    profile.check(player)?;
    let mass = profile.mass(|p| p != player);
    let q = &profile.lower[player.slot()];
    let low = payoff_against(player.lower_strategy(), &mass);
    let high = payoff_against(player.upper_strategy(), &mass);
    Ok(q * low + (BigRational::one() - q) * high)
}

fn validate_coalition(
    profile: &MixedProfile,
    coalition: &[PlayerIndex],
) -> Result<Vec<bool>, GameError> {
    if coalition.is_empty() {
        return Err(GameError::EmptyCoalition);
    }
    let mut member = vec![false; profile.players()];
    for &p in coalition {
        profile.check(p)?;
        if member[p.slot()] {
            return Err(GameError::DuplicateMember(p.get()));
        }
        member[p.slot()] = true;
    }
    Ok(member)
}

/// Total expected utility of `coalition` when its members play the pure
/// strategies in `deviation` (aligned with `coalition`) and everyone else
/// follows `profile`. Minigames between two members only move points inside
/// the coalition, so only games against outsiders are summed.
pub fn coalition_expected_total(
    profile: &MixedProfile,
    coalition: &[PlayerIndex],
    deviation: &[Strategy],
) -> Result<BigRational, GameError> {
    let member = validate_coalition(profile, coalition)?;
    if coalition.len() != deviation.len() {
        return Err(GameError::DeviationLengthMismatch {
            members: coalition.len(),
            strategies: deviation.len(),
        });
    }
    for (&p, &s) in coalition.iter().zip(deviation) {
        if !s.is_legal_for(p) {
            return Err(GameError::IllegalStrategy {
                player: p.get(),
                strategy: s.value(),
            });
        }
    }
    let outside = profile.mass(|p| !member[p.slot()]);
    Ok(deviation
        .iter()
        .map(|&s| payoff_against(s, &outside))
        .fold(BigRational::zero(), |acc, x| acc + x))
}

/// Total expected utility of `coalition` when every member follows `profile`.
pub fn coalition_profile_total(
    profile: &MixedProfile,
    coalition: &[PlayerIndex],
) -> Result<BigRational, GameError> {
    let member = validate_coalition(profile, coalition)?;
    let outside = profile.mass(|p| !member[p.slot()]);
    let mut total = BigRational::zero();
    for &p in coalition {
        let q = &profile.lower[p.slot()];
        total += q * payoff_against(p.lower_strategy(), &outside);
        total += (BigRational::one() - q) * payoff_against(p.upper_strategy(), &outside);
    }
    Ok(total)
}

/// A coalition, the pure strategies its members switch to, and the exact
/// change in the coalition's total expected utility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationReport {
    pub coalition: Vec<PlayerIndex>,
    pub deviation: Vec<Strategy>,
    pub gain: BigRational,
}

/// Result of exhaustively checking every coalition deviation from the
/// uniform profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub players: usize,
    pub coalitions: u64,
    pub pairs_checked: u64,
    pub max_gain: BigRational,
    /// A deviation attaining `max_gain`.
    pub witness: DeviationReport,
}

impl EquilibriumReport {
    pub fn holds(&self) -> bool {
        self.max_gain.is_zero()
    }
}

/// Checks that no coalition can raise its total expected utility by
/// deviating from the uniform profile.
///
/// Only pure deviations are enumerated: the coalition total is multilinear in
/// the members' marginals, so its maximum over mixed deviations is attained
/// at a pure one.
pub fn verify_quasi_strong_uniform(players: usize) -> Result<EquilibriumReport, GameError> {
    if players < 2 {
        return Err(GameError::TooFewPlayers { players, min: 2 });
    }
    if players > ENUMERATION_CAP {
        return Err(GameError::TooManyPlayers {
            players,
            cap: ENUMERATION_CAP,
        });
    }
    let profile = MixedProfile::uniform(players)?;
    let mut best: Option<DeviationReport> = None;
    let mut coalitions = 0u64;
    let mut pairs = 0u64;
    for mask in 1u32..(1 << players) {
        coalitions += 1;
        let coalition: Vec<PlayerIndex> = (0..players)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| PlayerIndex(b + 1))
            .collect();
        let baseline = coalition_profile_total(&profile, &coalition)?;
        for choice in 0u32..(1 << coalition.len()) {
            pairs += 1;
            let deviation: Vec<Strategy> = coalition
                .iter()
                .enumerate()
                .map(|(k, p)| p.strategy_for_bit(choice & (1 << k) != 0))
                .collect();
            let gain = coalition_expected_total(&profile, &coalition, &deviation)? - &baseline;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(DeviationReport {
                    coalition: coalition.clone(),
                    deviation,
                    gain,
                });
            }
        }
    }
    let witness = best.expect("at least one coalition exists for n >= 2");
    Ok(EquilibriumReport {
        players,
        coalitions,
        pairs_checked: pairs,
        max_gain: witness.gain.clone(),
        witness,
    })
}

/// Builds a profitable coalition deviation from any non-uniform profile, or
/// returns `None` for the uniform one.
///
/// The most biased player `e` (ties broken by lowest index) plays some
/// strategy `x` with probability `p > 1/2`. If the rest of the game is not
/// already fully exploiting `e`, all other players form a coalition and every
/// opposite-parity member switches to the strategy that beats `x`; the
/// coalition's gain is `(2p - 1)(k + A)` where `k` counts `e`'s opponents and
/// `A` is `e`'s expected score with `x` against them. Otherwise every opponent
/// already plays the strategy beating `x` (`A = -k`) and `e` alone switches
/// to the other strategy, gaining `-2pA`.
pub fn find_profitable_coalition_deviation(
    profile: &MixedProfile,
) -> Result<Option<DeviationReport>, GameError> {
    let players = profile.players();
    if players < 2 {
        return Err(GameError::TooFewPlayers { players, min: 2 });
    }
    let h = half();
    let mut target: Option<(PlayerIndex, BigRational)> = None;
    for p in profile.players_iter() {
        let bias = (&profile.lower[p.slot()] - &h).abs();
        if bias.is_zero() {
            continue;
        }
        if target.as_ref().is_none_or(|(_, b)| bias > *b) {
            target = Some((p, bias));
        }
    }
    let Some((biased, _)) = target else {
        return Ok(None);
    };

    let q = &profile.lower[biased.slot()];
    let (favoured, p) = if *q > h {
        (biased.lower_strategy(), q.clone())
    } else {
        (biased.upper_strategy(), BigRational::one() - q)
    };
    let opponents = profile.mass(|o| o.is_even() != biased.is_even());
    let opponent_count = BigRational::from_integer(BigInt::from(
        profile
            .players_iter()
            .filter(|o| o.is_even() != biased.is_even())
            .count(),
    ));
    let score = payoff_against(favoured, &opponents);
    let two = BigRational::from_integer(BigInt::from(2));

    let exploit_gain = (&two * &p - BigRational::one()) * (&opponent_count + &score);
    if exploit_gain.is_positive() {
        let counter = favoured.beaten_by();
        let (coalition, deviation) = profile
            .players_iter()
            .filter(|&o| o != biased)
            .map(|o| {
                let s = if o.is_even() != biased.is_even() {
                    counter
                } else {
                    more_likely(profile, o)
                };
                (o, s)
            })
            .unzip();
        return Ok(Some(DeviationReport {
            coalition,
            deviation,
            gain: exploit_gain,
        }));
    }

    let escape_gain = -(two * p * score);
    Ok(Some(DeviationReport {
        coalition: vec![biased],
        deviation: vec![favoured.flipped()],
        gain: escape_gain,
    }))
}

fn more_likely(profile: &MixedProfile, player: PlayerIndex) -> Strategy {
    if profile.lower[player.slot()] >= half() {
        player.lower_strategy()
    } else {
        player.upper_strategy()
    }
}

/// Integer reward payout for one reveal phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardSplit {
    /// One share per revealer, aligned with the assignments passed in.
    pub shares: Vec<u64>,
    /// Fee left over by floor division; always below `n'^2`.
    pub dust: u64,
}

/// Integer reward for a revealer who played `s`: the real-valued reward
/// `(fee / n') * (1 + u / n')` rounded down.
pub fn reward_share(counts: &StrategyCounts, s: Strategy, fee: u64) -> Result<u64, GameError> {
    let revealers = counts.n_prime();
    if revealers == 0 {
        return Err(GameError::NoRevealers);
    }
    let u = utility_from_counts(counts, s)?;
    let n = i128::from(revealers);
    // u >= -(n' - 1), so the numerator is strictly positive.
    let numerator = i128::from(fee) * (n + i128::from(u));
    Ok((numerator / (n * n)) as u64)
}

/// Splits `fee` among the revealers whose strategies are listed in
/// `assignments`. The assignments must tally exactly to `counts`.
pub fn reward_shares(
    counts: &StrategyCounts,
    assignments: &[Strategy],
    fee: u64,
) -> Result<RewardSplit, GameError> {
    if counts.n_prime() == 0 {
        return Err(GameError::NoRevealers);
    }
    let mut tally = StrategyCounts::default();
    for &s in assignments {
        tally.record(s);
    }
    if tally != *counts {
        return Err(GameError::CountsMismatch);
    }
    let shares = assignments
        .iter()
        .map(|&s| reward_share(counts, s, fee))
        .collect::<Result<Vec<_>, _>>()?;
    let paid: u64 = shares.iter().sum();
    Ok(RewardSplit {
        shares,
        dust: fee - paid,
    })
}

/// Dust left in escrow once every revealer has claimed: `fee` minus the sum
/// of all shares.
pub fn reward_dust(counts: &StrategyCounts, fee: u64) -> Result<u64, GameError> {
    if counts.n_prime() == 0 {
        return Err(GameError::NoRevealers);
    }
    let mut paid = 0u64;
    for s in Strategy::ALL {
        let k = counts.get(s);
        if k > 0 {
            paid += k * reward_share(counts, s, fee)?;
        }
    }
    Ok(fee - paid)
}
