//! Random bit generation on a proof-of-work chain: the incentive game, the
//! commit-reveal contract, a discrete-event chain simulator and the
//! participant behaviours used to attack it.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod chainsim;
pub mod commitment;
pub mod game;
pub mod protocol;
pub mod stats;

pub use commitment::{commit, verify_reveal, Commitment, CommitmentInput};
pub use game::{MixedProfile, PlayerIndex, RbgOutcome, Strategy, StrategyCounts};
pub use protocol::{AccountId, Config, Ledger, Millis, Money, OutputKind, Rbgc, RequestId};
