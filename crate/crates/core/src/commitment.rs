//! Hash commitments binding a participant to a bit before the reveal phase.
//!
//! Wire format of the preimage (33 bytes):
//!
//! | bytes  | field                         |
//! |--------|-------------------------------|
//! | 0      | bit, `0x00` or `0x01`         |
//! | 1..17  | nonce                         |
//! | 17..25 | participant number, u64 BE    |
//! | 25..33 | request id, u64 BE            |
//!
//! The digest is SHA-256 of that preimage.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const NONCE_LEN: usize = 16;
pub const DIGEST_LEN: usize = 32;
pub const PREIMAGE_LEN: usize = 1 + NONCE_LEN + 8 + 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommitmentError {
    #[error("nonce must be {NONCE_LEN} bytes, got {0}")]
    NonceLength(usize),
    #[error("digest must be {DIGEST_LEN} bytes, got {0}")]
    DigestLength(usize),
    #[error("invalid hex: {0}")]
    Hex(hex::FromHexError),
}

pub type Nonce = [u8; NONCE_LEN];

/// Everything a participant hashes into its commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommitmentInput {
    pub bit: bool,
    pub nonce: Nonce,
    pub participant: u64,
    pub request_id: u64,
}

impl CommitmentInput {
    pub fn new(
        bit: bool,
        nonce: &[u8],
        participant: u64,
        request_id: u64,
    ) -> Result<Self, CommitmentError> {
        let nonce: Nonce = nonce
            .try_into()
            .map_err(|_| CommitmentError::NonceLength(nonce.len()))?;
        Ok(Self {
            bit,
            nonce,
            participant,
            request_id,
        })
    }

    pub fn preimage(&self) -> [u8; PREIMAGE_LEN] {
        let mut out = [0u8; PREIMAGE_LEN];
        out[0] = u8::from(self.bit);
        out[1..17].copy_from_slice(&self.nonce);
        out[17..25].copy_from_slice(&self.participant.to_be_bytes());
        out[25..33].copy_from_slice(&self.request_id.to_be_bytes());
        out
    }
}

/// A SHA-256 digest over a [`CommitmentInput`] preimage.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Commitment([u8; DIGEST_LEN]);

impl Commitment {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CommitmentError> {
        let digest: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CommitmentError::DigestLength(bytes.len()))?;
        Ok(Self(digest))
    }

    pub fn from_hex(s: &str) -> Result<Self, CommitmentError> {
        let bytes = hex::decode(s).map_err(CommitmentError::Hex)?;
        Self::from_bytes(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({})", self.to_hex())
    }
}

impl fmt::Display for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Commitment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Commitment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Commitment::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

pub fn commit(input: &CommitmentInput) -> Commitment {
    Commitment(Sha256::digest(input.preimage()).into())
}

/// True iff `input` opens `commitment`.
pub fn verify_reveal(input: &CommitmentInput, commitment: &Commitment) -> bool {
    commit(input) == *commitment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(bit: bool) -> CommitmentInput {
        CommitmentInput::new(bit, &[7u8; 16], 3, 42).unwrap()
    }

    #[test]
    fn preimage_layout() {
        let x = CommitmentInput::new(true, &[0xab; 16], 0x0102, 0x0a0b).unwrap();
        let bytes = x.preimage();
        assert_eq!(bytes[0], 1);
        assert!(bytes[1..17].iter().all(|&b| b == 0xab));
        assert_eq!(&bytes[17..25], &[0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(&bytes[25..33], &[0, 0, 0, 0, 0, 0, 0x0a, 0x0b]);
    }

    #[test]
    fn rejects_wrong_nonce_length() {
        assert_eq!(
            CommitmentInput::new(false, &[0u8; 15], 1, 0),
            Err(CommitmentError::NonceLength(15))
        );
        assert!(Commitment::from_bytes(&[0u8; 31]).is_err());
        assert!(Commitment::from_hex("zz").is_err());
    }

    #[test]
    fn reveal_checks() {
        let x = input(false);
        let c = commit(&x);
        assert_eq!(c, commit(&x));
        assert!(verify_reveal(&x, &c));
        assert!(!verify_reveal(&input(true), &c));
        assert_ne!(commit(&input(true)), c);
        let other_request = CommitmentInput {
            request_id: 43,
            ..x
        };
        assert!(!verify_reveal(&other_request, &c));
        let other_participant = CommitmentInput {
            participant: 4,
            ..x
        };
        assert!(!verify_reveal(&other_participant, &c));
    }

    #[test]
    fn hex_round_trip() {
        let c = commit(&input(true));
        assert_eq!(Commitment::from_hex(&c.to_hex()).unwrap(), c);
    }
}
