//! Scenario files: JSON with a version field and explicit, unit-suffixed
//! names. Unknown fields are rejected so typos fail loudly.

use std::path::Path;

use num_rational::Ratio;
use rbgc_core::agents::AgentPolicy;
use rbgc_core::chainsim::{Chain, MinerSpec, SimParams, TxFilter};
use rbgc_core::protocol::{Config, Millis, Money, Rbgc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub sim: SimSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    pub requests: RequestSection,
    pub miners: Vec<MinerEntry>,
    #[serde(default)]
    pub agents: Vec<AgentEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_gen_ms: Millis,
    /// Requests arrive during `[0, duration_ms)`; the run then continues
    /// until every request has settled.
    pub duration_ms: Millis,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub t_min_blocks: u64,
    pub t_reg_blocks: u64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            t_min_blocks: 10,
            t_reg_blocks: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestSection {
    /// Requested random bits per second of simulated time.
    pub rate_bits_per_s: f64,
    #[serde(default = "one")]
    pub bits_per_request: usize,
    pub fee: Money,
    pub value_bound: Money,
    /// Deadline set by the client, measured from the moment it broadcasts
    /// the request. Defaults to `t_min_blocks + 1`.
    #[serde(default)]
    pub deadline_offset_blocks: Option<u64>,
    /// Defaults to exactly enough for every scheduled request.
    #[serde(default)]
    pub client_balance: Option<Money>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerEntry {
    /// Fraction of the total hash rate, written `"a/b"`.
    pub hash_power: String,
    #[serde(default)]
    pub censor: Option<CensorKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorKind {
    All,
    Reveals,
    Registrations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentEntry {
    #[serde(flatten)]
    pub policy: AgentPolicy,
    #[serde(default = "one")]
    pub count: usize,
    /// Defaults to one deposit per identity per scheduled request.
    #[serde(default)]
    pub balance: Option<Money>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: &str| Err(ScenarioError::Invalid(msg.into()));
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Version(self.schema_version));
        }
        if self.sim.t_gen_ms == 0 {
            return invalid("sim.t_gen_ms must be positive");
        }
        self.config()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let r = &self.requests;
        if !(r.rate_bits_per_s.is_finite() && r.rate_bits_per_s >= 0.0) {
            return invalid("requests.rate_bits_per_s must be finite and non-negative");
        }
        if r.bits_per_request == 0 {
            return invalid("requests.bits_per_request must be at least 1");
        }
        if self.deadline_offset() < self.config().expect("checked").t_min {
            return invalid("requests.deadline_offset_blocks is below t_min_blocks");
        }
        if self.miners.is_empty() {
            return invalid("at least one miner is required");
        }
        let params = SimParams {
            t_gen: self.sim.t_gen_ms,
            seed: 0,
            duration: self.sim.duration_ms,
        };
        let engine = Rbgc::new(self.config().expect("checked"));
        Chain::new(params, self.miner_specs()?, engine)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        for a in &self.agents {
            if a.policy.identities() == 0 {
                return invalid("sybil coalition without members");
            }
        }
        Ok(())
    }

    pub fn config(&self) -> Result<Config, rbgc_core::protocol::ProtocolError> {
        let t = self.sim.t_gen_ms;
        Config::new(
            self.protocol.t_min_blocks.saturating_mul(t),
            self.protocol.t_reg_blocks.saturating_mul(t),
        )
    }

    pub fn deadline_offset(&self) -> Millis {
        let blocks = self
            .requests
            .deadline_offset_blocks
            .unwrap_or(self.protocol.t_min_blocks + 1);
        blocks.saturating_mul(self.sim.t_gen_ms)
    }

    pub fn miner_specs(&self) -> Result<Vec<MinerSpec>, ScenarioError> {
        self.miners
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let power: Ratio<u64> = m.hash_power.trim().parse().map_err(|_| {
                    ScenarioError::Invalid(format!("miner {i}: bad hash_power {:?}", m.hash_power))
                })?;
                let id = i as u32;
                Ok(match m.censor {
                    None => MinerSpec::honest(id, power),
                    Some(CensorKind::All) => MinerSpec::censor(id, power, TxFilter::All),
                    Some(CensorKind::Reveals) => MinerSpec::censor(id, power, TxFilter::Reveals),
                    Some(CensorKind::Registrations) => {
                        MinerSpec::censor(id, power, TxFilter::Registrations)
                    }
                })
            })
            .collect()
    }

    /// Broadcast times of the client's requests, evenly spaced at the
    /// configured bit rate.
    pub fn arrivals(&self) -> Vec<Millis> {
        let r = &self.requests;
        if r.rate_bits_per_s == 0.0 {
            return Vec::new();
        }
        let per_second = r.rate_bits_per_s / r.bits_per_request as f64;
        let count = (self.sim.duration_ms as f64 / 1000.0 * per_second).ceil() as u64;
        (0..count)
            .map(|k| (k as f64 * 1000.0 / per_second).floor() as Millis)
            .filter(|&t| t < self.sim.duration_ms)
            .collect()
    }

    /// A single honest miner, the given agents, and a request stream.
    pub fn simple(
        t_gen_ms: Millis,
        duration_ms: Millis,
        rate_bits_per_s: f64,
        agents: Vec<AgentEntry>,
    ) -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            sim: SimSection {
                t_gen_ms,
                duration_ms,
                seed: 0,
            },
            protocol: ProtocolSection::default(),
            requests: RequestSection {
                rate_bits_per_s,
                bits_per_request: 1,
                fee: 1_600,
                value_bound: 500,
                deadline_offset_blocks: None,
                client_balance: None,
            },
            miners: vec![MinerEntry {
                hash_power: "1/1".into(),
                censor: None,
            }],
            agents,
        }
    }
}

impl AgentEntry {
    pub fn new(policy: AgentPolicy, count: usize) -> Self {
        Self {
            policy,
            count,
            balance: None,
        }
    }
}
