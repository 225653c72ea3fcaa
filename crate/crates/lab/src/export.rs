//! Writers for `metrics.csv`, `trace.csv` and `audit.json`.
//!
//! Every writer is a pure function of its input, so equal runs produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use rbgc_core::chainsim::{Block, Receipt, Tx, TxEffect};
use serde::Serialize;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const AUDIT_FILE: &str = "audit.json";

/// One line of `trace.csv`: either a block header or a transaction it
/// included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub row: &'static str,
    pub height: u64,
    pub time_ms: u64,
    pub miner: u32,
    pub tx: &'static str,
    pub request: Option<u64>,
    pub participant: Option<u64>,
    pub submitted_ms: Option<u64>,
    pub status: &'static str,
    pub detail: String,
}

pub fn trace_rows(blocks: &[Block]) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    for b in blocks {
        rows.push(TraceRow {
            row: "block",
            height: b.height,
            time_ms: b.timestamp,
            miner: b.miner.0,
            tx: "",
            request: None,
            participant: None,
            submitted_ms: None,
            status: "",
            detail: format!("{} txs", b.transactions.len()),
        });
        for r in &b.transactions {
            rows.push(tx_row("tx", b.height, b.timestamp, b.miner.0, r));
        }
    }
    rows
}

/// A receipt as a trace line. Off-chain drivers pass height and miner 0.
pub fn tx_row(
    row: &'static str,
    height: u64,
    time_ms: u64,
    miner: u32,
    receipt: &Receipt,
) -> TraceRow {
    let participant = match (&receipt.tx, &receipt.result) {
        (Tx::Reveal { participant, .. }, _)
        | (Tx::ReturnDeposit { participant, .. }, _)
        | (Tx::RequestReward { participant, .. }, _) => Some(*participant),
        (Tx::Register { .. }, Ok(TxEffect::Registered { participant })) => Some(*participant),
        _ => None,
    };
    let request = match (&receipt.tx, &receipt.result) {
        (_, Ok(TxEffect::Opened { requests })) => requests.first().map(|r| r.0),
        (tx, _) => tx.request().map(|r| r.0),
    };
    let (status, detail) = match &receipt.result {
        Ok(effect) => ("ok", describe(effect)),
        Err(e) => ("error", e.to_string()),
    };
    TraceRow {
        row,
        height,
        time_ms,
        miner,
        tx: receipt.tx.kind(),
        request,
        participant,
        submitted_ms: Some(receipt.submitted_at),
        status,
        detail,
    }
}

fn describe(effect: &TxEffect) -> String {
    match effect {
        TxEffect::Opened { requests } => match requests.as_slice() {
            [one] => format!("opened {}", one.0),
            many => format!("opened {}..={}", many[0].0, many[many.len() - 1].0),
        },
        TxEffect::Registered { participant } => format!("participant {participant}"),
        TxEffect::Revealed => "revealed".into(),
        TxEffect::DepositReturned { amount } => format!("deposit {amount}"),
        TxEffect::RewardPaid { amount } => format!("reward {amount}"),
        TxEffect::Output { output } => match output.bit() {
            Some(bit) => format!("{} bit={}", output.label(), u8::from(bit)),
            None => output.label().into(),
        },
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a CSV with a fixed header even when there are no rows.
pub fn write_csv_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        w.flush()?;
        return Ok(());
    }
    write_csv(path, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub const METRICS_HEADER: &[&str] = &[
    "request_id",
    "created_ms",
    "deadline_ms",
    "settled_ms",
    "processing_ms",
    "settlement",
    "bit",
    "registrants",
    "revealed",
    "compensation",
    "refund",
];

pub const TRACE_HEADER: &[&str] = &[
    "row",
    "height",
    "time_ms",
    "miner",
    "tx",
    "request",
    "participant",
    "submitted_ms",
    "status",
    "detail",
];

/// Writes the three standard files for one simulation run.
pub fn write_run(dir: &Path, out: &crate::sim::SimOutput) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_csv_with_header(&dir.join(METRICS_FILE), METRICS_HEADER, &out.metrics)?;
    write_csv_with_header(
        &dir.join(TRACE_FILE),
        TRACE_HEADER,
        &trace_rows(&out.blocks),
    )?;
    write_json(&dir.join(AUDIT_FILE), &out.audit)
}
