use std::fmt;
use std::ops::AddAssign;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::PartyId;
use crate::crypto::{Ciphertext, PartialDecryption};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProtocolKind {
    Stra,
    Sadd,
    Smul,
    Scom,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Stra => "STRA",
            ProtocolKind::Sadd => "SADD",
            ProtocolKind::Smul => "SMUL",
            ProtocolKind::Scom => "SCOM",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    BlindedCiphertext,
    PartialDecryption,
    Reencryption,
    ComparisonBit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Ciphertext(Ciphertext),
    Partial(PartialDecryption),
    Bit(u8),
}

impl Payload {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Payload::Ciphertext(c) => c.to_bytes(),
            Payload::Partial(p) => p.to_bytes(),
            Payload::Bit(b) => vec![*b],
        }
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub sender: PartyId,
    pub receiver: PartyId,
    pub kind: PayloadKind,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TranscriptMode {
    /// Counters only.
    #[default]
    Off,
    /// One record per message with a SHA-256 digest of the payload.
    Digest,
    /// Digest records that also keep the payload, for leakage audits.
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct TranscriptRecord {
    pub session: String,
    pub seq: u32,
    pub protocol: ProtocolKind,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub kind: PayloadKind,
    pub digest: String,
    #[serde(skip)]
    pub payload: Option<Payload>,
}

/// Invocation and message counts, accumulated per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProtocolCounters {
    pub stra: u64,
    pub sadd: u64,
    pub smul: u64,
    pub scom: u64,
    pub messages: u64,
}

impl ProtocolCounters {
    pub(crate) fn bump(&mut self, kind: ProtocolKind) {
        match kind {
            ProtocolKind::Stra => self.stra += 1,
            ProtocolKind::Sadd => self.sadd += 1,
            ProtocolKind::Smul => self.smul += 1,
            ProtocolKind::Scom => self.scom += 1,
        }
    }
}

impl AddAssign for ProtocolCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.stra += rhs.stra;
        self.sadd += rhs.sadd;
        self.smul += rhs.smul;
        self.scom += rhs.scom;
        self.messages += rhs.messages;
    }
}

/// Accumulated counters and transcript records of many sessions.
#[derive(Clone, Debug, Default)]
pub struct ProtocolLog {
    pub mode: TranscriptMode,
    pub counters: ProtocolCounters,
    pub records: Vec<TranscriptRecord>,
}

impl ProtocolLog {
    pub fn new(mode: TranscriptMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn absorb(&mut self, session: super::SessionLog) {
        self.counters += session.counters;
        self.records.extend(session.records);
    }

    pub fn merge(&mut self, other: ProtocolLog) {
        self.counters += other.counters;
        self.records.extend(other.records);
    }

    /// One JSON object per line: session, seq, protocol, sender, receiver, kind, digest.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}
