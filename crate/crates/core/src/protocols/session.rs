use super::transcript::{Payload, PayloadKind, ProtocolCounters, ProtocolKind, ProtocolMessage, TranscriptMode, TranscriptRecord};
use super::{HelperDirectory, HelperParty, Initiator, KeyRing, PartyId, ProtocolError};
use crate::crypto::{KeyId, PublicKey, SystemParams};
use crate::rng::RngStream;

/// Logical position of a protocol invocation, e.g. `defense/di/2/sample/17`.
///
/// The session nonce and every party's randomness for that session are derived
/// from the scope, so results do not depend on execution order.
#[derive(Clone, Debug)]
pub struct Scope {
    path: String,
    stream: RngStream,
}

impl Scope {
    pub fn root(label: &str) -> Self {
        Self {
            path: label.to_string(),
            stream: RngStream::from_seed(0).fork(label),
        }
    }

    pub fn child(&self, label: &str) -> Self {
        Self {
            path: format!("{}/{label}", self.path),
            stream: self.stream.fork(label),
        }
    }

    pub fn index(&self, label: &str, index: u64) -> Self {
        Self {
            path: format!("{}/{label}/{index}", self.path),
            stream: self.stream.fork_indexed(label, index),
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn nonce(&self) -> u64 {
        self.stream.fingerprint()
    }
}

/// Everything a phase needs to run protocols: public keys, CP's shares, and
/// which helper answers for which key.
pub struct ProtocolContext<'a> {
    pub ring: &'a KeyRing,
    pub initiator: &'a Initiator,
    pub helpers: HelperDirectory<'a>,
    /// The common key `pk` all operands are normalized to.
    pub common: KeyId,
    pub mode: TranscriptMode,
}

impl<'a> ProtocolContext<'a> {
    pub fn params(&self) -> &'a SystemParams {
        &self.ring.params
    }

    /// Opens a session for exactly one top-level protocol invocation.
    pub fn open(&self, scope: &Scope) -> ProtocolSession<'_, 'a> {
        let nonce = scope.nonce();
        ProtocolSession {
            ctx: self,
            label: scope.path().to_string(),
            nonce,
            cp_rng: self.initiator.rng_root().fork_indexed("session", nonce),
            seq: 0,
            log: SessionLog::default(),
        }
    }
}

/// Counters and transcript records produced by one session.
#[derive(Clone, Debug, Default)]
pub struct SessionLog {
    pub counters: ProtocolCounters,
    pub records: Vec<TranscriptRecord>,
}

pub struct ProtocolSession<'c, 'a> {
    ctx: &'c ProtocolContext<'a>,
    label: String,
    nonce: u64,
    pub(crate) cp_rng: RngStream,
    seq: u32,
    log: SessionLog,
}

impl<'c, 'a> ProtocolSession<'c, 'a> {
    pub fn nonce(&self) -> u64 {
        self.nonce
    }

    pub fn params(&self) -> &'a SystemParams {
        self.ctx.params()
    }

    pub(crate) fn common(&self) -> &'c KeyId {
        &self.ctx.common
    }

    pub(crate) fn initiator(&self) -> &'a Initiator {
        self.ctx.initiator
    }

    pub(crate) fn public_key(&self, id: &KeyId) -> Result<&'a PublicKey, ProtocolError> {
        self.ctx.ring.get(id)
    }

    pub(crate) fn helper(&self, key: &KeyId) -> Result<&'a HelperParty, ProtocolError> {
        self.ctx.helpers.helper_for(key)
    }

    /// Randomness of `helper` for the `step`-th reply in this session.
    pub(crate) fn helper_rng(&self, helper: &HelperParty, step: u32) -> RngStream {
        helper
            .rng_root()
            .fork_indexed("session", self.nonce)
            .fork_indexed("reply", u64::from(step))
    }

    /// Counts an invocation. Normalization steps inside SADD, SMUL and SCOM
    /// count as STRA invocations of the same session.
    pub(crate) fn begin(&mut self, kind: ProtocolKind) {
        self.log.counters.bump(kind);
    }

    pub(crate) fn send(&mut self, protocol: ProtocolKind, message: &ProtocolMessage) {
        self.log.counters.messages += 1;
        self.seq += 1;
        let mode = self.ctx.mode;
        if mode == TranscriptMode::Off {
            return;
        }
        self.log.records.push(TranscriptRecord {
            session: self.label.clone(),
            seq: self.seq,
            protocol,
            sender: message.sender.clone(),
            receiver: message.receiver.clone(),
            kind: message.kind,
            digest: message.payload.digest(),
            payload: (mode == TranscriptMode::Full).then(|| message.payload.clone()),
        });
    }

    pub(crate) fn message(sender: &PartyId, receiver: &PartyId, kind: PayloadKind, payload: Payload) -> ProtocolMessage {
        ProtocolMessage {
            sender: sender.clone(),
            receiver: receiver.clone(),
            kind,
            payload,
        }
    }

    pub(crate) fn seq(&self) -> u32 {
        self.seq
    }

    pub fn finish(self) -> SessionLog {
        self.log
    }
}
