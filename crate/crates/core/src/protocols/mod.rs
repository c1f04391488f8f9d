//! Two-party secure computation between CP and a helper that holds the second
//! trapdoor share of the operand key.
//!
//! Every protocol first brings its operands under the common key `pk` with
//! [`stra`], then works under `pk`:
//!
//! * [`stra`]: CP adds a uniform blind `r`, sends the blinded ciphertext and its
//!   first partial decryption; the helper finishes decryption of `w + r` and
//!   re-encrypts it under the target key; CP strips `r` homomorphically.
//! * [`sadd`]: key normalization followed by local homomorphic addition.
//! * [`smul`]: CP blinds both factors additively; the helper multiplies the
//!   blinded plaintexts and re-encrypts; CP removes the cross terms.
//! * [`scom`]: CP sends `s·r·(2(a-b)+1)` with a random sign `s` and magnitude
//!   `r < 2^κ_blind`; the helper reports the sign of what it decrypts and CP
//!   corrects it with `s`. The operand is odd, so it is never zero, and `a = b`
//!   lands on the `>=` side.
//!
//! CP learns the comparison bit in the clear; tree paths and defense decisions
//! are therefore visible to CP, as in the protocol this reproduces.

mod ops;
mod party;
mod session;
mod transcript;

pub use ops::{normalize, sadd, scom, smul, stra, ComparisonResult};
pub use party::{HelperDirectory, HelperParty, Initiator, KeyRing, PartyId};
pub use session::{ProtocolContext, ProtocolSession, Scope, SessionLog};
pub use transcript::{
    Payload, PayloadKind, ProtocolCounters, ProtocolKind, ProtocolLog, ProtocolMessage, TranscriptMode,
    TranscriptRecord,
};

use crate::crypto::{CryptoError, KeyId, ScaleTag};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("no helper registered for key {0}")]
    NoHelper(KeyId),
    #[error("party {party} does not hold share {index} of key {key}")]
    MissingShare { party: PartyId, key: KeyId, index: u8 },
    #[error("unknown public key {0}")]
    UnknownKey(KeyId),
    #[error("operand tags differ: {0} vs {1}")]
    TagMismatch(ScaleTag, ScaleTag),
    #[error("secure multiplication needs unit-scale operands, got {0}")]
    ScaledProduct(ScaleTag),
    #[error("malformed {protocol} request: {detail}")]
    MalformedRequest { protocol: ProtocolKind, detail: String },
    #[error("blinded comparison operand decrypted to zero")]
    DegenerateComparison,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}
