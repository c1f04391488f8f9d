use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigUint, Sign};
use serde::{Serialize, Serializer};

use super::{Payload, PayloadKind, ProtocolError, ProtocolKind, ProtocolMessage};
use crate::crypto::{
    enc_residue, sdec, wdec_residue, Ciphertext, KeyId, PartialDecryption, PublicKey, ScaleTag, ShareIndex,
    SystemParams, TrapdoorShare,
};
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartyId(Arc<str>);

impl PartyId {
    pub fn new(label: &str) -> Self {
        Self(Arc::from(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PartyId {
    fn from(label: &str) -> Self {
        Self::new(label)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for PartyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Public parameters plus every registered public key.
#[derive(Clone, Debug)]
pub struct KeyRing {
    pub params: SystemParams,
    keys: BTreeMap<KeyId, PublicKey>,
}

impl KeyRing {
    pub fn new(params: SystemParams) -> Self {
        Self {
            params,
            keys: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, pk: PublicKey) {
        self.keys.insert(pk.id.clone(), pk);
    }

    pub fn get(&self, id: &KeyId) -> Result<&PublicKey, ProtocolError> {
        self.keys.get(id).ok_or_else(|| ProtocolError::UnknownKey(id.clone()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &KeyId> {
        self.keys.keys()
    }
}

/// CP's side: the first trapdoor share of every key it coordinates.
#[derive(Clone, Debug)]
pub struct Initiator {
    pub id: PartyId,
    shares: BTreeMap<KeyId, TrapdoorShare>,
    rng_root: RngStream,
}

impl Initiator {
    pub fn new(id: PartyId, seed: u64) -> Self {
        let rng_root = RngStream::from_seed(seed).fork(&format!("party/{id}"));
        Self {
            id,
            shares: BTreeMap::new(),
            rng_root,
        }
    }

    pub fn add_share(&mut self, share: TrapdoorShare) {
        assert_eq!(share.index, ShareIndex::First, "CP holds first shares only");
        self.shares.insert(share.id.clone(), share);
    }

    pub fn holds(&self, key: &KeyId) -> bool {
        self.shares.contains_key(key)
    }

    pub(crate) fn share(&self, key: &KeyId) -> Result<&TrapdoorShare, ProtocolError> {
        self.shares.get(key).ok_or_else(|| ProtocolError::MissingShare {
            party: self.id.clone(),
            key: key.clone(),
            index: 1,
        })
    }

    pub(crate) fn rng_root(&self) -> &RngStream {
        &self.rng_root
    }
}

/// A party answering CP's requests with the second share of some keys.
#[derive(Clone, Debug)]
pub struct HelperParty {
    pub id: PartyId,
    shares: BTreeMap<KeyId, TrapdoorShare>,
    rng_root: RngStream,
}

impl HelperParty {
    pub fn new(id: PartyId, seed: u64) -> Self {
        let rng_root = RngStream::from_seed(seed).fork(&format!("party/{id}"));
        Self {
            id,
            shares: BTreeMap::new(),
            rng_root,
        }
    }

    pub fn add_share(&mut self, share: TrapdoorShare) {
        assert_eq!(share.index, ShareIndex::Second, "helpers hold second shares only");
        self.shares.insert(share.id.clone(), share);
    }

    pub fn holds(&self, key: &KeyId) -> bool {
        self.shares.contains_key(key)
    }

    fn share(&self, key: &KeyId) -> Result<&TrapdoorShare, ProtocolError> {
        self.shares.get(key).ok_or_else(|| ProtocolError::MissingShare {
            party: self.id.clone(),
            key: key.clone(),
            index: 2,
        })
    }

    pub(crate) fn rng_root(&self) -> &RngStream {
        &self.rng_root
    }

    /// Finishes the joint decryption of a blinded ciphertext to its raw residue.
    fn open_blinded(
        &self,
        params: &SystemParams,
        blinded: &Ciphertext,
        partial: &PartialDecryption,
    ) -> Result<BigUint, ProtocolError> {
        let own = sdec(params, self.share(&blinded.key)?, blinded)?;
        Ok(wdec_residue(params, partial, &own)?)
    }

    /// Answers one request from CP.
    ///
    /// * STRA: `[blinded, partial]`, replies with the blinded value re-encrypted under `target`.
    /// * SMUL: `[blinded a, partial a, blinded b, partial b]`, replies with the
    ///   product of the blinded values encrypted under `target`.
    /// * SCOM: `[blinded d, partial d]`, replies with 1 iff `d` decrypts negative.
    pub fn handle(
        &self,
        params: &SystemParams,
        protocol: ProtocolKind,
        request: &[ProtocolMessage],
        target: &PublicKey,
        rng: &mut RngStream,
    ) -> Result<ProtocolMessage, ProtocolError> {
        let pairs = blinded_pairs(protocol, request)?;
        let (kind, payload) = match (protocol, pairs.as_slice()) {
            (ProtocolKind::Stra, [(c, p)]) => {
                let w = self.open_blinded(params, c, p)?;
                let reply = enc_residue(params, target, &w, c.tag, rng);
                (PayloadKind::Reencryption, Payload::Ciphertext(reply))
            }
            (ProtocolKind::Smul, [(ca, pa), (cb, pb)]) => {
                let a = self.open_blinded(params, ca, pa)?;
                let b = self.open_blinded(params, cb, pb)?;
                let product = a * b % params.modulus();
                let reply = enc_residue(params, target, &product, ScaleTag::Unit, rng);
                (PayloadKind::Reencryption, Payload::Ciphertext(reply))
            }
            (ProtocolKind::Scom, [(c, p)]) => {
                let v = params.signed_value(&self.open_blinded(params, c, p)?);
                let bit = match v.sign() {
                    Sign::Minus => 1,
                    Sign::Plus => 0,
                    Sign::NoSign => return Err(ProtocolError::DegenerateComparison),
                };
                (PayloadKind::ComparisonBit, Payload::Bit(bit))
            }
            _ => {
                return Err(ProtocolError::MalformedRequest {
                    protocol,
                    detail: format!("{} blinded operands", pairs.len()),
                })
            }
        };
        Ok(ProtocolMessage {
            sender: self.id.clone(),
            receiver: request[0].sender.clone(),
            kind,
            payload,
        })
    }
}

/// Splits a request into `(blinded ciphertext, partial decryption)` pairs.
fn blinded_pairs(
    protocol: ProtocolKind,
    request: &[ProtocolMessage],
) -> Result<Vec<(&Ciphertext, &PartialDecryption)>, ProtocolError> {
    let malformed = |detail: &str| ProtocolError::MalformedRequest {
        protocol,
        detail: detail.to_string(),
    };
    if request.is_empty() || !request.len().is_multiple_of(2) {
        return Err(malformed("expected blinded ciphertext and partial decryption pairs"));
    }
    request
        .chunks(2)
        .map(|pair| match (&pair[0].kind, &pair[0].payload, &pair[1].kind, &pair[1].payload) {
            (PayloadKind::BlindedCiphertext, Payload::Ciphertext(c), PayloadKind::PartialDecryption, Payload::Partial(p)) => {
                Ok((c, p))
            }
            _ => Err(malformed("payload kinds out of order")),
        })
        .collect()
}

/// Which helper answers for which key during one phase.
#[derive(Clone, Debug, Default)]
pub struct HelperDirectory<'a> {
    routes: BTreeMap<KeyId, &'a HelperParty>,
}

impl<'a> HelperDirectory<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn route(&mut self, key: KeyId, helper: &'a HelperParty) -> Result<(), ProtocolError> {
        helper.share(&key)?;
        self.routes.insert(key, helper);
        Ok(())
    }

    pub fn helper_for(&self, key: &KeyId) -> Result<&'a HelperParty, ProtocolError> {
        self.routes.get(key).copied().ok_or_else(|| ProtocolError::NoHelper(key.clone()))
    }
}
