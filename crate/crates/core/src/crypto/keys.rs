use std::fmt;
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use serde::{Deserialize, Serialize};

use super::{MasterKey, SystemParams};
use crate::rng::RngStream;

/// Label of the party a key belongs to, e.g. `pk`, `DI3`, `DU`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct KeyId(Arc<str>);

impl KeyId {
    pub fn new(label: &str) -> Self {
        Self(Arc::from(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for KeyId {
    fn from(label: &str) -> Self {
        Self::new(label)
    }
}

impl From<String> for KeyId {
    fn from(label: String) -> Self {
        Self(Arc::from(label))
    }
}

impl From<KeyId> for String {
    fn from(id: KeyId) -> Self {
        id.0.to_string()
    }
}

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyId({})", self.0)
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `(N, h)` with `h = g^θ`; `N` lives in [`SystemParams`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub id: KeyId,
    pub element: BigUint,
}

/// The party's own decryption exponent `θ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub id: KeyId,
    pub exponent: BigUint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShareIndex {
    First,
    Second,
}

impl fmt::Display for ShareIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShareIndex::First => f.write_str("1"),
            ShareIndex::Second => f.write_str("2"),
        }
    }
}

/// One additive half of the master trapdoor, bound to a key id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrapdoorShare {
    pub id: KeyId,
    pub index: ShareIndex,
    pub exponent: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
    pub share_1: TrapdoorShare,
    pub share_2: TrapdoorShare,
}

impl KeyPair {
    pub fn id(&self) -> &KeyId {
        &self.public.id
    }
}

/// Fresh per-party key under the shared modulus.
///
/// The two shares are a new random split of the master trapdoor: `share_1` is
/// uniform modulo `λN` and `share_2 = δ - share_1 (mod λN)`.
pub fn keygen_party(params: &SystemParams, master: &MasterKey, id: impl Into<KeyId>, seed: u64) -> KeyPair {
    let id = id.into();
    let mut rng = RngStream::from_seed(seed).fork(&format!("keygen/party/{id}"));
    let exponent = params.random_exponent(&mut rng);
    let element = params.generator().modpow(&exponent, params.modulus_sq());

    let first = rng.gen_biguint_below(&master.share_modulus);
    let second = (&master.delta + &master.share_modulus - &first) % &master.share_modulus;

    KeyPair {
        public: PublicKey {
            id: id.clone(),
            element,
        },
        secret: SecretKey {
            id: id.clone(),
            exponent,
        },
        share_1: TrapdoorShare {
            id: id.clone(),
            index: ShareIndex::First,
            exponent: first,
        },
        share_2: TrapdoorShare {
            id,
            index: ShareIndex::Second,
            exponent: second,
        },
    }
}
