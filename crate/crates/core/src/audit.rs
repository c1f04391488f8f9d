//! Decryption with every party's own secret key, for oracle tests and
//! experiment bookkeeping. Compiled only with the `audit` feature.

use std::collections::BTreeMap;

use crate::crypto::{dec, dec_residue, Ciphertext, CryptoError, KeyId, PlainScalar, SecretKey, SystemParams};
use num_bigint::BigUint;

#[derive(Clone, Debug)]
pub struct AuditKeys {
    params: SystemParams,
    secrets: BTreeMap<KeyId, SecretKey>,
}

impl AuditKeys {
    pub fn new(params: SystemParams) -> Self {
        Self {
            params,
            secrets: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, sk: SecretKey) {
        self.secrets.insert(sk.id.clone(), sk);
    }

    fn secret(&self, key: &KeyId) -> Result<&SecretKey, CryptoError> {
        self.secrets.get(key).ok_or_else(|| CryptoError::Codec(format!("no audit key for {key}")))
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<PlainScalar, CryptoError> {
        dec(&self.params, self.secret(&c.key)?, c)
    }

    pub fn value(&self, c: &Ciphertext) -> Result<i64, CryptoError> {
        Ok(self.decrypt(c)?.value)
    }

    pub fn residue(&self, c: &Ciphertext) -> Result<BigUint, CryptoError> {
        dec_residue(&self.params, self.secret(&c.key)?, c)
    }
}
