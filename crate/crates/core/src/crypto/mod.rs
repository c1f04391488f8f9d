//! Additively homomorphic multi-key cryptosystem with a splittable trapdoor.
//!
//! All keys share the modulus `N = pq` and the base `g = a^{2N} mod N²`. Party
//! `i` publishes `h_i = g^{θ_i}` and keeps `θ_i`. A ciphertext of `m` under
//! `h` is `((1 + mN)·h^r, g^r) mod N²`, so componentwise products add
//! plaintexts and powers scale them.
//!
//! The KGC also holds `λ = lcm(p-1, q-1)`. Each key gets its own random split
//! `s1 + s2 ≡ δ (mod λN)` with `δ ≡ 0 (mod λ)` and `δ ≡ 1 (mod N)`. Raising the
//! first component to `s1` and to `s2` and multiplying the results leaves
//! exactly `1 + mN`; either power alone is masked by `h^{r·s_i}`.
//!
//! Plaintexts are residues mod `N` read as signed integers in `(-N/2, N/2)`;
//! encryption and decoding enforce `|m| <= B`.

mod cipher;
mod codec;
mod encoding;
mod keys;
mod params;
mod prime;

pub use cipher::{
    ct_add, ct_neg, ct_scalar_mul, ct_scalar_mul_i64, dec, dec_residue, enc, enc_residue, retag, sdec, trivial, trivial_residue,
    wdec,
    wdec_residue, Ciphertext, PartialDecryption,
};
pub use codec::{KeyMaterial, KeyRecord};
pub use encoding::{decode, encode, PlainScalar, ScaleTag};
pub use keys::{keygen_party, KeyId, KeyPair, PublicKey, SecretKey, ShareIndex, TrapdoorShare};
pub use params::{
    keygen_system, keygen_system_with, MasterKey, SystemParams, DEFAULT_BLIND_BITS, DEFAULT_DOMAIN_BITS,
    DEFAULT_SCALE, MAX_KEY_BITS, MIN_KEY_BITS,
};

#[derive(Debug, thiserror::Error)]
pub enum CryptoError {
    #[error("key size {bits} bits is too small (minimum {min}, and N/2 must exceed the blinded comparison range)")]
    KeySizeTooSmall { bits: u32, min: u32 },
    #[error("invalid system parameters: {0}")]
    InvalidParameters(String),
    #[error("plaintext {value} outside the domain [-{bound}, {bound}]")]
    DomainOverflow { value: String, bound: i64 },
    #[error("value {0} cannot be encoded")]
    NotEncodable(f64),
    #[error("key mismatch: expected {expected}, found {found}")]
    KeyMismatch { expected: KeyId, found: KeyId },
    #[error("scale tag mismatch: {left} vs {right}")]
    TagMismatch { left: ScaleTag, right: ScaleTag },
    #[error("partial decryptions must use one share of each index")]
    ShareMismatch,
    #[error("decryption failed: inputs are not consistent with this key")]
    DecodingFailure,
    #[error("key material: {0}")]
    Codec(String),
}
