use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::{CryptoError, KeyId, PlainScalar, PublicKey, ScaleTag, SecretKey, ShareIndex, SystemParams, TrapdoorShare};

/// `((1 + mN)·h^r, g^r) mod N²` under the key named by `key`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub a: BigUint,
    pub b: BigUint,
    pub key: KeyId,
    pub tag: ScaleTag,
}

impl Ciphertext {
    /// Canonical byte encoding used for transcripts and digests.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        push_field(&mut out, self.key.as_str().as_bytes());
        out.push(match self.tag {
            ScaleTag::Unit => 0,
            ScaleTag::Scaled => 1,
        });
        push_field(&mut out, &self.a.to_bytes_be());
        push_field(&mut out, &self.b.to_bytes_be());
        out
    }

    pub fn is_well_formed(&self, params: &SystemParams) -> bool {
        &self.a < params.modulus_sq() && &self.b < params.modulus_sq()
    }
}

fn push_field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

/// `c^{share} mod N²`, computed on the first component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialDecryption {
    pub value: BigUint,
    pub key: KeyId,
    pub index: ShareIndex,
}

impl PartialDecryption {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        push_field(&mut out, self.key.as_str().as_bytes());
        out.push(match self.index {
            ShareIndex::First => 1,
            ShareIndex::Second => 2,
        });
        push_field(&mut out, &self.value.to_bytes_be());
        out
    }
}

fn check_key(expected: &KeyId, found: &KeyId) -> Result<(), CryptoError> {
    if expected != found {
        return Err(CryptoError::KeyMismatch {
            expected: expected.clone(),
            found: found.clone(),
        });
    }
    Ok(())
}

/// `1 + mN mod N²` for a residue `m`.
fn message_term(params: &SystemParams, residue: &BigUint) -> BigUint {
    (params.modulus() * residue + 1u32) % params.modulus_sq()
}

/// `L(x) = (x - 1) / N`, defined when `x ≡ 1 (mod N)`.
fn l_function(params: &SystemParams, x: &BigUint) -> Result<BigUint, CryptoError> {
    if x.is_zero() {
        return Err(CryptoError::DecodingFailure);
    }
    let (quotient, remainder) = (x - 1u32).div_rem(params.modulus());
    if !remainder.is_zero() {
        return Err(CryptoError::DecodingFailure);
    }
    Ok(quotient)
}

/// Encrypts an arbitrary residue of `Z_N`. Protocol code uses this for blinded
/// values that are deliberately outside the plaintext domain.
pub fn enc_residue<R: RngCore + ?Sized>(
    params: &SystemParams,
    pk: &PublicKey,
    residue: &BigUint,
    tag: ScaleTag,
    rng: &mut R,
) -> Ciphertext {
    let r = params.random_exponent(rng);
    let nsq = params.modulus_sq();
    let a = message_term(params, residue) * pk.element.modpow(&r, nsq) % nsq;
    let b = params.generator().modpow(&r, nsq);
    Ciphertext {
        a,
        b,
        key: pk.id.clone(),
        tag,
    }
}

pub fn enc<R: RngCore + ?Sized>(
    params: &SystemParams,
    pk: &PublicKey,
    m: PlainScalar,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    params.check_domain(m.value)?;
    Ok(enc_residue(params, pk, &params.residue_of_i64(m.value), m.tag, rng))
}

/// Deterministic encryption with zero randomness, `(1 + mN, 1)`. Only for public
/// constants folded into other ciphertexts; it hides nothing on its own.
pub fn trivial(params: &SystemParams, key: &KeyId, value: i64, tag: ScaleTag) -> Ciphertext {
    trivial_residue(params, key, &params.residue_of_i64(value), tag)
}

pub fn trivial_residue(params: &SystemParams, key: &KeyId, residue: &BigUint, tag: ScaleTag) -> Ciphertext {
    Ciphertext {
        a: message_term(params, residue),
        b: BigUint::one(),
        key: key.clone(),
        tag,
    }
}

/// Decrypts with the party's own exponent: `A · (B^θ)^{-1} = 1 + mN`.
pub fn dec_residue(params: &SystemParams, sk: &SecretKey, c: &Ciphertext) -> Result<BigUint, CryptoError> {
    check_key(&sk.id, &c.key)?;
    let nsq = params.modulus_sq();
    let mask = c.b.modpow(&sk.exponent, nsq);
    let inverse = mask.modinv(nsq).ok_or(CryptoError::DecodingFailure)?;
    l_function(params, &(&c.a * inverse % nsq))
}

pub fn dec(params: &SystemParams, sk: &SecretKey, c: &Ciphertext) -> Result<PlainScalar, CryptoError> {
    let residue = dec_residue(params, sk, c)?;
    Ok(PlainScalar {
        value: params.decode_residue(&residue)?,
        tag: c.tag,
    })
}

pub fn sdec(params: &SystemParams, share: &TrapdoorShare, c: &Ciphertext) -> Result<PartialDecryption, CryptoError> {
    check_key(&share.id, &c.key)?;
    Ok(PartialDecryption {
        value: c.a.modpow(&share.exponent, params.modulus_sq()),
        key: share.id.clone(),
        index: share.index,
    })
}

/// Combines the two partials into the raw residue in `Z_N`.
pub fn wdec_residue(
    params: &SystemParams,
    p1: &PartialDecryption,
    p2: &PartialDecryption,
) -> Result<BigUint, CryptoError> {
    check_key(&p1.key, &p2.key)?;
    if p1.index == p2.index {
        return Err(CryptoError::ShareMismatch);
    }
    l_function(params, &(&p1.value * &p2.value % params.modulus_sq()))
}

/// Combines the two partials and decodes into the signed plaintext domain.
/// Partials of different ciphertexts fail here instead of returning garbage.
pub fn wdec(
    params: &SystemParams,
    p1: &PartialDecryption,
    p2: &PartialDecryption,
    tag: ScaleTag,
) -> Result<PlainScalar, CryptoError> {
    let residue = wdec_residue(params, p1, p2)?;
    Ok(PlainScalar {
        value: params.decode_residue(&residue)?,
        tag,
    })
}

/// Homomorphic addition under a single key.
pub fn ct_add(params: &SystemParams, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, CryptoError> {
    check_key(&c1.key, &c2.key)?;
    if c1.tag != c2.tag {
        return Err(CryptoError::TagMismatch {
            left: c1.tag,
            right: c2.tag,
        });
    }
    let nsq = params.modulus_sq();
    Ok(Ciphertext {
        a: &c1.a * &c2.a % nsq,
        b: &c1.b * &c2.b % nsq,
        key: c1.key.clone(),
        tag: c1.tag,
    })
}

/// Homomorphic negation, i.e. scalar multiplication by `N - 1`, computed as the
/// componentwise inverse.
pub fn ct_neg(params: &SystemParams, c: &Ciphertext) -> Ciphertext {
    let nsq = params.modulus_sq();
    // One inversion of the product serves both components.
    let joint = (&c.a * &c.b % nsq)
        .modinv(nsq)
        .expect("ciphertext components are units");
    Ciphertext {
        a: &joint * &c.b % nsq,
        b: &joint * &c.a % nsq,
        key: c.key.clone(),
        tag: c.tag,
    }
}

/// `c^k`, decrypting to `k·m mod N`. Exponents above `N/2` stand for negative
/// multipliers and are applied as a small power of the inverse.
pub fn ct_scalar_mul(params: &SystemParams, c: &Ciphertext, k: &BigInt) -> Ciphertext {
    let residue = params.residue_of(k);
    let nsq = params.modulus_sq();
    let negative_magnitude = params.modulus() - &residue;
    if residue <= negative_magnitude {
        Ciphertext {
            a: c.a.modpow(&residue, nsq),
            b: c.b.modpow(&residue, nsq),
            key: c.key.clone(),
            tag: c.tag,
        }
    } else {
        let inverse = ct_neg(params, c);
        Ciphertext {
            a: inverse.a.modpow(&negative_magnitude, nsq),
            b: inverse.b.modpow(&negative_magnitude, nsq),
            key: c.key.clone(),
            tag: c.tag,
        }
    }
}

pub fn ct_scalar_mul_i64(params: &SystemParams, c: &Ciphertext, k: i64) -> Ciphertext {
    ct_scalar_mul(params, c, &BigInt::from(k))
}

/// Same ciphertext relabelled with another scale tag; the plaintext is unchanged.
pub fn retag(c: Ciphertext, tag: ScaleTag) -> Ciphertext {
    Ciphertext { tag, ..c }
}
