use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;

use super::prime::random_prime;
use super::CryptoError;
use crate::rng::RngStream;

pub const MIN_KEY_BITS: u32 = 128;
pub const MAX_KEY_BITS: u32 = 4096;
/// `B = 2^40`.
pub const DEFAULT_DOMAIN_BITS: u32 = 40;
pub const DEFAULT_BLIND_BITS: u32 = 40;
pub const DEFAULT_SCALE: i64 = 1000;

/// Public system parameters shared by every key: `N`, `N²`, the base `g`, and
/// the plaintext encoding constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    key_bits: u32,
    modulus: BigUint,
    modulus_sq: BigUint,
    half_modulus: BigUint,
    generator: BigUint,
    domain_bound: i64,
    blind_bits: u32,
    scale: i64,
}

impl SystemParams {
    /// Assembles and validates parameters, e.g. after deserialization.
    pub fn new(
        key_bits: u32,
        modulus: BigUint,
        generator: BigUint,
        domain_bound: i64,
        blind_bits: u32,
        scale: i64,
    ) -> Result<Self, CryptoError> {
        if key_bits < MIN_KEY_BITS {
            return Err(CryptoError::KeySizeTooSmall {
                bits: key_bits,
                min: MIN_KEY_BITS,
            });
        }
        if modulus.bits() != u64::from(key_bits) || modulus.is_even() {
            return Err(CryptoError::InvalidParameters(format!(
                "modulus must be odd with exactly {key_bits} bits"
            )));
        }
        if domain_bound <= 0 || scale < 1 || blind_bits == 0 {
            return Err(CryptoError::InvalidParameters(
                "domain bound, scale and blinding width must be positive".into(),
            ));
        }
        // The comparison protocol blinds 2(a-b)+1, whose magnitude is at most 4B+1,
        // by a factor below 2^blind_bits. That product must stay below N/2.
        let blinded_max = (BigUint::from(domain_bound as u64) * 4u32 + 2u32) << blind_bits;
        let half_modulus = &modulus >> 1;
        if blinded_max >= half_modulus {
            return Err(CryptoError::KeySizeTooSmall {
                bits: key_bits,
                min: MIN_KEY_BITS,
            });
        }
        let modulus_sq = &modulus * &modulus;
        if generator.is_zero() || generator.is_one() || generator >= modulus_sq {
            return Err(CryptoError::InvalidParameters("generator out of range".into()));
        }
        Ok(Self {
            key_bits,
            modulus,
            modulus_sq,
            half_modulus,
            generator,
            domain_bound,
            blind_bits,
            scale,
        })
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    /// `N`.
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// `N²`.
    pub fn modulus_sq(&self) -> &BigUint {
        &self.modulus_sq
    }

    /// The base `g`.
    pub fn generator(&self) -> &BigUint {
        &self.generator
    }

    /// `B`: plaintexts must satisfy `|m| <= B`.
    pub fn domain_bound(&self) -> i64 {
        self.domain_bound
    }

    pub fn blind_bits(&self) -> u32 {
        self.blind_bits
    }

    /// Fixed-point multiplier `S` for scaled values.
    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn check_domain(&self, value: i64) -> Result<(), CryptoError> {
        if value.unsigned_abs() > self.domain_bound as u64 {
            return Err(CryptoError::DomainOverflow {
                value: value.to_string(),
                bound: self.domain_bound,
            });
        }
        Ok(())
    }

    /// Residue of a signed integer in `[0, N)`.
    pub fn residue_of(&self, value: &BigInt) -> BigUint {
        let n = BigInt::from_biguint(Sign::Plus, self.modulus.clone());
        value
            .mod_floor(&n)
            .to_biguint()
            .expect("mod_floor is non-negative")
    }

    pub fn residue_of_i64(&self, value: i64) -> BigUint {
        if value >= 0 {
            BigUint::from(value as u64) % &self.modulus
        } else {
            let magnitude = BigUint::from(value.unsigned_abs()) % &self.modulus;
            if magnitude.is_zero() {
                magnitude
            } else {
                &self.modulus - magnitude
            }
        }
    }

    /// The unique representative of `residue` in `(-N/2, N/2)`.
    pub fn signed_value(&self, residue: &BigUint) -> BigInt {
        debug_assert!(residue < &self.modulus);
        if residue <= &self.half_modulus {
            BigInt::from_biguint(Sign::Plus, residue.clone())
        } else {
            -BigInt::from_biguint(Sign::Plus, &self.modulus - residue)
        }
    }

    /// Signed decoding restricted to the plaintext domain.
    pub fn decode_residue(&self, residue: &BigUint) -> Result<i64, CryptoError> {
        let signed = self.signed_value(residue);
        match signed.to_i64() {
            Some(v) if v.unsigned_abs() <= self.domain_bound as u64 => Ok(v),
            _ => Err(CryptoError::DomainOverflow {
                value: if signed.abs().bits() > 128 {
                    format!("<{}-bit value>", signed.bits())
                } else {
                    signed.to_string()
                },
                bound: self.domain_bound,
            }),
        }
    }

    /// Uniform element of `Z_N`.
    pub fn random_residue<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_below(&self.modulus)
    }

    /// Encryption randomness, uniform in `[1, N/4]`.
    pub(crate) fn random_exponent<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        let upper = (&self.modulus >> 2) + 1u32;
        rng.gen_biguint_range(&BigUint::one(), &upper)
    }
}

/// The KGC's master trapdoor `λ = lcm(p-1, q-1)` together with the split target
/// `δ`, where `δ ≡ 0 (mod λ)` and `δ ≡ 1 (mod N)`.
#[derive(Clone, Debug)]
pub struct MasterKey {
    pub(crate) lambda: BigUint,
    pub(crate) delta: BigUint,
    /// `λN`, the modulus the two trapdoor shares are drawn in.
    pub(crate) share_modulus: BigUint,
}

impl MasterKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }
}

/// Generates `N = pq` with `gcd(p-1, q-1) = 2` and the base `g = a^{2N} mod N²`.
///
/// Deterministic for a fixed seed.
pub fn keygen_system(key_bits: u32, seed: u64) -> Result<(SystemParams, MasterKey), CryptoError> {
    keygen_system_with(
        key_bits,
        seed,
        1i64 << DEFAULT_DOMAIN_BITS,
        DEFAULT_BLIND_BITS,
        DEFAULT_SCALE,
    )
}

pub fn keygen_system_with(
    key_bits: u32,
    seed: u64,
    domain_bound: i64,
    blind_bits: u32,
    scale: i64,
) -> Result<(SystemParams, MasterKey), CryptoError> {
    if key_bits < MIN_KEY_BITS {
        return Err(CryptoError::KeySizeTooSmall {
            bits: key_bits,
            min: MIN_KEY_BITS,
        });
    }
    if key_bits > MAX_KEY_BITS || !key_bits.is_multiple_of(2) {
        return Err(CryptoError::InvalidParameters(format!(
            "key size must be even and at most {MAX_KEY_BITS} bits, got {key_bits}"
        )));
    }
    let mut rng = RngStream::from_seed(seed).fork("keygen/system");
    let half = u64::from(key_bits / 2);
    let two = BigUint::from(2u32);

    let (p, q) = loop {
        let p = random_prime(half, &mut rng);
        let q = random_prime(half, &mut rng);
        if p == q {
            continue;
        }
        let (pm, qm) = (&p - 1u32, &q - 1u32);
        if pm.gcd(&qm) != two {
            continue;
        }
        let n = &p * &q;
        if pm.lcm(&qm).gcd(&n).is_one() {
            break (p, q);
        }
    };
    let modulus = &p * &q;
    let modulus_sq = &modulus * &modulus;
    let lambda = (&p - 1u32).lcm(&(&q - 1u32));

    let generator = loop {
        let a = rng.gen_biguint_range(&two, &modulus_sq);
        if !a.gcd(&modulus).is_one() {
            continue;
        }
        let g = a.modpow(&(&modulus * 2u32), &modulus_sq);
        if !g.is_one() {
            break g;
        }
    };

    let params = SystemParams::new(key_bits, modulus, generator, domain_bound, blind_bits, scale)?;

    let lambda_inv = lambda
        .modinv(params.modulus())
        .ok_or_else(|| CryptoError::InvalidParameters("lambda not invertible mod N".into()))?;
    let delta = &lambda * lambda_inv;
    let share_modulus = &lambda * params.modulus();
    Ok((
        params,
        MasterKey {
            lambda,
            delta,
            share_modulus,
        },
    ))
}
