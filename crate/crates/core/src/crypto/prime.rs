use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

pub(crate) const MILLER_RABIN_ROUNDS: usize = 64;

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Miller-Rabin with `rounds` random bases.
pub(crate) fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if n.is_even() {
        return *n == two;
    }

    let n_minus_one = n - 1u32;
    let shift = n_minus_one.trailing_zeros().expect("n > 1");
    let odd = &n_minus_one >> shift;
    let upper = n - 2u32;

    'witness: for _ in 0..rounds {
        let base = rng.gen_biguint_range(&two, &upper);
        let mut x = base.modpow(&odd, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..shift {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

/// Random prime with exactly `bits` bits and the top two bits set, so that the
/// product of two such primes has exactly `2 * bits` bits.
pub(crate) fn random_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 16, "prime size too small");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
            return candidate;
        }
    }
}
