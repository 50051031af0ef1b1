//! Small modular-arithmetic helpers shared by the exact kernels.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// `a * b mod m` without overflow.
#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `a + b mod m` for reduced inputs.
#[inline]
pub fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    if s >= m as u128 {
        (s - m as u128) as u64
    } else {
        s as u64
    }
}

/// `a - b mod m` for reduced inputs.
#[inline]
pub fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

/// `b^e mod m`.
pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
}

/// Reduce a signed integer into `[0, m)`.
#[inline]
pub fn reduce_i128(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Reduce a big integer into `[0, m)`.
pub fn reduce_big(a: &BigInt, m: u64) -> u64 {
    let r = a.mod_floor(&BigInt::from(m));
    r.try_into().expect("reduced value fits in u64")
}

/// Deterministic primality test.
pub fn is_prime(n: u64) -> bool {
    num_prime::nt_funcs::is_prime64(n)
}

/// Distinct prime divisors of `n`, ascending.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    if n <= 1 {
        return Vec::new();
    }
    num_prime::nt_funcs::factorize64(n).into_keys().collect()
}

/// Smallest generator of `(Z/pZ)^x` for a prime `p`.
pub fn smallest_primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let divs = prime_divisors(p - 1);
    (2..p)
        .find(|&h| divs.iter().all(|&d| powmod(h, (p - 1) / d, p) != 1))
        .expect("every prime has a primitive root")
}

/// Multiplicative order of `a` modulo `m` (requires gcd(a, m) = 1).
pub fn mult_order(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let mut x = a % m;
    let mut k = 1;
    while x != 1 {
        x = mulmod(x, a, m);
        k += 1;
    }
    k
}

/// Chinese remainder reconstruction into the symmetric range `(-P/2, P/2]`.
pub fn crt_symmetric(residues: &[u64], moduli: &[u64]) -> BigInt {
    let mut value = BigUint::zero();
    let mut modulus = BigUint::one();
    for (&a, &m) in residues.iter().zip(moduli) {
        let cur = reduce_big(&BigInt::from(value.clone()), m);
        let mm = reduce_big(&BigInt::from(modulus.clone()), m);
        let inv = invmod(mm, m).expect("moduli are pairwise coprime");
        let k = mulmod(submod(a % m, cur, m), inv, m);
        value += &modulus * BigUint::from(k);
        modulus *= BigUint::from(m);
    }
    let v = BigInt::from(value);
    let p = BigInt::from(modulus);
    if &v * 2 > p {
        v - p
    } else {
        v
    }
}

/// Product of a list of moduli.
pub fn product(moduli: &[u64]) -> BigUint {
    moduli
        .iter()
        .fold(BigUint::one(), |acc, &m| acc * BigUint::from(m))
}

/// Absolute value check `|v| < bound / 2` for CRT recovery.
pub fn within_half(v: &BigInt, bound: &BigUint) -> bool {
    let twice = v.abs() * 2;
    twice < BigInt::from(bound.clone())
}
