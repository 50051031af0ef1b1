//! Exact character sums.
//!
//! Values in `Q(zeta_{q-1}, zeta_p)` are represented by their images in
//! `F_l` for a list of auxiliary primes `l = 1 mod lcm(q - 1, p)`. Integers are
//! recovered by CRT into a symmetric range.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{
    addmod, crt_symmetric, invmod, is_prime, mulmod, powmod, prime_divisors, product, reduce_big,
    smallest_primitive_root, submod, within_half,
};
use crate::error::{Error, Result};
use crate::finitefield::{Elem, Exponent, FieldContext};

/// Auxiliary primes are taken above this floor.
pub const ELL_FLOOR: u64 = 100;

/// A list of primes `l_i = 1 mod L` with product exceeding a value bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactBackend {
    ells: Vec<u64>,
    gens: Vec<u64>,
    order_modulus: u64,
    bound: BigUint,
}

/// One residue per auxiliary prime of the owning backend.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BackendValue {
    pub residues: Vec<u64>,
}

/// Backend for a single field: `l = 1 mod lcm(q - 1, p)`.
pub fn select_backend(ctx: &FieldContext, bound: &BigUint) -> ExactBackend {
    ExactBackend::for_modulus(ctx.qx().lcm(&ctx.p()), bound)
}

impl ExactBackend {
    /// Smallest primes above [`ELL_FLOOR`] congruent to 1 mod `modulus` whose
    /// product exceeds `bound`.
    pub fn for_modulus(modulus: u64, bound: &BigUint) -> Self {
        let bound = bound.max(&BigUint::from(2u32)).clone();
        let mut ells = Vec::new();
        let mut prod = BigUint::one();
        let mut k = ELL_FLOOR / modulus + 1;
        while prod <= bound {
            let ell = k * modulus + 1;
            if is_prime(ell) {
                ells.push(ell);
                prod *= BigUint::from(ell);
            }
            k += 1;
        }
        let gens = ells.iter().map(|&l| smallest_primitive_root(l)).collect();
        ExactBackend {
            ells,
            gens,
            order_modulus: modulus,
            bound,
        }
    }

    /// One backend serving every field `F_{p^{f r}}` for `r = 1..=max_r`, so
    /// that roots of unity are power-compatible across the tower.
    pub fn for_tower(p: u64, f: u32, max_r: u32, bound: &BigUint) -> Result<Self> {
        let mut l = p as u128;
        for r in 1..=max_r {
            let qx = (p as u128)
                .checked_pow(f * r)
                .map(|q| q - 1)
                .filter(|&q| q < 1 << 40);
            let qx = qx.ok_or_else(|| Error::Budget(format!("tower {p}^{} too large", f * r)))?;
            l = l / l.gcd(&qx) * qx;
            if l > 1 << 56 {
                return Err(Error::Budget("tower modulus overflow".into()));
            }
        }
        Ok(Self::for_modulus(l as u64, bound))
    }

    pub fn ells(&self) -> &[u64] {
        &self.ells
    }

    pub fn len(&self) -> usize {
        self.ells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ells.is_empty()
    }

    pub fn bound(&self) -> &BigUint {
        &self.bound
    }

    /// Every auxiliary prime is `1 mod` this number.
    pub fn order_modulus(&self) -> u64 {
        self.order_modulus
    }

    /// True when the backend contains roots of unity of orders `q - 1` and `p`.
    pub fn supports(&self, ctx: &FieldContext) -> bool {
        self.order_modulus % ctx.qx() == 0 && self.order_modulus % ctx.p() == 0
    }

    /// A primitive `n`-th root of unity modulo the `i`-th prime.
    pub fn root_of_unity(&self, i: usize, n: u64) -> u64 {
        let ell = self.ells[i];
        assert_eq!((ell - 1) % n, 0, "order {n} does not divide {ell} - 1");
        powmod(self.gens[i], (ell - 1) / n, ell)
    }

    /// `zeta_{q-1}` for each auxiliary prime.
    pub fn zeta_qx(&self, ctx: &FieldContext) -> Vec<u64> {
        (0..self.len())
            .map(|i| self.root_of_unity(i, ctx.qx()))
            .collect()
    }

    /// `zeta_p` for each auxiliary prime.
    pub fn zeta_p(&self, ctx: &FieldContext) -> Vec<u64> {
        (0..self.len())
            .map(|i| self.root_of_unity(i, ctx.p()))
            .collect()
    }

    pub fn from_i64(&self, v: i64) -> BackendValue {
        BackendValue {
            residues: self
                .ells
                .iter()
                .map(|&l| (v as i128).rem_euclid(l as i128) as u64)
                .collect(),
        }
    }

    pub fn from_big(&self, v: &BigInt) -> BackendValue {
        BackendValue {
            residues: self.ells.iter().map(|&l| reduce_big(v, l)).collect(),
        }
    }

    /// The image of a rational number; fails when a denominator vanishes.
    pub fn from_rational(&self, v: &BigRational) -> Result<BackendValue> {
        let num = self.from_big(v.numer());
        let den = self.from_big(v.denom());
        self.div(&num, &den)
    }

    pub fn zero(&self) -> BackendValue {
        self.from_i64(0)
    }

    pub fn one(&self) -> BackendValue {
        self.from_i64(1)
    }

    pub fn add(&self, a: &BackendValue, b: &BackendValue) -> BackendValue {
        self.zip(a, b, addmod)
    }

    pub fn sub(&self, a: &BackendValue, b: &BackendValue) -> BackendValue {
        self.zip(a, b, submod)
    }

    pub fn mul(&self, a: &BackendValue, b: &BackendValue) -> BackendValue {
        self.zip(a, b, mulmod)
    }

    pub fn neg(&self, a: &BackendValue) -> BackendValue {
        BackendValue {
            residues: a
                .residues
                .iter()
                .zip(&self.ells)
                .map(|(&x, &l)| (l - x) % l)
                .collect(),
        }
    }

    pub fn scale(&self, a: &BackendValue, k: i64) -> BackendValue {
        self.mul(a, &self.from_i64(k))
    }

    pub fn pow(&self, a: &BackendValue, e: u64) -> BackendValue {
        BackendValue {
            residues: a
                .residues
                .iter()
                .zip(&self.ells)
                .map(|(&x, &l)| powmod(x, e, l))
                .collect(),
        }
    }

    pub fn inv(&self, a: &BackendValue) -> Result<BackendValue> {
        let residues = a
            .residues
            .iter()
            .zip(&self.ells)
            .map(|(&x, &l)| {
                invmod(x, l).ok_or_else(|| Error::Precision(format!("division by zero mod {l}")))
            })
            .collect::<Result<_>>()?;
        Ok(BackendValue { residues })
    }

    pub fn div(&self, a: &BackendValue, b: &BackendValue) -> Result<BackendValue> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    fn zip(
        &self,
        a: &BackendValue,
        b: &BackendValue,
        op: fn(u64, u64, u64) -> u64,
    ) -> BackendValue {
        BackendValue {
            residues: a
                .residues
                .iter()
                .zip(&b.residues)
                .zip(&self.ells)
                .map(|((&x, &y), &l)| op(x, y, l))
                .collect(),
        }
    }

    /// CRT recovery of an integer of absolute value below `bound / 2`.
    pub fn recover_integer(&self, v: &BackendValue) -> Result<BigInt> {
        let n = crt_symmetric(&v.residues, &self.ells);
        if within_half(&n, &self.bound) {
            Ok(n)
        } else {
            Err(Error::Precision(format!(
                "CRT value outside (-B/2, B/2) with B = {}; raise the backend bound",
                self.bound
            )))
        }
    }

    /// Recover `v` assuming `v * den` is an integer in range.
    pub fn recover_rational(&self, v: &BackendValue, den: &BigInt) -> Result<BigRational> {
        let scaled = self.mul(v, &self.from_big(den));
        Ok(BigRational::new(
            self.recover_integer(&scaled)?,
            den.clone(),
        ))
    }

    /// Recover an integer and convert it to `i128`.
    pub fn recover_i128(&self, v: &BackendValue) -> Result<i128> {
        self.recover_integer(v)?
            .to_i128()
            .ok_or_else(|| Error::Precision("value exceeds i128".into()))
    }
}

/// Table of Gauss sums `g(m) = sum_{x != 0} omega^m(x) zeta_p^{Tr x}` with
/// `omega(g) = zeta_{q-1}^k`; `k = 1` for tables built by [`gauss_table`].
#[derive(Clone, Debug)]
pub struct GaussTable {
    q: u64,
    p: u64,
    qx: u64,
    omega_power: u64,
    ells: Vec<u64>,
    values: Vec<Vec<u64>>,
    zeta_pows: Vec<Vec<u64>>,
}

/// Build the full Gauss-sum table of `ctx` in the given backend.
pub fn gauss_table(ctx: &FieldContext, backend: &ExactBackend) -> Result<GaussTable> {
    if !backend.supports(ctx) {
        return Err(Error::Precondition(format!(
            "backend modulus {} is not divisible by lcm(q-1, p) for q = {}",
            backend.order_modulus(),
            ctx.q()
        )));
    }
    let (p, qx) = (ctx.p(), ctx.qx());
    let exp = ctx.exp_table();
    let traces = ctx.trace_values();
    let factors = prime_factors_with_multiplicity(qx);
    let mut values = Vec::with_capacity(backend.len());
    let mut zeta_pows = Vec::with_capacity(backend.len());
    for i in 0..backend.len() {
        let ell = backend.ells()[i];
        let pows = power_table(backend.root_of_unity(i, qx), qx, ell);
        let zp_pows = power_table(backend.root_of_unity(i, p), p, ell);
        // g(m) = sum_k zeta_qx^{m k} zeta_p^{Tr(g^k)} is a length q - 1 DFT.
        let a: Vec<u64> = (0..qx as usize)
            .map(|k| zp_pows[traces[exp[k] as usize] as usize])
            .collect();
        values.push(dft(&a, &factors, 1, &pows, ell));
        zeta_pows.push(pows);
    }
    Ok(GaussTable {
        q: ctx.q(),
        p,
        qx,
        omega_power: 1,
        ells: backend.ells().to_vec(),
        values,
        zeta_pows,
    })
}

/// Ring operations per auxiliary prime spent by [`gauss_table`] for a field
/// with `q - 1 = qx`.
pub fn gauss_table_cost(qx: u64) -> u64 {
    qx.saturating_mul(
        prime_factors_with_multiplicity(qx)
            .iter()
            .sum::<u64>()
            .max(1),
    )
}

fn prime_factors_with_multiplicity(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for d in prime_divisors(n) {
        while n % d == 0 {
            out.push(d);
            n /= d;
        }
    }
    out
}

/// Mixed-radix DFT `X[k] = sum_j a[j] w^{j k}` where `w = pows[stride]` and
/// `pows` lists the powers of a root of unity of order `pows.len()`.
fn dft(a: &[u64], factors: &[u64], stride: usize, pows: &[u64], ell: u64) -> Vec<u64> {
    let n = a.len();
    if n == 1 {
        return a.to_vec();
    }
    let radix = factors[0] as usize;
    let n1 = n / radix;
    let subs: Vec<Vec<u64>> = (0..radix)
        .map(|s| {
            let sub: Vec<u64> = (0..n1).map(|j| a[radix * j + s]).collect();
            dft(&sub, &factors[1..], stride * radix, pows, ell)
        })
        .collect();
    let order = pows.len();
    (0..n)
        .map(|k| {
            let mut acc = subs[0][k % n1];
            for (s, sub) in subs.iter().enumerate().skip(1) {
                let w = pows[(stride * s % order) * k % order];
                acc = addmod(acc, mulmod(w, sub[k % n1], ell), ell);
            }
            acc
        })
        .collect()
}

fn power_table(z: u64, n: u64, ell: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(n as usize);
    let mut cur = 1u64;
    for _ in 0..n {
        out.push(cur);
        cur = mulmod(cur, z, ell);
    }
    out
}

/// One representative per orbit of `m -> p m` on `Z/qxZ`.
pub fn frobenius_orbit_reps(qx: u64, p: u64) -> Vec<u64> {
    let mut seen = vec![false; qx as usize];
    let mut reps = Vec::new();
    for m in 0..qx {
        if seen[m as usize] {
            continue;
        }
        reps.push(m);
        let mut k = m;
        loop {
            seen[k as usize] = true;
            k = (k as u128 * p as u128 % qx as u128) as u64;
            if k == m {
                break;
            }
        }
    }
    reps
}

impl GaussTable {
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn qx(&self) -> u64 {
        self.qx
    }

    pub fn ells(&self) -> &[u64] {
        &self.ells
    }

    /// The exponent `k` with `omega(g) = zeta_{q-1}^k`.
    pub fn omega_power(&self) -> u64 {
        self.omega_power
    }

    /// `g(m)` as a backend value; `m` is read modulo `q - 1`.
    pub fn get(&self, m: i64) -> BackendValue {
        let m = (m as i128).rem_euclid(self.qx as i128) as usize;
        BackendValue {
            residues: self.values.iter().map(|t| t[m]).collect(),
        }
    }

    /// `g(m)` modulo the `i`-th prime, `m` already reduced.
    #[inline]
    pub fn raw(&self, i: usize, m: u64) -> u64 {
        self.values[i][m as usize]
    }

    /// `zeta_{q-1}^e` modulo the `i`-th prime, `e` already reduced.
    #[inline]
    pub fn zeta_pow(&self, i: usize, e: u64) -> u64 {
        self.zeta_pows[i][e as usize]
    }

    /// Exponent `j` with `omega(a) = zeta_{q-1}^j`.
    pub fn omega_log(&self, ctx: &FieldContext, a: Elem) -> Result<u64> {
        let d = ctx.dlog(a)?;
        Ok((d * self.omega_power).value())
    }

    /// `omega(a)^e`.
    pub fn character(&self, ctx: &FieldContext, a: Elem, e: i64) -> Result<BackendValue> {
        let j = self.omega_log(ctx, a)?;
        let k = Exponent::from_signed(e, self.qx) * j;
        Ok(BackendValue {
            residues: (0..self.ells.len())
                .map(|i| self.zeta_pow(i, k.value()))
                .collect(),
        })
    }

    /// The table obtained by replacing `omega` with `omega^k`: `g'(m) = g(km)`.
    pub fn conjugate(&self, k: u64) -> GaussTable {
        let qx = self.qx;
        let values = self
            .values
            .iter()
            .map(|t| {
                (0..qx)
                    .map(|m| t[((m as u128 * k as u128) % qx as u128) as usize])
                    .collect()
            })
            .collect();
        GaussTable {
            omega_power: (self.omega_power as u128 * k as u128 % qx as u128) as u64,
            values,
            ..self.clone()
        }
    }
}

/// `omega(a)^e = zeta_{q-1}^{e dlog a}` for the default generator `omega`.
pub fn character_value(
    ctx: &FieldContext,
    backend: &ExactBackend,
    a: Elem,
    e: Exponent,
) -> Result<BackendValue> {
    let d = ctx.dlog(a)?;
    let k = (d * e.value()).value();
    let residues = (0..backend.len())
        .map(|i| {
            let z = backend.root_of_unity(i, ctx.qx());
            powmod(z, k, backend.ells()[i])
        })
        .collect();
    Ok(BackendValue { residues })
}

/// Jacobi symbol `(a / n)` for odd positive `n`.
pub fn jacobi_symbol(a: i64, n: u64) -> i32 {
    assert!(n % 2 == 1, "Jacobi symbol needs an odd modulus");
    let mut a = (a as i128).rem_euclid(n as i128) as u64;
    let mut n = n;
    let mut result = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Jacobi symbol of a big integer.
pub fn jacobi_symbol_big(a: &BigInt, n: u64) -> i32 {
    jacobi_symbol(reduce_big(a, n) as i64, n)
}

/// Floating approximation of `g(m)` as `(re, im)`, for display only.
pub fn gauss_sum_float(ctx: &FieldContext, m: i64) -> (f64, f64) {
    let qx = ctx.qx() as f64;
    let p = ctx.p() as f64;
    let m = (m as i128).rem_euclid(ctx.qx() as i128) as f64;
    let tau = std::f64::consts::TAU;
    let (mut re, mut im) = (0.0, 0.0);
    for x in 1..ctx.q() as Elem {
        let d = ctx.log_table()[x as usize] as f64;
        let angle = tau * ((m * d) % qx / qx + ctx.trace(x) as f64 / p);
        re += angle.cos();
        im += angle.sin();
    }
    (re, im)
}

/// `|v|` bound helper: smallest power of two above `x`.
pub fn bound_from(x: &BigInt) -> BigUint {
    let m = x.abs().to_biguint().unwrap_or_default();
    BigUint::one() << (m.bits() + 2)
}

/// Product of the auxiliary primes.
pub fn modulus_product(backend: &ExactBackend) -> BigUint {
    product(backend.ells())
}

impl BackendValue {
    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(Zero::is_zero)
    }
}
