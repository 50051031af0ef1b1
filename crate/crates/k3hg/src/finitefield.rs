//! Finite fields `F_{p^r}` backed by exponent, logarithm and trace tables.
//!
//! Elements are integers `0..q` whose base-`p` digits are the coefficients of
//! a polynomial in the root `g` of the modulus. Multiplicative work goes
//! through discrete logarithms, which live in the [`Exponent`] type.

use std::fs;
use std::io::{Read, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::path::{Path, PathBuf};

use crate::arith::{is_prime, powmod, prime_divisors, smallest_primitive_root};
use crate::error::{Error, Result};

/// A field element encoded by its base-`p` digits.
pub type Elem = u32;

/// Default upper bound on `q` for eager table construction.
pub const DEFAULT_TABLE_BOUND: u64 = 1 << 24;

/// Largest `q` accepted by [`PrimePower::new`].
pub const MAX_Q: u64 = 1 << 31;

const CACHE_MAGIC: &[u8; 6] = b"FFCTX1";

/// `q = p^r` together with its prime and degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimePower {
    pub p: u64,
    pub r: u32,
    pub q: u64,
}

impl PrimePower {
    pub fn new(p: u64, r: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if r == 0 {
            return Err(Error::ZeroDegree);
        }
        let q = (p as u128).checked_pow(r).filter(|&q| q <= MAX_Q as u128);
        match q {
            Some(q) => Ok(PrimePower { p, r, q: q as u64 }),
            None => Err(Error::FieldTooLarge {
                q: (p as u128).saturating_pow(r),
                bound: MAX_Q,
            }),
        }
    }

    /// `q^x = q - 1`, the order of the unit group.
    pub fn qx(&self) -> u64 {
        self.q - 1
    }
}

/// An element of `Z/nZ` with `n` the order of some unit group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Exponent {
    value: u64,
    modulus: u64,
}

impl Exponent {
    pub fn new(value: u64, modulus: u64) -> Self {
        assert!(modulus > 0, "exponent modulus must be positive");
        Exponent {
            value: value % modulus,
            modulus,
        }
    }

    pub fn from_signed(value: i64, modulus: u64) -> Self {
        Exponent::new((value as i128).rem_euclid(modulus as i128) as u64, modulus)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check(&self, other: &Exponent) {
        assert_eq!(
            self.modulus, other.modulus,
            "mixing exponents of different moduli"
        );
    }
}

impl Add for Exponent {
    type Output = Exponent;
    fn add(self, o: Exponent) -> Exponent {
        self.check(&o);
        Exponent::new(
            (self.value as u128 + o.value as u128) as u64 % self.modulus,
            self.modulus,
        )
    }
}

impl Sub for Exponent {
    type Output = Exponent;
    fn sub(self, o: Exponent) -> Exponent {
        self.check(&o);
        self + (-o)
    }
}

impl Neg for Exponent {
    type Output = Exponent;
    fn neg(self) -> Exponent {
        Exponent::new(self.modulus - self.value, self.modulus)
    }
}

impl Mul<u64> for Exponent {
    type Output = Exponent;
    fn mul(self, k: u64) -> Exponent {
        let v = (self.value as u128 * k as u128) % self.modulus as u128;
        Exponent::new(v as u64, self.modulus)
    }
}

impl Mul for Exponent {
    type Output = Exponent;
    fn mul(self, o: Exponent) -> Exponent {
        self.check(&o);
        self * o.value
    }
}

/// `F_q` with its generator and lookup tables. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldContext {
    pp: PrimePower,
    modulus: Vec<u64>,
    g: Elem,
    exp: Vec<Elem>,
    log: Vec<u32>,
    trace: Vec<u32>,
}

/// Build `F_{p^r}` with the default table bound.
pub fn build_field(p: u64, r: u32) -> Result<FieldContext> {
    FieldContext::build(p, r, DEFAULT_TABLE_BOUND)
}

/// Cache directory named by the `K3HG_CACHE` environment variable.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os("K3HG_CACHE").map(PathBuf::from)
}

impl FieldContext {
    /// Construct `F_{p^r}`, refusing fields with more than `bound` elements.
    pub fn build(p: u64, r: u32, bound: u64) -> Result<Self> {
        let pp = PrimePower::new(p, r)?;
        if pp.q > bound {
            return Err(Error::FieldTooLarge {
                q: pp.q as u128,
                bound,
            });
        }
        let modulus = if r == 1 {
            let g = smallest_primitive_root(p);
            vec![(p - g) % p, 1]
        } else {
            primitive_modulus(pp)?
        };
        let exp = exp_table(pp, &modulus);
        Self::from_parts(pp, modulus, exp)
    }

    /// Build, reading from and writing to `dir` when given.
    pub fn build_cached(p: u64, r: u32, dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return build_field(p, r);
        };
        let path = Self::cache_path(dir, p, r);
        if path.exists() {
            return Self::load(&path);
        }
        let ctx = build_field(p, r)?;
        fs::create_dir_all(dir)?;
        ctx.save(&path)?;
        Ok(ctx)
    }

    /// File name used for the table cache of `F_{p^r}`.
    pub fn cache_path(dir: &Path, p: u64, r: u32) -> PathBuf {
        dir.join(format!("ffctx_p{p}_r{r}.bin"))
    }

    fn from_parts(pp: PrimePower, modulus: Vec<u64>, exp: Vec<Elem>) -> Result<Self> {
        let q = pp.q as usize;
        if exp.len() != q - 1 {
            return Err(Error::Cache(format!(
                "expected {} exp entries, found {}",
                q - 1,
                exp.len()
            )));
        }
        let mut log = vec![u32::MAX; q];
        for (k, &x) in exp.iter().enumerate() {
            let slot = log
                .get_mut(x as usize)
                .ok_or_else(|| Error::Cache(format!("element {x} out of range")))?;
            if x == 0 || *slot != u32::MAX {
                return Err(Error::Internal(format!("generator order is not {}", q - 1)));
            }
            *slot = k as u32;
        }
        let g = if q == 2 { 1 } else { exp[1] };
        let mut ctx = FieldContext {
            pp,
            modulus,
            g,
            exp,
            log,
            trace: Vec::new(),
        };
        ctx.trace = ctx.trace_table();
        Ok(ctx)
    }

    fn trace_table(&self) -> Vec<u32> {
        let (p, r, q) = (self.pp.p, self.pp.r as usize, self.pp.q);
        if r == 1 {
            return (0..q as u32).collect();
        }
        let qx = q - 1;
        // Traces of the power basis 1, g, ..., g^{r-1}.
        let basis: Vec<u64> = (0..r as u64)
            .map(|i| {
                let mut acc: Elem = 0;
                let mut e = i % qx;
                for _ in 0..r {
                    acc = self.add(acc, self.exp[e as usize]);
                    e = (e as u128 * p as u128 % qx as u128) as u64;
                }
                debug_assert!((acc as u64) < p);
                acc as u64
            })
            .collect();
        (0..q)
            .map(|x| {
                let mut x = x;
                let mut t = 0u64;
                for b in &basis {
                    t += (x % p) * b;
                    x /= p;
                }
                (t % p) as u32
            })
            .collect()
    }

    pub fn pp(&self) -> PrimePower {
        self.pp
    }

    pub fn p(&self) -> u64 {
        self.pp.p
    }

    pub fn r(&self) -> u32 {
        self.pp.r
    }

    pub fn q(&self) -> u64 {
        self.pp.q
    }

    pub fn qx(&self) -> u64 {
        self.pp.q - 1
    }

    /// Coefficients of the monic modulus, constant term first.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// The fixed multiplicative generator.
    pub fn generator(&self) -> Elem {
        self.g
    }

    /// `exp[k] = g^k` for `0 <= k < q - 1`.
    pub fn exp_table(&self) -> &[Elem] {
        &self.exp
    }

    /// `log[x]` for nonzero `x`; entry 0 is a sentinel.
    pub fn log_table(&self) -> &[u32] {
        &self.log
    }

    /// Trace of every element, indexed by encoding.
    pub fn trace_values(&self) -> &[u32] {
        &self.trace
    }

    /// Base-`p` digits of an element, low degree first.
    pub fn digits(&self, mut x: Elem) -> Vec<u64> {
        let p = self.pp.p;
        (0..self.pp.r)
            .map(|_| {
                let d = x as u64 % p;
                x = (x as u64 / p) as Elem;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u64]) -> Elem {
        let p = self.pp.p;
        digits.iter().rev().fold(0u64, |acc, &d| acc * p + d % p) as Elem
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let p = self.pp.p;
        if self.pp.r == 1 {
            return ((a as u64 + b as u64) % p) as Elem;
        }
        let (mut a, mut b) = (a as u64, b as u64);
        let (mut out, mut place) = (0u64, 1u64);
        for _ in 0..self.pp.r {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out as Elem
    }

    pub fn neg(&self, a: Elem) -> Elem {
        let p = self.pp.p;
        if self.pp.r == 1 {
            return ((p - a as u64) % p) as Elem;
        }
        let mut a = a as u64;
        let (mut out, mut place) = (0u64, 1u64);
        for _ in 0..self.pp.r {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out as Elem
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            return 0;
        }
        let qx = self.qx();
        let e = self.log[a as usize] as u64 + self.log[b as usize] as u64;
        self.exp[(e % qx) as usize]
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::ZeroElement);
        }
        let qx = self.qx();
        Ok(self.exp[((qx - self.log[a as usize] as u64) % qx) as usize])
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e` for a nonnegative integer exponent (with `0^0 = 1`).
    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let qx = self.qx();
        let k = (self.log[a as usize] as u128 * (e % qx) as u128 % qx as u128) as usize;
        self.exp[k]
    }

    /// `g^e`.
    pub fn exp(&self, e: Exponent) -> Elem {
        assert_eq!(
            e.modulus(),
            self.qx(),
            "exponent modulus does not match the field"
        );
        self.exp[e.value() as usize]
    }

    /// Discrete logarithm with respect to the generator.
    pub fn dlog(&self, x: Elem) -> Result<Exponent> {
        if x == 0 || x as u64 >= self.q() {
            return Err(Error::ZeroElement);
        }
        Ok(Exponent::new(self.log[x as usize] as u64, self.qx()))
    }

    /// `x + x^p + ... + x^{p^{r-1}}` as an integer in `[0, p)`.
    pub fn trace(&self, x: Elem) -> u64 {
        self.trace[x as usize] as u64
    }

    /// The Frobenius `x -> x^p`.
    pub fn frobenius(&self, x: Elem) -> Elem {
        self.pow(x, self.pp.p)
    }

    /// Image of an integer under `Z -> F_p -> F_q`.
    pub fn from_int(&self, n: i64) -> Elem {
        (n as i128).rem_euclid(self.pp.p as i128) as Elem
    }

    /// `num / den` reduced into the prime field.
    pub fn reduce_rational(&self, num: i64, den: i64) -> Result<Elem> {
        let p = self.pp.p;
        let d = self.from_int(den);
        if d == 0 {
            return Err(Error::BadPrime {
                p,
                reason: format!("{p} divides the denominator {den}"),
            });
        }
        self.div(self.from_int(num), d)
    }

    /// Serialize the tables in the `FFCTX1` format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(22 + 8 * (self.modulus.len() + self.exp.len()));
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&self.pp.p.to_le_bytes());
        buf.extend_from_slice(&(self.pp.r as u64).to_le_bytes());
        for &c in &self.modulus {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        for &x in &self.exp {
            buf.extend_from_slice(&(x as u64).to_le_bytes());
        }
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Read a context written by [`FieldContext::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 22 || &bytes[..6] != CACHE_MAGIC {
            return Err(Error::Cache("missing FFCTX1 header".into()));
        }
        let words: Vec<u64> = bytes[6..]
            .chunks(8)
            .map(|c| {
                let arr: [u8; 8] = c
                    .try_into()
                    .map_err(|_| Error::Cache("truncated word".into()))?;
                Ok(u64::from_le_bytes(arr))
            })
            .collect::<Result<_>>()?;
        let (p, r) = (words[0], words[1]);
        let r = u32::try_from(r).map_err(|_| Error::Cache("degree out of range".into()))?;
        let pp = PrimePower::new(p, r)?;
        let nmod = r as usize + 1;
        if words.len() != 2 + nmod + (pp.q as usize - 1) {
            return Err(Error::Cache("unexpected file length".into()));
        }
        let modulus = words[2..2 + nmod].to_vec();
        let exp = words[2 + nmod..].iter().map(|&x| x as Elem).collect();
        let ctx = Self::from_parts(pp, modulus, exp)?;
        if !ctx.exp_matches_modulus() {
            return Err(Error::Cache("exp table inconsistent with modulus".into()));
        }
        Ok(ctx)
    }

    fn exp_matches_modulus(&self) -> bool {
        self.exp == exp_table(self.pp, &self.modulus)
    }
}

/// Multiply an encoded element by the root `x` of `modulus`.
fn mul_by_root(pp: PrimePower, modulus: &[u64], digits: &mut [u64]) {
    let p = pp.p;
    let r = pp.r as usize;
    let top = digits[r - 1];
    for i in (1..r).rev() {
        digits[i] = (digits[i - 1] + (p - top * modulus[i] % p)) % p;
    }
    digits[0] = (p - top * modulus[0] % p) % p;
}

fn exp_table(pp: PrimePower, modulus: &[u64]) -> Vec<Elem> {
    let qx = pp.q - 1;
    if pp.r == 1 {
        let g = (pp.p - modulus[0]) % pp.p;
        let mut out = Vec::with_capacity(qx as usize);
        let mut cur = 1u64;
        for _ in 0..qx {
            out.push(cur as Elem);
            cur = cur * g % pp.p;
        }
        return out;
    }
    let r = pp.r as usize;
    let mut digits = vec![0u64; r];
    digits[0] = 1;
    let mut out = Vec::with_capacity(qx as usize);
    for _ in 0..qx {
        out.push(digits.iter().rev().fold(0u64, |acc, &d| acc * pp.p + d) as Elem);
        mul_by_root(pp, modulus, &mut digits);
    }
    out
}

/// Polynomial product modulo the monic `f` (degree `r`) over `F_p`.
fn polymulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let r = f.len() - 1;
    let mut prod = vec![0u64; 2 * r];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for k in (r..2 * r).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for i in 0..r {
            prod[k - r + i] = (prod[k - r + i] + (p - c * f[i] % p)) % p;
        }
    }
    prod.truncate(r);
    prod
}

fn polypowmod(base: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let r = f.len() - 1;
    let mut acc = vec![0u64; r];
    acc[0] = 1;
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = polymulmod(&acc, &b, f, p);
        }
        b = polymulmod(&b, &b, f, p);
        e >>= 1;
    }
    acc
}

/// The primitive monic polynomial of degree `r` whose low-order coefficients,
/// read as a base-`p` integer, are smallest.
fn primitive_modulus(pp: PrimePower) -> Result<Vec<u64>> {
    let (p, r, qx) = (pp.p, pp.r as usize, pp.q - 1);
    let divisors = prime_divisors(qx);
    let mut one = vec![0u64; r];
    one[0] = 1;
    let mut x = vec![0u64; r];
    x[1 % r] = 1;
    for n in 0..pp.q {
        if n % p == 0 {
            continue;
        }
        let mut f: Vec<u64> = (0..r).map(|i| n / p.pow(i as u32) % p).collect();
        f.push(1);
        if polypowmod(&x, qx, &f, p) != one {
            continue;
        }
        if divisors
            .iter()
            .all(|&d| polypowmod(&x, qx / d, &f, p) != one)
        {
            return Ok(f);
        }
    }
    Err(Error::Internal(format!(
        "no primitive polynomial of degree {r} over F_{p}"
    )))
}

/// `true` when `h` generates `F_p^x`.
pub fn is_primitive_root(h: u64, p: u64) -> bool {
    h % p != 0
        && prime_divisors(p - 1)
            .iter()
            .all(|&d| powmod(h, (p - 1) / d, p) != 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_generator_is_smallest_primitive_root() {
        let f = build_field(7, 1).unwrap();
        assert_eq!(f.generator(), 3);
        assert_eq!(f.modulus(), &[4, 1]);
    }

    #[test]
    fn gf4_modulus() {
        let f = build_field(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.generator(), 2);
    }
}
