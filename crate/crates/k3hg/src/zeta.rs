//! Euler factors, zeta-function numerators and their hypergeometric
//! factorisations.
//!
//! Polynomials are in `T` with constant term 1. An Euler factor `L(T)` is tied
//! to its power sums by `L(T) = exp(-sum_r a_r T^r / r)`, so `a_r` is the sum of
//! the `r`-th powers of the reciprocal roots.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{invmod, is_prime, prime_divisors};
use crate::charsums::{
    gauss_table, gauss_table_cost, jacobi_symbol, BackendValue, ExactBackend, GaussTable,
};
use crate::error::{Error, Result};
use crate::finitefield::{build_field, Elem, Exponent, FieldContext};
use crate::hypergeom::{field_of_definition, hsum, interlace_check, units, HGParams, Rat};
use crate::koblitz::count_bound;
use crate::pencils::{check_good, count_with_tables, CountMode, PencilId, PencilInstance};

/// Largest field a [`Tower`] level may have.
pub const TOWER_BUDGET: u64 = 400_000;

/// Largest field over which point counts are taken for the left-hand side.
pub const COUNT_BUDGET: u64 = 400_000;

/// Largest [`gauss_table_cost`] accepted for a tower level or a count.
pub const GAUSS_COST_BUDGET: u64 = 60_000_000;

/// True when `F_{p^r}` has at most `size` elements and an affordable Gauss table.
pub fn affordable(p: u64, r: u32, size: u64) -> bool {
    match (p as u128).checked_pow(r) {
        Some(q) if q <= size as u128 => gauss_table_cost(q as u64 - 1) <= GAUSS_COST_BUDGET,
        _ => false,
    }
}

/// Degree of `P_{X,q}(T)` for the K3 pencils.
pub const P_DEGREE: usize = 21;

/// Integer polynomial `1 + c_1 T + ... + c_n T^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EulerFactor {
    coeffs: Vec<BigInt>,
}

impl EulerFactor {
    pub fn one() -> Self {
        EulerFactor {
            coeffs: vec![BigInt::one()],
        }
    }

    /// Coefficients in ascending order; trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.first() != Some(&BigInt::one()) {
            return Err(Error::InvalidParams(
                "an Euler factor has constant term 1".into(),
            ));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Ok(EulerFactor { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// `1 - a T`.
    pub fn linear(a: BigInt) -> Self {
        EulerFactor::new(vec![BigInt::one(), -a]).expect("constant term is 1")
    }

    /// `prod (1 - s zeta T)` over the primitive `n`-th roots of unity `zeta`.
    pub fn cyclotomic(n: u64, s: &BigInt) -> Self {
        let phi = cyclotomic_polynomial(n);
        // The reversal of Phi_n, which equals Phi_n for n > 1.
        let mut coeffs: Vec<BigInt> = phi.into_iter().rev().collect();
        let mut pw = BigInt::one();
        for c in coeffs.iter_mut() {
            *c *= &pw;
            pw *= s;
        }
        EulerFactor::new(coeffs).expect("cyclotomic reversal has constant term 1")
    }

    /// `prod_n cyclotomic(n, s)^e`.
    pub fn from_cyclotomic(orders: &BTreeMap<u64, u32>, s: &BigInt) -> Self {
        orders.iter().fold(EulerFactor::one(), |acc, (&n, &e)| {
            acc.mul(&Self::cyclotomic(n, s).pow(e))
        })
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `T^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn mul(&self, other: &EulerFactor) -> EulerFactor {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        EulerFactor::new(out).expect("product of Euler factors")
    }

    pub fn pow(&self, e: u32) -> EulerFactor {
        (0..e).fold(EulerFactor::one(), |acc, _| acc.mul(self))
    }

    /// Terms of degree at most `n`.
    pub fn truncate(&self, n: usize) -> EulerFactor {
        EulerFactor::new(self.coeffs.iter().take(n + 1).cloned().collect())
            .expect("prefix keeps constant term")
    }

    /// `T -> c T`.
    pub fn scale_variable(&self, c: &BigInt) -> EulerFactor {
        let mut pw = BigInt::one();
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| {
                let v = a * &pw;
                pw *= c;
                v
            })
            .collect();
        EulerFactor::new(coeffs).expect("scaling keeps constant term")
    }

    /// `T -> T^f`.
    pub fn substitute_power(&self, f: usize) -> EulerFactor {
        let mut out = vec![BigInt::zero(); self.degree() * f + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            out[i * f] = a.clone();
        }
        EulerFactor::new(out).expect("substitution keeps constant term")
    }

    /// Exact quotient; fails if `other` does not divide `self`.
    pub fn div_exact(&self, other: &EulerFactor) -> Result<EulerFactor> {
        let mut rem = self.coeffs.clone();
        let n = other.degree();
        if self.degree() < n {
            return Err(Error::NonIntegral("divisor has larger degree".into()));
        }
        let mut quot = vec![BigInt::zero(); self.degree() - n + 1];
        for i in 0..quot.len() {
            let c = rem[i].clone();
            for (j, b) in other.coeffs.iter().enumerate() {
                rem[i + j] -= &c * b;
            }
            quot[i] = c;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::NonIntegral(
                "polynomial division leaves a remainder".into(),
            ));
        }
        EulerFactor::new(quot)
    }

    /// Power sums `a_1..a_n` of the reciprocal roots.
    pub fn power_sums(&self, n: usize) -> Vec<BigInt> {
        let mut a: Vec<BigInt> = Vec::with_capacity(n);
        for k in 1..=n {
            let mut v = -BigInt::from(k) * self.coeff(k);
            for i in 1..k {
                v -= &a[i - 1] * self.coeff(k - i);
            }
            a.push(v);
        }
        a
    }

    /// `exp(-sum a_r T^r / r)` truncated at degree `a.len()`.
    pub fn from_power_sums(a: &[BigInt]) -> Result<EulerFactor> {
        let mut c = vec![BigInt::one()];
        for k in 1..=a.len() {
            let mut s = BigInt::zero();
            for i in 1..=k {
                s += &a[i - 1] * &c[k - i];
            }
            let (quot, rem) = (-s).div_rem(&BigInt::from(k));
            if !rem.is_zero() {
                return Err(Error::NonIntegral(format!(
                    "coefficient of T^{k} is not an integer"
                )));
            }
            c.push(quot);
        }
        EulerFactor::new(c)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }
}

impl fmt::Display for EulerFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let abs = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{abs}")?,
                1 if abs.is_one() => f.write_str("T")?,
                1 => write!(f, "{abs}T")?,
                _ if abs.is_one() => write!(f, "T^{i}")?,
                _ => write!(f, "{abs}T^{i}")?,
            }
        }
        Ok(())
    }
}

/// Integer coefficients of `Phi_n(x)`, ascending.
pub fn cyclotomic_polynomial(n: u64) -> Vec<BigInt> {
    // x^n - 1 divided by Phi_d for every proper divisor d.
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in (1..n).filter(|d| n % d == 0) {
        num = poly_div_monic(&num, &cyclotomic_polynomial(d));
    }
    num
}

fn poly_div_monic(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    let mut quot = vec![BigInt::zero(); a.len() - db];
    for i in (0..quot.len()).rev() {
        let c = rem[i + db].clone();
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= &c * bj;
        }
        quot[i] = c;
    }
    quot
}

pub fn euler_phi(n: u64) -> u64 {
    prime_divisors(n)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

pub fn mobius(n: u64) -> i64 {
    let ps = prime_divisors(n);
    if ps.iter().any(|&p| (n / p) % p == 0) {
        0
    } else if ps.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sum of the `r`-th powers of the primitive `n`-th roots of unity.
pub fn ramanujan_sum(n: u64, r: u64) -> i64 {
    let m = n / n.gcd(&r);
    mobius(m) * (euler_phi(n) / euler_phi(m)) as i64
}

/// Write `poly` as `prod_n cyclotomic(n, s)^{e_n}` when possible.
pub fn cyclotomic_factorization(poly: &EulerFactor, s: &BigInt) -> Option<BTreeMap<u64, u32>> {
    let mut rest = poly.clone();
    let mut out = BTreeMap::new();
    let max_n = 2 * (poly.degree() as u64).pow(2) + 2;
    for n in 1..=max_n {
        if euler_phi(n) as usize > rest.degree() {
            continue;
        }
        let phi = EulerFactor::cyclotomic(n, s);
        while rest.degree() >= phi.degree() {
            match rest.div_exact(&phi) {
                Ok(q) => {
                    rest = q;
                    *out.entry(n).or_insert(0) += 1;
                }
                Err(_) => break,
            }
        }
    }
    (rest.degree() == 0).then_some(out)
}

/// Render a cyclotomic factorisation such as `(1 - qT)^12 (1 + qT)^6`.
pub fn describe_cyclotomic(orders: &BTreeMap<u64, u32>) -> String {
    orders
        .iter()
        .map(|(&n, &e)| {
            let base = match n {
                1 => "(1 - qT)".to_string(),
                2 => "(1 + qT)".to_string(),
                _ => format!("Phi_{n}(qT)"),
            };
            if e == 1 {
                base
            } else {
                format!("{base}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Largest relative deviation of `|lambda| / s` from 1 over the reciprocal
/// roots of `poly`, located numerically.
pub fn max_root_deviation(poly: &EulerFactor, s: f64) -> f64 {
    let n = poly.degree();
    if n == 0 {
        return 0.0;
    }
    // Durand-Kerner on the reversed polynomial, whose roots are the lambda.
    // The reversal sum_i c_i x^{n-i} is monic since c_0 = 1.
    let monic: Vec<f64> = (0..=n)
        .map(|i| poly.coeff(n - i).to_f64().unwrap_or(0.0))
        .collect();
    let eval = |zr: f64, zi: f64| {
        let (mut ar, mut ai) = (0.0, 0.0);
        for c in monic.iter().rev() {
            let nr = ar * zr - ai * zi + c;
            let ni = ar * zi + ai * zr;
            ar = nr;
            ai = ni;
        }
        (ar, ai)
    };
    let mut roots: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (s * 1.01 * a.cos(), s * 1.01 * a.sin())
        })
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (zr, zi) = roots[i];
            let (nr, ni) = eval(zr, zi);
            let (mut dr, mut di) = (1.0, 0.0);
            for (j, &(wr, wi)) in roots.iter().enumerate() {
                if i != j {
                    let (xr, xi) = (zr - wr, zi - wi);
                    let t = dr * xr - di * xi;
                    di = dr * xi + di * xr;
                    dr = t;
                }
            }
            let den = dr * dr + di * di;
            if den == 0.0 {
                continue;
            }
            let (qr, qi) = ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den);
            roots[i] = (zr - qr, zi - qi);
            moved = moved.max((qr * qr + qi * qi).sqrt() / s);
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
        .iter()
        .map(|&(r, i)| ((r * r + i * i).sqrt() / s - 1.0).abs())
        .fold(0.0, f64::max)
}

/// An abelian number field `M`, the fixed field of `H <= (Z/mZ)^x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbelianFieldSpec {
    m: u64,
    h: Vec<u64>,
}

impl AbelianFieldSpec {
    pub fn new(m: u64, h: Vec<u64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParams("conductor must be positive".into()));
        }
        let all = units(m);
        let mut h: Vec<u64> = h
            .into_iter()
            .map(|k| if m == 1 { 0 } else { k % m })
            .collect();
        h.sort_unstable();
        h.dedup();
        let set: BTreeSet<u64> = h.iter().copied().collect();
        let closed = h
            .iter()
            .all(|&a| h.iter().all(|&b| set.contains(&((a * b) % m.max(1)))));
        if h.is_empty() || !h.iter().all(|k| all.contains(k)) || !closed {
            return Err(Error::InvalidParams(format!(
                "{h:?} is not a subgroup of (Z/{m}Z)^x"
            )));
        }
        Ok(AbelianFieldSpec { m, h })
    }

    pub fn rational() -> Self {
        AbelianFieldSpec { m: 1, h: vec![0] }
    }

    /// `Q(zeta_n)`.
    pub fn cyclotomic(n: u64) -> Self {
        if n <= 2 {
            return Self::rational();
        }
        AbelianFieldSpec { m: n, h: vec![1] }
    }

    /// `Q(sqrt(-1))`.
    pub fn gaussian() -> Self {
        Self::cyclotomic(4)
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn subgroup(&self) -> &[u64] {
        &self.h
    }

    /// The same field described with conductor a multiple `m2` of `m`.
    pub fn lift(&self, m2: u64) -> Result<Self> {
        if m2 % self.m != 0 {
            return Err(Error::InvalidParams(format!(
                "{m2} is not a multiple of {}",
                self.m
            )));
        }
        let h = units(m2)
            .into_iter()
            .filter(|&k| self.contains(k))
            .collect();
        AbelianFieldSpec::new(m2, h)
    }

    pub fn contains(&self, k: u64) -> bool {
        self.m == 1 || self.h.binary_search(&(k % self.m)).is_ok()
    }

    /// `[M : Q]`.
    pub fn degree(&self) -> u64 {
        euler_phi(self.m) / self.h.len() as u64
    }

    /// Smallest `m' | m` with `{k = 1 mod m'}` inside `H`.
    pub fn conductor(&self) -> u64 {
        (1..=self.m)
            .filter(|d| self.m % d == 0)
            .find(|&d| {
                units(self.m)
                    .into_iter()
                    .filter(|k| k % d == 1 % d)
                    .all(|k| self.contains(k))
            })
            .unwrap_or(self.m)
    }

    fn check_unramified(&self, p: u64) -> Result<()> {
        if self.m % p == 0 {
            return Err(Error::BadPrime {
                p,
                reason: format!("ramified in the field of conductor {}", self.m),
            });
        }
        Ok(())
    }

    /// Residue degree `f` of `p`: the order of `p` in `(Z/mZ)^x / H`.
    pub fn residue_degree(&self, p: u64) -> Result<u32> {
        self.check_unramified(p)?;
        let mut f = 1;
        let mut x = p % self.m.max(1);
        while !self.contains(x) {
            x = x * p % self.m;
            f += 1;
        }
        Ok(f)
    }

    /// Smallest representatives of `(Z/mZ)^x / <H, p>`.
    pub fn coset_reps(&self, p: u64) -> Result<Vec<u64>> {
        self.coset_reps_with(p, &self.h)
    }

    fn coset_reps_with(&self, p: u64, h: &[u64]) -> Result<Vec<u64>> {
        self.check_unramified(p)?;
        if self.m == 1 {
            return Ok(vec![1]);
        }
        let m = self.m;
        let mut group: BTreeSet<u64> = h.iter().copied().collect();
        let mut frontier: Vec<u64> = group.iter().copied().collect();
        while let Some(x) = frontier.pop() {
            let y = x * p % m;
            if group.insert(y) {
                frontier.push(y);
            }
            for &g in h {
                let z = x * g % m;
                if group.insert(z) {
                    frontier.push(z);
                }
            }
        }
        let mut covered = BTreeSet::new();
        let mut reps = Vec::new();
        for k in units(m) {
            if covered.contains(&k) {
                continue;
            }
            reps.push(k);
            for &g in &group {
                covered.insert(k * g % m);
            }
        }
        Ok(reps)
    }

    /// Number of primes of `M` above `p`.
    pub fn num_primes(&self, p: u64) -> Result<usize> {
        Ok(self.coset_reps(p)?.len())
    }
}

impl fmt::Display for AbelianFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            return f.write_str("Q");
        }
        if self.h == [1] {
            return match self.m {
                4 => f.write_str("Q(sqrt(-1))"),
                _ => write!(f, "Q(zeta_{})", self.m),
            };
        }
        let c = self.conductor();
        if c < self.m {
            let sub: Vec<u64> = units(c).into_iter().filter(|&k| self.contains(k)).collect();
            if let Ok(down) = AbelianFieldSpec::new(c, sub) {
                return down.fmt(f);
            }
        }
        write!(f, "Q(zeta_{})^{:?}", self.m, self.h)
    }
}

/// A quadratic character attached to a prime of norm `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TwistSpec {
    Trivial,
    /// `(-1)^{(q-1)/2}`.
    MinusOne,
    /// `(-1)^{(q-1)/4}`, for `q = 1 mod 4`.
    SqrtMinusOne,
    /// `2^{(q-1)/4}` in `F_q`, for `q = 1 mod 8`.
    SqrtTwo,
    /// The quadratic character of `psi` on `F_q`.
    Psi(Rat),
    Product(Vec<TwistSpec>),
}

impl TwistSpec {
    /// Value in `{1, -1}` at a prime of norm `ctx.q()`.
    pub fn eval(&self, ctx: &FieldContext) -> Result<i64> {
        let q = ctx.q();
        let sign = |e: u64| if e % 2 == 0 { 1 } else { -1 };
        match self {
            TwistSpec::Trivial => Ok(1),
            TwistSpec::MinusOne => Ok(sign((q - 1) / 2)),
            TwistSpec::SqrtMinusOne => {
                if q % 4 != 1 {
                    return Err(Error::Precondition(format!(
                        "phi_sqrt(-1) needs q = 1 mod 4, got {q}"
                    )));
                }
                Ok(sign((q - 1) / 4))
            }
            TwistSpec::SqrtTwo => {
                if q % 8 != 1 {
                    return Err(Error::Precondition(format!(
                        "phi_sqrt(2) needs q = 1 mod 8, got {q}"
                    )));
                }
                element_sign(ctx, ctx.pow(ctx.from_int(2), (q - 1) / 4))
            }
            TwistSpec::Psi(psi) => {
                let x = ctx.reduce_rational(*psi.numer(), *psi.denom())?;
                element_sign(ctx, ctx.pow(x, (q - 1) / 2))
            }
            TwistSpec::Product(parts) => parts.iter().try_fold(1, |acc, t| Ok(acc * t.eval(ctx)?)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TwistSpec::Trivial => "trivial".into(),
            TwistSpec::MinusOne => "phi_-1".into(),
            TwistSpec::SqrtMinusOne => "phi_sqrt(-1)".into(),
            TwistSpec::SqrtTwo => "phi_sqrt(2)".into(),
            TwistSpec::Psi(_) => "phi_psi".into(),
            TwistSpec::Product(parts) => {
                parts.iter().map(|t| t.name()).collect::<Vec<_>>().join("*")
            }
        }
    }
}

fn element_sign(ctx: &FieldContext, x: Elem) -> Result<i64> {
    if x == 1 {
        Ok(1)
    } else if x == ctx.neg(1) {
        Ok(-1)
    } else {
        Err(Error::Internal(
            "quadratic character value is not +-1".into(),
        ))
    }
}

/// Legendre symbol of a rational `a` at the odd prime `p`, raised to `f`:
/// the quadratic character of `a` on `F_{p^f}`.
pub fn quadratic_character(a: Rat, p: u64, f: u32) -> Result<i64> {
    let num = (*a.numer() as i128).rem_euclid(p as i128) as i64;
    let den = (*a.denom() as i128).rem_euclid(p as i128) as i64;
    if den == 0 {
        return Err(Error::BadPrime {
            p,
            reason: format!("divides the denominator of {a}"),
        });
    }
    let v = jacobi_symbol(num * den, p) as i64;
    Ok(if f % 2 == 0 { v * v } else { v })
}

struct Level {
    ctx: FieldContext,
    gt: GaussTable,
    compat: u64,
}

/// The fields `F_{q^r}`, `q = p^f`, `r = 1..=depth`, sharing one backend.
///
/// `H_{q^r}` is evaluated with a character of `F_{q^r}^x` whose restriction
/// composed with the norm matches the character of `F_q^x`, so that the
/// values for varying `r` are power sums of one set of roots.
pub struct Tower {
    p: u64,
    f: u32,
    backend: ExactBackend,
    levels: Vec<Level>,
}

impl Tower {
    pub fn new(p: u64, f: u32, depth: u32, bound: &BigUint) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if depth == 0 {
            return Err(Error::InvalidParams("tower depth must be positive".into()));
        }
        if let Some(r) = (1..=depth).find(|&r| !affordable(p, f * r, TOWER_BUDGET)) {
            return Err(Error::Budget(format!(
                "F_{{{p}^{}}} exceeds the tower budget",
                f * r
            )));
        }
        let backend = ExactBackend::for_tower(p, f, depth, bound)?;
        let mut levels = Vec::with_capacity(depth as usize);
        for r in 1..=depth {
            let ctx = build_field(p, f * r)?;
            let gt = gauss_table(&ctx, &backend)?;
            levels.push(Level { ctx, gt, compat: 1 });
        }
        let base_modulus = levels[0].ctx.modulus().to_vec();
        let qx = levels[0].ctx.qx();
        for level in levels.iter_mut().skip(1) {
            level.compat = compat_multiplier(&base_modulus, qx, &level.ctx)?;
        }
        Ok(Tower {
            p,
            f,
            backend,
            levels,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    /// The base field size `q = p^f`.
    pub fn q(&self) -> u64 {
        self.levels[0].ctx.q()
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn backend(&self) -> &ExactBackend {
        &self.backend
    }

    pub fn ctx(&self, r: u32) -> &FieldContext {
        &self.levels[r as usize - 1].ctx
    }

    pub fn gauss(&self, r: u32) -> &GaussTable {
        &self.levels[r as usize - 1].gt
    }

    /// `H_{q^r}(k alpha; k beta | t)` in the compatible normalisation.
    pub fn hsum(&self, r: u32, params: &HGParams, t: Rat, k: u64) -> Result<BackendValue> {
        let level = &self.levels[r as usize - 1];
        let qx = self.levels[0].ctx.qx();
        let lcd = params.lcd();
        let base = level.compat as u128 * k as u128;
        let scale = (0..lcd.max(2) as u128)
            .map(|j| base + j * qx as u128)
            .find(|&c| c.gcd(&(lcd as u128)) == 1)
            .ok_or_else(|| Error::Internal("no unit lift for the compatibility twist".into()))?;
        let scaled = if scale == 1 {
            params.clone()
        } else {
            params.scale((scale % (lcd as u128 * qx as u128)) as i64)?
        };
        let te = level.ctx.reduce_rational(*t.numer(), *t.denom())?;
        hsum(&level.ctx, &self.backend, &level.gt, &scaled, te)
    }
}

/// `j^{-1} mod (q - 1)` where the embedded generator of `F_q^x` has discrete
/// logarithm `j (Q - 1)/(q - 1)` in `F_Q`.
fn compat_multiplier(base_modulus: &[u64], qx: u64, ctx: &FieldContext) -> Result<u64> {
    if qx == 1 {
        return Ok(1);
    }
    let step = ctx.qx() / qx;
    for j in (1..qx).filter(|j| j.gcd(&qx) == 1) {
        let x = ctx.exp(Exponent::new(j * step, ctx.qx()));
        let value = base_modulus.iter().rev().fold(0 as Elem, |acc, &c| {
            ctx.add(ctx.mul(acc, x), ctx.from_int(c as i64))
        });
        if value == 0 {
            return invmod(j, qx)
                .ok_or_else(|| Error::Internal("non-invertible embedding exponent".into()));
        }
    }
    Err(Error::Internal(format!(
        "no embedding of F_{} into F_{}",
        qx + 1,
        ctx.q()
    )))
}

/// Coefficients `c_0..c_n` of `exp(-sum chi^r H_{q^r}(k alpha) X^r / r)`.
fn coset_series(
    tower: &Tower,
    params: &HGParams,
    t: Rat,
    k: u64,
    chi: i64,
    n: usize,
) -> Result<Vec<BackendValue>> {
    let be = tower.backend();
    let mut sums = Vec::with_capacity(n);
    for r in 1..=n as u32 {
        let h = tower.hsum(r, params, t, k)?;
        sums.push(if chi == -1 && r % 2 == 1 {
            be.neg(&h)
        } else {
            h
        });
    }
    exp_series(be, &sums)
}

/// `exp(-sum_r a_r X^r / r)` in the backend.
pub fn exp_series(be: &ExactBackend, sums: &[BackendValue]) -> Result<Vec<BackendValue>> {
    let mut c = vec![be.one()];
    for k in 1..=sums.len() {
        let mut s = be.zero();
        for i in 1..=k {
            s = be.add(&s, &be.mul(&sums[i - 1], &c[k - i]));
        }
        let inv_k = be.inv(&be.from_i64(k as i64))?;
        c.push(be.neg(&be.mul(&s, &inv_k)));
    }
    Ok(c)
}

fn series_mul(be: &ExactBackend, a: &[BackendValue], b: &[BackendValue]) -> Vec<BackendValue> {
    let mut out = vec![be.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = be.add(&out[i + j], &be.mul(x, y));
        }
    }
    out
}

fn recover_poly(be: &ExactBackend, c: &[BackendValue]) -> Result<EulerFactor> {
    EulerFactor::new(
        c.iter()
            .map(|v| be.recover_integer(v))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Backend bound for Euler factors of total degree `degree` whose reciprocal
/// roots have absolute value at most `p^weight`.
pub fn factor_bound(p: u64, degree: usize, weight: u32) -> BigUint {
    (BigUint::one() << (degree + 2)) * BigUint::from(p).pow(weight * degree as u32 + 1)
}

/// `L_q(H(alpha; beta | t), T)` truncated at `degree`, twisted by `twist`.
///
/// When the tower reaches `degree + 1`, the next series coefficient is
/// checked to vanish.
pub fn euler_factor_q(
    tower: &Tower,
    params: &HGParams,
    t: Rat,
    degree: usize,
    twist: &TwistSpec,
) -> Result<EulerFactor> {
    if degree > tower.depth() as usize {
        return Err(Error::Budget(format!(
            "degree {degree} needs H over F_q^r for r beyond {}",
            tower.depth()
        )));
    }
    let chi = twist.eval(tower.ctx(1))?;
    let n = (degree + 1).min(tower.depth() as usize);
    let c = coset_series(tower, params, t, 1, chi, n)?;
    if c.len() > degree + 1 && !c[degree + 1].is_zero() {
        return Err(Error::Mismatch(format!(
            "coefficient of T^{} does not vanish",
            degree + 1
        )));
    }
    recover_poly(tower.backend(), &c[..=degree])
}

/// Towers for one prime, keyed by residue degree.
pub struct TowerSet {
    p: u64,
    bound: BigUint,
    towers: HashMap<u32, Tower>,
}

impl TowerSet {
    pub fn new(p: u64, bound: BigUint) -> Self {
        TowerSet {
            p,
            bound,
            towers: HashMap::new(),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Largest `r` with every `F_{p^{f j}}`, `j <= r`, inside the tower budget.
    pub fn max_depth(&self, f: u32) -> u32 {
        let mut r = 0;
        while affordable(self.p, f * (r + 1), TOWER_BUDGET) {
            r += 1;
        }
        r
    }

    /// A tower of residue degree `f` reaching at least `depth`.
    pub fn get(&mut self, f: u32, depth: u32) -> Result<&Tower> {
        let rebuild = self.towers.get(&f).is_none_or(|t| t.depth() < depth);
        if rebuild {
            let tower = Tower::new(self.p, f, depth, &self.bound)?;
            self.towers.insert(f, tower);
        }
        Ok(&self.towers[&f])
    }
}

/// A hypergeometric `L`-factor `L_p(H(alpha;beta|t), M, p^{shift} T)` with a twist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperFactorSpec {
    pub params: HGParams,
    pub t: Rat,
    pub field: AbelianFieldSpec,
    pub twist: TwistSpec,
    pub shift: u32,
}

/// How a factor was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorMethod {
    /// Power sums through the full degree; `confirmed` records the check of
    /// the next coefficient when it was affordable.
    Direct {
        confirmed: Option<bool>,
    },
    /// Cyclotomic fit to the first `known` power sums.
    Fit {
        known: usize,
        alternatives: Vec<EulerFactor>,
    },
    ClosedForm,
}

impl fmt::Display for FactorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorMethod::Direct {
                confirmed: Some(true),
            } => f.write_str("direct (degree confirmed)"),
            FactorMethod::Direct {
                confirmed: Some(false),
            } => f.write_str("direct (degree check failed)"),
            FactorMethod::Direct { confirmed: None } => f.write_str("direct"),
            FactorMethod::Fit {
                known,
                alternatives,
            } => {
                write!(
                    f,
                    "cyclotomic fit to {known} power sums ({} candidates)",
                    alternatives.len()
                )
            }
            FactorMethod::ClosedForm => f.write_str("closed form"),
        }
    }
}

struct Prepared {
    params: HGParams,
    f: u32,
    reps: Vec<u64>,
    classes: Vec<u64>,
    pair_conductor: Option<u64>,
}

fn prepare(spec: &HyperFactorSpec, p: u64) -> Result<Prepared> {
    if spec.params.lcd() % p == 0 {
        return Err(Error::BadPrime {
            p,
            reason: "divides a parameter denominator".into(),
        });
    }
    let m = spec.field.m().lcm(&spec.params.lcd());
    let field = spec.field.lift(m)?;
    let f = field.residue_degree(p)?;
    let reps = field.coset_reps(p)?;
    let def = field_of_definition(&spec.params);
    let k_field = AbelianFieldSpec::new(def.m, def.h_k.clone())?.lift(m)?;
    let mut hk: Vec<u64> = k_field.subgroup().to_vec();
    hk.retain(|&k| field.m() == 1 || k != 0);
    let classes = if m == 1 {
        vec![1]
    } else {
        field.coset_reps_with(p, &hk)?
    };
    let pair_conductor = (k_field.degree() == 2 && classes.len() == 2).then(|| k_field.conductor());
    Ok(Prepared {
        params: spec.params.clone(),
        f,
        reps,
        classes,
        pair_conductor,
    })
}

/// `L_p(H(alpha;beta|t), M, T)` with the twist applied to each prime of `M`,
/// as a product of per-coset series in `T^f`.
pub fn euler_factor_over_m(
    towers: &mut TowerSet,
    spec: &HyperFactorSpec,
) -> Result<(EulerFactor, FactorMethod)> {
    let p = towers.p();
    let prep = prepare(spec, p)?;
    let d = prep.params.d();
    let max_depth = towers.max_depth(prep.f);
    if (max_depth as usize) < d {
        return fit_hyper_factor(towers, spec, &prep, max_depth);
    }
    let depth = ((d + 1) as u32).min(max_depth);
    let tower = towers.get(prep.f, depth)?;
    let be = tower.backend();
    let chi = spec.twist.eval(tower.ctx(1))?;
    let mut total = vec![be.one()];
    let mut confirmed = (depth as usize > d).then_some(true);
    for &k in &prep.reps {
        let c = coset_series(tower, &prep.params, spec.t, k, chi, depth as usize)?;
        if c.len() > d + 1 && !c[d + 1].is_zero() {
            confirmed = Some(false);
        }
        total = series_mul(be, &total, &c[..=d]);
    }
    let qs = be.pow(&be.from_i64(tower.q() as i64), spec.shift as u64);
    let mut pw = be.one();
    for c in total.iter_mut() {
        *c = be.mul(c, &pw);
        pw = be.mul(&pw, &qs);
    }
    let poly = recover_poly(be, &total)?.substitute_power(prep.f as usize);
    Ok((poly, FactorMethod::Direct { confirmed }))
}

fn fit_hyper_factor(
    towers: &mut TowerSet,
    spec: &HyperFactorSpec,
    prep: &Prepared,
    known_depth: u32,
) -> Result<(EulerFactor, FactorMethod)> {
    if known_depth == 0 {
        return Err(Error::Budget(format!(
            "no power sums affordable at p = {}",
            towers.p()
        )));
    }
    if !interlace_check(&prep.params) {
        return Err(Error::Budget(format!(
            "{} is not algebraic and its degree exceeds the budget",
            prep.params
        )));
    }
    let p = towers.p();
    let tower = towers.get(prep.f, known_depth)?;
    let be = tower.backend();
    let chi = spec.twist.eval(tower.ctx(1))?;
    let f = prep.f as usize;
    let q = BigInt::from(tower.q());
    // Power sums in T of the product over the K-classes of cosets.
    let mut sums = vec![BigInt::zero(); f * known_depth as usize];
    for j in 1..=known_depth {
        let mut acc = be.zero();
        for &k in &prep.classes {
            acc = be.add(&acc, &tower.hsum(j, &prep.params, spec.t, k)?);
        }
        let v = be.recover_integer(&acc)?;
        let sign = if chi == -1 && j % 2 == 1 { -1 } else { 1 };
        sums[f * j as usize - 1] = v * sign * BigInt::from(f) * q.pow(spec.shift * j);
    }
    let block = Block {
        degree: prep.params.d() * f * prep.classes.len(),
        multiplicity: (prep.reps.len() / prep.classes.len()) as u32,
        pair_conductor: prep.pair_conductor,
    };
    let scale = BigInt::from(p).pow(spec.shift);
    let normalized = normalize_sums(&sums, &scale)
        .ok_or_else(|| Error::Mismatch("power sums are not p-scaled".into()))?;
    let candidates: Vec<BTreeMap<u64, u32>> = block_candidates(&block)?
        .into_iter()
        .filter(|c| (1..=sums.len()).all(|r| block_sum(c, r as u64) == normalized[r - 1]))
        .collect();
    let alternatives: Vec<EulerFactor> = candidates
        .iter()
        .map(|c| EulerFactor::from_cyclotomic(c, &scale).pow(block.multiplicity))
        .collect();
    let poly = alternatives
        .first()
        .cloned()
        .ok_or_else(|| Error::Mismatch("no cyclotomic factor matches the power sums".into()))?;
    Ok((
        poly,
        FactorMethod::Fit {
            known: sums.len(),
            alternatives,
        },
    ))
}

fn normalize_sums(sums: &[BigInt], scale: &BigInt) -> Option<Vec<i64>> {
    sums.iter()
        .enumerate()
        .map(|(i, s)| {
            let d = scale.pow(i as u32 + 1);
            let (quot, rem) = s.div_rem(&d);
            if rem.is_zero() {
                quot.to_i64()
            } else {
                None
            }
        })
        .collect()
}

/// A factor of `Q(T)` of known degree, raised to `multiplicity`.
///
/// With `pair_conductor = Some(c)` the block is a product of two factors
/// conjugate over the quadratic field of conductor `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub degree: usize,
    pub multiplicity: u32,
    pub pair_conductor: Option<u64>,
}

/// Expected factorisation pattern of `Q_{X,q}(T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub row: &'static str,
    pub fixed: BTreeMap<u64, u32>,
    pub blocks: Vec<Block>,
}

impl Shape {
    pub fn degree(&self) -> usize {
        let fixed: usize = self
            .fixed
            .iter()
            .map(|(&n, &e)| euler_phi(n) as usize * e as usize)
            .sum();
        fixed
            + self
                .blocks
                .iter()
                .map(|b| b.degree * b.multiplicity as usize)
                .sum::<usize>()
    }
}

/// Factorisation pattern of `Q_{X,q}(T)` by family and congruence class of `q`.
pub fn factor_shape(id: PencilId, q: u64) -> Shape {
    let blk = |degree, multiplicity, pair_conductor| Block {
        degree,
        multiplicity,
        pair_conductor,
    };
    let fixed = |v: &[(u64, u32)]| v.iter().copied().collect::<BTreeMap<_, _>>();
    let (row, fixed, blocks) = match id {
        PencilId::F4 => match q % 4 {
            1 => (
                "(deg 2)^3 (deg 1)^12",
                fixed(&[]),
                vec![blk(2, 3, None), blk(1, 12, None)],
            ),
            _ => (
                "(deg 2)^3 (deg 2)^6",
                fixed(&[]),
                vec![blk(2, 3, None), blk(2, 6, None)],
            ),
        },
        PencilId::F1L3 => match q % 7 {
            1 => ("(deg 3)^3 (deg 3)^3", fixed(&[]), vec![blk(6, 3, Some(7))]),
            6 => ("(deg 6)^3", fixed(&[]), vec![blk(6, 3, None)]),
            2 | 4 => ("(deg 9) (deg 9)", fixed(&[]), vec![blk(18, 1, Some(7))]),
            _ => ("(deg 18)", fixed(&[]), vec![blk(18, 1, None)]),
        },
        PencilId::F2L2 => match q % 8 {
            1 => (
                "(1-qT)^6 (deg 2) (deg 1)^2 (deg 2)^2 (deg 2)^2",
                fixed(&[(1, 6)]),
                vec![blk(2, 1, None), blk(1, 2, None), blk(4, 2, Some(4))],
            ),
            5 => (
                "(1-qT)^2 (1+qT)^4 (deg 2) (deg 1)^2 (deg 4)^2",
                fixed(&[(1, 2), (2, 4)]),
                vec![blk(2, 1, None), blk(1, 2, None), blk(8, 1, Some(4))],
            ),
            _ => (
                "(1-qT)^2 (1+qT)^4 (deg 2) (deg 2) (deg 4) (deg 4)",
                fixed(&[(1, 2), (2, 4)]),
                vec![blk(2, 1, None), blk(2, 1, None), blk(4, 2, None)],
            ),
        },
        PencilId::L2L2 => match q % 4 {
            1 => (
                "(1-qT)^8 (deg 2) (deg 4)^2",
                fixed(&[(1, 8)]),
                vec![blk(2, 1, None), blk(4, 2, None)],
            ),
            _ => (
                "(1-q^2T^2)^4 (deg 2) (deg 8)",
                fixed(&[(1, 4), (2, 4)]),
                vec![blk(2, 1, None), blk(8, 1, None)],
            ),
        },
        PencilId::L4 => match q % 5 {
            1 => (
                "(1-qT)^2 (deg 4)^4",
                fixed(&[(1, 2)]),
                vec![blk(4, 4, None)],
            ),
            4 => (
                "(1-qT)^2 (deg 8)^2",
                fixed(&[(1, 2)]),
                vec![blk(8, 2, None)],
            ),
            _ => (
                "(1-qT)^2 (deg 16)",
                fixed(&[(1, 2)]),
                vec![blk(16, 1, None)],
            ),
        },
    };
    Shape { row, fixed, blocks }
}

const MAX_CANDIDATES: usize = 2_000_000;

/// Every multiset `{n: e_n}` with `sum e_n phi(n) = degree` allowed in the block.
pub fn block_candidates(block: &Block) -> Result<Vec<BTreeMap<u64, u32>>> {
    let deg = block.degree as u64;
    let orders: Vec<u64> = (1..=2 * deg * deg + 2)
        .filter(|&n| euler_phi(n) <= deg)
        .collect();
    let mut out = Vec::new();
    let mut current = BTreeMap::new();
    enumerate_blocks(
        &orders,
        0,
        deg,
        block.pair_conductor,
        &mut current,
        &mut out,
    )?;
    Ok(out)
}

fn enumerate_blocks(
    orders: &[u64],
    idx: usize,
    rem: u64,
    pair: Option<u64>,
    current: &mut BTreeMap<u64, u32>,
    out: &mut Vec<BTreeMap<u64, u32>>,
) -> Result<()> {
    if rem == 0 {
        if out.len() >= MAX_CANDIDATES {
            return Err(Error::Budget("too many cyclotomic candidates".into()));
        }
        out.push(current.clone());
        return Ok(());
    }
    if idx == orders.len() {
        return Ok(());
    }
    let n = orders[idx];
    let phi = euler_phi(n);
    let step = match pair {
        Some(c) if n % c != 0 => 2,
        _ => 1,
    };
    let mut e = 0u32;
    while phi * e as u64 <= rem {
        if e > 0 {
            current.insert(n, e);
        }
        enumerate_blocks(orders, idx + 1, rem - phi * e as u64, pair, current, out)?;
        e += step;
    }
    current.remove(&n);
    Ok(())
}

/// `sum_n e_n c_n(r)`: the normalised `r`-th power sum of a cyclotomic multiset.
pub fn block_sum(orders: &BTreeMap<u64, u32>, r: u64) -> i64 {
    orders
        .iter()
        .map(|(&n, &e)| e as i64 * ramanujan_sum(n, r))
        .sum()
}

/// A solution `P = R Q` of the shape fit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeFit {
    pub r: EulerFactor,
    pub q: EulerFactor,
    pub q_orders: BTreeMap<u64, u32>,
}

impl ShapeFit {
    pub fn p(&self) -> EulerFactor {
        self.r.mul(&self.q)
    }
}

/// All `P = R Q` consistent with the power sums `a_1..a_n` of `P`, where `R`
/// is a cubic with functional equation and `Q` follows `shape`.
pub fn fit_shape(q: u64, a: &[BigInt], shape: &Shape) -> Result<Vec<ShapeFit>> {
    if a.is_empty() {
        return Err(Error::InvalidParams(
            "at least one power sum is required".into(),
        ));
    }
    let n = a.len();
    let qb = BigInt::from(q);
    // Normalised power sums of every Q allowed by the shape.
    let mut partial: Vec<(BTreeMap<u64, u32>, Vec<i64>)> =
        vec![(shape.fixed.clone(), sums_of(&shape.fixed, n))];
    for block in &shape.blocks {
        let cands = block_candidates(block)?;
        let mut next: HashMap<Vec<(u64, u32)>, Vec<i64>> = HashMap::new();
        for (orders, sums) in &partial {
            for c in &cands {
                let mut merged = orders.clone();
                for (&k, &e) in c {
                    *merged.entry(k).or_insert(0) += e * block.multiplicity;
                }
                let key: Vec<(u64, u32)> = merged.iter().map(|(&k, &e)| (k, e)).collect();
                if next.contains_key(&key) {
                    continue;
                }
                let s: Vec<i64> = (0..n)
                    .map(|r| sums[r] + block.multiplicity as i64 * block_sum(c, r as u64 + 1))
                    .collect();
                next.insert(key, s);
                if next.len() > MAX_CANDIDATES {
                    return Err(Error::Budget("too many shape candidates".into()));
                }
            }
        }
        partial = next
            .into_iter()
            .map(|(k, s)| (k.into_iter().collect(), s))
            .collect();
    }
    let mut out = Vec::new();
    let weil = BigInt::from(3) * &qb;
    for (orders, sums) in partial {
        let rho: Vec<BigInt> = (0..n)
            .map(|r| &a[r] - qb.pow(r as u32 + 1) * sums[r])
            .collect();
        let c1 = -rho[0].clone();
        if c1.abs() > weil {
            continue;
        }
        for eps in [1i64, -1] {
            let r_poly = cubic_with_functional_equation(q, &c1, eps);
            if r_poly.power_sums(n) == rho {
                out.push(ShapeFit {
                    q: EulerFactor::from_cyclotomic(&orders, &qb),
                    r: r_poly,
                    q_orders: orders.clone(),
                });
            }
        }
    }
    out.sort_by(|x, y| x.p().coeffs.cmp(&y.p().coeffs));
    out.dedup_by(|x, y| x.p() == y.p());
    Ok(out)
}

fn sums_of(orders: &BTreeMap<u64, u32>, n: usize) -> Vec<i64> {
    (1..=n as u64).map(|r| block_sum(orders, r)).collect()
}

/// `1 + c_1 T + eps q c_1 T^2 + eps q^3 T^3`.
pub fn cubic_with_functional_equation(q: u64, c1: &BigInt, eps: i64) -> EulerFactor {
    let qb = BigInt::from(q);
    EulerFactor::new(vec![
        BigInt::one(),
        c1.clone(),
        c1 * &qb * eps,
        qb.pow(3) * eps,
    ])
    .expect("constant term is 1")
}

/// Complete `c_0..c_k` of a degree-21 polynomial with
/// `c_{21-j} = eps q^{21-2j} c_j`.
pub fn complete_functional_equation(q: u64, head: &[BigInt], eps: i64) -> Result<EulerFactor> {
    let half = P_DEGREE / 2;
    if head.len() < half + 1 {
        return Err(Error::InvalidParams(format!("need c_0..c_{half}")));
    }
    let qb = BigInt::from(q);
    let mut c: Vec<BigInt> = head[..=half].to_vec();
    for i in half + 1..=P_DEGREE {
        let j = P_DEGREE - i;
        c.push(&head[j] * qb.pow((P_DEGREE - 2 * j) as u32) * eps);
    }
    EulerFactor::new(c)
}

/// `P_{X,q}(T)` from the power sums `a_r = N_r - 1 - q^r - q^{2r}`, `r >= 1`.
///
/// Needs `a_1..a_11`; the sign `eps` is read off `c_11 = eps q c_10`, or from
/// `a_12` when `c_10 = 0`.
pub fn p_from_power_sums(q: u64, a: &[BigInt]) -> Result<EulerFactor> {
    let half = P_DEGREE / 2 + 1;
    if a.len() < half {
        return Err(Error::InvalidParams(format!(
            "need {half} power sums, got {}",
            a.len()
        )));
    }
    let head = EulerFactor::from_power_sums(&a[..half])?;
    let c10 = head.coeff(half - 1);
    let c11 = head.coeff(half);
    let qb = BigInt::from(q);
    let eps = if !c10.is_zero() {
        let (e, rem) = c11.div_rem(&(&qb * &c10));
        if !rem.is_zero() || e.abs() != BigInt::one() {
            return Err(Error::Mismatch("c_11 is not +-q c_10".into()));
        }
        e.to_i64().expect("+-1")
    } else {
        let a12 = a
            .get(half)
            .ok_or_else(|| Error::Precondition("c_10 = 0 and a_12 is unavailable".into()))?;
        let full_head: Vec<BigInt> = (0..=half).map(|i| head.coeff(i)).collect();
        [1, -1]
            .into_iter()
            .find(|&e| {
                complete_functional_equation(q, &full_head, e)
                    .is_ok_and(|p| &p.power_sums(half + 1)[half] == a12)
            })
            .ok_or_else(|| Error::Mismatch("no sign reproduces a_12".into()))?
    };
    let full_head: Vec<BigInt> = (0..=half).map(|i| head.coeff(i)).collect();
    complete_functional_equation(q, &full_head, eps)
}

/// `a_r = N_r - 1 - q^r - q^{2r}` for `r = 1..=max_r` by Gauss-sum point
/// counting over `F_{p^r}`.
pub fn power_sums_from_counts(
    inst: &PencilInstance,
    p: u64,
    max_r: u32,
) -> Result<(Vec<BigInt>, Vec<BigInt>)> {
    check_good(inst, p)?;
    let mut counts = Vec::new();
    let mut sums = Vec::new();
    for r in 1..=max_r {
        if !affordable(p, r, COUNT_BUDGET) {
            return Err(Error::Budget(format!(
                "counting over F_{{{p}^{r}}} exceeds the count budget"
            )));
        }
        let ctx = build_field(p, r)?;
        let backend = crate::charsums::select_backend(&ctx, &count_bound(ctx.q(), 3));
        let gt = gauss_table(&ctx, &backend)?;
        let n = count_with_tables(inst, &ctx, &backend, &gt, CountMode::KoblitzBoundary)?;
        let qb = BigInt::from(ctx.q());
        sums.push(&n - 1 - &qb - &qb * &qb);
        counts.push(n);
    }
    Ok((counts, sums))
}

/// `P_{X,p}(T)` from point counts over `F_{p^r}`, `r <= max_r` (at least 11).
pub fn p_from_counts(inst: &PencilInstance, p: u64, max_r: u32) -> Result<EulerFactor> {
    check_good(inst, p)?;
    if max_r < 11 {
        return Err(Error::Precondition("max_r must be at least 11".into()));
    }
    let (_, a) = power_sums_from_counts(inst, p, max_r)?;
    p_from_power_sums(p, &a)
}

/// The parameters `{1/4, 1/2, 3/4; 0, 0, 0}` of the common factor.
pub fn common_params() -> HGParams {
    crate::pencils::common_params()
}

/// The cubic `R_{psi,p}(T)` shared by the five families, from `H_p`, `H_{p^2}`
/// and the functional equation; `H_{p^3}` resolves `c_1 = 0` when affordable.
pub fn common_factor_r(towers: &mut TowerSet, psi: Rat) -> Result<(EulerFactor, FactorMethod)> {
    let p = towers.p();
    let t = (psi * psi * psi * psi).recip();
    let params = common_params();
    let depth = towers.max_depth(1).min(4);
    if depth < 2 {
        return Err(Error::Budget(format!(
            "F_{{{p}^2}} exceeds the tower budget"
        )));
    }
    let tower = towers.get(1, depth)?;
    let be = tower.backend();
    let h: Vec<BigInt> = (1..=depth)
        .map(|r| be.recover_integer(&tower.hsum(r, &params, t, 1)?))
        .collect::<Result<Vec<_>>>()?;
    let head = EulerFactor::from_power_sums(&h[..2])?;
    let (c1, c2) = (head.coeff(1), head.coeff(2));
    let qb = BigInt::from(p);
    let eps = if !c1.is_zero() {
        let (e, rem) = c2.div_rem(&(&qb * &c1));
        if !rem.is_zero() || e.abs() != BigInt::one() {
            return Err(Error::Mismatch(format!(
                "c_2 = {c2} is not +-p c_1 with c_1 = {c1}"
            )));
        }
        e.to_i64().expect("+-1")
    } else if depth >= 3 {
        let c3 = EulerFactor::from_power_sums(&h[..3])?.coeff(3);
        (c3 / qb.pow(3))
            .to_i64()
            .ok_or_else(|| Error::Mismatch("c_3 is not +-p^3".into()))?
    } else {
        return Err(Error::Budget(
            "c_1 = 0 and H over F_{p^3} is unaffordable".into(),
        ));
    };
    let r = cubic_with_functional_equation(p, &c1, eps);
    let confirmed = if depth >= 3 {
        let direct = EulerFactor::from_power_sums(&h)?;
        Some(direct == r.truncate(depth as usize))
    } else {
        None
    };
    Ok((r, FactorMethod::Direct { confirmed }))
}

/// `Q_{F4,psi,q}(T)` through quadratic characters.
pub fn q_f4_closed_form(psi: Rat, p: u64, f: u32) -> Result<EulerFactor> {
    let q = BigInt::from(p).pow(f);
    let one = Rat::from_integer(1);
    let psi2 = psi * psi;
    let lin = |a: Rat| -> Result<EulerFactor> {
        Ok(EulerFactor::linear(&q * quadratic_character(a, p, f)?))
    };
    let qm4 = (&q % 4u32).to_u32().expect("small");
    let twisted = lin(one - psi2)?.pow(3).mul(&lin(-one - psi2)?.pow(3));
    if qm4 == 1 {
        Ok(twisted.mul(&lin(one - psi2 * psi2)?.pow(12)))
    } else {
        Ok(twisted
            .mul(&EulerFactor::linear(q.clone()).pow(6))
            .mul(&EulerFactor::linear(-q).pow(6)))
    }
}

/// `prod over primes of M above p of (1 - (p^{shift} T)^f)`.
pub fn dedekind_local(field: &AbelianFieldSpec, p: u64, shift: u32) -> Result<EulerFactor> {
    let f = field.residue_degree(p)?;
    let g = field.num_primes(p)?;
    let c = BigInt::from(p).pow(shift * f);
    Ok(EulerFactor::linear(c)
        .substitute_power(f as usize)
        .pow(g as u32))
}

/// `zeta_M / zeta_Q` at `p`, shifted by `p^{shift}`.
pub fn dedekind_ratio_local(field: &AbelianFieldSpec, p: u64, shift: u32) -> Result<EulerFactor> {
    dedekind_local(field, p, shift)?.div_exact(&dedekind_local(
        &AbelianFieldSpec::rational(),
        p,
        shift,
    )?)
}

/// One factor on the right-hand side of a family's decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorSource {
    Common,
    Hyper(HyperFactorSpec),
    Dedekind { field: AbelianFieldSpec, shift: u32 },
    DedekindRatio { field: AbelianFieldSpec, shift: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSpec {
    pub label: String,
    pub source: FactorSource,
    pub power: u32,
}

fn hyper(params: &str, t: Rat, field: AbelianFieldSpec, twist: TwistSpec) -> FactorSource {
    let (a, b) = params.split_once(';').expect("static parameters");
    FactorSource::Hyper(HyperFactorSpec {
        params: HGParams::parse(a, b).expect("static parameters"),
        t,
        field,
        twist,
        shift: 1,
    })
}

/// The factors of `L(X_psi, s)` for a family, with `t = psi^{-4}`.
pub fn main_theorem_factors(inst: &PencilInstance) -> Vec<FactorSpec> {
    let t = inst.t();
    let ti = inst.psi4();
    let spec = |label: &str, source: FactorSource, power: u32| FactorSpec {
        label: label.to_string(),
        source,
        power,
    };
    let mut out = vec![spec(
        "L(H(1/4,1/2,3/4;0,0,0|t), s)",
        FactorSource::Common,
        1,
    )];
    let h2 = || {
        hyper(
            "1/4,3/4;0,1/2",
            t,
            AbelianFieldSpec::rational(),
            TwistSpec::MinusOne,
        )
    };
    let h1 = || {
        hyper(
            "1/2;0",
            t,
            AbelianFieldSpec::gaussian(),
            TwistSpec::SqrtMinusOne,
        )
    };
    match inst.id {
        PencilId::F4 => {
            out.push(spec("L(H(1/4,3/4;0,1/2|t), s-1, phi_-1)^3", h2(), 3));
            out.push(spec(
                "L(H(1/2;0|t), Q(sqrt(-1)), s-1, phi_sqrt(-1))^6",
                h1(),
                6,
            ));
        }
        PencilId::F1L3 => {
            let m = AbelianFieldSpec::cyclotomic(7);
            out.push(spec(
                "L(H(1/14,9/14,11/14;0,1/4,3/4|1/t), Q(zeta_7), s-1)",
                hyper("1/14,9/14,11/14;0,1/4,3/4", ti, m, TwistSpec::Trivial),
                1,
            ));
        }
        PencilId::F2L2 => {
            let z8 = AbelianFieldSpec::cyclotomic(8);
            out.push(spec(
                "L(Q(zeta_8)|Q, s-1)^2",
                FactorSource::DedekindRatio {
                    field: z8.clone(),
                    shift: 1,
                },
                2,
            ));
            out.push(spec("L(H(1/4,3/4;0,1/2|t), s-1, phi_-1)", h2(), 1));
            out.push(spec(
                "L(H(1/2;0|t), Q(sqrt(-1)), s-1, phi_sqrt(-1))",
                h1(),
                1,
            ));
            out.push(spec(
                "L(H(1/8,5/8;0,1/4|1/t), Q(zeta_8), s-1, phi_sqrt(2))",
                hyper("1/8,5/8;0,1/4", ti, z8, TwistSpec::SqrtTwo),
                1,
            ));
        }
        PencilId::L2L2 => {
            out.push(spec(
                "zeta_Q(sqrt(-1))(s-1)^4",
                FactorSource::Dedekind {
                    field: AbelianFieldSpec::gaussian(),
                    shift: 1,
                },
                4,
            ));
            out.push(spec("L(H(1/4,3/4;0,1/2|t), s-1, phi_-1)", h2(), 1));
            out.push(spec(
                "L(H(1/8,3/8,5/8,7/8;0,1/4,1/2,3/4|t), Q(sqrt(-1)), s-1, phi_sqrt(-1) phi_psi)",
                hyper(
                    "1/8,3/8,5/8,7/8;0,1/4,1/2,3/4",
                    t,
                    AbelianFieldSpec::gaussian(),
                    TwistSpec::Product(vec![TwistSpec::SqrtMinusOne, TwistSpec::Psi(inst.psi)]),
                ),
                1,
            ));
        }
        PencilId::L4 => {
            out.push(spec(
                "zeta(s-1)^2",
                FactorSource::Dedekind {
                    field: AbelianFieldSpec::rational(),
                    shift: 1,
                },
                2,
            ));
            out.push(spec(
                "L(H(1/5,2/5,3/5,4/5;0,1/4,1/2,3/4|1/t), Q(zeta_5), s-1)",
                hyper(
                    "1/5,2/5,3/5,4/5;0,1/4,1/2,3/4",
                    ti,
                    AbelianFieldSpec::cyclotomic(5),
                    TwistSpec::Trivial,
                ),
                1,
            ));
        }
    }
    out
}

/// One evaluated factor.
#[derive(Clone, Debug)]
pub struct FactorReport {
    pub spec: FactorSpec,
    /// The local factor before raising to `spec.power`.
    pub poly: EulerFactor,
    pub method: FactorMethod,
}

impl FactorReport {
    pub fn total(&self) -> EulerFactor {
        self.poly.pow(self.spec.power)
    }

    /// Every total consistent with the data, the chosen one first.
    pub fn candidates(&self) -> Vec<EulerFactor> {
        match &self.method {
            FactorMethod::Fit { alternatives, .. } => alternatives
                .iter()
                .map(|a| a.pow(self.spec.power))
                .collect(),
            _ => vec![self.total()],
        }
    }
}

const MAX_PRODUCT_CANDIDATES: usize = 100_000;

/// Every product of factor candidates.
pub fn product_candidates(factors: &[FactorReport]) -> Result<Vec<EulerFactor>> {
    let mut out = vec![EulerFactor::one()];
    for f in factors {
        let cands = f.candidates();
        if out.len() * cands.len() > MAX_PRODUCT_CANDIDATES {
            return Err(Error::Budget("too many candidate products".into()));
        }
        out = out
            .iter()
            .flat_map(|a| cands.iter().map(move |b| a.mul(b)))
            .collect();
    }
    Ok(out)
}

/// Bound shared by every factor at `p`.
pub fn verification_bound(p: u64) -> BigUint {
    factor_bound(p, P_DEGREE, 1)
}

/// Evaluate one factor at `p`.
pub fn evaluate_factor(
    towers: &mut TowerSet,
    inst: &PencilInstance,
    spec: &FactorSpec,
) -> Result<FactorReport> {
    let p = towers.p();
    let (poly, method) = match &spec.source {
        FactorSource::Common => common_factor_r(towers, inst.psi)?,
        FactorSource::Hyper(h) => euler_factor_over_m(towers, h)?,
        FactorSource::Dedekind { field, shift } => {
            (dedekind_local(field, p, *shift)?, FactorMethod::ClosedForm)
        }
        FactorSource::DedekindRatio { field, shift } => (
            dedekind_ratio_local(field, p, *shift)?,
            FactorMethod::ClosedForm,
        ),
    };
    Ok(FactorReport {
        spec: spec.clone(),
        poly,
        method,
    })
}

/// `R` and `Q` for a family at `p` with every factor listed.
#[derive(Clone, Debug)]
pub struct ZetaReport {
    pub id: PencilId,
    pub psi: Rat,
    pub p: u64,
    pub r: EulerFactor,
    pub q: EulerFactor,
    /// Product of the non-common factors; equals `q` except where a closed
    /// form supplies `q`.
    pub q_assembled: EulerFactor,
    pub q_orders: Option<BTreeMap<u64, u32>>,
    pub factors: Vec<FactorReport>,
}

impl ZetaReport {
    pub fn p_poly(&self) -> EulerFactor {
        self.r.mul(&self.q)
    }
}

/// Assemble `R` and `Q` at `p`; `Q` for `F4` comes from the closed form.
pub fn zeta_factors(inst: &PencilInstance, p: u64) -> Result<ZetaReport> {
    check_good(inst, p)?;
    let mut towers = TowerSet::new(p, verification_bound(p));
    let mut factors = Vec::new();
    for spec in main_theorem_factors(inst) {
        factors.push(evaluate_factor(&mut towers, inst, &spec)?);
    }
    let r = factors[0].total();
    let q_assembled = factors[1..]
        .iter()
        .fold(EulerFactor::one(), |acc, f| acc.mul(&f.total()));
    let q = if inst.id == PencilId::F4 {
        q_f4_closed_form(inst.psi, p, 1)?
    } else {
        q_assembled.clone()
    };
    let q_orders = cyclotomic_factorization(&q, &BigInt::from(p));
    Ok(ZetaReport {
        id: inst.id,
        psi: inst.psi,
        p,
        r,
        q,
        q_assembled,
        q_orders,
        factors,
    })
}

/// How the left-hand side `P_{X,p}(T)` was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LhsMethod {
    /// Newton identities on the counted power sums.
    Newton,
    /// `R Q` fitted to the counted power sums under the factor shape.
    ShapeFit { solutions: usize },
}

/// Outcome of comparing both sides of a family's decomposition at `p`.
#[derive(Clone, Debug)]
pub struct MainTheoremReport {
    pub id: PencilId,
    pub psi: Rat,
    pub p: u64,
    pub depth: usize,
    pub counts: Vec<BigInt>,
    pub power_sums: Vec<BigInt>,
    pub lhs: EulerFactor,
    pub lhs_method: LhsMethod,
    pub rhs: EulerFactor,
    pub factors: Vec<FactorReport>,
    pub shape: Shape,
    /// Every counted power sum agrees with the right-hand side.
    pub counts_match: bool,
    /// Some left-hand candidate and some right-hand candidate agree in their
    /// first `depth + 1` coefficients.
    pub matched: bool,
    /// Both sides are pinned down by the available data.
    pub determined: bool,
}

/// Compare `P_{X,p}` from point counts with the product of the factors of the
/// family's decomposition through `T^depth` (`depth <= 21`).
pub fn verify_main_theorem(
    inst: &PencilInstance,
    p: u64,
    depth: usize,
) -> Result<MainTheoremReport> {
    check_good(inst, p)?;
    let depth = depth.min(P_DEGREE);
    let mut towers = TowerSet::new(p, verification_bound(p));
    let mut factors = Vec::new();
    for spec in main_theorem_factors(inst) {
        factors.push(evaluate_factor(&mut towers, inst, &spec)?);
    }
    let rhs_candidates = product_candidates(&factors)?;
    let mut max_r = 0;
    while max_r < depth as u32 && affordable(p, max_r + 1, COUNT_BUDGET) {
        max_r += 1;
    }
    if max_r == 0 {
        return Err(Error::Budget(format!(
            "no point count affordable at p = {p}"
        )));
    }
    let (counts, power_sums) = power_sums_from_counts(inst, p, max_r)?;
    let shape = factor_shape(inst.id, p);
    let (lhs_candidates, lhs_method) = if depth <= max_r as usize {
        (
            vec![EulerFactor::from_power_sums(&power_sums)?],
            LhsMethod::Newton,
        )
    } else {
        let fits: Vec<EulerFactor> = fit_shape(p, &power_sums, &shape)?
            .iter()
            .map(ShapeFit::p)
            .collect();
        let n = fits.len();
        (fits, LhsMethod::ShapeFit { solutions: n })
    };
    let agree = |a: &EulerFactor, b: &EulerFactor| (0..=depth).all(|k| a.coeff(k) == b.coeff(k));
    let fits_counts = |c: &EulerFactor| c.power_sums(max_r as usize) == power_sums;
    let pair = rhs_candidates
        .iter()
        .filter(|c| fits_counts(c))
        .find_map(|c| {
            lhs_candidates
                .iter()
                .find(|l| agree(l, c))
                .map(|l| (l.clone(), c.clone()))
        });
    let matched = pair.is_some();
    let (lhs, rhs) = match pair {
        Some(found) => found,
        None => {
            let rhs = rhs_candidates
                .iter()
                .find(|c| fits_counts(c))
                .unwrap_or(&rhs_candidates[0])
                .clone();
            let lhs = lhs_candidates
                .first()
                .cloned()
                .unwrap_or_else(EulerFactor::one);
            (lhs, rhs)
        }
    };
    let counts_match = fits_counts(&rhs);
    let determined = lhs_candidates.len() == 1 && rhs_candidates.len() == 1;
    Ok(MainTheoremReport {
        id: inst.id,
        psi: inst.psi,
        p,
        depth,
        counts,
        power_sums,
        lhs,
        lhs_method,
        rhs,
        factors,
        shape,
        counts_match,
        matched,
        determined,
    })
}

/// `1 - (a/p) T`, the local factor of the quadratic character of `a`.
pub fn legendre_factor(a: Rat, p: u64) -> Result<EulerFactor> {
    Ok(EulerFactor::linear(BigInt::from(quadratic_character(
        a, p, 1,
    )?)))
}

/// The two quadratic-character identities for the algebraic factors of `F4`:
/// returns `(lhs_1, rhs_1, lhs_2, rhs_2)` at `p` for `t = psi^{-4}`.
pub fn f4_character_identities(
    psi: Rat,
    p: u64,
) -> Result<(EulerFactor, EulerFactor, EulerFactor, EulerFactor)> {
    let inst = PencilInstance::new(PencilId::F4, psi)?;
    check_good(&inst, p)?;
    let t = inst.t();
    let mut towers = TowerSet::new(p, factor_bound(p, 4, 1));
    let h2 = HyperFactorSpec {
        params: HGParams::parse("1/4,3/4", "0,1/2")?,
        t,
        field: AbelianFieldSpec::rational(),
        twist: TwistSpec::MinusOne,
        shift: 0,
    };
    let h1 = HyperFactorSpec {
        params: HGParams::parse("1/2", "0")?,
        t,
        field: AbelianFieldSpec::gaussian(),
        twist: TwistSpec::SqrtMinusOne,
        shift: 0,
    };
    let (l1, _) = euler_factor_over_m(&mut towers, &h2)?;
    let (l2, _) = euler_factor_over_m(&mut towers, &h1)?;
    let one = Rat::from_integer(1);
    let two = Rat::from_integer(2);
    let psi2 = psi * psi;
    let r1 = legendre_factor(one - psi2, p)?.mul(&legendre_factor(-one - psi2, p)?);
    let r2 = legendre_factor(two * (one - psi2 * psi2), p)?
        .mul(&legendre_factor(-two * (one - psi2 * psi2), p)?);
    Ok((l1, r1, l2, r2))
}
