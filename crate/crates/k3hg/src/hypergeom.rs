//! Hypergeometric parameter algebra and the three finite field sums.
//!
//! Parameters for the sums are stored modulo `Z` in `[0, 1)`, with `0` in the
//! role of the classical lower parameter `1`. The series and differential
//! operator helpers at the end of the module take raw rationals instead.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::arith::{addmod, invmod, mulmod, powmod, reduce_big};
use crate::charsums::{BackendValue, ExactBackend, GaussTable};
use crate::error::{Error, Result};
use crate::finitefield::{Elem, FieldContext, PrimePower};

/// A rational number with machine-sized numerator and denominator.
pub type Rat = Ratio<i64>;

/// Orientation of the constant `M` inside the hybrid sum's character argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MDirection {
    /// `omega(sign * M * t)` with `M = prod p^p / prod q^q`.
    AsStated,
    /// `omega(sign * M^{-1} * t)`.
    Reciprocal,
}

/// The orientation fixed by requiring the hybrid sum to agree with the
/// classical one wherever both are defined.
pub const M_DIRECTION: MDirection = MDirection::Reciprocal;

fn frac(x: Rat) -> Rat {
    x - x.floor()
}

/// Parse `"1/4,1/2,3/4"` (empty string for the empty multiset).
pub fn parse_rationals(s: &str) -> Result<Vec<Rat>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (n, d) = match t.split_once('/') {
                Some((n, d)) => (n.trim(), d.trim()),
                None => (t, "1"),
            };
            let n: i64 = n
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad rational {t:?}")))?;
            let d: i64 = d
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad rational {t:?}")))?;
            if d == 0 {
                return Err(Error::InvalidParams(format!("zero denominator in {t:?}")));
            }
            Ok(Rat::new(n, d))
        })
        .collect()
}

/// Disjoint multisets `alpha`, `beta` of rationals in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HGParams {
    alpha: Vec<Rat>,
    beta: Vec<Rat>,
}

/// Reduce modulo `Z`, sort, and check disjointness.
pub fn canonicalize(alpha_raw: &[Rat], beta_raw: &[Rat]) -> Result<HGParams> {
    HGParams::new(alpha_raw, beta_raw)
}

impl HGParams {
    pub fn new(alpha: &[Rat], beta: &[Rat]) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::InvalidParams(format!(
                "alpha has {} entries but beta has {}",
                alpha.len(),
                beta.len()
            )));
        }
        let mut alpha: Vec<Rat> = alpha.iter().map(|&a| frac(a)).collect();
        let mut beta: Vec<Rat> = beta.iter().map(|&b| frac(b)).collect();
        alpha.sort();
        beta.sort();
        if alpha.iter().any(|a| beta.contains(a)) {
            return Err(Error::NotDisjoint);
        }
        Ok(HGParams { alpha, beta })
    }

    /// Parse comma separated lists such as `"1/4,3/4"` and `"0,1/2"`.
    pub fn parse(alpha: &str, beta: &str) -> Result<Self> {
        Self::new(&parse_rationals(alpha)?, &parse_rationals(beta)?)
    }

    pub fn alpha(&self) -> &[Rat] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Rat] {
        &self.beta
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }

    /// Least common denominator of all entries.
    pub fn lcd(&self) -> u64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .fold(1i64, |acc, x| acc.lcm(x.denom())) as u64
    }

    /// `(k alpha, k beta)` reduced mod `Z`.
    pub fn scale(&self, k: i64) -> Result<HGParams> {
        let s = |v: &[Rat]| v.iter().map(|&x| x * k).collect::<Vec<_>>();
        HGParams::new(&s(&self.alpha), &s(&self.beta))
    }

    /// True when every entry becomes an integer after multiplying by `n`.
    pub fn cleared_by(&self, n: u64) -> bool {
        self.alpha
            .iter()
            .chain(&self.beta)
            .all(|x| (x * n as i64).is_integer())
    }
}

impl fmt::Display for HGParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[Rat]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{};{}", show(&self.alpha), show(&self.beta))
    }
}

/// The field of definition as a conductor and a stabiliser subgroup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefField {
    pub m: u64,
    pub h_k: Vec<u64>,
}

impl DefField {
    /// `[K : Q]`.
    pub fn degree(&self) -> usize {
        units(self.m).len() / self.h_k.len()
    }

    pub fn is_rational(&self) -> bool {
        self.degree() == 1
    }
}

/// Units of `Z/mZ` in increasing order (`{0}` for `m = 1`).
pub fn units(m: u64) -> Vec<u64> {
    if m == 1 {
        return vec![0];
    }
    (1..m).filter(|k| k.gcd(&m) == 1).collect()
}

pub fn field_of_definition(params: &HGParams) -> DefField {
    let m = params.lcd();
    let h_k = units(m)
        .into_iter()
        .filter(|&k| m == 1 || params.scale(k as i64).ok().as_ref() == Some(params))
        .collect();
    DefField { m, h_k }
}

/// `alpha = alpha0 + alpha'` with `alpha0` the largest part defined over `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitData {
    pub alpha0: Vec<Rat>,
    pub beta0: Vec<Rat>,
    pub alpha_prime: Vec<Rat>,
    pub beta_prime: Vec<Rat>,
}

fn rational_part(v: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let mut by_den: BTreeMap<i64, BTreeMap<i64, usize>> = BTreeMap::new();
    for x in v {
        *by_den
            .entry(*x.denom())
            .or_default()
            .entry(*x.numer())
            .or_default() += 1;
    }
    let mut rational = Vec::new();
    for (&n, counts) in &by_den {
        let orbit: Vec<i64> = units(n as u64).into_iter().map(|a| a as i64).collect();
        let c = orbit
            .iter()
            .map(|a| counts.get(a).copied().unwrap_or(0))
            .min()
            .unwrap_or(0);
        for &a in &orbit {
            rational.extend(std::iter::repeat(Rat::new(a, n)).take(c));
        }
    }
    rational.sort();
    let mut rest = v.to_vec();
    for x in &rational {
        let pos = rest
            .iter()
            .position(|y| y == x)
            .expect("rational part is a sub-multiset");
        rest.remove(pos);
    }
    (rational, rest)
}

/// The maximal Galois-stable part of `(alpha, beta)`, independent of `q`.
pub fn rational_split(params: &HGParams) -> SplitData {
    let (alpha0, alpha_prime) = rational_part(&params.alpha);
    let (beta0, beta_prime) = rational_part(&params.beta);
    SplitData {
        alpha0,
        beta0,
        alpha_prime,
        beta_prime,
    }
}

/// True when `p` does not divide any denominator.
pub fn is_good(params: &HGParams, p: u64) -> bool {
    params.lcd() % p != 0
}

pub fn split_for_q(params: &HGParams, pp: &PrimePower) -> Result<SplitData> {
    if !is_good(params, pp.p) {
        return Err(Error::BadPrime {
            p: pp.p,
            reason: "divides a parameter denominator".into(),
        });
    }
    let split = rational_split(params);
    let qx = pp.qx() as i64;
    let cleared = split
        .alpha_prime
        .iter()
        .chain(&split.beta_prime)
        .all(|x| (x * qx).is_integer());
    if cleared {
        Ok(split)
    } else {
        Err(Error::NotSplittable { q: pp.q })
    }
}

/// Gamma vectors and derived constants of a parameter pair defined over `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BCMData {
    pub p_list: Vec<u64>,
    pub q_list: Vec<u64>,
    /// `(n, e)`: `Phi_n^e` divides `D(x)` exactly.
    pub d_indices: Vec<(u64, u32)>,
    pub delta: u64,
    pub m_value: BigRational,
    pub epsilon: i32,
}

fn primitive_counts(v: &[Rat]) -> Result<BTreeMap<u64, usize>> {
    let mut by_den: BTreeMap<u64, usize> = BTreeMap::new();
    for x in v {
        *by_den.entry(*x.denom() as u64).or_default() += 1;
    }
    let mut out = BTreeMap::new();
    for (n, total) in by_den {
        let phi = units(n).len();
        if total % phi != 0 {
            return Err(Error::NotRational);
        }
        out.insert(n, total / phi);
    }
    Ok(out)
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

pub fn gamma_vectors(alpha0: &[Rat], beta0: &[Rat]) -> Result<BCMData> {
    let ca = primitive_counts(alpha0)?;
    let cb = primitive_counts(beta0)?;
    for v in [alpha0, beta0] {
        if !rational_part(v).1.is_empty() {
            return Err(Error::NotRational);
        }
    }
    let l = ca.keys().chain(cb.keys()).fold(1u64, |acc, n| acc.lcm(n));
    let divs = divisors(l);
    let mut e: BTreeMap<u64, i64> = BTreeMap::new();
    for &n in divs.iter().rev() {
        let c = *ca.get(&n).unwrap_or(&0) as i64 - *cb.get(&n).unwrap_or(&0) as i64;
        let above: i64 = e
            .iter()
            .filter(|(&m, _)| m != n && m % n == 0)
            .map(|(_, &v)| v)
            .sum();
        e.insert(n, c - above);
    }
    let mut p_list = Vec::new();
    let mut q_list = Vec::new();
    for (&n, &v) in &e {
        if v > 0 {
            p_list.extend(std::iter::repeat(n).take(v as usize));
        } else if v < 0 {
            q_list.extend(std::iter::repeat(n).take((-v) as usize));
        }
    }
    let mut d_indices = Vec::new();
    let mut delta = 0;
    for &n in &divs {
        let num = p_list.iter().filter(|&&x| x % n == 0).count();
        let den = q_list.iter().filter(|&&x| x % n == 0).count();
        let k = num.min(den) as u32;
        if k > 0 {
            d_indices.push((n, k));
            delta += units(n).len() as u64 * k as u64;
        }
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for &x in &p_list {
        num *= BigInt::from(x).pow(x as u32);
    }
    for &x in &q_list {
        den *= BigInt::from(x).pow(x as u32);
    }
    let epsilon = if q_list.iter().sum::<u64>() % 2 == 0 {
        1
    } else {
        -1
    };
    Ok(BCMData {
        p_list,
        q_list,
        d_indices,
        delta,
        m_value: BigRational::new(num, den),
        epsilon,
    })
}

impl BCMData {
    /// Multiplicity of `exp(2 pi i m / qx)` as a root of `D(x)`.
    pub fn s(&self, m: i64, qx: u64) -> u32 {
        let m = (m as i128).rem_euclid(qx as i128) as u64;
        let order = qx / m.gcd(&qx);
        self.d_indices
            .iter()
            .find(|(n, _)| *n == order)
            .map_or(0, |&(_, k)| k)
    }
}

/// Which definitions apply to a given `(params, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Applicability {
    pub classical: bool,
    pub bcm: bool,
    pub hybrid: bool,
}

pub fn applicability(params: &HGParams, pp: &PrimePower) -> Applicability {
    Applicability {
        classical: params.cleared_by(pp.qx()),
        bcm: is_good(params, pp.p) && field_of_definition(params).is_rational(),
        hybrid: split_for_q(params, pp).is_ok(),
    }
}

fn check_tables(ctx: &FieldContext, backend: &ExactBackend, gt: &GaussTable) -> Result<()> {
    if gt.q() != ctx.q() || gt.ells() != backend.ells() {
        return Err(Error::Precondition(
            "Gauss table does not match the field or backend".into(),
        ));
    }
    Ok(())
}

fn signed_elem(ctx: &FieldContext, negate: bool, t: Elem) -> Elem {
    if negate {
        ctx.neg(t)
    } else {
        t
    }
}

fn to_exponents(v: &[Rat], qx: u64) -> Vec<u64> {
    v.iter()
        .map(|x| (x * qx as i64).to_integer() as u64 % qx)
        .collect()
}

fn rat_to_elem(ctx: &FieldContext, x: &BigRational) -> Result<Elem> {
    let p = ctx.p();
    let num = reduce_big(x.numer(), p) as i64;
    let den = reduce_big(x.denom(), p) as i64;
    ctx.reduce_rational(num, den)
}

/// Definition with all parameters cleared by `q - 1`.
pub fn hsum_classical(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    params: &HGParams,
    t: Elem,
) -> Result<BackendValue> {
    check_tables(ctx, backend, gt)?;
    let qx = ctx.qx();
    if !params.cleared_by(qx) {
        return Err(Error::Precondition(format!(
            "q - 1 = {qx} does not clear the parameters"
        )));
    }
    let a = to_exponents(&params.alpha, qx);
    let b = to_exponents(&params.beta, qx);
    let arg = signed_elem(ctx, params.d() % 2 == 1, t);
    let j = gt.omega_log(ctx, arg)?;
    let residues = (0..backend.len())
        .map(|i| {
            let ell = backend.ells()[i];
            let mut den = 1u64;
            for (&ai, &bi) in a.iter().zip(&b) {
                den = mulmod(
                    den,
                    mulmod(gt.raw(i, ai), gt.raw(i, (qx - bi) % qx), ell),
                    ell,
                );
            }
            let mut acc = 0u64;
            for m in 0..qx {
                let mut term = gt.zeta_pow(i, (j as u128 * m as u128 % qx as u128) as u64);
                for (&ai, &bi) in a.iter().zip(&b) {
                    let up = gt.raw(i, (m + ai) % qx);
                    let down = gt.raw(i, (2 * qx - m - bi) % qx);
                    term = mulmod(term, mulmod(up, down, ell), ell);
                }
                acc = addmod(acc, term, ell);
            }
            let scale = invmod(mulmod(den, qx % ell, ell), ell).expect("Gauss sums are units");
            (ell - mulmod(acc, scale, ell)) % ell
        })
        .collect();
    Ok(BackendValue { residues })
}

struct BcmKernel {
    data: BCMData,
    sign: Elem,
    /// `q^{s(m) - s(0)}` indexed by `s(m)`.
    s_table: Vec<u32>,
}

fn bcm_kernel(ctx: &FieldContext, data: BCMData, negate: bool) -> BcmKernel {
    let qx = ctx.qx();
    let s_table = (0..qx).map(|m| data.s(m as i64, qx)).collect();
    let sign = if negate { ctx.neg(1) } else { 1 };
    BcmKernel {
        data,
        sign,
        s_table,
    }
}

/// Shared summation for the BCM and hybrid definitions.
#[allow(clippy::too_many_arguments)]
fn gamma_sum(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    kernel: &BcmKernel,
    alpha_prime: &[u64],
    beta_prime: &[u64],
    char_arg: Elem,
) -> Result<BackendValue> {
    let qx = ctx.qx();
    let q = ctx.q();
    let j = gt.omega_log(ctx, char_arg)?;
    let data = &kernel.data;
    let s0 = data.s(0, qx) as i64;
    let rs = data.p_list.len() + data.q_list.len();
    let residues = (0..backend.len())
        .map(|i| {
            let ell = backend.ells()[i];
            let q_mod = q % ell;
            let q_inv = invmod(q_mod, ell).expect("q is a unit mod l");
            let max_s = data.d_indices.iter().map(|&(_, k)| k).max().unwrap_or(0) as i64;
            // q^{k - s(0)} for k = 0..=max_s.
            let qpow: Vec<u64> = (0..=max_s)
                .map(|k| {
                    let e = k - s0;
                    if e >= 0 {
                        powmod(q_mod, e as u64, ell)
                    } else {
                        powmod(q_inv, (-e) as u64, ell)
                    }
                })
                .collect();
            let mut den = 1u64;
            for &a in alpha_prime {
                den = mulmod(den, gt.raw(i, a), ell);
            }
            for &b in beta_prime {
                den = mulmod(den, gt.raw(i, (qx - b) % qx), ell);
            }
            let mut acc = 0u64;
            for m in 0..qx {
                let mut term = mulmod(
                    gt.zeta_pow(i, (j as u128 * m as u128 % qx as u128) as u64),
                    qpow[kernel.s_table[m as usize] as usize],
                    ell,
                );
                for &pj in &data.p_list {
                    term = mulmod(
                        term,
                        gt.raw(i, (pj as u128 * m as u128 % qx as u128) as u64),
                        ell,
                    );
                }
                for &qj in &data.q_list {
                    let e = (qx - (qj as u128 * m as u128 % qx as u128) as u64) % qx;
                    term = mulmod(term, gt.raw(i, e), ell);
                }
                for &a in alpha_prime {
                    term = mulmod(term, gt.raw(i, (m + a) % qx), ell);
                }
                for &b in beta_prime {
                    term = mulmod(term, gt.raw(i, (2 * qx - m - b) % qx), ell);
                }
                acc = addmod(acc, term, ell);
            }
            // (-1)^{r+s} / (1 - q) / den
            let one_minus_q = (1 + ell - q_mod) % ell;
            let mut scale = invmod(mulmod(one_minus_q, den, ell), ell).expect("nonzero normaliser");
            if rs % 2 == 1 {
                scale = (ell - scale) % ell;
            }
            mulmod(acc, scale, ell)
        })
        .collect();
    Ok(BackendValue { residues })
}

/// Definition for parameters defined over `Q`.
pub fn hsum_bcm(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    params: &HGParams,
    t: Elem,
) -> Result<BackendValue> {
    check_tables(ctx, backend, gt)?;
    if !is_good(params, ctx.p()) {
        return Err(Error::BadPrime {
            p: ctx.p(),
            reason: "divides a parameter denominator".into(),
        });
    }
    if !field_of_definition(params).is_rational() {
        return Err(Error::NotRational);
    }
    let data = gamma_vectors(&params.alpha, &params.beta)?;
    let kernel = bcm_kernel(ctx, data, false);
    let eps = if kernel.data.epsilon < 0 {
        ctx.neg(1)
    } else {
        1
    };
    let m_inv = rat_to_elem(ctx, &kernel.data.m_value.recip())?;
    let arg = ctx.mul(ctx.mul(eps, m_inv), t);
    gamma_sum(ctx, backend, gt, &kernel, &[], &[], arg)
}

/// Definition for good, splittable `q`, with an explicit `M` orientation.
pub fn hsum_hybrid_with(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    params: &HGParams,
    t: Elem,
    direction: MDirection,
) -> Result<BackendValue> {
    check_tables(ctx, backend, gt)?;
    let split = split_for_q(params, &ctx.pp())?;
    let data = gamma_vectors(&split.alpha0, &split.beta0)?;
    let negate = (params.d() as u64 + data.delta) % 2 == 1;
    let kernel = bcm_kernel(ctx, data, negate);
    let m = match direction {
        MDirection::AsStated => kernel.data.m_value.clone(),
        MDirection::Reciprocal => kernel.data.m_value.recip(),
    };
    let arg = ctx.mul(ctx.mul(kernel.sign, rat_to_elem(ctx, &m)?), t);
    let qx = ctx.qx();
    gamma_sum(
        ctx,
        backend,
        gt,
        &kernel,
        &to_exponents(&split.alpha_prime, qx),
        &to_exponents(&split.beta_prime, qx),
        arg,
    )
}

pub fn hsum_hybrid(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    params: &HGParams,
    t: Elem,
) -> Result<BackendValue> {
    hsum_hybrid_with(ctx, backend, gt, params, t, M_DIRECTION)
}

/// `H_q(alpha; beta | t)` by the most general applicable definition.
pub fn hsum(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    params: &HGParams,
    t: Elem,
) -> Result<BackendValue> {
    hsum_hybrid(ctx, backend, gt, params, t)
}

/// Which definition to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definition {
    Classical,
    Bcm,
    Hybrid,
}

pub fn hsum_by(
    def: Definition,
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    params: &HGParams,
    t: Elem,
) -> Result<BackendValue> {
    match def {
        Definition::Classical => hsum_classical(ctx, backend, gt, params, t),
        Definition::Bcm => hsum_bcm(ctx, backend, gt, params, t),
        Definition::Hybrid => hsum_hybrid(ctx, backend, gt, params, t),
    }
}

/// Rising factorial `(a)_k`.
fn pochhammer(a: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, j| {
        acc * (a + BigRational::from_integer(BigInt::from(j)))
    })
}

/// `c_k = prod (alpha_i)_k / prod (beta_i)_k` for `k < n_terms`.
pub fn series_coefficients(
    alpha: &[BigRational],
    beta: &[BigRational],
    n_terms: usize,
) -> Result<Vec<BigRational>> {
    let mut out = Vec::with_capacity(n_terms);
    let mut c = BigRational::one();
    for k in 0..n_terms {
        out.push(c.clone());
        let kk = BigRational::from_integer(BigInt::from(k));
        let num = alpha
            .iter()
            .fold(BigRational::one(), |acc, a| acc * (a + &kk));
        let den = beta
            .iter()
            .fold(BigRational::one(), |acc, b| acc * (b + &kk));
        if den.is_zero() {
            if k + 1 < n_terms {
                return Err(Error::InvalidParams(format!(
                    "lower Pochhammer vanishes at k = {}",
                    k + 1
                )));
            }
            break;
        }
        c = c * num / den;
    }
    debug_assert!(out.iter().enumerate().take(4).all(|(k, v)| {
        let direct = alpha
            .iter()
            .fold(BigRational::one(), |acc, a| acc * pochhammer(a, k))
            / beta
                .iter()
                .fold(BigRational::one(), |acc, b| acc * pochhammer(b, k));
        &direct == v
    }));
    Ok(out)
}

/// Coefficients of `D(alpha; beta | z)` applied to `sum c_k z^k`, where
/// `D = prod (theta + beta_i - 1) - z prod (theta + alpha_i)`.
pub fn apply_operator(
    alpha: &[BigRational],
    beta: &[BigRational],
    coeffs: &[BigRational],
) -> Vec<BigRational> {
    let one = BigRational::one();
    (0..coeffs.len())
        .map(|k| {
            let kk = BigRational::from_integer(BigInt::from(k));
            let lower = beta
                .iter()
                .fold(BigRational::one(), |acc, b| acc * (&kk + b - &one))
                * &coeffs[k];
            let upper = if k == 0 {
                BigRational::zero()
            } else {
                let km1 = &kk - &one;
                alpha
                    .iter()
                    .fold(BigRational::one(), |acc, a| acc * (&km1 + a))
                    * &coeffs[k - 1]
            };
            lower - upper
        })
        .collect()
}

/// Checks that `D(alpha; beta | z)` annihilates its power series solution at
/// `z = 0` to `n_terms` coefficients. When no lower parameter equals `1` the
/// solution `z^c F(alpha + c; beta + c)` with `c = 1 - min beta` is used.
pub fn operator_annihilates(alpha: &[BigRational], beta: &[BigRational], n_terms: usize) -> bool {
    let Some(min_beta) = beta.iter().min().cloned() else {
        return false;
    };
    let c = BigRational::one() - min_beta;
    let a: Vec<BigRational> = alpha.iter().map(|x| x + &c).collect();
    let b: Vec<BigRational> = beta.iter().map(|x| x + &c).collect();
    operator_annihilates_series(&a, &b, &a, &b, n_terms)
}

/// Apply `D(op_alpha; op_beta)` to the series of `(ser_alpha; ser_beta)`.
pub fn operator_annihilates_series(
    op_alpha: &[BigRational],
    op_beta: &[BigRational],
    ser_alpha: &[BigRational],
    ser_beta: &[BigRational],
    n_terms: usize,
) -> bool {
    let Ok(coeffs) = series_coefficients(ser_alpha, ser_beta, n_terms) else {
        return false;
    };
    apply_operator(op_alpha, op_beta, &coeffs)
        .iter()
        .all(Zero::is_zero)
}

/// True iff the sorted union of `alpha` and `beta` alternates strictly.
pub fn interlace_check(params: &HGParams) -> bool {
    let mut all: Vec<(Rat, bool)> = params
        .alpha
        .iter()
        .map(|&a| (a, true))
        .chain(params.beta.iter().map(|&b| (b, false)))
        .collect();
    all.sort();
    if all.windows(2).any(|w| w[0].0 == w[1].0) {
        return false;
    }
    all.windows(2).all(|w| w[0].1 != w[1].1)
}

/// Convert a machine rational into a big one.
pub fn big(x: Rat) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}
