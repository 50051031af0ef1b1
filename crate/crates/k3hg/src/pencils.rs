//! The five invertible pencils of K3 quartics and their point counts.
//!
//! Every family is `sum of four monomials - 4 psi x0 x1 x2 x3`. For `F1L3` the
//! variables are ordered as `x0^3 x1 + x1^3 x2 + x2^3 x0 + x3^4`, which is the
//! table form `x0^4 + x1^3 x2 + x2^3 x3 + x3^3 x1` under
//! `(x0, x1, x2, x3) -> (x3, x0, x1, x2)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::arith::prime_divisors;
use crate::charsums::{gauss_table, select_backend, BackendValue, ExactBackend, GaussTable};
use crate::error::{Error, Result};
use crate::finitefield::{Elem, FieldContext};
use crate::hypergeom::{hsum, HGParams, Rat};
use crate::koblitz::{
    brute_torus_count_with, count_bound, torus_count, MonomialSystem, Normalization,
};

/// One of the five pencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PencilId {
    F4,
    F1L3,
    F2L2,
    L2L2,
    L4,
}

impl PencilId {
    pub const ALL: [PencilId; 5] = [
        PencilId::F4,
        PencilId::F1L3,
        PencilId::F2L2,
        PencilId::L2L2,
        PencilId::L4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PencilId::F4 => "F4",
            PencilId::F1L3 => "F1L3",
            PencilId::F2L2 => "F2L2",
            PencilId::L2L2 => "L2L2",
            PencilId::L4 => "L4",
        }
    }

    /// Exponents of the four non-deforming monomials.
    pub fn exponent_rows(&self) -> [[u64; 4]; 4] {
        match self {
            PencilId::F4 => [[4, 0, 0, 0], [0, 4, 0, 0], [0, 0, 4, 0], [0, 0, 0, 4]],
            PencilId::F1L3 => [[3, 1, 0, 0], [0, 3, 1, 0], [1, 0, 3, 0], [0, 0, 0, 4]],
            PencilId::F2L2 => [[4, 0, 0, 0], [0, 4, 0, 0], [0, 0, 3, 1], [0, 0, 1, 3]],
            PencilId::L2L2 => [[3, 1, 0, 0], [1, 3, 0, 0], [0, 0, 3, 1], [0, 0, 1, 3]],
            PencilId::L4 => [[3, 1, 0, 0], [0, 3, 1, 0], [0, 0, 3, 1], [1, 0, 0, 3]],
        }
    }

    /// Primes that are bad for every member of the family.
    pub fn table_primes(&self) -> &'static [u64] {
        match self {
            PencilId::F1L3 => &[2, 7],
            PencilId::L4 => &[2, 5],
            _ => &[2],
        }
    }
}

impl fmt::Display for PencilId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PencilId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PencilId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown family {s:?}")))
    }
}

/// A member `X_psi` of a pencil, `psi` rational with `psi^4 != 0, 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PencilInstance {
    pub id: PencilId,
    pub psi: Rat,
}

impl PencilInstance {
    pub fn new(id: PencilId, psi: Rat) -> Result<Self> {
        if psi.is_zero() || psi.abs() == Rat::one() {
            return Err(Error::InvalidParams(format!(
                "psi = {psi} gives a singular member"
            )));
        }
        Ok(PencilInstance { id, psi })
    }

    pub fn from_int(id: PencilId, psi: i64) -> Result<Self> {
        Self::new(id, Rat::from_integer(psi))
    }

    /// `psi^4` as a rational.
    pub fn psi4(&self) -> Rat {
        let p2 = self.psi * self.psi;
        p2 * p2
    }

    /// `t = psi^{-4}`.
    pub fn t(&self) -> Rat {
        self.psi4().recip()
    }

    pub fn psi_elem(&self, ctx: &FieldContext) -> Result<Elem> {
        ctx.reduce_rational(*self.psi.numer(), *self.psi.denom())
    }

    pub fn t_elem(&self, ctx: &FieldContext) -> Result<Elem> {
        let t = self.t();
        ctx.reduce_rational(*t.numer(), *t.denom())
    }

    pub fn psi4_elem(&self, ctx: &FieldContext) -> Result<Elem> {
        let t = self.psi4();
        ctx.reduce_rational(*t.numer(), *t.denom())
    }
}

/// Family primes together with the primes of `psi^4` and `psi^4 - 1`.
pub fn bad_primes(id: PencilId, psi: Rat) -> BTreeSet<u64> {
    let mut out: BTreeSet<u64> = id.table_primes().iter().copied().collect();
    let p4 = psi * psi * psi * psi;
    let m1 = p4 - Rat::one();
    for x in [*p4.numer(), *p4.denom(), *m1.numer(), *m1.denom()] {
        out.extend(prime_divisors(x.unsigned_abs()));
    }
    out
}

/// Fails with a bad-prime error when `p` is bad for the instance.
pub fn check_good(inst: &PencilInstance, p: u64) -> Result<()> {
    if bad_primes(inst.id, inst.psi).contains(&p) {
        return Err(Error::BadPrime {
            p,
            reason: format!("bad for {} at psi = {}", inst.id, inst.psi),
        });
    }
    Ok(())
}

/// The monomial system with coefficients `(1, 1, 1, 1, -4 psi)`.
pub fn defining_system(inst: &PencilInstance, ctx: &FieldContext) -> Result<MonomialSystem> {
    check_good(inst, ctx.p())?;
    let mut nu: Vec<Vec<u64>> = inst.id.exponent_rows().iter().map(|r| r.to_vec()).collect();
    nu.push(vec![1, 1, 1, 1]);
    let c = ctx.mul(ctx.neg(ctx.from_int(4)), inst.psi_elem(ctx)?);
    MonomialSystem::new(3, nu, vec![1, 1, 1, 1, c])
}

fn params(a: &str, b: &str) -> HGParams {
    HGParams::parse(a, b).expect("static parameters are valid")
}

/// `{1/4,1/2,3/4; 0,0,0}`, shared by all five families.
pub fn common_params() -> HGParams {
    params("1/4,1/2,3/4", "0,0,0")
}

/// A point count assembled from hypergeometric sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaCount {
    pub count: BigInt,
    pub branches: Vec<String>,
    /// Sums with their recovered integer values when they lie in `Z`.
    pub hsums: Vec<(String, Option<BigInt>)>,
}

struct Assembler<'a> {
    ctx: &'a FieldContext,
    backend: &'a ExactBackend,
    gt: &'a GaussTable,
    total: BackendValue,
    hsums: Vec<(String, Option<BigInt>)>,
}

impl Assembler<'_> {
    fn constant(&mut self, c: i64) {
        self.total = self.backend.add(&self.total, &self.backend.from_i64(c));
    }

    /// `total += coeff * H_q(params | arg)`.
    fn term(&mut self, coeff: &BackendValue, hp: &HGParams, arg: Elem, label: &str) -> Result<()> {
        let h = hsum(self.ctx, self.backend, self.gt, hp, arg)?;
        let value = self.backend.recover_integer(&h).ok();
        self.hsums.push((format!("H({hp}|{label})"), value));
        self.total = self.backend.add(&self.total, &self.backend.mul(coeff, &h));
        Ok(())
    }

    fn int(&self, c: i64) -> BackendValue {
        self.backend.from_i64(c)
    }
}

/// `omega(a)^e`, asserted to be `+1` or `-1`.
fn sign_character(ctx: &FieldContext, a: Elem, e: u64) -> Result<i64> {
    let k = (ctx.dlog(a)? * e).value();
    let qx = ctx.qx();
    match (2 * k) % qx {
        0 if k == 0 => Ok(1),
        0 => Ok(-1),
        _ => Err(Error::Internal(format!(
            "character value at exponent {e} is not +-1"
        ))),
    }
}

/// Closed-form point count through hypergeometric sums.
pub fn count_formula(
    inst: &PencilInstance,
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
) -> Result<FormulaCount> {
    check_good(inst, ctx.p())?;
    let q = ctx.q() as i64;
    let t = inst.t_elem(ctx)?;
    let t_inv = inst.psi4_elem(ctx)?;
    let mut asm = Assembler {
        ctx,
        backend,
        gt,
        total: backend.zero(),
        hsums: Vec::new(),
    };
    let mut branches = Vec::new();
    let h_common = common_params();
    let h2 = params("1/4,3/4", "0,1/2");
    let h1 = params("1/2", "0");
    let qm = |m: i64| (q % m + m) % m;
    let one = asm.int(1);
    asm.term(&one, &h_common, t, "psi^-4")?;
    match inst.id {
        PencilId::F4 => {
            asm.constant(q * q + q + 1);
            if qm(4) == 3 {
                branches.push("q = 3 mod 4".into());
                asm.term(&asm.int(-3 * q), &h2, t, "psi^-4")?;
            } else {
                branches.push("q = 1 mod 4".into());
                asm.term(&asm.int(3 * q), &h2, t, "psi^-4")?;
                let sign = if ((q - 1) / 4) % 2 == 0 { 1 } else { -1 };
                asm.term(&asm.int(12 * sign * q), &h1, t, "psi^-4")?;
            }
        }
        PencilId::F1L3 => {
            asm.constant(q * q + q + 1);
            if qm(7) == 1 {
                branches.push("q = 1 mod 7".into());
                asm.term(
                    &asm.int(3 * q),
                    &params("1/14,9/14,11/14", "0,1/4,3/4"),
                    t_inv,
                    "psi^4",
                )?;
                asm.term(
                    &asm.int(3 * q),
                    &params("3/14,5/14,13/14", "0,1/4,3/4"),
                    t_inv,
                    "psi^4",
                )?;
            } else {
                branches.push("q != 1 mod 7".into());
            }
        }
        PencilId::F2L2 => match qm(8) {
            3 | 7 => {
                branches.push("q = 3 mod 4".into());
                asm.constant(q * q - q + 1);
                asm.term(&asm.int(-q), &h2, t, "psi^-4")?;
            }
            5 => {
                branches.push("q = 5 mod 8".into());
                asm.constant(q * q - q + 1);
                asm.term(&asm.int(q), &h2, t, "psi^-4")?;
                asm.term(&asm.int(-2 * q), &h1, t, "psi^-4")?;
            }
            1 => {
                branches.push("q = 1 mod 8".into());
                asm.constant(q * q + 7 * q + 1);
                asm.term(&asm.int(q), &h2, t, "psi^-4")?;
                asm.term(&asm.int(2 * q), &h1, t, "psi^-4")?;
                let w2 = sign_character(ctx, ctx.from_int(2), ctx.qx() / 4)?;
                branches.push(format!("omega(2)^(q-1)/4 = {w2}"));
                asm.term(
                    &asm.int(2 * w2 * q),
                    &params("1/8,5/8", "0,1/4"),
                    t_inv,
                    "psi^4",
                )?;
                asm.term(
                    &asm.int(2 * w2 * q),
                    &params("3/8,7/8", "0,3/4"),
                    t_inv,
                    "psi^4",
                )?;
            }
            _ => return Err(Error::Internal("even q reached the F2L2 dispatch".into())),
        },
        PencilId::L2L2 => {
            if qm(4) == 3 {
                branches.push("q = 3 mod 4".into());
                asm.constant(q * q + q + 1);
                asm.term(&asm.int(-q), &h2, t, "psi^-4")?;
            } else {
                branches.push("q = 1 mod 4".into());
                asm.constant(q * q + 9 * q + 1);
                asm.term(&asm.int(q), &h2, t, "psi^-4")?;
                let s4 = if ((q - 1) / 4) % 2 == 0 { 1 } else { -1 };
                let wpsi = sign_character(ctx, inst.psi_elem(ctx)?, ctx.qx() / 2)?;
                branches.push(format!("omega(psi)^(q-1)/2 = {wpsi}"));
                let hp = params("1/8,3/8,5/8,7/8", "0,1/4,1/2,3/4");
                asm.term(&asm.int(2 * s4 * wpsi * q), &hp, t, "psi^-4")?;
            }
        }
        PencilId::L4 => {
            asm.constant(q * q + 3 * q + 1);
            if qm(5) == 1 {
                branches.push("q = 1 mod 5".into());
                asm.term(
                    &asm.int(4 * q),
                    &params("1/5,2/5,3/5,4/5", "0,1/4,1/2,3/4"),
                    t_inv,
                    "psi^4",
                )?;
            } else {
                branches.push("q != 1 mod 5".into());
            }
        }
    }
    let count = backend.recover_integer(&asm.total)?;
    Ok(FormulaCount {
        count,
        branches,
        hsums: asm.hsums,
    })
}

/// Backend bound sufficient for counts on a surface in `P^3(F_q)`.
pub fn surface_bound(q: u64) -> BigUint {
    count_bound(q, 3)
}

/// All nonempty proper subsets of the four coordinates, as zero masks.
fn strata() -> impl Iterator<Item = [bool; 4]> {
    (1u32..15).map(|mask| [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0, mask & 8 != 0])
}

/// Points with at least one zero coordinate, by exhaustive enumeration of
/// each coordinate stratum.
pub fn boundary_count(inst: &PencilInstance, ctx: &FieldContext) -> Result<u64> {
    let system = defining_system(inst, ctx)?;
    let mut total = 0u64;
    for zero in strata() {
        let sub = system.restrict(&zero);
        total += if sub.r() == 0 {
            ctx.qx().pow(sub.n() as u32)
        } else {
            brute_torus_count_with(ctx, &sub, Normalization::First, u64::MAX)?
        };
    }
    Ok(total)
}

/// Boundary count with each stratum evaluated by the Gauss-sum formula.
pub fn boundary_count_koblitz(
    inst: &PencilInstance,
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
) -> Result<BigInt> {
    let system = defining_system(inst, ctx)?;
    let mut total = BigInt::zero();
    for zero in strata() {
        let sub = system.restrict(&zero);
        total += torus_count(ctx, backend, gt, &sub)?;
    }
    Ok(total)
}

/// How [`count_full`] obtains `#X(F_q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    Formula,
    KoblitzBoundary,
    Brute,
}

impl FromStr for CountMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formula" => Ok(CountMode::Formula),
            "koblitz" | "koblitz+boundary" => Ok(CountMode::KoblitzBoundary),
            "brute" => Ok(CountMode::Brute),
            _ => Err(Error::InvalidParams(format!("unknown count mode {s:?}"))),
        }
    }
}

/// Point count with tables supplied by the caller.
pub fn count_with_tables(
    inst: &PencilInstance,
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    mode: CountMode,
) -> Result<BigInt> {
    match mode {
        CountMode::Formula => Ok(count_formula(inst, ctx, backend, gt)?.count),
        CountMode::KoblitzBoundary => {
            let system = defining_system(inst, ctx)?;
            Ok(torus_count(ctx, backend, gt, &system)?
                + boundary_count_koblitz(inst, ctx, backend, gt)?)
        }
        CountMode::Brute => Ok(BigInt::from(brute_count_fibered(inst, ctx)?)),
    }
}

/// `#X(F_q)` by the chosen method.
pub fn count_full(inst: &PencilInstance, ctx: &FieldContext, mode: CountMode) -> Result<BigInt> {
    if mode == CountMode::Brute {
        return Ok(BigInt::from(brute_count_fibered(inst, ctx)?));
    }
    check_good(inst, ctx.p())?;
    let backend = select_backend(ctx, &surface_bound(ctx.q()));
    let gt = gauss_table(ctx, &backend)?;
    count_with_tables(inst, ctx, &backend, &gt, mode)
}

/// `counts[c * q + k]` = number of `y` with `y^d + c y + k = 0`.
fn root_count_table(ctx: &FieldContext, d: u64) -> Vec<u8> {
    let q = ctx.q() as usize;
    let mut table = vec![0u8; q * q];
    for y in 0..q as Elem {
        let yd = ctx.pow(y, d);
        for c in 0..q as Elem {
            let k = ctx.neg(ctx.add(yd, ctx.mul(c, y)));
            table[c as usize * q + k as usize] += 1;
        }
    }
    table
}

/// Exhaustive count of `X(F_q)` organised as a fibration over `P^2`: every
/// point of `P^2` in the remaining coordinates contributes the number of
/// roots of the equation in the distinguished coordinate.
pub fn brute_count_fibered(inst: &PencilInstance, ctx: &FieldContext) -> Result<u64> {
    check_good(inst, ctx.p())?;
    let q = ctx.q();
    if q > 4096 {
        return Err(Error::Budget(format!(
            "fibered enumeration limited to q <= 4096, got {q}"
        )));
    }
    let c4 = ctx.mul(ctx.neg(ctx.from_int(4)), inst.psi_elem(ctx)?);
    let quartic = matches!(inst.id, PencilId::F4 | PencilId::F1L3 | PencilId::F2L2);
    let table = root_count_table(ctx, if quartic { 4 } else { 3 });
    let qs = q as usize;
    let roots = |c: Elem, k: Elem| table[c as usize * qs + k as usize] as u64;
    let m = |a: Elem, b: Elem| ctx.mul(a, b);
    let add = |a: Elem, b: Elem| ctx.add(a, b);
    let pw = |a: Elem, e: u64| ctx.pow(a, e);
    let mut total = 0u64;
    // The point where the three base coordinates vanish.
    let apex_on_x = !quartic;
    if apex_on_x {
        total += 1;
    }
    for_each_p2(q, |u, v, w| {
        total += match inst.id {
            // y = x3 over (x0 : x1 : x2)
            PencilId::F4 => {
                let k = add(add(pw(u, 4), pw(v, 4)), pw(w, 4));
                roots(m(c4, m(u, m(v, w))), k)
            }
            PencilId::F1L3 => {
                let k = add(add(m(pw(u, 3), v), m(pw(v, 3), w)), m(pw(w, 3), u));
                roots(m(c4, m(u, m(v, w))), k)
            }
            // y = x0 over (x1 : x2 : x3)
            PencilId::F2L2 => {
                let k = add(add(pw(u, 4), m(pw(v, 3), w)), m(pw(w, 3), v));
                roots(m(c4, m(u, m(v, w))), k)
            }
            // x1 y^3 + (x1^3 - 4 psi x1 x2 x3) y + (x2^3 x3 + x3^3 x2), y = x0
            PencilId::L2L2 => {
                let k0 = add(m(pw(v, 3), w), m(pw(w, 3), v));
                if u == 0 {
                    if k0 == 0 {
                        q
                    } else {
                        0
                    }
                } else {
                    let ui = ctx.inv(u).expect("nonzero");
                    let c = add(pw(u, 2), m(c4, m(v, w)));
                    roots(c, m(k0, ui))
                }
            }
            // x1 y^3 + (x3^3 - 4 psi x1 x2 x3) y + (x1^3 x2 + x2^3 x3), y = x0
            PencilId::L4 => {
                let c0 = add(pw(w, 3), m(c4, m(u, m(v, w))));
                let k0 = add(m(pw(u, 3), v), m(pw(v, 3), w));
                if u == 0 {
                    if c0 != 0 {
                        1
                    } else if k0 == 0 {
                        q
                    } else {
                        0
                    }
                } else {
                    let ui = ctx.inv(u).expect("nonzero");
                    roots(m(c0, ui), m(k0, ui))
                }
            }
        };
    });
    Ok(total)
}

/// Visit a normalised representative of every point of `P^2(F_q)`.
fn for_each_p2(q: u64, mut f: impl FnMut(Elem, Elem, Elem)) {
    let q = q as Elem;
    for v in 0..q {
        for w in 0..q {
            f(1, v, w);
        }
    }
    for w in 0..q {
        f(0, 1, w);
    }
    f(0, 0, 1);
}
