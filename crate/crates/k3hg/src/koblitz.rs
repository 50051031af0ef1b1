//! Point counts of diagonal-type hypersurfaces on the torus through Gauss-sum
//! clusters, together with exhaustive oracles.
//!
//! For `f = sum_i a_i x^{nu_i}` in `P^n` with `r` monomials,
//! `#U(F_q) = sum_{s in S} omega(a)^{-s} c_s` where `S` is the solution set of
//! `sum_i s_i = 0` and `sum_i nu_ij s_i = 0` modulo `q - 1` for every `j`.

use num_bigint::{BigInt, BigUint};
use num_traits::One;

use crate::arith::{addmod, invmod, mulmod, powmod, submod};
use crate::charsums::{BackendValue, ExactBackend, GaussTable};
use crate::error::{Error, Result};
use crate::finitefield::{Elem, FieldContext};

/// Default cap on the number of points an exhaustive oracle may visit.
pub const DEFAULT_BRUTE_BUDGET: u64 = 400_000_000;

/// `sum_i a_i x^{nu_i}`, homogeneous, in `n + 1` variables over a fixed field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialSystem {
    n: usize,
    nu: Vec<Vec<u64>>,
    a: Vec<Elem>,
}

impl MonomialSystem {
    /// Validates shapes, homogeneity, nonzero rows and nonzero coefficients.
    pub fn new(n: usize, nu: Vec<Vec<u64>>, a: Vec<Elem>) -> Result<Self> {
        if nu.len() != a.len() {
            return Err(Error::InvalidParams(format!(
                "{} exponent rows but {} coefficients",
                nu.len(),
                a.len()
            )));
        }
        if let Some(row) = nu.iter().find(|row| row.len() != n + 1) {
            return Err(Error::InvalidParams(format!(
                "exponent row {row:?} does not have {} entries",
                n + 1
            )));
        }
        if nu.iter().any(|row| row.iter().all(|&e| e == 0)) {
            return Err(Error::InvalidParams(
                "an exponent row is identically zero".into(),
            ));
        }
        if let Some(first) = nu.first() {
            let deg: u64 = first.iter().sum();
            if nu.iter().any(|row| row.iter().sum::<u64>() != deg) {
                return Err(Error::InvalidParams("polynomial is not homogeneous".into()));
            }
        }
        if a.contains(&0) {
            return Err(Error::InvalidParams("zero coefficient".into()));
        }
        Ok(MonomialSystem { n, nu, a })
    }

    /// The zero polynomial in `P^n`.
    pub fn zero(n: usize) -> Self {
        MonomialSystem {
            n,
            nu: Vec::new(),
            a: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[Vec<u64>] {
        &self.nu
    }

    pub fn coefficients(&self) -> &[Elem] {
        &self.a
    }

    /// The monomials that survive when the variables in `zero` vanish, as a
    /// system in the remaining variables (order preserved).
    pub fn restrict(&self, zero: &[bool]) -> MonomialSystem {
        let keep: Vec<usize> = (0..=self.n).filter(|&j| !zero[j]).collect();
        let mut nu = Vec::new();
        let mut a = Vec::new();
        for (row, &c) in self.nu.iter().zip(&self.a) {
            if (0..=self.n).all(|j| !zero[j] || row[j] == 0) {
                nu.push(keep.iter().map(|&j| row[j]).collect());
                a.push(c);
            }
        }
        MonomialSystem {
            n: keep.len().saturating_sub(1),
            nu,
            a,
        }
    }

    /// Evaluate at a point given by field elements.
    pub fn eval(&self, ctx: &FieldContext, x: &[Elem]) -> Elem {
        let mut acc = 0;
        for (row, &c) in self.nu.iter().zip(&self.a) {
            let mut term = c;
            for (&xi, &e) in x.iter().zip(row) {
                if e > 0 {
                    term = ctx.mul(term, ctx.pow(xi, e));
                }
            }
            acc = ctx.add(acc, term);
        }
        acc
    }
}

/// Generators and orders of the solution group of a linear system mod `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionModule {
    pub modulus: u64,
    pub generators: Vec<Vec<u64>>,
    pub orders: Vec<u64>,
}

impl SolutionModule {
    /// Number of solutions.
    pub fn size(&self) -> u128 {
        self.orders.iter().map(|&o| o as u128).product()
    }

    pub fn dim(&self) -> usize {
        self.generators.first().map_or(0, Vec::len)
    }

    /// Lazily enumerate every solution exactly once.
    pub fn iter(&self) -> SolutionIter<'_> {
        SolutionIter {
            module: self,
            digits: vec![0; self.orders.len()],
            current: vec![0; self.dim()],
            done: false,
        }
    }
}

/// Mixed-radix walk over the generator coefficients.
pub struct SolutionIter<'a> {
    module: &'a SolutionModule,
    digits: Vec<u64>,
    current: Vec<u64>,
    done: bool,
}

impl Iterator for SolutionIter<'_> {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let n = self.module.modulus;
        let mut j = 0;
        loop {
            if j == self.digits.len() {
                self.done = true;
                break;
            }
            for (c, g) in self.current.iter_mut().zip(&self.module.generators[j]) {
                *c = addmod(*c, *g, n);
            }
            self.digits[j] += 1;
            if self.digits[j] < self.module.orders[j] {
                break;
            }
            self.digits[j] = 0;
            j += 1;
        }
        Some(out)
    }
}

/// Reduce the integer matrix `a` (rows are equations) to diagonal form by
/// unimodular row and column operations; returns the diagonal and the column
/// transform `v` with `U a V = diag`.
fn diagonalize(mut a: Vec<Vec<i128>>, cols: usize) -> (Vec<i128>, Vec<Vec<i128>>) {
    let rows = a.len();
    let mut v: Vec<Vec<i128>> = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            let pivot = (t..rows)
                .flat_map(|i| (t..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| a[i][j] != 0)
                .min_by_key(|&(i, j)| a[i][j].abs());
            let Some((pi, pj)) = pivot else {
                return (diag, v);
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t].div_euclid(a[t][t]);
                if q != 0 {
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..cols {
                let q = a[t][j].div_euclid(a[t][t]);
                if q != 0 {
                    for i in t..rows {
                        a[i][j] -= q * a[i][t];
                    }
                    for row in v.iter_mut() {
                        row[j] -= q * row[t];
                    }
                }
                clean &= a[t][j] == 0;
            }
            if clean {
                break;
            }
        }
        diag.push(a[t][t]);
    }
    (diag, v)
}

/// All `s` in `(Z/NZ)^cols` with `a s = 0 mod N`.
pub fn kernel_mod(a: &[Vec<i64>], cols: usize, modulus: u64) -> SolutionModule {
    let n = modulus as i128;
    let mat: Vec<Vec<i128>> = a
        .iter()
        .map(|row| row.iter().map(|&x| x as i128).collect())
        .collect();
    let (diag, v) = diagonalize(mat, cols);
    let mut generators = Vec::new();
    let mut orders = Vec::new();
    for j in 0..cols {
        let d = diag.get(j).copied().unwrap_or(0).abs();
        let g = num_integer::gcd(d, n);
        if g == 1 {
            continue;
        }
        let step = n / g;
        generators.push(
            (0..cols)
                .map(|i| (v[i][j] * step).rem_euclid(n) as u64)
                .collect(),
        );
        orders.push(g as u64);
    }
    SolutionModule {
        modulus,
        generators,
        orders,
    }
}

/// The character congruences attached to `system`, solved modulo `qx`.
pub fn solve_congruences(system: &MonomialSystem, qx: u64) -> SolutionModule {
    let r = system.r();
    let mut rows = vec![vec![1i64; r]];
    for j in 0..=system.n {
        rows.push(system.nu.iter().map(|row| row[j] as i64).collect());
    }
    kernel_mod(&rows, r, qx)
}

struct ClusterConstants {
    /// `(q-1)^{n-r+1} / q` per auxiliary prime.
    generic: Vec<u64>,
    /// `c_0` per auxiliary prime.
    zero: Vec<u64>,
}

fn cluster_constants(ctx: &FieldContext, ells: &[u64], n: usize, r: usize) -> ClusterConstants {
    let e = n as i64 - r as i64 + 1;
    let mut generic = Vec::new();
    let mut zero = Vec::new();
    for &ell in ells {
        let qx = ctx.qx() % ell;
        let q_inv = invmod(ctx.q() % ell, ell).expect("q is a unit");
        let qx_pow = if e >= 0 {
            powmod(qx, e as u64, ell)
        } else {
            powmod(invmod(qx, ell).expect("q - 1 is a unit"), (-e) as u64, ell)
        };
        let base = mulmod(qx_pow, q_inv, ell);
        generic.push(base);
        let inner = if r == 0 {
            // (q-1)^{-1} - (-1)^{-1}
            addmod(invmod(qx, ell).expect("unit"), 1, ell)
        } else {
            let pow = powmod(qx, (r - 1) as u64, ell);
            if (r - 1) % 2 == 0 {
                submod(pow, 1, ell)
            } else {
                addmod(pow, 1, ell)
            }
        };
        zero.push(mulmod(base, inner, ell));
    }
    ClusterConstants { generic, zero }
}

/// `c_s` for a solution vector `s` of a system in `P^n` with `r` monomials.
pub fn cluster_coefficient(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    n: usize,
    s: &[u64],
) -> BackendValue {
    let consts = cluster_constants(ctx, backend.ells(), n, s.len());
    if s.iter().all(|&x| x % ctx.qx() == 0) {
        return BackendValue {
            residues: consts.zero,
        };
    }
    let residues = (0..backend.len())
        .map(|i| {
            let ell = backend.ells()[i];
            s.iter().fold(consts.generic[i], |acc, &si| {
                mulmod(acc, gt.raw(i, si % ctx.qx()), ell)
            })
        })
        .collect();
    BackendValue { residues }
}

/// `sum_{s in S} omega(a)^{-s} c_s` as a backend value.
pub fn torus_sum(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    system: &MonomialSystem,
) -> Result<BackendValue> {
    let qx = ctx.qx();
    let module = solve_congruences(system, qx);
    torus_sum_over(ctx, backend, gt, system, module.iter())
}

/// As [`torus_sum`] restricted to the given solutions (a cluster).
pub fn torus_sum_over(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    system: &MonomialSystem,
    solutions: impl Iterator<Item = Vec<u64>>,
) -> Result<BackendValue> {
    let qx = ctx.qx();
    let ells = backend.ells();
    let consts = cluster_constants(ctx, ells, system.n, system.r());
    let logs: Vec<u64> = system
        .a
        .iter()
        .map(|&c| gt.omega_log(ctx, c))
        .collect::<Result<_>>()?;
    let mut acc = vec![0u64; ells.len()];
    for s in solutions {
        if s.iter().all(|&x| x == 0) {
            for (i, &ell) in ells.iter().enumerate() {
                acc[i] = addmod(acc[i], consts.zero[i], ell);
            }
            continue;
        }
        let e = s.iter().zip(&logs).fold(0u128, |acc, (&si, &l)| {
            (acc + si as u128 * l as u128) % qx as u128
        }) as u64;
        let e = (qx - e) % qx;
        for (i, &ell) in ells.iter().enumerate() {
            let mut term = mulmod(consts.generic[i], gt.zeta_pow(i, e), ell);
            for &si in &s {
                term = mulmod(term, gt.raw(i, si), ell);
            }
            acc[i] = addmod(acc[i], term, ell);
        }
    }
    Ok(BackendValue { residues: acc })
}

/// A backend bound large enough for counts in `P^n(F_q)`.
pub fn count_bound(q: u64, n: usize) -> BigUint {
    BigUint::from(q).pow(n as u32 + 1) * 8u32 + BigUint::one()
}

/// Number of points of `system` in the projective torus, via Gauss sums.
pub fn torus_count(
    ctx: &FieldContext,
    backend: &ExactBackend,
    gt: &GaussTable,
    system: &MonomialSystem,
) -> Result<BigInt> {
    if system.r() == 0 {
        return Ok(BigInt::from(ctx.qx()).pow(system.n as u32));
    }
    let v = torus_sum(ctx, backend, gt, system)?;
    backend.recover_integer(&v)
}

/// Which coordinate is normalised to `1` in the torus oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    First,
    Last,
}

fn check_budget(points: u128, budget: u64) -> Result<()> {
    if points > budget as u128 {
        Err(Error::Budget(format!(
            "{points} points exceed the budget {budget}"
        )))
    } else {
        Ok(())
    }
}

/// Exhaustive torus count with a chosen normalised coordinate.
pub fn brute_torus_count_with(
    ctx: &FieldContext,
    system: &MonomialSystem,
    normalization: Normalization,
    budget: u64,
) -> Result<u64> {
    let n = system.n;
    let qx = ctx.qx();
    check_budget((qx as u128).pow(n as u32), budget)?;
    let fixed = match normalization {
        Normalization::First => 0,
        Normalization::Last => n,
    };
    let free: Vec<usize> = (0..=n).filter(|&j| j != fixed).collect();
    let exp = ctx.exp_table();
    let logs: Vec<u64> = system
        .a
        .iter()
        .map(|&c| ctx.log_table()[c as usize] as u64)
        .collect();
    let mut e = vec![0u64; n + 1];
    let mut count = 0u64;
    loop {
        let mut acc: Elem = 0;
        for (row, &la) in system.nu.iter().zip(&logs) {
            let k = row
                .iter()
                .zip(&e)
                .fold(la as u128, |s, (&nu, &ej)| s + nu as u128 * ej as u128);
            acc = ctx.add(acc, exp[(k % qx as u128) as usize]);
        }
        if acc == 0 {
            count += 1;
        }
        let mut idx = 0;
        loop {
            if idx == free.len() {
                return Ok(count);
            }
            let j = free[idx];
            e[j] += 1;
            if e[j] < qx {
                break;
            }
            e[j] = 0;
            idx += 1;
        }
    }
}

/// Exhaustive count of projective solutions with no zero coordinate.
pub fn brute_torus_count(ctx: &FieldContext, system: &MonomialSystem) -> Result<u64> {
    brute_torus_count_with(ctx, system, Normalization::First, DEFAULT_BRUTE_BUDGET)
}

/// Exhaustive count over `P^n(F_q)` by normalised representatives.
pub fn brute_projective_count_with(
    ctx: &FieldContext,
    system: &MonomialSystem,
    budget: u64,
) -> Result<u64> {
    let n = system.n;
    let q = ctx.q();
    check_budget((q as u128).pow(n as u32), budget)?;
    let mut count = 0u64;
    let mut x = vec![0 as Elem; n + 1];
    for lead in 0..=n {
        for v in x.iter_mut() {
            *v = 0;
        }
        x[lead] = 1;
        loop {
            if system.eval(ctx, &x) == 0 {
                count += 1;
            }
            let mut j = lead + 1;
            loop {
                if j > n {
                    break;
                }
                x[j] += 1;
                if (x[j] as u64) < q {
                    break;
                }
                x[j] = 0;
                j += 1;
            }
            if j > n {
                break;
            }
        }
    }
    Ok(count)
}

pub fn brute_projective_count(ctx: &FieldContext, system: &MonomialSystem) -> Result<u64> {
    brute_projective_count_with(ctx, system, DEFAULT_BRUTE_BUDGET)
}
