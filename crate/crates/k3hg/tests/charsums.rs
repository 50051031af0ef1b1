//! Gauss sums against a direct summation oracle, backend arithmetic and the
//! Jacobi symbol.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use proptest::prelude::*;

use k3hg::arith::{addmod, mulmod, powmod};
use k3hg::charsums::{
    frobenius_orbit_reps, gauss_sum_float, gauss_table, gauss_table_cost, jacobi_symbol,
    select_backend, BackendValue, ExactBackend, GaussTable,
};
use k3hg::finitefield::{build_field, FieldContext};

fn setup(p: u64, r: u32) -> (FieldContext, ExactBackend, GaussTable) {
    let ctx = build_field(p, r).unwrap();
    let be = select_backend(&ctx, &BigUint::from(1u64 << 40));
    let gt = gauss_table(&ctx, &be).unwrap();
    (ctx, be, gt)
}

/// `x + x^p + ... + x^{p^{r-1}}` read as an integer in `[0, p)`.
fn trace(ctx: &FieldContext, x: u32) -> u64 {
    let mut acc = 0;
    let mut y = x;
    for _ in 0..ctx.r() {
        acc = ctx.add(acc, y);
        y = ctx.frobenius(y);
    }
    let digits = ctx.digits(acc);
    assert!(
        digits.iter().skip(1).all(|&d| d == 0),
        "trace lies in the prime field"
    );
    digits[0]
}

/// `g(m) = sum_x omega(x)^m zeta_p^{Tr x}` term by term, using only field
/// arithmetic and the backend's roots of unity.
fn direct_gauss(ctx: &FieldContext, be: &ExactBackend, m: u64) -> BackendValue {
    let (p, qx) = (ctx.p(), ctx.qx());
    let residues = be
        .ells()
        .iter()
        .enumerate()
        .map(|(i, &ell)| {
            let zq = be.root_of_unity(i, qx);
            let zp = be.root_of_unity(i, p);
            let mut acc = 0u64;
            let mut x = 1;
            for k in 0..qx {
                let term = mulmod(
                    powmod(zq, (m * k) % qx, ell),
                    powmod(zp, trace(ctx, x), ell),
                    ell,
                );
                acc = addmod(acc, term, ell);
                x = ctx.mul(x, ctx.generator());
            }
            acc
        })
        .collect();
    BackendValue { residues }
}

#[test]
fn dft_table_matches_direct_sums() {
    for (p, r) in [
        (3, 1),
        (5, 1),
        (7, 1),
        (3, 2),
        (13, 1),
        (5, 2),
        (2, 3),
        (3, 3),
        (29, 1),
        (7, 2),
        (2, 5),
    ] {
        let (ctx, be, gt) = setup(p, r);
        for m in 0..ctx.qx() {
            assert_eq!(
                gt.get(m as i64),
                direct_gauss(&ctx, &be, m),
                "q = {} m = {m}",
                ctx.q()
            );
        }
    }
}

#[test]
fn float_gauss_sums_have_absolute_value_sqrt_q() {
    for (p, r) in [(13, 1), (3, 3), (7, 2)] {
        let ctx = build_field(p, r).unwrap();
        let sq = (ctx.q() as f64).sqrt();
        for m in 1..ctx.qx() as i64 {
            let (re, im) = gauss_sum_float(&ctx, m);
            assert!((Complex64::new(re, im).norm() - sq).abs() < 1e-9);
        }
        let (re, im) = gauss_sum_float(&ctx, 0);
        assert!((re + 1.0).abs() < 1e-9 && im.abs() < 1e-9);
    }
}

#[test]
fn quadratic_gauss_sum_squares_to_signed_q() {
    // g(m)^2 for the quadratic character is (-1/p) p over a prime field.
    for p in [5u64, 7, 11, 13, 17, 19, 23] {
        let (ctx, be, gt) = setup(p, 1);
        let g = gt.get((ctx.qx() / 2) as i64);
        let sign = if p % 4 == 1 { 1 } else { -1 };
        assert_eq!(be.mul(&g, &g), be.from_i64(sign * p as i64));
    }
}

#[test]
fn conjugate_table_permutes_indices() {
    let (_, _, gt) = setup(13, 1);
    let c = gt.conjugate(5);
    for m in 0..12 {
        assert_eq!(c.get(m), gt.get(5 * m));
    }
    assert_eq!(c.omega_power(), 5);
}

#[test]
fn recovery_is_symmetric() {
    let (_, be, _) = setup(7, 1);
    for v in [-123456789i64, -1, 0, 1, 987654321] {
        assert_eq!(
            be.recover_integer(&be.from_i64(v)).unwrap(),
            BigInt::from(v)
        );
    }
}

#[test]
fn backend_primes_are_one_mod_lcm() {
    let (ctx, be, _) = setup(3, 4);
    let l = be.order_modulus();
    assert_eq!(l % ctx.qx(), 0);
    assert_eq!(l % 3, 0);
    assert!(be.ells().iter().all(|&ell| ell % l == 1));
}

#[test]
fn frobenius_orbits_partition() {
    let reps = frobenius_orbit_reps(80, 3);
    // Orbits of m -> 3m on Z/80Z.
    let mut seen = std::collections::BTreeSet::new();
    for &m in &reps {
        let mut k = m;
        loop {
            assert!(seen.insert(k));
            k = k * 3 % 80;
            if k == m {
                break;
            }
        }
    }
    assert_eq!(seen.len(), 80);
}

#[test]
fn gauss_cost_reflects_largest_prime_factor() {
    assert_eq!(gauss_table_cost(12), 12 * (2 + 2 + 3));
    assert!(gauss_table_cost(13u64.pow(5) - 1) > 30941 * 13u64.pow(5) / 2);
}

#[test]
fn jacobi_symbol_known_values() {
    assert_eq!(jacobi_symbol(2, 7), 1);
    assert_eq!(jacobi_symbol(3, 7), -1);
    assert_eq!(jacobi_symbol(0, 7), 0);
    assert_eq!(jacobi_symbol(-1, 13), 1);
    assert_eq!(jacobi_symbol(-1, 11), -1);
    assert_eq!(jacobi_symbol(2, 15), 1);
    assert_eq!(jacobi_symbol(7, 15), -1);
}

proptest! {
    #[test]
    fn jacobi_matches_euler_criterion(a in -1000i64..1000, idx in 0usize..10) {
        let p = [3u64, 5, 7, 11, 13, 17, 19, 23, 281, 997][idx];
        let e = powmod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
        let expected = if e == 0 { 0 } else if e == 1 { 1 } else { -1 };
        prop_assert_eq!(jacobi_symbol(a, p), expected);
    }

    #[test]
    fn backend_is_a_ring(a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000) {
        let ctx = build_field(11, 1).unwrap();
        let be = select_backend(&ctx, &BigUint::from(1u64 << 50));
        let (x, y) = (be.from_i64(a), be.from_i64(b));
        prop_assert_eq!(be.recover_integer(&be.mul(&x, &y)).unwrap(), BigInt::from(a) * b);
        prop_assert_eq!(be.recover_integer(&be.sub(&x, &y)).unwrap(), BigInt::from(a - b));
        if let Ok(d) = be.div(&x, &y) {
            prop_assert_eq!(be.mul(&d, &y), x);
        }
    }

    #[test]
    fn gauss_product_identity(m in 1u64..48) {
        let (ctx, be, gt) = setup(7, 2);
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let prod = be.mul(&gt.get(m as i64), &gt.get(-(m as i64)));
        prop_assert_eq!(prod, be.from_i64(sign * ctx.q() as i64));
    }
}
