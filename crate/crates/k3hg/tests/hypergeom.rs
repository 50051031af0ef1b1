//! Parameter algebra, the three finite field sums against frozen values and
//! a hand expansion, and the classical series with its differential operator.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;

use k3hg::charsums::{gauss_table, select_backend, BackendValue, ExactBackend, GaussTable};
use k3hg::error::Error;
use k3hg::finitefield::{build_field, FieldContext};
use k3hg::hypergeom::{
    applicability, big, field_of_definition, gamma_vectors, hsum, hsum_bcm, hsum_classical,
    hsum_hybrid, interlace_check, operator_annihilates, operator_annihilates_series,
    parse_rationals, rational_split, series_coefficients, split_for_q, HGParams, Rat,
};

fn setup(p: u64, r: u32) -> (FieldContext, ExactBackend, GaussTable) {
    let ctx = build_field(p, r).unwrap();
    let be = select_backend(&ctx, &(BigUint::from(1u64) << 200u32));
    let gt = gauss_table(&ctx, &be).unwrap();
    (ctx, be, gt)
}

fn rats(s: &str) -> Vec<BigRational> {
    parse_rationals(s).unwrap().into_iter().map(big).collect()
}

fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

/// Classical sums at prime `q` and integer `t`, computed once by a direct
/// complex floating point evaluation and rounded.
const FROZEN_CLASSICAL: [(&str, &str, u64, [(i64, i64); 3]); 9] = [
    ("1/4,1/2,3/4", "0,0,0", 13, [(2, 23), (3, 13), (5, -9)]),
    ("1/4,1/2,3/4", "0,0,0", 17, [(2, -17), (3, -13), (5, 19)]),
    ("1/4,1/2,3/4", "0,0,0", 29, [(2, -25), (3, -69), (5, -13)]),
    ("1/2", "0", 13, [(2, 1), (3, -1), (5, 1)]),
    ("1/2", "0", 17, [(2, 1), (3, 1), (5, 1)]),
    ("1/2", "0", 29, [(2, 1), (3, -1), (5, 1)]),
    ("1/4,3/4", "0,1/2", 13, [(2, 0), (3, 0), (5, 0)]),
    ("1/4,3/4", "0,1/2", 17, [(2, -2), (3, 0), (5, 0)]),
    ("1/4,3/4", "0,1/2", 29, [(2, 0), (3, 0), (5, -2)]),
];

#[test]
fn classical_sums_match_frozen_values() {
    for (a, b, p, cases) in FROZEN_CLASSICAL {
        let (ctx, be, gt) = setup(p, 1);
        let hp = HGParams::parse(a, b).unwrap();
        for (t, expected) in cases {
            let t = ctx.from_int(t);
            for v in [
                hsum_classical(&ctx, &be, &gt, &hp, t).unwrap(),
                hsum_bcm(&ctx, &be, &gt, &hp, t).unwrap(),
                hsum_hybrid(&ctx, &be, &gt, &hp, t).unwrap(),
            ] {
                assert_eq!(
                    be.recover_integer(&v).unwrap(),
                    BigInt::from(expected),
                    "{hp} q={p}"
                );
            }
        }
    }
}

#[test]
fn canonicalize_reduces_and_sorts() {
    let hp = HGParams::new(&[r(3, 4), r(5, 4), r(-1, 2)], &[r(1, 1), r(2, 1), r(0, 1)]).unwrap();
    assert_eq!(hp.alpha(), &[r(1, 4), r(1, 2), r(3, 4)]);
    assert_eq!(hp.beta(), &[r(0, 1); 3]);
    assert_eq!(hp.to_string(), "1/4,1/2,3/4;0,0,0");
    assert!(matches!(
        HGParams::parse("1/2", "3/2"),
        Err(Error::NotDisjoint)
    ));
    assert!(matches!(
        HGParams::parse("1/2", "0,1/4"),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn field_of_definition_examples() {
    let f4 = field_of_definition(&HGParams::parse("1/4,1/2,3/4", "0,0,0").unwrap());
    assert_eq!((f4.m, f4.h_k.clone()), (4, vec![1, 3]));
    assert!(f4.is_rational());
    let f1l3 = field_of_definition(&HGParams::parse("1/14,9/14,11/14", "0,1/4,3/4").unwrap());
    assert_eq!((f1l3.m, f1l3.h_k.clone()), (28, vec![1, 9, 11, 15, 23, 25]));
    assert_eq!(f1l3.degree(), 2);
    let f2l2 = field_of_definition(&HGParams::parse("1/8,5/8", "0,1/4").unwrap());
    assert_eq!((f2l2.m, f2l2.h_k), (8, vec![1, 5]));
}

#[test]
fn split_examples() {
    let hp = HGParams::parse("1/14,9/14,11/14", "0,1/4,3/4").unwrap();
    let s = split_for_q(&hp, &build_field(29, 1).unwrap().pp()).unwrap();
    assert!(s.alpha0.is_empty());
    assert_eq!(s.beta0, hp.beta());
    assert!(matches!(
        split_for_q(&hp, &build_field(11, 1).unwrap().pp()),
        Err(Error::NotSplittable { q: 11 })
    ));
    assert!(matches!(
        split_for_q(&hp, &build_field(7, 1).unwrap().pp()),
        Err(Error::BadPrime { .. })
    ));
    let rational = HGParams::parse("1/4,1/2,3/4", "0,0,0").unwrap();
    let s = rational_split(&rational);
    assert_eq!(
        (s.alpha0.as_slice(), s.beta0.as_slice()),
        (rational.alpha(), rational.beta())
    );
    assert!(split_for_q(&rational, &build_field(3, 3).unwrap().pp()).is_ok());
}

#[test]
fn gamma_vector_examples() {
    let d = gamma_vectors(&[], &[r(0, 1), r(1, 4), r(3, 4)]).unwrap();
    assert_eq!((d.p_list.clone(), d.q_list.clone()), (vec![2], vec![1, 4]));
    assert_eq!(d.d_indices, vec![(1, 1), (2, 1)]);
    assert_eq!(d.delta, 2);
    assert_eq!(
        d.m_value,
        BigRational::from_integer(BigInt::from(4)) / BigInt::from(256)
    );

    let d = gamma_vectors(&[r(1, 2)], &[r(0, 1)]).unwrap();
    assert_eq!((d.p_list, d.q_list), (vec![2], vec![1, 1]));

    let d = gamma_vectors(&[r(1, 4), r(1, 2), r(3, 4)], &[r(0, 1); 3]).unwrap();
    assert_eq!((d.p_list, d.q_list), (vec![4], vec![1, 1, 1, 1]));
    assert_eq!(d.d_indices, vec![(1, 1)]);
    assert_eq!(d.delta, 1);

    assert!(matches!(
        gamma_vectors(&[r(1, 14)], &[r(0, 1)]),
        Err(Error::NotRational)
    ));
}

/// Expansion of the F1L3 sum at `q = 1 mod 28`, with the `m = 0` and
/// `m = qx/2` terms pulled out of the sum.
fn f1l3_expansion(ctx: &FieldContext, be: &ExactBackend, gt: &GaussTable, t: u32) -> BackendValue {
    let (q, qx) = (ctx.q() as i64, ctx.qx() as i64);
    let g = |m: i64| gt.get(m);
    let a = [qx / 14, 9 * qx / 14, 11 * qx / 14];
    let denom = a.iter().fold(be.one(), |acc, &x| be.mul(&acc, &g(x)));
    let qqx = be.from_i64(q * qx);
    let mut total = be.div(&be.from_i64(-1), &be.from_i64(qx)).unwrap();
    let special = be.mul(
        &be.mul(&g(qx / 7), &g(2 * qx / 7)),
        &be.mul(&g(4 * qx / 7), &gt.character(ctx, t, qx / 2).unwrap()),
    );
    total = be.add(&total, &be.div(&special, &qqx).unwrap());
    let arg = ctx.mul(ctx.neg(ctx.from_int(64)), t);
    for m in 1..qx {
        if m == qx / 2 {
            continue;
        }
        let num = a.iter().fold(be.one(), |acc, &x| be.mul(&acc, &g(m + x)));
        let tail = be.mul(
            &be.mul(&g(2 * m), &g(-m)),
            &be.mul(&g(-4 * m), &gt.character(ctx, arg, m).unwrap()),
        );
        let term = be.div(&be.mul(&num, &tail), &be.mul(&denom, &qqx)).unwrap();
        total = be.add(&total, &term);
    }
    total
}

#[test]
fn hybrid_sum_matches_hand_expansion_at_29() {
    let (ctx, be, gt) = setup(29, 1);
    let hp = HGParams::parse("1/14,9/14,11/14", "0,1/4,3/4").unwrap();
    for t in 1..29 {
        let expanded = f1l3_expansion(&ctx, &be, &gt, t);
        assert_eq!(
            hsum_hybrid(&ctx, &be, &gt, &hp, t).unwrap(),
            expanded,
            "t = {t}"
        );
        assert_eq!(
            hsum_classical(&ctx, &be, &gt, &hp, t).unwrap(),
            expanded,
            "t = {t}"
        );
    }
}

#[test]
fn applicability_of_each_definition() {
    let f1l3 = HGParams::parse("1/14,9/14,11/14", "0,1/4,3/4").unwrap();
    let at = |p, r| applicability(&f1l3, &build_field(p, r).unwrap().pp());
    let a = at(29, 1);
    assert!(a.classical && !a.bcm && a.hybrid);
    let a = at(43, 1);
    assert!(!a.classical && !a.bcm && a.hybrid);
    let a = at(11, 1);
    assert!(!a.classical && !a.bcm && !a.hybrid);
    let f4 = HGParams::parse("1/4,1/2,3/4", "0,0,0").unwrap();
    let a = applicability(&f4, &build_field(7, 1).unwrap().pp());
    assert!(!a.classical && a.bcm && a.hybrid);
}

#[test]
fn bcm_sum_times_one_minus_q_is_integral() {
    let (ctx, be, gt) = setup(7, 1);
    let hp = HGParams::parse("1/4,1/2,3/4", "0,0,0").unwrap();
    for t in 1..7 {
        let v = hsum_bcm(&ctx, &be, &gt, &hp, t).unwrap();
        assert!(be.recover_integer(&be.scale(&v, 1 - 7)).is_ok());
        assert_eq!(hsum(&ctx, &be, &gt, &hp, t).unwrap(), v);
    }
}

#[test]
fn classical_rejects_uncleared_parameters() {
    let (ctx, be, gt) = setup(7, 1);
    let hp = HGParams::parse("1/4,1/2,3/4", "0,0,0").unwrap();
    assert!(matches!(
        hsum_classical(&ctx, &be, &gt, &hp, 2),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn series_examples() {
    let c = series_coefficients(&rats("1/2"), &rats("1"), 6).unwrap();
    let mut central = BigRational::from_integer(BigInt::from(1));
    for (k, ck) in c.iter().enumerate() {
        assert_eq!(ck, &central, "k = {k}");
        let k = k as i64;
        central =
            central * BigInt::from((2 * k + 1) * (2 * k + 2)) / BigInt::from((k + 1) * (k + 1) * 4);
    }
    let c = series_coefficients(&rats("1/4,1/2,3/4"), &rats("1,1,1"), 3).unwrap();
    assert_eq!(c[0], BigRational::from_integer(BigInt::from(1)));
    assert_eq!(c[1], BigRational::new(BigInt::from(3), BigInt::from(32)));
    assert!(series_coefficients(&rats("1/2"), &rats("-1"), 4).is_err());
}

#[test]
fn operator_examples() {
    assert!(operator_annihilates(
        &rats("1/4,1/2,3/4"),
        &rats("1,1,1"),
        30
    ));
    assert!(operator_annihilates(&rats("1/4,3/4"), &rats("1,1/2"), 30));
    let perturbed = operator_annihilates_series(
        &rats("1/4,1/2,4/5"),
        &rats("1,1,1"),
        &rats("1/4,1/2,3/4"),
        &rats("1,1,1"),
        30,
    );
    assert!(!perturbed);
}

#[test]
fn interlacing_examples() {
    assert!(interlace_check(
        &HGParams::parse("1/4,3/4", "0,1/2").unwrap()
    ));
    assert!(interlace_check(&HGParams::parse("1/2", "0").unwrap()));
    assert!(!interlace_check(
        &HGParams::parse("1/4,1/2,3/4", "0,0,0").unwrap()
    ));
    assert!(interlace_check(
        &HGParams::parse("1/14,9/14,11/14", "0,1/4,3/4").unwrap()
    ));
}

fn rational_params() -> impl Strategy<Value = (&'static str, &'static str)> {
    prop::sample::select(vec![
        ("1/4,1/2,3/4", "0,0,0"),
        ("1/2", "0"),
        ("1/4,3/4", "0,1/2"),
        ("1/8,3/8,5/8,7/8", "0,1/4,1/2,3/4"),
        ("1/5,2/5,3/5,4/5", "0,1/4,1/2,3/4"),
        ("1/3,2/3", "0,0"),
    ])
}

fn any_params() -> impl Strategy<Value = (&'static str, &'static str)> {
    prop::sample::select(vec![
        ("1/4,1/2,3/4", "0,0,0"),
        ("1/14,9/14,11/14", "0,1/4,3/4"),
        ("1/8,5/8", "0,1/4"),
        ("3/8,7/8", "0,3/4"),
        ("1/5,2/5,3/5,4/5", "0,1/4,1/2,3/4"),
        ("1/7,2/7,4/7", "0,0,0"),
    ])
}

proptest! {
    #[test]
    fn s_is_galois_invariant((a, b) in rational_params(), m in 0i64..400, k in 1u64..400) {
        let hp = HGParams::parse(a, b).unwrap();
        let d = gamma_vectors(hp.alpha(), hp.beta()).unwrap();
        let qx = 400u64;
        prop_assume!(num_integer::Integer::gcd(&k, &qx) == 1);
        prop_assert_eq!(d.s(m, qx), d.s(-m, qx));
        prop_assert_eq!(d.s(m, qx), d.s(m * k as i64, qx));
    }

    #[test]
    fn field_of_definition_is_the_stabiliser((a, b) in any_params(), k in 1i64..200) {
        let hp = HGParams::parse(a, b).unwrap();
        let def = field_of_definition(&hp);
        prop_assume!(num_integer::Integer::gcd(&(k as u64), &def.m) == 1);
        let fixed = hp.scale(k).unwrap() == hp;
        prop_assert_eq!(fixed, def.h_k.contains(&((k as u64) % def.m)));
    }
}
