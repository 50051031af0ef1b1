//! Euler factor algebra, local Dedekind factors, factorisation shapes and
//! the hypergeometric factors at `q = 281`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

use k3hg::hypergeom::{HGParams, Rat};
use k3hg::pencils::{check_good, PencilId, PencilInstance};
use k3hg::zeta::{
    common_factor_r, cyclotomic_factorization, cyclotomic_polynomial, dedekind_local,
    dedekind_ratio_local, euler_factor_q, euler_phi, f4_character_identities, factor_bound,
    factor_shape, legendre_factor, max_root_deviation, mobius, q_f4_closed_form, ramanujan_sum,
    zeta_factors, AbelianFieldSpec, EulerFactor, Tower, TowerSet, TwistSpec,
};

fn poly(c: &[i64]) -> EulerFactor {
    EulerFactor::from_i64(c).unwrap()
}

fn lin(a: i64) -> EulerFactor {
    EulerFactor::linear(BigInt::from(a))
}

#[test]
fn euler_factor_basics() {
    let f = lin(2).mul(&lin(3));
    assert_eq!(f, poly(&[1, -5, 6]));
    assert_eq!(
        f.power_sums(3),
        vec![BigInt::from(5), BigInt::from(13), BigInt::from(35)]
    );
    assert_eq!(EulerFactor::from_power_sums(&f.power_sums(2)).unwrap(), f);
    assert_eq!(f.div_exact(&lin(3)).unwrap(), lin(2));
    assert!(f.div_exact(&lin(5)).is_err());
    assert_eq!(lin(2).substitute_power(2), poly(&[1, 0, -2]));
    assert_eq!(f.scale_variable(&BigInt::from(2)), lin(4).mul(&lin(6)));
    assert!(EulerFactor::from_i64(&[2, 1]).is_err());
    assert_eq!(f.to_strings(), vec!["1", "-5", "6"]);
}

#[test]
fn cyclotomic_polynomials() {
    let b = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
    assert_eq!(cyclotomic_polynomial(1), b(&[-1, 1]));
    assert_eq!(cyclotomic_polynomial(4), b(&[1, 0, 1]));
    assert_eq!(cyclotomic_polynomial(12), b(&[1, 0, -1, 0, 1]));
    assert_eq!(cyclotomic_polynomial(15).len() as u64, euler_phi(15) + 1);
    let q = BigInt::from(7);
    assert_eq!(EulerFactor::cyclotomic(1, &q), lin(7));
    assert_eq!(EulerFactor::cyclotomic(2, &q), lin(-7));
    assert_eq!(EulerFactor::cyclotomic(4, &q), poly(&[1, 0, 49]));
}

#[test]
fn cyclotomic_factorization_round_trips() {
    let q = BigInt::from(13);
    let orders: BTreeMap<u64, u32> = [(1, 3), (2, 1), (5, 2), (12, 1)].into_iter().collect();
    let f = EulerFactor::from_cyclotomic(&orders, &q);
    assert_eq!(cyclotomic_factorization(&f, &q), Some(orders));
    assert_eq!(cyclotomic_factorization(&poly(&[1, 1, 13]), &q), None);
}

#[test]
fn arithmetic_functions() {
    assert_eq!(
        (1..=10).map(mobius).collect::<Vec<_>>(),
        vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]
    );
    assert_eq!(
        (1..=10).map(euler_phi).collect::<Vec<_>>(),
        vec![1, 1, 2, 2, 4, 2, 6, 4, 6, 4]
    );
    for n in 1..=30u64 {
        for r in 0..=30u64 {
            let direct: Complex64 = (1..=n)
                .filter(|k| num_integer::Integer::gcd(k, &n) == 1)
                .map(|k| {
                    Complex64::from_polar(1.0, std::f64::consts::TAU * (k * r) as f64 / n as f64)
                })
                .sum();
            assert!(
                (direct.re - ramanujan_sum(n, r) as f64).abs() < 1e-9,
                "n = {n} r = {r}"
            );
            assert!(direct.im.abs() < 1e-9);
        }
    }
}

#[test]
fn dedekind_examples() {
    let z8 = AbelianFieldSpec::cyclotomic(8);
    assert_eq!(dedekind_ratio_local(&z8, 17, 1).unwrap(), lin(17).pow(3));
    assert_eq!(
        dedekind_ratio_local(&z8, 11, 1).unwrap(),
        lin(11).mul(&lin(-11).pow(2))
    );
    assert_eq!(
        dedekind_local(&AbelianFieldSpec::gaussian(), 7, 1).unwrap(),
        poly(&[1, 0, -49])
    );
    assert_eq!(
        dedekind_local(&AbelianFieldSpec::gaussian(), 13, 0).unwrap(),
        lin(1).pow(2)
    );
    assert!(dedekind_local(&z8, 2, 1).is_err());
}

#[test]
fn abelian_field_data() {
    let z7 = AbelianFieldSpec::cyclotomic(7);
    assert_eq!(z7.degree(), 6);
    assert_eq!(z7.residue_degree(29).unwrap(), 1);
    assert_eq!(z7.residue_degree(11).unwrap(), 3);
    assert_eq!(z7.num_primes(11).unwrap(), 2);
    let k = AbelianFieldSpec::new(28, vec![1, 9, 11, 15, 23, 25]).unwrap();
    assert_eq!((k.degree(), k.conductor()), (2, 7));
    assert_eq!(k.residue_degree(11).unwrap(), 1);
    assert_eq!(k.residue_degree(13).unwrap(), 2);
    assert!(AbelianFieldSpec::new(28, vec![1, 9]).is_err());
}

#[test]
fn factor_shape_examples() {
    assert_eq!(factor_shape(PencilId::F1L3, 3).row, "(deg 18)");
    assert_eq!(
        factor_shape(PencilId::L2L2, 13).row,
        "(1-qT)^8 (deg 2) (deg 4)^2"
    );
    assert_eq!(factor_shape(PencilId::L4, 7).row, "(1-qT)^2 (deg 16)");
    assert_eq!(factor_shape(PencilId::L4, 13).row, "(1-qT)^2 (deg 16)");
    for id in PencilId::ALL {
        for q in [3u64, 5, 7, 9, 11, 13, 17, 19, 23, 25, 27, 29, 41, 43] {
            assert_eq!(factor_shape(id, q).degree(), 18, "{id} q = {q}");
        }
    }
}

#[test]
fn common_factor_at_281() {
    let mut towers = TowerSet::new(281, factor_bound(281, 3, 1));
    let (r, _) = common_factor_r(&mut towers, Rat::from(18)).unwrap();
    assert_eq!(r, poly(&[1, 137, -38497, -22188041]));
    assert!(max_root_deviation(&r, 281.0) < 1e-6);
}

#[test]
fn closed_form_q_at_281() {
    let q = q_f4_closed_form(Rat::from(18), 281, 1).unwrap();
    assert_eq!(q, lin(281).pow(12).mul(&lin(-281).pow(6)));
    assert_eq!(q.degree(), 18);
}

#[test]
fn closed_form_q_matches_assembled_factors_at_q_3_mod_4() {
    for psi in [2i64, 3, 4] {
        for p in [7u64, 11, 19, 23] {
            let inst = PencilInstance::from_int(PencilId::F4, psi).unwrap();
            if check_good(&inst, p).is_err() {
                continue;
            }
            let z = zeta_factors(&inst, p).unwrap();
            assert_eq!(z.q.degree(), 18);
            assert_eq!(z.q, z.q_assembled, "psi = {psi} p = {p}");
            let orders = cyclotomic_factorization(&z.q, &BigInt::from(p)).unwrap();
            assert!(orders.keys().all(|&n| n <= 2));
        }
    }
}

#[test]
fn twisted_quadratic_factor_is_a_product_of_legendre_factors() {
    let psi = Rat::from(3);
    let one = Rat::from(1);
    for p in [7u64, 11, 13] {
        let tower = Tower::new(p, 1, 3, &factor_bound(p, 2, 1)).unwrap();
        let params = HGParams::parse("1/4,3/4", "0,1/2").unwrap();
        let t = (psi * psi * psi * psi).recip();
        let l = euler_factor_q(&tower, &params, t, 2, &TwistSpec::MinusOne).unwrap();
        let expected = legendre_factor(one - psi * psi, p)
            .unwrap()
            .mul(&legendre_factor(-one - psi * psi, p).unwrap());
        assert_eq!(l, expected, "p = {p}");
        let (l1, r1, l2, r2) = f4_character_identities(psi, p).unwrap();
        assert_eq!((l1, l2), (r1, r2));
    }
}

#[test]
fn sums_depend_only_on_the_coset_of_the_representative() {
    let params = HGParams::parse("1/14,9/14,11/14", "0,1/4,3/4").unwrap();
    let stabiliser = [1u64, 9, 11, 15, 23, 25];
    let t = Rat::new(1, 81);
    let tower = Tower::new(29, 1, 2, &factor_bound(29, 3, 1)).unwrap();
    for k in [1u64, 3, 5, 13] {
        for r in 1..=2 {
            let base = tower.hsum(r, &params, t, k).unwrap();
            for h in stabiliser {
                assert_eq!(
                    tower.hsum(r, &params, t, k * h % 28).unwrap(),
                    base,
                    "k = {k} h = {h}"
                );
            }
            assert_eq!(tower.hsum(r, &params, t, k * 29 % 28).unwrap(), base);
        }
    }
}

proptest! {
    #[test]
    fn power_sums_round_trip(roots in prop::collection::vec(-50i64..50, 0..8)) {
        let f = roots.iter().fold(EulerFactor::one(), |acc, &a| acc.mul(&lin(a)));
        let sums = f.power_sums(roots.len());
        for (r, s) in sums.iter().enumerate() {
            let direct: BigInt = roots.iter().map(|&a| BigInt::from(a).pow(r as u32 + 1)).sum();
            prop_assert_eq!(s, &direct);
        }
        prop_assert_eq!(EulerFactor::from_power_sums(&sums).unwrap(), f);
    }

    #[test]
    fn cyclotomic_blocks_have_roots_on_the_circle(n in 1u64..40, q in 3u64..200) {
        let f = EulerFactor::cyclotomic(n, &BigInt::from(q));
        prop_assert_eq!(f.degree() as u64, euler_phi(n));
        prop_assert!(max_root_deviation(&f, q as f64) < 1e-6);
    }
}

#[test]
fn common_factor_satisfies_the_functional_equation() {
    for p in [7u64, 11, 13, 17] {
        let mut towers = TowerSet::new(p, factor_bound(p, 3, 1));
        let (r, _) = common_factor_r(&mut towers, Rat::from(3)).unwrap();
        assert_eq!(r.degree(), 3, "p = {p}");
        let c: Vec<BigInt> = r.to_strings().iter().map(|s| s.parse().unwrap()).collect();
        let q = BigInt::from(p);
        let eps = &c[3] / q.pow(3);
        assert_eq!(&eps * q.pow(3), c[3]);
        assert!(eps == BigInt::from(1) || eps == BigInt::from(-1));
        assert_eq!(&c[2], &(&eps * &q * &c[1]), "p = {p}");
        assert!(max_root_deviation(&r, p as f64) < 1e-6);
    }
}
