//! Point counts of the five pencils against frozen enumeration values, the
//! boundary strata and the three counting modes.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use k3hg::finitefield::build_field;
use k3hg::hypergeom::Rat;
use k3hg::koblitz::brute_projective_count;
use k3hg::pencils::{
    bad_primes, boundary_count, brute_count_fibered, check_good, count_full, defining_system,
    CountMode, PencilId, PencilInstance,
};

/// `#X(F_p)` from a standalone projective enumeration, one row per
/// `(family, psi)` with the counts at `p = 7, 11, 13, 17` and `0` where `p`
/// is bad.
const FROZEN_COUNTS: [(&str, i64, [u64; 4]); 20] = [
    ("F4", 2, [96, 72, 320, 408]),
    ("F4", 3, [56, 192, 320, 120]),
    ("F4", 5, [96, 112, 0, 120]),
    ("F4", 7, [0, 136, 352, 88]),
    ("F1L3", 2, [0, 138, 164, 306]),
    ("F1L3", 3, [0, 126, 164, 324]),
    ("F1L3", 5, [0, 112, 0, 324]),
    ("F1L3", 7, [0, 136, 196, 292]),
    ("F2L2", 2, [54, 94, 164, 408]),
    ("F2L2", 3, [42, 126, 164, 392]),
    ("F2L2", 5, [54, 90, 0, 392]),
    ("F2L2", 7, [0, 114, 196, 360]),
    ("L2L2", 2, [68, 116, 216, 408]),
    ("L2L2", 3, [56, 148, 320, 528]),
    ("L2L2", 5, [68, 112, 0, 528]),
    ("L2L2", 7, [0, 136, 352, 360]),
    ("L4", 2, [68, 204, 190, 340]),
    ("L4", 3, [70, 104, 190, 358]),
    ("L4", 5, [68, 134, 0, 358]),
    ("L4", 7, [0, 114, 222, 326]),
];

fn instance(family: &str, psi: i64) -> PencilInstance {
    PencilInstance::from_int(family.parse().unwrap(), psi).unwrap()
}

#[test]
fn all_modes_reproduce_frozen_counts() {
    for (family, psi, counts) in FROZEN_COUNTS {
        let inst = instance(family, psi);
        for (p, expected) in [7u64, 11, 13, 17].into_iter().zip(counts) {
            let ctx = build_field(p, 1).unwrap();
            if expected == 0 {
                assert!(check_good(&inst, p).is_err(), "{family} psi={psi} p={p}");
                continue;
            }
            for mode in [
                CountMode::Formula,
                CountMode::KoblitzBoundary,
                CountMode::Brute,
            ] {
                let n = count_full(&inst, &ctx, mode).unwrap();
                assert_eq!(
                    n,
                    BigInt::from(expected),
                    "{family} psi={psi} p={p} {mode:?}"
                );
            }
        }
    }
}

#[test]
fn formula_matches_enumeration_over_f49() {
    let ctx = build_field(7, 2).unwrap();
    let inst = PencilInstance::new(PencilId::F4, Rat::from(2)).unwrap();
    let brute = brute_projective_count(&ctx, &defining_system(&inst, &ctx).unwrap()).unwrap();
    assert_eq!(
        count_full(&inst, &ctx, CountMode::Formula).unwrap(),
        BigInt::from(brute)
    );
    assert_eq!(brute_count_fibered(&inst, &ctx).unwrap(), brute);
}

#[test]
fn formula_matches_enumeration_at_small_good_primes() {
    for id in PencilId::ALL {
        for psi in [2i64, 3, 5] {
            let inst = PencilInstance::from_int(id, psi).unwrap();
            for p in [7u64, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
                if check_good(&inst, p).is_err() {
                    continue;
                }
                let ctx = build_field(p, 1).unwrap();
                let formula = count_full(&inst, &ctx, CountMode::Formula).unwrap();
                let koblitz = count_full(&inst, &ctx, CountMode::KoblitzBoundary).unwrap();
                let brute = BigInt::from(brute_count_fibered(&inst, &ctx).unwrap());
                assert_eq!(formula, brute, "{id} psi={psi} p={p}");
                assert_eq!(koblitz, brute, "{id} psi={psi} p={p}");
                assert!(formula >= BigInt::from(boundary_count(&inst, &ctx).unwrap()));
            }
        }
    }
}

#[test]
fn bad_prime_examples() {
    let set = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
    assert_eq!(bad_primes(PencilId::F4, Rat::from(2)), set(&[2, 3, 5]));
    assert_eq!(bad_primes(PencilId::F1L3, Rat::from(3)), set(&[2, 3, 5, 7]));
    assert_eq!(bad_primes(PencilId::L4, Rat::from(2)), set(&[2, 3, 5]));
    assert_eq!(bad_primes(PencilId::F2L2, Rat::new(1, 3)), set(&[2, 3, 5]));
}

#[test]
fn degenerate_parameters_are_rejected() {
    assert!(PencilInstance::from_int(PencilId::F4, 0).is_err());
    assert!(PencilInstance::from_int(PencilId::F4, 1).is_err());
    assert!(PencilInstance::from_int(PencilId::F4, -1).is_err());
    assert!("K3".parse::<PencilId>().is_err());
    assert_eq!("l2l2".parse::<PencilId>().unwrap(), PencilId::L2L2);
}

#[test]
fn defining_system_examples() {
    let ctx = build_field(7, 1).unwrap();
    let sys = defining_system(&instance("F4", 3), &ctx).unwrap();
    assert_eq!(sys.nu()[4], vec![1, 1, 1, 1]);
    assert_eq!(sys.coefficients()[4], 2);
    for i in 0..4 {
        let mut row = vec![0; 4];
        row[i] = 4;
        assert_eq!(sys.nu()[i], row);
    }
    let l4 = defining_system(&instance("L4", 3), &build_field(11, 1).unwrap()).unwrap();
    assert_eq!(
        &l4.nu()[..4],
        &[
            vec![3, 1, 0, 0],
            vec![0, 3, 1, 0],
            vec![0, 0, 3, 1],
            vec![1, 0, 0, 3]
        ]
    );
    let f2l2 = defining_system(&instance("F2L2", 3), &build_field(11, 1).unwrap()).unwrap();
    assert_eq!(
        &f2l2.nu()[..4],
        &[
            vec![4, 0, 0, 0],
            vec![0, 4, 0, 0],
            vec![0, 0, 3, 1],
            vec![0, 0, 1, 3]
        ]
    );
}

#[test]
fn boundary_count_examples() {
    for p in [7u64, 11, 19, 23, 31, 43] {
        let ctx = build_field(p, 1).unwrap();
        assert_eq!(
            boundary_count(&instance("F4", 3), &ctx).unwrap(),
            4 * p + 4,
            "p = {p}"
        );
    }
    for p in [11u64, 13, 17, 19, 23, 31] {
        let ctx = build_field(p, 1).unwrap();
        assert_eq!(
            boundary_count(&instance("F1L3", 2), &ctx).unwrap(),
            4 * p - 2,
            "p = {p}"
        );
    }
    for p in [7u64, 11, 13, 17, 19, 23, 29, 31] {
        let ctx = build_field(p, 1).unwrap();
        assert_eq!(
            boundary_count(&instance("L4", 2), &ctx).unwrap(),
            6 * p - 2,
            "p = {p}"
        );
    }
}

#[test]
fn bad_primes_are_refused_by_every_mode() {
    let ctx = build_field(5, 1).unwrap();
    let inst = instance("F4", 2);
    for mode in [
        CountMode::Formula,
        CountMode::KoblitzBoundary,
        CountMode::Brute,
    ] {
        assert_eq!(
            count_full(&inst, &ctx, mode).unwrap_err().code(),
            "bad_prime"
        );
    }
}

#[test]
fn count_modes_parse() {
    assert_eq!("formula".parse::<CountMode>().unwrap(), CountMode::Formula);
    assert_eq!(
        "koblitz+boundary".parse::<CountMode>().unwrap(),
        CountMode::KoblitzBoundary
    );
    assert_eq!("brute".parse::<CountMode>().unwrap(), CountMode::Brute);
    assert!("fast".parse::<CountMode>().is_err());
}
