//! Cross-checks between the fast checkers/algorithms and brute-force
//! enumeration on small random markets.

use coremarket_core::gen::{gen_random, PrefModel, RandomModel};
use coremarket_core::market::{check_core, check_strict_core, CoreVerdict, StrictCoreVerdict};
use coremarket_core::oracle::{enumerate_core, for_each_allocation};
use coremarket_core::ttc;

fn models() -> [PrefModel; 3] {
    [
        PrefModel::Strict,
        PrefModel::Weak { tie: 0.35 },
        PrefModel::Poset { edge: 0.35 },
    ]
}

#[test]
fn checker_agrees_with_enumeration() {
    for seed in 0..40 {
        for model in models() {
            let h = gen_random(&RandomModel {
                seed,
                n: 3 + (seed as usize % 4),
                model,
                density: 0.7,
            })
            .unwrap();
            let summary = enumerate_core(&h, None).unwrap();
            let mut total = 0;
            for_each_allocation(&h, &[], |x| {
                total += 1;
                let in_core = check_core(&h, x) == CoreVerdict::InCore;
                assert_eq!(in_core, summary.contains(x), "seed {seed}");
            });
            assert_eq!(total, summary.allocation_count);
        }
    }
}

#[test]
fn strict_core_within_core() {
    for seed in 0..40 {
        for model in models() {
            let h = gen_random(&RandomModel {
                seed: seed + 1000,
                n: 3 + (seed as usize % 4),
                model,
                density: 0.7,
            })
            .unwrap();
            for_each_allocation(&h, &[], |x| {
                if check_strict_core(&h, x) == StrictCoreVerdict::InStrictCore {
                    assert_eq!(check_core(&h, x), CoreVerdict::InCore, "seed {seed}");
                }
            });
        }
    }
}

#[test]
fn ttc_lands_in_core() {
    for seed in 0..60 {
        for model in models() {
            let h = gen_random(&RandomModel {
                seed: seed + 2000,
                n: 4 + (seed as usize % 4),
                model,
                density: 0.6,
            })
            .unwrap();
            let x = ttc(&h);
            assert_eq!(check_core(&h, &x), CoreVerdict::InCore, "seed {seed}");
            let summary = enumerate_core(&h, None).unwrap();
            assert!(summary.contains(&x), "seed {seed}");
        }
    }
}

#[test]
fn ttc_unique_strict_core_under_strict_preferences() {
    for seed in 0..60 {
        let h = gen_random(&RandomModel {
            seed: seed + 3000,
            n: 4 + (seed as usize % 4),
            model: PrefModel::Strict,
            density: 0.8,
        })
        .unwrap();
        let summary = enumerate_core(&h, None).unwrap();
        let strict: Vec<_> = summary
            .core
            .iter()
            .filter(|x| check_strict_core(&h, x) == StrictCoreVerdict::InStrictCore)
            .collect();
        assert_eq!(strict.len(), 1, "seed {seed}");
        assert_eq!(*strict[0], ttc(&h), "seed {seed}");
    }
}
