//! Property tests over randomly parameterized markets.

use coremarket_core::gen::{gen_random, PrefModel, RandomModel};
use coremarket_core::market::{check_core, envy_graph, CoreVerdict};
use coremarket_core::ttc;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = PrefModel> {
    prop_oneof![
        Just(PrefModel::Strict),
        (0.0f64..=1.0).prop_map(|tie| PrefModel::Weak { tie }),
        (0.0f64..=1.0).prop_map(|edge| PrefModel::Poset { edge }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ttc_output_is_core_member(
        seed in any::<u64>(),
        n in 1usize..20,
        model in model_strategy(),
        density in 0.0f64..=1.0,
    ) {
        let h = gen_random(&RandomModel { seed, n, model, density }).unwrap();
        let x = ttc(&h);
        prop_assert_eq!(check_core(&h, &x), CoreVerdict::InCore);
    }

    #[test]
    fn envy_arcs_stay_inside_acceptability(
        seed in any::<u64>(),
        n in 1usize..15,
        density in 0.0f64..=1.0,
    ) {
        let h = gen_random(&RandomModel {
            seed,
            n,
            model: PrefModel::Poset { edge: 0.4 },
            density,
        }).unwrap();
        let x = ttc(&h);
        let g = envy_graph(&h, &x);
        let acc = h.acceptability_graph();
        for a in h.agents() {
            for &b in &g.out[a.index()] {
                prop_assert!(b != a);
                prop_assert!(acc.has_arc(a, b));
            }
        }
    }

    #[test]
    fn generation_is_deterministic(
        seed in any::<u64>(),
        n in 1usize..12,
        density in 0.0f64..=1.0,
    ) {
        let params = RandomModel { seed, n, model: PrefModel::Weak { tie: 0.5 }, density };
        prop_assert_eq!(gen_random(&params).unwrap(), gen_random(&params).unwrap());
    }
}
