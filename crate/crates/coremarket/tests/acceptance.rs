//! End-to-end acceptance checks: each test verifies one headline guarantee of
//! the library at desk scale, cross-validated against the exhaustive oracles.

use std::time::{Duration, Instant};

use coremarket_core::gen::{
    gen_improvement, gen_random, gen_random_roommates, gen_roommates_quintuple, PrefModel,
    RandomModel, RandomRoommates,
};
use coremarket_core::improve::{hm_improve, is_p_improvement};
use coremarket_core::market::{
    check_core, check_strict_core, AgentId, Allocation, CoreVerdict, HousingMarket, PosetSpec,
    StrictCoreVerdict,
};
use coremarket_core::oracle::{
    arc_in_core, enumerate_core, forbidden_arc_in_core, max_core, strict_improvement_decide,
    StrictImprovementKind,
};
use coremarket_core::reductions::{
    gadget_arc_in_core, gadget_forbidden_arc, gadget_maxcore, gadget_strict_improvement, Digraph,
    ImprovementGadget,
};
use coremarket_core::roommates::{
    check_stable, enumerate_stable, enumerate_strongly_stable, find_stable, is_pq_improvement,
    sr_improve, RoommatesInstance,
};
use coremarket_core::ttc;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn id(i: usize) -> AgentId {
    AgentId::new(i)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// Recovers the best-first strict list of `a` (own house excluded).
fn strict_list(h: &HousingMarket, a: AgentId) -> Vec<AgentId> {
    let pref = h.pref(a);
    let mut list: Vec<AgentId> = pref.acceptable().iter().copied().filter(|&b| b != a).collect();
    list.sort_by(|&x, &y| {
        if pref.prefers(y, x) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    list
}

/// Moves house `p` one or more positions up in the strict list of a random
/// agent `q`, keeping preferences strict. Returns the changed market and `p`.
fn strict_promotion(h: &HousingMarket, rng: &mut ChaCha8Rng) -> Option<(HousingMarket, AgentId)> {
    let n = h.n();
    let p = id(rng.gen_range(0..n));
    for _ in 0..4 * n {
        let q = id(rng.gen_range(0..n));
        if q == p {
            continue;
        }
        let mut list = strict_list(h, q);
        let Some(i) = list.iter().position(|&b| b == p) else {
            continue;
        };
        if i == 0 {
            continue;
        }
        let j = rng.gen_range(0..i);
        list.remove(i);
        list.insert(j, p);
        let mut specs: Vec<PosetSpec> = h
            .prefs()
            .iter()
            .map(|pr| PosetSpec {
                acceptable: pr.acceptable().to_vec(),
                covers: pr.covers().to_vec(),
            })
            .collect();
        specs[q.index()] = PosetSpec::strict(q, &list);
        let h2 = HousingMarket::new(h.names().to_vec(), specs).ok()?;
        return Some((h2, p));
    }
    None
}

/// All simple digraphs on `n` vertices (no loops), in mask order.
fn all_digraphs(n: usize) -> Vec<Digraph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    (0..1u64 << pairs.len())
        .map(|mask| {
            let arcs = pairs
                .iter()
                .enumerate()
                .filter(|&(k, _)| mask >> k & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            Digraph::new(n, arcs).unwrap()
        })
        .collect()
}

fn permutations(items: &[AgentId]) -> Vec<Vec<AgentId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Deterministic stream of improvement scenarios with the starting allocation
/// drawn from the enumerated core; stops after `count` quadruples.
fn for_each_quadruple(count: usize, mut f: impl FnMut(&HousingMarket, &HousingMarket, AgentId, &Allocation)) {
    let mut produced = 0;
    let mut seed = 0u64;
    while produced < count {
        let n = 4 + (seed as usize % 5);
        let model = if seed % 2 == 0 {
            PrefModel::Strict
        } else {
            PrefModel::Weak { tie: 0.3 }
        };
        let h = gen_random(&RandomModel {
            seed,
            n,
            model,
            density: 0.7,
        })
        .unwrap();
        let (h2, p) = gen_improvement(&h, seed ^ 0x5eed_cafe);
        let before = enumerate_core(&h, None).unwrap();
        for x in &before.core {
            f(&h, &h2, p, x);
            produced += 1;
            if produced == count {
                break;
            }
        }
        seed += 1;
    }
}

#[test]
fn check_01_ttc_lands_in_core_across_models() {
    let start = Instant::now();
    let models = [
        PrefModel::Strict,
        PrefModel::Weak { tie: 0.3 },
        PrefModel::Poset { edge: 0.3 },
    ];
    for (mi, model) in models.into_iter().enumerate() {
        for seed in 0..1000u64 {
            let n = 5 + ((seed as usize * 7 + mi) % 46);
            let h = gen_random(&RandomModel {
                seed: seed + 10_000 * mi as u64,
                n,
                model,
                density: 0.6,
            })
            .unwrap();
            let x = ttc(&h);
            assert_eq!(
                check_core(&h, &x),
                CoreVerdict::InCore,
                "model {mi} seed {seed}"
            );
        }
    }
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "suite took {:?}",
        start.elapsed()
    );
}

#[test]
fn check_02_ttc_equals_unique_strict_core_when_strict() {
    // Exhaustive: every strict full-acceptability profile for n <= 4.
    for n in 1..=4usize {
        let agents: Vec<AgentId> = (0..n).map(id).collect();
        let per_agent: Vec<Vec<Vec<AgentId>>> = agents
            .iter()
            .map(|&a| {
                let others: Vec<AgentId> =
                    agents.iter().copied().filter(|&b| b != a).collect();
                permutations(&others)
            })
            .collect();
        let mut index = vec![0usize; n];
        loop {
            let specs: Vec<PosetSpec> = agents
                .iter()
                .map(|&a| PosetSpec::strict(a, &per_agent[a.index()][index[a.index()]]))
                .collect();
            let h = HousingMarket::new(names(n), specs).unwrap();
            let summary = enumerate_core(&h, None).unwrap();
            let strict: Vec<&Allocation> = summary
                .core
                .iter()
                .filter(|x| check_strict_core(&h, x) == StrictCoreVerdict::InStrictCore)
                .collect();
            assert_eq!(strict.len(), 1, "n {n} profile {index:?}");
            assert_eq!(*strict[0], ttc(&h), "n {n} profile {index:?}");
            // Advance the mixed-radix profile counter.
            let mut pos = 0;
            loop {
                if pos == n {
                    break;
                }
                index[pos] += 1;
                if index[pos] < per_agent[pos].len() {
                    break;
                }
                index[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
    }
    // Random strict markets with partial acceptability.
    for seed in 0..200u64 {
        let h = gen_random(&RandomModel {
            seed: seed + 20_000,
            n: 3 + (seed as usize % 5),
            model: PrefModel::Strict,
            density: 0.8,
        })
        .unwrap();
        let summary = enumerate_core(&h, None).unwrap();
        let strict: Vec<&Allocation> = summary
            .core
            .iter()
            .filter(|x| check_strict_core(&h, x) == StrictCoreVerdict::InStrictCore)
            .collect();
        assert_eq!(strict.len(), 1, "seed {seed}");
        assert_eq!(*strict[0], ttc(&h), "seed {seed}");
    }
}

#[test]
fn check_03_repair_keeps_core_membership_and_helps_p() {
    for_each_quadruple(500, |h, h2, p, x| {
        let x2 = hm_improve(h, h2, p, x).unwrap();
        assert_eq!(check_core(h2, &x2), CoreVerdict::InCore);
        assert!(h2.pref(p).weakly_prefers(x.get(p), x2.get(p)));
    });
}

#[test]
fn check_04_best_core_house_weakly_dominates_after_improvement() {
    let mut last: Option<(HousingMarket, HousingMarket, AgentId)> = None;
    for_each_quadruple(500, |h, h2, p, _x| {
        if let Some((ph, _, pp)) = &last {
            if ph == h && *pp == p {
                return; // one check per improvement pair
            }
        }
        let before = enumerate_core(h, None).unwrap();
        let after = enumerate_core(h2, None).unwrap();
        assert!(!after.core.is_empty(), "core emptied by improvement");
        let pref = h2.pref(p);
        for &b in &before.best[p.index()] {
            assert!(
                after.best[p.index()]
                    .iter()
                    .any(|&b2| pref.weakly_prefers(b, b2)),
                "best house degraded"
            );
        }
        last = Some((h.clone(), h2.clone(), p));
    });
}

#[test]
fn check_05_worst_core_house_can_degrade() {
    // Search for a 5-agent strict market where promoting p's house strictly
    // worsens p's least favorable core outcome.
    let start = Instant::now();
    let mut witness = None;
    for seed in 0..50_000u64 {
        let h = gen_random(&RandomModel {
            seed,
            n: 5,
            model: PrefModel::Strict,
            density: 0.9,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead_beef);
        let Some((h2, p)) = strict_promotion(&h, &mut rng) else {
            continue;
        };
        let before = enumerate_core(&h, None).unwrap();
        let after = enumerate_core(&h2, None).unwrap();
        let (old, new) = (&before.worst[p.index()], &after.worst[p.index()]);
        assert_eq!(old.len(), 1);
        assert_eq!(new.len(), 1);
        // Degradation: the old worst house is strictly preferred to the new.
        if h2.pref(p).prefers(new[0], old[0]) {
            witness = Some(seed);
            break;
        }
    }
    assert!(witness.is_some(), "no degradation witness found");
    assert!(
        start.elapsed() < Duration::from_secs(300),
        "search took {:?}",
        start.elapsed()
    );
}

/// Adds house `p` as a strict maximum to the lists of `q` and of every
/// `stride`-th agent; together with an agent already envying `q`'s house this
/// guarantees the old allocation is blocked, so the repair does real work.
fn mass_promotion(h: &HousingMarket, p: AgentId, q: AgentId, stride: usize) -> HousingMarket {
    let mut specs: Vec<PosetSpec> = h
        .prefs()
        .iter()
        .map(|pr| PosetSpec {
            acceptable: pr.acceptable().to_vec(),
            covers: pr.covers().to_vec(),
        })
        .collect();
    for a in h.agents() {
        if a == p || (a != q && a.index() % stride != 0) {
            continue;
        }
        let spec = &mut specs[a.index()];
        if spec.acceptable.contains(&p) {
            continue;
        }
        for &x in &spec.acceptable.clone() {
            spec.covers.push((x, p));
        }
        spec.acceptable.push(p);
    }
    HousingMarket::new(h.names().to_vec(), specs).unwrap()
}

#[test]
fn check_06_running_time_scales_linearly() {
    struct Case {
        h: HousingMarket,
        h2: HousingMarket,
        p: AgentId,
        x0: Allocation,
    }
    let sizes = [10_000usize, 20_000, 40_000, 80_000];
    let seeds = 3u64;
    let rounds = 8;
    let mut cases: Vec<Vec<Case>> = Vec::new();
    for &size in &sizes {
        let mut group = Vec::new();
        for seed in 0..seeds {
            let n = size / 10;
            let h = gen_random(&RandomModel {
                seed,
                n,
                model: PrefModel::Weak { tie: 0.3 },
                density: (10.0 / n as f64).min(1.0),
            })
            .unwrap();
            let x0 = ttc(&h);
            // A pair (p, q): p strictly envies house q under x0 and q does
            // not yet accept house p, so promoting p for q blocks {p, q}.
            let (p, q) = h
                .agents()
                .find_map(|a| {
                    h.pref(a)
                        .acceptable()
                        .iter()
                        .find(|&&y| {
                            h.pref(a).prefers(x0.get(a), y)
                                && !h.pref(y).acceptable().contains(&a)
                        })
                        .map(|&y| (a, y))
                })
                .expect("some agent misses its top choice");
            let h2 = mass_promotion(&h, p, q, 5);
            assert!(is_p_improvement(&h, &h2, p).unwrap());
            assert!(!check_core(&h2, &x0).is_in_core());
            group.push(Case { h, h2, p, x0 });
        }
        cases.push(group);
    }
    // Sizes are measured round-robin and the per-size minimum over rounds is
    // kept, so a transient slowdown of the host cannot skew one size only.
    let mut ttc_time = vec![f64::MAX; sizes.len()];
    let mut hm_time = vec![f64::MAX; sizes.len()];
    for _round in 0..rounds {
        for (si, group) in cases.iter().enumerate() {
            let mut t_sum = 0.0;
            let mut h_sum = 0.0;
            for c in group {
                let t = Instant::now();
                let y = ttc(&c.h);
                t_sum += t.elapsed().as_secs_f64();
                std::hint::black_box(y);
                let t = Instant::now();
                let x2 = hm_improve(&c.h, &c.h2, c.p, &c.x0).unwrap();
                h_sum += t.elapsed().as_secs_f64();
                std::hint::black_box(x2);
            }
            ttc_time[si] = ttc_time[si].min(t_sum);
            hm_time[si] = hm_time[si].min(h_sum);
        }
    }
    for i in 1..sizes.len() {
        let rt = ttc_time[i] / ttc_time[i - 1];
        let rh = hm_time[i] / hm_time[i - 1];
        assert!(
            rt <= 2.5,
            "ttc grew x{rt:.2} from {} to {}",
            sizes[i - 1],
            sizes[i]
        );
        assert!(
            rh <= 2.5,
            "hm_improve grew x{rh:.2} from {} to {}",
            sizes[i - 1],
            sizes[i]
        );
    }
}

#[test]
fn check_07_arc_gadgets_match_acyclic_bipartition() {
    let start = Instant::now();
    for n in 1..=3usize {
        for d in all_digraphs(n) {
            let yes = d.has_acyclic_bipartition();
            let (h, (a, b)) = gadget_arc_in_core(&d);
            assert_eq!(arc_in_core(&h, a, b, None).unwrap(), yes, "{:?}", d.arcs());
            let (hf, (af, sf)) = gadget_forbidden_arc(&d);
            assert_eq!(
                forbidden_arc_in_core(&hf, af, sf, None).unwrap(),
                yes,
                "{:?}",
                d.arcs()
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let arcs: Vec<(usize, usize)> = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        let d = Digraph::new(4, arcs).unwrap();
        let yes = d.has_acyclic_bipartition();
        let (h, (a, b)) = gadget_arc_in_core(&d);
        assert_eq!(
            arc_in_core(&h, a, b, Some(24)).unwrap(),
            yes,
            "{:?}",
            d.arcs()
        );
        let (hf, (af, sf)) = gadget_forbidden_arc(&d);
        assert_eq!(
            forbidden_arc_in_core(&hf, af, sf, Some(24)).unwrap(),
            yes,
            "{:?}",
            d.arcs()
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(600),
        "suite took {:?}",
        start.elapsed()
    );
}

#[test]
fn check_08_maxcore_gadget_bounds_and_k_formula() {
    let mut smallest_no: Option<Digraph> = None;
    for n in 1..=3usize {
        for d in all_digraphs(n) {
            let yes = d.has_acyclic_bipartition();
            if !yes && smallest_no.is_none() {
                smallest_no = Some(d.clone());
            }
            let (h, k) = gadget_maxcore(&d, 1, 1, Some(2)).unwrap();
            assert_eq!(k, 2);
            let (opt, _) = max_core(&h, Some(24)).unwrap();
            if yes {
                assert_eq!(opt, h.n(), "{:?}", d.arcs());
            } else {
                assert!(opt <= 4 * d.n() + 4, "{:?}", d.arcs());
            }
        }
    }
    // The smallest digraph without an acyclic 2-partition needs 3 vertices.
    let no = smallest_no.expect("a no-instance exists at n <= 3");
    assert_eq!(no.n(), 3);
    // Subdivision length for a single-vertex digraph: 8 at epsilon = 1 and
    // 8^2 = 64 at epsilon = 1/2.
    let d1 = Digraph::new(1, vec![]).unwrap();
    assert_eq!(gadget_maxcore(&d1, 1, 1, None).unwrap().1, 8);
    assert_eq!(gadget_maxcore(&d1, 1, 2, None).unwrap().1, 64);
}

#[test]
fn check_09_strict_improvement_deciders_agree() {
    // Under strict preferences the possible and necessary variants coincide.
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 200 {
        let h = gen_random(&RandomModel {
            seed: seed + 40_000,
            n: 4 + (seed as usize % 4),
            model: PrefModel::Strict,
            density: 0.8,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00c0_ffee);
        seed += 1;
        let Some((h2, p)) = strict_promotion(&h, &mut rng) else {
            continue;
        };
        let decide = |kind| strict_improvement_decide(kind, &h, &h2, p, None).unwrap();
        assert_eq!(
            decide(StrictImprovementKind::Psib),
            decide(StrictImprovementKind::Nsib),
            "seed {seed}"
        );
        assert_eq!(
            decide(StrictImprovementKind::Psiw),
            decide(StrictImprovementKind::Nsiw),
            "seed {seed}"
        );
        checked += 1;
    }
    // Gadget pairs decide consistently with the digraph's partition status.
    for n in 1..=2usize {
        for d in all_digraphs(n) {
            let yes = d.has_acyclic_bipartition();
            let (before, after, p) = gadget_strict_improvement(ImprovementGadget::Psib, &d);
            for kind in [StrictImprovementKind::Psib, StrictImprovementKind::Nsib] {
                assert_eq!(
                    strict_improvement_decide(kind, &before, &after, p, None).unwrap(),
                    yes,
                    "{kind:?} {:?}",
                    d.arcs()
                );
            }
            let (before, after, p) = gadget_strict_improvement(ImprovementGadget::Psiw, &d);
            for kind in [StrictImprovementKind::Psiw, StrictImprovementKind::Nsiw] {
                assert_eq!(
                    strict_improvement_decide(kind, &before, &after, p, None).unwrap(),
                    !yes,
                    "{kind:?} {:?}",
                    d.arcs()
                );
            }
        }
    }
}

#[test]
fn check_10_matching_repair_matches_enumeration() {
    let mut cases = 0;
    let mut seed = 0u64;
    while cases < 500 {
        let n = 4 + (seed as usize % 7);
        let scenario = gen_roommates_quintuple(seed, n, 0.6);
        seed += 1;
        assert!(seed < 10_000, "only {cases} scenarios after {seed} seeds");
        let Some((h, h2, p, q, m)) = scenario else {
            continue;
        };
        cases += 1;
        let out = sr_improve(&h, &h2, p, q, &m).unwrap();
        let all = enumerate_stable(&h2);
        match out {
            Some(m2) => {
                assert!(check_stable(&h2, &m2).is_stable(), "seed {seed}");
                assert!(all.contains(&m2), "seed {seed}");
                let ok = match (m.partner(p), m2.partner(p)) {
                    (None, _) => true,
                    (Some(_), None) => false,
                    (Some(old), Some(new)) => h2.weakly_prefers(p, new, old),
                };
                assert!(ok, "seed {seed}: p must fare weakly better");
            }
            None => assert!(all.is_empty(), "seed {seed}"),
        }
    }
}

#[test]
fn check_11_stable_roommates_solver_agrees_with_brute_force() {
    for seed in 0..10_000u64 {
        let inst = gen_random_roommates(&RandomRoommates {
            seed,
            n: 2 + (seed as usize % 5),
            density: [0.5, 0.7, 0.9][seed as usize % 3],
            tie: 0.0,
        })
        .unwrap();
        let all = enumerate_stable(&inst);
        match find_stable(&inst).unwrap() {
            Some(m) => {
                assert!(check_stable(&inst, &m).is_stable(), "seed {seed}");
                assert!(all.contains(&m), "seed {seed}");
            }
            None => assert!(all.is_empty(), "seed {seed}"),
        }
    }
}

#[test]
fn check_12_strongly_stable_best_partner_can_degrade() {
    // Bipartite instances with strict lists; the improvement merges p into
    // the tie class directly above in q's list, creating a single tie.
    let start = Instant::now();
    let mut witness = None;
    'search: for seed in 0..200_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let left = [id(0), id(1), id(2)];
        let right = [id(3), id(4), id(5)];
        let mut lists: Vec<Vec<AgentId>> = vec![Vec::new(); n];
        for &a in &left {
            for &b in &right {
                if rng.gen_bool(0.85) {
                    lists[a.index()].push(b);
                    lists[b.index()].push(a);
                }
            }
        }
        for l in &mut lists {
            l.shuffle(&mut rng);
        }
        let Ok(h) = RoommatesInstance::strict(names(n), lists) else {
            continue;
        };
        let p = id(rng.gen_range(0..n));
        let best_partner = |inst: &RoommatesInstance, sols: &[coremarket_core::roommates::Matching]| {
            sols.iter()
                .filter_map(|m| m.partner(p))
                .min_by_key(|&b| inst.rank(p, b).unwrap())
        };
        let before = enumerate_strongly_stable(&h);
        let Some(old_best) = best_partner(&h, &before) else {
            continue;
        };
        // Promote p by one class in the list of a random acceptable q.
        for _ in 0..6 {
            let q = id(rng.gen_range(0..n));
            let Some(i) = h.rank(q, p) else { continue };
            if i == 0 {
                continue;
            }
            let mut classes: Vec<Vec<Vec<AgentId>>> =
                h.agents().map(|a| h.classes(a).to_vec()).collect();
            let qc = &mut classes[q.index()];
            qc[i].retain(|&b| b != p);
            qc[i - 1].push(p);
            let Ok(h2) = RoommatesInstance::new(h.names().to_vec(), classes) else {
                continue;
            };
            assert!(is_pq_improvement(&h, &h2, p, q), "seed {seed}");
            let after = enumerate_strongly_stable(&h2);
            if after.is_empty() {
                continue;
            }
            let degraded = match best_partner(&h2, &after) {
                None => true,
                Some(new_best) => h2.prefers(p, old_best, new_best),
            };
            if degraded {
                witness = Some(seed);
                break 'search;
            }
        }
    }
    assert!(witness.is_some(), "no degradation witness found");
    assert!(
        start.elapsed() < Duration::from_secs(300),
        "search took {:?}",
        start.elapsed()
    );
}
