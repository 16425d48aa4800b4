//! Seeded random instance generation.
//!
//! All generators are deterministic across platforms: randomness comes from
//! ChaCha8 (a counter-based stream generator with fixed reference constants)
//! seeded explicitly, and every draw order is fixed by the code path.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market::{AgentId, HousingMarket, PosetSpec};
use crate::roommates::{Matching, RoommatesInstance};

/// Preference class drawn for each agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrefModel {
    /// Linear order over the acceptable houses.
    Strict,
    /// Weak order; after a shuffle, each house joins the previous tie class
    /// with probability `tie`.
    Weak { tie: f64 },
    /// Partial order; covers drawn with probability `edge` per pair, oriented
    /// along a random permutation so the relation is acyclic.
    Poset { edge: f64 },
}

/// Parameters for [`gen_random`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomModel {
    pub seed: u64,
    pub n: usize,
    pub model: PrefModel,
    /// Probability that each non-own house is acceptable.
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenError {
    BadParams(&'static str),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::BadParams(msg) => write!(f, "bad generator parameters: {msg}"),
        }
    }
}

fn check_prob(p: f64, what: &'static str) -> Result<(), GenError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GenError::BadParams(what));
    }
    Ok(())
}

fn agent_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// Shuffled acceptable set (without the own house) for one agent.
fn draw_acceptable(rng: &mut ChaCha8Rng, n: usize, own: usize, density: f64) -> Vec<AgentId> {
    let mut acc: Vec<AgentId> = (0..n)
        .filter(|&b| b != own && rng.gen_bool(density))
        .map(AgentId::new)
        .collect();
    acc.shuffle(rng);
    acc
}

/// Split a shuffled list into tie classes with geometric sizes.
fn tie_classes(rng: &mut ChaCha8Rng, order: &[AgentId], tie: f64) -> Vec<Vec<AgentId>> {
    let mut classes: Vec<Vec<AgentId>> = Vec::new();
    for &b in order {
        if classes.is_empty() || !rng.gen_bool(tie) {
            classes.push(vec![b]);
        } else {
            classes.last_mut().expect("nonempty").push(b);
        }
    }
    classes
}

/// Deterministic random housing market.
pub fn gen_random(params: &RandomModel) -> Result<HousingMarket, GenError> {
    if params.n == 0 {
        return Err(GenError::BadParams("agent count must be positive"));
    }
    check_prob(params.density, "density must lie in [0, 1]")?;
    match params.model {
        PrefModel::Strict => {}
        PrefModel::Weak { tie } => check_prob(tie, "tie parameter must lie in [0, 1]")?,
        PrefModel::Poset { edge } => check_prob(edge, "edge probability must lie in [0, 1]")?,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let mut specs = Vec::with_capacity(n);
    for a in 0..n {
        let owner = AgentId::new(a);
        let order = draw_acceptable(&mut rng, n, a, params.density);
        let spec = match params.model {
            PrefModel::Strict => PosetSpec::strict(owner, &order),
            PrefModel::Weak { tie } => PosetSpec::weak(owner, &tie_classes(&mut rng, &order, tie)),
            PrefModel::Poset { edge } => {
                // Orient candidate covers from later to earlier in the
                // shuffled order; the result is a DAG by construction. Houses
                // left unrelated to the own house stay acceptable.
                let mut acceptable = order.clone();
                acceptable.push(owner);
                let mut covers = Vec::new();
                for i in 0..order.len() {
                    for j in i + 1..order.len() {
                        if rng.gen_bool(edge) {
                            covers.push((order[j], order[i]));
                        }
                    }
                }
                PosetSpec { acceptable, covers }
            }
        };
        specs.push(spec);
    }
    Ok(HousingMarket::new(agent_names(n), specs).expect("generated market is valid"))
}

/// Parameters for [`gen_random_roommates`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomRoommates {
    pub seed: u64,
    pub n: usize,
    /// Probability of each acceptability edge.
    pub density: f64,
    /// Probability that consecutive list entries are tied; 0 gives a strict
    /// instance.
    pub tie: f64,
}

/// Deterministic random roommates instance with mutual acceptability.
pub fn gen_random_roommates(params: &RandomRoommates) -> Result<RoommatesInstance, GenError> {
    check_prob(params.density, "density must lie in [0, 1]")?;
    check_prob(params.tie, "tie parameter must lie in [0, 1]")?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let mut neighbors: Vec<Vec<AgentId>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(params.density) {
                neighbors[a].push(AgentId::new(b));
                neighbors[b].push(AgentId::new(a));
            }
        }
    }
    let mut classes = Vec::with_capacity(n);
    for mut order in neighbors {
        order.shuffle(&mut rng);
        classes.push(tie_classes(&mut rng, &order, params.tie));
    }
    let names = (0..n).map(|i| format!("r{i}")).collect();
    Ok(RoommatesInstance::new(names, classes).expect("generated instance is mutual"))
}

/// Weak-order tie classes of one agent's preferences, reconstructed from the
/// market (best class first, own house included). Only valid for markets
/// built from weak orders.
fn market_classes(h: &HousingMarket, a: AgentId) -> Vec<Vec<AgentId>> {
    let pref = h.pref(a);
    let mut rest: Vec<AgentId> = pref.acceptable().to_vec();
    let mut classes: Vec<Vec<AgentId>> = Vec::new();
    while !rest.is_empty() {
        // Top class: houses with nothing remaining preferred over them.
        let top: Vec<AgentId> = rest
            .iter()
            .copied()
            .filter(|&x| !rest.iter().any(|&y| pref.prefers(x, y)))
            .collect();
        rest.retain(|x| !top.contains(x));
        classes.push(top);
    }
    classes
}

/// A seeded `p`-improvement of `h`: for a random subset of agents, house `p`
/// moves up in the (weak-order) preferences or becomes newly acceptable.
/// Returns the changed market and `p`. `h` must have weak-order preferences
/// (strict included).
pub fn gen_improvement(h: &HousingMarket, seed: u64) -> (HousingMarket, AgentId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.n();
    let p = AgentId::new(rng.gen_range(0..n));
    let mut specs = Vec::with_capacity(n);
    let mut changed = 0usize;
    for a in h.agents() {
        let mut classes = market_classes(h, a);
        let promote = a != p && rng.gen_bool(0.6);
        if promote {
            let old_pos = classes.iter().position(|c| c.contains(&p));
            match old_pos {
                Some(i) => {
                    if i > 0 {
                        // Move p into a random strictly better slot: join an
                        // existing class or open a new one above it.
                        classes[i].retain(|&x| x != p);
                        if classes[i].is_empty() {
                            classes.remove(i);
                        }
                        let j = rng.gen_range(0..i);
                        if rng.gen_bool(0.5) {
                            classes[j].push(p);
                        } else {
                            classes.insert(j, vec![p]);
                        }
                        changed += 1;
                    }
                }
                None => {
                    if rng.gen_bool(0.5) {
                        // Keep p above the own-house class so the spec stays
                        // valid.
                        let own = classes
                            .iter()
                            .position(|c| c.contains(&a))
                            .expect("own house is acceptable");
                        let j = rng.gen_range(0..=own);
                        classes.insert(j, vec![p]);
                        changed += 1;
                    }
                }
            }
        }
        specs.push(PosetSpec::weak(a, &classes));
    }
    if changed == 0 && n > 1 {
        // Force at least one change so the pair is a genuine improvement:
        // make p the top choice of the lowest agent able to promote it.
        for a in h.agents() {
            if a == p {
                continue;
            }
            let mut classes = market_classes(h, a);
            if let Some(i) = classes.iter().position(|c| c.contains(&p)) {
                classes[i].retain(|&x| x != p);
                if classes[i].is_empty() {
                    classes.remove(i);
                }
            }
            classes.insert(0, vec![p]);
            specs[a.index()] = PosetSpec::weak(a, &classes);
            break;
        }
    }
    let h2 = HousingMarket::new(h.names().to_vec(), specs).expect("promotion keeps specs valid");
    (h2, p)
}

/// A seeded `(p, q)`-improvement of a strict roommates instance: `p` moves up
/// in `q`'s list, or becomes newly (mutually) acceptable on top of it.
/// Returns `None` when no agent pair admits a change.
pub fn gen_roommates_improvement(
    h: &RoommatesInstance,
    seed: u64,
) -> Option<(RoommatesInstance, AgentId, AgentId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.n();
    if n < 2 {
        return None;
    }
    // Try random (p, q) pairs; accept the first that allows a promotion.
    for _ in 0..4 * n {
        let p = AgentId::new(rng.gen_range(0..n));
        let q = AgentId::new(rng.gen_range(0..n));
        if p == q {
            continue;
        }
        let mut q_list = h.list(q);
        let mut p_list = h.list(p);
        match q_list.iter().position(|&x| x == p) {
            Some(0) => continue, // already top choice
            Some(i) => {
                q_list.remove(i);
                let j = rng.gen_range(0..i);
                q_list.insert(j, p);
            }
            None => {
                let j = rng.gen_range(0..=q_list.len());
                q_list.insert(j, p);
                let k = rng.gen_range(0..=p_list.len());
                p_list.insert(k, q);
            }
        }
        let lists: Vec<Vec<AgentId>> = h
            .agents()
            .map(|a| {
                if a == q {
                    q_list.clone()
                } else if a == p {
                    p_list.clone()
                } else {
                    h.list(a)
                }
            })
            .collect();
        let h2 = RoommatesInstance::strict(h.names().to_vec(), lists)
            .expect("promotion keeps acceptability mutual");
        return Some((h2, p, q));
    }
    None
}

/// Convenience: a random stable matching scenario for repair tests. Draws a
/// strict roommates instance, solves it, and applies a random improvement;
/// `None` when the base instance is unsolvable or admits no improvement.
pub fn gen_roommates_quintuple(
    seed: u64,
    n: usize,
    density: f64,
) -> Option<(RoommatesInstance, RoommatesInstance, AgentId, AgentId, Matching)> {
    let h = gen_random_roommates(&RandomRoommates {
        seed,
        n,
        density,
        tie: 0.0,
    })
    .ok()?;
    let m = crate::roommates::find_stable(&h).expect("strict instance")?;
    let (h2, p, q) = gen_roommates_improvement(&h, seed ^ 0x9e3779b97f4a7c15)?;
    Some((h, h2, p, q, m))
}
