//! Hardness gadget generators: structured housing markets built from a
//! directed graph so that core questions about the market mirror the
//! acyclic-bipartition status of the graph. Used as instance generators whose
//! iff-properties are cross-checked against the brute-force oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::market::{AgentId, HousingMarket, PosetSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionError {
    /// The input digraph has a loop; gadgets require loop-free graphs.
    LoopInDigraph { v: usize },
    /// An arc references a vertex outside `0..n`.
    UnknownVertex { v: usize },
    /// The subdivision length exceeds the safety cap and no override was
    /// given.
    KTooLarge { k: u128, cap: usize },
    /// Epsilon must lie in (0, 1].
    BadEpsilon { num: u64, den: u64 },
}

impl fmt::Display for ReductionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionError::LoopInDigraph { v } => write!(f, "digraph has a loop at vertex {v}"),
            ReductionError::UnknownVertex { v } => write!(f, "arc references unknown vertex {v}"),
            ReductionError::KTooLarge { k, cap } => {
                write!(f, "subdivision length K = {k} exceeds cap {cap}; use a forced K")
            }
            ReductionError::BadEpsilon { num, den } => {
                write!(f, "epsilon {num}/{den} is not in (0, 1]")
            }
        }
    }
}

/// A simple directed graph on vertices `0..n`; no loops, no multi-arcs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    /// Sorted, deduplicated arc list.
    arcs: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, arcs: Vec<(usize, usize)>) -> Result<Digraph, ReductionError> {
        let mut arcs = arcs;
        for &(u, v) in &arcs {
            if u >= n {
                return Err(ReductionError::UnknownVertex { v: u });
            }
            if v >= n {
                return Err(ReductionError::UnknownVertex { v });
            }
            if u == v {
                return Err(ReductionError::LoopInDigraph { v: u });
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        Ok(Digraph { n, arcs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Out-neighbors of `u` within the vertex subset given by `keep`.
    fn successors_in(&self, u: usize, keep: impl Fn(usize) -> bool + Copy) -> Vec<usize> {
        self.arcs
            .iter()
            .filter(|&&(a, b)| a == u && keep(b))
            .map(|&(_, b)| b)
            .collect()
    }

    /// Is the subgraph induced by the vertices with `keep(v)` acyclic?
    pub fn induced_acyclic(&self, keep: impl Fn(usize) -> bool + Copy) -> bool {
        // Kahn-style peel on the induced subgraph.
        let mut indeg = vec![0usize; self.n];
        let mut total = 0usize;
        for v in 0..self.n {
            if keep(v) {
                total += 1;
            }
        }
        for &(u, v) in &self.arcs {
            if keep(u) && keep(v) {
                indeg[v] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..self.n).filter(|&v| keep(v) && indeg[v] == 0).collect();
        let mut seen = 0usize;
        while let Some(u) = stack.pop() {
            seen += 1;
            for v in self.successors_in(u, keep) {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    stack.push(v);
                }
            }
        }
        seen == total
    }

    /// Exhaustive check: can the vertices be split into two acyclic sets?
    /// Exponential in `n`; intended for small test graphs only.
    pub fn has_acyclic_bipartition(&self) -> bool {
        assert!(self.n < usize::BITS as usize, "brute force limited to small graphs");
        for mask in 0..(1usize << self.n) {
            let in_first = |v: usize| mask & (1 << v) != 0;
            if self.induced_acyclic(in_first) && self.induced_acyclic(|v| !in_first(v)) {
                return true;
            }
        }
        self.n == 0
    }
}

/// Agent layout of the base gadget market on `4n + 4` agents.
pub struct GadgetIds {
    pub a_star: AgentId,
    pub b_star: AgentId,
    n: usize,
}

impl GadgetIds {
    fn new(n: usize) -> GadgetIds {
        GadgetIds {
            a_star: AgentId::new(0),
            b_star: AgentId::new(1),
            n,
        }
    }

    /// `a_i` for `i` in `0..=n`.
    pub fn a(&self, i: usize) -> AgentId {
        AgentId::new(2 + i)
    }

    /// `b_i` for `i` in `0..=n`.
    pub fn b(&self, i: usize) -> AgentId {
        AgentId::new(2 + (self.n + 1) + i)
    }

    /// `c_i` for `i` in `1..=n`.
    pub fn c(&self, i: usize) -> AgentId {
        AgentId::new(2 + 2 * (self.n + 1) + (i - 1))
    }

    /// `d_i` for `i` in `1..=n`.
    pub fn d(&self, i: usize) -> AgentId {
        AgentId::new(2 + 2 * (self.n + 1) + self.n + (i - 1))
    }

    /// The extra agent of the forbidden-arc variant.
    pub fn s_star(&self) -> AgentId {
        AgentId::new(4 * self.n + 4)
    }
}

/// Base gadget: strict preference lists over `4n + 4` agents such that the
/// digraph splits into two acyclic sets iff some core allocation contains the
/// arc `(a*, b*)`. Vertex-dependent list segments are ordered by ascending
/// vertex index.
fn base_gadget(d: &Digraph) -> (Vec<String>, Vec<PosetSpec>, GadgetIds) {
    let n = d.n();
    let ids = GadgetIds::new(n);
    let total = 4 * n + 4;
    let mut names = vec![String::new(); total];
    let mut lists: Vec<Vec<AgentId>> = vec![Vec::new(); total];

    names[ids.a_star.index()] = String::from("a*");
    lists[ids.a_star.index()] = vec![ids.b_star];

    names[ids.b_star.index()] = String::from("b*");
    let mut bs: Vec<AgentId> = (0..=n).map(|i| ids.a(i)).collect();
    bs.push(ids.a_star);
    lists[ids.b_star.index()] = bs;

    for i in 0..=n {
        names[ids.a(i).index()] = format!("a{i}");
        lists[ids.a(i).index()] = vec![ids.b(i), ids.b_star];
        names[ids.b(i).index()] = format!("b{i}");
        lists[ids.b(i).index()] = if i < n {
            vec![ids.c(i + 1), ids.d(i + 1)]
        } else {
            vec![ids.a(0)]
        };
    }
    for i in 1..=n {
        names[ids.c(i).index()] = format!("c{i}");
        names[ids.d(i).index()] = format!("d{i}");
        // Successors of v_i, ascending (vertices are 0-indexed here, so v_i
        // corresponds to vertex i-1).
        let succ: Vec<usize> = d
            .arcs()
            .iter()
            .filter(|&&(u, _)| u == i - 1)
            .map(|&(_, v)| v + 1)
            .collect();
        let mut c_list = vec![ids.d(i)];
        c_list.extend(succ.iter().map(|&j| ids.c(j)));
        c_list.push(ids.a(i));
        lists[ids.c(i).index()] = c_list;
        let mut d_list = vec![ids.c(i)];
        d_list.extend(succ.iter().map(|&j| ids.d(j)));
        d_list.push(ids.a(i));
        lists[ids.d(i).index()] = d_list;
    }

    let specs = lists
        .iter()
        .enumerate()
        .map(|(i, l)| PosetSpec::strict(AgentId::new(i), l))
        .collect();
    (names, specs, ids)
}

/// Arc-restriction gadget: `d` has an acyclic bipartition iff some core
/// allocation of the returned market contains the returned arc `(a*, b*)`.
pub fn gadget_arc_in_core(d: &Digraph) -> (HousingMarket, (AgentId, AgentId)) {
    let (names, specs, ids) = base_gadget(d);
    let h = HousingMarket::new(names, specs).expect("gadget market is valid");
    (h, (ids.a_star, ids.b_star))
}

/// Forbidden-arc gadget: extends the base gadget by `s*` (second choice of
/// `a*`, wanting only `a*`'s house); `d` has an acyclic bipartition iff some
/// core allocation avoids the returned arc `(a*, s*)`.
pub fn gadget_forbidden_arc(d: &Digraph) -> (HousingMarket, (AgentId, AgentId)) {
    let (mut names, mut specs, ids) = base_gadget(d);
    let s = ids.s_star();
    names.push(String::from("s*"));
    specs[ids.a_star.index()] = PosetSpec::strict(ids.a_star, &[ids.b_star, s]);
    specs.push(PosetSpec::strict(s, &[ids.a_star]));
    let h = HousingMarket::new(names, specs).expect("gadget market is valid");
    (h, (ids.a_star, s))
}

/// `K = ceil((4n+4)^(1/eps))` for `eps = num/den`: the smallest `k` with
/// `k^num >= (4n+4)^den`.
fn subdivision_length(n: usize, num: u64, den: u64) -> Option<u128> {
    let base = (4 * n + 4) as u128;
    let target = checked_pow(base, den)?;
    // Binary search the smallest k with k^num >= target.
    let mut lo: u128 = 1;
    let mut hi: u128 = 1;
    while checked_pow(hi, num).map(|p| p < target).unwrap_or(false) {
        lo = hi;
        hi = hi.checked_mul(2)?;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match checked_pow(mid, num) {
            Some(p) if p >= target => hi = mid,
            _ => lo = mid + 1,
        }
    }
    Some(lo)
}

fn checked_pow(base: u128, exp: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

const K_CAP: usize = 10_000;

/// Size-gap gadget: the arc `(a*, b*)` of the base gadget subdivided by a
/// chain of `K` agents. With the formula `K = ceil((4n+4)^(1/eps))` for
/// `eps = eps_num/eps_den`, a yes-digraph gives `OPT = 4n+4+K` while a
/// no-digraph caps `OPT` at `4n+4`; `force_k` overrides the formula (the gap
/// property holds for any `K >= 1`). Returns the market and the `K` used.
pub fn gadget_maxcore(
    d: &Digraph,
    eps_num: u64,
    eps_den: u64,
    force_k: Option<usize>,
) -> Result<(HousingMarket, usize), ReductionError> {
    if eps_num == 0 || eps_den == 0 || eps_num > eps_den {
        return Err(ReductionError::BadEpsilon {
            num: eps_num,
            den: eps_den,
        });
    }
    let k = match force_k {
        Some(k) => k,
        None => {
            let k = subdivision_length(d.n(), eps_num, eps_den)
                .ok_or(ReductionError::KTooLarge { k: u128::MAX, cap: K_CAP })?;
            if k > K_CAP as u128 {
                return Err(ReductionError::KTooLarge { k, cap: K_CAP });
            }
            k as usize
        }
    };
    let (mut names, mut specs, ids) = base_gadget(d);
    let base = 4 * d.n() + 4;
    let p = |i: usize| AgentId::new(base + i); // p_1 .. p_K at base..base+K
    for i in 0..k {
        names.push(format!("p{}", i + 1));
        let next = if i + 1 < k { p(i + 1) } else { ids.b_star };
        specs.push(PosetSpec::strict(p(i), &[next]));
    }
    specs[ids.a_star.index()] = PosetSpec::strict(ids.a_star, &[if k > 0 { p(0) } else { ids.b_star }]);
    let h = HousingMarket::new(names, specs).expect("gadget market is valid");
    Ok((h, k))
}

/// Which strict-improvement gadget pair to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImprovementGadget {
    /// Pair for the best-house questions: `p = a*`, and the pair is a
    /// yes-instance of both PSIB and NSIB iff `d` has an acyclic bipartition.
    Psib,
    /// Pair for the worst-house questions: `p = s*`, and the pair is a
    /// no-instance of both PSIW and NSIW iff `d` has an acyclic bipartition.
    Psiw,
}

/// Builds `(H_before, H_after, p)` where `H_after` is a `p`-improvement of
/// `H_before` obtained by re-adding one arc of the acceptability graph.
pub fn gadget_strict_improvement(
    kind: ImprovementGadget,
    d: &Digraph,
) -> (HousingMarket, HousingMarket, AgentId) {
    match kind {
        ImprovementGadget::Psib => {
            let (h, _) = gadget_arc_in_core(d);
            let ids = GadgetIds::new(d.n());
            // Before-market: b* no longer accepts a*'s house.
            let mut specs: Vec<PosetSpec> = h
                .prefs()
                .iter()
                .map(|p| PosetSpec {
                    acceptable: p.acceptable().to_vec(),
                    covers: p.covers().to_vec(),
                })
                .collect();
            let bs: Vec<AgentId> = (0..=d.n()).map(|i| ids.a(i)).collect();
            specs[ids.b_star.index()] = PosetSpec::strict(ids.b_star, &bs);
            let before =
                HousingMarket::new(h.names().to_vec(), specs).expect("gadget market is valid");
            (before, h, ids.a_star)
        }
        ImprovementGadget::Psiw => {
            let (h, _) = gadget_forbidden_arc(d);
            let ids = GadgetIds::new(d.n());
            // Before-market: a* no longer accepts s*'s house.
            let mut specs: Vec<PosetSpec> = h
                .prefs()
                .iter()
                .map(|p| PosetSpec {
                    acceptable: p.acceptable().to_vec(),
                    covers: p.covers().to_vec(),
                })
                .collect();
            specs[ids.a_star.index()] = PosetSpec::strict(ids.a_star, &[ids.b_star]);
            let before =
                HousingMarket::new(h.names().to_vec(), specs).expect("gadget market is valid");
            (before, h, ids.s_star())
        }
    }
}
