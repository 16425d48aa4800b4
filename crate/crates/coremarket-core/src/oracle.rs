//! Exact exponential-time deciders for small markets.
//!
//! Enumerates every allocation (vertex-disjoint cycle cover of the
//! acceptability graph) by branching on the lowest unassigned agent, filters
//! by the core check, and answers the arc-restriction, max-core and
//! strict-improvement questions exactly. Serves as the ground-truth oracle
//! for the polynomial algorithms in this crate.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::improve::is_p_improvement;
use crate::market::{check_core, AgentId, Allocation, HousingMarket};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleError {
    /// Market exceeds the enumeration cap.
    TooLarge { agents: usize, cap: usize },
    /// Arc query on a non-arc of the acceptability graph.
    NoSuchArc { from: AgentId, to: AgentId },
    /// Strict-improvement query on markets not related by a p-improvement.
    NotImprovement,
    /// Internal consistency failure: the core of a housing market is never
    /// empty, so an empty enumeration means a bug.
    EmptyCore,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { agents, cap } => {
                write!(f, "market with {agents} agents exceeds the oracle cap {cap}")
            }
            OracleError::NoSuchArc { from, to } => {
                write!(f, "({from}, {to}) is not an arc of the acceptability graph")
            }
            OracleError::NotImprovement => write!(f, "markets are not related by a p-improvement"),
            OracleError::EmptyCore => write!(f, "enumeration produced an empty core"),
        }
    }
}

/// Enumerated core of a market with per-agent best/worst extracts.
#[derive(Clone, Debug)]
pub struct CoreSummary {
    /// All core allocations in lexicographic assignment order.
    pub core: Vec<Allocation>,
    /// Total number of allocations (cycle covers) of the market.
    pub allocation_count: usize,
    /// Per agent: maximal houses obtainable in the core (an antichain).
    pub best: Vec<Vec<AgentId>>,
    /// Per agent: minimal houses obtainable in the core (an antichain).
    pub worst: Vec<Vec<AgentId>>,
    /// Maximum number of trading agents over core allocations.
    pub opt: usize,
}

impl CoreSummary {
    pub fn contains(&self, x: &Allocation) -> bool {
        self.core.iter().any(|y| y == x)
    }
}

/// Default agent-count cap: 12 always; up to 24 when the branching product of
/// out-degrees stays small (sparse gadget graphs).
const DENSE_CAP: usize = 12;
const SPARSE_CAP: usize = 24;
const SPARSE_LOG2_BUDGET: u32 = 48;

fn within_default_cap(h: &HousingMarket) -> bool {
    let n = h.n();
    if n <= DENSE_CAP {
        return true;
    }
    if n > SPARSE_CAP {
        return false;
    }
    let log2_branching: u32 = h
        .prefs()
        .iter()
        .map(|p| usize::BITS - (p.acceptable().len()).leading_zeros())
        .sum();
    log2_branching <= SPARSE_LOG2_BUDGET
}

/// Enumerates every allocation extending `forced` (a set of pre-assigned
/// arcs), invoking `visit` in lexicographic assignment order. No cap check.
pub fn for_each_allocation<F: FnMut(&Allocation)>(
    h: &HousingMarket,
    forced: &[(AgentId, AgentId)],
    mut visit: F,
) {
    let n = h.n();
    let mut assignment: Vec<Option<AgentId>> = vec![None; n];
    let mut used = vec![false; n];
    // remaining_in[b]: unassigned agents that still accept b; a zero for an
    // unused house prunes the branch.
    let mut remaining_in = vec![0usize; n];
    for p in h.prefs() {
        for &b in p.acceptable() {
            remaining_in[b.index()] += 1;
        }
    }
    let mut ok = true;
    for &(a, b) in forced {
        if !h.pref(a).is_acceptable(b) || assignment[a.index()].is_some() || used[b.index()] {
            ok = false;
            break;
        }
        assignment[a.index()] = Some(b);
        used[b.index()] = true;
        for &c in h.pref(a).acceptable() {
            remaining_in[c.index()] -= 1;
        }
    }
    if !ok {
        return;
    }

    fn recurse<F: FnMut(&Allocation)>(
        h: &HousingMarket,
        assignment: &mut Vec<Option<AgentId>>,
        used: &mut Vec<bool>,
        remaining_in: &mut Vec<usize>,
        visit: &mut F,
    ) {
        let a = match assignment.iter().position(|s| s.is_none()) {
            None => {
                let x = Allocation::new(
                    h,
                    assignment.iter().map(|s| s.expect("complete")).collect(),
                )
                .expect("enumeration respects acceptability and bijectivity");
                visit(&x);
                return;
            }
            Some(i) => AgentId::new(i),
        };
        let acceptable = h.pref(a).acceptable();
        // Removing a as a potential giver; restored on exit.
        let mut dead_end = false;
        for &c in acceptable {
            remaining_in[c.index()] -= 1;
            if !used[c.index()] && remaining_in[c.index()] == 0 {
                dead_end = true;
            }
        }
        for &b in acceptable {
            if used[b.index()] {
                continue;
            }
            // b will be received by a, so its zero in-count is fine; any
            // other starved house kills the branch.
            if dead_end && acceptable.iter().any(|&c| !used[c.index()] && remaining_in[c.index()] == 0 && c != b)
            {
                continue;
            }
            if dead_end && remaining_in[b.index()] != 0 {
                continue;
            }
            assignment[a.index()] = Some(b);
            used[b.index()] = true;
            recurse(h, assignment, used, remaining_in, visit);
            used[b.index()] = false;
            assignment[a.index()] = None;
        }
        for &c in acceptable {
            remaining_in[c.index()] += 1;
        }
    }
    recurse(h, &mut assignment, &mut used, &mut remaining_in, &mut visit);
}

/// All core allocations extending `forced`, in lexicographic order.
pub fn core_allocations_forced(
    h: &HousingMarket,
    forced: &[(AgentId, AgentId)],
) -> (Vec<Allocation>, usize) {
    let mut core = Vec::new();
    let mut count = 0usize;
    for_each_allocation(h, forced, |x| {
        count += 1;
        if check_core(h, x).is_in_core() {
            core.push(x.clone());
        }
    });
    (core, count)
}

/// Enumerates all allocations of `h`, filters by the core check, and extracts
/// per-agent best/worst houses and the maximum trading size.
///
/// `cap` bounds the agent count; `None` applies the default cap (12 agents,
/// or 24 when the branching estimate is small enough).
pub fn enumerate_core(h: &HousingMarket, cap: Option<usize>) -> Result<CoreSummary, OracleError> {
    match cap {
        Some(c) if h.n() > c => return Err(OracleError::TooLarge { agents: h.n(), cap: c }),
        None if !within_default_cap(h) => {
            return Err(OracleError::TooLarge {
                agents: h.n(),
                cap: SPARSE_CAP,
            })
        }
        _ => {}
    }
    let (core, allocation_count) = core_allocations_forced(h, &[]);
    if core.is_empty() {
        return Err(OracleError::EmptyCore);
    }
    let n = h.n();
    let mut best = Vec::with_capacity(n);
    let mut worst = Vec::with_capacity(n);
    for a in h.agents() {
        let p = h.pref(a);
        let mut obtained: Vec<AgentId> = core.iter().map(|x| x.get(a)).collect();
        obtained.sort_unstable();
        obtained.dedup();
        best.push(
            obtained
                .iter()
                .copied()
                .filter(|&x| !obtained.iter().any(|&y| p.prefers(x, y)))
                .collect(),
        );
        worst.push(
            obtained
                .iter()
                .copied()
                .filter(|&x| !obtained.iter().any(|&y| p.prefers(y, x)))
                .collect(),
        );
    }
    let opt = core.iter().map(|x| x.size()).max().unwrap_or(0);
    Ok(CoreSummary {
        core,
        allocation_count,
        best,
        worst,
        opt,
    })
}

/// Is there a core allocation containing the arc `(a, b)`?
pub fn arc_in_core(
    h: &HousingMarket,
    a: AgentId,
    b: AgentId,
    cap: Option<usize>,
) -> Result<bool, OracleError> {
    if !h.pref(a).is_acceptable(b) {
        return Err(OracleError::NoSuchArc { from: a, to: b });
    }
    let summary = enumerate_core(h, cap)?;
    Ok(summary.core.iter().any(|x| x.get(a) == b))
}

/// Is there a core allocation avoiding the arc `(a, b)`?
pub fn forbidden_arc_in_core(
    h: &HousingMarket,
    a: AgentId,
    b: AgentId,
    cap: Option<usize>,
) -> Result<bool, OracleError> {
    if !h.pref(a).is_acceptable(b) {
        return Err(OracleError::NoSuchArc { from: a, to: b });
    }
    let summary = enumerate_core(h, cap)?;
    Ok(summary.core.iter().any(|x| x.get(a) != b))
}

/// Is there a core allocation in which `a` trades?
pub fn agent_trading_in_core(
    h: &HousingMarket,
    a: AgentId,
    cap: Option<usize>,
) -> Result<bool, OracleError> {
    let summary = enumerate_core(h, cap)?;
    Ok(summary.core.iter().any(|x| x.is_trading(a)))
}

/// Maximum number of trading agents over core allocations, with the
/// lexicographically first maximizing witness.
pub fn max_core(
    h: &HousingMarket,
    cap: Option<usize>,
) -> Result<(usize, Allocation), OracleError> {
    let summary = enumerate_core(h, cap)?;
    let witness = summary
        .core
        .iter()
        .find(|x| x.size() == summary.opt)
        .expect("core nonempty")
        .clone();
    Ok((summary.opt, witness))
}

/// The four strict-improvement questions about the core.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrictImprovementKind {
    /// Possible strict improvement for the best house.
    Psib,
    /// Necessary strict improvement for the best house.
    Nsib,
    /// Possible strict improvement for the worst house.
    Psiw,
    /// Necessary strict improvement for the worst house.
    Nsiw,
}

/// Decides a strict-improvement question exactly by enumerating both cores.
/// `h2` must be a `p`-improvement of `h`; houses are compared by `p`'s
/// preferences in `h2`.
pub fn strict_improvement_decide(
    kind: StrictImprovementKind,
    h: &HousingMarket,
    h2: &HousingMarket,
    p: AgentId,
    cap: Option<usize>,
) -> Result<bool, OracleError> {
    if !is_p_improvement(h, h2, p).unwrap_or(false) {
        return Err(OracleError::NotImprovement);
    }
    let before = enumerate_core(h, cap)?;
    let after = enumerate_core(h2, cap)?;
    let pref = h2.pref(p);
    let (old, new) = match kind {
        StrictImprovementKind::Psib | StrictImprovementKind::Nsib => {
            (&before.best[p.index()], &after.best[p.index()])
        }
        StrictImprovementKind::Psiw | StrictImprovementKind::Nsiw => {
            (&before.worst[p.index()], &after.worst[p.index()])
        }
    };
    let improved = |a: &AgentId, b: &AgentId| pref.prefers(*a, *b);
    Ok(match kind {
        StrictImprovementKind::Psib | StrictImprovementKind::Psiw => old
            .iter()
            .any(|a| new.iter().any(|b| improved(a, b))),
        StrictImprovementKind::Nsib | StrictImprovementKind::Nsiw => old
            .iter()
            .all(|a| new.iter().all(|b| improved(a, b))),
    })
}
