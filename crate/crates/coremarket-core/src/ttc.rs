//! Top Trading Cycles for partially ordered preferences.
//!
//! Each remaining agent points to an undominated remaining choice; cycles of
//! such arcs are traded away and removed until no agent is left. Choices are
//! evaluated lazily per agent, directly over her Hasse diagram, so the only
//! global state is the set of remaining houses and the run stays near-linear
//! in the description length of the market.

use alloc::vec;
use alloc::vec::Vec;

use crate::market::{AgentId, Allocation, HousingMarket, PreferencePoset};

/// Reusable scratch for evaluating one agent's undominated choices.
///
/// A house is *undominated* when it remains in the market and no remaining
/// house is ranked strictly above it. `blocked[i]` memoizes "local vertex `i`
/// has a remaining house weakly above it"; it is evaluated by an iterative
/// depth-first walk up the Hasse diagram.
struct Chooser {
    blocked: Vec<bool>,
    /// 0 = unknown, 1 = expanded, 2 = computed.
    state: Vec<u8>,
    stack: Vec<usize>,
}

impl Chooser {
    fn new(h: &HousingMarket) -> Chooser {
        let max_k = h
            .prefs()
            .iter()
            .map(|p| p.acceptable().len())
            .max()
            .unwrap_or(0);
        Chooser {
            blocked: vec![false; max_k],
            state: vec![0u8; max_k],
            stack: Vec::new(),
        }
    }

    /// Lowest-ordinal undominated remaining choice of the owner of `p`.
    fn choose(&mut self, p: &PreferencePoset, remaining: &[bool]) -> AgentId {
        let k = p.acceptable().len();
        self.state[..k].fill(0);
        for root in 0..k {
            if self.state[root] != 0 {
                continue;
            }
            self.stack.push(root);
            while let Some(&v) = self.stack.last() {
                match self.state[v] {
                    0 => {
                        if remaining[p.acceptable()[v].index()] {
                            self.blocked[v] = true;
                            self.state[v] = 2;
                            self.stack.pop();
                        } else {
                            self.state[v] = 1;
                            for &u in p.up_local(v) {
                                if self.state[u] == 0 {
                                    self.stack.push(u);
                                }
                            }
                        }
                    }
                    1 => {
                        self.blocked[v] = p.up_local(v).iter().any(|&u| self.blocked[u]);
                        self.state[v] = 2;
                        self.stack.pop();
                    }
                    _ => {
                        self.stack.pop();
                    }
                }
            }
        }
        let mut best: Option<AgentId> = None;
        for i in 0..k {
            let b = p.acceptable()[i];
            if !remaining[b.index()] {
                continue;
            }
            if p.up_local(i).iter().any(|&u| self.blocked[u]) {
                continue;
            }
            if best.map_or(true, |cur| b < cur) {
                best = Some(b);
            }
        }
        best.expect("a remaining agent always has an undominated choice")
    }
}

/// Computes an allocation in the core of `h` by the TTC variant for partial
/// orders. Deterministic: path building starts from the lowest-ordinal
/// remaining agent and follows the lowest-ordinal undominated choice at the
/// time it is first evaluated; a cached choice is kept as long as its house
/// remains in the market.
pub fn ttc(h: &HousingMarket) -> Allocation {
    let n = h.n();
    let mut remaining = vec![true; n];
    let mut chooser = Chooser::new(h);
    // Cached choice per agent; kept while the chosen house remains.
    let mut choice: Vec<Option<AgentId>> = vec![None; n];
    let mut assignment: Vec<AgentId> = h.agents().collect();
    let mut path: Vec<AgentId> = Vec::new();
    let mut pos_in_path: Vec<usize> = vec![usize::MAX; n];
    let mut cursor = 0usize;
    loop {
        if path.is_empty() {
            while cursor < n && !remaining[cursor] {
                cursor += 1;
            }
            if cursor == n {
                break;
            }
            let a = AgentId::new(cursor);
            pos_in_path[cursor] = 0;
            path.push(a);
        }
        let a = *path.last().expect("path nonempty");
        let b = match choice[a.index()] {
            Some(b) if remaining[b.index()] => b,
            _ => {
                let b = chooser.choose(h.pref(a), &remaining);
                choice[a.index()] = Some(b);
                b
            }
        };
        if pos_in_path[b.index()] != usize::MAX {
            // Arc (a, b) closes a cycle along the path suffix.
            let start = pos_in_path[b.index()];
            let cycle = path.split_off(start);
            for (k, &v) in cycle.iter().enumerate() {
                let next = if k + 1 < cycle.len() { cycle[k + 1] } else { b };
                assignment[v.index()] = next;
                pos_in_path[v.index()] = usize::MAX;
            }
            for &v in &cycle {
                remaining[v.index()] = false;
            }
        } else {
            pos_in_path[b.index()] = path.len();
            path.push(b);
        }
    }
    Allocation::new(h, assignment).expect("TTC yields a valid allocation")
}

/// Trivial `|N|`-approximation of the maximum number of trading agents over
/// core allocations: any core allocation will do, so return the TTC output.
/// Its size is at least 1 whenever the acceptability graph has a non-loop
/// cycle, and the optimum is 0 otherwise.
pub fn maxcore_trivial_approx(h: &HousingMarket) -> Allocation {
    ttc(h)
}
