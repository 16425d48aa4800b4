//! Housing markets with partially ordered preferences: agents, preference
//! posets given by Hasse covers, allocations, envy graphs, and the core and
//! strict-core membership checks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitMatrix;

/// Identifier of an agent (and of the house she initially owns).
///
/// Agents are numbered `0..n` within a market; the ordinal order is the one
/// used for all deterministic tie-breaking. Display names live on the market.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AgentId(usize);

impl AgentId {
    pub const fn new(index: usize) -> Self {
        AgentId(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Unvalidated preference description for one agent.
///
/// `covers` lists ordered pairs `(x, y)` meaning the owner ranks `y` strictly
/// above `x` as a covering relation of her partial order. Redundant
/// (transitively implied) pairs are accepted and canonicalized away during
/// validation. The owner's own house is always acceptable and need not be
/// listed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PosetSpec {
    pub acceptable: Vec<AgentId>,
    pub covers: Vec<(AgentId, AgentId)>,
}

impl PosetSpec {
    /// Strict order given best-first; the owner's house sits at the bottom.
    pub fn strict(owner: AgentId, best_first: &[AgentId]) -> Self {
        let groups: Vec<Vec<AgentId>> = best_first.iter().map(|&a| vec![a]).collect();
        Self::weak(owner, &groups)
    }

    /// Weak order given as tie classes, best class first; the owner's house
    /// forms the bottom class unless it is listed explicitly.
    pub fn weak(owner: AgentId, classes_best_first: &[Vec<AgentId>]) -> Self {
        let mut classes: Vec<Vec<AgentId>> = classes_best_first
            .iter()
            .filter(|c| !c.is_empty())
            .cloned()
            .collect();
        if !classes.iter().any(|c| c.contains(&owner)) {
            classes.push(vec![owner]);
        }
        let mut acceptable = Vec::new();
        let mut covers = Vec::new();
        for (i, class) in classes.iter().enumerate() {
            acceptable.extend_from_slice(class);
            if i + 1 < classes.len() {
                for &lo in &classes[i + 1] {
                    for &hi in class {
                        covers.push((lo, hi));
                    }
                }
            }
        }
        PosetSpec { acceptable, covers }
    }
}

/// Validation failure for a market description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarketError {
    /// The covers relation of `owner` is not acyclic.
    CyclicPreference { owner: AgentId },
    /// A preference of `owner` references an agent outside the market.
    UnknownAgent { owner: AgentId, house: AgentId },
    /// A cover of `owner` references a house outside her acceptable set, or a
    /// house is ordered below the owner's own house.
    SelfDispreferred { owner: AgentId, house: AgentId },
    /// Number of preference posets differs from the number of agents.
    PosetCountMismatch { agents: usize, posets: usize },
}

impl fmt::Display for MarketError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarketError::CyclicPreference { owner } => {
                write!(f, "preference covers of agent {owner} contain a cycle")
            }
            MarketError::UnknownAgent { owner, house } => {
                write!(f, "agent {owner} references unknown agent {house}")
            }
            MarketError::SelfDispreferred { owner, house } => write!(
                f,
                "agent {owner} orders house {house} below her own or outside her acceptable set"
            ),
            MarketError::PosetCountMismatch { agents, posets } => {
                write!(f, "{agents} agents but {posets} preference posets")
            }
        }
    }
}

/// Validated partial-order preferences of a single agent.
///
/// Stores the acceptable set, the canonical Hasse covers (the transitive
/// reduction), and a precomputed transitive closure so that `prefers` is a
/// constant-time query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferencePoset {
    owner: AgentId,
    /// Sorted ascending; always contains the owner.
    acceptable: Vec<AgentId>,
    /// Canonical covers `(x, y)` with `x` directly below `y`, sorted.
    covers: Vec<(AgentId, AgentId)>,
    /// `above.get(i, j)` iff `acceptable[i] < acceptable[j]` for the owner.
    above: BitMatrix,
    /// Hasse adjacency on local indices: `up[i]` lists `j` with cover `(i, j)`.
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
}

impl PreferencePoset {
    fn validate(owner: AgentId, spec: &PosetSpec, n: usize) -> Result<Self, MarketError> {
        let mut acc: Vec<AgentId> = spec.acceptable.clone();
        acc.push(owner);
        acc.sort_unstable();
        acc.dedup();
        for &b in &acc {
            if b.index() >= n {
                return Err(MarketError::UnknownAgent { owner, house: b });
            }
        }
        let m = acc.len();
        let local = |b: AgentId| acc.binary_search(&b).ok();

        // Raw cover adjacency, possibly redundant.
        let mut raw_up = vec![Vec::new(); m];
        let mut indeg = vec![0usize; m];
        for &(x, y) in &spec.covers {
            if x.index() >= n {
                return Err(MarketError::UnknownAgent { owner, house: x });
            }
            if y.index() >= n {
                return Err(MarketError::UnknownAgent { owner, house: y });
            }
            let (lx, ly) = match (local(x), local(y)) {
                (Some(lx), Some(ly)) => (lx, ly),
                (None, _) => return Err(MarketError::SelfDispreferred { owner, house: x }),
                (_, None) => return Err(MarketError::SelfDispreferred { owner, house: y }),
            };
            if lx == ly {
                return Err(MarketError::CyclicPreference { owner });
            }
            raw_up[lx].push(ly);
            indeg[ly] += 1;
        }

        // Kahn topological order; a leftover vertex means a cycle.
        let mut topo = Vec::with_capacity(m);
        let mut queue: Vec<usize> = (0..m).filter(|&i| indeg[i] == 0).collect();
        while let Some(i) = queue.pop() {
            topo.push(i);
            for &j in &raw_up[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push(j);
                }
            }
        }
        if topo.len() != m {
            return Err(MarketError::CyclicPreference { owner });
        }

        // Transitive closure, processing vertices top-down.
        let mut above = BitMatrix::new(m);
        for &i in topo.iter().rev() {
            for &j in &raw_up[i] {
                above.set(i, j);
                above.or_row(i, j);
            }
        }

        let owner_local = local(owner).expect("owner is acceptable");
        for i in 0..m {
            if above.get(i, owner_local) {
                return Err(MarketError::SelfDispreferred {
                    owner,
                    house: acc[i],
                });
            }
        }

        // Transitive reduction: (i, j) is a cover iff i < j with no witness
        // i < k < j.
        let mut covers = Vec::new();
        let mut up = vec![Vec::new(); m];
        let mut down = vec![Vec::new(); m];
        for i in 0..m {
            for j in 0..m {
                if !above.get(i, j) {
                    continue;
                }
                let implied = (0..m).any(|k| above.get(i, k) && above.get(k, j));
                if !implied {
                    covers.push((acc[i], acc[j]));
                    up[i].push(j);
                    down[j].push(i);
                }
            }
        }
        covers.sort_unstable();
        for list in up.iter_mut().chain(down.iter_mut()) {
            list.sort_unstable();
        }

        Ok(PreferencePoset {
            owner,
            acceptable: acc,
            covers,
            above,
            up,
            down,
        })
    }

    pub fn owner(&self) -> AgentId {
        self.owner
    }

    /// Acceptable houses in ascending ordinal order; contains the owner.
    pub fn acceptable(&self) -> &[AgentId] {
        &self.acceptable
    }

    pub fn is_acceptable(&self, b: AgentId) -> bool {
        self.acceptable.binary_search(&b).is_ok()
    }

    pub fn local_index(&self, b: AgentId) -> Option<usize> {
        self.acceptable.binary_search(&b).ok()
    }

    /// Canonical Hasse covers `(x, y)` with `x` ranked directly below `y`.
    pub fn covers(&self) -> &[(AgentId, AgentId)] {
        &self.covers
    }

    /// Does the owner strictly prefer the house of `y` to the house of `x`?
    /// False whenever either house is unacceptable.
    pub fn prefers(&self, x: AgentId, y: AgentId) -> bool {
        match (self.local_index(x), self.local_index(y)) {
            (Some(lx), Some(ly)) => self.above.get(lx, ly),
            _ => false,
        }
    }

    /// `x` weakly below `y`: the owner does not prefer `x` to `y`.
    pub fn weakly_prefers(&self, x: AgentId, y: AgentId) -> bool {
        !self.prefers(y, x)
    }

    pub fn incomparable(&self, x: AgentId, y: AgentId) -> bool {
        x != y && !self.prefers(x, y) && !self.prefers(y, x)
    }

    /// Hasse out-neighbors (houses directly above) of local vertex `i`.
    pub fn up_local(&self, i: usize) -> &[usize] {
        &self.up[i]
    }

    /// Hasse in-neighbors (houses directly below) of local vertex `i`.
    pub fn down_local(&self, i: usize) -> &[usize] {
        &self.down[i]
    }

    /// Contribution of this agent to the description length `|H|`.
    pub fn description_len(&self) -> usize {
        self.acceptable.len() + self.covers.len()
    }

    /// Same order relation (acceptable set and closure) as `other`.
    pub fn relation_eq(&self, other: &PreferencePoset) -> bool {
        self.acceptable == other.acceptable && self.above == other.above
    }
}

/// A housing market: one preference poset per agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HousingMarket {
    names: Vec<String>,
    prefs: Vec<PreferencePoset>,
}

impl HousingMarket {
    /// Validates a raw market description; `specs[i]` describes agent `i`.
    pub fn new(names: Vec<String>, specs: Vec<PosetSpec>) -> Result<Self, MarketError> {
        let n = names.len();
        if specs.len() != n {
            return Err(MarketError::PosetCountMismatch {
                agents: n,
                posets: specs.len(),
            });
        }
        let prefs = specs
            .iter()
            .enumerate()
            .map(|(i, spec)| PreferencePoset::validate(AgentId::new(i), spec, n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HousingMarket { names, prefs })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.n()).map(AgentId::new)
    }

    pub fn name(&self, a: AgentId) -> &str {
        &self.names[a.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn pref(&self, a: AgentId) -> &PreferencePoset {
        &self.prefs[a.index()]
    }

    pub fn prefs(&self) -> &[PreferencePoset] {
        &self.prefs
    }

    /// Description length `|H| = sum of |H_a|`.
    pub fn description_len(&self) -> usize {
        self.prefs.iter().map(|p| p.description_len()).sum()
    }

    /// The acceptability graph `G^H`: arc `(a, b)` iff `b` is acceptable to
    /// `a`; contains every loop `(a, a)`.
    pub fn acceptability_graph(&self) -> AcceptabilityGraph {
        let out: Vec<Vec<AgentId>> = self
            .prefs
            .iter()
            .map(|p| p.acceptable().to_vec())
            .collect();
        AcceptabilityGraph { out }
    }

    /// Induced submarket on `keep` (sorted, deduplicated internally), with
    /// agents renumbered in ascending order of their old ordinals. Returns the
    /// submarket and the old id of each new agent.
    pub fn submarket(&self, keep: &[AgentId]) -> (HousingMarket, Vec<AgentId>) {
        let mut old: Vec<AgentId> = keep.to_vec();
        old.sort_unstable();
        old.dedup();
        let mut new_of = vec![usize::MAX; self.n()];
        for (i, &a) in old.iter().enumerate() {
            new_of[a.index()] = i;
        }
        let names = old.iter().map(|&a| self.names[a.index()].clone()).collect();
        let specs = old
            .iter()
            .map(|&a| {
                let p = self.pref(a);
                let acceptable = p
                    .acceptable()
                    .iter()
                    .filter(|b| new_of[b.index()] != usize::MAX)
                    .map(|b| AgentId::new(new_of[b.index()]))
                    .collect();
                // Re-deriving covers from the closure keeps the restricted
                // relation exact even when a cover's midpoint is dropped.
                let mut covers = Vec::new();
                for &x in p.acceptable() {
                    if new_of[x.index()] == usize::MAX {
                        continue;
                    }
                    for &y in p.acceptable() {
                        if new_of[y.index()] != usize::MAX && p.prefers(x, y) {
                            covers.push((AgentId::new(new_of[x.index()]), AgentId::new(new_of[y.index()])));
                        }
                    }
                }
                PosetSpec { acceptable, covers }
            })
            .collect();
        let market = HousingMarket::new(names, specs)
            .expect("restriction of a valid market remains valid");
        (market, old)
    }
}

/// Acceptability graph of a market; out-lists are sorted by ordinal.
#[derive(Clone, Debug)]
pub struct AcceptabilityGraph {
    pub out: Vec<Vec<AgentId>>,
}

impl AcceptabilityGraph {
    pub fn arc_count(&self) -> usize {
        self.out.iter().map(|l| l.len()).sum()
    }

    /// `|G^H| = |N| + |E|`.
    pub fn size(&self) -> usize {
        self.out.len() + self.arc_count()
    }

    pub fn has_arc(&self, a: AgentId, b: AgentId) -> bool {
        self.out[a.index()].binary_search(&b).is_ok()
    }
}

/// Invalid allocation description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AllocationError {
    WrongLength { agents: usize, entries: usize },
    NotBijective { house: AgentId },
    NotAcceptable { agent: AgentId, house: AgentId },
}

impl fmt::Display for AllocationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationError::WrongLength { agents, entries } => {
                write!(f, "allocation has {entries} entries for {agents} agents")
            }
            AllocationError::NotBijective { house } => {
                write!(f, "house {house} is assigned more than once")
            }
            AllocationError::NotAcceptable { agent, house } => {
                write!(f, "house {house} is not acceptable to agent {agent}")
            }
        }
    }
}

/// An allocation `X`: a bijection on the agents that respects acceptability,
/// i.e. a vertex-disjoint cycle cover of the acceptability graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    assignment: Vec<AgentId>,
}

impl Allocation {
    pub fn new(h: &HousingMarket, assignment: Vec<AgentId>) -> Result<Self, AllocationError> {
        if assignment.len() != h.n() {
            return Err(AllocationError::WrongLength {
                agents: h.n(),
                entries: assignment.len(),
            });
        }
        let mut seen = vec![false; h.n()];
        for (i, &b) in assignment.iter().enumerate() {
            let a = AgentId::new(i);
            if b.index() >= h.n() || !h.pref(a).is_acceptable(b) {
                return Err(AllocationError::NotAcceptable { agent: a, house: b });
            }
            if seen[b.index()] {
                return Err(AllocationError::NotBijective { house: b });
            }
            seen[b.index()] = true;
        }
        Ok(Allocation { assignment })
    }

    pub fn identity(h: &HousingMarket) -> Self {
        Allocation {
            assignment: h.agents().collect(),
        }
    }

    /// The house agent `a` obtains, `X(a)`.
    pub fn get(&self, a: AgentId) -> AgentId {
        self.assignment[a.index()]
    }

    pub fn as_slice(&self) -> &[AgentId] {
        &self.assignment
    }

    pub fn is_trading(&self, a: AgentId) -> bool {
        self.get(a) != a
    }

    /// Number of trading agents.
    pub fn size(&self) -> usize {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(i, &b)| b.index() != i)
            .count()
    }

    /// Decomposition into cycles, each starting at its lowest agent; loops
    /// (non-trading agents) are omitted.
    pub fn cycles(&self) -> Vec<Vec<AgentId>> {
        let n = self.assignment.len();
        let mut done = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if done[start] || self.assignment[start].index() == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !done[cur] {
                done[cur] = true;
                cycle.push(AgentId::new(cur));
                cur = self.assignment[cur].index();
            }
            cycles.push(cycle);
        }
        cycles
    }
}

/// Envy graph of an allocation: arcs `(a, b)` with `X(a) <_a b`.
#[derive(Clone, Debug)]
pub struct EnvyGraph {
    pub out: Vec<Vec<AgentId>>,
}

/// All `X`-augmenting arcs of the market.
pub fn envy_graph(h: &HousingMarket, x: &Allocation) -> EnvyGraph {
    let out = h
        .agents()
        .map(|a| {
            let p = h.pref(a);
            let got = x.get(a);
            p.acceptable()
                .iter()
                .copied()
                .filter(|&b| p.prefers(got, b))
                .collect()
        })
        .collect();
    EnvyGraph { out }
}

/// Outcome of a core membership check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreVerdict {
    InCore,
    /// A blocking cycle, listed in traversal order.
    Blocked(Vec<AgentId>),
}

impl CoreVerdict {
    pub fn is_in_core(&self) -> bool {
        matches!(self, CoreVerdict::InCore)
    }
}

/// Is `X` in the core of `H`? Equivalent to the envy graph being acyclic; a
/// directed cycle found by an ordinal-ordered DFS is returned as witness.
pub fn check_core(h: &HousingMarket, x: &Allocation) -> CoreVerdict {
    match find_cycle(&envy_graph(h, x).out) {
        None => CoreVerdict::InCore,
        Some(cycle) => CoreVerdict::Blocked(cycle),
    }
}

/// Outcome of a strict-core membership check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrictCoreVerdict {
    InStrictCore,
    /// A weakly blocking cycle: every agent on it weakly prefers the cycle,
    /// at least one strictly.
    WeaklyBlocked(Vec<AgentId>),
}

impl StrictCoreVerdict {
    pub fn is_in_strict_core(&self) -> bool {
        matches!(self, StrictCoreVerdict::InStrictCore)
    }
}

/// Is `X` in the strict core of `H`? Each strictly augmenting arc `(a, b)` in
/// turn seeds a search for a path of weakly augmenting arcs from `b` back to
/// `a`; such a path closes a weakly blocking cycle.
pub fn check_strict_core(h: &HousingMarket, x: &Allocation) -> StrictCoreVerdict {
    let n = h.n();
    for a in h.agents() {
        let p = h.pref(a);
        let got = x.get(a);
        for &b in p.acceptable() {
            if !p.prefers(got, b) {
                continue;
            }
            // BFS from b to a along weakly augmenting arcs.
            let mut parent: Vec<Option<AgentId>> = vec![None; n];
            let mut queue = vec![b];
            parent[b.index()] = Some(b);
            let mut head = 0;
            'bfs: while head < queue.len() {
                let c = queue[head];
                head += 1;
                let pc = h.pref(c);
                let got_c = x.get(c);
                for &d in pc.acceptable() {
                    if pc.prefers(d, got_c) || parent[d.index()].is_some() {
                        continue;
                    }
                    parent[d.index()] = Some(c);
                    if d == a {
                        break 'bfs;
                    }
                    queue.push(d);
                }
            }
            if parent[a.index()].is_some() {
                // Path a <- ... <- b from the BFS tree; the strict arc (a, b)
                // closes the weakly blocking cycle.
                let mut path = vec![a];
                let mut cur = a;
                while cur != b {
                    cur = parent[cur.index()].expect("walked path exists");
                    path.push(cur);
                }
                path.reverse(); // b, ..., a
                path.pop();
                let mut cycle = vec![a];
                cycle.extend(path);
                return StrictCoreVerdict::WeaklyBlocked(cycle);
            }
        }
    }
    StrictCoreVerdict::InStrictCore
}

/// First directed cycle closed by a DFS that visits roots and out-neighbors in
/// ordinal order. Loops count as cycles.
pub(crate) fn find_cycle(out: &[Vec<AgentId>]) -> Option<Vec<AgentId>> {
    let n = out.len();
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; n];
    let mut stack: Vec<(usize, usize)> = Vec::new(); // (vertex, next out index)
    for root in 0..n {
        if color[root] != Color::White {
            continue;
        }
        color[root] = Color::Gray;
        stack.push((root, 0));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < out[v].len() {
                let w = out[v][*next].index();
                *next += 1;
                match color[w] {
                    Color::White => {
                        color[w] = Color::Gray;
                        stack.push((w, 0));
                    }
                    Color::Gray => {
                        let start = stack.iter().position(|&(u, _)| u == w).expect("gray on stack");
                        return Some(stack[start..].iter().map(|&(u, _)| AgentId::new(u)).collect());
                    }
                    Color::Black => {}
                }
            } else {
                color[v] = Color::Black;
                stack.pop();
            }
        }
    }
    None
}
