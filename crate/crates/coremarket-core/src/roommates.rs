//! Stable Roommates layer: instances with mutual acceptability, stability and
//! strong-stability checks, Irving's two-phase solver, Tan–Hsueh
//! proposal-rejection sequences, and the matching-repair algorithm for
//! improvements under strict preferences.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::market::AgentId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoommatesError {
    UnknownAgent { owner: AgentId, partner: AgentId },
    SelfPreference { owner: AgentId },
    DuplicateEntry { owner: AgentId, partner: AgentId },
    /// `a` lists `b` but not vice versa.
    NotMutual { a: AgentId, b: AgentId },
    /// The operation requires strict preferences.
    TiesPresent { owner: AgentId },
    /// The given matching pairs an unacceptable or repeated agent.
    InvalidMatching { agent: AgentId },
    NameCountMismatch { agents: usize, names: usize },
    /// The two instances are not related by a `(p, q)`-improvement.
    NotImprovement,
    /// The starting matching is not stable.
    NotStable,
}

impl fmt::Display for RoommatesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoommatesError::UnknownAgent { owner, partner } => {
                write!(f, "agent {owner} lists unknown agent {partner}")
            }
            RoommatesError::SelfPreference { owner } => {
                write!(f, "agent {owner} lists herself")
            }
            RoommatesError::DuplicateEntry { owner, partner } => {
                write!(f, "agent {owner} lists {partner} twice")
            }
            RoommatesError::NotMutual { a, b } => {
                write!(f, "acceptability is not mutual between {a} and {b}")
            }
            RoommatesError::TiesPresent { owner } => {
                write!(f, "agent {owner} has ties; strict preferences required")
            }
            RoommatesError::InvalidMatching { agent } => {
                write!(f, "matching is invalid at agent {agent}")
            }
            RoommatesError::NameCountMismatch { agents, names } => {
                write!(f, "{agents} preference lists but {names} names")
            }
            RoommatesError::NotImprovement => {
                write!(f, "instances are not related by a (p, q)-improvement")
            }
            RoommatesError::NotStable => write!(f, "matching is not stable"),
        }
    }
}

/// A Stable Roommates instance: per-agent preferences over mutually
/// acceptable partners, given as tie classes (best class first). Strict
/// instances have singleton classes throughout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoommatesInstance {
    names: Vec<String>,
    classes: Vec<Vec<Vec<AgentId>>>,
    /// `rank[a][b]`: class index of `b` in `a`'s preferences, if acceptable.
    rank: Vec<Vec<Option<usize>>>,
}

impl RoommatesInstance {
    pub fn new(
        names: Vec<String>,
        classes: Vec<Vec<Vec<AgentId>>>,
    ) -> Result<RoommatesInstance, RoommatesError> {
        let n = classes.len();
        if names.len() != n {
            return Err(RoommatesError::NameCountMismatch {
                agents: n,
                names: names.len(),
            });
        }
        let mut rank = vec![vec![None; n]; n];
        for (i, cls) in classes.iter().enumerate() {
            let owner = AgentId::new(i);
            for (r, class) in cls.iter().enumerate() {
                for &b in class {
                    if b.index() >= n {
                        return Err(RoommatesError::UnknownAgent { owner, partner: b });
                    }
                    if b == owner {
                        return Err(RoommatesError::SelfPreference { owner });
                    }
                    if rank[i][b.index()].is_some() {
                        return Err(RoommatesError::DuplicateEntry { owner, partner: b });
                    }
                    rank[i][b.index()] = Some(r);
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if rank[a][b].is_some() != rank[b][a].is_some() {
                    return Err(RoommatesError::NotMutual {
                        a: AgentId::new(a),
                        b: AgentId::new(b),
                    });
                }
            }
        }
        let classes = classes
            .into_iter()
            .filter_map(|cls| {
                let cls: Vec<Vec<AgentId>> = cls.into_iter().filter(|c| !c.is_empty()).collect();
                Some(cls)
            })
            .collect();
        Ok(RoommatesInstance { names, classes, rank })
    }

    /// Strict instance from plain best-first lists.
    pub fn strict(
        names: Vec<String>,
        lists: Vec<Vec<AgentId>>,
    ) -> Result<RoommatesInstance, RoommatesError> {
        let classes = lists
            .into_iter()
            .map(|l| l.into_iter().map(|b| vec![b]).collect())
            .collect();
        RoommatesInstance::new(names, classes)
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

    /// Tie classes of `a`, best first.
    pub fn classes(&self, a: AgentId) -> &[Vec<AgentId>] {
        &self.classes[a.index()]
    }

    /// Acceptable partners of `a` in preference order (ties flattened in
    /// listed order).
    pub fn list(&self, a: AgentId) -> Vec<AgentId> {
        self.classes[a.index()].iter().flatten().copied().collect()
    }

    pub fn is_acceptable(&self, a: AgentId, b: AgentId) -> bool {
        self.rank[a.index()][b.index()].is_some()
    }

    pub fn rank(&self, a: AgentId, b: AgentId) -> Option<usize> {
        self.rank[a.index()][b.index()]
    }

    /// Does `a` strictly prefer `x` to `y`? Unacceptable partners rank below
    /// every acceptable one.
    pub fn prefers(&self, a: AgentId, x: AgentId, y: AgentId) -> bool {
        match (self.rank(a, x), self.rank(a, y)) {
            (Some(rx), Some(ry)) => rx < ry,
            (Some(_), None) => true,
            _ => false,
        }
    }

    pub fn weakly_prefers(&self, a: AgentId, x: AgentId, y: AgentId) -> bool {
        !self.prefers(a, y, x)
    }

    /// Would `a` rather have `b` than her current situation (strictly)?
    pub fn covets(&self, a: AgentId, b: AgentId, current: Option<AgentId>) -> bool {
        match current {
            None => self.is_acceptable(a, b),
            Some(c) => self.prefers(a, b, c),
        }
    }

    pub fn has_ties(&self) -> bool {
        self.classes.iter().any(|cls| cls.iter().any(|c| c.len() > 1))
    }

    pub fn require_strict(&self) -> Result<(), RoommatesError> {
        for (i, cls) in self.classes.iter().enumerate() {
            if cls.iter().any(|c| c.len() > 1) {
                return Err(RoommatesError::TiesPresent {
                    owner: AgentId::new(i),
                });
            }
        }
        Ok(())
    }

    /// Undirected acceptability edges `{a, b}` with `a < b`.
    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut edges = Vec::new();
        for a in 0..self.n() {
            for b in a + 1..self.n() {
                if self.rank[a][b].is_some() {
                    edges.push((AgentId::new(a), AgentId::new(b)));
                }
            }
        }
        edges
    }
}

/// A matching: disjoint mutually acceptable pairs; agents may stay single.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    partner: Vec<Option<AgentId>>,
}

impl Matching {
    pub fn empty(n: usize) -> Matching {
        Matching {
            partner: vec![None; n],
        }
    }

    pub fn new(
        inst: &RoommatesInstance,
        pairs: &[(AgentId, AgentId)],
    ) -> Result<Matching, RoommatesError> {
        let mut m = Matching::empty(inst.n());
        for &(a, b) in pairs {
            if a.index() >= inst.n() || b.index() >= inst.n() || !inst.is_acceptable(a, b) {
                return Err(RoommatesError::InvalidMatching { agent: a });
            }
            if m.partner[a.index()].is_some() {
                return Err(RoommatesError::InvalidMatching { agent: a });
            }
            if m.partner[b.index()].is_some() {
                return Err(RoommatesError::InvalidMatching { agent: b });
            }
            m.partner[a.index()] = Some(b);
            m.partner[b.index()] = Some(a);
        }
        Ok(m)
    }

    pub fn partner(&self, a: AgentId) -> Option<AgentId> {
        self.partner[a.index()]
    }

    pub fn is_matched(&self, a: AgentId) -> bool {
        self.partner[a.index()].is_some()
    }

    /// Pairs `(a, b)` with `a < b`, ascending.
    pub fn pairs(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for (i, p) in self.partner.iter().enumerate() {
            if let Some(b) = p {
                if i < b.index() {
                    out.push((AgentId::new(i), *b));
                }
            }
        }
        out
    }

    fn unpair(&mut self, a: AgentId) {
        if let Some(b) = self.partner[a.index()].take() {
            self.partner[b.index()] = None;
        }
    }

    fn pair(&mut self, a: AgentId, b: AgentId) {
        self.unpair(a);
        self.unpair(b);
        self.partner[a.index()] = Some(b);
        self.partner[b.index()] = Some(a);
    }
}

/// Outcome of a stability check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    Blocked(AgentId, AgentId),
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityVerdict::Stable)
    }
}

/// Blocking pair: both endpoints are unmatched or strictly prefer each other
/// to their partners.
pub fn check_stable(inst: &RoommatesInstance, m: &Matching) -> StabilityVerdict {
    for (a, b) in inst.edges() {
        if inst.covets(a, b, m.partner(a)) && inst.covets(b, a, m.partner(b)) {
            return StabilityVerdict::Blocked(a, b);
        }
    }
    StabilityVerdict::Stable
}

/// Weakly blocking pair: both endpoints weakly prefer each other (or are
/// unmatched), and if both are matched at least one strictly prefers.
pub fn check_strongly_stable(inst: &RoommatesInstance, m: &Matching) -> StabilityVerdict {
    for (a, b) in inst.edges() {
        let weak = |x: AgentId, y: AgentId| match m.partner(x) {
            None => true,
            Some(c) => inst.weakly_prefers(x, y, c),
        };
        if !(weak(a, b) && weak(b, a)) {
            continue;
        }
        let strict = match (m.partner(a), m.partner(b)) {
            (Some(ca), Some(cb)) => inst.prefers(a, b, ca) || inst.prefers(b, a, cb),
            _ => true,
        };
        if strict {
            return StabilityVerdict::Blocked(a, b);
        }
    }
    StabilityVerdict::Stable
}

/// Reduced preference table shared by both phases of Irving's algorithm.
struct Table {
    /// Strict list per agent, best first.
    list: Vec<Vec<AgentId>>,
    alive: Vec<Vec<bool>>,
    /// `pos[a][b]`: index of `b` in `a`'s list.
    pos: Vec<Vec<usize>>,
}

impl Table {
    fn new(inst: &RoommatesInstance) -> Table {
        let n = inst.n();
        let mut pos = vec![vec![usize::MAX; n]; n];
        let list: Vec<Vec<AgentId>> = inst.agents().map(|a| inst.list(a)).collect();
        for (a, l) in list.iter().enumerate() {
            for (i, &b) in l.iter().enumerate() {
                pos[a][b.index()] = i;
            }
        }
        let alive = list.iter().map(|l| vec![true; l.len()]).collect();
        Table { list, alive, pos }
    }

    fn first(&self, a: AgentId) -> Option<AgentId> {
        self.list[a.index()]
            .iter()
            .zip(&self.alive[a.index()])
            .find(|&(_, &al)| al)
            .map(|(&b, _)| b)
    }

    fn second(&self, a: AgentId) -> Option<AgentId> {
        self.list[a.index()]
            .iter()
            .zip(&self.alive[a.index()])
            .filter(|&(_, &al)| al)
            .nth(1)
            .map(|(&b, _)| b)
    }

    fn last(&self, a: AgentId) -> Option<AgentId> {
        self.list[a.index()]
            .iter()
            .zip(&self.alive[a.index()])
            .rev()
            .find(|&(_, &al)| al)
            .map(|(&b, _)| b)
    }

    fn len(&self, a: AgentId) -> usize {
        self.alive[a.index()].iter().filter(|&&al| al).count()
    }

    fn delete_pair(&mut self, a: AgentId, b: AgentId) {
        let i = self.pos[a.index()][b.index()];
        let j = self.pos[b.index()][a.index()];
        self.alive[a.index()][i] = false;
        self.alive[b.index()][j] = false;
    }

    /// Alive entries of `b`'s list ranked strictly worse than `keep`.
    fn successors(&self, b: AgentId, keep: AgentId) -> Vec<AgentId> {
        let cut = self.pos[b.index()][keep.index()];
        self.list[b.index()]
            .iter()
            .enumerate()
            .filter(|&(i, _)| i > cut && self.alive[b.index()][i])
            .map(|(_, &w)| w)
            .collect()
    }
}

/// Irving's algorithm for Stable Roommates with incomplete (strict) lists:
/// returns a stable matching, or `None` if the instance is unsolvable.
/// Deterministic: proposals and rotation scans run in ordinal order.
pub fn find_stable(inst: &RoommatesInstance) -> Result<Option<Matching>, RoommatesError> {
    inst.require_strict()?;
    let n = inst.n();
    let mut t = Table::new(inst);

    // Phase 1: proposals. Each agent proposes along her list; an agent holds
    // the best proposal received so far and rejects everything worse.
    let mut engaged_to: Vec<Option<AgentId>> = vec![None; n];
    let mut holds: Vec<Option<AgentId>> = vec![None; n];
    let mut queue: VecDeque<AgentId> = inst.agents().collect();
    while let Some(x) = queue.pop_front() {
        if engaged_to[x.index()].is_some() {
            continue;
        }
        loop {
            let y = match t.first(x) {
                Some(y) => y,
                None => break, // exhausted list; x stays unengaged
            };
            match holds[y.index()] {
                Some(z) if !inst.prefers(y, x, z) => {
                    t.delete_pair(x, y);
                }
                prev => {
                    holds[y.index()] = Some(x);
                    engaged_to[x.index()] = Some(y);
                    if let Some(z) = prev {
                        engaged_to[z.index()] = None;
                        t.delete_pair(z, y);
                        queue.push_back(z);
                    }
                    for w in t.successors(y, x) {
                        t.delete_pair(y, w);
                        if engaged_to[w.index()] == Some(y) {
                            engaged_to[w.index()] = None;
                            queue.push_back(w);
                        }
                        if holds[w.index()] == Some(y) {
                            holds[w.index()] = None;
                            engaged_to[y.index()] = None;
                            queue.push_back(y);
                        }
                    }
                    break;
                }
            }
        }
    }

    // Agents whose lists survive phase 1; losing a list in phase 2 proves
    // the instance unsolvable.
    let survivors: Vec<AgentId> = inst.agents().filter(|&a| t.len(a) > 0).collect();

    // Phase 2: locate and eliminate rotations until all lists are short.
    loop {
        let start = match inst.agents().find(|&a| t.len(a) >= 2) {
            Some(a) => a,
            None => break,
        };
        // Walk a_i -> b_{i+1} = second(a_i) -> a_{i+1} = last(b_{i+1}) until
        // an agent repeats; the cycle is a rotation.
        let mut seq_a: Vec<AgentId> = vec![start];
        let mut seq_b: Vec<AgentId> = Vec::new();
        let mut seen = vec![usize::MAX; n];
        seen[start.index()] = 0;
        let rotation_start = loop {
            let a = *seq_a.last().expect("nonempty");
            let b = t.second(a).expect("agents on the chain have two entries");
            let a_next = t.last(b).expect("nonempty list");
            seq_b.push(b);
            if seen[a_next.index()] != usize::MAX {
                break seen[a_next.index()];
            }
            seen[a_next.index()] = seq_a.len();
            seq_a.push(a_next);
        };
        // Rotation pairs (x_i, y_{i+1}) for i = rotation_start..; eliminate
        // by removing everything worse than x_i from y_{i+1}'s list.
        let xs = &seq_a[rotation_start..];
        let ys = &seq_b[rotation_start..];
        for (i, &x) in xs.iter().enumerate() {
            // The pair {x, y} itself may already have died earlier in this
            // rotation (an agent can appear as both an x and a y); the
            // position cut in successors() is unaffected.
            let y = ys[i];
            for w in t.successors(y, x) {
                t.delete_pair(y, w);
            }
        }
        if survivors.iter().any(|&a| t.len(a) == 0) {
            return Ok(None);
        }
    }

    let mut m = Matching::empty(n);
    for a in inst.agents() {
        if let Some(b) = t.first(a) {
            if a < b {
                debug_assert_eq!(t.first(b), Some(a), "reduced table must be symmetric");
                m.pair(a, b);
            }
        }
    }
    debug_assert!(check_stable(inst, &m).is_stable());
    Ok(Some(m))
}

/// Enumerates every matching of the instance and keeps those accepted by
/// `keep`. Exponential; intended for small test instances.
fn enumerate_matchings(
    inst: &RoommatesInstance,
    keep: &dyn Fn(&Matching) -> bool,
) -> Vec<Matching> {
    fn recurse(
        inst: &RoommatesInstance,
        next: usize,
        m: &mut Matching,
        keep: &dyn Fn(&Matching) -> bool,
        out: &mut Vec<Matching>,
    ) {
        let n = inst.n();
        let a = match (next..n).find(|&i| !m.is_matched(AgentId::new(i))) {
            None => {
                if keep(m) {
                    out.push(m.clone());
                }
                return;
            }
            Some(i) => AgentId::new(i),
        };
        // a stays single.
        recurse(inst, a.index() + 1, m, keep, out);
        for b in a.index() + 1..n {
            let b = AgentId::new(b);
            if inst.is_acceptable(a, b) && !m.is_matched(b) {
                m.pair(a, b);
                recurse(inst, a.index() + 1, m, keep, out);
                m.unpair(a);
            }
        }
    }
    let mut out = Vec::new();
    let mut m = Matching::empty(inst.n());
    recurse(inst, 0, &mut m, keep, &mut out);
    out
}

/// All stable matchings, by exhaustive enumeration.
pub fn enumerate_stable(inst: &RoommatesInstance) -> Vec<Matching> {
    enumerate_matchings(inst, &|m| check_stable(inst, m).is_stable())
}

/// All strongly stable matchings, by exhaustive enumeration.
pub fn enumerate_strongly_stable(inst: &RoommatesInstance) -> Vec<Matching> {
    enumerate_matchings(inst, &|m| check_strongly_stable(inst, m).is_stable())
}

/// Is `h2` obtained from `h` by a `(p, q)`-improvement? Only `q`'s list may
/// change (promoting `p`, preserving everything else), except that `p`'s own
/// list gains `q` when `q` newly lists `p`, keeping acceptability mutual.
pub fn is_pq_improvement(
    h: &RoommatesInstance,
    h2: &RoommatesInstance,
    p: AgentId,
    q: AgentId,
) -> bool {
    if h.n() != h2.n() || p == q || p.index() >= h.n() || q.index() >= h.n() {
        return false;
    }
    let strip = |inst: &RoommatesInstance, a: AgentId, drop: AgentId| -> Vec<Vec<AgentId>> {
        inst.classes(a)
            .iter()
            .map(|c| c.iter().copied().filter(|&x| x != drop).collect())
            .filter(|c: &Vec<AgentId>| !c.is_empty())
            .collect()
    };
    for a in h.agents() {
        if a == q {
            continue;
        }
        if a == p {
            // p's list may change only by inserting q somewhere.
            if strip(h, p, q) != strip(h2, p, q) {
                return false;
            }
            if h.is_acceptable(p, q) && !h2.is_acceptable(p, q) {
                return false;
            }
            continue;
        }
        if h.classes(a) != h2.classes(a) {
            return false;
        }
    }
    // q's list: same relation on partners other than p, and everyone ranked
    // below p stays below p.
    if strip(h, q, p) != strip(h2, q, p) {
        return false;
    }
    for a in h.agents() {
        if a != q && h.prefers(q, p, a) && !h2.prefers(q, p, a) {
            return false;
        }
    }
    // Mutual acceptability already holds per instance; consistency of the
    // p and q edges follows from it.
    true
}

/// Matching repair after an improvement: given `m` stable in `h` and a
/// `(p, q)`-improvement `h2` of `h` with strict preferences, returns a stable
/// matching of `h2` in which `p` fares weakly better, or `None` when `h2`
/// admits no stable matching at all.
pub fn sr_improve(
    h: &RoommatesInstance,
    h2: &RoommatesInstance,
    p: AgentId,
    q: AgentId,
    m: &Matching,
) -> Result<Option<Matching>, RoommatesError> {
    h.require_strict()?;
    h2.require_strict()?;
    if !is_pq_improvement(h, h2, p, q) {
        return Err(RoommatesError::NotImprovement);
    }
    if !check_stable(h, m).is_stable() {
        return Err(RoommatesError::NotStable);
    }
    if check_stable(h2, m).is_stable() {
        return Ok(Some(m.clone()));
    }
    // Only q's preferences changed, so {p, q} is the new blocking pair.
    debug_assert!(h2.covets(p, q, m.partner(p)) && h2.covets(q, p, m.partner(q)));

    let m_star = match find_stable(h2)? {
        None => return Ok(None),
        Some(ms) => ms,
    };
    let p_weakly_improves = match (m.partner(p), m_star.partner(p)) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(old), Some(new)) => h2.weakly_prefers(p, new, old),
    };
    if p_weakly_improves {
        return Ok(Some(m_star));
    }

    // Truncate: q drops p and everyone she likes at most as much as p.
    let dropped: Vec<AgentId> = h2
        .agents()
        .filter(|&a| a != q && h2.is_acceptable(q, a) && !h2.prefers(q, a, p))
        .collect();
    let trunc_classes: Vec<Vec<Vec<AgentId>>> = h2
        .agents()
        .map(|a| {
            let drop: &dyn Fn(AgentId) -> bool = if a == q {
                &|x| dropped.contains(&x)
            } else if dropped.contains(&a) {
                &|x| x == q
            } else {
                &|_| false
            };
            h2.classes(a)
                .iter()
                .map(|c| c.iter().copied().filter(|&x| !drop(x)).collect())
                .filter(|c: &Vec<AgentId>| !c.is_empty())
                .collect()
        })
        .collect();
    let trunc = RoommatesInstance::new(h2.names().to_vec(), trunc_classes)
        .expect("truncation keeps acceptability mutual");

    // Proposal-rejection alternating sequence from M0 = M - {q, M(q)}.
    let alpha0 = m
        .partner(q)
        .expect("q is matched once {p, q} blocks and the solver beats p's old partner");
    let mut cur = m.clone();
    cur.unpair(q);
    let mut alpha = alpha0;
    let mut was_alpha = vec![false; h.n()];
    was_alpha[alpha.index()] = true;
    let edge_bound = 2 * trunc.edges().len() + 2;
    for _ in 0..edge_bound {
        // B: agents who would rather have alpha than their current partner.
        let beta = trunc
            .list(alpha)
            .into_iter()
            .find(|&b| trunc.covets(b, alpha, cur.partner(b)));
        let beta = match beta {
            Some(b) => b,
            None => {
                // The sequence stops at alpha; per the theory this cannot
                // happen here (a stop occurs only at q, an unmatched beta).
                debug_assert!(false, "sequence stopped at an alpha");
                return Ok(Some(cur));
            }
        };
        assert!(
            !was_alpha[beta.index()],
            "proposal-rejection sequence must not return"
        );
        match cur.partner(beta) {
            None => {
                // S stops at beta; the stop can happen exactly at q.
                assert!(beta == q, "sequence may stop only at q");
                cur.pair(alpha, beta);
                debug_assert!(check_stable(h2, &cur).is_stable());
                return Ok(Some(cur));
            }
            Some(next_alpha) => {
                cur.pair(alpha, beta);
                alpha = next_alpha;
                was_alpha[alpha.index()] = true;
                if h.n() <= 64 {
                    debug_assert!(check_stable(&trunc, &cur).is_stable() || {
                        // cur must be stable in trunc minus the new alpha.
                        matches!(
                            check_stable(&trunc, &cur),
                            StabilityVerdict::Blocked(a, b) if a == alpha || b == alpha
                        )
                    });
                }
                if alpha == p {
                    cur.pair(p, q);
                    debug_assert!(check_stable(h2, &cur).is_stable());
                    return Ok(Some(cur));
                }
            }
        }
    }
    unreachable!("proposal-rejection sequence exceeded its length bound");
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn id(i: usize) -> AgentId {
        AgentId::new(i)
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    #[test]
    fn empty_instance_stable() {
        let inst = RoommatesInstance::strict(names(0), vec![]).unwrap();
        let m = Matching::empty(0);
        assert!(check_stable(&inst, &m).is_stable());
        assert!(check_strongly_stable(&inst, &m).is_stable());
        assert_eq!(find_stable(&inst).unwrap(), Some(m));
    }

    #[test]
    fn mutuality_enforced() {
        let err = RoommatesInstance::strict(names(2), vec![vec![id(1)], vec![]]).unwrap_err();
        assert_eq!(
            err,
            RoommatesError::NotMutual { a: id(0), b: id(1) }
        );
    }

    #[test]
    fn unmatched_pair_blocks() {
        let inst =
            RoommatesInstance::strict(names(2), vec![vec![id(1)], vec![id(0)]]).unwrap();
        let m = Matching::empty(2);
        assert_eq!(check_stable(&inst, &m), StabilityVerdict::Blocked(id(0), id(1)));
        let found = find_stable(&inst).unwrap().unwrap();
        assert_eq!(found.partner(id(0)), Some(id(1)));
    }

    #[test]
    fn odd_cycle_unsolvable() {
        // a: b > c, b: c > a, c: a > b -- the classic unsolvable triangle.
        let inst = RoommatesInstance::strict(
            names(3),
            vec![
                vec![id(1), id(2)],
                vec![id(2), id(0)],
                vec![id(0), id(1)],
            ],
        )
        .unwrap();
        assert_eq!(find_stable(&inst).unwrap(), None);
        assert!(enumerate_stable(&inst).is_empty());
    }

    #[test]
    fn solver_agrees_with_enumeration_small() {
        // A 4-agent instance with two stable matchings.
        let inst = RoommatesInstance::strict(
            names(4),
            vec![
                vec![id(1), id(2), id(3)],
                vec![id(2), id(0), id(3)],
                vec![id(0), id(1), id(3)],
                vec![id(0), id(1), id(2)],
            ],
        )
        .unwrap();
        let all = enumerate_stable(&inst);
        let found = find_stable(&inst).unwrap();
        match found {
            Some(m) => assert!(all.contains(&m)),
            None => assert!(all.is_empty()),
        }
    }

    #[test]
    fn strict_strong_stability_matches_stability() {
        let inst = RoommatesInstance::strict(
            names(4),
            vec![
                vec![id(1), id(2)],
                vec![id(0), id(3)],
                vec![id(3), id(0)],
                vec![id(2), id(1)],
            ],
        )
        .unwrap();
        for m in enumerate_matchings(&inst, &|_| true) {
            assert_eq!(
                check_stable(&inst, &m).is_stable(),
                check_strongly_stable(&inst, &m).is_stable()
            );
        }
    }

    #[test]
    fn tie_makes_strong_stability_finer() {
        // 0 is indifferent between 1 and 2; matching {0,1} leaves {0,2}
        // weakly blocking (2 unmatched, 0 indifferent).
        let inst = RoommatesInstance::new(
            names(3),
            vec![
                vec![vec![id(1), id(2)]],
                vec![vec![id(0)]],
                vec![vec![id(0)]],
            ],
        )
        .unwrap();
        let m = Matching::new(&inst, &[(id(0), id(1))]).unwrap();
        assert!(check_stable(&inst, &m).is_stable());
        assert!(!check_strongly_stable(&inst, &m).is_stable());
        assert!(find_stable(&inst).is_err()); // ties
    }

    #[test]
    fn improvement_check() {
        let h = RoommatesInstance::strict(
            names(3),
            vec![
                vec![id(1), id(2)], // q = 0: a > p
                vec![id(0)],
                vec![id(0)],
            ],
        )
        .unwrap();
        let h2 = RoommatesInstance::strict(
            names(3),
            vec![
                vec![id(2), id(1)], // p promoted
                vec![id(0)],
                vec![id(0)],
            ],
        )
        .unwrap();
        assert!(is_pq_improvement(&h, &h2, id(2), id(0)));
        assert!(!is_pq_improvement(&h2, &h, id(2), id(0))); // demotion
        assert!(!is_pq_improvement(&h, &h2, id(1), id(0))); // wrong p
    }

    #[test]
    fn sr_improve_stable_input_returned() {
        let h = RoommatesInstance::strict(names(2), vec![vec![id(1)], vec![id(0)]]).unwrap();
        let m = Matching::new(&h, &[(id(0), id(1))]).unwrap();
        let out = sr_improve(&h, &h, id(0), id(1), &m).unwrap().unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn sr_improve_newly_acceptable_pair() {
        // H: p and q do not know each other; both matched elsewhere.
        // H2: q lists p on top (and p lists q), destabilizing M.
        let (p, q, a, b) = (id(0), id(1), id(2), id(3));
        let h = RoommatesInstance::strict(
            names(4),
            vec![
                vec![a],       // p: a
                vec![b],       // q: b
                vec![p],       // a: p
                vec![q],       // b: q
            ],
        )
        .unwrap();
        let h2 = RoommatesInstance::strict(
            names(4),
            vec![
                vec![q, a],    // p: q > a
                vec![p, b],    // q: p > b
                vec![p],
                vec![q],
            ],
        )
        .unwrap();
        assert!(is_pq_improvement(&h, &h2, p, q));
        let m = Matching::new(&h, &[(p, a), (q, b)]).unwrap();
        assert!(check_stable(&h, &m).is_stable());
        let out = sr_improve(&h, &h2, p, q, &m).unwrap().unwrap();
        assert!(check_stable(&h2, &out).is_stable());
        assert_eq!(out.partner(p), Some(q));
    }

    #[test]
    fn sr_improve_rejects_bad_inputs() {
        let h = RoommatesInstance::strict(names(2), vec![vec![id(1)], vec![id(0)]]).unwrap();
        let m = Matching::empty(2);
        assert_eq!(
            sr_improve(&h, &h, id(0), id(1), &m).unwrap_err(),
            RoommatesError::NotStable
        );
        let other = RoommatesInstance::strict(names(2), vec![vec![], vec![]]).unwrap();
        let m2 = Matching::new(&h, &[(id(0), id(1))]).unwrap();
        assert_eq!(
            sr_improve(&h, &other, id(0), id(1), &m2).unwrap_err(),
            RoommatesError::NotImprovement
        );
    }
}
