//! Improvement transforms on housing markets and the core-repair algorithm:
//! given a core allocation of `H` and a `p`-improvement `H2` of `H`, produce a
//! core allocation of `H2` in which `p` is weakly better off.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::market::{
    check_core, AgentId, Allocation, HousingMarket, MarketError, PosetSpec, PreferencePoset,
};
use crate::ttc::ttc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ImproveError {
    /// The two markets do not have the same agent set.
    AgentSetMismatch { left: usize, right: usize },
    /// Referenced agent outside the market.
    UnknownAgent { agent: AgentId },
    /// A step of an improvement spec touches a pair not involving `p`, or
    /// demotes `p` relative to some house.
    NotAnImprovement { q: AgentId },
    /// Two steps name the same agent.
    DuplicateStep { q: AgentId },
    /// A step leaves the agent's preference relation unchanged.
    NoOpStep { q: AgentId },
    /// A step's new poset fails market validation.
    Invalid(MarketError),
    /// The given allocation is blocked in the starting market.
    NotInCore,
    /// The second market is not a `p`-improvement of the first.
    NotImprovement,
}

impl fmt::Display for ImproveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImproveError::AgentSetMismatch { left, right } => {
                write!(f, "markets have {left} and {right} agents")
            }
            ImproveError::UnknownAgent { agent } => write!(f, "unknown agent {agent}"),
            ImproveError::NotAnImprovement { q } => {
                write!(f, "step for agent {q} is not a valid improvement")
            }
            ImproveError::DuplicateStep { q } => write!(f, "duplicate step for agent {q}"),
            ImproveError::NoOpStep { q } => write!(f, "step for agent {q} changes nothing"),
            ImproveError::Invalid(e) => write!(f, "invalid step poset: {e}"),
            ImproveError::NotInCore => write!(f, "allocation is not in the core"),
            ImproveError::NotImprovement => write!(f, "markets are not related by a p-improvement"),
        }
    }
}

impl From<MarketError> for ImproveError {
    fn from(e: MarketError) -> Self {
        ImproveError::Invalid(e)
    }
}

/// A sequence of per-agent preference changes, each promoting the house of
/// `p` for one agent `q` while leaving everything else untouched.
#[derive(Clone, Debug)]
pub struct ImprovementSpec {
    pub p: AgentId,
    /// Steps `(q, new poset of q)`; the `q` must be pairwise distinct.
    pub steps: Vec<(AgentId, PosetSpec)>,
}

/// Do the preferences `old` and `new` of one agent differ by a valid
/// single-agent improvement of house `p` (conditions: identical relation on
/// pairs avoiding `p`, and every house ranked below `p` stays below `p`)?
fn step_is_improvement(old: &PreferencePoset, new: &PreferencePoset, p: AgentId) -> bool {
    let strip = |pref: &PreferencePoset| -> Vec<AgentId> {
        pref.acceptable().iter().copied().filter(|&x| x != p).collect()
    };
    let acc = strip(old);
    if acc != strip(new) {
        return false;
    }
    for &x in &acc {
        for &y in &acc {
            if old.prefers(x, y) != new.prefers(x, y) {
                return false;
            }
        }
    }
    old.acceptable()
        .iter()
        .all(|&x| !old.prefers(x, p) || new.prefers(x, p))
}

/// Is `h2` obtainable from `h` by a sequence of `(p, q)`-improvements?
///
/// Checked agent by agent: every changed preference relation must be a valid
/// single-agent improvement of `p`'s house.
pub fn is_p_improvement(
    h: &HousingMarket,
    h2: &HousingMarket,
    p: AgentId,
) -> Result<bool, ImproveError> {
    if h.n() != h2.n() {
        return Err(ImproveError::AgentSetMismatch {
            left: h.n(),
            right: h2.n(),
        });
    }
    if p.index() >= h.n() {
        return Err(ImproveError::UnknownAgent { agent: p });
    }
    Ok(h.agents().all(|a| {
        let (old, new) = (h.pref(a), h2.pref(a));
        old.relation_eq(new) || step_is_improvement(old, new, p)
    }))
}

/// Applies an improvement spec to `h`, validating each step.
pub fn apply_improvement(
    h: &HousingMarket,
    spec: &ImprovementSpec,
) -> Result<HousingMarket, ImproveError> {
    if spec.p.index() >= h.n() {
        return Err(ImproveError::UnknownAgent { agent: spec.p });
    }
    let mut specs: Vec<PosetSpec> = h
        .prefs()
        .iter()
        .map(|p| PosetSpec {
            acceptable: p.acceptable().to_vec(),
            covers: p.covers().to_vec(),
        })
        .collect();
    let mut seen = vec![false; h.n()];
    for (q, new_spec) in &spec.steps {
        if q.index() >= h.n() {
            return Err(ImproveError::UnknownAgent { agent: *q });
        }
        if seen[q.index()] {
            return Err(ImproveError::DuplicateStep { q: *q });
        }
        seen[q.index()] = true;
        specs[q.index()] = new_spec.clone();
    }
    let h2 = HousingMarket::new(h.names().to_vec(), specs)?;
    for (q, _) in &spec.steps {
        let (old, new) = (h.pref(*q), h2.pref(*q));
        if old.relation_eq(new) {
            return Err(ImproveError::NoOpStep { q: *q });
        }
        if !step_is_improvement(old, new, spec.p) {
            return Err(ImproveError::NotAnImprovement { q: *q });
        }
    }
    Ok(h2)
}

/// Shadow market: `h2` with one extra agent per improved-and-envious agent
/// `q`, subdividing the arc `(q, p)` of the acceptability graph.
struct Shadow {
    market: HousingMarket,
    /// The agents `q` with a shadow, ascending; shadow of `q_set[i]` has
    /// ordinal `n + i`.
    q_set: Vec<AgentId>,
    n: usize,
}

impl Shadow {
    fn build(h2: &HousingMarket, p: AgentId, q_set: Vec<AgentId>) -> Shadow {
        let n = h2.n();
        let shadow_of = |q: AgentId| {
            let i = q_set.binary_search(&q).expect("q in Q");
            AgentId::new(n + i)
        };
        let mut names: Vec<String> = h2.names().to_vec();
        let mut specs: Vec<PosetSpec> = Vec::with_capacity(n + q_set.len());
        for a in h2.agents() {
            let pref = h2.pref(a);
            let subst = |x: AgentId| {
                if x == p && q_set.binary_search(&a).is_ok() {
                    shadow_of(a)
                } else {
                    x
                }
            };
            specs.push(PosetSpec {
                acceptable: pref.acceptable().iter().map(|&x| subst(x)).collect(),
                covers: pref
                    .covers()
                    .iter()
                    .map(|&(x, y)| (subst(x), subst(y)))
                    .collect(),
            });
        }
        for &q in &q_set {
            names.push(format!("~{}", h2.name(q)));
            let s = shadow_of(q);
            specs.push(PosetSpec {
                acceptable: vec![p],
                covers: vec![(s, p)],
            });
        }
        let market = HousingMarket::new(names, specs).expect("shadow market is valid");
        Shadow { market, q_set, n }
    }

    fn is_shadow(&self, a: AgentId) -> bool {
        a.index() >= self.n
    }
}

/// Working state of the repair iteration: the sub-allocation `Y` over the
/// shadow market minus the irrelevant set `R`, with its source set `U` and
/// sink set `V`, plus lazily-maintained envy-arc candidate lists.
struct Repair<'a> {
    sh: &'a Shadow,
    /// `Y` as partial out- and in-maps.
    out: Vec<Option<AgentId>>,
    inc: Vec<Option<AgentId>>,
    in_r: Vec<bool>,
    in_v: Vec<bool>,
    u_set: BTreeSet<AgentId>,
    /// Sources not in `V`; empty iff `U = V`.
    u_not_v: BTreeSet<AgentId>,
    /// Sources with a known-live envy-arc candidate.
    pending: BTreeSet<AgentId>,
    /// `candidates[u]`: possible envy-arc sources for target `u`, ascending;
    /// consumed front-to-back as arcs die. An arc `(s, u)` stops being
    /// augmenting only when `Y(s)` improves past `u` or `s` turns irrelevant,
    /// both permanent, so popped entries never come back.
    candidates: Vec<Vec<AgentId>>,
    /// Per-target cursor into `candidates`.
    cursor: Vec<usize>,
}

impl<'a> Repair<'a> {
    fn new(sh: &'a Shadow, x: &Allocation) -> Repair<'a> {
        let nn = sh.market.n();
        let mut candidates = vec![Vec::new(); nn];
        for s in sh.market.agents() {
            for &b in sh.market.pref(s).acceptable() {
                if b != s {
                    candidates[b.index()].push(s);
                }
            }
        }
        let mut out = vec![None; nn];
        let mut inc = vec![None; nn];
        let mut in_v = vec![false; nn];
        for a in AgentId::new(0).index()..sh.n {
            let a = AgentId::new(a);
            let b = if sh.q_set.binary_search(&a).is_ok() {
                let i = sh.q_set.binary_search(&a).expect("in Q");
                AgentId::new(sh.n + i)
            } else {
                x.get(a)
            };
            out[a.index()] = Some(b);
            inc[b.index()] = Some(a);
        }
        for i in 0..sh.q_set.len() {
            in_v[sh.n + i] = true;
        }
        let mut st = Repair {
            sh,
            out,
            inc,
            in_r: vec![false; nn],
            in_v,
            u_set: BTreeSet::new(),
            u_not_v: BTreeSet::new(),
            pending: BTreeSet::new(),
            candidates,
            cursor: vec![0; nn],
        };
        for a in 0..nn {
            if st.inc[a].is_none() {
                // The initial sources are the orphaned houses X(q).
                st.add_source(AgentId::new(a));
            }
        }
        st
    }

    /// Is the arc `(s, u)` currently augmenting (with `u` a source)?
    fn arc_live(&self, s: AgentId, u: AgentId) -> bool {
        if self.in_r[s.index()] {
            return false;
        }
        if self.in_v[s.index()] {
            return true;
        }
        let y_s = self.out[s.index()].expect("non-sink has an out-arc");
        self.sh.market.pref(s).prefers(y_s, u)
    }

    /// Drops permanently dead candidates for target `u`; true if one is left.
    fn refresh(&mut self, u: AgentId) -> bool {
        while let Some(&s) = self.candidates[u.index()].get(self.cursor[u.index()]) {
            if self.arc_live(s, u) {
                return true;
            }
            self.cursor[u.index()] += 1;
        }
        false
    }

    fn add_source(&mut self, u: AgentId) {
        self.u_set.insert(u);
        if !self.in_v[u.index()] {
            self.u_not_v.insert(u);
        }
        if self.refresh(u) {
            self.pending.insert(u);
        }
    }

    fn remove_source(&mut self, u: AgentId) {
        self.u_set.remove(&u);
        self.u_not_v.remove(&u);
        self.pending.remove(&u);
    }

    /// Lowest-target live envy arc into the source set, if any.
    fn find_arc(&mut self) -> Option<(AgentId, AgentId)> {
        while let Some(&u) = self.pending.iter().next() {
            if self.refresh(u) {
                let s = self.candidates[u.index()][self.cursor[u.index()]];
                return Some((s, u));
            }
            self.pending.remove(&u);
        }
        None
    }

    /// Full stability re-check of `Y` (debug builds, small markets only).
    #[cfg(debug_assertions)]
    fn assert_stable(&self) {
        let nn = self.sh.market.n();
        if nn > 64 {
            return;
        }
        let mut envy: Vec<Vec<AgentId>> = vec![Vec::new(); nn];
        for s in self.sh.market.agents() {
            if self.in_r[s.index()] {
                continue;
            }
            for &b in self.sh.market.pref(s).acceptable() {
                if b == s || self.in_r[b.index()] {
                    continue;
                }
                let aug = if self.in_v[s.index()] {
                    true
                } else {
                    let y_s = self.out[s.index()].expect("non-sink");
                    self.sh.market.pref(s).prefers(y_s, b)
                };
                if aug {
                    envy[s.index()].push(b);
                }
            }
        }
        debug_assert!(
            crate::market::find_cycle(&envy).is_none(),
            "sub-allocation must stay stable"
        );
    }
}

/// Repairs a core allocation after an improvement: given `x` in the core of
/// `h` and a `p`-improvement `h2` of `h`, returns an allocation in the core
/// of `h2` giving `p` a weakly better house. Runs in near-linear time in the
/// description length of the market.
pub fn hm_improve(
    h: &HousingMarket,
    h2: &HousingMarket,
    p: AgentId,
    x: &Allocation,
) -> Result<Allocation, ImproveError> {
    if !is_p_improvement(h, h2, p)? {
        return Err(ImproveError::NotImprovement);
    }
    if !check_core(h, x).is_in_core() {
        return Err(ImproveError::NotInCore);
    }
    if check_core(h2, x).is_in_core() {
        return Ok(x.clone());
    }

    // Agents whose preferences changed and who now envy p's house.
    let q_set: Vec<AgentId> = h
        .agents()
        .filter(|&a| !h.pref(a).relation_eq(h2.pref(a)) && h2.pref(a).prefers(x.get(a), p))
        .collect();
    debug_assert!(
        !q_set.is_empty(),
        "a new blocking cycle must pass through an envy arc toward p"
    );
    let sh = Shadow::build(h2, p, q_set);
    let mut st = Repair::new(&sh, x);

    while let Some(&u) = st.u_not_v.iter().next() {
        st.assert_stable_if_debug();
        if let Some((s, target)) = st.find_arc() {
            if !st.in_v[s.index()] {
                // Redirect s toward the source it envies; its old house
                // becomes a source.
                let old = st.out[s.index()].expect("non-sink has an out-arc");
                debug_assert!(sh.market.pref(s).prefers(old, target));
                st.inc[old.index()] = None;
                st.out[s.index()] = Some(target);
                st.inc[target.index()] = Some(s);
                st.remove_source(target);
                st.add_source(old);
            } else {
                // A sink closes a path: it stops being a sink and the target
                // stops being a source.
                st.out[s.index()] = Some(target);
                st.inc[target.index()] = Some(s);
                st.in_v[s.index()] = false;
                if st.u_set.contains(&s) {
                    st.u_not_v.insert(s);
                }
                st.remove_source(target);
            }
        } else {
            // No envy arc enters any source: the lowest non-sink source
            // becomes irrelevant.
            debug_assert!(u != p, "p never becomes irrelevant");
            let old = st.out[u.index()].expect("u is not a sink");
            st.in_r[u.index()] = true;
            st.out[u.index()] = None;
            st.remove_source(u);
            st.inc[old.index()] = None;
            st.add_source(old);
        }
    }
    st.assert_stable_if_debug();

    // Resolve irrelevant agents by TTC on their induced submarket of h2.
    let r_agents: Vec<AgentId> = h.agents().filter(|a| st.in_r[a.index()]).collect();
    let (sub, old_ids) = h2.submarket(&r_agents);
    let x_r = ttc(&sub);

    // Splice out the at most one shadow agent still mid-cycle, assemble X'.
    let mut assignment: Vec<AgentId> = vec![AgentId::new(0); h.n()];
    for (i, &a) in old_ids.iter().enumerate() {
        assignment[a.index()] = old_ids[x_r.get(AgentId::new(i)).index()];
    }
    #[cfg(debug_assertions)]
    {
        let live_shadows = (0..sh.q_set.len())
            .map(|i| AgentId::new(sh.n + i))
            .filter(|s| !st.in_r[s.index()] && !st.u_set.contains(s))
            .count();
        debug_assert!(live_shadows <= 1, "at most one shadow agent is spliced");
    }
    for a in h.agents() {
        if st.in_r[a.index()] {
            continue;
        }
        let b = st.out[a.index()].expect("real agents outside R keep an out-arc");
        assignment[a.index()] = if sh.is_shadow(b) { p } else { b };
    }
    Ok(Allocation::new(h2, assignment).expect("repair yields a valid allocation"))
}

impl<'a> Repair<'a> {
    #[cfg(debug_assertions)]
    fn assert_stable_if_debug(&self) {
        self.assert_stable();
    }
    #[cfg(not(debug_assertions))]
    fn assert_stable_if_debug(&self) {}
}
