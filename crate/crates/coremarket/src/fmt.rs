//! Line-oriented file formats: housing markets, allocations, roommates
//! instances, matchings, and digraphs. All parsers accept `#` comments and
//! blank lines; serializers emit a canonical form so that parse ∘ serialize
//! is the identity.

use std::collections::HashMap;
use std::fmt;

use coremarket_core::market::{
    AgentId, Allocation, AllocationError, HousingMarket, MarketError, PosetSpec,
};
use coremarket_core::reductions::{Digraph, ReductionError};
use coremarket_core::roommates::{Matching, RoommatesError, RoommatesInstance};

#[derive(Debug)]
pub enum FmtError {
    /// Malformed line; carries the 1-based line number.
    Syntax { line: usize, msg: String },
    DuplicateAgent { line: usize, name: String },
    UnknownName { line: usize, name: String },
    Market(MarketError),
    Allocation(AllocationError),
    Roommates(RoommatesError),
    Digraph(ReductionError),
}

impl fmt::Display for FmtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FmtError::Syntax { line, msg } => write!(f, "line {line}: {msg}"),
            FmtError::DuplicateAgent { line, name } => {
                write!(f, "line {line}: duplicate agent `{name}`")
            }
            FmtError::UnknownName { line, name } => {
                write!(f, "line {line}: unknown agent `{name}`")
            }
            FmtError::Market(e) => write!(f, "invalid market: {e}"),
            FmtError::Allocation(e) => write!(f, "invalid allocation: {e:?}"),
            FmtError::Roommates(e) => write!(f, "invalid instance: {e}"),
            FmtError::Digraph(e) => write!(f, "invalid digraph: {e}"),
        }
    }
}

impl std::error::Error for FmtError {}

impl From<MarketError> for FmtError {
    fn from(e: MarketError) -> Self {
        FmtError::Market(e)
    }
}

impl From<RoommatesError> for FmtError {
    fn from(e: RoommatesError) -> Self {
        FmtError::Roommates(e)
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> FmtError {
    FmtError::Syntax {
        line: line + 1,
        msg: msg.into(),
    }
}

/// Content lines with their 0-based indices; comments and blanks dropped.
fn content_lines(input: &str) -> Vec<(usize, &str)> {
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

struct AgentTable {
    names: Vec<String>,
    index: HashMap<String, AgentId>,
}

impl AgentTable {
    fn new() -> Self {
        AgentTable {
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn declare(&mut self, line: usize, name: &str) -> Result<(), FmtError> {
        if self.index.contains_key(name) {
            return Err(FmtError::DuplicateAgent {
                line: line + 1,
                name: name.to_string(),
            });
        }
        self.index
            .insert(name.to_string(), AgentId::new(self.names.len()));
        self.names.push(name.to_string());
        Ok(())
    }

    fn lookup(&self, line: usize, name: &str) -> Result<AgentId, FmtError> {
        self.index.get(name).copied().ok_or(FmtError::UnknownName {
            line: line + 1,
            name: name.to_string(),
        })
    }
}

/// Splits a directive of the form `<keyword> <owner> : <rest>`.
fn directive<'a>(line: usize, l: &'a str) -> Result<(&'a str, &'a str, &'a str), FmtError> {
    let (head, rest) = l
        .split_once(':')
        .ok_or_else(|| syntax(line, "expected `:` in directive"))?;
    let mut head_it = head.split_whitespace();
    let kw = head_it
        .next()
        .ok_or_else(|| syntax(line, "missing keyword"))?;
    let owner = head_it
        .next()
        .ok_or_else(|| syntax(line, "missing agent name"))?;
    if head_it.next().is_some() {
        return Err(syntax(line, "unexpected token before `:`"));
    }
    Ok((kw, owner, rest.trim()))
}

/// Parses a preference-list shorthand `x > [y z] > @self` into tie classes;
/// `@self` stands for the owner's own house.
fn parse_list_classes(
    line: usize,
    owner: AgentId,
    rest: &str,
    table: &AgentTable,
) -> Result<Vec<Vec<AgentId>>, FmtError> {
    let mut classes = Vec::new();
    for part in rest.split('>') {
        let part = part.trim();
        if part.is_empty() {
            return Err(syntax(line, "empty tie class in list"));
        }
        let (inner, bracketed) = if let Some(stripped) = part.strip_prefix('[') {
            let inner = stripped
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, "unclosed `[` in list"))?;
            (inner, true)
        } else {
            (part, false)
        };
        let mut class = Vec::new();
        for tok in inner.split_whitespace() {
            if tok == "@self" {
                class.push(owner);
            } else {
                class.push(table.lookup(line, tok)?);
            }
        }
        if class.is_empty() {
            return Err(syntax(line, "empty tie class in list"));
        }
        if class.len() > 1 && !bracketed {
            return Err(syntax(line, "tie classes must be bracketed"));
        }
        classes.push(class);
    }
    Ok(classes)
}

/// Parses the `market v1` format.
pub fn parse_market(input: &str) -> Result<HousingMarket, FmtError> {
    let lines = content_lines(input);
    let mut it = lines.iter().peekable();
    match it.next() {
        Some(&(i, l)) if l != "market v1" => {
            return Err(syntax(i, "expected header `market v1`"))
        }
        None => return Err(syntax(0, "expected header `market v1`")),
        _ => {}
    }
    let mut table = AgentTable::new();
    let mut body: Vec<(usize, &str)> = Vec::new();
    for &(i, l) in it {
        if let Some(name) = l.strip_prefix("agent ") {
            let name = name.trim();
            if name.split_whitespace().count() != 1 {
                return Err(syntax(i, "agent names must be single tokens"));
            }
            table.declare(i, name)?;
        } else if l == "agent" {
            return Err(syntax(i, "missing agent name"));
        } else {
            body.push((i, l));
        }
    }
    if table.names.is_empty() {
        return Err(syntax(
            lines.first().map(|&(i, _)| i).unwrap_or(0),
            "at least one agent required",
        ));
    }
    let n = table.names.len();
    let mut specs: Vec<PosetSpec> = (0..n)
        .map(|_| PosetSpec {
            acceptable: Vec::new(),
            covers: Vec::new(),
        })
        .collect();
    let mut described = vec![false; n];
    for (i, l) in body {
        let (kw, owner_name, rest) = directive(i, l)?;
        let owner = table.lookup(i, owner_name)?;
        match kw {
            "accept" => {
                described[owner.index()] = true;
                for tok in rest.split_whitespace() {
                    specs[owner.index()].acceptable.push(table.lookup(i, tok)?);
                }
            }
            "cover" => {
                described[owner.index()] = true;
                let (lo, hi) = rest
                    .split_once('<')
                    .ok_or_else(|| syntax(i, "expected `x < y` in cover"))?;
                let lo = lo.trim();
                let hi = hi.trim();
                let lo = if lo == "@self" { owner } else { table.lookup(i, lo)? };
                let hi = if hi == "@self" { owner } else { table.lookup(i, hi)? };
                specs[owner.index()].covers.push((lo, hi));
            }
            "list" => {
                if described[owner.index()] {
                    return Err(syntax(i, "agent already described"));
                }
                described[owner.index()] = true;
                let classes = parse_list_classes(i, owner, rest, &table)?;
                specs[owner.index()] = PosetSpec::weak(owner, &classes);
            }
            _ => return Err(syntax(i, format!("unknown directive `{kw}`"))),
        }
    }
    Ok(HousingMarket::new(table.names, specs)?)
}

/// Canonical serialization: agents in ordinal order, `accept` line per agent
/// with a non-trivial acceptable set, covers in lexicographic ordinal order.
pub fn serialize_market(h: &HousingMarket) -> String {
    let mut out = String::from("market v1\n");
    for a in h.agents() {
        out.push_str(&format!("agent {}\n", h.name(a)));
    }
    for a in h.agents() {
        let pref = h.pref(a);
        let others: Vec<&str> = pref
            .acceptable()
            .iter()
            .filter(|&&b| b != a)
            .map(|&b| h.name(b))
            .collect();
        if !others.is_empty() {
            out.push_str(&format!("accept {} : {}\n", h.name(a), others.join(" ")));
        }
        let mut covers = pref.covers().to_vec();
        covers.sort();
        for (lo, hi) in covers {
            let lo = if lo == a { "@self" } else { h.name(lo) };
            let hi = if hi == a { "@self" } else { h.name(hi) };
            out.push_str(&format!("cover {} : {} < {}\n", h.name(a), lo, hi));
        }
    }
    out
}

/// Allocation file: one `a -> b` line per agent; agents left out keep their
/// own house.
pub fn parse_allocation(input: &str, h: &HousingMarket) -> Result<Allocation, FmtError> {
    let index: HashMap<&str, AgentId> = h
        .agents()
        .map(|a| (h.name(a), a))
        .collect();
    let mut assignment: Vec<AgentId> = h.agents().collect();
    for (i, l) in content_lines(input) {
        let (a, b) = l
            .split_once("->")
            .ok_or_else(|| syntax(i, "expected `a -> b`"))?;
        let lookup = |name: &str| {
            index.get(name.trim()).copied().ok_or(FmtError::UnknownName {
                line: i + 1,
                name: name.trim().to_string(),
            })
        };
        let a = lookup(a)?;
        let b = lookup(b)?;
        assignment[a.index()] = b;
    }
    Allocation::new(h, assignment).map_err(FmtError::Allocation)
}

pub fn serialize_allocation(h: &HousingMarket, x: &Allocation) -> String {
    let mut out = String::new();
    for a in h.agents() {
        out.push_str(&format!("{} -> {}\n", h.name(a), h.name(x.get(a))));
    }
    out
}

/// Parses the `roommates v1` format: `agent` declarations followed by `list`
/// directives (same shorthand as markets, without `@self`).
pub fn parse_roommates(input: &str) -> Result<RoommatesInstance, FmtError> {
    let lines = content_lines(input);
    let mut it = lines.iter();
    match it.next() {
        Some(&(i, l)) if l != "roommates v1" => {
            return Err(syntax(i, "expected header `roommates v1`"))
        }
        None => return Err(syntax(0, "expected header `roommates v1`")),
        _ => {}
    }
    let mut table = AgentTable::new();
    let mut body: Vec<(usize, &str)> = Vec::new();
    for &(i, l) in it {
        if let Some(name) = l.strip_prefix("agent ") {
            table.declare(i, name.trim())?;
        } else {
            body.push((i, l));
        }
    }
    let n = table.names.len();
    let mut classes: Vec<Vec<Vec<AgentId>>> = vec![Vec::new(); n];
    for (i, l) in body {
        let (kw, owner_name, rest) = directive(i, l)?;
        if kw != "list" {
            return Err(syntax(i, format!("unknown directive `{kw}`")));
        }
        let owner = table.lookup(i, owner_name)?;
        classes[owner.index()] = parse_list_classes(i, owner, rest, &table)?;
        if classes[owner.index()].iter().flatten().any(|&x| x == owner) {
            return Err(syntax(i, "`@self` has no meaning in roommates lists"));
        }
    }
    Ok(RoommatesInstance::new(table.names, classes)?)
}

pub fn serialize_roommates(inst: &RoommatesInstance) -> String {
    let mut out = String::from("roommates v1\n");
    for a in inst.agents() {
        out.push_str(&format!("agent {}\n", inst.name(a)));
    }
    for a in inst.agents() {
        let cls = inst.classes(a);
        if cls.is_empty() {
            continue;
        }
        let parts: Vec<String> = cls
            .iter()
            .map(|c| {
                let names: Vec<&str> = c.iter().map(|&b| inst.name(b)).collect();
                if names.len() == 1 {
                    names[0].to_string()
                } else {
                    format!("[{}]", names.join(" "))
                }
            })
            .collect();
        out.push_str(&format!("list {} : {}\n", inst.name(a), parts.join(" > ")));
    }
    out
}

/// Matching file: lines `a -- b`; unlisted agents are single.
pub fn parse_matching(input: &str, inst: &RoommatesInstance) -> Result<Matching, FmtError> {
    let index: HashMap<&str, AgentId> = inst.agents().map(|a| (inst.name(a), a)).collect();
    let mut pairs = Vec::new();
    for (i, l) in content_lines(input) {
        let (a, b) = l
            .split_once("--")
            .ok_or_else(|| syntax(i, "expected `a -- b`"))?;
        let lookup = |name: &str| {
            index.get(name.trim()).copied().ok_or(FmtError::UnknownName {
                line: i + 1,
                name: name.trim().to_string(),
            })
        };
        pairs.push((lookup(a)?, lookup(b)?));
    }
    Ok(Matching::new(inst, &pairs)?)
}

pub fn serialize_matching(inst: &RoommatesInstance, m: &Matching) -> String {
    let mut out = String::new();
    for (a, b) in m.pairs() {
        out.push_str(&format!("{} -- {}\n", inst.name(a), inst.name(b)));
    }
    out
}

/// Digraph file: first line `n m`, then `m` lines `u v`, vertices 1-indexed.
pub fn parse_digraph(input: &str) -> Result<Digraph, FmtError> {
    let lines = content_lines(input);
    let mut it = lines.iter();
    let &(i, header) = it
        .next()
        .ok_or_else(|| syntax(0, "expected header `n m`"))?;
    let mut nums = header.split_whitespace();
    let parse_num = |tok: Option<&str>, i: usize| -> Result<usize, FmtError> {
        tok.ok_or_else(|| syntax(i, "expected two integers"))?
            .parse()
            .map_err(|_| syntax(i, "expected an integer"))
    };
    let n = parse_num(nums.next(), i)?;
    let m = parse_num(nums.next(), i)?;
    if nums.next().is_some() {
        return Err(syntax(i, "unexpected token after `n m`"));
    }
    let mut arcs = Vec::with_capacity(m);
    for _ in 0..m {
        let &(i, l) = it
            .next()
            .ok_or_else(|| syntax(i, format!("expected {m} arc lines")))?;
        let mut nums = l.split_whitespace();
        let u = parse_num(nums.next(), i)?;
        let v = parse_num(nums.next(), i)?;
        if u == 0 || v == 0 {
            return Err(syntax(i, "vertices are 1-indexed"));
        }
        arcs.push((u - 1, v - 1));
    }
    if let Some(&(i, _)) = it.next() {
        return Err(syntax(i, "trailing content after arc list"));
    }
    Digraph::new(n, arcs).map_err(FmtError::Digraph)
}

pub fn serialize_digraph(d: &Digraph) -> String {
    let mut out = format!("{} {}\n", d.n(), d.arcs().len());
    for &(u, v) in d.arcs() {
        out.push_str(&format!("{} {}\n", u + 1, v + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use coremarket_core::gen::{gen_random, PrefModel, RandomModel};

    #[test]
    fn market_round_trip() {
        for seed in 0..10 {
            for model in [
                PrefModel::Strict,
                PrefModel::Weak { tie: 0.4 },
                PrefModel::Poset { edge: 0.3 },
            ] {
                let h = gen_random(&RandomModel {
                    seed,
                    n: 6,
                    model,
                    density: 0.7,
                })
                .unwrap();
                let text = serialize_market(&h);
                let back = parse_market(&text).unwrap();
                assert_eq!(h, back, "seed {seed}");
                assert_eq!(serialize_market(&back), text);
            }
        }
    }

    #[test]
    fn list_shorthand_desugars() {
        let via_list = parse_market("market v1\nagent a\nagent b\nlist b : a > @self\n").unwrap();
        let via_poset =
            parse_market("market v1\nagent a\nagent b\naccept b : a\ncover b : @self < a\n")
                .unwrap();
        assert_eq!(via_list, via_poset);
    }

    #[test]
    fn empty_market_rejected() {
        assert!(matches!(
            parse_market("market v1\n"),
            Err(FmtError::Syntax { .. })
        ));
    }

    #[test]
    fn duplicate_agent_rejected() {
        assert!(matches!(
            parse_market("market v1\nagent a\nagent a\n"),
            Err(FmtError::DuplicateAgent { line: 3, .. })
        ));
    }

    #[test]
    fn syntax_error_carries_line() {
        let err = parse_market("market v1\nagent a\nbogus a : b\n").unwrap_err();
        match err {
            FmtError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn allocation_round_trip() {
        let h = parse_market("market v1\nagent a\nagent b\nlist a : b > @self\nlist b : a > @self\n")
            .unwrap();
        let x = parse_allocation("a -> b\nb -> a\n", &h).unwrap();
        let text = serialize_allocation(&h, &x);
        assert_eq!(parse_allocation(&text, &h).unwrap(), x);
        // Omitted agents default to their own house.
        let id = parse_allocation("", &h).unwrap();
        assert_eq!(id.get(AgentId::new(0)), AgentId::new(0));
    }

    #[test]
    fn roommates_round_trip_with_ties() {
        let text = "roommates v1\nagent a\nagent b\nagent c\nlist a : [b c]\nlist b : a\nlist c : a\n";
        let inst = parse_roommates(text).unwrap();
        assert!(inst.has_ties());
        assert_eq!(serialize_roommates(&inst), text);
    }

    #[test]
    fn matching_round_trip() {
        let inst =
            parse_roommates("roommates v1\nagent a\nagent b\nlist a : b\nlist b : a\n").unwrap();
        let m = parse_matching("a -- b\n", &inst).unwrap();
        assert_eq!(serialize_matching(&inst, &m), "a -- b\n");
    }

    #[test]
    fn digraph_round_trip() {
        let text = "3 2\n1 2\n3 1\n";
        let d = parse_digraph(text).unwrap();
        assert_eq!(d.arcs(), &[(0, 1), (2, 0)]);
        assert_eq!(serialize_digraph(&d), text);
        assert!(parse_digraph("2 1\n1 1\n").is_err()); // loop
        assert!(parse_digraph("2 2\n1 2\n").is_err()); // short
    }
}
