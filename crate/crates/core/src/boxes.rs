//! Assumption boxes: primitive boxes carrying assumptions and introduced
//! variables, and canonical composite boxes forming a join-semilattice.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::Justification;
use crate::term::{logic, Name, Term, Type};

/// A composite box: a sorted set of primitive indices in which no member
/// is an ancestor of another member.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct BoxSet(Vec<u32>);

impl BoxSet {
    pub fn empty() -> BoxSet {
        BoxSet(Vec::new())
    }

    pub fn single(i: u32) -> BoxSet {
        BoxSet(vec![i])
    }

    pub fn members(&self) -> &[u32] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: u32) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn without(&self, i: u32) -> BoxSet {
        BoxSet(self.0.iter().copied().filter(|&j| j != i).collect())
    }

    /// Build from raw indices without canonicalizing; for tests and parsers.
    pub fn raw(mut v: Vec<u32>) -> BoxSet {
        v.sort_unstable();
        v.dedup();
        BoxSet(v)
    }
}

impl fmt::Display for BoxSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for BoxSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Fixed-width bitset of primitive indices.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Closure(Vec<u64>);

impl Closure {
    fn insert(&mut self, i: u32) {
        let (w, b) = ((i / 64) as usize, i % 64);
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    pub fn contains(&self, i: u32) -> bool {
        let (w, b) = ((i / 64) as usize, i % 64);
        self.0.get(w).is_some_and(|x| x & (1 << b) != 0)
    }

    fn union_with(&mut self, other: &Closure) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &Closure) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(k, w)| w & !other.0.get(k).copied().unwrap_or(0) == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(k, w)| {
            (0..64).filter(move |b| w & (1u64 << b) != 0).map(move |b| (k * 64 + b) as u32)
        })
    }
}

#[derive(Clone, Debug)]
pub struct PrimitiveBox {
    pub index: u32,
    pub parent: BoxSet,
    pub assumptions: Vec<Term>,
    pub vars: Vec<(Name, Type)>,
    closure: Closure,
}

impl PrimitiveBox {
    pub fn has_var(&self, name: &str) -> Option<&Type> {
        self.vars.iter().find(|(n, _)| &**n == name).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoxError {
    #[error("box {0} does not exist")]
    UnknownBox(String),
    #[error("a primitive box needs assumptions or variables")]
    EmptyBox,
    #[error("resolution of the empty box: the theory is inconsistent")]
    EmptyBoxResolution,
}

/// Registry of primitive boxes; indices are assigned consecutively.
#[derive(Clone, Debug, Default)]
pub struct BoxRegistry {
    prims: Vec<PrimitiveBox>,
}

impl BoxRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.prims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn get(&self, i: u32) -> Option<&PrimitiveBox> {
        self.prims.get(i as usize)
    }

    pub fn prims(&self) -> &[PrimitiveBox] {
        &self.prims
    }

    pub fn new_primitive(
        &mut self,
        parent: &BoxSet,
        assumptions: Vec<Term>,
        vars: Vec<(Name, Type)>,
    ) -> Result<u32, BoxError> {
        if assumptions.is_empty() && vars.is_empty() {
            return Err(BoxError::EmptyBox);
        }
        let index = self.prims.len() as u32;
        let mut closure = self.closure(parent)?;
        closure.insert(index);
        self.prims.push(PrimitiveBox {
            index,
            parent: parent.clone(),
            assumptions,
            vars,
            closure,
        });
        Ok(index)
    }

    /// All primitive indices whose assumptions a box inherits.
    pub fn closure(&self, b: &BoxSet) -> Result<Closure, BoxError> {
        let mut c = Closure::default();
        for &i in b.members() {
            let p = self.get(i).ok_or_else(|| BoxError::UnknownBox(b.to_string()))?;
            c.union_with(&p.closure);
        }
        Ok(c)
    }

    fn prim_closure(&self, i: u32) -> &Closure {
        &self.prims[i as usize].closure
    }

    /// Drop members that are ancestors of other members. Panics on unknown
    /// indices.
    pub fn canonical(&self, raw: impl IntoIterator<Item = u32>) -> BoxSet {
        let mut v: Vec<u32> = raw.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        let keep: Vec<u32> = v
            .iter()
            .copied()
            .filter(|&i| !v.iter().any(|&j| j != i && self.prim_closure(j).contains(i)))
            .collect();
        BoxSet(keep)
    }

    pub fn merge(&self, a: &BoxSet, b: &BoxSet) -> BoxSet {
        if a.is_empty() || a == b {
            return b.clone();
        }
        if b.is_empty() {
            return a.clone();
        }
        self.canonical(a.members().iter().chain(b.members()).copied())
    }

    pub fn merge_all<'a>(&self, boxes: impl IntoIterator<Item = &'a BoxSet>) -> BoxSet {
        boxes.into_iter().fold(BoxSet::empty(), |acc, b| self.merge(&acc, b))
    }

    pub fn leq(&self, a: &BoxSet, b: &BoxSet) -> bool {
        if a.is_empty() || a == b {
            return true;
        }
        a.members()
            .iter()
            .all(|&i| b.members().iter().any(|&j| self.prim_closure(j).contains(i)))
    }

    /// Assumptions visible in a box, in closure order.
    pub fn assumptions(&self, b: &BoxSet) -> Vec<Term> {
        let c = self.closure(b).unwrap_or_default();
        c.iter().flat_map(|i| self.prims[i as usize].assumptions.iter().cloned()).collect()
    }

    /// Number of primitive boxes in the closure other than box 0.
    pub fn depth_beyond_root(&self, b: &BoxSet) -> usize {
        let c = self.closure(b).unwrap_or_default();
        c.len() - usize::from(c.contains(0))
    }

    /// Target box of exporting the negated assumptions of member `i`.
    pub fn export_target(&self, b: &BoxSet, i: u32) -> BoxSet {
        let parent = self.prims[i as usize].parent.clone();
        self.merge(&parent, &b.without(i))
    }

    /// The proposition exported when box `i` is resolved.
    pub fn negated_assumptions(&self, i: u32) -> Term {
        let hs = &self.prims[i as usize].assumptions;
        match hs.as_slice() {
            [] => logic::mk_false(),
            [h] => logic::neg(h),
            _ => logic::mk_disj(&hs.iter().map(logic::neg).collect::<Vec<_>>()),
        }
    }

    pub fn parse_box(&self, s: &str) -> Result<BoxSet, BoxError> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| BoxError::UnknownBox(s.into()))?;
        let mut v = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let i: u32 = part.parse().map_err(|_| BoxError::UnknownBox(s.into()))?;
            if self.get(i).is_none() {
                return Err(BoxError::UnknownBox(s.into()));
            }
            v.push(i);
        }
        Ok(self.canonical(v))
    }
}

/// Result of resolving a box in which `False` was derived.
#[derive(Debug, Clone)]
pub enum Resolution {
    /// `False` holds in `{0}`: the goal is proved. Carries the discharged
    /// negation of box 0's assumptions, which holds in `{}`.
    Proved(Justification),
    /// `False` holds in `{}`: the theory itself is inconsistent.
    Inconsistent(Justification),
    /// Negated assumptions exported towards the parents, one per member.
    Exports(Vec<(Justification, BoxSet)>),
}

/// Resolve box `b` given a justification of `False` in a box below `b`.
/// Each export carries a `Resolved` justification (or an induction
/// discharge when the contradiction used an induction hypothesis of the
/// resolved member).
pub fn resolve(reg: &BoxRegistry, b: &BoxSet, contradiction: &Justification) -> Resolution {
    if b.is_empty() {
        return Resolution::Inconsistent(contradiction.clone());
    }
    if b.members() == [0] {
        return Resolution::Proved(crate::kernel::discharge_box(reg, 0, contradiction));
    }
    let mut out = Vec::new();
    for &i in b.members() {
        let j = crate::kernel::discharge_box(reg, i, contradiction);
        let target = reg.export_target(b, i);
        out.push((j, target));
    }
    Resolution::Exports(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg_chain() -> BoxRegistry {
        let mut r = BoxRegistry::new();
        let t = logic::mk_true();
        r.new_primitive(&BoxSet::empty(), vec![t.clone()], vec![]).unwrap();
        r.new_primitive(&BoxSet::single(0), vec![t.clone()], vec![]).unwrap();
        r.new_primitive(&BoxSet::single(1), vec![t], vec![]).unwrap();
        r
    }

    #[test]
    fn new_primitive_indices() {
        let r = reg_chain();
        assert_eq!(r.len(), 3);
        assert_eq!(r.get(2).unwrap().parent, BoxSet::single(1));
        let mut r2 = BoxRegistry::new();
        assert_eq!(r2.new_primitive(&BoxSet::empty(), vec![], vec![]), Err(BoxError::EmptyBox));
    }

    #[test]
    fn merge_absorbs_ancestors() {
        let r = reg_chain();
        let b0 = BoxSet::single(0);
        let b1 = BoxSet::single(1);
        assert_eq!(r.merge(&b0, &b1), b1);
        assert_eq!(r.merge(&b1, &BoxSet::empty()), b1);
        assert!(r.leq(&b0, &b1));
        assert!(!r.leq(&b1, &b0));
        assert!(r.leq(&b1, &b1));
    }

    #[test]
    fn display_and_parse() {
        let r = reg_chain();
        assert_eq!(BoxSet::single(1).to_string(), "{1}");
        assert_eq!(BoxSet::empty().to_string(), "{}");
        assert_eq!(r.parse_box("{0,1}").unwrap(), BoxSet::single(1));
        assert!(r.parse_box("{7}").is_err());
    }

    #[test]
    fn export_target_is_parent() {
        let r = reg_chain();
        assert_eq!(r.export_target(&BoxSet::single(2), 2), BoxSet::single(1));
        assert_eq!(r.depth_beyond_root(&BoxSet::single(2)), 2);
        assert_eq!(r.depth_beyond_root(&BoxSet::single(0)), 0);
    }
}
