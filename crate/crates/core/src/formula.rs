//! Formula trees over `{p_i, false, &, |, ->, <>, []}`.
//!
//! Formulas are immutable and reference counted, so repeated subformulas can
//! be shared. Every node caches its length, modal depth, positivity and a
//! structural hash; those values are always those of the fully unfolded tree.
//! Traversals that would otherwise revisit shared nodes (substitution,
//! variable collection, equality) walk the DAG once per distinct node.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Index of a propositional variable; `p1` has index 1.
pub type VarIndex = u32;

#[derive(Clone)]
pub struct Formula(Arc<Node>);

struct Node {
    kind: Kind,
    len: u64,
    depth: u32,
    positive: bool,
    hash: u64,
}

// Long chains would otherwise be freed by recursion through `Arc`.
impl Drop for Node {
    fn drop(&mut self) {
        let mut stack = Vec::new();
        take_children(&mut self.kind, &mut stack);
        while let Some(Formula(arc)) = stack.pop() {
            if let Ok(mut node) = Arc::try_unwrap(arc) {
                take_children(&mut node.kind, &mut stack);
            }
        }
    }
}

fn take_children(kind: &mut Kind, stack: &mut Vec<Formula>) {
    match std::mem::replace(kind, Kind::Bottom) {
        Kind::Var(_) | Kind::Bottom => {}
        Kind::Diamond(a) | Kind::Box(a) => stack.push(a),
        Kind::And(a, b) | Kind::Or(a, b) | Kind::Implies(a, b) => {
            stack.push(a);
            stack.push(b);
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum Kind {
    Var(VarIndex),
    Bottom,
    And(Formula, Formula),
    Or(Formula, Formula),
    Implies(Formula, Formula),
    Diamond(Formula),
    Box(Formula),
}

/// Symbol cost of an occurrence of `p_index`: one for the letter plus the
/// bits of the index written in binary.
pub fn var_length(index: VarIndex) -> u64 {
    1 + u64::from(VarIndex::BITS - index.leading_zeros())
}

fn mix(mut h: u64) -> u64 {
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn combine(tag: u64, a: u64, b: u64) -> u64 {
    mix(mix(tag.wrapping_add(a.rotate_left(17))).wrapping_add(b.rotate_left(41)))
}

impl Formula {
    fn from_kind(kind: Kind) -> Formula {
        let (len, depth, positive, hash) = match &kind {
            Kind::Var(i) => (var_length(*i), 0, true, combine(1, u64::from(*i), 0)),
            Kind::Bottom => (1, 0, false, combine(2, 0, 0)),
            Kind::And(a, b) | Kind::Or(a, b) | Kind::Implies(a, b) => {
                let tag = match &kind {
                    Kind::And(..) => 3,
                    Kind::Or(..) => 4,
                    _ => 5,
                };
                (
                    a.length().saturating_add(b.length()).saturating_add(1),
                    a.mdepth().max(b.mdepth()),
                    a.is_positive() && b.is_positive(),
                    combine(tag, a.0.hash, b.0.hash),
                )
            }
            Kind::Diamond(a) | Kind::Box(a) => {
                let tag = if matches!(kind, Kind::Diamond(_)) { 6 } else { 7 };
                (
                    a.length().saturating_add(1),
                    a.mdepth() + 1,
                    a.is_positive(),
                    combine(tag, a.0.hash, 0),
                )
            }
        };
        Formula(Arc::new(Node { kind, len, depth, positive, hash }))
    }

    /// The variable `p_index`.
    ///
    /// Panics if `index` is zero; variables are numbered from 1.
    pub fn var(index: VarIndex) -> Formula {
        assert!(index >= 1, "variable indices start at 1");
        Formula::from_kind(Kind::Var(index))
    }

    pub fn bottom() -> Formula {
        Formula::from_kind(Kind::Bottom)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::from_kind(Kind::And(a, b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::from_kind(Kind::Or(a, b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::from_kind(Kind::Implies(a, b))
    }

    pub fn diamond(a: Formula) -> Formula {
        Formula::from_kind(Kind::Diamond(a))
    }

    pub fn boxed(a: Formula) -> Formula {
        Formula::from_kind(Kind::Box(a))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Number of symbols of the unfolded formula. Connectives and `false`
    /// count one each, `p_i` counts [`var_length`]`(i)`. Saturates at
    /// `u64::MAX`.
    pub fn length(&self) -> u64 {
        self.0.len
    }

    /// Maximal nesting of `<>` and `[]`.
    pub fn mdepth(&self) -> u32 {
        self.0.depth
    }

    /// True iff `false` does not occur.
    pub fn is_positive(&self) -> bool {
        self.0.positive
    }

    pub fn ptr_eq(&self, other: &Formula) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Identity of the shared node, stable for as long as the formula lives.
    pub(crate) fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn children(&self) -> impl Iterator<Item = &Formula> {
        let (a, b) = match &self.0.kind {
            Kind::Var(_) | Kind::Bottom => (None, None),
            Kind::Diamond(a) | Kind::Box(a) => (Some(a), None),
            Kind::And(a, b) | Kind::Or(a, b) | Kind::Implies(a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }

    /// Distinct nodes of the DAG, children before parents.
    pub fn dag_postorder(&self) -> Vec<Formula> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![(self.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                out.push(node);
                continue;
            }
            if !seen.insert(node.node_id()) {
                continue;
            }
            stack.push((node.clone(), true));
            for child in node.children() {
                if !seen.contains(&child.node_id()) {
                    stack.push((child.clone(), false));
                }
            }
        }
        out
    }

    /// Number of distinct shared nodes.
    pub fn dag_size(&self) -> usize {
        self.dag_postorder().len()
    }

    pub fn varset(&self) -> VarSet {
        let vars = self
            .dag_postorder()
            .iter()
            .filter_map(|n| match n.kind() {
                Kind::Var(i) => Some(*i),
                _ => None,
            })
            .collect();
        VarSet(vars)
    }

    /// Simultaneous substitution of `bindings[i]` for every `p_i`.
    pub fn substitute(&self, bindings: &BTreeMap<VarIndex, Formula>) -> Formula {
        if bindings.is_empty() {
            return self.clone();
        }
        self.rebuild(|kind| match kind {
            Kind::Var(i) => bindings.get(i).cloned(),
            _ => None,
        })
    }

    /// `[with / false] self`: every occurrence of `false` replaced by `with`.
    pub fn replace_bottom(&self, with: &Formula) -> Formula {
        self.rebuild(|kind| match kind {
            Kind::Bottom => Some(with.clone()),
            _ => None,
        })
    }

    /// Rebuilds the DAG bottom-up, replacing leaves for which `leaf` returns
    /// a formula. Untouched subtrees keep their original sharing.
    fn rebuild(&self, leaf: impl Fn(&Kind) -> Option<Formula>) -> Formula {
        let mut done: HashMap<usize, Formula> = HashMap::new();
        for node in self.dag_postorder() {
            let get = |f: &Formula| done[&f.node_id()].clone();
            let new = match node.kind() {
                k @ (Kind::Var(_) | Kind::Bottom) => leaf(k).unwrap_or_else(|| node.clone()),
                Kind::And(a, b) => rebuild_binary(&node, get(a), get(b), a, b, Formula::and),
                Kind::Or(a, b) => rebuild_binary(&node, get(a), get(b), a, b, Formula::or),
                Kind::Implies(a, b) => {
                    rebuild_binary(&node, get(a), get(b), a, b, Formula::implies)
                }
                Kind::Diamond(a) => {
                    let na = get(a);
                    if na.ptr_eq(a) { node.clone() } else { Formula::diamond(na) }
                }
                Kind::Box(a) => {
                    let na = get(a);
                    if na.ptr_eq(a) { node.clone() } else { Formula::boxed(na) }
                }
            };
            done.insert(node.node_id(), new);
        }
        done.remove(&self.node_id()).expect("root is visited last")
    }
}

fn rebuild_binary(
    node: &Formula,
    na: Formula,
    nb: Formula,
    a: &Formula,
    b: &Formula,
    make: fn(Formula, Formula) -> Formula,
) -> Formula {
    if na.ptr_eq(a) && nb.ptr_eq(b) {
        node.clone()
    } else {
        make(na, nb)
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Formula) -> bool {
        // Pairs already known equal are skipped, so shared DAGs compare in
        // time proportional to the number of distinct node pairs.
        let mut checked: HashSet<(usize, usize)> = HashSet::new();
        let mut stack = vec![(self.clone(), other.clone())];
        while let Some((a, b)) = stack.pop() {
            if a.ptr_eq(&b) {
                continue;
            }
            if a.0.hash != b.0.hash || a.0.len != b.0.len || a.0.depth != b.0.depth {
                return false;
            }
            if !checked.insert((a.node_id(), b.node_id())) {
                continue;
            }
            match (a.kind(), b.kind()) {
                (Kind::Var(i), Kind::Var(j)) if i == j => {}
                (Kind::Bottom, Kind::Bottom) => {}
                (Kind::And(a1, a2), Kind::And(b1, b2))
                | (Kind::Or(a1, a2), Kind::Or(b1, b2))
                | (Kind::Implies(a1, a2), Kind::Implies(b1, b2)) => {
                    stack.push((a1.clone(), b1.clone()));
                    stack.push((a2.clone(), b2.clone()));
                }
                (Kind::Diamond(x), Kind::Diamond(y)) | (Kind::Box(x), Kind::Box(y)) => {
                    stack.push((x.clone(), y.clone()));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Var(i) => write!(f, "Var({i})"),
            Kind::Bottom => write!(f, "Bottom"),
            Kind::And(a, b) => write!(f, "And({a}, {b})"),
            Kind::Or(a, b) => write!(f, "Or({a}, {b})"),
            Kind::Implies(a, b) => write!(f, "Implies({a}, {b})"),
            Kind::Diamond(a) => write!(f, "Diamond({a})"),
            Kind::Box(a) => write!(f, "Box({a})"),
        }
    }
}

/// The set of variable indices occurring in a formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet(BTreeSet<VarIndex>);

impl VarSet {
    pub fn contains(&self, index: VarIndex) -> bool {
        self.0.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ascending.
    pub fn iter(&self) -> impl Iterator<Item = VarIndex> + '_ {
        self.0.iter().copied()
    }

    pub fn max(&self) -> Option<VarIndex> {
        self.0.last().copied()
    }

    /// Least index `>= 1` not in the set.
    pub fn first_unused(&self) -> VarIndex {
        (1..).find(|i| !self.0.contains(i)).expect("finite set")
    }
}

impl FromIterator<VarIndex> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarIndex>>(iter: I) -> Self {
        VarSet(iter.into_iter().collect())
    }
}

/// `psi | (<>psi | (... | <>^m psi))`.
pub fn diamond_chain_le(m: u32, psi: &Formula) -> Formula {
    modal_chain(m, psi, Formula::diamond, Formula::or)
}

/// `psi & ([]psi & (... & []^m psi))`.
pub fn box_chain_le(m: u32, psi: &Formula) -> Formula {
    modal_chain(m, psi, Formula::boxed, Formula::and)
}

fn modal_chain(
    m: u32,
    psi: &Formula,
    modality: fn(Formula) -> Formula,
    join: fn(Formula, Formula) -> Formula,
) -> Formula {
    let mut powers = Vec::with_capacity(m as usize + 1);
    powers.push(psi.clone());
    for _ in 0..m {
        let last = powers.last().expect("nonempty").clone();
        powers.push(modality(last));
    }
    let mut acc = powers.pop().expect("nonempty");
    while let Some(next) = powers.pop() {
        acc = join(next, acc);
    }
    acc
}

/// Left-associated conjunction `((a1 & a2) & a3) ...`; `None` when empty.
pub fn conj_left(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    items.into_iter().reduce(Formula::and)
}

/// Left-associated disjunction; `None` when empty.
pub fn disj_left(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    items.into_iter().reduce(Formula::or)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u32) -> Formula {
        Formula::var(i)
    }

    #[test]
    fn modal_depth() {
        assert_eq!(p(1).mdepth(), 0);
        let f = Formula::implies(Formula::diamond(p(1)), Formula::boxed(Formula::boxed(p(1))));
        assert_eq!(f.mdepth(), 2);
        assert_eq!(Formula::diamond(p(1)).mdepth(), 1);
    }

    #[test]
    fn variables() {
        assert!(Formula::bottom().varset().is_empty());
        let f = Formula::and(p(1), p(3));
        assert_eq!(f.varset().iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(f.varset().first_unused(), 2);
    }

    #[test]
    fn lengths() {
        assert_eq!(Formula::bottom().length(), 1);
        assert_eq!(Formula::implies(p(1), p(1)).length(), 5);
        assert_eq!(Formula::diamond(p(1)).length(), 3);
        assert_eq!(var_length(1), 2);
        assert_eq!(var_length(2), 3);
        assert_eq!(var_length(3), 3);
        assert_eq!(var_length(4), 4);
        assert_eq!(var_length(7), 4);
        assert_eq!(var_length(8), 5);
    }

    #[test]
    fn substitution() {
        let f = Formula::implies(p(1), p(1));
        let b = BTreeMap::from([(1, Formula::bottom())]);
        assert_eq!(f.substitute(&b), Formula::implies(Formula::bottom(), Formula::bottom()));

        let g = Formula::and(p(1), p(2));
        let b = BTreeMap::from([(1, p(2))]);
        assert_eq!(g.substitute(&b), Formula::and(p(2), p(2)));

        // simultaneous, not sequential
        let b = BTreeMap::from([(1, p(2)), (2, p(1))]);
        assert_eq!(g.substitute(&b), Formula::and(p(2), p(1)));

        assert!(g.substitute(&BTreeMap::new()).ptr_eq(&g));
    }

    #[test]
    fn positivity() {
        assert!(!Formula::bottom().is_positive());
        assert!(Formula::implies(p(1), Formula::diamond(p(1))).is_positive());
        let f = Formula::and(Formula::diamond(Formula::bottom()), p(1));
        assert!(!f.is_positive());
        assert!(f.replace_bottom(&p(2)).is_positive());
    }

    #[test]
    fn chains() {
        let f = p(1);
        assert_eq!(diamond_chain_le(0, &f), f);
        assert_eq!(box_chain_le(0, &f), f);
        let expected = Formula::and(
            f.clone(),
            Formula::and(Formula::boxed(f.clone()), Formula::boxed(Formula::boxed(f.clone()))),
        );
        assert_eq!(box_chain_le(2, &f), expected);
        for m in 0..6 {
            assert_eq!(diamond_chain_le(m, &f).mdepth(), m);
            assert_eq!(box_chain_le(m, &f).mdepth(), m);
        }
    }

    #[test]
    fn independently_built_dags_compare_equal() {
        let build = || {
            let mut f = p(1);
            for _ in 0..40 {
                f = Formula::and(f.clone(), f);
            }
            f
        };
        let (a, b) = (build(), build());
        assert!(!a.ptr_eq(&b));
        assert_eq!(a, b);
        assert_eq!(a.dag_size(), 41);
        assert_eq!(a.length(), (1u64 << 40) * 2 + (1u64 << 40) - 1);
        assert_ne!(a, Formula::or(p(1), p(1)));
    }
}
