//! Finite FS- and MIPC-models and the truth relation on them.
//!
//! A frame is a partial order of worlds; each world `w` carries a set of
//! points `Δ_w` and an accessibility relation `S_w` on it, both growing
//! along the order. Points are global, so `Δ_w ⊆ Δ_v` is plain inclusion of
//! point ids. Worlds and points are dense indices; names are kept only for
//! printing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::formula::{Formula, Kind, VarIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum LogicKind {
    #[default]
    Fs,
    Mipc,
}

impl fmt::Display for LogicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicKind::Fs => "fs",
            LogicKind::Mipc => "mipc",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    kind: LogicKind,
    world_names: Vec<String>,
    point_names: Vec<String>,
    /// `above[w]` is `R(w)`, reflexive and transitive.
    above: Vec<FixedBitSet>,
    domain: Vec<FixedBitSet>,
    /// `access[w][x]` is `S_w(x)`.
    access: Vec<Vec<FixedBitSet>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteFSModel {
    frame: Frame,
    /// Per world, the points satisfying each variable. Absent means empty.
    valuation: Vec<BTreeMap<VarIndex, FixedBitSet>>,
}

/// Raw frame data by index; `order` pairs are closed reflexively and
/// transitively on construction.
#[derive(Clone, Debug, Default)]
pub struct FrameParts {
    pub kind: LogicKind,
    pub world_names: Vec<String>,
    pub point_names: Vec<String>,
    pub order: Vec<(usize, usize)>,
    pub domain: Vec<Vec<usize>>,
    pub access: Vec<Vec<(usize, usize)>>,
}

impl Frame {
    pub fn from_parts(parts: FrameParts) -> Frame {
        let n = parts.world_names.len();
        let m = parts.point_names.len();
        let mut above: Vec<FixedBitSet> = (0..n)
            .map(|w| {
                let mut s = FixedBitSet::with_capacity(n);
                s.insert(w);
                s
            })
            .collect();
        for &(a, b) in &parts.order {
            above[a].insert(b);
        }
        for k in 0..n {
            let via = above[k].clone();
            for row in above.iter_mut() {
                if row.contains(k) {
                    row.union_with(&via);
                }
            }
        }
        let mut domain = vec![FixedBitSet::with_capacity(m); n];
        for (w, pts) in parts.domain.iter().enumerate() {
            for &x in pts {
                domain[w].insert(x);
            }
        }
        let mut access = vec![vec![FixedBitSet::with_capacity(m); m]; n];
        for (w, pairs) in parts.access.iter().enumerate() {
            for &(x, y) in pairs {
                access[w][x].insert(y);
            }
        }
        Frame {
            kind: parts.kind,
            world_names: parts.world_names,
            point_names: parts.point_names,
            above,
            domain,
            access,
        }
    }

    pub fn kind(&self) -> LogicKind {
        self.kind
    }

    /// The same frame read as a frame of another logic. Validation decides
    /// whether it qualifies.
    pub fn with_kind(mut self, kind: LogicKind) -> Frame {
        self.kind = kind;
        self
    }

    pub fn num_worlds(&self) -> usize {
        self.world_names.len()
    }

    pub fn num_points(&self) -> usize {
        self.point_names.len()
    }

    pub fn world_name(&self, w: usize) -> &str {
        &self.world_names[w]
    }

    pub fn point_name(&self, x: usize) -> &str {
        &self.point_names[x]
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.world_names.iter().position(|n| n == name)
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.point_names.iter().position(|n| n == name)
    }

    /// `w R v`.
    pub fn le(&self, w: usize, v: usize) -> bool {
        self.above[w].contains(v)
    }

    /// `R(w)`, including `w`.
    pub fn above(&self, w: usize) -> &FixedBitSet {
        &self.above[w]
    }

    /// `Δ_w`.
    pub fn domain(&self, w: usize) -> &FixedBitSet {
        &self.domain[w]
    }

    /// `S_w(x)`.
    pub fn access(&self, w: usize, x: usize) -> &FixedBitSet {
        &self.access[w][x]
    }

    /// Checks every frame condition; an empty list means the frame is a
    /// valid frame of its kind.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.num_worlds();
        let wn = |w: usize| self.world_names[w].clone();
        let pn = |x: usize| self.point_names[x].clone();
        if n == 0 {
            out.push(Violation::NoWorlds);
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.le(a, b) && self.le(b, a) {
                    out.push(Violation::Antisymmetry { a: wn(a), b: wn(b) });
                }
            }
        }
        for w in 0..n {
            if self.domain[w].is_clear() {
                out.push(Violation::EmptyPointSet { world: wn(w) });
            }
            for x in 0..self.num_points() {
                for y in self.access[w][x].ones() {
                    if !self.domain[w].contains(x) || !self.domain[w].contains(y) {
                        out.push(Violation::RelationOutsidePointSet {
                            world: wn(w),
                            from: pn(x),
                            to: pn(y),
                        });
                    }
                }
            }
            if self.kind == LogicKind::Mipc {
                for x in self.domain[w].ones() {
                    for y in self.domain[w].ones() {
                        if !self.access[w][x].contains(y) {
                            out.push(Violation::MipcTotality { world: wn(w), from: pn(x), to: pn(y) });
                        }
                    }
                }
            }
        }
        for w in 0..n {
            for v in self.above[w].ones().filter(|&v| v != w) {
                for x in self.domain[w].difference(&self.domain[v]) {
                    out.push(Violation::PointSetMonotonicity { lower: wn(w), upper: wn(v), point: pn(x) });
                }
                for x in 0..self.num_points() {
                    for y in self.access[w][x].difference(&self.access[v][x]) {
                        out.push(Violation::RelationMonotonicity {
                            lower: wn(w),
                            upper: wn(v),
                            from: pn(x),
                            to: pn(y),
                        });
                    }
                }
            }
        }
        out
    }
}

impl FiniteFSModel {
    /// Pairs a frame with a valuation given as `(world, variable, point)`
    /// memberships.
    pub fn new(frame: Frame, memberships: impl IntoIterator<Item = (usize, VarIndex, usize)>) -> FiniteFSModel {
        let m = frame.num_points();
        let mut valuation = vec![BTreeMap::new(); frame.num_worlds()];
        for (w, var, x) in memberships {
            valuation[w]
                .entry(var)
                .or_insert_with(|| FixedBitSet::with_capacity(m))
                .insert(x);
        }
        FiniteFSModel { frame, valuation }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn kind(&self) -> LogicKind {
        self.frame.kind
    }

    /// The same model read as a model of another logic.
    pub fn with_kind(mut self, kind: LogicKind) -> FiniteFSModel {
        self.frame = self.frame.with_kind(kind);
        self
    }

    /// `x ∈ V(w, p_var)`.
    pub fn holds_var(&self, w: usize, var: VarIndex, x: usize) -> bool {
        self.valuation[w].get(&var).is_some_and(|s| s.contains(x))
    }

    /// Variables with a nonempty extension somewhere, ascending.
    pub fn valued_vars(&self) -> Vec<VarIndex> {
        let mut vars: Vec<VarIndex> = self
            .valuation
            .iter()
            .flat_map(|m| m.iter().filter(|(_, s)| !s.is_clear()).map(|(v, _)| *v))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// `V(w, p_var)` as a point set.
    pub fn extension(&self, w: usize, var: VarIndex) -> FixedBitSet {
        self.valuation[w]
            .get(&var)
            .cloned()
            .unwrap_or_else(|| FixedBitSet::with_capacity(self.frame.num_points()))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.frame.validate();
        let f = &self.frame;
        for w in 0..f.num_worlds() {
            for (&var, set) in &self.valuation[w] {
                for x in set.difference(&f.domain[w]) {
                    out.push(Violation::ValuationOutsidePointSet {
                        world: f.world_names[w].clone(),
                        var,
                        point: f.point_names[x].clone(),
                    });
                }
                for v in f.above[w].ones().filter(|&v| v != w) {
                    let upper = self.extension(v, var);
                    for x in set.difference(&upper) {
                        out.push(Violation::ValuationMonotonicity {
                            lower: f.world_names[w].clone(),
                            upper: f.world_names[v].clone(),
                            var,
                            point: f.point_names[x].clone(),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoWorlds,
    Antisymmetry { a: String, b: String },
    EmptyPointSet { world: String },
    RelationOutsidePointSet { world: String, from: String, to: String },
    MipcTotality { world: String, from: String, to: String },
    PointSetMonotonicity { lower: String, upper: String, point: String },
    RelationMonotonicity { lower: String, upper: String, from: String, to: String },
    ValuationOutsidePointSet { world: String, var: VarIndex, point: String },
    ValuationMonotonicity { lower: String, upper: String, var: VarIndex, point: String },
}

impl Violation {
    /// Short name of the violated condition.
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::NoWorlds => "nonempty world set",
            Violation::Antisymmetry { .. } => "antisymmetry",
            Violation::EmptyPointSet { .. } => "nonempty point set",
            Violation::RelationOutsidePointSet { .. } => "relation within point set",
            Violation::MipcTotality { .. } => "MIPC totality",
            Violation::PointSetMonotonicity { .. } => "point-set monotonicity",
            Violation::RelationMonotonicity { .. } => "relation monotonicity",
            Violation::ValuationOutsidePointSet { .. } => "valuation within point set",
            Violation::ValuationMonotonicity { .. } => "valuation monotonicity",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.condition())?;
        match self {
            Violation::NoWorlds => write!(f, "model has no worlds"),
            Violation::Antisymmetry { a, b } => write!(f, "{a} <= {b} and {b} <= {a}"),
            Violation::EmptyPointSet { world } => write!(f, "world {world} has no points"),
            Violation::RelationOutsidePointSet { world, from, to } => {
                write!(f, "pair ({from},{to}) of S at {world} leaves the point set")
            }
            Violation::MipcTotality { world, from, to } => {
                write!(f, "pair ({from},{to}) missing from S at {world}")
            }
            Violation::PointSetMonotonicity { lower, upper, point } => {
                write!(f, "{lower} <= {upper} but point {point} is lost")
            }
            Violation::RelationMonotonicity { lower, upper, from, to } => {
                write!(f, "{lower} <= {upper} but pair ({from},{to}) of S is lost")
            }
            Violation::ValuationOutsidePointSet { world, var, point } => {
                write!(f, "p{var} holds at {point} in {world}, which is not a point of {world}")
            }
            Violation::ValuationMonotonicity { lower, upper, var, point } => {
                write!(f, "{lower} <= {upper} but p{var} at {point} is lost")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("no world with index {0}")]
    NoSuchWorld(usize),
    #[error("point {point} is not in the point set of world {world}")]
    PointNotInWorld { world: String, point: String },
    #[error("frame admits more than {budget} valuations")]
    TooManyValuations { budget: u64 },
    #[error("formula uses p{var} but the valuation bound is {bound}")]
    VariableOutOfBound { var: VarIndex, bound: u32 },
}

/// Memoizing evaluator: the truth set of each distinct subformula is computed
/// once, as a point set per world.
pub struct Evaluator<'m> {
    model: &'m FiniteFSModel,
    // The formula clone keeps the node alive so its id stays unique.
    cache: HashMap<usize, (Formula, Vec<FixedBitSet>)>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m FiniteFSModel) -> Self {
        Evaluator { model, cache: HashMap::new() }
    }

    /// `{x ∈ Δ_w : M, w, x ⊨ φ}` for every world `w`.
    pub fn truth_sets(&mut self, phi: &Formula) -> &[FixedBitSet] {
        if !self.cache.contains_key(&phi.node_id()) {
            for node in phi.dag_postorder() {
                if self.cache.contains_key(&node.node_id()) {
                    continue;
                }
                let sets = self.step(&node);
                self.cache.insert(node.node_id(), (node, sets));
            }
        }
        &self.cache[&phi.node_id()].1
    }

    pub fn eval(&mut self, w: usize, x: usize, phi: &Formula) -> Result<bool, SemanticsError> {
        check_point(self.model.frame(), w, x)?;
        Ok(self.truth_sets(phi)[w].contains(x))
    }

    fn step(&self, node: &Formula) -> Vec<FixedBitSet> {
        let f = self.model.frame();
        let n = f.num_worlds();
        let sub = |g: &Formula| &self.cache[&g.node_id()].1;
        match node.kind() {
            Kind::Var(i) => (0..n)
                .map(|w| {
                    let mut s = self.model.extension(w, *i);
                    s.intersect_with(&f.domain[w]);
                    s
                })
                .collect(),
            Kind::Bottom => vec![FixedBitSet::with_capacity(f.num_points()); n],
            Kind::And(a, b) => {
                let (a, b) = (sub(a), sub(b));
                (0..n).map(|w| &a[w] & &b[w]).collect()
            }
            Kind::Or(a, b) => {
                let (a, b) = (sub(a), sub(b));
                (0..n).map(|w| &a[w] | &b[w]).collect()
            }
            Kind::Implies(a, b) => {
                let (a, b) = (sub(a), sub(b));
                let bad: Vec<FixedBitSet> = (0..n).map(|v| a[v].difference(&b[v]).collect()).collect();
                (0..n)
                    .map(|w| {
                        let mut s = f.domain[w].clone();
                        for v in f.above[w].ones() {
                            s.difference_with(&bad[v]);
                        }
                        s
                    })
                    .collect()
            }
            Kind::Diamond(a) => {
                let a = sub(a);
                (0..n)
                    .map(|w| {
                        f.domain[w]
                            .ones()
                            .filter(|&x| !f.access[w][x].is_disjoint(&a[w]))
                            .collect_with(f.num_points())
                    })
                    .collect()
            }
            Kind::Box(a) => {
                let a = sub(a);
                let good: Vec<FixedBitSet> = (0..n)
                    .map(|v| {
                        (0..f.num_points())
                            .filter(|&x| f.access[v][x].is_subset(&a[v]))
                            .collect_with(f.num_points())
                    })
                    .collect();
                (0..n)
                    .map(|w| {
                        let mut s = f.domain[w].clone();
                        for v in f.above[w].ones() {
                            s.intersect_with(&good[v]);
                        }
                        s
                    })
                    .collect()
            }
        }
    }
}

trait CollectWith {
    fn collect_with(self, capacity: usize) -> FixedBitSet;
}

impl<I: Iterator<Item = usize>> CollectWith for I {
    fn collect_with(self, capacity: usize) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(capacity);
        s.extend(self);
        s
    }
}

fn check_point(f: &Frame, w: usize, x: usize) -> Result<(), SemanticsError> {
    if w >= f.num_worlds() {
        return Err(SemanticsError::NoSuchWorld(w));
    }
    if x >= f.num_points() || !f.domain[w].contains(x) {
        return Err(SemanticsError::PointNotInWorld {
            world: f.world_names[w].clone(),
            point: if x < f.num_points() { f.point_names[x].clone() } else { format!("#{x}") },
        });
    }
    Ok(())
}

/// `M, w, x ⊨ φ`, memoized over the subformulas of `φ`.
pub fn eval(model: &FiniteFSModel, w: usize, x: usize, phi: &Formula) -> Result<bool, SemanticsError> {
    Evaluator::new(model).eval(w, x, phi)
}

/// `M, w, x ⊨ φ` by direct recursion on the truth clauses, without any
/// caching. Exponential on deeply shared formulas; meant as a reference.
pub fn eval_naive(model: &FiniteFSModel, w: usize, x: usize, phi: &Formula) -> Result<bool, SemanticsError> {
    check_point(model.frame(), w, x)?;
    Ok(naive(model, w, x, phi))
}

fn naive(m: &FiniteFSModel, w: usize, x: usize, phi: &Formula) -> bool {
    let f = m.frame();
    match phi.kind() {
        Kind::Var(i) => m.holds_var(w, *i, x),
        Kind::Bottom => false,
        Kind::And(a, b) => naive(m, w, x, a) && naive(m, w, x, b),
        Kind::Or(a, b) => naive(m, w, x, a) || naive(m, w, x, b),
        Kind::Implies(a, b) => f.above[w].ones().all(|v| !naive(m, v, x, a) || naive(m, v, x, b)),
        Kind::Diamond(a) => f.access[w][x].ones().any(|y| naive(m, w, y, a)),
        Kind::Box(a) => f.above[w]
            .ones()
            .all(|v| f.access[v][x].ones().all(|y| naive(m, v, y, a))),
    }
}

/// True iff `φ` holds at every world and every point of that world.
pub fn true_in_model(model: &FiniteFSModel, phi: &Formula) -> bool {
    first_failure(model, phi).is_none()
}

/// The first `(world, point)` in index order where `φ` fails.
pub fn first_failure(model: &FiniteFSModel, phi: &Formula) -> Option<(usize, usize)> {
    let mut ev = Evaluator::new(model);
    let sets = ev.truth_sets(phi);
    let f = model.frame();
    (0..f.num_worlds()).find_map(|w| f.domain[w].difference(&sets[w]).next().map(|x| (w, x)))
}

/// Default cap on the number of valuations [`valid_on_frame`] will try.
pub const DEFAULT_VALUATION_BUDGET: u64 = 1 << 20;

/// Up-closed subsets of `within` (itself up-closed), in a fixed order
/// starting with the empty set. Returns `None` once more than `cap` exist.
pub fn up_sets(frame: &Frame, within: &FixedBitSet, cap: u64) -> Option<Vec<FixedBitSet>> {
    // Worlds ordered so that every world comes after its strict successors.
    let mut order: Vec<usize> = within.ones().collect();
    order.sort_by_key(|&w| frame.above[w].count_ones(..));
    let mut out = Vec::new();
    let mut current = FixedBitSet::with_capacity(frame.num_worlds());
    fn go(
        frame: &Frame,
        order: &[usize],
        i: usize,
        current: &mut FixedBitSet,
        out: &mut Vec<FixedBitSet>,
        cap: u64,
    ) -> bool {
        if i == order.len() {
            out.push(current.clone());
            return out.len() as u64 <= cap;
        }
        let w = order[i];
        if !go(frame, order, i + 1, current, out, cap) {
            return false;
        }
        let mut strict = frame.above[w].clone();
        strict.set(w, false);
        if strict.is_subset(current) {
            current.insert(w);
            let ok = go(frame, order, i + 1, current, out, cap);
            current.set(w, false);
            return ok;
        }
        true
    }
    go(frame, &order, 0, &mut current, &mut out, cap).then_some(out)
}

/// Validity of `φ` on a frame: true in every model over the frame, with the
/// valuations of `p_1 .. p_var_bound` ranging over all monotone assignments.
pub fn valid_on_frame(frame: &Frame, phi: &Formula, var_bound: u32, budget: u64) -> Result<bool, SemanticsError> {
    if let Some(var) = phi.varset().iter().find(|&v| v > var_bound) {
        return Err(SemanticsError::VariableOutOfBound { var, bound: var_bound });
    }
    // A valuation of one variable picks, for each point x, an up-set of the
    // worlds whose point set contains x.
    let n = frame.num_worlds();
    let too_many = SemanticsError::TooManyValuations { budget };
    let mut per_point = Vec::with_capacity(frame.num_points());
    let mut per_var: u64 = 1;
    for x in 0..frame.num_points() {
        let holders: FixedBitSet = (0..n).filter(|&w| frame.domain[w].contains(x)).collect_with(n);
        let ups = up_sets(frame, &holders, budget).ok_or_else(|| too_many.clone())?;
        per_var = per_var.checked_mul(ups.len() as u64).ok_or_else(|| too_many.clone())?;
        per_point.push(ups);
    }
    let total = (0..var_bound).try_fold(1u64, |acc, _| acc.checked_mul(per_var));
    match total {
        Some(t) if t <= budget => {}
        _ => return Err(too_many),
    }
    let m = frame.num_points();
    let digits = m * var_bound as usize;
    let radix = |d: usize| per_point[d % m.max(1)].len();
    let mut counter = vec![0usize; digits];
    loop {
        let memberships = (0..digits).flat_map(|d| {
            let var = (d / m) as VarIndex + 1;
            let x = d % m;
            per_point[x][counter[d]].ones().map(move |w| (w, var, x))
        });
        let model = FiniteFSModel::new(frame.clone(), memberships.collect::<Vec<_>>());
        if !true_in_model(&model, phi) {
            return Ok(false);
        }
        // Mixed-radix increment, last digit fastest.
        let mut d = digits;
        loop {
            if d == 0 {
                return Ok(true);
            }
            d -= 1;
            counter[d] += 1;
            if counter[d] < radix(d) {
                break;
            }
            counter[d] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{self, FormulaConfig, ModelConfig, Weights};
    use crate::syntax::{parse_formula, parse_model};
    use proptest::prelude::*;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn one_point(kind: LogicKind, s: bool) -> Frame {
        Frame::from_parts(FrameParts {
            kind,
            world_names: vec!["w".into()],
            point_names: vec!["a".into()],
            order: vec![],
            domain: vec![vec![0]],
            access: vec![if s { vec![(0, 0)] } else { vec![] }],
        })
    }

    #[test]
    fn empty_relation() {
        let m = FiniteFSModel::new(one_point(LogicKind::Fs, false), [(0, 1, 0)]);
        assert!(m.validate().is_empty());
        assert_eq!(eval(&m, 0, 0, &f("<>p1")), Ok(false));
        assert_eq!(eval(&m, 0, 0, &f("[]false")), Ok(true));
        assert_eq!(eval(&m, 0, 0, &f("p1 -> p1")), Ok(true));
    }

    #[test]
    fn negation_needs_every_later_world() {
        let m = parse_model("world u\nworld v\nle u v\npoint u a\npoint v a\nval v p1 a\n").unwrap();
        assert_eq!(eval(&m, 0, 0, &f("p1")), Ok(false));
        assert_eq!(eval(&m, 0, 0, &f("p1 -> false")), Ok(false));
        assert_eq!(eval(&m, 1, 0, &f("p1 -> false")), Ok(false));
        assert!(!true_in_model(&m, &f("p1 | (p1 -> false)")));
        assert_eq!(first_failure(&m, &f("p1 | (p1 -> false)")), Some((0, 0)));
    }

    #[test]
    fn errors() {
        let m = FiniteFSModel::new(one_point(LogicKind::Fs, true), []);
        assert!(matches!(eval(&m, 3, 0, &f("p1")), Err(SemanticsError::NoSuchWorld(_))));
        assert!(matches!(eval(&m, 0, 4, &f("p1")), Err(SemanticsError::PointNotInWorld { .. })));
    }

    #[test]
    fn frame_validity() {
        let empty = one_point(LogicKind::Fs, false);
        assert_eq!(valid_on_frame(&empty, &f("p1 -> p1"), 1, 1 << 10), Ok(true));
        assert_eq!(valid_on_frame(&empty, &f("<>p1"), 1, 1 << 10), Ok(false));
        let mipc = parse_model("kind mipc\nworld w\npoint w a\npoint w b\ns w a a\ns w a b\ns w b a\ns w b b\n").unwrap();
        let frame = mipc.frame().clone();
        assert_eq!(valid_on_frame(&frame, &f("[]p1 -> p1"), 1, 1 << 10), Ok(true));
        assert_eq!(valid_on_frame(&frame, &f("p1 -> []p1"), 1, 1 << 10), Ok(false));
        assert!(valid_on_frame(&frame, &f("p1 & p2 -> p1"), 2, 3).is_err());
    }

    #[test]
    fn distribution_holds_on_samples() {
        let phi = f("<>(p1 | p2) -> <>p1 | <>p2");
        for seed in 0..300 {
            let cfg = ModelConfig { kind: LogicKind::Fs, max_worlds: 4, max_points: 3, vars: 2 };
            assert!(true_in_model(&corpus::random_model(&mut corpus::rng(seed), &cfg), &phi));
        }
    }

    fn above_pairs(m: &FiniteFSModel) -> Vec<(usize, usize)> {
        let n = m.frame().num_worlds();
        (0..n).flat_map(|w| (0..n).map(move |v| (w, v))).filter(|&(w, v)| m.frame().le(w, v)).collect()
    }

    proptest! {
        #[test]
        fn heredity_and_agreement(seed in any::<u64>(), mipc in any::<bool>()) {
            let mut rng = corpus::rng(seed);
            let kind = if mipc { LogicKind::Mipc } else { LogicKind::Fs };
            let m = corpus::random_model(&mut rng, &ModelConfig { kind, max_worlds: 4, max_points: 3, vars: 3 });
            let phi = corpus::random_formula(&mut rng, &FormulaConfig::new(3, 12));
            let mut ev = Evaluator::new(&m);
            for (w, v) in above_pairs(&m) {
                for x in m.frame().domain(w).ones() {
                    let here = ev.eval(w, x, &phi).unwrap();
                    prop_assert_eq!(here, eval_naive(&m, w, x, &phi).unwrap());
                    if here {
                        prop_assert!(ev.eval(v, x, &phi).unwrap());
                    }
                }
            }
        }

        #[test]
        fn implication_free_formulas_grow_with_the_valuation(seed in any::<u64>()) {
            let mut rng = corpus::rng(seed);
            let cfg = ModelConfig { kind: LogicKind::Fs, max_worlds: 3, max_points: 3, vars: 2 };
            let small = corpus::random_model(&mut rng, &cfg);
            let phi = corpus::random_formula(
                &mut rng,
                &FormulaConfig { vars: 2, nodes: 10, weights: Weights::implication_free() },
            );
            // Add p1 everywhere it can hold.
            let frame = small.frame().clone();
            let mut members: Vec<(usize, VarIndex, usize)> = Vec::new();
            for w in 0..frame.num_worlds() {
                for x in frame.domain(w).ones() {
                    members.push((w, 1, x));
                    if small.holds_var(w, 2, x) {
                        members.push((w, 2, x));
                    }
                }
            }
            let big = FiniteFSModel::new(frame.clone(), members);
            prop_assert!(big.validate().is_empty());
            for w in 0..frame.num_worlds() {
                for x in frame.domain(w).ones() {
                    if eval(&small, w, x, &phi).unwrap() {
                        prop_assert!(eval(&big, w, x, &phi).unwrap());
                    }
                }
            }
        }
    }
}
