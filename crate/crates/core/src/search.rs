//! Bounded search for finite countermodels.
//!
//! Models are generated in a fixed canonical order: number of worlds, then
//! number of points, then the world order, the point sets, the relations
//! `S_w` and finally the valuation. Only rooted frames are generated (world
//! 0 is below every other world): a formula failing at `(w, x)` also fails
//! in the submodel generated by `w`, which is rooted and no larger. World
//! orders are naturally labelled (`v R w` implies `v <= w`) and one
//! representative is kept per isomorphism class. Point sets and relations are
//! kept only when their encoding is minimal under relabelling of points and
//! automorphisms of the world order.
//!
//! A found countermodel is a genuine FS- (or MIPC-) model refuting the
//! formula. Running out of models says nothing about validity.
//!
//! The hot path evaluates a formula on one frame under all valuations at
//! once: truth values are bit vectors indexed by valuation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{Formula, Kind, VarIndex};
use crate::reduction::{positive_embed, star, ReductionError};
use crate::semantics::{FiniteFSModel, Frame, FrameParts, LogicKind};

/// Largest supported number of worlds.
pub const MAX_WORLDS: usize = 6;
/// Largest supported number of points.
pub const MAX_POINTS: usize = 6;
/// Frames admitting more valuations than this are rejected.
pub const MAX_VALUATIONS_PER_FRAME: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_worlds: usize,
    /// Bound on the number of distinct points of a model, which also bounds
    /// every point set `Δ_w`.
    pub max_points: usize,
    pub var_bound: u32,
    /// Stop after this many (frame, valuation) pairs.
    pub candidate_cap: Option<u64>,
    pub time_cap: Option<Duration>,
}

impl SearchBudget {
    pub fn new(max_worlds: usize, max_points: usize, var_bound: u32) -> SearchBudget {
        SearchBudget { max_worlds, max_points, var_bound, candidate_cap: None, time_cap: None }
    }

    pub fn with_candidate_cap(mut self, cap: u64) -> SearchBudget {
        self.candidate_cap = Some(cap);
        self
    }

    pub fn with_time_cap(mut self, cap: Duration) -> SearchBudget {
        self.time_cap = Some(cap);
        self
    }

    fn check(&self) -> Result<(), SearchError> {
        if self.max_worlds == 0 || self.max_worlds > MAX_WORLDS {
            return Err(SearchError::Budget(format!("max_worlds must be in 1..={MAX_WORLDS}")));
        }
        if self.max_points == 0 || self.max_points > MAX_POINTS {
            return Err(SearchError::Budget(format!("max_points must be in 1..={MAX_POINTS}")));
        }
        Ok(())
    }
}

impl fmt::Display for SearchBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "worlds<={} points<={} vars<={}", self.max_worlds, self.max_points, self.var_bound)?;
        if let Some(c) = self.candidate_cap {
            write!(f, " cap={c}")?;
        }
        if let Some(t) = self.time_cap {
            write!(f, " time<={}ms", t.as_millis())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("bad budget: {0}")]
    Budget(String),
    #[error("formula uses p{var} but the budget allows p1..p{bound}")]
    VariableOutOfBound { var: VarIndex, bound: u32 },
    #[error("a frame admits {0} valuations, more than the search handles")]
    TooManyValuations(u64),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    CandidateCap,
    TimeCap,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Frames (world order, point sets and relations) examined.
    pub frames: u64,
    /// (frame, valuation) pairs examined.
    pub models: u64,
    pub truncated: Option<Truncation>,
}

impl fmt::Display for SearchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "frames={}\tmodels={}", self.frames, self.models)?;
        match self.truncated {
            None => Ok(()),
            Some(Truncation::CandidateCap) => write!(f, "\ttruncated=candidate-cap"),
            Some(Truncation::TimeCap) => write!(f, "\ttruncated=time-cap"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum RefutationResult {
    Countermodel { model: FiniteFSModel, world: usize, point: usize, stats: SearchStats },
    Exhausted(SearchStats),
}

impl RefutationResult {
    pub fn is_refuted(&self) -> bool {
        matches!(self, RefutationResult::Countermodel { .. })
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            RefutationResult::Countermodel { stats, .. } | RefutationResult::Exhausted(stats) => stats,
        }
    }
}

// ---------------------------------------------------------------------------
// World orders

struct Poset {
    n: usize,
    /// `up[w]`: bitmask of `R(w)`.
    up: Vec<u32>,
    /// All up-closed subsets, ascending by mask.
    up_sets: Vec<u32>,
    /// Automorphisms as world permutations; the identity comes first.
    autos: Vec<Vec<usize>>,
}

impl Poset {
    fn from_up(up: Vec<u32>) -> Poset {
        let n = up.len();
        let up_sets = (0u32..1 << n)
            .filter(|&s| (0..n).all(|w| s & (1 << w) == 0 || up[w] & !s == 0))
            .collect();
        let autos = permutations(n)
            .into_iter()
            .filter(|p| p[0] == 0 && relabel_up(&up, p) == up)
            .collect();
        Poset { n, up, up_sets, autos }
    }

    fn map_mask(&self, perm: &[usize], mask: u32) -> u32 {
        (0..self.n).filter(|&w| mask & (1 << w) != 0).fold(0, |acc, w| acc | 1 << perm[w])
    }
}

fn relabel_up(up: &[u32], perm: &[usize]) -> Vec<u32> {
    let mut out = vec![0u32; up.len()];
    for (w, &mask) in up.iter().enumerate() {
        let mut m = 0;
        for (v, &pv) in perm.iter().enumerate() {
            if mask & (1 << v) != 0 {
                m |= 1 << pv;
            }
        }
        out[perm[w]] = m;
    }
    out
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Rooted, naturally labelled partial orders on `n` worlds, one per
/// isomorphism class, in ascending order of their relation encoding.
fn rooted_posets(n: usize) -> Vec<Arc<Poset>> {
    if n == 1 {
        return vec![Arc::new(Poset::from_up(vec![1]))];
    }
    let pairs: Vec<(usize, usize)> = (1..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let perms: Vec<Vec<usize>> = permutations(n).into_iter().filter(|p| p[0] == 0).collect();
    let mut seen: HashMap<Vec<u32>, ()> = HashMap::new();
    let mut out = Vec::new();
    for bits in 0u32..1 << pairs.len() {
        let mut up: Vec<u32> = (0..n).map(|w| 1 << w).collect();
        up[0] = (1 << n) - 1;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if bits & (1 << k) != 0 {
                up[i] |= 1 << j;
            }
        }
        let transitive = (0..n).all(|w| {
            (0..n).filter(|&v| up[w] & (1 << v) != 0).all(|v| up[v] & !up[w] == 0)
        });
        if !transitive {
            continue;
        }
        let key = perms.iter().map(|p| relabel_up(&up, p)).min().expect("nonempty");
        if seen.insert(key, ()).is_none() {
            out.push(Arc::new(Poset::from_up(up)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Frames

/// A world order with point sets and the valuation space over it.
struct Shape {
    kind: LogicKind,
    poset: Arc<Poset>,
    m: usize,
    /// `holders[x]`: worlds whose point set contains `x`.
    holders: Vec<u32>,
    /// Up-sets available for `S` at each pair `x * m + y`.
    pair_options: Vec<Vec<u32>>,
    /// Up-sets available for a variable at each point.
    val_options: Vec<Vec<u32>>,
    var_bound: u32,
    total_valuations: u64,
    /// Layout `[var][slot][word]`; bit `t` of a word run is set when
    /// valuation `t` makes the variable true at the slot.
    var_bits: Vec<u64>,
    words: usize,
    /// Symmetries `(world perm, point perm)` fixing the point sets.
    stabilizer: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Shape {
    fn slots(&self) -> usize {
        self.poset.n * self.m
    }

    fn in_domain(&self, w: usize, x: usize) -> bool {
        self.holders[x] & (1 << w) != 0
    }

    /// Variable memberships `(world, var, point)` of valuation `t`.
    fn valuation(&self, mut t: u64) -> Vec<(usize, VarIndex, usize)> {
        let m = self.m;
        let digits = m * self.var_bound as usize;
        let mut choice = vec![0usize; digits];
        for d in (0..digits).rev() {
            let radix = self.val_options[d % m].len() as u64;
            choice[d] = (t % radix) as usize;
            t /= radix;
        }
        let mut out = Vec::new();
        for d in 0..digits {
            let (var, x) = ((d / m) as VarIndex + 1, d % m);
            let mask = self.val_options[x][choice[d]];
            out.extend((0..self.poset.n).filter(|&w| mask & (1 << w) != 0).map(|w| (w, var, x)));
        }
        out.sort_unstable();
        out
    }

    fn frame(&self, relation: &[u32]) -> Frame {
        let n = self.poset.n;
        let m = self.m;
        let mut parts = FrameParts {
            kind: self.kind,
            world_names: (0..n).map(|w| format!("w{w}")).collect(),
            point_names: (0..m).map(point_name).collect(),
            ..FrameParts::default()
        };
        for w in 0..n {
            for v in 0..n {
                if v != w && self.poset.up[w] & (1 << v) != 0 {
                    parts.order.push((w, v));
                }
            }
            parts.domain.push((0..m).filter(|&x| self.in_domain(w, x)).collect());
            let mut pairs = Vec::new();
            for x in 0..m {
                for y in 0..m {
                    if relation[x * m + y] & (1 << w) != 0 {
                        pairs.push((x, y));
                    }
                }
            }
            parts.access.push(pairs);
        }
        Frame::from_parts(parts)
    }
}

fn point_name(x: usize) -> String {
    char::from(b'a' + x as u8).to_string()
}

/// Candidates of one shape: each relation is `m * m` up-set masks, the
/// worlds at which pair `(x, y)` belongs to `S_w`.
struct Block {
    shape: Arc<Shape>,
    relations: Vec<Vec<u32>>,
}

struct FrameCursor {
    kind: LogicKind,
    max_worlds: usize,
    max_points: usize,
    var_bound: u32,
    posets: Vec<Vec<Arc<Poset>>>,
    n: usize,
    m: usize,
    poset_idx: usize,
    /// Per point, index into the poset's nonempty up-sets.
    delta: Option<Vec<usize>>,
}

impl FrameCursor {
    fn new(budget: &SearchBudget, kind: LogicKind) -> FrameCursor {
        let posets = (0..=budget.max_worlds)
            .map(|n| if n == 0 { Vec::new() } else { rooted_posets(n) })
            .collect();
        FrameCursor {
            kind,
            max_worlds: budget.max_worlds,
            max_points: budget.max_points,
            var_bound: budget.var_bound,
            posets,
            n: 1,
            m: 1,
            poset_idx: 0,
            delta: None,
        }
    }

    /// Advances to the next point-set assignment, moving on to the next
    /// poset, point count and world count as each is exhausted.
    fn advance(&mut self) -> bool {
        loop {
            if self.n > self.max_worlds {
                return false;
            }
            let poset = self.posets[self.n][self.poset_idx].clone();
            let choices = poset.up_sets.len() - 1; // nonempty up-sets
            let next = match self.delta.take() {
                None => Some(vec![0; self.m]),
                Some(mut d) => {
                    let mut i = self.m;
                    loop {
                        if i == 0 {
                            break None;
                        }
                        i -= 1;
                        d[i] += 1;
                        if d[i] < choices {
                            break Some(d);
                        }
                        d[i] = 0;
                    }
                }
            };
            match next {
                Some(d) => {
                    self.delta = Some(d);
                    return true;
                }
                None => {
                    self.poset_idx += 1;
                    if self.poset_idx == self.posets[self.n].len() {
                        self.poset_idx = 0;
                        self.m += 1;
                        if self.m > self.max_points {
                            self.m = 1;
                            self.n += 1;
                        }
                    }
                }
            }
        }
    }

    fn next_block(&mut self) -> Result<Option<Block>, SearchError> {
        while self.advance() {
            let poset = self.posets[self.n][self.poset_idx].clone();
            let full = (1u32 << poset.n) - 1;
            let holders: Vec<u32> =
                self.delta.as_ref().expect("set by advance").iter().map(|&i| poset.up_sets[i + 1]).collect();
            if !holders.contains(&full) {
                continue;
            }
            let Some(stabilizer) = canonical_stabilizer(&poset, &holders) else { continue };
            let shape = Arc::new(build_shape(self.kind, poset, holders, self.var_bound, stabilizer)?);
            let relations = relations_for(&shape);
            return Ok(Some(Block { shape, relations }));
        }
        Ok(None)
    }
}

/// `None` unless `holders` is lexicographically least among its images;
/// otherwise the symmetries that fix it.
fn canonical_stabilizer(poset: &Poset, holders: &[u32]) -> Option<Vec<(Vec<usize>, Vec<usize>)>> {
    let m = holders.len();
    let mut stab = Vec::new();
    for sigma in &poset.autos {
        for pi in permutations(m) {
            let mut image = vec![0u32; m];
            for x in 0..m {
                image[pi[x]] = poset.map_mask(sigma, holders[x]);
            }
            match image.as_slice().cmp(holders) {
                std::cmp::Ordering::Less => return None,
                std::cmp::Ordering::Equal => stab.push((sigma.clone(), pi)),
                std::cmp::Ordering::Greater => {}
            }
        }
    }
    Some(stab)
}

fn build_shape(
    kind: LogicKind,
    poset: Arc<Poset>,
    holders: Vec<u32>,
    var_bound: u32,
    stabilizer: Vec<(Vec<usize>, Vec<usize>)>,
) -> Result<Shape, SearchError> {
    let m = holders.len();
    let n = poset.n;
    let subsets_of = |within: u32| -> Vec<u32> { poset.up_sets.iter().copied().filter(|&u| u & !within == 0).collect() };
    let pair_options = (0..m * m)
        .map(|p| {
            let within = holders[p / m] & holders[p % m];
            match kind {
                LogicKind::Fs => subsets_of(within),
                LogicKind::Mipc => vec![within],
            }
        })
        .collect();
    let val_options: Vec<Vec<u32>> = holders.iter().map(|&h| subsets_of(h)).collect();
    let per_var = val_options.iter().try_fold(1u64, |acc, o| acc.checked_mul(o.len() as u64));
    let total = per_var.and_then(|p| (0..var_bound).try_fold(1u64, |acc, _| acc.checked_mul(p)));
    let total = match total {
        Some(t) if t <= MAX_VALUATIONS_PER_FRAME => t,
        other => return Err(SearchError::TooManyValuations(other.unwrap_or(u64::MAX))),
    };
    let words = total.div_ceil(64) as usize;
    let slots = n * m;
    let mut var_bits = vec![0u64; var_bound as usize * slots * words];
    let digits = m * var_bound as usize;
    let mut choice = vec![0usize; digits];
    for t in 0..total as usize {
        for d in 0..digits {
            let (var, x) = (d / m, d % m);
            let mask = val_options[x][choice[d]];
            for w in 0..n {
                if mask & (1 << w) != 0 {
                    var_bits[(var * slots + w * m + x) * words + t / 64] |= 1 << (t % 64);
                }
            }
        }
        for d in (0..digits).rev() {
            choice[d] += 1;
            if choice[d] < val_options[d % m].len() {
                break;
            }
            choice[d] = 0;
        }
    }
    Ok(Shape {
        kind,
        poset,
        m,
        holders,
        pair_options,
        val_options,
        var_bound,
        total_valuations: total,
        var_bits,
        words,
        stabilizer,
    })
}

/// Relations `S` over a shape, in mixed-radix order with the last pair
/// fastest, keeping those least among their images under the stabilizer.
fn relations_for(shape: &Shape) -> Vec<Vec<u32>> {
    let m = shape.m;
    let pairs = m * m;
    let mut out = Vec::new();
    let mut idx = vec![0usize; pairs];
    let mut current: Vec<u32> = (0..pairs).map(|p| shape.pair_options[p][0]).collect();
    let mut image = vec![0u32; pairs];
    loop {
        let canonical = shape.stabilizer.iter().skip(1).all(|(sigma, pi)| {
            for x in 0..m {
                for y in 0..m {
                    image[pi[x] * m + pi[y]] = shape.poset.map_mask(sigma, current[x * m + y]);
                }
            }
            image.as_slice() >= current.as_slice()
        });
        if canonical {
            out.push(current.clone());
        }
        let mut p = pairs;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < shape.pair_options[p].len() {
                current[p] = shape.pair_options[p][idx[p]];
                break;
            }
            idx[p] = 0;
            current[p] = shape.pair_options[p][0];
        }
    }
}

// ---------------------------------------------------------------------------
// Streaming models

/// All models within a budget, in canonical order.
pub struct ModelStream {
    cursor: FrameCursor,
    block: Option<Block>,
    relation: usize,
    valuation: u64,
    error: Option<SearchError>,
}

impl Iterator for ModelStream {
    type Item = FiniteFSModel;

    fn next(&mut self) -> Option<FiniteFSModel> {
        loop {
            if let Some(block) = &self.block {
                if self.relation < block.relations.len() {
                    let shape = &block.shape;
                    let model = FiniteFSModel::new(
                        shape.frame(&block.relations[self.relation]),
                        shape.valuation(self.valuation),
                    );
                    self.valuation += 1;
                    if self.valuation == shape.total_valuations {
                        self.valuation = 0;
                        self.relation += 1;
                    }
                    return Some(model);
                }
            }
            match self.cursor.next_block() {
                Ok(Some(b)) => {
                    self.block = Some(b);
                    self.relation = 0;
                    self.valuation = 0;
                }
                Ok(None) => return None,
                Err(e) => {
                    self.error = Some(e);
                    return None;
                }
            }
        }
    }
}

impl ModelStream {
    /// Set when the stream stopped early because a frame was too large.
    pub fn error(&self) -> Option<&SearchError> {
        self.error.as_ref()
    }
}

pub fn enumerate_models(budget: &SearchBudget, kind: LogicKind) -> Result<ModelStream, SearchError> {
    budget.check()?;
    Ok(ModelStream { cursor: FrameCursor::new(budget, kind), block: None, relation: 0, valuation: 0, error: None })
}

// ---------------------------------------------------------------------------
// Bit-sliced evaluation

#[derive(Clone, Copy)]
enum Op {
    Var(usize),
    Bottom,
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Diamond(usize),
    Box(usize),
}

fn compile(phi: &Formula) -> Vec<Op> {
    let nodes = phi.dag_postorder();
    let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, n)| (n.node_id(), i)).collect();
    let at = |f: &Formula| index[&f.node_id()];
    nodes
        .iter()
        .map(|n| match n.kind() {
            Kind::Var(v) => Op::Var(*v as usize - 1),
            Kind::Bottom => Op::Bottom,
            Kind::And(a, b) => Op::And(at(a), at(b)),
            Kind::Or(a, b) => Op::Or(at(a), at(b)),
            Kind::Implies(a, b) => Op::Implies(at(a), at(b)),
            Kind::Diamond(a) => Op::Diamond(at(a)),
            Kind::Box(a) => Op::Box(at(a)),
        })
        .collect()
}

/// Words of valuations processed together.
const CHUNK_WORDS: usize = 64;

struct SlicedEval<'a> {
    ops: &'a [Op],
    shape: &'a Shape,
    /// `access[w * m + x]`: mask of `S_w(x)`.
    access: Vec<u32>,
    buf: Vec<u64>,
}

impl<'a> SlicedEval<'a> {
    fn new(ops: &'a [Op], shape: &'a Shape) -> Self {
        let cw = shape.words.min(CHUNK_WORDS);
        SlicedEval { ops, shape, access: vec![0; shape.slots()], buf: vec![0; ops.len() * shape.slots() * cw] }
    }

    fn set_relation(&mut self, relation: &[u32]) {
        let m = self.shape.m;
        for w in 0..self.shape.poset.n {
            for x in 0..m {
                self.access[w * m + x] =
                    (0..m).filter(|&y| relation[x * m + y] & (1 << w) != 0).fold(0, |acc, y| acc | 1 << y);
            }
        }
    }

    /// Evaluates valuation words `start .. start + len`; returns the first
    /// failing `(valuation, world, point)`.
    fn run_chunk(&mut self, start: usize, len: usize) -> Option<(u64, usize, usize)> {
        let shape = self.shape;
        let (n, m, slots) = (shape.poset.n, shape.m, shape.slots());
        let cw = len;
        for (k, op) in self.ops.iter().enumerate() {
            let (done, rest) = self.buf.split_at_mut(k * slots * cw);
            let out = &mut rest[..slots * cw];
            let node = |i: usize, s: usize| &done[(i * slots + s) * cw..(i * slots + s + 1) * cw];
            match *op {
                Op::Var(v) => {
                    for s in 0..slots {
                        let src = (v * slots + s) * shape.words + start;
                        out[s * cw..(s + 1) * cw].copy_from_slice(&shape.var_bits[src..src + cw]);
                    }
                }
                Op::Bottom => out.fill(0),
                Op::And(a, b) | Op::Or(a, b) => {
                    let is_and = matches!(op, Op::And(..));
                    for s in 0..slots {
                        let (x, y) = (node(a, s), node(b, s));
                        for (i, o) in out[s * cw..(s + 1) * cw].iter_mut().enumerate() {
                            *o = if is_and { x[i] & y[i] } else { x[i] | y[i] };
                        }
                    }
                }
                Op::Implies(a, b) => {
                    for w in 0..n {
                        for x in 0..m {
                            let o = &mut out[(w * m + x) * cw..(w * m + x + 1) * cw];
                            o.fill(!0);
                            if !shape.in_domain(w, x) {
                                continue;
                            }
                            for v in (0..n).filter(|&v| shape.poset.up[w] & (1 << v) != 0) {
                                let (p, q) = (node(a, v * m + x), node(b, v * m + x));
                                for i in 0..cw {
                                    o[i] &= !p[i] | q[i];
                                }
                            }
                        }
                    }
                }
                Op::Diamond(a) => {
                    for w in 0..n {
                        for x in 0..m {
                            let o = &mut out[(w * m + x) * cw..(w * m + x + 1) * cw];
                            o.fill(0);
                            let acc = self.access[w * m + x];
                            for y in (0..m).filter(|&y| acc & (1 << y) != 0) {
                                let p = node(a, w * m + y);
                                for i in 0..cw {
                                    o[i] |= p[i];
                                }
                            }
                        }
                    }
                }
                Op::Box(a) => {
                    for w in 0..n {
                        for x in 0..m {
                            let o = &mut out[(w * m + x) * cw..(w * m + x + 1) * cw];
                            o.fill(!0);
                            for v in (0..n).filter(|&v| shape.poset.up[w] & (1 << v) != 0) {
                                let acc = self.access[v * m + x];
                                for y in (0..m).filter(|&y| acc & (1 << y) != 0) {
                                    let p = node(a, v * m + y);
                                    for i in 0..cw {
                                        o[i] &= p[i];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let root = self.ops.len() - 1;
        let total = shape.total_valuations;
        for i in 0..cw {
            let word = start + i;
            let mut fail = 0u64;
            for w in 0..n {
                for x in (0..m).filter(|&x| shape.in_domain(w, x)) {
                    fail |= !self.buf[(root * slots + w * m + x) * cw + i];
                }
            }
            let valid_bits = total - 64 * word as u64;
            if valid_bits < 64 {
                fail &= (1u64 << valid_bits) - 1;
            }
            if fail != 0 {
                let bit = fail.trailing_zeros() as usize;
                let t = 64 * word as u64 + bit as u64;
                for w in 0..n {
                    for x in (0..m).filter(|&x| shape.in_domain(w, x)) {
                        if self.buf[(root * slots + w * m + x) * cw + i] & (1 << bit) == 0 {
                            return Some((t, w, x));
                        }
                    }
                }
            }
        }
        None
    }
}

/// First countermodel in canonical order, or exhaustion of the budget.
pub fn find_countermodel(
    phi: &Formula,
    budget: &SearchBudget,
    kind: LogicKind,
) -> Result<RefutationResult, SearchError> {
    budget.check()?;
    if let Some(var) = phi.varset().iter().find(|&v| v > budget.var_bound) {
        return Err(SearchError::VariableOutOfBound { var, bound: budget.var_bound });
    }
    let ops = compile(phi);
    // Only read the clock when a time cap is set; wasm32 has no clock.
    let started = budget.time_cap.map(|cap| (Instant::now(), cap));
    let mut stats = SearchStats::default();
    let mut cursor = FrameCursor::new(budget, kind);
    while let Some(block) = cursor.next_block()? {
        let shape = &block.shape;
        let mut ev = SlicedEval::new(&ops, shape);
        for relation in &block.relations {
            stats.frames += 1;
            ev.set_relation(relation);
            let mut start = 0;
            while start < shape.words {
                let len = (shape.words - start).min(CHUNK_WORDS);
                if let Some((t, world, point)) = ev.run_chunk(start, len) {
                    stats.models += t + 1;
                    let model = FiniteFSModel::new(shape.frame(relation), shape.valuation(t));
                    return Ok(RefutationResult::Countermodel { model, world, point, stats });
                }
                start += len;
            }
            stats.models += shape.total_valuations;
            if budget.candidate_cap.is_some_and(|cap| stats.models >= cap) {
                stats.truncated = Some(Truncation::CandidateCap);
                return Ok(RefutationResult::Exhausted(stats));
            }
            if stats.frames % 256 == 0 && started.is_some_and(|(t, cap)| t.elapsed() >= cap) {
                stats.truncated = Some(Truncation::TimeCap);
                return Ok(RefutationResult::Exhausted(stats));
            }
        }
    }
    Ok(RefutationResult::Exhausted(stats))
}

// ---------------------------------------------------------------------------
// Translation consistency

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Both refuted, or both unrefuted within their budgets.
    Consistent,
    /// Input refuted, output not refuted within its budget. Expected from
    /// bounded search; not evidence against the reduction.
    SoftMiss,
    /// Output refuted while the input was not refuted within its budget.
    /// Since countermodels are sound, this points at an input budget too
    /// small to refute, or at a defect in the reduction.
    Contradiction,
}

impl Verdict {
    fn classify(input: &RefutationResult, output: &RefutationResult) -> Verdict {
        match (input.is_refuted(), output.is_refuted()) {
            (true, true) | (false, false) => Verdict::Consistent,
            (true, false) => Verdict::SoftMiss,
            (false, true) => Verdict::Contradiction,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::SoftMiss => "soft-miss",
            Verdict::Contradiction => "contradiction",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub input: RefutationResult,
    pub embedded: RefutationResult,
    pub starred: RefutationResult,
    /// Budgets actually used for the embedded and starred searches; the
    /// variable bound is raised to cover each formula's variables.
    pub embedded_budget: SearchBudget,
    pub starred_budget: SearchBudget,
    pub embed_verdict: Verdict,
    pub star_verdict: Verdict,
}

/// Searches for countermodels to `φ`, `e(φ)` and `e(φ)*` and compares.
pub fn check_translation_consistency(
    phi: &Formula,
    budget_in: &SearchBudget,
    budget_out: &SearchBudget,
    kind: LogicKind,
) -> Result<ConsistencyReport, SearchError> {
    let covering = |f: &Formula| {
        let mut b = budget_out.clone();
        b.var_bound = b.var_bound.max(f.varset().max().unwrap_or(0));
        b
    };
    let input = find_countermodel(phi, budget_in, kind)?;
    let embedded_formula = positive_embed(phi).embedded;
    let embedded_budget = covering(&embedded_formula);
    let embedded = find_countermodel(&embedded_formula, &embedded_budget, kind)?;
    let starred_formula = star(&embedded_formula)?.formula;
    let starred_budget = covering(&starred_formula);
    let starred = find_countermodel(&starred_formula, &starred_budget, kind)?;
    Ok(ConsistencyReport {
        embed_verdict: Verdict::classify(&input, &embedded),
        star_verdict: Verdict::classify(&input, &starred),
        input,
        embedded,
        starred,
        embedded_budget,
        starred_budget,
    })
}

/// Models found per frame shape, for diagnostics.
pub fn count_models(budget: &SearchBudget, kind: LogicKind) -> Result<BTreeMap<(usize, usize), u64>, SearchError> {
    budget.check()?;
    let mut cursor = FrameCursor::new(budget, kind);
    let mut out = BTreeMap::new();
    while let Some(block) = cursor.next_block()? {
        *out.entry((block.shape.poset.n, block.shape.m)).or_insert(0) +=
            block.relations.len() as u64 * block.shape.total_valuations;
    }
    Ok(out)
}
