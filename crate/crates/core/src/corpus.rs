//! Seeded random formulas and finite models.
//!
//! Everything here is driven by a [`ChaCha8Rng`], so a seed fixes the output
//! on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Formula, VarIndex};
use crate::semantics::{FiniteFSModel, Frame, FrameParts, LogicKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative weights of each constructor in generated formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub var: u32,
    pub bottom: u32,
    pub and: u32,
    pub or: u32,
    pub implies: u32,
    pub diamond: u32,
    pub boxed: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { var: 6, bottom: 1, and: 3, or: 3, implies: 4, diamond: 2, boxed: 2 }
    }
}

impl Weights {
    /// Only `&`, `|` and `<>` above atoms; no `false`.
    pub fn implication_free() -> Self {
        Weights { var: 1, bottom: 0, and: 1, or: 1, implies: 0, diamond: 1, boxed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaConfig {
    /// Variables are drawn from `p1..p_vars`.
    pub vars: u32,
    /// Number of constructor nodes in the generated tree.
    pub nodes: u64,
    pub weights: Weights,
}

impl FormulaConfig {
    pub fn new(vars: u32, nodes: u64) -> Self {
        FormulaConfig { vars, nodes, weights: Weights::default() }
    }
}

enum Task {
    Gen(u64),
    Unary(fn(Formula) -> Formula),
    Binary(fn(Formula, Formula) -> Formula),
}

/// A random formula tree with exactly `config.nodes` nodes (at least one).
pub fn random_formula<R: Rng>(rng: &mut R, config: &FormulaConfig) -> Formula {
    let w = config.weights;
    let unary = w.diamond + w.boxed;
    let binary = w.and + w.or + w.implies;
    assert!(w.var + w.bottom > 0, "formula weights need a leaf");
    let mut tasks = vec![Task::Gen(config.nodes.max(1))];
    let mut out: Vec<Formula> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Gen(n) => {
                let allow_binary = binary > 0 && n >= 3;
                if n == 1 || (unary == 0 && !allow_binary) {
                    out.push(random_leaf(rng, config));
                    continue;
                }
                let r = rng.gen_range(0..unary + if allow_binary { binary } else { 0 });
                if r < w.diamond {
                    tasks.extend([Task::Unary(Formula::diamond), Task::Gen(n - 1)]);
                } else if r < unary {
                    tasks.extend([Task::Unary(Formula::boxed), Task::Gen(n - 1)]);
                } else {
                    let r = r - unary;
                    let op: fn(Formula, Formula) -> Formula = if r < w.and {
                        Formula::and
                    } else if r < w.and + w.or {
                        Formula::or
                    } else {
                        Formula::implies
                    };
                    let left = rng.gen_range(1..n - 1);
                    tasks.extend([Task::Binary(op), Task::Gen(n - 1 - left), Task::Gen(left)]);
                }
            }
            Task::Unary(op) => {
                let a = out.pop().expect("operand");
                out.push(op(a));
            }
            Task::Binary(op) => {
                let b = out.pop().expect("right operand");
                let a = out.pop().expect("left operand");
                out.push(op(a, b));
            }
        }
    }
    out.pop().expect("one formula")
}

fn random_leaf<R: Rng>(rng: &mut R, config: &FormulaConfig) -> Formula {
    let w = config.weights;
    if config.vars == 0 || rng.gen_range(0..w.var + w.bottom) < w.bottom {
        Formula::bottom()
    } else {
        Formula::var(rng.gen_range(1..=config.vars))
    }
}

/// A random formula whose length is within 10% of `target` when that can
/// be reached in a few rescaled attempts; otherwise the last attempt.
pub fn formula_near_length<R: Rng>(rng: &mut R, vars: u32, target: u64) -> Formula {
    let mut nodes = (target / 2).max(1);
    let mut phi = random_formula(rng, &FormulaConfig::new(vars, nodes));
    for _ in 0..4 {
        let len = phi.length();
        if len.abs_diff(target) * 10 <= target {
            break;
        }
        nodes = (u128::from(nodes) * u128::from(target) / u128::from(len)).max(1) as u64;
        phi = random_formula(rng, &FormulaConfig::new(vars, nodes));
    }
    phi
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub kind: LogicKind,
    pub max_worlds: usize,
    pub max_points: usize,
    pub vars: u32,
}

/// A random valid model over a random partial order.
pub fn random_model<R: Rng>(rng: &mut R, config: &ModelConfig) -> FiniteFSModel {
    let n = rng.gen_range(1..=config.max_worlds.max(1));
    let m = rng.gen_range(1..=config.max_points.max(1));
    // A random naturally labelled order, closed transitively.
    let mut up: Vec<Vec<bool>> = (0..n).map(|w| (0..n).map(|v| v == w).collect()).collect();
    for w in 0..n {
        for v in w + 1..n {
            up[w][v] = rng.gen_bool(0.4);
        }
    }
    for k in 0..n {
        for w in 0..n {
            for v in 0..n {
                if up[w][k] && up[k][v] {
                    up[w][v] = true;
                }
            }
        }
    }
    let close = |set: &mut Vec<bool>| {
        for w in 0..n {
            if set[w] {
                for v in 0..n {
                    if up[w][v] {
                        set[v] = true;
                    }
                }
            }
        }
    };
    // Per point, the up-closed set of worlds holding it.
    let mut holders: Vec<Vec<bool>> = (0..m)
        .map(|_| {
            let mut s: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            close(&mut s);
            s
        })
        .collect();
    for w in 0..n {
        if !holders.iter().any(|h| h[w]) {
            let x = rng.gen_range(0..m);
            holders[x][w] = true;
            close(&mut holders[x]);
        }
    }
    let mut parts = FrameParts {
        kind: config.kind,
        world_names: (0..n).map(|w| format!("w{w}")).collect(),
        point_names: (0..m).map(|x| format!("x{x}")).collect(),
        order: Vec::new(),
        domain: (0..n).map(|w| (0..m).filter(|&x| holders[x][w]).collect()).collect(),
        access: vec![Vec::new(); n],
    };
    for w in 0..n {
        for v in 0..n {
            if w != v && up[w][v] {
                parts.order.push((w, v));
            }
        }
    }
    for x in 0..m {
        for y in 0..m {
            let both: Vec<bool> = (0..n).map(|w| holders[x][w] && holders[y][w]).collect();
            let mut s: Vec<bool> = match config.kind {
                LogicKind::Mipc => both.clone(),
                LogicKind::Fs => both.iter().map(|&b| b && rng.gen_bool(0.4)).collect(),
            };
            close(&mut s);
            for w in (0..n).filter(|&w| s[w]) {
                parts.access[w].push((x, y));
            }
        }
    }
    let frame = Frame::from_parts(parts);
    let mut memberships = Vec::new();
    for var in 1..=config.vars {
        for x in 0..m {
            let mut s: Vec<bool> = (0..n).map(|w| holders[x][w] && rng.gen_bool(0.4)).collect();
            close(&mut s);
            memberships.extend((0..n).filter(|&w| s[w]).map(|w| (w, var as VarIndex, x)));
        }
    }
    FiniteFSModel::new(frame, memberships)
}
