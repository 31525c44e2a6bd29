//! Self-checks of the reduction's numeric bounds, as run by `imred audit`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;

use crate::corpus::{self, FormulaConfig};
use crate::reduction::{
    base_length, level_budget, level_count, reduce_to_one_var, spiral_cell, spiral_index, stability_level,
    FamilyBuilder, FamilyId, Letter,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditItem {
    pub name: &'static str,
    pub passed: bool,
    /// Summary on success, the first witness on failure.
    pub detail: String,
}

impl fmt::Display for AuditItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "pass" } else { "fail" };
        write!(f, "{}\t{}\t{}", self.name, verdict, self.detail)
    }
}

fn item(name: &'static str, result: Result<String, String>) -> AuditItem {
    match result {
        Ok(detail) => AuditItem { name, passed: true, detail },
        Err(detail) => AuditItem { name, passed: false, detail },
    }
}

/// Cell after `(i, j)` when walking the spiral one step at a time.
pub fn spiral_step(i: u64, j: u64) -> (u64, u64) {
    let s = i.max(j);
    if s % 2 == 1 {
        if i == s && j < s {
            (i, j + 1)
        } else if i > 2 {
            (i - 1, j)
        } else {
            (2, s + 1)
        }
    } else if j == s && i < s {
        (i + 1, j)
    } else if j > 2 {
        (i, j - 1)
    } else {
        (s + 1, 2)
    }
}

/// Walks ranks `1..=max_rank` and compares each step with
/// [`spiral_index`] and [`spiral_cell`].
pub fn audit_spiral(max_rank: u64) -> AuditItem {
    let run = || {
        let mut cell = (2, 2);
        for r in 1..=max_rank {
            let index = spiral_index(cell.0, cell.1).map_err(|e| e.to_string())?;
            let back = spiral_cell(r).map_err(|e| e.to_string())?;
            if index != r || back != cell {
                return Err(format!("rank {r}: walk at {cell:?}, g = {index}, g^-1 = {back:?}"));
            }
            cell = spiral_step(cell.0, cell.1);
        }
        Ok(format!("ranks 1..={max_rank}"))
    };
    item("spiral", run())
}

/// Checks `|A^k_i|, |B^k_i| < l_0 · 5^k` for every index at levels up to
/// `full_through` and for `samples` random indices (plus the first and last)
/// at higher levels up to `max_level`.
pub fn audit_lengths(max_level: u32, full_through: u32, samples: usize, seed: u64) -> AuditItem {
    let run = || {
        let mut rng = corpus::rng(seed);
        let mut family = FamilyBuilder::new(1);
        let mut checked = 0u64;
        for k in 0..=max_level {
            let count = level_count(k).to_u64().ok_or(format!("n_{k} exceeds u64"))?;
            let indices: Vec<u64> = if k <= full_through {
                (1..=count).collect()
            } else {
                let mut v = vec![1, count];
                v.extend((0..samples).map(|_| rng.gen_range(1..=count)));
                v
            };
            let budget = level_budget(k);
            for i in indices {
                for letter in [Letter::A, Letter::B] {
                    let id = FamilyId::new(k, letter, i);
                    let len = family.get(id).map_err(|e| e.to_string())?.length();
                    if BigUint::from(len) >= budget {
                        return Err(format!("|{id}| = {len} >= {budget}"));
                    }
                    checked += 1;
                }
            }
        }
        Ok(format!("{checked} members, levels 0..={max_level}, l0={}", base_length()))
    };
    item("lengths", run())
}

/// Checks that `k_0` is the least level with `n_k > l_0 · 5^k` and
/// `n_k >= 7`, and that the inequality persists for `extra` more levels.
pub fn audit_stability(extra: u32) -> AuditItem {
    let run = || {
        let k0 = stability_level().map_err(|e| e.to_string())?;
        let holds = |k: u32| level_count(k) > level_budget(k) && level_count(k) >= BigUint::from(7u32);
        if let Some(k) = (0..k0).find(|&k| holds(k)) {
            return Err(format!("level {k} < k0 = {k0} already dominates"));
        }
        if let Some(k) = (k0..=k0 + extra).find(|&k| !holds(k)) {
            return Err(format!("n_{k} <= l0 * 5^{k}"));
        }
        Ok(format!("k0={k0}\tn_k0={}\tl0*5^k0={}", level_count(k0), level_budget(k0)))
    };
    item("stability", run())
}

/// Reduces `size` random formulas of length up to about `max_length` and
/// checks the output size bound, positivity and `var = {p1}`.
pub fn audit_sizes(size: usize, seed: u64, max_length: u64) -> AuditItem {
    let run = || {
        let mut rng = corpus::rng(seed);
        let mut worst = 0f64;
        for n in 0..size {
            let nodes = rng.gen_range(1..=(max_length * 2 / 3).max(1));
            let vars = rng.gen_range(1..=8);
            let phi = corpus::random_formula(&mut rng, &FormulaConfig::new(vars, nodes));
            let report = reduce_to_one_var(&phi).map_err(|e| format!("formula {n}: {e}"))?;
            let out = report.output();
            if !report.bound_ok() {
                return Err(format!("formula {n}: |out| = {} >= {}", out.length(), report.size_bound()));
            }
            if !out.is_positive() || out.varset().iter().ne([1]) {
                return Err(format!("formula {n}: output is not a positive formula in p1"));
            }
            worst = worst.max(out.length() as f64 / report.size_bound() as f64);
        }
        Ok(format!("{size} formulas, seed {seed}, max |out|/bound = {worst:.3e}"))
    };
    item("sizes", run())
}
