//! Validity-preserving reduction of FS/MIPC formulas to positive formulas in
//! the single variable `p1`.
//!
//! The reduction runs in two steps:
//!
//! 1. [`positive_embed`] removes `false` by replacing it with a fresh
//!    variable `f` and guarding the result with `F -> φ^f`, where `F` says
//!    that `f` is closed under the modalities and implies every variable.
//! 2. [`star`] substitutes, for the `r`-th variable of a positive formula,
//!    the one-variable formula `A^k_r | B^k_r` from a recursively defined
//!    family, at a level `k` chosen from the length of the input.
//!
//! Family members of level `k + 1` are indexed by cells `(i, j)` of the grid
//! `{2, 3, ...}²`, enumerated along a square spiral ([`spiral_index`]).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::formula::{box_chain_le, conj_left, diamond_chain_le, Formula, VarIndex};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("spiral cells need both coordinates >= 2, got ({0}, {1})")]
    InvalidCell(u64, u64),
    #[error("spiral ranks start at 1")]
    ZeroRank,
    #[error("{id} does not exist: level {} has indices 1..={count}", id.level)]
    IndexOutOfRange { id: FamilyId, count: BigUint },
    #[error("input contains `false`; only positive formulas can be substituted")]
    NotPositive,
    #[error("level {level} has {count} formulas, too few for {vars} variables")]
    TooFewFormulas { level: u32, count: BigUint, vars: usize },
    #[error("stability certificate failed: {0}")]
    Stability(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::A => "A",
            Letter::B => "B",
        })
    }
}

/// Names `A^level_index` or `B^level_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyId {
    pub level: u32,
    pub letter: Letter,
    pub index: u64,
}

impl FamilyId {
    pub fn new(level: u32, letter: Letter, index: u64) -> FamilyId {
        FamilyId { level, letter, index }
    }

    pub fn is_valid(&self) -> bool {
        self.index >= 1 && BigUint::from(self.index) <= level_count(self.level)
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}_{}", self.letter, self.level, self.index)
    }
}

/// Rank of the cell `(i, j)`, `i, j >= 2`, along the spiral
/// `(2,2), (3,2), (3,3), (2,3), (2,4), (3,4), (4,4), (4,3), (4,2), (5,2), ...`.
///
/// The cells with `max(i, j) = s` form shell `s`, which the spiral covers
/// after the `(s - 2)²` cells of the smaller shells. Odd shells are entered
/// from below at `(s, 2)`, climb to `(s, s)` and run left to `(2, s)`; even
/// shells are entered at `(2, s)`, run right to `(s, s)` and descend to
/// `(s, 2)`.
pub fn spiral_index(i: u64, j: u64) -> Result<u64, ReductionError> {
    if i < 2 || j < 2 {
        return Err(ReductionError::InvalidCell(i, j));
    }
    let s = i.max(j);
    let before = (s - 2) * (s - 2);
    let offset = if s % 2 == 1 {
        if i == s { j - 1 } else { (s - 1) + (s - i) }
    } else if j == s {
        i - 1
    } else {
        (s - 1) + (s - j)
    };
    Ok(before + offset)
}

/// Inverse of [`spiral_index`].
pub fn spiral_cell(rank: u64) -> Result<(u64, u64), ReductionError> {
    if rank == 0 {
        return Err(ReductionError::ZeroRank);
    }
    // Shell s holds ranks (s-2)²+1 ..= (s-1)².
    let root = rank.isqrt();
    let s = if root * root == rank { root + 1 } else { root + 2 };
    let offset = rank - (s - 2) * (s - 2);
    let cell = if s % 2 == 1 {
        if offset < s { (s, offset + 1) } else { (2 * s - 1 - offset, s) }
    } else if offset < s {
        (offset + 1, s)
    } else {
        (s, 2 * s - 1 - offset)
    };
    Ok(cell)
}

/// `n_k`, the number of A-formulas (and of B-formulas) at level `k`:
/// `n_0 = 2`, `n_1 = 3`, `n_{k+1} = (n_k - 1)²`.
pub fn level_count(k: u32) -> BigUint {
    match k {
        0 => BigUint::from(2u32),
        _ => {
            let mut n = BigUint::from(3u32);
            for _ in 1..k {
                let m = n - BigUint::one();
                n = &m * &m;
            }
            n
        }
    }
}

/// The three base formulas over `p`: `<>p`, `<>p -> p`, `p -> []p`.
pub fn base_formulas(p: &Formula) -> [Formula; 3] {
    let dp = Formula::diamond(p.clone());
    [
        dp.clone(),
        Formula::implies(dp, p.clone()),
        Formula::implies(p.clone(), Formula::boxed(p.clone())),
    ]
}

/// Memoizing constructor for the family `A^k_i`, `B^k_i` over `p_base_var`.
/// Members share structure, so the cost of building a member is proportional
/// to the number of distinct subformulas rather than to its length.
pub struct FamilyBuilder {
    base: [Formula; 3],
    memo: HashMap<FamilyId, Formula>,
}

impl FamilyBuilder {
    pub fn new(base_var: VarIndex) -> FamilyBuilder {
        let base = base_formulas(&Formula::var(base_var));
        let mut b = FamilyBuilder { base, memo: HashMap::new() };
        b.seed_levels();
        b
    }

    pub fn base(&self) -> &[Formula; 3] {
        &self.base
    }

    fn seed_levels(&mut self) {
        use Letter::{A, B};
        let [g1, g2, g3] = self.base.clone();
        let imp = Formula::implies;
        let and = Formula::and;
        let or = Formula::or;
        let a01 = imp(g2.clone(), or(g1.clone(), g3.clone()));
        let a02 = imp(g3.clone(), or(g1.clone(), g2.clone()));
        let b01 = imp(g1.clone(), or(g2.clone(), g3.clone()));
        let b02 = imp(
            and(and(a01.clone(), a02.clone()), b01.clone()),
            or(or(g1, g2), g3),
        );
        let level1 = [
            (A, 1, imp(and(a01.clone(), a02.clone()), or(b01.clone(), b02.clone()))),
            (A, 2, imp(and(a01.clone(), b01.clone()), or(a02.clone(), b02.clone()))),
            (A, 3, imp(and(a01.clone(), b02.clone()), or(a02.clone(), b01.clone()))),
            (B, 1, imp(and(a02.clone(), b01.clone()), or(a01.clone(), b02.clone()))),
            (B, 2, imp(and(a02.clone(), b02.clone()), or(a01.clone(), b01.clone()))),
            (B, 3, imp(and(b01.clone(), b02.clone()), or(a01.clone(), a02.clone()))),
        ];
        for (letter, index, f) in [(A, 1, a01), (A, 2, a02), (B, 1, b01), (B, 2, b02)] {
            self.memo.insert(FamilyId::new(0, letter, index), f);
        }
        for (letter, index, f) in level1 {
            self.memo.insert(FamilyId::new(1, letter, index), f);
        }
    }

    pub fn get(&mut self, id: FamilyId) -> Result<Formula, ReductionError> {
        if let Some(f) = self.memo.get(&id) {
            return Ok(f.clone());
        }
        if id.level <= 1 || !id.is_valid() {
            return Err(ReductionError::IndexOutOfRange { id, count: level_count(id.level) });
        }
        let f = self.build_recursive(id)?;
        self.memo.insert(id, f.clone());
        Ok(f)
    }

    fn build_recursive(&mut self, id: FamilyId) -> Result<Formula, ReductionError> {
        let below = id.level - 1;
        let (i, j) = spiral_cell(id.index)?;
        let a1 = self.get(FamilyId::new(below, Letter::A, 1))?;
        let b1 = self.get(FamilyId::new(below, Letter::B, 1))?;
        let ai = self.get(FamilyId::new(below, Letter::A, i))?;
        let bj = self.get(FamilyId::new(below, Letter::B, j))?;
        Ok(match id.letter {
            Letter::A => Formula::implies(a1, Formula::or(Formula::or(b1, ai), bj)),
            Letter::B => Formula::implies(b1, Formula::or(Formula::or(a1, ai), bj)),
        })
    }
}

/// `A^k_i` or `B^k_i` over `p_base_var`, built with a fresh memo table.
pub fn family_formula(id: FamilyId, base_var: VarIndex) -> Result<Formula, ReductionError> {
    FamilyBuilder::new(base_var).get(id)
}

/// `l_0 = |A^0_1| + |B^0_1| + |A^0_2| + |B^0_2|` under
/// [`Formula::length`].
pub fn base_length() -> u64 {
    let mut b = FamilyBuilder::new(1);
    [(Letter::A, 1), (Letter::B, 1), (Letter::A, 2), (Letter::B, 2)]
        .into_iter()
        .map(|(l, i)| b.get(FamilyId::new(0, l, i)).expect("level 0 exists").length())
        .sum()
}

/// `l_0 · 5^k`.
pub fn level_budget(k: u32) -> BigUint {
    BigUint::from(base_length()) * BigUint::from(5u32).pow(k)
}

/// Levels searched for the stability certificate before giving up.
const STABILITY_SEARCH_LIMIT: u32 = 64;

/// Least `k_0` with `n_{k_0} > l_0 · 5^{k_0}` and `n_{k_0} >= 7`.
///
/// Since `(n - 1)² >= 5n` for every `n >= 7`, these two facts at `k_0`
/// give `n_k > l_0 · 5^k` for all `k >= k_0` by induction; the inductive
/// step is re-checked here numerically at `k_0` before returning.
pub fn stability_level() -> Result<u32, ReductionError> {
    static CACHE: OnceLock<Result<u32, ReductionError>> = OnceLock::new();
    CACHE.get_or_init(compute_stability_level).clone()
}

fn compute_stability_level() -> Result<u32, ReductionError> {
    let seven = BigUint::from(7u32);
    for k in 0..=STABILITY_SEARCH_LIMIT {
        let n = level_count(k);
        if n <= level_budget(k) || n < seven {
            continue;
        }
        let m = &n - BigUint::one();
        if &m * &m < BigUint::from(5u32) * &n {
            return Err(ReductionError::Stability(format!("(n_{k} - 1)^2 < 5 n_{k}")));
        }
        let next = level_count(k + 1);
        if next <= level_budget(k + 1) {
            return Err(ReductionError::Stability(format!("n_{} <= l_0 * 5^{}", k + 1, k + 1)));
        }
        return Ok(k);
    }
    Err(ReductionError::Stability(format!("no level up to {STABILITY_SEARCH_LIMIT} dominates")))
}

/// Least `k >= 0` with `|φ| < l_0 · 5^k`.
pub fn target_level(phi: &Formula) -> u32 {
    let len = u128::from(phi.length());
    let mut budget = u128::from(base_length());
    let mut k = 0;
    while len >= budget {
        budget *= 5;
        k += 1;
    }
    k
}

/// Result of [`positive_embed`]: `e(φ) = F -> φ^f` with
/// `F = (F_1 & F_2) & F_3`.
#[derive(Clone, Debug)]
pub struct PositiveEmbedding {
    pub fresh: VarIndex,
    pub f1: Formula,
    pub f2: Formula,
    pub f3: Formula,
    pub guard: Formula,
    pub replaced: Formula,
    pub embedded: Formula,
}

/// Embeds `φ` into the positive fragment. With `m = md φ` and `f` the least
/// variable not in `φ`:
///
/// - `F_1 = (f | <>f | ... | <>^m f) -> f`
/// - `F_2 = f -> (f & []f & ... & []^m f)`
/// - `F_3 = ⋀_{p ∈ var φ} (f -> p) & [](f -> p) & ... & []^m (f -> p)`,
///   or `f -> f` when `φ` has no variables
/// - `φ^f` is `φ` with every `false` replaced by `f`.
pub fn positive_embed(phi: &Formula) -> PositiveEmbedding {
    let vars = phi.varset();
    let fresh = vars.first_unused();
    let f = Formula::var(fresh);
    let m = phi.mdepth();
    let f1 = Formula::implies(diamond_chain_le(m, &f), f.clone());
    let f2 = Formula::implies(f.clone(), box_chain_le(m, &f));
    let f3 = conj_left(vars.iter().map(|p| box_chain_le(m, &Formula::implies(f.clone(), Formula::var(p)))))
        .unwrap_or_else(|| Formula::implies(f.clone(), f.clone()));
    let guard = Formula::and(Formula::and(f1.clone(), f2.clone()), f3.clone());
    let replaced = phi.replace_bottom(&f);
    let embedded = Formula::implies(guard.clone(), replaced.clone());
    PositiveEmbedding { fresh, f1, f2, f3, guard, replaced, embedded }
}

/// Result of [`star`].
#[derive(Clone, Debug)]
pub struct StarSubstitution {
    pub formula: Formula,
    /// `k_φ`.
    pub target_level: u32,
    /// `k_φ + k_0`, the family level substituted.
    pub level: u32,
    /// `(original variable, dense index r)`: `p_original` became
    /// `A^level_r | B^level_r`.
    pub renaming: Vec<(VarIndex, u64)>,
}

/// Maps a positive formula to a positive formula in `p1` alone: the
/// variables of `φ`, in ascending order, become `A^k_r | B^k_r` for
/// `r = 1, 2, ...` with `k = k_φ + k_0`.
pub fn star(phi: &Formula) -> Result<StarSubstitution, ReductionError> {
    if !phi.is_positive() {
        return Err(ReductionError::NotPositive);
    }
    let k0 = stability_level()?;
    let target = target_level(phi);
    let level = target + k0;
    let vars: Vec<VarIndex> = phi.varset().iter().collect();
    let count = level_count(level);
    if count <= BigUint::from(vars.len()) {
        return Err(ReductionError::TooFewFormulas { level, count, vars: vars.len() });
    }
    let mut family = FamilyBuilder::new(1);
    let mut bindings = BTreeMap::new();
    let mut renaming = Vec::with_capacity(vars.len());
    for (r, &var) in (1u64..).zip(&vars) {
        let a = family.get(FamilyId::new(level, Letter::A, r))?;
        let b = family.get(FamilyId::new(level, Letter::B, r))?;
        bindings.insert(var, Formula::or(a, b));
        renaming.push((var, r));
    }
    Ok(StarSubstitution { formula: phi.substitute(&bindings), target_level: target, level, renaming })
}

/// Everything computed by [`reduce_to_one_var`].
#[derive(Clone, Debug)]
pub struct TranslationReport {
    pub input: Formula,
    pub embedding: PositiveEmbedding,
    pub star: StarSubstitution,
    /// `l_0`.
    pub base_length: u64,
    /// `k_0`.
    pub stability_level: u32,
}

impl TranslationReport {
    pub fn output(&self) -> &Formula {
        &self.star.formula
    }

    /// `2 · 5^{k_0+1} · |e(φ)|²`, the size bound for the output.
    pub fn size_bound(&self) -> u128 {
        let e = u128::from(self.embedding.embedded.length());
        2 * 5u128.pow(self.stability_level + 1) * e * e
    }

    pub fn bound_ok(&self) -> bool {
        u128::from(self.output().length()) < self.size_bound()
    }
}

/// `φ ↦ e(φ)*`: positive embedding followed by the one-variable
/// substitution.
pub fn reduce_to_one_var(phi: &Formula) -> Result<TranslationReport, ReductionError> {
    let embedding = positive_embed(phi);
    let star = star(&embedding.embedded)?;
    Ok(TranslationReport {
        input: phi.clone(),
        embedding,
        star,
        base_length: base_length(),
        stability_level: stability_level()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Kind;
    use crate::syntax::parse_formula;
    use num_traits::ToPrimitive;

    fn p(i: u32) -> Formula {
        Formula::var(i)
    }

    #[test]
    fn spiral_small_ranks() {
        assert_eq!(spiral_index(2, 2), Ok(1));
        assert_eq!(spiral_index(3, 2), Ok(2));
        assert_eq!(spiral_index(3, 3), Ok(3));
        assert_eq!(spiral_index(2, 3), Ok(4));
        assert_eq!(spiral_index(2, 4), Ok(5));
        assert_eq!(spiral_index(4, 2), Ok(9));
        assert_eq!(spiral_index(5, 2), Ok(10));
        assert_eq!(spiral_index(2, 5), Ok(16));
        assert_eq!(spiral_cell(1), Ok((2, 2)));
        assert_eq!(spiral_cell(4), Ok((2, 3)));
        assert_eq!(spiral_cell(9), Ok((4, 2)));
        assert_eq!(spiral_cell(17), Ok((2, 6)));
    }

    #[test]
    fn spiral_rejects_bad_input() {
        assert_eq!(spiral_index(1, 5), Err(ReductionError::InvalidCell(1, 5)));
        assert_eq!(spiral_index(5, 0), Err(ReductionError::InvalidCell(5, 0)));
        assert_eq!(spiral_cell(0), Err(ReductionError::ZeroRank));
    }

    #[test]
    fn spiral_large_ranks_round_trip() {
        for r in [u64::from(u32::MAX), 1 << 40, (1 << 40) + 1, 999_999_999_999] {
            let (i, j) = spiral_cell(r).unwrap();
            assert_eq!(spiral_index(i, j), Ok(r));
        }
    }

    #[test]
    fn level_counts() {
        let counts: Vec<u64> = (0..=5).map(|k| level_count(k).to_u64().unwrap()).collect();
        assert_eq!(counts, vec![2, 3, 4, 9, 64, 3969]);
    }

    #[test]
    fn family_table_examples() {
        let mut b = FamilyBuilder::new(1);
        let a01 = b.get(FamilyId::new(0, Letter::A, 1)).unwrap();
        let a02 = b.get(FamilyId::new(0, Letter::A, 2)).unwrap();
        let b01 = b.get(FamilyId::new(0, Letter::B, 1)).unwrap();
        let b02 = b.get(FamilyId::new(0, Letter::B, 2)).unwrap();
        let a11 = b.get(FamilyId::new(1, Letter::A, 1)).unwrap();
        assert_eq!(
            a11,
            Formula::implies(Formula::and(a01.clone(), a02.clone()), Formula::or(b01.clone(), b02.clone()))
        );
        let b12 = b.get(FamilyId::new(1, Letter::B, 2)).unwrap();
        let a21 = b.get(FamilyId::new(2, Letter::A, 1)).unwrap();
        let a12 = b.get(FamilyId::new(1, Letter::A, 2)).unwrap();
        let b11 = b.get(FamilyId::new(1, Letter::B, 1)).unwrap();
        assert_eq!(a21, Formula::implies(a11, Formula::or(Formula::or(b11, a12), b12)));
        assert_eq!(a01.varset().iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn family_rejects_out_of_range() {
        let err = family_formula(FamilyId::new(1, Letter::A, 4), 1).unwrap_err();
        assert!(err.to_string().contains("1..=3"));
        assert!(family_formula(FamilyId::new(0, Letter::B, 3), 1).is_err());
        assert!(family_formula(FamilyId::new(2, Letter::B, 0), 1).is_err());
        assert!(family_formula(FamilyId::new(3, Letter::B, 9), 1).is_ok());
        assert!(family_formula(FamilyId::new(3, Letter::B, 10), 1).is_err());
    }

    #[test]
    fn base_length_and_stability_regression() {
        // Frozen under the symbol count of formula::var_length; a change here
        // means the length measure drifted.
        assert_eq!(base_length(), 122);
        assert_eq!(stability_level(), Ok(6));
    }

    #[test]
    fn target_levels() {
        let l0 = base_length();
        assert_eq!(target_level(&p(1)), 0);
        let mut f = p(1);
        while f.length() < l0 {
            f = Formula::diamond(f);
        }
        assert_eq!(f.length(), l0);
        assert_eq!(target_level(&f), 1);
        while f.length() < 5 * l0 {
            f = Formula::boxed(f);
        }
        assert_eq!(target_level(&f), 2);
    }

    #[test]
    fn embed_bottom() {
        let e = positive_embed(&Formula::bottom());
        assert_eq!(e.fresh, 1);
        assert_eq!(e.replaced, p(1));
        let id = Formula::implies(p(1), p(1));
        assert_eq!(e.f1, id);
        assert_eq!(e.f2, id);
        assert_eq!(e.f3, id);
        assert!(e.embedded.is_positive());
    }

    #[test]
    fn embed_keeps_positive_formula() {
        let phi = parse_formula("p1 -> p1").unwrap();
        let e = positive_embed(&phi);
        assert_eq!(e.fresh, 2);
        assert_eq!(e.replaced, phi);
        assert_eq!(e.f3, Formula::implies(p(2), p(1)));
    }

    #[test]
    fn embed_shape_with_modalities() {
        let phi = parse_formula("<>false & p1 | p3").unwrap();
        let e = positive_embed(&phi);
        assert_eq!(e.fresh, 2);
        assert!(e.embedded.is_positive());
        let f = p(2);
        let expected_f1 = Formula::implies(Formula::or(f.clone(), Formula::diamond(f.clone())), f.clone());
        assert_eq!(e.f1, expected_f1);
        let chain = |q: u32| {
            let g = Formula::implies(f.clone(), p(q));
            Formula::and(g.clone(), Formula::boxed(g))
        };
        assert_eq!(e.f3, Formula::and(chain(1), chain(3)));
        assert_eq!(e.replaced, parse_formula("<>p2 & p1 | p3").unwrap());
    }

    #[test]
    fn star_shapes() {
        let out = star(&parse_formula("p1 -> p1").unwrap()).unwrap();
        assert_eq!(out.formula.varset().iter().collect::<Vec<_>>(), vec![1]);
        assert_eq!(out.level, 6);

        let err = star(&Formula::and(Formula::bottom(), p(1))).unwrap_err();
        assert_eq!(err, ReductionError::NotPositive);
    }

    #[test]
    fn star_renames_densely() {
        let phi = parse_formula("p7 -> p3 | p7").unwrap();
        let out = star(&phi).unwrap();
        assert_eq!(out.renaming, vec![(3, 1), (7, 2)]);
        let a = family_formula(FamilyId::new(out.level, Letter::A, 2), 1).unwrap();
        let b = family_formula(FamilyId::new(out.level, Letter::B, 2), 1).unwrap();
        let Kind::Implies(lhs, _) = out.formula.kind() else { panic!() };
        assert_eq!(*lhs, Formula::or(a, b));
    }

    #[test]
    fn reduce_report_consistent() {
        let phi = parse_formula("<>false -> false").unwrap();
        let r = reduce_to_one_var(&phi).unwrap();
        assert!(r.output().is_positive());
        assert_eq!(r.output().varset().iter().collect::<Vec<_>>(), vec![1]);
        assert!(r.bound_ok());
        assert_eq!(r.base_length, 122);
        assert_eq!(r.stability_level, 6);
        assert_eq!(r.star.target_level, target_level(&r.embedding.embedded));
    }
}
