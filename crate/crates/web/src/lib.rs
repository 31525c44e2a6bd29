//! Browser bindings for the demo page in `www/`.
//!
//! Each export has a plain Rust twin (`*_text`) so the logic can be tested
//! natively.

use wasm_bindgen::prelude::*;

use imred::reduction::{base_length, family_formula, reduce_to_one_var, spiral_index, FamilyId, Letter};
use imred::search::{find_countermodel, RefutationResult, SearchBudget};
use imred::syntax::print_certificate;
use imred::{parse_formula, LogicKind};

/// Longest formula the page prints in full.
const MAX_PRINT: u64 = 20_000;

/// `e(φ)*` with its length accounting, one `key\tvalue` per line.
pub fn translate_text(formula: &str) -> Result<String, String> {
    let phi = parse_formula(formula).map_err(|e| e.to_string())?;
    let report = reduce_to_one_var(&phi).map_err(|e| e.to_string())?;
    let out = report.output();
    let show = |f: &imred::Formula| {
        if f.length() <= MAX_PRINT {
            f.to_string()
        } else {
            format!("<length {}>", f.length())
        }
    };
    let lines = [
        ("embedded", show(&report.embedding.embedded)),
        ("output", show(out)),
        ("k_phi", report.star.target_level.to_string()),
        ("level", report.star.level.to_string()),
        ("k0", report.stability_level.to_string()),
        ("l0", base_length().to_string()),
        ("length_input", phi.length().to_string()),
        ("length_embedded", report.embedding.embedded.length().to_string()),
        ("length_output", out.length().to_string()),
        ("distinct_subformulas", out.dag_size().to_string()),
        ("size_bound", report.size_bound().to_string()),
        ("bound_ok", report.bound_ok().to_string()),
    ];
    Ok(lines.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect())
}

/// Spiral ranks of the cells `(i, j)`, `2 <= i, j < 2 + size`, row by row.
pub fn spiral_ranks(size: u32) -> Vec<u32> {
    let size = u64::from(size.min(64));
    let mut out = Vec::with_capacity((size * size) as usize);
    for i in 2..2 + size {
        for j in 2..2 + size {
            out.push(spiral_index(i, j).expect("cells start at 2") as u32);
        }
    }
    out
}

/// `A^level_index` or `B^level_index` over `p1`.
pub fn family_text(letter: &str, level: u32, index: u64) -> Result<String, String> {
    let letter = match letter {
        "A" | "a" => Letter::A,
        "B" | "b" => Letter::B,
        other => return Err(format!("letter must be A or B, got `{other}`")),
    };
    let f = family_formula(FamilyId::new(level, letter, index), 1).map_err(|e| e.to_string())?;
    if f.length() > MAX_PRINT {
        return Ok(format!("<length {}>", f.length()));
    }
    Ok(f.to_string())
}

/// A countermodel certificate, or an `exhausted` line.
pub fn refute_text(formula: &str, max_worlds: usize, max_points: usize, mipc: bool) -> Result<String, String> {
    let phi = parse_formula(formula).map_err(|e| e.to_string())?;
    let vars = phi.varset().max().unwrap_or(0);
    let budget = SearchBudget::new(max_worlds, max_points, vars).with_candidate_cap(50_000_000);
    let kind = if mipc { LogicKind::Mipc } else { LogicKind::Fs };
    Ok(match find_countermodel(&phi, &budget, kind).map_err(|e| e.to_string())? {
        RefutationResult::Countermodel { model, world, point, .. } => print_certificate(&model, world, point),
        RefutationResult::Exhausted(stats) => format!("exhausted\t{budget}\t{stats}\n"),
    })
}

#[wasm_bindgen]
pub fn translate(formula: &str) -> Result<String, JsValue> {
    translate_text(formula).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spiral(size: u32) -> Vec<u32> {
    spiral_ranks(size)
}

#[wasm_bindgen]
pub fn family(letter: &str, level: u32, index: u32) -> Result<String, JsValue> {
    family_text(letter, level, u64::from(index)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn refute(formula: &str, max_worlds: u32, max_points: u32, mipc: bool) -> Result<String, JsValue> {
    refute_text(formula, max_worlds as usize, max_points as usize, mipc).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translate_reports_bound() {
        let t = translate_text("p1 -> p1").unwrap();
        assert!(t.contains("bound_ok\ttrue\n"));
        assert!(t.contains("k0\t6\n"));
        assert!(translate_text("p1 ->").is_err());
    }

    #[test]
    fn spiral_grid() {
        let g = spiral_ranks(2);
        // cells (2,2) (2,3) / (3,2) (3,3)
        assert_eq!(g, vec![1, 4, 2, 3]);
    }

    #[test]
    fn family_and_refute() {
        assert!(family_text("A", 0, 1).unwrap().starts_with("(<>p1 -> p1)"));
        assert!(family_text("C", 0, 1).is_err());
        assert!(refute_text("<>p1 -> []p1", 1, 2, false).unwrap().contains("refutes w0"));
        assert!(refute_text("p1 -> p1", 2, 2, true).unwrap().starts_with("exhausted"));
    }
}
