use imred::corpus::{self, FormulaConfig};
use imred::search::{
    check_translation_consistency, enumerate_models, find_countermodel, RefutationResult, SearchBudget, Verdict,
};
use imred::semantics::{eval_naive, first_failure};
use imred::syntax::{parse_model_file, print_certificate};
use imred::{parse_formula, Formula, LogicKind};

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn sample_formulas(seed: u64, count: usize) -> Vec<Formula> {
    let mut rng = corpus::rng(seed);
    (0..count).map(|n| corpus::random_formula(&mut rng, &FormulaConfig::new(2, 3 + n as u64 % 8))).collect()
}

#[test]
fn certificates_are_sound_and_round_trip() {
    let budget = SearchBudget::new(2, 2, 2);
    for phi in sample_formulas(1, 60) {
        for kind in [LogicKind::Fs, LogicKind::Mipc] {
            if let RefutationResult::Countermodel { model, world, point, .. } =
                find_countermodel(&phi, &budget, kind).unwrap()
            {
                assert!(model.validate().is_empty());
                assert_eq!(model.kind(), kind);
                assert_eq!(eval_naive(&model, world, point, &phi), Ok(false), "{phi}");
                let file = parse_model_file(&print_certificate(&model, world, point)).unwrap();
                assert_eq!(file.model, model);
                assert_eq!(file.refutes, Some((world, point)));
            }
        }
    }
}

#[test]
fn first_countermodel_is_first_in_the_stream() {
    let budget = SearchBudget::new(2, 2, 2);
    for phi in sample_formulas(2, 25) {
        let expected = enumerate_models(&budget, LogicKind::Fs)
            .unwrap()
            .find_map(|m| first_failure(&m, &phi).map(|(w, x)| (m, w, x)));
        match (expected, find_countermodel(&phi, &budget, LogicKind::Fs).unwrap()) {
            (Some((m, w, x)), RefutationResult::Countermodel { model, world, point, .. }) => {
                assert_eq!((model, world, point), (m, w, x), "{phi}");
            }
            (None, RefutationResult::Exhausted(_)) => {}
            _ => panic!("stream and search disagree on {phi}"),
        }
    }
}

#[test]
fn deterministic() {
    let budget = SearchBudget::new(3, 2, 2);
    for phi in sample_formulas(3, 20) {
        let render = |r: RefutationResult| match r {
            RefutationResult::Countermodel { model, world, point, stats } => {
                format!("{}{stats}", print_certificate(&model, world, point))
            }
            RefutationResult::Exhausted(stats) => stats.to_string(),
        };
        let a = render(find_countermodel(&phi, &budget, LogicKind::Fs).unwrap());
        let b = render(find_countermodel(&phi, &budget, LogicKind::Fs).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn larger_budgets_keep_refutations() {
    let budgets = [SearchBudget::new(1, 1, 2), SearchBudget::new(1, 2, 2), SearchBudget::new(2, 2, 2), SearchBudget::new(3, 2, 2)];
    for phi in sample_formulas(4, 40) {
        for kind in [LogicKind::Fs, LogicKind::Mipc] {
            let refuted: Vec<bool> =
                budgets.iter().map(|b| find_countermodel(&phi, b, kind).unwrap().is_refuted()).collect();
            assert!(refuted.windows(2).all(|w| !w[0] || w[1]), "{phi} {kind}: {refuted:?}");
        }
    }
}

#[test]
fn mipc_certificates_are_fs_certificates() {
    let budget = SearchBudget::new(2, 3, 2);
    for phi in sample_formulas(5, 40) {
        if let RefutationResult::Countermodel { model, world, point, .. } =
            find_countermodel(&phi, &budget, LogicKind::Mipc).unwrap()
        {
            let as_fs = model.with_kind(LogicKind::Fs);
            assert!(as_fs.validate().is_empty());
            assert_eq!(eval_naive(&as_fs, world, point, &phi), Ok(false));
            assert!(find_countermodel(&phi, &budget, LogicKind::Fs).unwrap().is_refuted());
        }
    }
}

#[test]
fn examples() {
    assert!(!find_countermodel(&f("p1 -> p1"), &SearchBudget::new(2, 2, 1), LogicKind::Fs).unwrap().is_refuted());
    assert!(find_countermodel(&f("<>p1 -> []p1"), &SearchBudget::new(1, 2, 1), LogicKind::Fs).unwrap().is_refuted());
    assert!(!find_countermodel(&f("<>p1 -> []p1"), &SearchBudget::new(1, 1, 1), LogicKind::Fs).unwrap().is_refuted());
    let distribution = f("<>(p1 | p2) -> <>p1 | <>p2");
    assert!(!find_countermodel(&distribution, &SearchBudget::new(2, 3, 2), LogicKind::Fs).unwrap().is_refuted());
}

#[test]
fn consistency_examples() {
    let small = SearchBudget::new(2, 2, 1);
    let r = check_translation_consistency(&f("p1 -> p1"), &small, &small, LogicKind::Fs).unwrap();
    assert!(!r.input.is_refuted() && !r.embedded.is_refuted() && !r.starred.is_refuted());
    assert_eq!((r.embed_verdict, r.star_verdict), (Verdict::Consistent, Verdict::Consistent));

    let r = check_translation_consistency(&f("<>p1 -> []p1"), &small, &SearchBudget::new(2, 2, 2), LogicKind::Fs)
        .unwrap();
    assert!(r.input.is_refuted());
    assert_eq!(r.embed_verdict, Verdict::Consistent);
    assert_eq!(r.embedded_budget.var_bound, 2);
    assert_ne!(r.star_verdict, Verdict::Contradiction);
}

#[test]
fn refuting_phi_with_empty_f_refutes_the_embedding() {
    // From a countermodel of φ, leaving the fresh variable empty gives a
    // countermodel of e(φ) at the same world and point.
    let budget = SearchBudget::new(2, 2, 2);
    for phi in sample_formulas(6, 40) {
        let RefutationResult::Countermodel { model, world, point, .. } =
            find_countermodel(&phi, &budget, LogicKind::Fs).unwrap()
        else {
            continue;
        };
        let e = imred::reduction::positive_embed(&phi);
        if model.valued_vars().contains(&e.fresh) {
            continue;
        }
        assert_eq!(eval_naive(&model, world, point, &e.embedded), Ok(false), "{phi}");
    }
}
