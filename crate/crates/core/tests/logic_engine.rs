mod common;

use proptest::prelude::*;

use common::datalog::{check_findall, check_negation, check_program, Program};
use common::terms::{check_cut, check_mgu, random_term};
use logiplan::logic::kb::parse_program;
use logiplan::logic::subst::Bindings;
use logiplan::logic::{solve_all, unify, KnowledgeBase, Provenance, SolveBudget, Substitution, Term, ACQUIRER_PROGRAM};

fn answers(kb: &KnowledgeBase, goal: &str, var: &str) -> Vec<String> {
    solve_all(kb, goal, SolveBudget::default())
        .unwrap_or_else(|e| panic!("{goal}: {e}"))
        .iter()
        .map(|a| a.get(var).unwrap().to_string())
        .collect()
}

#[test]
fn acquirer_transcript() {
    let mut kb = KnowledgeBase::new();
    kb.consult(ACQUIRER_PROGRAM, Provenance::Program).unwrap();
    assert_eq!(
        answers(&kb, "not_in_same_country(lehman_brothers, Y)", "Y"),
        ["gringotts", "dagoberts_vault", "dagoberts_geldpakhuis", "medici", "tellsons_bank"]
    );
    assert_eq!(
        answers(&kb, "acquirers_in_same_country(dagoberts_vault, Y)", "Y"),
        ["dagoberts_geldpakhuis"]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_match_bottom_up(seed in any::<u64>()) {
        check_program(&Program::generate(&mut common::rng(seed))).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn findall_materializes_every_answer(seed in any::<u64>()) {
        check_findall(&Program::generate(&mut common::rng(seed))).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn negate_agrees_with_naf(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let prog = Program::generate(&mut rng);
        check_negation(&mut rng, &prog, 16).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn cut_commits_to_first_p1(p1 in prop::collection::vec(0..4i64, 0..5), p2 in prop::collection::vec((0..4i64, 0..4i64), 0..8)) {
        check_cut(&p1, &p2).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn unifier_is_most_general(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for _ in 0..50 {
            let a = random_term(&mut rng, 3);
            let b = random_term(&mut rng, 3);
            check_mgu(&a, &b).map_err(TestCaseError::fail)?;
        }
    }

    #[test]
    fn listing_round_trips(seed in any::<u64>()) {
        let prog = Program::generate(&mut common::rng(seed));
        let kb = prog.knowledge_base();
        let listed = kb.listing();
        let mut again = KnowledgeBase::new();
        again.consult(&listed, Provenance::Program).unwrap();
        prop_assert_eq!(again.listing(), listed.clone());
        let clauses_only = |t: &str| t.lines().filter(|l| !l.starts_with(":-")).collect::<Vec<_>>().join("\n");
        let before = parse_program(&clauses_only(&prog.source())).unwrap();
        let after = parse_program(&clauses_only(&listed)).unwrap();
        let render = |cs: &[logiplan::logic::Clause]| cs.iter().map(|c| c.render(kb.ops())).collect::<Vec<_>>();
        let mut b = render(&before);
        let mut a = render(&after);
        b.sort();
        a.sort();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn mgu_examples() {
    let x = Term::Var(0);
    let y = Term::Var(1);
    let s = unify(
        &Term::compound("f", vec![x.clone(), Term::atom("b")]),
        &Term::compound("f", vec![Term::atom("a"), y.clone()]),
        &Substitution::new(),
        true,
    )
    .unwrap();
    assert_eq!(s.resolve(&x), Term::atom("a"));
    assert_eq!(s.resolve(&y), Term::atom("b"));
    assert!(unify(&x, &Term::compound("f", vec![x.clone()]), &Substitution::new(), true).is_none());
    // Without the occurs check the binding is made.
    assert!(unify(&x, &Term::compound("f", vec![x.clone()]), &Substitution::new(), false).is_some());
}
