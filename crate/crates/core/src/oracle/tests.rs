use super::*;
use crate::rules::{corpus, corpus_world, load_world};
use crate::syntax::parse_term;
use crate::term::{Bindings, Term, Value};
use crate::world::EquivCtx;

fn quick() -> Params {
    Params {
        n_envs: 40,
        n_exts: 2,
        ..Params::default()
    }
}

fn interior(t: &Term, apps: &mut usize, lams: &mut usize) {
    match t {
        Term::Var(_) | Term::Quote(_) => {}
        Term::App(_, args) => {
            *apps += 1;
            args.iter().for_each(|a| interior(a, apps, lams));
        }
        Term::Lam { body, actuals, .. } => {
            *lams += 1;
            interior(body, apps, lams);
            actuals.iter().for_each(|a| interior(a, apps, lams));
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let w = corpus_world();
    for seed in 0..50 {
        assert_eq!(gen_case(seed, &w, CASE_DEPTH), gen_case(seed, &w, CASE_DEPTH));
        assert_eq!(gen_value(seed, 3), gen_value(seed, 3));
    }
}

#[test]
fn values_at_depth_zero_are_leaves() {
    for seed in 0..200 {
        assert!(!matches!(gen_value(seed, 0), Value::Pair(..)));
    }
}

#[test]
fn lambdas_are_common() {
    let w = corpus_world();
    let (mut apps, mut lams) = (0, 0);
    for seed in 0..300 {
        interior(&gen_term(seed, &w, 3), &mut apps, &mut lams);
    }
    assert!(lams * 10 >= apps + lams, "{lams} lambdas of {}", apps + lams);
}

#[test]
fn generated_terms_are_well_formed() {
    let w = corpus_world();
    for seed in 0..300 {
        let c = gen_case(seed, &w, CASE_DEPTH);
        w.check_term(&c.term).unwrap_or_else(|e| panic!("{}: {e}", c.term));
    }
}

#[test]
fn constant_passes() {
    let w = corpus_world();
    let case = Case {
        seed: 0,
        term: Term::Quote(Value::int(3)),
        sigma_i: Bindings::new(),
        ctx: EquivCtx::equal(),
    };
    assert_eq!(check_contract(&w, &case, &quick()), Verdict::Pass);
}

#[test]
fn corpus_satisfies_contract() {
    let w = corpus_world();
    let s = with_big_stack(|| run_contract_suite(&w, 0..300, &quick(), true, |_| {}));
    assert!(s.ok(), "{:?}", s.first_failure.map(|(_, c)| c.to_string()));
}

#[test]
fn planted_bug_is_found_and_shrunk() {
    let w = load_world(&format!("{}\n(defrule bad :lhs (equal x x) :rhs nil)", corpus())).unwrap();
    let p = quick();
    let s = with_big_stack(|| run_contract_suite(&w, 0..2000, &p, true, |_| {}));
    let (_, c) = s.first_failure.expect("bug found");
    let small = with_big_stack(|| shrink(&w, &c, p.config, p.eval_fuel));
    assert!(small.term.depth() <= 3, "{small}");
    assert!(recheck(&w, &small, p.config, p.eval_fuel).is_some());
    let again = with_big_stack(|| shrink(&w, &small, p.config, p.eval_fuel));
    assert_eq!(again, small);
}

#[test]
fn corpus_rule_theorems_hold() {
    let w = corpus_world();
    check_rule_theorems(&w, 7, 300).unwrap();
    check_return_types(&w, 7, 300).unwrap();
}

#[test]
fn binder_results_are_consistent() {
    let w = corpus_world();
    for seed in 0..100 {
        check_binder_consistency(&w, seed, 30).unwrap();
    }
}

#[test]
fn aborts_are_contained() {
    let w = corpus_world();
    for src in ["(equal a b)", "(equal '1 '1)", "(if (equal x y) a b)", "(not (equal (car (cons a b)) a))"] {
        let t = parse_term(src).unwrap();
        for ctx in [EquivCtx::equal(), EquivCtx::iff()] {
            check_abort_containment(&w, &t, &Bindings::new(), &ctx).unwrap();
        }
    }
}

#[test]
fn lambda_strategies_agree() {
    let w = corpus_world();
    for seed in 0..300 {
        let v = check_lambda_differential(&w, seed, 10);
        assert!(!matches!(v, LambdaVerdict::Mismatch { .. }), "{v:?}");
    }
}
