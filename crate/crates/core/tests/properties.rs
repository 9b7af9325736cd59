use proptest::prelude::*;

use rw_core::{apply_subst, corpus_world, eval_term, one_way_unify, reflect_value, reify_term, Bindings, Env, Term, Value};

fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Nil),
        Just(Value::True),
        (-20i64..20).prop_map(Value::int),
        prop::sample::select(vec!["foo", "bar"]).prop_map(|s| Value::Symbol(s.into())),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Value::Pair(a.into(), b.into()))
    })
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var),
        value().prop_map(Term::Quote),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("cons", vec![a, b])),
            inner.clone().prop_map(|a| Term::app("car", vec![a])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("equal", vec![a, b])),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| Term::app("if", vec![a, b, c])),
        ]
    })
}

fn bindings() -> impl Strategy<Value = Bindings> {
    prop::collection::vec(term(), 3).prop_map(|ts| {
        let mut b = Bindings::new();
        for (v, t) in ["x", "y", "z"].into_iter().zip(ts) {
            b.bind(v, t);
        }
        b
    })
}

proptest! {
    #[test]
    fn unify_finds_instances(p in term(), sigma in bindings()) {
        let target = apply_subst(&p, &sigma);
        let found = one_way_unify(&p, &target);
        prop_assert!(found.is_some());
        prop_assert_eq!(apply_subst(&p, &found.unwrap()), target);
    }

    #[test]
    fn unify_is_sound(p in term(), t in term()) {
        if let Some(s) = one_way_unify(&p, &t) {
            prop_assert_eq!(apply_subst(&p, &s), t);
        }
    }

    #[test]
    fn reify_round_trips(t in term()) {
        prop_assert_eq!(reflect_value(&reify_term(&t)).unwrap(), t);
    }

    #[test]
    fn subst_commutes_with_eval(t in term(), sigma in bindings(), vals in prop::collection::vec(value(), 3)) {
        let w = corpus_world();
        let mut env = Env::new();
        for (v, val) in ["x", "y", "z"].into_iter().zip(vals) {
            env.set(v, val);
        }
        let mut inner = Env::new();
        for (v, bound) in sigma.iter() {
            inner.set(v, eval_term(bound, &env, &w, 10_000).unwrap());
        }
        let lhs = eval_term(&apply_subst(&t, &sigma), &env, &w, 10_000).unwrap();
        prop_assert_eq!(lhs, eval_term(&t, &inner, &w, 10_000).unwrap());
    }
}
