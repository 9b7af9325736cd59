//! Standard host metafunctions.

use std::sync::Arc;

use crate::eval::Evaluator;
use crate::term::{Bindings, Term, Value};
use crate::world::{FnBody, MetaFn, World};

const FOLD_FUEL: u64 = 10_000;

/// Folds a call whose arguments are all constants.
pub fn fold_constants() -> MetaFn {
    Arc::new(|f: &str, args: &[Term], world: &World| {
        if let Some(FnBody::Builtin(b)) = world.function(f).map(|d| &d.body) {
            if b.is_special() {
                return None;
            }
        }
        let vals: Option<Vec<Value>> = args.iter().map(|a| a.quoted_value().cloned()).collect();
        let v = Evaluator::new(world, FOLD_FUEL).apply(f, vals?).ok()?;
        Some((Term::Quote(v), Bindings::new()))
    })
}

/// Binder metafunction: the exact integer length of a constant argument.
pub fn constant_integer_length() -> MetaFn {
    Arc::new(|_f: &str, args: &[Term], _world: &World| match args {
        [x @ Term::Quote(_)] => {
            let sigma: Bindings = [("x", x.clone())].into_iter().collect();
            Some((Term::app("integer-length", vec![Term::var("x")]), sigma))
        }
        _ => None,
    })
}

pub fn register_standard(world: &mut World) {
    world.register_meta_fn("fold-constants", fold_constants());
    world.register_meta_fn("constant-integer-length", constant_integer_length());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let w = World::new();
        let f = fold_constants();
        let (t, s) = f("binary-+", &[Term::quote(Value::int(2)), Term::quote(Value::int(3))], &w).unwrap();
        assert_eq!(t, Term::quote(Value::int(5)));
        assert!(s.is_empty());
        assert!(f("binary-+", &[Term::var("x"), Term::quote(Value::int(3))], &w).is_none());
        assert!(f("abort-rewrite", &[Term::t()], &w).is_none());
    }

    #[test]
    fn integer_length_of_constant() {
        let w = World::new();
        let f = constant_integer_length();
        let (t, s) = f("integer-length-bound", &[Term::quote(Value::int(5))], &w).unwrap();
        assert_eq!(t.to_string(), "(integer-length x)");
        assert_eq!(s.lookup("x"), Some(&Term::quote(Value::int(5))));
        assert!(f("integer-length-bound", &[Term::var("y")], &w).is_none());
    }
}
