//! Call-by-value evaluation of terms under an environment.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::term::{reflect_value, Term, Value};
use crate::world::{Builtin, FnBody, TypeTag, World};

/// Variable assignment. Unbound variables evaluate to `nil`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env(BTreeMap<Arc<str>, Value>);

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Value {
        self.0.get(var).cloned().unwrap_or(Value::Nil)
    }

    pub fn set(&mut self, var: impl Into<Arc<str>>, v: Value) {
        self.0.insert(var.into(), v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (&**k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'a> FromIterator<(&'a str, Value)> for Env {
    fn from_iter<I: IntoIterator<Item = (&'a str, Value)>>(iter: I) -> Self {
        Env(iter.into_iter().map(|(k, v)| (Arc::from(k), v)).collect())
    }
}

impl FromIterator<(Arc<str>, Value)> for Env {
    fn from_iter<I: IntoIterator<Item = (Arc<str>, Value)>>(iter: I) -> Self {
        Env(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{name} expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: String,
        got: usize,
    },
    #[error("evaluation fuel exhausted")]
    FuelExhausted,
}

const MAX_DEPTH: usize = 2_000;

pub fn ifix(v: &Value) -> BigInt {
    match v {
        Value::Integer(i) => i.clone(),
        _ => BigInt::zero(),
    }
}

/// Number of bits needed to represent `i` in two's complement, excluding the sign bit.
pub fn integer_length(i: &BigInt) -> u64 {
    if i.is_negative() {
        (-i - BigInt::one()).bits()
    } else {
        i.bits()
    }
}

/// A fuel-limited evaluator. `steps` counts defined-function applications.
pub struct Evaluator<'w> {
    world: &'w World,
    fuel: u64,
    depth: usize,
    pub steps: u64,
}

impl<'w> Evaluator<'w> {
    pub fn new(world: &'w World, fuel: u64) -> Self {
        Evaluator {
            world,
            fuel,
            depth: 0,
            steps: 0,
        }
    }

    pub fn remaining_fuel(&self) -> u64 {
        self.fuel
    }

    pub fn eval(&mut self, t: &Term, env: &Env) -> Result<Value, EvalError> {
        match t {
            Term::Quote(v) => Ok(v.clone()),
            Term::Var(v) => Ok(env.get(v)),
            Term::Lam {
                formals,
                body,
                actuals,
            } => {
                let vals = actuals
                    .iter()
                    .map(|a| self.eval(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                let inner: Env = formals.iter().cloned().zip(vals).collect();
                self.nested(|ev| ev.eval(body, &inner))
            }
            Term::App(f, args) => {
                let def = self
                    .world
                    .function(f)
                    .ok_or_else(|| EvalError::UnknownFunction(f.to_string()))?;
                if !def.arity.accepts(args.len()) {
                    return Err(EvalError::ArityMismatch {
                        name: f.to_string(),
                        expected: format!("{:?}", def.arity),
                        got: args.len(),
                    });
                }
                match &def.body {
                    FnBody::Builtin(Builtin::If) => {
                        let test = self.eval(&args[0], env)?;
                        if test.is_nil() {
                            self.eval(&args[2], env)
                        } else {
                            self.eval(&args[1], env)
                        }
                    }
                    FnBody::Builtin(b) => {
                        let vals = args
                            .iter()
                            .map(|a| self.eval(a, env))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(apply_builtin(*b, &vals, self.world))
                    }
                    FnBody::Defined { formals, body } => {
                        let vals = args
                            .iter()
                            .map(|a| self.eval(a, env))
                            .collect::<Result<Vec<_>, _>>()?;
                        self.apply_defined(formals, body, vals)
                    }
                }
            }
        }
    }

    fn apply_defined(&mut self, formals: &[Arc<str>], body: &Term, vals: Vec<Value>) -> Result<Value, EvalError> {
        if self.fuel == 0 {
            return Err(EvalError::FuelExhausted);
        }
        self.fuel -= 1;
        self.steps += 1;
        let inner: Env = formals.iter().cloned().zip(vals).collect();
        self.nested(|ev| ev.eval(body, &inner))
    }

    /// Applies a function to already-evaluated arguments.
    pub fn apply(&mut self, f: &str, vals: Vec<Value>) -> Result<Value, EvalError> {
        let def = self
            .world
            .function(f)
            .ok_or_else(|| EvalError::UnknownFunction(f.to_string()))?;
        if !def.arity.accepts(vals.len()) {
            return Err(EvalError::ArityMismatch {
                name: f.to_string(),
                expected: format!("{:?}", def.arity),
                got: vals.len(),
            });
        }
        match &def.body {
            FnBody::Builtin(Builtin::If) => Ok(if vals[0].is_nil() {
                vals[2].clone()
            } else {
                vals[1].clone()
            }),
            FnBody::Builtin(b) => Ok(apply_builtin(*b, &vals, self.world)),
            FnBody::Defined { formals, body } => self.apply_defined(formals, body, vals),
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, EvalError>) -> Result<T, EvalError> {
        if self.depth >= MAX_DEPTH {
            return Err(EvalError::FuelExhausted);
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }
}

/// Evaluates `t` under `env` with the given fuel budget.
pub fn eval_term(t: &Term, env: &Env, world: &World, fuel: u64) -> Result<Value, EvalError> {
    Evaluator::new(world, fuel).eval(t, env)
}

fn apply_builtin(b: Builtin, args: &[Value], world: &World) -> Value {
    let arg = |i: usize| &args[i];
    match b {
        Builtin::Cons => Value::cons(arg(0).clone(), arg(1).clone()),
        Builtin::Car => arg(0).car(),
        Builtin::Cdr => arg(0).cdr(),
        Builtin::Consp => Value::bool(matches!(arg(0), Value::Pair(..))),
        Builtin::Integerp => Value::bool(matches!(arg(0), Value::Integer(_))),
        Builtin::Booleanp => Value::bool(matches!(arg(0), Value::Nil | Value::True)),
        Builtin::Symbolp => Value::bool(matches!(arg(0), Value::Nil | Value::True | Value::Symbol(_))),
        Builtin::Equal => Value::bool(arg(0) == arg(1)),
        Builtin::Iff => Value::bool(arg(0).is_nil() == arg(1).is_nil()),
        Builtin::If => {
            if arg(0).is_nil() {
                arg(2).clone()
            } else {
                arg(1).clone()
            }
        }
        Builtin::Not => Value::bool(arg(0).is_nil()),
        Builtin::Intcar => Value::bool(ifix(arg(0)).is_odd()),
        Builtin::Intcdr | Builtin::Logcdr => Value::Integer(ifix(arg(0)) >> 1),
        Builtin::IntEndp => {
            let i = ifix(arg(0));
            Value::bool(i.is_zero() || i == -BigInt::one())
        }
        Builtin::IntegerLength => Value::int(integer_length(&ifix(arg(0)))),
        Builtin::Plus => Value::Integer(ifix(arg(0)) + ifix(arg(1))),
        Builtin::Times => Value::Integer(ifix(arg(0)) * ifix(arg(1))),
        Builtin::Negate => Value::Integer(-ifix(arg(0))),
        Builtin::Less => Value::bool(ifix(arg(0)) < ifix(arg(1))),
        Builtin::MemberEqual => {
            let mut cur = arg(1).clone();
            while let Value::Pair(h, t) = &cur {
                if **h == *arg(0) {
                    return cur;
                }
                let next = (**t).clone();
                cur = next;
            }
            Value::Nil
        }
        Builtin::Append => {
            let mut items = Vec::new();
            let mut cur = arg(0);
            while let Value::Pair(h, t) = cur {
                items.push((**h).clone());
                cur = t;
            }
            items
                .into_iter()
                .rev()
                .fold(arg(1).clone(), |tail, h| Value::cons(h, tail))
        }
        Builtin::Mv => Value::list(args.to_vec()),
        Builtin::MvNth => {
            let n = ifix(arg(0));
            let mut cur = arg(1).clone();
            if n.is_positive() {
                let k = n.to_usize().unwrap_or(usize::MAX);
                for _ in 0..k {
                    cur = cur.cdr();
                    if cur.is_nil() {
                        break;
                    }
                }
            }
            cur.car()
        }
        Builtin::Unequiv => Value::True,
        Builtin::AbortRewrite | Builtin::FglInterpObj => arg(0).clone(),
        Builtin::Assume => arg(1).clone(),
        Builtin::SyntaxInterp => Value::Nil,
        Builtin::Syntaxp | Builtin::BindFree => Value::True,
        Builtin::SyntacticTypeP => {
            let known = reflect_value(arg(0))
                .ok()
                .zip(arg(1).as_symbol().and_then(TypeTag::from_name))
                .map(|(t, tag)| world.syntactic_type(&t).has(tag))
                .unwrap_or(false);
            Value::bool(known)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn ev(src: &str, env: &Env) -> Result<Value, EvalError> {
        eval_term(&parse_term(src).unwrap(), env, &World::new(), 100)
    }

    #[test]
    fn examples() {
        assert_eq!(ev("'5", &Env::new()).unwrap(), Value::int(5));
        let env: Env = [("x", Value::int(2))].into_iter().collect();
        assert_eq!(
            ev("(cons x 'nil)", &env).unwrap(),
            Value::cons(Value::int(2), Value::Nil)
        );
        assert_eq!(ev("y", &env).unwrap(), Value::Nil);
    }

    #[test]
    fn integer_builtins() {
        let e = Env::new();
        assert_eq!(ev("(intcar '5)", &e).unwrap(), Value::True);
        assert_eq!(ev("(intcar '-2)", &e).unwrap(), Value::Nil);
        assert_eq!(ev("(intcdr '5)", &e).unwrap(), Value::int(2));
        assert_eq!(ev("(intcdr '-1)", &e).unwrap(), Value::int(-1));
        assert_eq!(ev("(intcdr '-3)", &e).unwrap(), Value::int(-2));
        assert_eq!(ev("(int-endp '-1)", &e).unwrap(), Value::True);
        assert_eq!(ev("(int-endp 'a)", &e).unwrap(), Value::True);
        assert_eq!(ev("(int-endp '2)", &e).unwrap(), Value::Nil);
        assert_eq!(ev("(integer-length '0)", &e).unwrap(), Value::int(0));
        assert_eq!(ev("(integer-length '8)", &e).unwrap(), Value::int(4));
        assert_eq!(ev("(integer-length '-8)", &e).unwrap(), Value::int(3));
        assert_eq!(ev("(integer-length '-9)", &e).unwrap(), Value::int(4));
        assert_eq!(ev("(binary-+ 'a '3)", &e).unwrap(), Value::int(3));
    }

    #[test]
    fn list_builtins() {
        let e = Env::new();
        assert_eq!(ev("(car '5)", &e).unwrap(), Value::Nil);
        assert_eq!(ev("(member-equal '2 '(1 2 3))", &e).unwrap().to_string(), "(2 3)");
        assert_eq!(ev("(member-equal '4 '(1 2 3))", &e).unwrap(), Value::Nil);
        assert_eq!(ev("(append '(1 2) '(3))", &e).unwrap().to_string(), "(1 2 3)");
        assert_eq!(ev("(mv-nth '1 (mv '1 '2))", &e).unwrap(), Value::int(2));
        assert_eq!(ev("(mv-nth '5 (mv '1 '2))", &e).unwrap(), Value::Nil);
        assert_eq!(ev("(symbolp 'nil)", &e).unwrap(), Value::True);
    }

    #[test]
    fn errors() {
        assert_eq!(
            ev("(undefined-fn)", &Env::new()),
            Err(EvalError::UnknownFunction("undefined-fn".into()))
        );
        assert!(matches!(
            ev("(car '1 '2)", &Env::new()),
            Err(EvalError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn fuel_bounds_recursion() {
        let mut w = World::new();
        w.add_function("loop", vec![Arc::from("x")], parse_term("(loop x)").unwrap())
            .unwrap();
        assert_eq!(
            eval_term(&parse_term("(loop '1)").unwrap(), &Env::new(), &w, 50),
            Err(EvalError::FuelExhausted)
        );
    }

    #[test]
    fn lambda_matches_direct_call() {
        let mut w = World::new();
        w.add_function(
            "f",
            vec![Arc::from("a"), Arc::from("b")],
            parse_term("(cons b a)").unwrap(),
        )
        .unwrap();
        w.add_function("b-expr", vec![], parse_term("'(9)").unwrap()).unwrap();
        let env: Env = [("a", Value::int(4))].into_iter().collect();
        let lam = parse_term("((lambda (a b) (f a b)) a (b-expr))").unwrap();
        let direct = parse_term("(f a (b-expr))").unwrap();
        assert_eq!(
            eval_term(&lam, &env, &w, 10).unwrap(),
            eval_term(&direct, &env, &w, 10).unwrap()
        );
    }
}
