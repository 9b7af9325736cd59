//! Ground values, terms, substitutions and one-way unification.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

/// A ground value of the object language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Nil,
    True,
    Symbol(Arc<str>),
    Integer(BigInt),
    Pair(Arc<Value>, Arc<Value>),
}

impl Value {
    pub fn sym(name: &str) -> Value {
        match name {
            "nil" => Value::Nil,
            "t" => Value::True,
            _ => Value::Symbol(Arc::from(name)),
        }
    }

    pub fn int(i: impl Into<BigInt>) -> Value {
        Value::Integer(i.into())
    }

    pub fn cons(head: Value, tail: Value) -> Value {
        Value::Pair(Arc::new(head), Arc::new(tail))
    }

    pub fn bool(b: bool) -> Value {
        if b {
            Value::True
        } else {
            Value::Nil
        }
    }

    /// Builds a proper list.
    pub fn list<I>(items: I) -> Value
    where
        I: IntoIterator<Item = Value>,
        I::IntoIter: DoubleEndedIterator,
    {
        items
            .into_iter()
            .rev()
            .fold(Value::Nil, |tail, head| Value::cons(head, tail))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Nil)
    }

    pub fn car(&self) -> Value {
        match self {
            Value::Pair(h, _) => (**h).clone(),
            _ => Value::Nil,
        }
    }

    pub fn cdr(&self) -> Value {
        match self {
            Value::Pair(_, t) => (**t).clone(),
            _ => Value::Nil,
        }
    }

    /// Elements of a proper list, or `None` for an improper one.
    pub fn to_vec(&self) -> Option<Vec<Value>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Value::Nil => return Some(out),
                Value::Pair(h, t) => {
                    out.push((**h).clone());
                    cur = t;
                }
                _ => return None,
            }
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Value::Symbol(s) => Some(s),
            Value::Nil => Some("nil"),
            Value::True => Some("t"),
            _ => None,
        }
    }

    /// Number of nodes in the value tree.
    pub fn size(&self) -> usize {
        match self {
            Value::Pair(h, t) => 1 + h.size() + t.size(),
            _ => 1,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => write!(f, "nil"),
            Value::True => write!(f, "t"),
            Value::Symbol(s) => write!(f, "{s}"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Pair(h, t) => {
                // (quote x) prints as 'x
                if let (Value::Symbol(q), Value::Pair(x, rest)) = (&**h, &**t) {
                    if &**q == "quote" && rest.is_nil() {
                        return write!(f, "'{x}");
                    }
                }
                write!(f, "({h}")?;
                let mut cur: &Value = t;
                loop {
                    match cur {
                        Value::Nil => break,
                        Value::Pair(h, t) => {
                            write!(f, " {h}")?;
                            cur = t;
                        }
                        other => {
                            write!(f, " . {other}")?;
                            break;
                        }
                    }
                }
                write!(f, ")")
            }
        }
    }
}

/// A term of the object language. Result objects are terms as well.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Arc<str>),
    Quote(Value),
    App(Arc<str>, Vec<Term>),
    Lam {
        formals: Vec<Arc<str>>,
        body: Box<Term>,
        actuals: Vec<Term>,
    },
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    pub fn quote(v: Value) -> Term {
        Term::Quote(v)
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(f), args)
    }

    pub fn lam(formals: &[&str], body: Term, actuals: Vec<Term>) -> Term {
        Term::Lam {
            formals: formals.iter().map(|s| Arc::from(*s)).collect(),
            body: Box::new(body),
            actuals,
        }
    }

    pub fn nil() -> Term {
        Term::Quote(Value::Nil)
    }

    pub fn t() -> Term {
        Term::Quote(Value::True)
    }

    pub fn is_quote(&self) -> bool {
        matches!(self, Term::Quote(_))
    }

    pub fn quoted_value(&self) -> Option<&Value> {
        match self {
            Term::Quote(v) => Some(v),
            _ => None,
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut Vec<Arc<str>>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Quote(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_free(out)),
            Term::Lam { actuals, .. } => {
                // body variables are all formals in a well-formed lambda; inside the
                // engine a stripped lambda may reference outer variables too
                actuals.iter().for_each(|a| a.collect_free(out));
            }
        }
    }

    /// Every variable name occurring anywhere, including lambda bodies and the
    /// quoted terms carried by `syntax-interp`.
    pub fn all_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Quote(_) => {}
            Term::App(f, args) => {
                if &**f == "syntax-interp" {
                    if let [Term::Quote(v)] = args.as_slice() {
                        if let Ok(inner) = reflect_value(v) {
                            inner.collect_all(out);
                        }
                    }
                }
                args.iter().for_each(|a| a.collect_all(out));
            }
            Term::Lam {
                formals,
                body,
                actuals,
            } => {
                out.extend(formals.iter().cloned());
                body.collect_all(out);
                actuals.iter().for_each(|a| a.collect_all(out));
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::Quote(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            Term::Lam { body, actuals, .. } => {
                1 + actuals
                    .iter()
                    .map(Term::depth)
                    .chain(std::iter::once(body.depth()))
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Quote(v) => v.size(),
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Lam { body, actuals, .. } => {
                1 + body.size() + actuals.iter().map(Term::size).sum::<usize>()
            }
        }
    }

    pub fn contains_lambda(&self) -> bool {
        match self {
            Term::Var(_) | Term::Quote(_) => false,
            Term::App(_, args) => args.iter().any(Term::contains_lambda),
            Term::Lam { .. } => true,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Quote(v) => write!(f, "'{v}"),
            Term::App(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Term::Lam {
                formals,
                body,
                actuals,
            } => {
                write!(f, "((lambda (")?;
                for (i, v) in formals.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ") {body})")?;
                for a in actuals {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Ordered variable bindings. No variable is bound twice.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bindings {
    pairs: Vec<(Arc<str>, Term)>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, var: &str) -> Option<&Term> {
        self.pairs
            .iter()
            .find(|(v, _)| &**v == var)
            .map(|(_, t)| t)
    }

    pub fn is_bound(&self, var: &str) -> bool {
        self.lookup(var).is_some()
    }

    /// Adds a binding for an unbound variable. Returns false (and leaves the
    /// bindings unchanged) when the variable is already bound.
    pub fn bind(&mut self, var: impl Into<Arc<str>>, t: Term) -> bool {
        let var = var.into();
        if self.is_bound(&var) {
            return false;
        }
        self.pairs.push((var, t));
        true
    }

    /// `front :: self`, with bindings of `front` shadowing those of `self`.
    pub fn shadowed_by(&self, front: &Bindings) -> Bindings {
        let mut pairs = front.pairs.clone();
        pairs.extend(
            self.pairs
                .iter()
                .filter(|(v, _)| !front.is_bound(v))
                .cloned(),
        );
        Bindings { pairs }
    }

    /// True iff every pair of `self` appears unchanged in `other`.
    pub fn extended_by(&self, other: &Bindings) -> bool {
        self.pairs
            .iter()
            .all(|(v, t)| other.lookup(v) == Some(t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.pairs.iter().map(|(v, t)| (&**v, t))
    }

    pub fn vars(&self) -> impl Iterator<Item = &Arc<str>> {
        self.pairs.iter().map(|(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Drops the pair at `idx`, used by the shrinker.
    pub fn without(&self, idx: usize) -> Bindings {
        let mut pairs = self.pairs.clone();
        pairs.remove(idx);
        Bindings { pairs }
    }

    pub fn with_replaced(&self, idx: usize, t: Term) -> Bindings {
        let mut pairs = self.pairs.clone();
        pairs[idx].1 = t;
        Bindings { pairs }
    }
}

impl FromIterator<(Arc<str>, Term)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (Arc<str>, Term)>>(iter: I) -> Self {
        let mut b = Bindings::new();
        for (v, t) in iter {
            b.bind(v, t);
        }
        b
    }
}

impl<'a> FromIterator<(&'a str, Term)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (&'a str, Term)>>(iter: I) -> Self {
        iter.into_iter().map(|(v, t)| (Arc::from(v), t)).collect()
    }
}

impl fmt::Display for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (v, t)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "({v} . {t})")?;
        }
        write!(f, ")")
    }
}

/// Applies `sigma` to `t`. Unbound variables stay as themselves; lambda formals
/// shadow `sigma` inside the body.
pub fn apply_subst(t: &Term, sigma: &Bindings) -> Term {
    match t {
        Term::Var(v) => sigma.lookup(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Quote(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| apply_subst(a, sigma)).collect()),
        Term::Lam {
            formals,
            body,
            actuals,
        } => {
            let inner: Bindings = sigma
                .iter()
                .filter(|(v, _)| !formals.iter().any(|f| &**f == *v))
                .map(|(v, t)| (Arc::<str>::from(v), t.clone()))
                .collect();
            Term::Lam {
                formals: formals.clone(),
                body: Box::new(apply_subst(body, &inner)),
                actuals: actuals.iter().map(|a| apply_subst(a, sigma)).collect(),
            }
        }
    }
}

/// One-way matching of a lambda-free `pattern` against `target`.
pub fn one_way_unify(pattern: &Term, target: &Term) -> Option<Bindings> {
    let mut sigma = Bindings::new();
    unify_into(pattern, target, &mut sigma, true).then_some(sigma)
}

/// Extends `sigma` so that `pattern \ sigma = target`. With `check_nonlinear`
/// false, a repeated pattern variable keeps its first binding without checking
/// the second occurrence (only used to plant a deliberate engine bug).
pub fn unify_into(pattern: &Term, target: &Term, sigma: &mut Bindings, check_nonlinear: bool) -> bool {
    match (pattern, target) {
        (Term::Var(v), _) => match sigma.lookup(v) {
            Some(bound) => !check_nonlinear || bound == target,
            None => {
                sigma.bind(v.clone(), target.clone());
                true
            }
        },
        (Term::Quote(a), Term::Quote(b)) => a == b,
        (Term::App(f, pargs), Term::App(g, targs)) => {
            f == g
                && pargs.len() == targs.len()
                && pargs
                    .iter()
                    .zip(targs)
                    .all(|(p, t)| unify_into(p, t, sigma, check_nonlinear))
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReflectError {
    #[error("not a term encoding: {0}")]
    NotATerm(Value),
    #[error("malformed lambda: {0}")]
    BadLambda(String),
}

/// Encodes a term as an s-expression value.
pub fn reify_term(t: &Term) -> Value {
    match t {
        Term::Var(v) => Value::Symbol(v.clone()),
        Term::Quote(v) => Value::list([Value::sym("quote"), v.clone()]),
        Term::App(f, args) => Value::cons(
            Value::Symbol(f.clone()),
            Value::list(args.iter().map(reify_term).collect::<Vec<_>>()),
        ),
        Term::Lam {
            formals,
            body,
            actuals,
        } => {
            let lam = Value::list([
                Value::sym("lambda"),
                Value::list(formals.iter().map(|f| Value::Symbol(f.clone())).collect::<Vec<_>>()),
                reify_term(body),
            ]);
            Value::cons(lam, Value::list(actuals.iter().map(reify_term).collect::<Vec<_>>()))
        }
    }
}

/// Decodes a value produced by [`reify_term`].
pub fn reflect_value(v: &Value) -> Result<Term, ReflectError> {
    match v {
        Value::Symbol(s) => Ok(Term::Var(s.clone())),
        Value::Pair(head, tail) => {
            let args = tail.to_vec().ok_or_else(|| ReflectError::NotATerm(v.clone()))?;
            match &**head {
                Value::Symbol(s) if &**s == "quote" => match args.as_slice() {
                    [x] => Ok(Term::Quote(x.clone())),
                    _ => Err(ReflectError::NotATerm(v.clone())),
                },
                Value::Symbol(s) if &**s == "lambda" => Err(ReflectError::NotATerm(v.clone())),
                Value::Symbol(f) => Ok(Term::App(
                    f.clone(),
                    args.iter().map(reflect_value).collect::<Result<_, _>>()?,
                )),
                Value::Pair(..) => {
                    let lam = head.to_vec().ok_or_else(|| ReflectError::NotATerm(v.clone()))?;
                    let [kw, formals, body] = lam.as_slice() else {
                        return Err(ReflectError::BadLambda(head.to_string()));
                    };
                    if kw.as_symbol() != Some("lambda") {
                        return Err(ReflectError::NotATerm(v.clone()));
                    }
                    let formals = formals
                        .to_vec()
                        .ok_or_else(|| ReflectError::BadLambda(head.to_string()))?
                        .into_iter()
                        .map(|f| match f {
                            Value::Symbol(s) => Ok(s),
                            _ => Err(ReflectError::BadLambda(head.to_string())),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let body = reflect_value(body)?;
                    let actuals = args.iter().map(reflect_value).collect::<Result<Vec<_>, _>>()?;
                    check_lambda(&formals, &body, &actuals)
                        .map_err(ReflectError::BadLambda)?;
                    Ok(Term::Lam {
                        formals,
                        body: Box::new(body),
                        actuals,
                    })
                }
                _ => Err(ReflectError::NotATerm(v.clone())),
            }
        }
        _ => Err(ReflectError::NotATerm(v.clone())),
    }
}

/// Well-formedness of a lambda application: formals distinct, one actual per
/// formal, and every free variable of the body is a formal.
pub fn check_lambda(formals: &[Arc<str>], body: &Term, actuals: &[Term]) -> Result<(), String> {
    if formals.len() != actuals.len() {
        return Err(format!(
            "{} formals but {} actuals",
            formals.len(),
            actuals.len()
        ));
    }
    for (i, f) in formals.iter().enumerate() {
        if formals[..i].contains(f) {
            return Err(format!("duplicate formal {f}"));
        }
    }
    if let Some(v) = body.free_vars().into_iter().find(|v| !formals.contains(v)) {
        return Err(format!("body variable {v} is not a formal"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(i: i64) -> Term {
        Term::quote(Value::int(i))
    }

    #[test]
    fn subst_examples() {
        let s: Bindings = [("x", q(3))].into_iter().collect();
        assert_eq!(apply_subst(&Term::var("x"), &s), q(3));
        assert_eq!(apply_subst(&Term::var("y"), &s), Term::var("y"));
        let s1: Bindings = [("x", q(1))].into_iter().collect();
        assert_eq!(
            apply_subst(&Term::app("f", vec![Term::var("x"), Term::var("y")]), &s1),
            Term::app("f", vec![q(1), Term::var("y")])
        );
    }

    #[test]
    fn subst_respects_lambda_formals() {
        let l = Term::lam(&["x"], Term::var("x"), vec![Term::var("x")]);
        let s: Bindings = [("x", q(9))].into_iter().collect();
        assert_eq!(apply_subst(&l, &s), Term::lam(&["x"], Term::var("x"), vec![q(9)]));
    }

    #[test]
    fn unify_examples() {
        let pat = Term::app("equal", vec![Term::var("x"), Term::var("y")]);
        let tgt = Term::app("equal", vec![q(1), Term::var("q")]);
        let s = one_way_unify(&pat, &tgt).unwrap();
        assert_eq!(s.lookup("x"), Some(&q(1)));
        assert_eq!(s.lookup("y"), Some(&Term::var("q")));

        let nonlinear = Term::app("f", vec![Term::var("x"), Term::var("x")]);
        assert!(one_way_unify(&nonlinear, &Term::app("f", vec![q(1), q(2)])).is_none());
        assert!(one_way_unify(&nonlinear, &Term::app("f", vec![q(2), q(2)])).is_some());
        assert!(one_way_unify(&Term::app("f", vec![q(1)]), &Term::app("g", vec![q(1)])).is_none());
    }

    #[test]
    fn reify_examples() {
        assert_eq!(reify_term(&Term::var("x")), Value::sym("x"));
        assert_eq!(
            reify_term(&q(3)),
            Value::cons(Value::sym("quote"), Value::cons(Value::int(3), Value::Nil))
        );
        assert!(reflect_value(&Value::int(3)).is_err());
        assert!(reflect_value(&Value::Nil).is_err());
    }

    #[test]
    fn extension_order() {
        let a: Bindings = [("x", q(1))].into_iter().collect();
        let mut b = a.clone();
        b.bind("y", q(2));
        assert!(a.extended_by(&b));
        assert!(!b.extended_by(&a));
        assert!(!b.bind("x", q(5)));
        let c: Bindings = [("x", q(2))].into_iter().collect();
        assert!(!a.extended_by(&c));
    }

    #[test]
    fn shadowing() {
        let outer: Bindings = [("a", q(1)), ("b", q(2))].into_iter().collect();
        let inner: Bindings = [("b", q(3))].into_iter().collect();
        let both = outer.shadowed_by(&inner);
        assert_eq!(both.lookup("a"), Some(&q(1)));
        assert_eq!(both.lookup("b"), Some(&q(3)));
        assert_eq!(both.len(), 2);
    }
}
