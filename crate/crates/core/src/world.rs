//! The frozen registry consulted by the evaluator and the rewriter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::term::{Bindings, Term, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    Variadic,
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Fixed(k) => k == n,
            Arity::Variadic => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Cons,
    Car,
    Cdr,
    Consp,
    Integerp,
    Booleanp,
    Symbolp,
    Equal,
    Iff,
    If,
    Not,
    Intcar,
    Intcdr,
    IntEndp,
    Logcdr,
    IntegerLength,
    Plus,
    Times,
    Negate,
    Less,
    MemberEqual,
    Append,
    Mv,
    MvNth,
    Unequiv,
    AbortRewrite,
    SyntaxInterp,
    FglInterpObj,
    Assume,
    Syntaxp,
    BindFree,
    SyntacticTypeP,
}

pub const BUILTINS: &[(&str, Builtin, Arity)] = &[
    ("cons", Builtin::Cons, Arity::Fixed(2)),
    ("car", Builtin::Car, Arity::Fixed(1)),
    ("cdr", Builtin::Cdr, Arity::Fixed(1)),
    ("consp", Builtin::Consp, Arity::Fixed(1)),
    ("integerp", Builtin::Integerp, Arity::Fixed(1)),
    ("booleanp", Builtin::Booleanp, Arity::Fixed(1)),
    ("symbolp", Builtin::Symbolp, Arity::Fixed(1)),
    ("equal", Builtin::Equal, Arity::Fixed(2)),
    ("iff", Builtin::Iff, Arity::Fixed(2)),
    ("if", Builtin::If, Arity::Fixed(3)),
    ("not", Builtin::Not, Arity::Fixed(1)),
    ("intcar", Builtin::Intcar, Arity::Fixed(1)),
    ("intcdr", Builtin::Intcdr, Arity::Fixed(1)),
    ("int-endp", Builtin::IntEndp, Arity::Fixed(1)),
    ("logcdr", Builtin::Logcdr, Arity::Fixed(1)),
    ("integer-length", Builtin::IntegerLength, Arity::Fixed(1)),
    ("binary-+", Builtin::Plus, Arity::Fixed(2)),
    ("binary-*", Builtin::Times, Arity::Fixed(2)),
    ("unary--", Builtin::Negate, Arity::Fixed(1)),
    ("<", Builtin::Less, Arity::Fixed(2)),
    ("member-equal", Builtin::MemberEqual, Arity::Fixed(2)),
    ("append", Builtin::Append, Arity::Fixed(2)),
    ("mv", Builtin::Mv, Arity::Variadic),
    ("mv-nth", Builtin::MvNth, Arity::Fixed(2)),
    ("unequiv", Builtin::Unequiv, Arity::Fixed(2)),
    ("abort-rewrite", Builtin::AbortRewrite, Arity::Fixed(1)),
    ("syntax-interp", Builtin::SyntaxInterp, Arity::Fixed(1)),
    ("fgl-interp-obj", Builtin::FglInterpObj, Arity::Fixed(1)),
    ("assume", Builtin::Assume, Arity::Fixed(2)),
    ("syntaxp", Builtin::Syntaxp, Arity::Fixed(1)),
    ("bind-free", Builtin::BindFree, Arity::Fixed(2)),
    ("syntactic-type-p", Builtin::SyntacticTypeP, Arity::Fixed(2)),
];

impl Builtin {
    /// Functions the rewriter handles itself and never folds on constants.
    pub fn is_special(self) -> bool {
        matches!(
            self,
            Builtin::If
                | Builtin::AbortRewrite
                | Builtin::SyntaxInterp
                | Builtin::FglInterpObj
                | Builtin::Assume
                | Builtin::Syntaxp
                | Builtin::BindFree
                | Builtin::SyntacticTypeP
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FnBody {
    Builtin(Builtin),
    Defined { formals: Vec<Arc<str>>, body: Term },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnDef {
    pub name: Arc<str>,
    pub arity: Arity,
    pub body: FnBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivRel {
    pub name: Arc<str>,
    pub relation_fn: Arc<str>,
}

/// The set of equivalence relations under which the current term may be replaced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EquivCtx(BTreeSet<Arc<str>>);

impl EquivCtx {
    pub fn of<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<Arc<str>> = names.into_iter().map(Arc::from).collect();
        assert!(!set.is_empty(), "equivalence context must be nonempty");
        EquivCtx(set)
    }

    pub fn equal() -> Self {
        Self::of(["equal"])
    }

    pub fn iff() -> Self {
        Self::of(["iff"])
    }

    pub fn unequiv() -> Self {
        Self::of(["unequiv"])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| &**n == name)
    }

    pub fn is_unequiv(&self) -> bool {
        self.contains("unequiv")
    }

    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|s| &**s)
    }

    pub fn insert(&mut self, name: Arc<str>) {
        self.0.insert(name);
    }

    pub fn is_subset(&self, other: &EquivCtx) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl fmt::Display for EquivCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// `inner` equivalence on argument `arg_position` (1-based) of `fn_name`
/// implies `outer` equivalence of the call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceRule {
    pub outer_equiv: Arc<str>,
    pub inner_equiv: Arc<str>,
    pub fn_name: Arc<str>,
    pub arg_position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub name: Arc<str>,
    pub hyps: Vec<Term>,
    pub lhs: Term,
    pub rhs: Term,
    pub equiv: Arc<str>,
}

impl RewriteRule {
    pub fn head(&self) -> &str {
        match &self.lhs {
            Term::App(f, _) => f,
            _ => unreachable!("rule lhs is always a call"),
        }
    }
}

/// `hyps ∧ (var ≡_H form) ⇒ f(var, args) ≡_C var`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinderRule {
    pub name: Arc<str>,
    pub hyps: Vec<Term>,
    pub fn_name: Arc<str>,
    pub var: Arc<str>,
    pub arg_patterns: Vec<Term>,
    pub form: Term,
    pub hyp_equiv: Arc<str>,
    pub out_equiv: Arc<str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaKind {
    Plain,
    Binder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaRule {
    pub name: Arc<str>,
    pub fn_name: Arc<str>,
    pub meta_tag: Arc<str>,
    pub kind: MetaKind,
}

/// A host metafunction: given the function name and the argument objects,
/// returns a form and the substitution to rewrite it under, or declines.
pub type MetaFn = Arc<dyn Fn(&str, &[Term], &World) -> Option<(Term, Bindings)> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Rewrite(Arc<RewriteRule>),
    Binder(Arc<BinderRule>),
    Meta(Arc<MetaRule>),
}

impl Rule {
    pub fn name(&self) -> &str {
        match self {
            Rule::Rewrite(r) => &r.name,
            Rule::Binder(r) => &r.name,
            Rule::Meta(r) => &r.name,
        }
    }

    pub fn is_binder(&self) -> bool {
        matches!(self, Rule::Binder(_))
            || matches!(self, Rule::Meta(m) if m.kind == MetaKind::Binder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeTag {
    Integer,
    Boolean,
    Cons,
    NonInteger,
    NonBoolean,
    NonCons,
}

impl TypeTag {
    pub const ALL: [TypeTag; 6] = [
        TypeTag::Integer,
        TypeTag::Boolean,
        TypeTag::Cons,
        TypeTag::NonInteger,
        TypeTag::NonBoolean,
        TypeTag::NonCons,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TypeTag::Integer => "integer",
            TypeTag::Boolean => "boolean",
            TypeTag::Cons => "cons",
            TypeTag::NonInteger => "non-integer",
            TypeTag::NonBoolean => "non-boolean",
            TypeTag::NonCons => "non-cons",
        }
    }

    pub fn from_name(s: &str) -> Option<TypeTag> {
        TypeTag::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Whether a value satisfies the tag.
    pub fn holds(self, v: &Value) -> bool {
        let int = matches!(v, Value::Integer(_));
        let boolean = matches!(v, Value::Nil | Value::True);
        let cons = matches!(v, Value::Pair(..));
        match self {
            TypeTag::Integer => int,
            TypeTag::Boolean => boolean,
            TypeTag::Cons => cons,
            TypeTag::NonInteger => !int,
            TypeTag::NonBoolean => !boolean,
            TypeTag::NonCons => !cons,
        }
    }

    /// Tags implied by this one.
    fn closure(self) -> &'static [TypeTag] {
        use TypeTag::*;
        match self {
            Integer => &[Integer, NonBoolean, NonCons],
            Boolean => &[Boolean, NonInteger, NonCons],
            Cons => &[Cons, NonInteger, NonBoolean],
            NonInteger => &[NonInteger],
            NonBoolean => &[NonBoolean],
            NonCons => &[NonCons],
        }
    }

}

/// What is syntactically known about a result object's type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyntacticType(BTreeSet<TypeTag>);

impl SyntacticType {
    pub fn has(&self, tag: TypeTag) -> bool {
        self.0.contains(&tag)
    }

    pub fn is_unknown(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tags(&self) -> impl Iterator<Item = TypeTag> + '_ {
        self.0.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("unknown equivalence relation {0}")]
    UnknownEquiv(String),
    #[error("function {0} is already defined")]
    Redefinition(String),
    #[error("{0}")]
    Invalid(String),
}

/// Registries of functions, equivalences, congruences, rules, type facts and
/// metafunctions. Build it with the `add_*` methods, then share it read-only.
#[derive(Clone)]
pub struct World {
    fns: BTreeMap<Arc<str>, FnDef>,
    equivs: BTreeMap<Arc<str>, EquivRel>,
    refinements: Vec<(Arc<str>, Arc<str>)>,
    congruences: Vec<CongruenceRule>,
    rules: BTreeMap<Arc<str>, Vec<Rule>>,
    return_types: BTreeMap<Arc<str>, BTreeSet<TypeTag>>,
    meta_fns: BTreeMap<Arc<str>, MetaFn>,
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("fns", &self.fns.len())
            .field("equivs", &self.equivs.keys().collect::<Vec<_>>())
            .field("rules", &self.rules.values().map(Vec::len).sum::<usize>())
            .finish()
    }
}

impl Default for World {
    fn default() -> Self {
        Self::new()
    }
}

impl World {
    /// A world holding the builtins and the `equal` and `unequiv` relations.
    pub fn new() -> Self {
        let mut w = World {
            fns: BTreeMap::new(),
            equivs: BTreeMap::new(),
            refinements: Vec::new(),
            congruences: Vec::new(),
            rules: BTreeMap::new(),
            return_types: BTreeMap::new(),
            meta_fns: BTreeMap::new(),
        };
        for (name, b, arity) in BUILTINS {
            let name: Arc<str> = Arc::from(*name);
            w.fns.insert(
                name.clone(),
                FnDef {
                    name,
                    arity: *arity,
                    body: FnBody::Builtin(*b),
                },
            );
        }
        for name in ["equal", "unequiv"] {
            w.equivs.insert(
                Arc::from(name),
                EquivRel {
                    name: Arc::from(name),
                    relation_fn: Arc::from(name),
                },
            );
        }
        w
    }

    pub fn function(&self, name: &str) -> Option<&FnDef> {
        self.fns.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FnDef> {
        self.fns.values()
    }

    pub fn equiv(&self, name: &str) -> Option<&EquivRel> {
        self.equivs.get(name)
    }

    pub fn equivs(&self) -> impl Iterator<Item = &EquivRel> {
        self.equivs.values()
    }

    pub fn congruences(&self) -> &[CongruenceRule] {
        &self.congruences
    }

    pub fn return_type_facts(&self) -> impl Iterator<Item = (&str, TypeTag)> {
        self.return_types
            .iter()
            .flat_map(|(f, tags)| tags.iter().map(move |t| (&**f, *t)))
    }

    pub fn meta_fn(&self, tag: &str) -> Option<&MetaFn> {
        self.meta_fns.get(tag)
    }

    /// All rules, grouped by function, newest first within each group.
    pub fn all_rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values().flatten()
    }

    fn check_fn(&self, name: &str) -> Result<&FnDef, WorldError> {
        self.fns
            .get(name)
            .ok_or_else(|| WorldError::UnknownFunction(name.to_string()))
    }

    fn check_equiv(&self, name: &str) -> Result<(), WorldError> {
        self.equivs
            .contains_key(name)
            .then_some(())
            .ok_or_else(|| WorldError::UnknownEquiv(name.to_string()))
    }

    /// Every call in `t` names a known function with a matching argument count.
    pub fn check_term(&self, t: &Term) -> Result<(), WorldError> {
        match t {
            Term::Var(_) | Term::Quote(_) => Ok(()),
            Term::App(f, args) => {
                let def = self.check_fn(f)?;
                if !def.arity.accepts(args.len()) {
                    return Err(WorldError::Invalid(format!(
                        "{f} called with {} arguments",
                        args.len()
                    )));
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
            Term::Lam { body, actuals, .. } => {
                self.check_term(body)?;
                actuals.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }

    pub fn add_function(&mut self, name: &str, formals: Vec<Arc<str>>, body: Term) -> Result<(), WorldError> {
        if self.fns.contains_key(name) {
            return Err(WorldError::Redefinition(name.to_string()));
        }
        if let Some(v) = body.free_vars().into_iter().find(|v| !formals.contains(v)) {
            return Err(WorldError::Invalid(format!(
                "body of {name} uses unbound variable {v}"
            )));
        }
        let name: Arc<str> = Arc::from(name);
        // insert first so recursive calls check
        self.fns.insert(
            name.clone(),
            FnDef {
                name: name.clone(),
                arity: Arity::Fixed(formals.len()),
                body: FnBody::Defined {
                    formals,
                    body: body.clone(),
                },
            },
        );
        if let Err(e) = self.check_term(&body) {
            self.fns.remove(&name);
            return Err(e);
        }
        Ok(())
    }

    pub fn add_equiv(&mut self, name: &str, relation_fn: &str) -> Result<(), WorldError> {
        let def = self.check_fn(relation_fn)?;
        if !def.arity.accepts(2) || def.arity == Arity::Variadic {
            return Err(WorldError::Invalid(format!(
                "equivalence function {relation_fn} must take two arguments"
            )));
        }
        self.equivs.insert(
            Arc::from(name),
            EquivRel {
                name: Arc::from(name),
                relation_fn: Arc::from(relation_fn),
            },
        );
        Ok(())
    }

    /// Declares that `finer` refines `coarser`.
    pub fn add_refinement(&mut self, finer: &str, coarser: &str) -> Result<(), WorldError> {
        self.check_equiv(finer)?;
        self.check_equiv(coarser)?;
        self.refinements.push((Arc::from(finer), Arc::from(coarser)));
        Ok(())
    }

    pub fn add_congruence(&mut self, c: CongruenceRule) -> Result<(), WorldError> {
        self.check_equiv(&c.inner_equiv)?;
        self.check_equiv(&c.outer_equiv)?;
        let def = self.check_fn(&c.fn_name)?;
        match def.arity {
            Arity::Fixed(n) if c.arg_position >= 1 && c.arg_position <= n => {}
            _ => {
                return Err(WorldError::Invalid(format!(
                    "congruence position {} out of range for {}",
                    c.arg_position, c.fn_name
                )))
            }
        }
        self.congruences.push(c);
        Ok(())
    }

    fn push_rule(&mut self, fn_name: &Arc<str>, rule: Rule) {
        self.rules.entry(fn_name.clone()).or_default().insert(0, rule);
    }

    pub fn add_rewrite_rule(&mut self, r: RewriteRule) -> Result<(), WorldError> {
        self.check_equiv(&r.equiv)?;
        let Term::App(head, _) = &r.lhs else {
            return Err(WorldError::Invalid(format!("rule {}: lhs must be a call", r.name)));
        };
        if r.lhs.contains_lambda() {
            return Err(WorldError::Invalid(format!("rule {}: lhs contains a lambda", r.name)));
        }
        self.check_term(&r.lhs)?;
        self.check_term(&r.rhs)?;
        r.hyps.iter().try_for_each(|h| self.check_term(h))?;
        let head = head.clone();
        self.push_rule(&head, Rule::Rewrite(Arc::new(r)));
        Ok(())
    }

    pub fn add_binder_rule(&mut self, r: BinderRule) -> Result<(), WorldError> {
        self.check_equiv(&r.hyp_equiv)?;
        self.check_equiv(&r.out_equiv)?;
        let def = self.check_fn(&r.fn_name)?;
        if !def.arity.accepts(r.arg_patterns.len() + 1) {
            return Err(WorldError::Invalid(format!(
                "binder rule {}: {} takes a different number of arguments",
                r.name, r.fn_name
            )));
        }
        self.check_term(&r.form)?;
        r.hyps.iter().try_for_each(|h| self.check_term(h))?;
        r.arg_patterns.iter().try_for_each(|p| self.check_term(p))?;
        let head = r.fn_name.clone();
        self.push_rule(&head, Rule::Binder(Arc::new(r)));
        Ok(())
    }

    pub fn register_meta_fn(&mut self, tag: &str, f: MetaFn) {
        self.meta_fns.insert(Arc::from(tag), f);
    }

    pub fn add_meta_rule(&mut self, r: MetaRule) -> Result<(), WorldError> {
        self.check_fn(&r.fn_name)?;
        if !self.meta_fns.contains_key(&r.meta_tag) {
            return Err(WorldError::Invalid(format!(
                "meta rule {}: metafunction {} is not registered",
                r.name, r.meta_tag
            )));
        }
        let head = r.fn_name.clone();
        self.push_rule(&head, Rule::Meta(Arc::new(r)));
        Ok(())
    }

    /// Records a return-type fact and installs the recognizer rules it implies:
    /// `(integerp (fn v1 .. vn)) = 't` for an integer fact, `(consp (fn ..)) = 'nil`
    /// for a non-cons fact, and so on.
    pub fn add_return_type(&mut self, fn_name: &str, tag: TypeTag) -> Result<(), WorldError> {
        let arity = match self.check_fn(fn_name)?.arity {
            Arity::Fixed(n) => n,
            Arity::Variadic => {
                return Err(WorldError::Invalid(format!(
                    "return type of variadic {fn_name}"
                )))
            }
        };
        for &implied in tag.closure() {
            let known = self.return_types.entry(Arc::from(fn_name)).or_default();
            if !known.insert(implied) {
                continue;
            }
            let (pred, value) = match implied {
                TypeTag::Integer => ("integerp", Term::t()),
                TypeTag::Boolean => ("booleanp", Term::t()),
                TypeTag::Cons => ("consp", Term::t()),
                TypeTag::NonInteger => ("integerp", Term::nil()),
                TypeTag::NonBoolean => ("booleanp", Term::nil()),
                TypeTag::NonCons => ("consp", Term::nil()),
            };
            let vars = (0..arity).map(|i| Term::var(&format!("x{}", i + 1))).collect();
            self.add_rewrite_rule(RewriteRule {
                name: Arc::from(format!("{pred}-of-{fn_name}").as_str()),
                hyps: vec![],
                lhs: Term::app(pred, vec![Term::app(fn_name, vars)]),
                rhs: value,
                equiv: Arc::from("equal"),
            })?;
        }
        Ok(())
    }

    /// Rules indexed under `fn_name`, most recently added first.
    pub fn rules_for(&self, fn_name: &str) -> &[Rule] {
        self.rules.get(fn_name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// A copy of this world with every rule named `name` removed.
    pub fn without_rule(&self, name: &str) -> World {
        let mut w = self.clone();
        for rules in w.rules.values_mut() {
            rules.retain(|r| r.name() != name);
        }
        w
    }

    pub fn has_binder_rules(&self, fn_name: &str) -> bool {
        self.rules_for(fn_name).iter().any(Rule::is_binder)
    }

    /// Whether relation `r` refines context `ctx`.
    pub fn refines(&self, r: &str, ctx: &EquivCtx) -> Result<bool, WorldError> {
        self.check_equiv(r)?;
        if ctx.is_unequiv() || r == "equal" || ctx.contains(r) {
            return Ok(true);
        }
        let mut seen: BTreeSet<&str> = BTreeSet::from([r]);
        let mut frontier = vec![r];
        while let Some(cur) = frontier.pop() {
            for (finer, coarser) in &self.refinements {
                if &**finer == cur && seen.insert(coarser) {
                    if ctx.contains(coarser) {
                        return Ok(true);
                    }
                    frontier.push(coarser);
                }
            }
        }
        Ok(false)
    }

    /// Contexts for rewriting each argument of a call of `fn_name` under `ctx`.
    pub fn arg_contexts(&self, fn_name: &str, ctx: &EquivCtx) -> Result<Vec<EquivCtx>, WorldError> {
        let n = match self.check_fn(fn_name)?.arity {
            Arity::Fixed(n) => n,
            Arity::Variadic => return Ok(Vec::new()),
        };
        Ok((1..=n).map(|i| self.arg_context(fn_name, i, ctx)).collect())
    }

    /// Context for argument `position` (1-based); also covers variadic functions.
    pub fn arg_context(&self, fn_name: &str, position: usize, ctx: &EquivCtx) -> EquivCtx {
        if ctx.is_unequiv() {
            return EquivCtx::unequiv();
        }
        let mut out = EquivCtx::equal();
        for c in &self.congruences {
            if &*c.fn_name == fn_name
                && c.arg_position == position
                && self.refines(&c.outer_equiv, ctx).unwrap_or(false)
            {
                out.insert(c.inner_equiv.clone());
            }
        }
        out
    }

    /// What is syntactically known about the type of `t`.
    pub fn syntactic_type(&self, t: &Term) -> SyntacticType {
        let mut tags = BTreeSet::new();
        let mut add = |tag: TypeTag| tags.extend(tag.closure().iter().copied());
        match t {
            Term::Quote(Value::Integer(_)) => add(TypeTag::Integer),
            Term::Quote(Value::Nil | Value::True) => add(TypeTag::Boolean),
            Term::Quote(Value::Pair(..)) => add(TypeTag::Cons),
            Term::Quote(Value::Symbol(_)) => {
                add(TypeTag::NonInteger);
                add(TypeTag::NonBoolean);
                add(TypeTag::NonCons);
            }
            Term::App(f, _) => {
                if let Some(facts) = self.return_types.get(f) {
                    facts.iter().for_each(|t| add(*t));
                }
            }
            _ => {}
        }
        SyntacticType(tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world_with_iff() -> World {
        let mut w = World::new();
        w.add_equiv("iff", "iff").unwrap();
        w
    }

    #[test]
    fn refinement_examples() {
        let w = world_with_iff();
        assert!(w.refines("iff", &EquivCtx::unequiv()).unwrap());
        assert!(w.refines("equal", &EquivCtx::iff()).unwrap());
        assert!(!w.refines("iff", &EquivCtx::equal()).unwrap());
        assert!(!w.refines("unequiv", &EquivCtx::iff()).unwrap());
        assert!(w.refines("nope", &EquivCtx::iff()).is_err());
    }

    #[test]
    fn refinement_chains() {
        let mut w = world_with_iff();
        w.add_function(
            "set-equiv",
            vec![Arc::from("a"), Arc::from("b")],
            Term::app("equal", vec![Term::var("a"), Term::var("b")]),
        )
        .unwrap();
        w.add_equiv("set-equiv", "set-equiv").unwrap();
        w.add_equiv("weak", "unequiv").unwrap();
        w.add_refinement("set-equiv", "weak").unwrap();
        assert!(w.refines("set-equiv", &EquivCtx::of(["weak"])).unwrap());
        assert!(!w.refines("weak", &EquivCtx::of(["set-equiv"])).unwrap());
    }

    #[test]
    fn argument_contexts() {
        let mut w = world_with_iff();
        w.add_function(
            "bind-var",
            vec![Arc::from("var"), Arc::from("x")],
            Term::var("var"),
        )
        .unwrap();
        w.add_congruence(CongruenceRule {
            outer_equiv: Arc::from("equal"),
            inner_equiv: Arc::from("unequiv"),
            fn_name: Arc::from("bind-var"),
            arg_position: 2,
        })
        .unwrap();
        assert_eq!(
            w.arg_contexts("bind-var", &EquivCtx::equal()).unwrap(),
            vec![EquivCtx::equal(), EquivCtx::of(["equal", "unequiv"])]
        );
        assert_eq!(
            w.arg_contexts("cons", &EquivCtx::equal()).unwrap(),
            vec![EquivCtx::equal(), EquivCtx::equal()]
        );
        assert_eq!(
            w.arg_contexts("cons", &EquivCtx::unequiv()).unwrap(),
            vec![EquivCtx::unequiv(), EquivCtx::unequiv()]
        );
        assert!(w.arg_contexts("nope", &EquivCtx::equal()).is_err());
    }

    #[test]
    fn rules_are_newest_first_and_isolated() {
        let mut w = World::new();
        for name in ["r1", "r2"] {
            w.add_rewrite_rule(RewriteRule {
                name: Arc::from(name),
                hyps: vec![],
                lhs: Term::app("car", vec![Term::var("x")]),
                rhs: Term::app("car", vec![Term::var("x")]),
                equiv: Arc::from("equal"),
            })
            .unwrap();
        }
        let names: Vec<_> = w.rules_for("car").iter().map(Rule::name).collect();
        assert_eq!(names, ["r2", "r1"]);
        assert!(w.rules_for("cdr").is_empty());
        assert!(w.rules_for("undefined").is_empty());
    }

    #[test]
    fn syntactic_types() {
        let mut w = World::new();
        assert!(w
            .syntactic_type(&Term::quote(Value::int(7)))
            .has(TypeTag::Integer));
        assert!(w
            .syntactic_type(&Term::quote(Value::int(7)))
            .has(TypeTag::NonBoolean));
        assert!(w.syntactic_type(&Term::var("x")).is_unknown());
        let c = Term::app("cons", vec![Term::var("a"), Term::var("b")]);
        assert!(w.syntactic_type(&c).is_unknown());
        w.add_return_type("cons", TypeTag::Cons).unwrap();
        assert!(w.syntactic_type(&c).has(TypeTag::Cons));
        assert!(w.syntactic_type(&c).has(TypeTag::NonInteger));
        assert_eq!(w.rules_for("consp").len(), 1);
        assert_eq!(w.rules_for("integerp").len(), 1);
    }
}
