//! Definition files: parsing, printing, well-formedness checks and loading
//! into a [`World`].

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{read_all, translate, Pos, SyntaxError};
use crate::term::{Term, Value};
use crate::world::{
    BinderRule, CongruenceRule, MetaKind, MetaRule, RewriteRule, TypeTag, World, WorldError,
};

/// The bundled rule corpus.
pub const CORPUS: &str = include_str!("../corpus/fgl.lisp");

pub fn corpus() -> &'static str {
    CORPUS
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Defun {
        name: Arc<str>,
        formals: Vec<Arc<str>>,
        body: Term,
    },
    Defequiv {
        name: Arc<str>,
        relation_fn: Arc<str>,
    },
    Defrefinement {
        finer: Arc<str>,
        coarser: Arc<str>,
    },
    Defcong {
        rule: CongruenceRule,
        argvars: Vec<Arc<str>>,
    },
    Defrule(RewriteRule),
    DefbinderRule(BinderRule),
    DefreturnType {
        fn_name: Arc<str>,
        tag: TypeTag,
    },
    Defmeta(MetaRule),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: {name} called with {got} arguments, expected {expected}")]
    ArityError {
        pos: Pos,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{pos}: variable {var} is not bound in the body of {name}")]
    UnboundBodyVariable { pos: Pos, name: String, var: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax(e) => e.pos,
            ParseError::ArityError { pos, .. } | ParseError::UnboundBodyVariable { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormednessError {
    #[error("binder rule {rule}: variable {var} occurs in the form")]
    VarOccursInForm { rule: String, var: String },
    #[error("binder rule {rule}: variable {var} occurs in the hypotheses")]
    VarOccursInHyps { rule: String, var: String },
    #[error("binder rule {rule}: variable {var} occurs in the argument patterns")]
    VarOccursInArgs { rule: String, var: String },
    #[error("binder rule {rule}: {fn_name} does not take {expected} arguments")]
    ArityMismatch {
        rule: String,
        fn_name: String,
        expected: usize,
    },
    #[error("binder rule {rule}: {source}")]
    World { rule: String, source: WorldError },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{pos}: {source}")]
    World { pos: Pos, source: WorldError },
    #[error("{pos}: {source}")]
    Binder {
        pos: Pos,
        source: WellFormednessError,
    },
}

fn err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax(SyntaxError {
        pos,
        msg: msg.into(),
    })
}

fn sym(v: &Value, pos: Pos, what: &str) -> Result<Arc<str>, ParseError> {
    match v {
        Value::Symbol(s) => Ok(s.clone()),
        _ => Err(err(pos, format!("{what} must be a symbol, got {v}"))),
    }
}

fn sym_list(v: &Value, pos: Pos, what: &str) -> Result<Vec<Arc<str>>, ParseError> {
    v.to_vec()
        .ok_or_else(|| err(pos, format!("{what} must be a list")))?
        .iter()
        .map(|x| sym(x, pos, what))
        .collect()
}

fn term(v: &Value, pos: Pos) -> Result<Term, ParseError> {
    translate(v).map_err(|m| err(pos, m))
}

/// Hypotheses; `(bind-free e (v1 ..))` keeps its variable list as a quoted list.
fn hyp_list(v: &Value, pos: Pos) -> Result<Vec<Term>, ParseError> {
    v.to_vec()
        .ok_or_else(|| err(pos, ":hyps must be a list"))?
        .iter()
        .map(|h| {
            if h.car().as_symbol() == Some("bind-free") {
                let parts = h.to_vec().unwrap_or_default();
                let [_, e, vars] = parts.as_slice() else {
                    return Err(err(pos, "bind-free takes a form and a variable list"));
                };
                let vars = sym_list(vars, pos, "bind-free variables")?;
                Ok(Term::app(
                    "bind-free",
                    vec![
                        term(e, pos)?,
                        Term::quote(Value::list(vars.into_iter().map(Value::Symbol).collect::<Vec<_>>())),
                    ],
                ))
            } else {
                term(h, pos)
            }
        })
        .collect()
}

struct Keywords {
    pairs: Vec<(String, Value)>,
    pos: Pos,
}

impl Keywords {
    fn parse(items: &[Value], pos: Pos) -> Result<Self, ParseError> {
        if !items.len().is_multiple_of(2) {
            return Err(err(pos, "keyword arguments must come in pairs"));
        }
        let mut pairs = Vec::new();
        for kv in items.chunks(2) {
            match &kv[0] {
                Value::Symbol(k) if k.starts_with(':') => pairs.push((k[1..].to_string(), kv[1].clone())),
                other => return Err(err(pos, format!("expected a keyword, got {other}"))),
            }
        }
        Ok(Keywords { pairs, pos })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn req(&self, key: &str) -> Result<&Value, ParseError> {
        self.get(key)
            .ok_or_else(|| err(self.pos, format!("missing :{key}")))
    }

    fn check_known(&self, allowed: &[&str]) -> Result<(), ParseError> {
        match self.pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(err(self.pos, format!("unknown keyword :{k}"))),
            None => Ok(()),
        }
    }
}

fn parse_item(form: &Value, pos: Pos) -> Result<Item, ParseError> {
    let parts = form
        .to_vec()
        .ok_or_else(|| err(pos, "top-level form must be a list"))?;
    let head = parts
        .first()
        .and_then(Value::as_symbol)
        .ok_or_else(|| err(pos, "top-level form must start with a symbol"))?;
    let rest = &parts[1..];
    let arity = |n: usize| -> Result<(), ParseError> {
        if rest.len() != n {
            return Err(ParseError::ArityError {
                pos,
                name: head.to_string(),
                expected: n,
                got: rest.len(),
            });
        }
        Ok(())
    };
    match head {
        "defun" => {
            arity(3)?;
            let name = sym(&rest[0], pos, "function name")?;
            let formals = sym_list(&rest[1], pos, "formals")?;
            let body = term(&rest[2], pos)?;
            if let Some(v) = body.free_vars().into_iter().find(|v| !formals.contains(v)) {
                return Err(ParseError::UnboundBodyVariable {
                    pos,
                    name: name.to_string(),
                    var: v.to_string(),
                });
            }
            Ok(Item::Defun { name, formals, body })
        }
        "defequiv" => {
            arity(2)?;
            Ok(Item::Defequiv {
                name: sym(&rest[0], pos, "equivalence name")?,
                relation_fn: sym(&rest[1], pos, "equivalence function")?,
            })
        }
        "defrefinement" => {
            arity(2)?;
            Ok(Item::Defrefinement {
                finer: sym(&rest[0], pos, "equivalence name")?,
                coarser: sym(&rest[1], pos, "equivalence name")?,
            })
        }
        "defcong" => {
            arity(4)?;
            let inner = sym(&rest[0], pos, "inner equivalence")?;
            let outer = sym(&rest[1], pos, "outer equivalence")?;
            let fn_name = sym(&rest[2].car(), pos, "congruence function")?;
            let argvars = sym_list(&rest[2].cdr(), pos, "congruence arguments")?;
            let n = match &rest[3] {
                Value::Integer(i) => usize::try_from(i.clone())
                    .map_err(|_| err(pos, "congruence position must be positive"))?,
                _ => return Err(err(pos, "congruence position must be an integer")),
            };
            if n == 0 || n > argvars.len() {
                return Err(err(pos, "congruence position out of range"));
            }
            Ok(Item::Defcong {
                rule: CongruenceRule {
                    outer_equiv: outer,
                    inner_equiv: inner,
                    fn_name,
                    arg_position: n,
                },
                argvars,
            })
        }
        "defrule" => {
            let name = sym(rest.first().unwrap_or(&Value::Nil), pos, "rule name")?;
            let kw = Keywords::parse(&rest[1..], pos)?;
            kw.check_known(&["hyps", "lhs", "rhs", "equiv"])?;
            let lhs = term(kw.req("lhs")?, pos)?;
            if !matches!(lhs, Term::App(..)) {
                return Err(err(pos, format!("rule {name}: lhs must be a function call")));
            }
            if lhs.contains_lambda() {
                return Err(err(pos, format!("rule {name}: lhs must be lambda-free")));
            }
            Ok(Item::Defrule(RewriteRule {
                name,
                hyps: hyp_list(kw.get("hyps").unwrap_or(&Value::Nil), pos)?,
                lhs,
                rhs: term(kw.req("rhs")?, pos)?,
                equiv: match kw.get("equiv") {
                    Some(e) => sym(e, pos, "equivalence")?,
                    None => Arc::from("equal"),
                },
            }))
        }
        "defbinder-rule" => {
            let name = sym(rest.first().unwrap_or(&Value::Nil), pos, "rule name")?;
            let kw = Keywords::parse(&rest[1..], pos)?;
            kw.check_known(&["hyps", "fn", "var", "args", "form", "hyp-equiv", "equiv"])?;
            let args = kw
                .get("args")
                .unwrap_or(&Value::Nil)
                .to_vec()
                .ok_or_else(|| err(pos, ":args must be a list"))?
                .iter()
                .map(|a| term(a, pos))
                .collect::<Result<Vec<_>, _>>()?;
            let equiv = |k: &str| -> Result<Arc<str>, ParseError> {
                match kw.get(k) {
                    Some(e) => sym(e, pos, "equivalence"),
                    None => Ok(Arc::from("equal")),
                }
            };
            Ok(Item::DefbinderRule(BinderRule {
                name,
                hyps: hyp_list(kw.get("hyps").unwrap_or(&Value::Nil), pos)?,
                fn_name: sym(kw.req("fn")?, pos, "binder function")?,
                var: sym(kw.req("var")?, pos, "binder variable")?,
                arg_patterns: args,
                form: term(kw.req("form")?, pos)?,
                hyp_equiv: equiv("hyp-equiv")?,
                out_equiv: equiv("equiv")?,
            }))
        }
        "defreturn-type" => {
            arity(2)?;
            let tag_name = sym(&rest[1], pos, "type tag")?;
            Ok(Item::DefreturnType {
                fn_name: sym(&rest[0], pos, "function name")?,
                tag: TypeTag::from_name(&tag_name)
                    .ok_or_else(|| err(pos, format!("unknown type tag {tag_name}")))?,
            })
        }
        "defmeta" => {
            let name = sym(rest.first().unwrap_or(&Value::Nil), pos, "rule name")?;
            let kw = Keywords::parse(&rest[1..], pos)?;
            kw.check_known(&["fn", "meta", "kind"])?;
            let kind = match kw.get("kind").and_then(Value::as_symbol) {
                None | Some("plain") => MetaKind::Plain,
                Some("binder") => MetaKind::Binder,
                Some(other) => return Err(err(pos, format!("unknown meta kind {other}"))),
            };
            Ok(Item::Defmeta(MetaRule {
                name,
                fn_name: sym(kw.req("fn")?, pos, "function name")?,
                meta_tag: sym(kw.req("meta")?, pos, "metafunction tag")?,
                kind,
            }))
        }
        other => Err(err(pos, format!("unknown definition form {other}"))),
    }
}

/// Parses definition text into items with the position of each form.
pub fn parse_definitions_with_pos(text: &str) -> Result<Vec<(Item, Pos)>, ParseError> {
    let forms = read_all(text)?;
    let items = forms
        .iter()
        .map(|(v, pos)| parse_item(v, *pos).map(|i| (i, *pos)))
        .collect::<Result<Vec<_>, _>>()?;
    check_call_arities(&items)?;
    Ok(items)
}

pub fn parse_definitions(text: &str) -> Result<Vec<Item>, ParseError> {
    Ok(parse_definitions_with_pos(text)?
        .into_iter()
        .map(|(i, _)| i)
        .collect())
}

/// Calls of functions defined in the same file must match their arity.
fn check_call_arities(items: &[(Item, Pos)]) -> Result<(), ParseError> {
    let defs: Vec<(&str, usize)> = items
        .iter()
        .filter_map(|(i, _)| match i {
            Item::Defun { name, formals, .. } => Some((&**name, formals.len())),
            _ => None,
        })
        .collect();
    fn walk(t: &Term, defs: &[(&str, usize)], pos: Pos) -> Result<(), ParseError> {
        match t {
            Term::Var(_) | Term::Quote(_) => Ok(()),
            Term::App(f, args) => {
                if let Some((_, n)) = defs.iter().find(|(d, _)| *d == &**f) {
                    if *n != args.len() {
                        return Err(ParseError::ArityError {
                            pos,
                            name: f.to_string(),
                            expected: *n,
                            got: args.len(),
                        });
                    }
                }
                args.iter().try_for_each(|a| walk(a, defs, pos))
            }
            Term::Lam { body, actuals, .. } => {
                walk(body, defs, pos)?;
                actuals.iter().try_for_each(|a| walk(a, defs, pos))
            }
        }
    }
    for (item, pos) in items {
        for t in item_terms(item) {
            walk(t, &defs, *pos)?;
        }
    }
    Ok(())
}

fn item_terms(item: &Item) -> Vec<&Term> {
    match item {
        Item::Defun { body, .. } => vec![body],
        Item::Defrule(r) => r.hyps.iter().chain([&r.lhs, &r.rhs]).collect(),
        Item::DefbinderRule(r) => r
            .hyps
            .iter()
            .chain(&r.arg_patterns)
            .chain([&r.form])
            .collect(),
        _ => vec![],
    }
}

/// Side conditions of a binder rule against a world that already holds its
/// function and equivalences.
pub fn check_binder_rule(r: &BinderRule, world: &World) -> Result<(), WellFormednessError> {
    let rule = r.name.to_string();
    let var = r.var.to_string();
    if r.form.all_vars().contains(&r.var) {
        return Err(WellFormednessError::VarOccursInForm { rule, var });
    }
    if r.hyps.iter().any(|h| h.all_vars().contains(&r.var)) {
        return Err(WellFormednessError::VarOccursInHyps { rule, var });
    }
    if r.arg_patterns.iter().any(|a| a.all_vars().contains(&r.var)) {
        return Err(WellFormednessError::VarOccursInArgs { rule, var });
    }
    let def = world.function(&r.fn_name).ok_or_else(|| WellFormednessError::World {
        rule: rule.clone(),
        source: WorldError::UnknownFunction(r.fn_name.to_string()),
    })?;
    if !def.arity.accepts(r.arg_patterns.len() + 1) {
        return Err(WellFormednessError::ArityMismatch {
            rule,
            fn_name: r.fn_name.to_string(),
            expected: r.arg_patterns.len() + 1,
        });
    }
    for e in [&r.hyp_equiv, &r.out_equiv] {
        if world.equiv(e).is_none() {
            return Err(WellFormednessError::World {
                rule,
                source: WorldError::UnknownEquiv(e.to_string()),
            });
        }
    }
    Ok(())
}

/// Adds parsed items to `world` in order.
pub fn load_items(world: &mut World, items: &[(Item, Pos)]) -> Result<(), LoadError> {
    for (item, pos) in items {
        let pos = *pos;
        let wrap = |source| LoadError::World { pos, source };
        match item {
            Item::Defun { name, formals, body } => {
                world.add_function(name, formals.clone(), body.clone()).map_err(wrap)?
            }
            Item::Defequiv { name, relation_fn } => world.add_equiv(name, relation_fn).map_err(wrap)?,
            Item::Defrefinement { finer, coarser } => {
                world.add_refinement(finer, coarser).map_err(wrap)?
            }
            Item::Defcong { rule, .. } => world.add_congruence(rule.clone()).map_err(wrap)?,
            Item::Defrule(r) => world.add_rewrite_rule(r.clone()).map_err(wrap)?,
            Item::DefbinderRule(r) => {
                check_binder_rule(r, world).map_err(|source| LoadError::Binder { pos, source })?;
                world.add_binder_rule(r.clone()).map_err(wrap)?
            }
            Item::DefreturnType { fn_name, tag } => world.add_return_type(fn_name, *tag).map_err(wrap)?,
            Item::Defmeta(m) => world.add_meta_rule(m.clone()).map_err(wrap)?,
        }
    }
    Ok(())
}

/// Builds a world from definition text on top of the builtins and the
/// standard metafunctions.
pub fn load_world(text: &str) -> Result<World, LoadError> {
    let items = parse_definitions_with_pos(text)?;
    let mut world = World::new();
    crate::meta::register_standard(&mut world);
    load_items(&mut world, &items)?;
    Ok(world)
}

/// The world described by the bundled corpus.
pub fn corpus_world() -> World {
    load_world(CORPUS).expect("bundled corpus loads")
}

fn print_hyp(h: &Term) -> String {
    if let Term::App(f, args) = h {
        if &**f == "bind-free" {
            if let [e, Term::Quote(vars)] = args.as_slice() {
                return format!("(bind-free {e} {vars})");
            }
        }
    }
    h.to_string()
}

fn print_hyps(hyps: &[Term]) -> String {
    let hs: Vec<String> = hyps.iter().map(print_hyp).collect();
    format!("({})", hs.join(" "))
}

fn print_syms(syms: &[Arc<str>]) -> String {
    let s: Vec<&str> = syms.iter().map(|s| &**s).collect();
    format!("({})", s.join(" "))
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Defun { name, formals, body } => {
                write!(f, "(defun {name} {} {body})", print_syms(formals))
            }
            Item::Defequiv { name, relation_fn } => write!(f, "(defequiv {name} {relation_fn})"),
            Item::Defrefinement { finer, coarser } => write!(f, "(defrefinement {finer} {coarser})"),
            Item::Defcong { rule, argvars } => write!(
                f,
                "(defcong {} {} ({} {}) {})",
                rule.inner_equiv,
                rule.outer_equiv,
                rule.fn_name,
                print_syms(argvars).trim_start_matches('(').trim_end_matches(')'),
                rule.arg_position
            ),
            Item::Defrule(r) => write!(
                f,
                "(defrule {} :hyps {} :lhs {} :rhs {} :equiv {})",
                r.name,
                print_hyps(&r.hyps),
                r.lhs,
                r.rhs,
                r.equiv
            ),
            Item::DefbinderRule(r) => {
                let args: Vec<String> = r.arg_patterns.iter().map(Term::to_string).collect();
                write!(
                    f,
                    "(defbinder-rule {} :hyps {} :fn {} :var {} :args ({}) :form {} :hyp-equiv {} :equiv {})",
                    r.name,
                    print_hyps(&r.hyps),
                    r.fn_name,
                    r.var,
                    args.join(" "),
                    r.form,
                    r.hyp_equiv,
                    r.out_equiv
                )
            }
            Item::DefreturnType { fn_name, tag } => write!(f, "(defreturn-type {fn_name} {})", tag.name()),
            Item::Defmeta(m) => write!(
                f,
                "(defmeta {} :fn {} :meta {} :kind {})",
                m.name,
                m.fn_name,
                m.meta_tag,
                match m.kind {
                    MetaKind::Plain => "plain",
                    MetaKind::Binder => "binder",
                }
            ),
        }
    }
}

/// Prints items one per line in a form [`parse_definitions`] reads back.
pub fn print_definitions(items: &[Item]) -> String {
    items.iter().map(|i| format!("{i}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Rule;

    #[test]
    fn parses_defun() {
        let items = parse_definitions("(defun id (x) x)").unwrap();
        assert_eq!(
            items,
            vec![Item::Defun {
                name: Arc::from("id"),
                formals: vec![Arc::from("x")],
                body: Term::var("x"),
            }]
        );
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(parse_definitions("(defrule bad :lhs x :rhs x)").is_err());
        assert!(matches!(
            parse_definitions("(defun f (x) y)"),
            Err(ParseError::UnboundBodyVariable { .. })
        ));
        assert!(matches!(
            parse_definitions("(defun f (x) x)\n(defun g (y) (f y y))"),
            Err(ParseError::ArityError { .. })
        ));
        assert!(matches!(
            parse_definitions("(defequiv iff)"),
            Err(ParseError::ArityError { .. })
        ));
        let e = parse_definitions("(defun f (x) x)\n  (defrule r :lhs (f x) :rhs (f x) :bogus 1)").unwrap_err();
        assert_eq!(e.pos(), Pos { line: 2, col: 3 });
    }

    #[test]
    fn corpus_parses_and_loads() {
        let items = parse_definitions(CORPUS).unwrap();
        let st: Vec<_> = items
            .iter()
            .filter(|i| matches!(i, Item::DefbinderRule(r) if &*r.fn_name == "syntactically-true"))
            .collect();
        assert_eq!(st.len(), 2);
        let w = corpus_world();
        let names: Vec<_> = w.rules_for("syntactically-true").iter().map(Rule::name).collect();
        assert_eq!(
            names,
            [
                "syntactically-true-binder-rewrite-true",
                "syntactically-true-binder-rewrite-false"
            ]
        );
        for r in w.all_rules() {
            if let Rule::Binder(b) = r {
                check_binder_rule(b, &w).unwrap();
            }
        }
    }

    #[test]
    fn binder_side_conditions() {
        let w = corpus_world();
        let base = "(defbinder-rule r :fn bind-var :var v :args (x) :form x)";
        let ok = parse_definitions(base).unwrap();
        let Item::DefbinderRule(r) = &ok[0] else { panic!() };
        check_binder_rule(r, &w).unwrap();
        let cases = [
            ("(defbinder-rule r :fn bind-var :var v :args (x) :form (cons v x))", "form"),
            ("(defbinder-rule r :hyps ((consp v)) :fn bind-var :var v :args (x) :form x)", "hyps"),
            ("(defbinder-rule r :fn bind-var :var v :args ((cons v x)) :form x)", "args"),
            ("(defbinder-rule r :fn bind-var :var v :args (x) :form (syntax-interp (f v)))", "form"),
            ("(defbinder-rule r :fn bind-var :var v :args (x y) :form x)", "arity"),
        ];
        for (src, what) in cases {
            let items = parse_definitions(src).unwrap();
            let Item::DefbinderRule(r) = &items[0] else { panic!() };
            let e = check_binder_rule(r, &w).unwrap_err();
            let matched = matches!(
                (&e, what),
                (WellFormednessError::VarOccursInForm { .. }, "form")
                    | (WellFormednessError::VarOccursInHyps { .. }, "hyps")
                    | (WellFormednessError::VarOccursInArgs { .. }, "args")
                    | (WellFormednessError::ArityMismatch { .. }, "arity")
            );
            assert!(matched, "{src}: {e}");
            let mut text = CORPUS.to_string();
            text.push_str(src);
            assert!(matches!(load_world(&text), Err(LoadError::Binder { .. })));
        }
    }

    #[test]
    fn print_parse_round_trip_on_corpus() {
        let items = parse_definitions(CORPUS).unwrap();
        let printed = print_definitions(&items);
        assert_eq!(parse_definitions(&printed).unwrap(), items);
    }
}
