//! Seeded generators for values, environments, result objects and terms.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::Env;
use crate::term::{reify_term, Bindings, Term, Value};
use crate::world::{EquivCtx, World};

/// Plain variables. Shares names with corpus rule variables on purpose.
pub const VAR_POOL: [&str; 6] = ["x", "y", "a", "b", "p", "q"];
/// Variables that only ever appear at one binder call site per term.
pub const BINDER_POOL: [&str; 4] = ["bv0", "bv1", "bv2", "bv3"];

const SYMBOLS: [&str; 4] = ["a", "b", "quote", "foo"];

const ORDINARY: [(&str, usize); 25] = [
    ("cons", 2),
    ("car", 1),
    ("cdr", 1),
    ("consp", 1),
    ("integerp", 1),
    ("booleanp", 1),
    ("symbolp", 1),
    ("equal", 2),
    ("equal", 2),
    ("iff", 2),
    ("not", 1),
    ("not", 1),
    ("binary-+", 2),
    ("binary-*", 2),
    ("unary--", 1),
    ("intcar", 1),
    ("intcdr", 1),
    ("int-endp", 1),
    ("logcdr", 1),
    ("integer-length", 1),
    ("member-equal", 2),
    ("quotep", 1),
    ("fgl-prog2", 2),
    ("trace-obj", 1),
    ("<", 2),
];

const BINDERS: [(&str, usize); 11] = [
    ("bind-var", 2),
    ("syntactically-true", 2),
    ("check-integerp", 2),
    ("check-booleanp", 2),
    ("check-consp", 2),
    ("check-non-integerp", 2),
    ("check-non-booleanp", 2),
    ("check-non-consp", 2),
    ("check-int-endp", 2),
    ("integer-length-bound", 2),
    ("split-list-by-membership", 3),
];

/// Relative weights of interior node kinds.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    pub app: u32,
    pub if_: u32,
    pub lam: u32,
    pub binder: u32,
    pub special: u32,
    pub leaf: u32,
}

impl Weights {
    pub const CONTRACT: Weights = Weights {
        app: 45,
        if_: 10,
        lam: 20,
        binder: 15,
        special: 10,
        leaf: 25,
    };
    pub const LAMBDA_NESTS: Weights = Weights {
        app: 30,
        if_: 10,
        lam: 45,
        binder: 0,
        special: 0,
        leaf: 15,
    };
}

#[derive(Debug, Clone, Default)]
struct Scope {
    vars: Vec<Arc<str>>,
    sites: Vec<Arc<str>>,
    refs: Vec<Arc<str>>,
}

/// A generated contract case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub seed: u64,
    pub term: Term,
    pub sigma_i: Bindings,
    pub ctx: EquivCtx,
}

pub struct Gen {
    rng: ChaCha8Rng,
    weights: Weights,
    fresh: BTreeSet<Arc<str>>,
    has_binders: bool,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            weights: Weights::CONTRACT,
            fresh: BTreeSet::new(),
            has_binders: true,
        }
    }

    pub fn with_weights(seed: u64, weights: Weights) -> Self {
        Gen {
            weights,
            ..Gen::new(seed)
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn value(&mut self, depth: usize) -> Value {
        if depth > 0 && self.rng.gen_bool(0.25) {
            return Value::cons(self.value(depth - 1), self.value(depth - 1));
        }
        match self.rng.gen_range(0..20) {
            0..=2 => Value::Nil,
            3..=5 => Value::True,
            6..=17 => Value::int(self.rng.gen_range(-4i64..=8)),
            _ => Value::sym(SYMBOLS.choose(&mut self.rng).unwrap()),
        }
    }

    pub fn env<'a>(&mut self, vars: impl IntoIterator<Item = &'a Arc<str>>) -> Env {
        vars.into_iter().map(|v| (v.clone(), self.value(2))).collect()
    }

    pub fn ctx(&mut self) -> EquivCtx {
        match self.rng.gen_range(0..3) {
            0 => EquivCtx::equal(),
            1 => EquivCtx::iff(),
            _ => EquivCtx::unequiv(),
        }
    }

    fn pool_var(&mut self) -> Arc<str> {
        Arc::from(*VAR_POOL.choose(&mut self.rng).unwrap())
    }

    /// A small result object over the plain variables: no lambdas, binder
    /// calls or special forms.
    pub fn object(&mut self, depth: usize) -> Term {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return if self.rng.gen_bool(0.5) {
                Term::Var(self.pool_var())
            } else {
                Term::Quote(self.value(1))
            };
        }
        let (f, n) = *ORDINARY[..21].choose(&mut self.rng).unwrap();
        Term::app(f, (0..n).map(|_| self.object(depth - 1)).collect())
    }

    pub fn bindings(&mut self) -> Bindings {
        let mut b = Bindings::new();
        for v in VAR_POOL {
            if self.rng.gen_bool(0.3) {
                let obj = self.object(2);
                b.bind(v, obj);
            }
        }
        b
    }

    /// A well-formed term over `world`'s signature. Each binder variable is
    /// used at most once at a binder call site and referenced only after it.
    pub fn term(&mut self, world: &World, depth: usize, unequiv: bool) -> Term {
        self.fresh = BINDER_POOL.iter().map(|b| Arc::from(*b)).collect();
        self.has_binders = BINDERS.iter().all(|(f, _)| world.has_binder_rules(f));
        let mut scope = Scope {
            vars: VAR_POOL.iter().map(|v| Arc::from(*v)).collect(),
            sites: self.fresh.iter().cloned().collect(),
            refs: Vec::new(),
        };
        self.term_in(world, depth, unequiv, &mut scope)
    }

    pub fn case(&mut self, seed: u64, world: &World, depth: usize) -> Case {
        let ctx = self.ctx();
        let term = self.term(world, depth, ctx.is_unequiv());
        let sigma_i = self.bindings();
        Case {
            seed,
            term,
            sigma_i,
            ctx,
        }
    }

    fn leaf(&mut self, scope: &Scope) -> Term {
        if !scope.refs.is_empty() && self.rng.gen_bool(0.3) {
            return Term::Var(scope.refs.choose(&mut self.rng).unwrap().clone());
        }
        if !scope.vars.is_empty() && self.rng.gen_bool(0.55) {
            return Term::Var(scope.vars.choose(&mut self.rng).unwrap().clone());
        }
        Term::Quote(self.value(1))
    }

    fn term_in(&mut self, world: &World, depth: usize, unequiv: bool, scope: &mut Scope) -> Term {
        if depth == 0 {
            return self.leaf(scope);
        }
        let w = self.weights;
        let can_bind = self.has_binders && scope.sites.iter().any(|s| self.fresh.contains(s));
        let choices = [
            (0, w.leaf),
            (1, w.app),
            (2, w.if_),
            (3, w.lam),
            (4, if can_bind { w.binder } else { 0 }),
            (5, if unequiv { w.special } else { 0 }),
        ];
        let total: u32 = choices.iter().map(|c| c.1).sum();
        let mut pick = self.rng.gen_range(0..total);
        let kind = choices
            .iter()
            .find(|(_, wt)| {
                if pick < *wt {
                    true
                } else {
                    pick -= wt;
                    false
                }
            })
            .unwrap()
            .0;
        match kind {
            0 => self.leaf(scope),
            1 => {
                let (f, n) = *ORDINARY.choose(&mut self.rng).unwrap();
                let args = (0..n)
                    .map(|i| {
                        let u = unequiv || (f == "fgl-prog2" && i == 0);
                        self.term_in(world, depth - 1, u, scope)
                    })
                    .collect();
                Term::app(f, args)
            }
            2 => {
                let test = self.term_in(world, depth - 1, false, scope);
                let a = self.term_in(world, depth - 1, unequiv, scope);
                let b = self.term_in(world, depth - 1, unequiv, scope);
                Term::app("if", vec![test, a, b])
            }
            3 => self.lambda(world, depth, unequiv, scope),
            4 => self.binder_site(world, depth, unequiv, scope),
            _ => self.special(world, depth, scope),
        }
    }

    fn binder_site(&mut self, world: &World, depth: usize, unequiv: bool, scope: &mut Scope) -> Term {
        let avail: Vec<_> = scope.sites.iter().filter(|s| self.fresh.contains(*s)).cloned().collect();
        let v = avail.choose(&mut self.rng).unwrap().clone();
        self.fresh.remove(&v);
        let (f, n) = *BINDERS.choose(&mut self.rng).unwrap();
        let mut args = vec![Term::Var(v.clone())];
        for _ in 1..n {
            let u = unequiv || f == "bind-var";
            let a = if self.rng.gen_bool(0.3) {
                Term::Quote(self.value(2))
            } else {
                self.term_in(world, depth - 1, u, scope)
            };
            args.push(a);
        }
        scope.refs.push(v);
        Term::app(f, args)
    }

    fn lambda(&mut self, world: &World, depth: usize, unequiv: bool, scope: &mut Scope) -> Term {
        // (formal, self-paired, kind): 0 plain, 1 binder site, 2 binder reference
        let mut names: Vec<Arc<str>> = VAR_POOL.iter().map(|v| Arc::from(*v)).collect();
        names.shuffle(&mut self.rng);
        let k = self.rng.gen_range(1..=3);
        let mut slots: Vec<(Arc<str>, bool, u8)> = Vec::new();
        for f in names.into_iter().take(k) {
            let selfp = scope.vars.contains(&f) && self.rng.gen_bool(0.35);
            slots.push((f, selfp, 0));
        }
        let sites: Vec<_> = scope.sites.iter().filter(|s| self.fresh.contains(*s)).cloned().collect();
        for s in sites {
            if self.rng.gen_bool(0.4) {
                slots.push((s, true, 1));
            }
        }
        if !scope.refs.is_empty() && self.rng.gen_bool(0.3) {
            let r = scope.refs.choose(&mut self.rng).unwrap().clone();
            if !slots.iter().any(|(f, ..)| *f == r) {
                slots.push((r, true, 2));
            }
        }
        slots.shuffle(&mut self.rng);
        let mut inner = Scope::default();
        let mut formals = Vec::new();
        let mut actuals = Vec::new();
        for (f, selfp, kind) in slots {
            let actual = if selfp {
                Term::Var(f.clone())
            } else {
                self.term_in(world, depth - 1, false, scope)
            };
            match kind {
                0 => inner.vars.push(f.clone()),
                1 => inner.sites.push(f.clone()),
                _ => inner.refs.push(f.clone()),
            }
            formals.push(f);
            actuals.push(actual);
        }
        let body = self.term_in(world, depth - 1, unequiv, &mut inner);
        for s in &inner.sites {
            if !self.fresh.contains(s) && !scope.refs.contains(s) {
                scope.refs.push(s.clone());
            }
        }
        Term::Lam {
            formals,
            body: Box::new(body),
            actuals,
        }
    }

    fn special(&mut self, world: &World, depth: usize, scope: &mut Scope) -> Term {
        let mut plain = Scope {
            vars: scope.vars.clone(),
            sites: Vec::new(),
            refs: scope.refs.clone(),
        };
        match self.rng.gen_range(0..3) {
            0 => {
                let e = self.term_in(world, depth - 1, false, &mut plain);
                Term::app("syntax-interp", vec![Term::Quote(reify_term(&e))])
            }
            1 => {
                let e = self.term_in(world, depth - 1, true, &mut plain);
                Term::app("fgl-interp-obj", vec![Term::Quote(reify_term(&e))])
            }
            _ => {
                let a = self.term_in(world, depth - 1, false, scope);
                let b = self.term_in(world, depth - 1, true, scope);
                Term::app("assume", vec![a, b])
            }
        }
    }
}

pub fn gen_value(seed: u64, depth: usize) -> Value {
    Gen::new(seed).value(depth)
}

pub fn gen_term(seed: u64, world: &World, depth: usize) -> Term {
    Gen::new(seed).term(world, depth, false)
}

pub fn gen_env(seed: u64, vars: &[Arc<str>]) -> Env {
    Gen::new(seed).env(vars)
}

pub fn gen_case(seed: u64, world: &World, depth: usize) -> Case {
    Gen::new(seed).case(seed, world, depth)
}
