//! Samplers for the lambda strategy, rule theorems, binder consistency,
//! return-type facts and abort containment.

use std::sync::Arc;

use crate::eval::{Env, EvalError, Evaluator};
use crate::rewriter::{rewrite_term, Config, RewriteOutcome, TraceKind};
use crate::term::{Bindings, Term, Value};
use crate::world::{BinderRule, EquivCtx, RewriteRule, Rule, World};

use super::contract::related;
use super::gen::{Gen, Weights};

const MAX_DEPTH: usize = 1000;

/// Evaluates `t` with self-pairs stripped from every lambda and the body run
/// under σ_2 :: σ_λ, falling back to `env` (σ_0).
pub fn eval_dual(world: &World, t: &Term, env: &Env, fuel: u64) -> Result<Value, EvalError> {
    let mut ev = Evaluator::new(world, fuel);
    dual(&mut ev, t, &[], env, 0)
}

fn dual(
    ev: &mut Evaluator,
    t: &Term,
    sigma_l: &[(Arc<str>, Value)],
    env: &Env,
    depth: usize,
) -> Result<Value, EvalError> {
    if depth > MAX_DEPTH {
        return Err(EvalError::FuelExhausted);
    }
    match t {
        Term::Quote(v) => Ok(v.clone()),
        Term::Var(v) => Ok(sigma_l
            .iter()
            .find(|(k, _)| k == v)
            .map(|(_, val)| val.clone())
            .unwrap_or_else(|| env.get(v))),
        Term::App(f, args) if &**f == "if" => {
            let test = dual(ev, &args[0], sigma_l, env, depth + 1)?;
            let branch = if test.is_nil() { &args[2] } else { &args[1] };
            dual(ev, branch, sigma_l, env, depth + 1)
        }
        Term::App(f, args) => {
            let vals = args
                .iter()
                .map(|a| dual(ev, a, sigma_l, env, depth + 1))
                .collect::<Result<Vec<_>, _>>()?;
            ev.apply(f, vals)
        }
        Term::Lam {
            formals,
            body,
            actuals,
        } => {
            let mut inner: Vec<(Arc<str>, Value)> = Vec::new();
            for (f, a) in formals.iter().zip(actuals) {
                if matches!(a, Term::Var(v) if v == f) {
                    continue;
                }
                inner.push((f.clone(), dual(ev, a, sigma_l, env, depth + 1)?));
            }
            inner.extend(sigma_l.iter().cloned());
            dual(ev, body, &inner, env, depth + 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaVerdict {
    Match,
    Mismatch { term: Term, env: Env, classic: Value, dual: Value },
    Inconclusive,
}

/// Random lambda nest over the plain variables.
pub fn gen_lambda_nest(seed: u64, world: &World, depth: usize) -> Term {
    Gen::with_weights(seed, Weights::LAMBDA_NESTS).term(world, depth, false)
}

/// Compares the classic and the stripped evaluation of one random nest.
pub fn check_lambda_differential(world: &World, seed: u64, n_envs: usize) -> LambdaVerdict {
    let t = gen_lambda_nest(seed, world, 5);
    let mut g = Gen::new(seed ^ 0x1a4bda);
    let vars: Vec<Arc<str>> = t.all_vars().into_iter().collect();
    let mut concluded = false;
    for _ in 0..n_envs {
        let env = g.env(&vars);
        let classic = Evaluator::new(world, 20_000).eval(&t, &env);
        let dual = eval_dual(world, &t, &env, 20_000);
        match (classic, dual) {
            (Ok(a), Ok(b)) if a == b => concluded = true,
            (Ok(a), Ok(b)) => {
                return LambdaVerdict::Mismatch {
                    term: t,
                    env,
                    classic: a,
                    dual: b,
                }
            }
            _ => {}
        }
    }
    if concluded {
        LambdaVerdict::Match
    } else {
        LambdaVerdict::Inconclusive
    }
}

fn eval_ok(world: &World, t: &Term, env: &Env) -> Option<Value> {
    Evaluator::new(world, 20_000).eval(t, env).ok()
}

fn rule_vars<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Vec<Arc<str>> {
    let mut v: Vec<Arc<str>> = terms.into_iter().flat_map(|t| t.all_vars()).collect();
    v.sort();
    v.dedup();
    v
}

/// Samples the theorem `hyps ⇒ lhs ≡ rhs`. Returns a description of the
/// first violation.
pub fn check_rewrite_rule(world: &World, r: &RewriteRule, seed: u64, n: usize) -> Result<(), String> {
    let mut g = Gen::new(seed);
    let vars = rule_vars(r.hyps.iter().chain([&r.lhs, &r.rhs]));
    let ctx = EquivCtx::of([&*r.equiv]);
    for _ in 0..n {
        let env = g.env(&vars);
        if !r.hyps.iter().all(|h| eval_ok(world, h, &env).is_some_and(|v| !v.is_nil())) {
            continue;
        }
        let (Some(a), Some(b)) = (eval_ok(world, &r.lhs, &env), eval_ok(world, &r.rhs, &env)) else {
            continue;
        };
        if !related(world, &ctx, &a, &b).unwrap_or(true) {
            return Err(format!("{}: lhs {a}, rhs {b} under {env:?}", r.name));
        }
    }
    Ok(())
}

/// Samples the theorem `hyps ∧ var ≡_H form ⇒ f(var, args) ≡_C var` with
/// `var` set to the value of `form`.
pub fn check_binder_rule_theorem(world: &World, b: &BinderRule, seed: u64, n: usize) -> Result<(), String> {
    let mut g = Gen::new(seed);
    let vars = rule_vars(b.hyps.iter().chain(&b.arg_patterns).chain([&b.form]));
    let ctx = EquivCtx::of([&*b.out_equiv]);
    let mut call_args = vec![Term::Var(b.var.clone())];
    call_args.extend(b.arg_patterns.iter().cloned());
    let call = Term::App(b.fn_name.clone(), call_args);
    for _ in 0..n {
        let mut env = g.env(&vars);
        if !b.hyps.iter().all(|h| eval_ok(world, h, &env).is_some_and(|v| !v.is_nil())) {
            continue;
        }
        let Some(res) = eval_ok(world, &b.form, &env) else { continue };
        env.set(b.var.clone(), res.clone());
        let Some(v) = eval_ok(world, &call, &env) else { continue };
        if !related(world, &ctx, &v, &res).unwrap_or(true) {
            return Err(format!("{}: call {v}, var {res} under {env:?}", b.name));
        }
    }
    Ok(())
}

/// Samples every rule theorem of `world`.
pub fn check_rule_theorems(world: &World, seed: u64, n: usize) -> Result<(), String> {
    for (i, rule) in world.all_rules().enumerate() {
        let s = seed.wrapping_add(i as u64);
        match rule {
            Rule::Rewrite(r) => check_rewrite_rule(world, r, s, n)?,
            Rule::Binder(b) => check_binder_rule_theorem(world, b, s, n)?,
            Rule::Meta(_) => {}
        }
    }
    Ok(())
}

/// Rewrites a binder call on constant arguments and checks that the call
/// with the bound result in place of the variable is equivalent to it.
pub fn check_binder_consistency(world: &World, seed: u64, n_envs: usize) -> Result<(), String> {
    let mut g = Gen::new(seed);
    let binders: Vec<&Arc<BinderRule>> = world
        .all_rules()
        .filter_map(|r| match r {
            Rule::Binder(b) => Some(b),
            _ => None,
        })
        .collect();
    if binders.is_empty() {
        return Ok(());
    }
    let b = binders[seed as usize % binders.len()];
    let arity = b.arg_patterns.len();
    let args: Vec<Term> = (0..arity)
        .map(|_| if rand::Rng::gen_bool(g.rng(), 0.5) { Term::Quote(g.value(2)) } else { g.object(1) })
        .collect();
    let mut call = vec![Term::var("bv0")];
    call.extend(args.iter().cloned());
    let t = Term::App(b.fn_name.clone(), call);
    let config = Config {
        fuel: 20_000,
        ..Config::default()
    };
    let Ok((RewriteOutcome::Done(out, sigma_o), _)) = rewrite_term(world, &t, &Bindings::new(), &EquivCtx::equal(), config)
    else {
        return Ok(());
    };
    let Some(res) = sigma_o.lookup("bv0") else { return Ok(()) };
    if *res != out {
        return Err(format!("{t}: result {out} differs from binding {res}"));
    }
    let mut inst = vec![res.clone()];
    inst.extend(args);
    let replaced = Term::App(b.fn_name.clone(), inst);
    let vars = rule_vars([&replaced]);
    for _ in 0..n_envs {
        let env = g.env(&vars);
        let (Some(a), Some(r)) = (eval_ok(world, &replaced, &env), eval_ok(world, res, &env)) else {
            continue;
        };
        let ctx = EquivCtx::of([&*b.out_equiv]);
        if !related(world, &ctx, &a, &r).unwrap_or(true) {
            return Err(format!("{t}: f(res, args) = {a} but res = {r}"));
        }
    }
    Ok(())
}

/// Samples each return-type fact on random arguments.
pub fn check_return_types(world: &World, seed: u64, n: usize) -> Result<(), String> {
    let mut g = Gen::new(seed);
    for (f, tag) in world.return_type_facts() {
        let Some(crate::world::Arity::Fixed(arity)) = world.function(f).map(|d| d.arity) else {
            continue;
        };
        for _ in 0..n {
            let args: Vec<Value> = (0..arity).map(|_| g.value(2)).collect();
            let Ok(v) = Evaluator::new(world, 20_000).apply(f, args.clone()) else { continue };
            if !tag.holds(&v) {
                return Err(format!("({f} {args:?}) = {v} is not {}", tag.name()));
            }
        }
    }
    Ok(())
}

/// If every attempt of some rule aborts while rewriting `t`, the result must
/// equal the result in the world without that rule.
pub fn check_abort_containment(world: &World, t: &Term, sigma_i: &Bindings, ctx: &EquivCtx) -> Result<(), String> {
    let config = Config {
        fuel: 20_000,
        trace: true,
        mutation: None,
    };
    let Ok((out, st)) = rewrite_term(world, t, sigma_i, ctx, config) else { return Ok(()) };
    let mut aborted: Vec<&Arc<str>> = Vec::new();
    let mut succeeded: Vec<&Arc<str>> = Vec::new();
    for e in &st.trace {
        match &e.kind {
            TraceKind::RuleAborted { rule } => aborted.push(rule),
            TraceKind::RuleSucceeded { rule, .. } => succeeded.push(rule),
            _ => {}
        }
    }
    aborted.sort();
    aborted.dedup();
    let plain = Config {
        trace: false,
        ..config
    };
    for rule in aborted.into_iter().filter(|r| !succeeded.contains(r)) {
        let w2 = world.without_rule(rule);
        let Ok((out2, _)) = rewrite_term(&w2, t, sigma_i, ctx, plain) else { continue };
        if out2 != out {
            return Err(format!("{t}: deleting {rule} changes the result"));
        }
    }
    Ok(())
}
