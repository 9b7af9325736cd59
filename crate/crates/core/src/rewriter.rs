//! Inside-out conditional rewriting with σ_u/σ_λ substitutions, equivalence
//! contexts, binder rules, special forms and `abort-rewrite`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::eval::{Env, EvalError, Evaluator};
use crate::term::{reflect_value, reify_term, unify_into, Bindings, Term, Value};
use crate::world::{
    Arity, BinderRule, EquivCtx, FnBody, MetaKind, MetaRule, RewriteRule, Rule, World, WorldError,
};

pub const DEFAULT_FUEL: u64 = 100_000;
const MAX_DEPTH: usize = 400;
const EVAL_FUEL_CAP: u64 = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RwError {
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{name} expects {expected} arguments, got {got}")]
    ArityMismatch { name: String, expected: String, got: usize },
    #[error("{0} used outside an unequiv context")]
    UnsoundSpecialForm(String),
    #[error("binder variable {0} is already bound")]
    BoundBinderVariable(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

impl From<EvalError> for RwError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::FuelExhausted => RwError::FuelExhausted,
            EvalError::UnknownFunction(f) => RwError::UnknownFunction(f),
            EvalError::ArityMismatch { name, expected, got } => RwError::ArityMismatch { name, expected, got },
        }
    }
}

/// Result of rewriting a term at the top of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteOutcome {
    Done(Term, Bindings),
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Step {
    Done(Term),
    Aborted,
}

/// Deliberate engine bugs used to test the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    MissingRefinementCheck,
    LookupOrderSwapped,
    LambdaDropsOuterBindings,
    LeakedRuleBindings,
    BinderSkipsBinding,
    AbortReturnsNil,
    IfMisreadsTest,
    HypsIgnored,
    NonlinearUnifyUnchecked,
    CongruenceOffByOne,
}

impl Mutation {
    pub const ALL: [Mutation; 10] = [
        Mutation::MissingRefinementCheck,
        Mutation::LookupOrderSwapped,
        Mutation::LambdaDropsOuterBindings,
        Mutation::LeakedRuleBindings,
        Mutation::BinderSkipsBinding,
        Mutation::AbortReturnsNil,
        Mutation::IfMisreadsTest,
        Mutation::HypsIgnored,
        Mutation::NonlinearUnifyUnchecked,
        Mutation::CongruenceOffByOne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::MissingRefinementCheck => "missing-refinement-check",
            Mutation::LookupOrderSwapped => "lookup-order-swapped",
            Mutation::LambdaDropsOuterBindings => "lambda-drops-outer-bindings",
            Mutation::LeakedRuleBindings => "leaked-rule-bindings",
            Mutation::BinderSkipsBinding => "binder-skips-binding",
            Mutation::AbortReturnsNil => "abort-returns-nil",
            Mutation::IfMisreadsTest => "if-misreads-test",
            Mutation::HypsIgnored => "hyps-ignored",
            Mutation::NonlinearUnifyUnchecked => "nonlinear-unify-unchecked",
            Mutation::CongruenceOffByOne => "congruence-off-by-one",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceKind {
    RuleTried { rule: Arc<str>, target: Term },
    RefinementFailed { rule: Arc<str>, equiv: Arc<str> },
    UnifyFailed { rule: Arc<str> },
    HypFailed { rule: Arc<str>, index: usize, hyp: Term },
    RuleAborted { rule: Arc<str> },
    RuleSucceeded { rule: Arc<str>, result: Term },
    AbortSignalled { arg: Term },
    BinderBound { var: Arc<str>, result: Term },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub depth: usize,
    pub fuel: u64,
    pub kind: TraceKind,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:width$}", "", width = self.depth * 2)?;
        match &self.kind {
            TraceKind::RuleTried { rule, target } => write!(f, "try {rule} on {target}"),
            TraceKind::RefinementFailed { rule, equiv } => {
                write!(f, "{rule}: {equiv} does not refine the context")
            }
            TraceKind::UnifyFailed { rule } => write!(f, "{rule}: no match"),
            TraceKind::HypFailed { rule, index, hyp } => {
                write!(f, "{rule}: hyp {} failed: {hyp}", index + 1)
            }
            TraceKind::RuleAborted { rule } => write!(f, "{rule}: abort-rewrite -> rule failed"),
            TraceKind::RuleSucceeded { rule, result } => write!(f, "{rule} -> {result}"),
            TraceKind::AbortSignalled { arg } => write!(f, "abort-rewrite {arg}"),
            TraceKind::BinderBound { var, result } => write!(f, "bind {var} := {result}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub rule_attempts: u64,
    pub rule_successes: u64,
    pub aborts: u64,
    pub binder_bindings: u64,
    pub syntaxp_evals: u64,
    /// Defined-function applications during syntaxp, bind-free and
    /// syntax-interp evaluation.
    pub syntactic_steps: u64,
}

/// Mutable state of one rewrite session.
#[derive(Debug, Clone, Default)]
pub struct RwState {
    pub sigma_u: Bindings,
    pub sigma_l: Bindings,
    pub assumptions: Vec<Term>,
    pub fuel: u64,
    pub trace: Vec<TraceEvent>,
    pub stats: Stats,
    depth: usize,
    rule_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub fuel: u64,
    pub trace: bool,
    pub mutation: Option<Mutation>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            fuel: DEFAULT_FUEL,
            trace: false,
            mutation: None,
        }
    }
}

enum RuleResult {
    Applied(Term),
    Failed,
}

pub struct Rewriter<'w> {
    world: &'w World,
    config: Config,
    st: RwState,
}

/// Rewrites `t` under `ctx` from σ_u = `sigma_i`, σ_λ = ∅, returning the
/// outcome and the final session state.
pub fn rewrite_term(
    world: &World,
    t: &Term,
    sigma_i: &Bindings,
    ctx: &EquivCtx,
    config: Config,
) -> Result<(RewriteOutcome, RwState), RwError> {
    let mut rw = Rewriter::new(world, config);
    let out = rw.run(t, sigma_i, ctx)?;
    Ok((out, rw.into_state()))
}

impl<'w> Rewriter<'w> {
    pub fn new(world: &'w World, config: Config) -> Self {
        Rewriter {
            world,
            config,
            st: RwState {
                fuel: config.fuel,
                ..RwState::default()
            },
        }
    }

    pub fn state(&self) -> &RwState {
        &self.st
    }

    pub fn into_state(self) -> RwState {
        self.st
    }

    pub fn run(&mut self, t: &Term, sigma_i: &Bindings, ctx: &EquivCtx) -> Result<RewriteOutcome, RwError> {
        self.st.sigma_u = sigma_i.clone();
        self.st.sigma_l = Bindings::new();
        self.st.assumptions.clear();
        self.st.depth = 0;
        self.st.rule_depth = 0;
        match self.rewrite(t, ctx)? {
            Step::Done(out) => {
                if self.config.mutation.is_none() {
                    debug_assert!(sigma_i.extended_by(&self.st.sigma_u), "σ_o must extend σ_i");
                }
                Ok(RewriteOutcome::Done(out, self.st.sigma_u.clone()))
            }
            Step::Aborted => Ok(RewriteOutcome::Aborted),
        }
    }

    fn mutated(&self, m: Mutation) -> bool {
        self.config.mutation == Some(m)
    }

    fn tick(&mut self) -> Result<(), RwError> {
        if self.st.fuel == 0 {
            return Err(RwError::FuelExhausted);
        }
        self.st.fuel -= 1;
        Ok(())
    }

    fn event(&mut self, kind: TraceKind) {
        if self.config.trace {
            self.st.trace.push(TraceEvent {
                depth: self.st.depth,
                fuel: self.st.fuel,
                kind,
            });
        }
    }

    fn lookup(&self, v: &str) -> Option<Term> {
        let (first, second) = if self.mutated(Mutation::LookupOrderSwapped) {
            (&self.st.sigma_u, &self.st.sigma_l)
        } else {
            (&self.st.sigma_l, &self.st.sigma_u)
        };
        first.lookup(v).or_else(|| second.lookup(v)).cloned()
    }

    fn arg_context(&self, f: &str, pos: usize, ctx: &EquivCtx) -> EquivCtx {
        if self.mutated(Mutation::CongruenceOffByOne) && pos > 1 {
            return self.world.arg_context(f, pos - 1, ctx);
        }
        self.world.arg_context(f, pos, ctx)
    }

    fn rewrite(&mut self, t: &Term, ctx: &EquivCtx) -> Result<Step, RwError> {
        if self.st.depth >= MAX_DEPTH {
            return Err(RwError::FuelExhausted);
        }
        self.st.depth += 1;
        let r = self.rewrite_inner(t, ctx);
        self.st.depth -= 1;
        r
    }

    fn rewrite_inner(&mut self, t: &Term, ctx: &EquivCtx) -> Result<Step, RwError> {
        match t {
            Term::Quote(_) => Ok(Step::Done(t.clone())),
            Term::Var(v) => Ok(Step::Done(self.lookup(v).unwrap_or_else(|| t.clone()))),
            Term::Lam {
                formals,
                body,
                actuals,
            } => {
                self.tick()?;
                self.rewrite_lambda(formals, body, actuals, ctx)
            }
            Term::App(f, args) => {
                self.tick()?;
                self.rewrite_app(f, args, ctx)
            }
        }
    }

    fn rewrite_lambda(
        &mut self,
        formals: &[Arc<str>],
        body: &Term,
        actuals: &[Term],
        ctx: &EquivCtx,
    ) -> Result<Step, RwError> {
        let mut sigma2 = Bindings::new();
        for (f, a) in formals.iter().zip(actuals) {
            if matches!(a, Term::Var(v) if v == f) {
                continue;
            }
            match self.rewrite(a, &EquivCtx::equal())? {
                Step::Done(r) => {
                    sigma2.bind(f.clone(), r);
                }
                Step::Aborted => return Ok(Step::Aborted),
            }
        }
        let inner = if self.mutated(Mutation::LambdaDropsOuterBindings) {
            sigma2
        } else {
            self.st.sigma_l.shadowed_by(&sigma2)
        };
        let saved = std::mem::replace(&mut self.st.sigma_l, inner);
        let r = self.rewrite(body, ctx);
        self.st.sigma_l = saved;
        r
    }

    fn rewrite_app(&mut self, f: &Arc<str>, args: &[Term], ctx: &EquivCtx) -> Result<Step, RwError> {
        let def = self
            .world
            .function(f)
            .ok_or_else(|| RwError::UnknownFunction(f.to_string()))?;
        if !def.arity.accepts(args.len()) {
            return Err(RwError::ArityMismatch {
                name: f.to_string(),
                expected: match def.arity {
                    Arity::Fixed(n) => n.to_string(),
                    Arity::Variadic => "any number of".to_string(),
                },
                got: args.len(),
            });
        }
        match &**f {
            "if" => return self.rewrite_if(args, ctx),
            "abort-rewrite" => return self.rewrite_abort(args, ctx),
            "syntax-interp" => return self.rewrite_syntax_interp(args, ctx),
            "fgl-interp-obj" => return self.rewrite_interp_obj(args, ctx),
            "assume" => return self.rewrite_assume(args, ctx),
            _ => {}
        }
        if self.world.has_binder_rules(f) {
            if let Some(Term::Var(v)) = args.first() {
                if self.lookup(v).is_none() {
                    return self.rewrite_binder_call(f, v, &args[1..], ctx);
                }
            }
        }
        let mut new_args = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let actx = self.arg_context(f, i + 1, ctx);
            match self.rewrite(a, &actx)? {
                Step::Done(r) => new_args.push(r),
                Step::Aborted => return Ok(Step::Aborted),
            }
        }
        self.rewrite_call(f, new_args, ctx)
    }

    /// Tries the ordinary rules of `f` on a call with rewritten arguments,
    /// then folds constant calls.
    fn rewrite_call(&mut self, f: &Arc<str>, args: Vec<Term>, ctx: &EquivCtx) -> Result<Step, RwError> {
        let world = self.world;
        let target = Term::App(f.clone(), args);
        for rule in world.rules_for(f) {
            let r = match rule {
                Rule::Rewrite(r) => self.try_rewrite_rule(r, &target, ctx)?,
                Rule::Meta(m) if m.kind == MetaKind::Plain => self.try_meta_rule(m, &target, ctx)?,
                _ => continue,
            };
            if let RuleResult::Applied(out) = r {
                return Ok(Step::Done(out));
            }
        }
        let Term::App(_, args) = &target else { unreachable!() };
        if let Some(v) = self.fold(f, args)? {
            return Ok(Step::Done(Term::Quote(v)));
        }
        Ok(Step::Done(target))
    }

    fn fold(&mut self, f: &str, args: &[Term]) -> Result<Option<Value>, RwError> {
        match &self.world.function(f).map(|d| &d.body) {
            Some(FnBody::Builtin(b)) if b.is_special() => return Ok(None),
            None => return Ok(None),
            _ => {}
        }
        let Some(vals) = args.iter().map(|a| a.quoted_value().cloned()).collect::<Option<Vec<_>>>() else {
            return Ok(None);
        };
        let mut ev = Evaluator::new(self.world, self.st.fuel.min(EVAL_FUEL_CAP));
        let r = ev.apply(f, vals);
        self.st.fuel = self.st.fuel.saturating_sub(ev.steps);
        match r {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::FuelExhausted) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn rewrite_if(&mut self, args: &[Term], ctx: &EquivCtx) -> Result<Step, RwError> {
        let test = match self.rewrite(&args[0], &EquivCtx::iff())? {
            Step::Done(t) => t,
            Step::Aborted => return Ok(Step::Aborted),
        };
        if let Term::Quote(v) = &test {
            let taken = if self.mutated(Mutation::IfMisreadsTest) {
                *v == Value::True
            } else {
                !v.is_nil()
            };
            return self.rewrite(&args[if taken { 1 } else { 2 }], ctx);
        }
        let Step::Done(a) = self.rewrite(&args[1], ctx)? else {
            return Ok(Step::Aborted);
        };
        let Step::Done(b) = self.rewrite(&args[2], ctx)? else {
            return Ok(Step::Aborted);
        };
        Ok(Step::Done(Term::app("if", vec![test, a, b])))
    }

    fn rewrite_abort(&mut self, args: &[Term], ctx: &EquivCtx) -> Result<Step, RwError> {
        if self.st.rule_depth == 0 {
            return self.rewrite(&args[0], ctx);
        }
        self.event(TraceKind::AbortSignalled { arg: args[0].clone() });
        if self.mutated(Mutation::AbortReturnsNil) {
            return Ok(Step::Done(Term::nil()));
        }
        Ok(Step::Aborted)
    }

    fn require_unequiv(&self, form: &str, ctx: &EquivCtx) -> Result<(), RwError> {
        if ctx.is_unequiv() {
            Ok(())
        } else {
            Err(RwError::UnsoundSpecialForm(form.to_string()))
        }
    }

    fn rewrite_syntax_interp(&mut self, args: &[Term], ctx: &EquivCtx) -> Result<Step, RwError> {
        self.require_unequiv("syntax-interp", ctx)?;
        let e = match &args[0] {
            Term::Quote(v) => reflect_value(v).unwrap_or_else(|_| args[0].clone()),
            other => other.clone(),
        };
        Ok(Step::Done(Term::Quote(self.eval_syntactic(&e)?)))
    }

    fn rewrite_interp_obj(&mut self, args: &[Term], ctx: &EquivCtx) -> Result<Step, RwError> {
        self.require_unequiv("fgl-interp-obj", ctx)?;
        let r = match self.rewrite(&args[0], &EquivCtx::equal())? {
            Step::Done(r) => r,
            Step::Aborted => return Ok(Step::Aborted),
        };
        let inner = match &r {
            Term::Quote(v) => reflect_value(v).ok().filter(|t| self.world.check_term(t).is_ok()),
            _ => None,
        };
        match inner {
            Some(t) => {
                let saved = self.st.sigma_u.clone();
                let out = self.rewrite(&t, &EquivCtx::unequiv());
                self.st.sigma_u = saved;
                out
            }
            None => Ok(Step::Done(r)),
        }
    }

    fn rewrite_assume(&mut self, args: &[Term], ctx: &EquivCtx) -> Result<Step, RwError> {
        self.require_unequiv("assume", ctx)?;
        let a = match self.rewrite(&args[0], &EquivCtx::iff())? {
            Step::Done(a) => a,
            Step::Aborted => return Ok(Step::Aborted),
        };
        self.st.assumptions.push(a);
        let r = self.rewrite(&args[1], ctx);
        self.st.assumptions.pop();
        r
    }

    /// Evaluates `e` with each variable bound to the reified object it names.
    fn eval_syntactic(&mut self, e: &Term) -> Result<Value, RwError> {
        let env: Env = e
            .all_vars()
            .into_iter()
            .map(|v| {
                let obj = self.lookup(&v).unwrap_or_else(|| Term::Var(v.clone()));
                (v, reify_term(&obj))
            })
            .collect();
        let mut ev = Evaluator::new(self.world, self.st.fuel.min(EVAL_FUEL_CAP));
        let r = ev.eval(e, &env);
        self.st.fuel = self.st.fuel.saturating_sub(ev.steps);
        self.st.stats.syntactic_steps += ev.steps;
        Ok(r?)
    }

    fn rewrite_binder_call(
        &mut self,
        f: &Arc<str>,
        v: &Arc<str>,
        rest: &[Term],
        ctx: &EquivCtx,
    ) -> Result<Step, RwError> {
        let mut args = Vec::with_capacity(rest.len());
        for (i, a) in rest.iter().enumerate() {
            let actx = self.arg_context(f, i + 2, ctx);
            match self.rewrite(a, &actx)? {
                Step::Done(r) => args.push(r),
                Step::Aborted => return Ok(Step::Aborted),
            }
        }
        if let Some(bound) = self.lookup(v) {
            args.insert(0, bound);
            return self.rewrite_call(f, args, ctx);
        }
        let world = self.world;
        for rule in world.rules_for(f) {
            let r = match rule {
                Rule::Binder(b) => self.try_binder_rule(b, v, &args, ctx)?,
                Rule::Meta(m) if m.kind == MetaKind::Binder => self.try_binder_meta(m, v, &args)?,
                _ => continue,
            };
            if let RuleResult::Applied(res) = r {
                return Ok(Step::Done(res));
            }
        }
        args.insert(0, Term::Var(v.clone()));
        Ok(Step::Done(Term::App(f.clone(), args)))
    }

    fn bind_binder_var(&mut self, v: &Arc<str>, res: &Term) -> Result<(), RwError> {
        self.event(TraceKind::BinderBound {
            var: v.clone(),
            result: res.clone(),
        });
        self.st.stats.binder_bindings += 1;
        if self.mutated(Mutation::BinderSkipsBinding) {
            return Ok(());
        }
        if !self.st.sigma_u.bind(v.clone(), res.clone()) {
            return Err(RwError::BoundBinderVariable(v.to_string()));
        }
        Ok(())
    }

    /// Runs `body` with σ_u = `sigma` and σ_λ = ∅, restoring the caller's
    /// substitutions afterwards.
    fn in_rule_scope(
        &mut self,
        sigma: Bindings,
        body: impl FnOnce(&mut Self) -> Result<Option<Step>, RwError>,
    ) -> Result<(Option<Step>, Bindings), RwError> {
        let saved_u = std::mem::replace(&mut self.st.sigma_u, sigma);
        let saved_l = std::mem::take(&mut self.st.sigma_l);
        self.st.rule_depth += 1;
        let r = body(self);
        self.st.rule_depth -= 1;
        let rule_sigma = std::mem::replace(&mut self.st.sigma_u, saved_u);
        self.st.sigma_l = saved_l;
        Ok((r?, rule_sigma))
    }

    /// Finishes a rule attempt: reports the outcome and, under the leak
    /// mutation, merges the rule's bindings into the caller's σ_u.
    fn conclude(&mut self, rule: &Arc<str>, r: Option<Step>, rule_sigma: Bindings) -> RuleResult {
        match r {
            None => RuleResult::Failed,
            Some(Step::Aborted) => {
                self.st.stats.aborts += 1;
                self.event(TraceKind::RuleAborted { rule: rule.clone() });
                RuleResult::Failed
            }
            Some(Step::Done(out)) => {
                self.st.stats.rule_successes += 1;
                self.event(TraceKind::RuleSucceeded {
                    rule: rule.clone(),
                    result: out.clone(),
                });
                if self.mutated(Mutation::LeakedRuleBindings) {
                    for (v, t) in rule_sigma.iter() {
                        let pos = self.st.sigma_u.vars().position(|u| &**u == v);
                        match pos {
                            Some(idx) => self.st.sigma_u = self.st.sigma_u.with_replaced(idx, t.clone()),
                            None => {
                                self.st.sigma_u.bind(v, t.clone());
                            }
                        }
                    }
                }
                RuleResult::Applied(out)
            }
        }
    }

    fn begin_attempt(&mut self, rule: &Arc<str>, target: &Term) -> Result<(), RwError> {
        self.tick()?;
        self.st.stats.rule_attempts += 1;
        self.event(TraceKind::RuleTried {
            rule: rule.clone(),
            target: target.clone(),
        });
        Ok(())
    }

    fn refinement_ok(&mut self, rule: &Arc<str>, equiv: &Arc<str>, ctx: &EquivCtx) -> Result<bool, RwError> {
        if self.mutated(Mutation::MissingRefinementCheck) || self.world.refines(equiv, ctx)? {
            return Ok(true);
        }
        self.event(TraceKind::RefinementFailed {
            rule: rule.clone(),
            equiv: equiv.clone(),
        });
        Ok(false)
    }

    fn unify(&mut self, rule: &Arc<str>, pats: &[Term], targets: &[Term]) -> Option<Bindings> {
        let check = !self.mutated(Mutation::NonlinearUnifyUnchecked);
        let mut sigma = Bindings::new();
        if pats.len() == targets.len() && pats.iter().zip(targets).all(|(p, t)| unify_into(p, t, &mut sigma, check)) {
            return Some(sigma);
        }
        self.event(TraceKind::UnifyFailed { rule: rule.clone() });
        None
    }

    fn try_rewrite_rule(&mut self, r: &RewriteRule, target: &Term, ctx: &EquivCtx) -> Result<RuleResult, RwError> {
        self.begin_attempt(&r.name, target)?;
        if !self.refinement_ok(&r.name, &r.equiv, ctx)? {
            return Ok(RuleResult::Failed);
        }
        let Some(sigma) = self.unify(&r.name, std::slice::from_ref(&r.lhs), std::slice::from_ref(target)) else {
            return Ok(RuleResult::Failed);
        };
        let (step, rule_sigma) = self.in_rule_scope(sigma, |rw| {
            match rw.relieve_hyps(&r.name, &r.hyps)? {
                Hyps::Relieved => {}
                Hyps::Failed => return Ok(None),
                Hyps::Aborted => return Ok(Some(Step::Aborted)),
            }
            rw.rewrite(&r.rhs, ctx).map(Some)
        })?;
        Ok(self.conclude(&r.name, step, rule_sigma))
    }

    fn try_binder_rule(
        &mut self,
        b: &BinderRule,
        v: &Arc<str>,
        args: &[Term],
        ctx: &EquivCtx,
    ) -> Result<RuleResult, RwError> {
        let mut call = vec![Term::Var(v.clone())];
        call.extend(args.iter().cloned());
        self.begin_attempt(&b.name, &Term::App(b.fn_name.clone(), call))?;
        if !self.refinement_ok(&b.name, &b.out_equiv, ctx)? {
            return Ok(RuleResult::Failed);
        }
        let Some(sigma) = self.unify(&b.name, &b.arg_patterns, args) else {
            return Ok(RuleResult::Failed);
        };
        let form_ctx = EquivCtx::of([&*b.hyp_equiv]);
        let (step, rule_sigma) = self.in_rule_scope(sigma, |rw| {
            match rw.relieve_hyps(&b.name, &b.hyps)? {
                Hyps::Relieved => {}
                Hyps::Failed => return Ok(None),
                Hyps::Aborted => return Ok(Some(Step::Aborted)),
            }
            rw.rewrite(&b.form, &form_ctx).map(Some)
        })?;
        let r = self.conclude(&b.name, step, rule_sigma);
        if let RuleResult::Applied(res) = &r {
            self.bind_binder_var(v, res)?;
        }
        Ok(r)
    }

    fn try_meta_rule(&mut self, m: &MetaRule, target: &Term, ctx: &EquivCtx) -> Result<RuleResult, RwError> {
        self.begin_attempt(&m.name, target)?;
        let Term::App(f, args) = target else { unreachable!() };
        let Some(meta) = self.world.meta_fn(&m.meta_tag) else {
            return Ok(RuleResult::Failed);
        };
        let Some((form, sigma)) = meta(f, args, self.world) else {
            self.event(TraceKind::UnifyFailed { rule: m.name.clone() });
            return Ok(RuleResult::Failed);
        };
        let (step, rule_sigma) = self.in_rule_scope(sigma, |rw| rw.rewrite(&form, ctx).map(Some))?;
        Ok(self.conclude(&m.name, step, rule_sigma))
    }

    fn try_binder_meta(&mut self, m: &MetaRule, v: &Arc<str>, args: &[Term]) -> Result<RuleResult, RwError> {
        let mut call = vec![Term::Var(v.clone())];
        call.extend(args.iter().cloned());
        self.begin_attempt(&m.name, &Term::App(m.fn_name.clone(), call))?;
        let Some(meta) = self.world.meta_fn(&m.meta_tag) else {
            return Ok(RuleResult::Failed);
        };
        let Some((form, sigma)) = meta(&m.fn_name, args, self.world) else {
            self.event(TraceKind::UnifyFailed { rule: m.name.clone() });
            return Ok(RuleResult::Failed);
        };
        let (step, rule_sigma) =
            self.in_rule_scope(sigma, |rw| rw.rewrite(&form, &EquivCtx::equal()).map(Some))?;
        let r = self.conclude(&m.name, step, rule_sigma);
        if let RuleResult::Applied(res) = &r {
            self.bind_binder_var(v, res)?;
        }
        Ok(r)
    }

    /// Relieves `hyps` in order under the current rule scope, extending σ_u
    /// with any free-variable bindings they make.
    fn relieve_hyps(&mut self, rule: &Arc<str>, hyps: &[Term]) -> Result<Hyps, RwError> {
        if self.mutated(Mutation::HypsIgnored) {
            return Ok(Hyps::Relieved);
        }
        for (index, h) in hyps.iter().enumerate() {
            let ok = match h {
                Term::App(f, a) if &**f == "syntaxp" && a.len() == 1 => {
                    self.st.stats.syntaxp_evals += 1;
                    !self.eval_syntactic(&a[0])?.is_nil()
                }
                Term::App(f, a) if &**f == "bind-free" && a.len() == 2 => {
                    let alist = self.eval_syntactic(&a[0])?;
                    let vars = a[1].quoted_value().cloned().unwrap_or(Value::Nil);
                    self.bind_free(&alist, &vars)
                }
                Term::App(f, a) if a.len() == 2 && self.binding_equiv(f, &a[0]).is_some() => {
                    let (v, equiv) = self.binding_equiv(f, &a[0]).unwrap();
                    match self.rewrite(&a[1], &EquivCtx::of([&*equiv]))? {
                        Step::Done(r) => {
                            self.st.sigma_u.bind(v, r);
                            true
                        }
                        Step::Aborted => return Ok(Hyps::Aborted),
                    }
                }
                _ => match self.rewrite(h, &EquivCtx::iff())? {
                    Step::Done(r) => {
                        matches!(&r, Term::Quote(v) if !v.is_nil()) || self.st.assumptions.contains(&r)
                    }
                    Step::Aborted => return Ok(Hyps::Aborted),
                },
            };
            if !ok {
                self.event(TraceKind::HypFailed {
                    rule: rule.clone(),
                    index,
                    hyp: h.clone(),
                });
                return Ok(Hyps::Failed);
            }
        }
        Ok(Hyps::Relieved)
    }

    /// `(equiv v e)` with `v` unbound binds `v`; returns `v` and the
    /// equivalence named by the relation function `f`.
    fn binding_equiv(&self, f: &str, first: &Term) -> Option<(Arc<str>, Arc<str>)> {
        let Term::Var(v) = first else { return None };
        if self.lookup(v).is_some() {
            return None;
        }
        let equiv = self.world.equivs().find(|e| &*e.relation_fn == f)?;
        Some((v.clone(), equiv.name.clone()))
    }

    /// Extends σ_u from a `bind-free` result: an alist binding exactly the
    /// listed unbound variables to term encodings.
    fn bind_free(&mut self, alist: &Value, vars: &Value) -> bool {
        let (Some(pairs), Some(wanted)) = (alist.to_vec(), vars.to_vec()) else {
            return false;
        };
        if pairs.len() != wanted.len() {
            return false;
        }
        let mut new = Vec::new();
        for p in &pairs {
            let Value::Pair(k, obj) = p else { return false };
            let Some(name) = k.as_symbol() else { return false };
            let listed = wanted.iter().any(|w| w.as_symbol() == Some(name));
            let fresh = self.lookup(name).is_none() && !new.iter().any(|(n, _): &(Arc<str>, Term)| &**n == name);
            let Ok(t) = reflect_value(obj) else { return false };
            if !listed || !fresh || self.world.check_term(&t).is_err() {
                return false;
            }
            new.push((Arc::from(name), t));
        }
        for (v, t) in new {
            self.st.sigma_u.bind(v, t);
        }
        true
    }
}

enum Hyps {
    Relieved,
    Failed,
    Aborted,
}

/// Renders a trace one event per line.
pub fn format_trace(events: &[TraceEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}
