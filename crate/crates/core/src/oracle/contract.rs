//! Sampling check of the rewriter's correctness contract.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::eval::{Env, EvalError, Evaluator};
use crate::rewriter::{rewrite_term, Config, RewriteOutcome, RwError};
use crate::term::{apply_subst, Bindings, Term, Value};
use crate::world::{EquivCtx, World};

use super::gen::{Case, Gen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub n_envs: usize,
    pub n_exts: usize,
    pub eval_fuel: u64,
    pub config: Config,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n_envs: 200,
            n_exts: 4,
            eval_fuel: 20_000,
            config: Config {
                fuel: 20_000,
                ..Config::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub term: Term,
    pub sigma_i: Bindings,
    pub ctx: EquivCtx,
    /// Bindings added to σ_o to form σ_+.
    pub extension: Bindings,
    pub env: Env,
    pub out: Option<Term>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Box<Counterexample>),
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail(_) => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

fn quoted(s: &str) -> String {
    format!("{s:?}")
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(counterexample :term {} :sigma {} :ctx (", self.term, self.sigma_i)?;
        for (i, m) in self.ctx.members().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ") :extension {} :env (", self.extension)?;
        for (i, (v, val)) in self.env.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "({v} . {val})")?;
        }
        write!(f, ")")?;
        if let Some(out) = &self.out {
            write!(f, " :out {out}")?;
        }
        write!(f, " :reason {})", quoted(&self.reason))
    }
}

/// One line-delimited verdict record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub seed: u64,
    pub verdict: Verdict,
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.seed, self.verdict.name())?;
        if let Verdict::Fail(c) = &self.verdict {
            write!(f, "\t{c}")?;
        }
        Ok(())
    }
}

/// Whether some relation of `ctx` holds between `a` and `b`.
pub fn related(world: &World, ctx: &EquivCtx, a: &Value, b: &Value) -> Result<bool, EvalError> {
    for m in ctx.members() {
        if m == "unequiv" {
            return Ok(true);
        }
        let Some(rel) = world.equiv(m) else { continue };
        let mut ev = Evaluator::new(world, 10_000);
        if !ev.apply(&rel.relation_fn, vec![a.clone(), b.clone()])?.is_nil() {
            return Ok(true);
        }
    }
    Ok(false)
}

enum Sample {
    Holds,
    Violated(Value, Value),
    Skipped,
    Error(String),
}

fn sample(world: &World, lhs: &Term, out: &Term, ctx: &EquivCtx, env: &Env, fuel: u64) -> Sample {
    let a = match Evaluator::new(world, fuel).eval(lhs, env) {
        Ok(v) => v,
        Err(EvalError::FuelExhausted) => return Sample::Skipped,
        Err(e) => return Sample::Error(e.to_string()),
    };
    let b = match Evaluator::new(world, fuel).eval(out, env) {
        Ok(v) => v,
        Err(EvalError::FuelExhausted) => return Sample::Skipped,
        Err(e) => return Sample::Error(e.to_string()),
    };
    match related(world, ctx, &a, &b) {
        Ok(true) => Sample::Holds,
        Ok(false) => Sample::Violated(a, b),
        Err(EvalError::FuelExhausted) => Sample::Skipped,
        Err(e) => Sample::Error(e.to_string()),
    }
}

fn env_vars(terms: &[&Term]) -> Vec<Arc<str>> {
    let mut vars: Vec<Arc<str>> = terms.iter().flat_map(|t| t.all_vars()).collect();
    vars.sort();
    vars.dedup();
    vars
}

/// Variables σ_+ may bind: free in the input or brand new, but neither bound
/// in σ_o nor free in the output.
fn extension_candidates(t: &Term, out: &Term, sigma_o: &Bindings) -> Vec<Arc<str>> {
    let in_out = out.all_vars();
    let mut cands = env_vars(&[t]);
    cands.push(Arc::from("z0"));
    cands.retain(|v| !sigma_o.is_bound(v) && !in_out.contains(v));
    cands
}

/// Rewrites `t` and samples extensions of σ_o and environments, checking that
/// the input under σ_+ and the output are related by `ctx`.
pub fn check_contract(world: &World, case: &Case, params: &Params) -> Verdict {
    let mut g = Gen::new(case.seed ^ 0x5e_ed0f_c0de);
    let fail = |out: Option<&Term>, extension: Bindings, env: Env, reason: String| {
        Verdict::Fail(Box::new(Counterexample {
            term: case.term.clone(),
            sigma_i: case.sigma_i.clone(),
            ctx: case.ctx.clone(),
            extension,
            env,
            out: out.cloned(),
            reason,
        }))
    };
    let (out, sigma_o) = match rewrite_term(world, &case.term, &case.sigma_i, &case.ctx, params.config) {
        Ok((RewriteOutcome::Done(out, s), _)) => (out, s),
        Ok((RewriteOutcome::Aborted, _)) => return Verdict::Pass,
        Err(RwError::FuelExhausted) => return Verdict::Inconclusive,
        Err(e) => return fail(None, Bindings::new(), Env::new(), format!("rewrite error: {e}")),
    };
    if !case.sigma_i.extended_by(&sigma_o) {
        return fail(Some(&out), Bindings::new(), Env::new(), format!("σ_o {sigma_o} does not extend σ_i"));
    }
    let cands = extension_candidates(&case.term, &out, &sigma_o);
    let mut concluded = 0usize;
    for e in 0..params.n_exts.max(1) {
        let mut extension = Bindings::new();
        if e > 0 {
            for v in &cands {
                if g.rng().gen_bool(0.5) {
                    let obj = g.object(2);
                    extension.bind(v.clone(), obj);
                }
            }
        }
        let sigma_plus = extension.shadowed_by(&sigma_o);
        let lhs = apply_subst(&case.term, &sigma_plus);
        let vars = env_vars(&[&lhs, &out]);
        for _ in 0..params.n_envs {
            let env = g.env(&vars);
            match sample(world, &lhs, &out, &case.ctx, &env, params.eval_fuel) {
                Sample::Holds => concluded += 1,
                Sample::Skipped => {}
                Sample::Violated(a, b) => {
                    return fail(Some(&out), extension, env, format!("input evaluates to {a}, output to {b}"))
                }
                Sample::Error(msg) => return fail(Some(&out), extension, env, format!("evaluation error: {msg}")),
            }
        }
    }
    if concluded == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

/// Re-runs a single counterexample; returns the output and reason if it
/// still fails.
pub fn recheck(world: &World, c: &Counterexample, config: Config, eval_fuel: u64) -> Option<(Option<Term>, String)> {
    let (out, sigma_o) = match rewrite_term(world, &c.term, &c.sigma_i, &c.ctx, config) {
        Ok((RewriteOutcome::Done(out, s), _)) => (out, s),
        Ok((RewriteOutcome::Aborted, _)) | Err(RwError::FuelExhausted) => return None,
        Err(e) => return Some((None, format!("rewrite error: {e}"))),
    };
    if !c.sigma_i.extended_by(&sigma_o) {
        return Some((Some(out), format!("σ_o {sigma_o} does not extend σ_i")));
    }
    let in_out = out.all_vars();
    let extension: Bindings = c
        .extension
        .iter()
        .filter(|(v, _)| !sigma_o.is_bound(v) && !in_out.contains(*v))
        .map(|(v, t)| (v, t.clone()))
        .collect();
    let lhs = apply_subst(&c.term, &extension.shadowed_by(&sigma_o));
    match sample(world, &lhs, &out, &c.ctx, &c.env, eval_fuel) {
        Sample::Violated(a, b) => Some((Some(out), format!("input evaluates to {a}, output to {b}"))),
        Sample::Error(msg) => Some((Some(out), format!("evaluation error: {msg}"))),
        Sample::Holds | Sample::Skipped => None,
    }
}
