//! Greedy counterexample shrinking.

use crate::eval::Env;
use crate::rewriter::Config;
use crate::term::{check_lambda, Bindings, Term, Value};
use crate::world::World;

use super::contract::{recheck, Counterexample};

fn subterms(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Var(_) | Term::Quote(_) => {}
        Term::App(_, args) => {
            for a in args {
                out.push(a.clone());
                subterms(a, out);
            }
        }
        Term::Lam { body, actuals, .. } => {
            out.push((**body).clone());
            subterms(body, out);
            for a in actuals {
                out.push(a.clone());
                subterms(a, out);
            }
        }
    }
}

fn smaller_subterms(t: &Term) -> Vec<Term> {
    let mut v = Vec::new();
    subterms(t, &mut v);
    v.sort_by_key(Term::size);
    v.dedup();
    v
}

/// Every term obtained by replacing one node of `t` with one of its proper
/// subterms or with `'nil`.
fn replacements(t: &Term) -> Vec<Term> {
    let mut out = smaller_subterms(t);
    if *t != Term::nil() {
        out.push(Term::nil());
    }
    match t {
        Term::Var(_) | Term::Quote(_) => {}
        Term::App(f, args) => {
            for (i, a) in args.iter().enumerate() {
                for r in replacements(a) {
                    let mut args2 = args.clone();
                    args2[i] = r;
                    out.push(Term::App(f.clone(), args2));
                }
            }
        }
        Term::Lam {
            formals,
            body,
            actuals,
        } => {
            for r in replacements(body) {
                out.push(Term::Lam {
                    formals: formals.clone(),
                    body: Box::new(r),
                    actuals: actuals.clone(),
                });
            }
            for (i, a) in actuals.iter().enumerate() {
                for r in replacements(a) {
                    let mut actuals2 = actuals.clone();
                    actuals2[i] = r;
                    out.push(Term::Lam {
                        formals: formals.clone(),
                        body: body.clone(),
                        actuals: actuals2,
                    });
                }
            }
        }
    }
    out
}

fn well_formed(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Quote(_) => true,
        Term::App(_, args) => args.iter().all(well_formed),
        Term::Lam {
            formals,
            body,
            actuals,
        } => check_lambda(formals, body, actuals).is_ok() && well_formed(body) && actuals.iter().all(well_formed),
    }
}

fn reason_kind(r: &str) -> &str {
    r.split([':', ' ']).next().unwrap_or(r)
}

fn bindings_size(b: &Bindings) -> usize {
    b.iter().map(|(_, t)| 1 + t.size()).sum()
}

fn measure(c: &Counterexample) -> usize {
    c.term.size()
        + bindings_size(&c.sigma_i)
        + bindings_size(&c.extension)
        + c.env.iter().map(|(_, v)| 1 + v.size()).sum::<usize>()
}

fn smaller_values(v: &Value) -> Vec<Value> {
    let mut out = vec![Value::Nil, Value::int(0)];
    if let Value::Pair(a, b) = v {
        out.push((**a).clone());
        out.push((**b).clone());
    }
    out
}

fn candidates(c: &Counterexample) -> Vec<Counterexample> {
    let mut out = Vec::new();
    let mut terms = replacements(&c.term);
    terms.retain(well_formed);
    terms.sort_by_key(Term::size);
    for t in terms {
        out.push(Counterexample { term: t, ..c.clone() });
    }
    for i in 0..c.sigma_i.len() {
        out.push(Counterexample {
            sigma_i: c.sigma_i.without(i),
            ..c.clone()
        });
        let (_, bound) = c.sigma_i.iter().nth(i).unwrap();
        for t in smaller_subterms(bound) {
            out.push(Counterexample {
                sigma_i: c.sigma_i.with_replaced(i, t),
                ..c.clone()
            });
        }
    }
    for i in 0..c.extension.len() {
        out.push(Counterexample {
            extension: c.extension.without(i),
            ..c.clone()
        });
    }
    let env: Vec<_> = c.env.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    for (k, _) in &env {
        let mut e = Env::new();
        for (k2, v2) in env.iter().filter(|(k2, _)| k2 != k) {
            e.set(k2.as_str(), v2.clone());
        }
        out.push(Counterexample { env: e, ..c.clone() });
    }
    for (k, v) in &env {
        for smaller in smaller_values(v) {
            let mut e = Env::new();
            for (k2, v2) in &env {
                e.set(k2.as_str(), if k2 == k { smaller.clone() } else { v2.clone() });
            }
            out.push(Counterexample { env: e, ..c.clone() });
        }
    }
    out
}

/// Shrinks `c` while it keeps failing. Deterministic, so a fixpoint is
/// returned unchanged.
pub fn shrink(world: &World, c: &Counterexample, config: Config, eval_fuel: u64) -> Counterexample {
    let mut cur = c.clone();
    loop {
        let m = measure(&cur);
        let next = candidates(&cur).into_iter().find_map(|cand| {
            if measure(&cand) >= m {
                return None;
            }
            recheck(world, &cand, config, eval_fuel)
                .filter(|(_, reason)| reason_kind(reason) == reason_kind(&cur.reason))
                .map(|(out, reason)| Counterexample { out, reason, ..cand })
        });
        match next {
            Some(n) => cur = n,
            None => return cur,
        }
    }
}
