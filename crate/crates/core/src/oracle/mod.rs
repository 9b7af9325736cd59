//! Brute-force verification of the rewriter: generators, the contract
//! sampler, shrinking and invariant samplers.

mod contract;
mod gen;
mod samplers;
mod shrink;

use std::ops::Range;
use std::thread;

pub use contract::{check_contract, recheck, related, Counterexample, Params, Record, Verdict};
pub use gen::{gen_case, gen_env, gen_term, gen_value, Case, Gen, Weights, BINDER_POOL, VAR_POOL};
pub use samplers::{
    check_abort_containment, check_binder_consistency, check_binder_rule_theorem, check_lambda_differential,
    check_return_types, check_rewrite_rule, check_rule_theorems, eval_dual, gen_lambda_nest, LambdaVerdict,
};
pub use shrink::shrink;

use crate::rewriter::Mutation;
use crate::world::World;

/// Term depth used for contract cases.
pub const CASE_DEPTH: usize = 4;
const STACK_SIZE: usize = 256 * 1024 * 1024;

/// Runs `f` on a thread with a large stack.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    thread::scope(|s| {
        thread::Builder::new()
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawn worker")
            .join()
            .expect("worker panicked")
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub cases: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub first_failure: Option<(u64, Counterexample)>,
}

impl RunSummary {
    pub fn inconclusive_ratio(&self) -> f64 {
        if self.cases == 0 {
            0.0
        } else {
            self.inconclusive as f64 / self.cases as f64
        }
    }

    /// No failures and at most 20% inconclusive cases.
    pub fn ok(&self) -> bool {
        self.fail == 0 && self.inconclusive * 5 <= self.cases
    }
}

fn workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(16)
}

/// Checks the contract on the cases generated from `seeds`, in parallel,
/// reporting records in seed order. Stops early after the first failure when
/// `stop_on_fail` is set.
pub fn run_contract_suite(
    world: &World,
    seeds: Range<u64>,
    params: &Params,
    stop_on_fail: bool,
    mut on_record: impl FnMut(&Record),
) -> RunSummary {
    let n = workers();
    let start = seeds.start;
    let len = (seeds.end - seeds.start) as usize;
    let chunk = 64.min(len.max(1));
    let mut next = start;
    let mut summary = RunSummary::default();
    while next < seeds.end {
        let block_end = (next + (chunk * n) as u64).min(seeds.end);
        let block: Vec<Record> = thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .map(|w| {
                    thread::Builder::new()
                        .stack_size(STACK_SIZE)
                        .spawn_scoped(s, move || {
                            let mut out = Vec::new();
                            let mut seed = next + w as u64;
                            while seed < block_end {
                                let case = gen_case(seed, world, CASE_DEPTH);
                                out.push(Record {
                                    seed,
                                    verdict: check_contract(world, &case, params),
                                });
                                seed += n as u64;
                            }
                            out
                        })
                        .expect("spawn worker")
                })
                .collect();
            let mut all: Vec<Record> = handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect();
            all.sort_by_key(|r| r.seed);
            all
        });
        let mut failed = false;
        for r in block {
            summary.cases += 1;
            match &r.verdict {
                Verdict::Pass => summary.pass += 1,
                Verdict::Inconclusive => summary.inconclusive += 1,
                Verdict::Fail(c) => {
                    summary.fail += 1;
                    failed = true;
                    if summary.first_failure.is_none() {
                        summary.first_failure = Some((r.seed, (**c).clone()));
                    }
                }
            }
            on_record(&r);
        }
        if failed && stop_on_fail {
            break;
        }
        next = block_end;
    }
    summary
}

/// Runs the contract suite against a mutated engine until the first failure.
/// Returns the number of cases needed, or `None` if it survived `max_cases`.
pub fn detect_mutation(world: &World, m: Mutation, max_cases: u64, params: &Params) -> Option<(u64, Counterexample)> {
    let mut p = *params;
    p.config.mutation = Some(m);
    let s = run_contract_suite(world, 0..max_cases, &p, true, |_| {});
    s.first_failure.map(|(seed, c)| (seed + 1, c))
}

#[cfg(test)]
mod tests;
