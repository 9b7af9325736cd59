//! A conditional term rewriter with equivalence contexts, `unequiv`,
//! `abort-rewrite`, binder rules that bind free variables anywhere in a rule,
//! and a sampling oracle that checks the rewriter's correctness contract.

pub mod bench;
pub mod eval;
pub mod meta;
pub mod oracle;
pub mod rewriter;
pub mod rules;
pub mod syntax;
pub mod term;
pub mod world;

pub use rewriter::{rewrite_term, Config, Mutation, RewriteOutcome, Rewriter, RwError, RwState};
pub use rules::{corpus_world, load_world, parse_definitions, Item, LoadError, ParseError};
pub use eval::{eval_term, Env, EvalError, Evaluator};
pub use syntax::{parse_term, SyntaxError};
pub use term::{apply_subst, one_way_unify, reflect_value, reify_term, Bindings, ReflectError, Term, Value};
pub use world::{EquivCtx, World, WorldError};
