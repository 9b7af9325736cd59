//! Cost of a redundant hypothesis versus a binder rule on `power2p` of a
//! product of powers of two.

use crate::rewriter::{rewrite_term, Config, RewriteOutcome, RwError};
use crate::rules::load_world;
use crate::term::{Bindings, Term, Value};
use crate::world::{EquivCtx, World};

const COMMON: &str = "
(defun expt2 (k)
  (if (integerp k)
      (if (< '0 k) (binary-* '2 (expt2 (binary-+ k '-1))) '1)
    '1))

(defun power2p (x)
  (if (integerp x)
      (if (< '0 x)
          (if (equal x '1) t (if (intcar x) nil (power2p (logcdr x))))
        nil)
    nil))

(defun power2-syntaxp (x)
  (if (consp x)
      (if (equal (car x) 'expt2)
          t
        (if (equal (car x) 'binary-*)
            (if (power2-syntaxp (car (cdr x))) (power2-syntaxp (car (cdr (cdr x)))) nil)
          nil))
    nil))

(defrule power2p-of-expt2 :lhs (power2p (expt2 i)) :rhs t :equiv iff)
";

const REDUNDANT: &str = "
(defrule power2p-shift
  :hyps ((syntaxp (power2-syntaxp y)) (power2p y))
  :lhs (power2p (binary-* x y))
  :rhs (power2p x)
  :equiv iff)
";

const BINDER: &str = "
(defun check-power2p (var x) (and var (power2p x) t))

(defbinder-rule check-power2p-binder
  :fn check-power2p :var var :args (x)
  :form (if (bind-var known (syntax-interp (power2-syntaxp x)))
            (power2p x)
          nil)
  :hyp-equiv equal :equiv equal)
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Redundant,
    Binder,
}

pub fn power2_world(style: Style) -> World {
    let extra = match style {
        Style::Redundant => REDUNDANT,
        Style::Binder => BINDER,
    };
    let text = format!("{}\n{COMMON}\n{extra}", crate::rules::corpus());
    load_world(&text).expect("benchmark definitions load")
}

/// `(power2p (binary-* l0 (binary-* l1 ... ln)))` with each `li` bound to
/// `(expt2 'i)`; `n` is the number of products.
pub fn power2_instance(n: usize, style: Style) -> (Term, Bindings) {
    let leaf = |i: usize| Term::var(format!("l{i}").as_str());
    let mut prod = leaf(n);
    for i in (0..n).rev() {
        prod = Term::app("binary-*", vec![leaf(i), prod]);
    }
    let mut sigma = Bindings::new();
    for i in 0..=n {
        sigma.bind(format!("l{i}"), Term::app("expt2", vec![Term::Quote(Value::int(i as i64))]));
    }
    let t = match style {
        Style::Redundant => Term::app("power2p", vec![prod]),
        Style::Binder => Term::app("check-power2p", vec![Term::var("known-power2p"), prod]),
    };
    (t, sigma)
}

/// Evaluator steps spent in syntactic checks while rewriting one instance.
pub fn syntactic_cost(world: &World, n: usize, style: Style) -> Result<(Term, u64), RwError> {
    let (t, sigma) = power2_instance(n, style);
    let ctx = match style {
        Style::Redundant => EquivCtx::iff(),
        Style::Binder => EquivCtx::equal(),
    };
    let config = Config {
        fuel: 10_000_000,
        ..Config::default()
    };
    let (out, st) = rewrite_term(world, &t, &sigma, &ctx, config)?;
    let out = match out {
        RewriteOutcome::Done(o, _) => o,
        RewriteOutcome::Aborted => t,
    };
    Ok((out, st.stats.syntactic_steps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Power2Row {
    pub n: usize,
    pub redundant: u64,
    pub binder: u64,
}

pub fn bench_power2(ns: &[usize]) -> Result<Vec<Power2Row>, RwError> {
    let red = power2_world(Style::Redundant);
    let bin = power2_world(Style::Binder);
    ns.iter()
        .map(|&n| {
            Ok(Power2Row {
                n,
                redundant: syntactic_cost(&red, n, Style::Redundant)?.1,
                binder: syntactic_cost(&bin, n, Style::Binder)?.1,
            })
        })
        .collect()
}

/// Cost ratios of consecutive rows, as (n, 2n, redundant, binder).
pub fn ratios(rows: &[Power2Row]) -> Vec<(usize, usize, f64, f64)> {
    rows.windows(2)
        .map(|w| {
            (
                w[0].n,
                w[1].n,
                w[1].redundant as f64 / w[0].redundant as f64,
                w[1].binder as f64 / w[0].binder as f64,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    #[test]
    fn both_styles_prove_power2p() {
        let (out, _) = syntactic_cost(&power2_world(Style::Redundant), 3, Style::Redundant).unwrap();
        assert_eq!(out, Term::t());
        let (out, _) = syntactic_cost(&power2_world(Style::Binder), 3, Style::Binder).unwrap();
        assert_eq!(out, parse_term("(power2p (binary-* (expt2 '0) (binary-* (expt2 '1) (binary-* (expt2 '2) (expt2 '3)))))").unwrap());
    }

    #[test]
    fn single_product_visits_nodes() {
        let rows = bench_power2(&[1]).unwrap();
        assert!(rows[0].redundant >= 1 && rows[0].binder >= 1);
    }

    #[test]
    fn quadratic_versus_linear() {
        let rows = bench_power2(&[4, 8, 16, 32]).unwrap();
        for (a, b, red, bin) in ratios(&rows) {
            assert!((3.0..=5.0).contains(&red), "{a}->{b}: redundant {red}");
            assert!((1.5..=2.5).contains(&bin), "{a}->{b}: binder {bin}");
        }
    }
}
