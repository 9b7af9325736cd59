use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rw_core::bench::{bench_power2, ratios};
use rw_core::oracle::{
    check_lambda_differential, detect_mutation, run_contract_suite, shrink, with_big_stack, LambdaVerdict, Params,
    Verdict,
};
use rw_core::rewriter::format_trace;
use rw_core::rules::{corpus, corpus_world, load_world, LoadError};
use rw_core::syntax::parse_term;
use rw_core::term::Bindings;
use rw_core::world::{EquivCtx, World};
use rw_core::{rewrite_term, Config, Mutation, RewriteOutcome, RwError};

#[derive(Default)]
struct Report {
    failed: Vec<String>,
}

impl Report {
    fn record(&mut self, n: usize, ok: bool, what: String) {
        println!("{} [{n}] {what}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(what);
        }
    }
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn transcript(world: &World, cases: &[(&str, EquivCtx)]) -> String {
    let mut s = String::new();
    for (src, ctx) in cases {
        let t = parse_term(src).unwrap();
        let config = Config {
            trace: true,
            ..Config::default()
        };
        let ctx_names: Vec<&str> = ctx.members().collect();
        writeln!(s, "# {src} under ({})", ctx_names.join(" ")).unwrap();
        match rewrite_term(world, &t, &Bindings::new(), ctx, config) {
            Ok((out, st)) => {
                s.push_str(&format_trace(&st.trace));
                match out {
                    RewriteOutcome::Done(o, sigma) => writeln!(s, "=> {o}\nbindings {sigma}").unwrap(),
                    RewriteOutcome::Aborted => writeln!(s, "=> aborted").unwrap(),
                }
            }
            Err(e) => writeln!(s, "error {e}").unwrap(),
        }
    }
    s
}

fn golden_cases() -> Vec<(&'static str, Vec<(&'static str, EquivCtx)>)> {
    vec![
        (
            "fgl-equal",
            vec![("(equal '3 '3)", EquivCtx::iff()), ("(equal a b)", EquivCtx::iff())],
        ),
        (
            "syntactically-true",
            vec![
                ("(syntactically-true v (consp (cons a b)))", EquivCtx::equal()),
                ("(syntactically-true v (consp a))", EquivCtx::equal()),
            ],
        ),
        (
            "split-list-by-membership",
            vec![("(split-list-by-membership v '(1 2) '(2))", EquivCtx::equal())],
        ),
        (
            "integer-length-bound",
            vec![
                ("(integer-length-bound v '5)", EquivCtx::equal()),
                ("(integer-length-bound v '-9)", EquivCtx::equal()),
                ("(integer-length-bound v '0)", EquivCtx::equal()),
            ],
        ),
    ]
}

fn golden_traces() -> bool {
    let w = corpus_world();
    let bless = std::env::var_os("RW_BLESS").is_some();
    let mut ok = true;
    for (name, cases) in golden_cases() {
        let got = transcript(&w, &cases);
        let path = golden_dir().join(format!("{name}.txt"));
        if bless {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &got).unwrap();
        }
        let want = std::fs::read_to_string(&path).unwrap_or_default();
        if got != want {
            ok = false;
            println!("golden trace {name} differs\n--- expected\n{want}--- got\n{got}");
        }
    }
    ok
}

fn rewrite(w: &World, src: &str) -> (String, Bindings) {
    let t = parse_term(src).unwrap();
    match rewrite_term(w, &t, &Bindings::new(), &EquivCtx::equal(), Config::default()).unwrap().0 {
        RewriteOutcome::Done(o, s) => (o.to_string(), s),
        RewriteOutcome::Aborted => ("aborted".into(), Bindings::new()),
    }
}

fn corpus_values() -> bool {
    let w = corpus_world();
    let iff = |src: &str| match rewrite_term(&w, &parse_term(src).unwrap(), &Bindings::new(), &EquivCtx::iff(), Config::default()) {
        Ok((RewriteOutcome::Done(o, _), _)) => o.to_string(),
        other => format!("{other:?}"),
    };
    let bound = |s: &Bindings, v: &str| s.lookup(v).map(|t| t.to_string()).unwrap_or_default();
    let (t_out, t_sigma) = rewrite(&w, "(syntactically-true v (consp (cons a b)))");
    let (f_out, f_sigma) = rewrite(&w, "(syntactically-true v (consp a))");
    let (split, split_sigma) = rewrite(&w, "(split-list-by-membership v '(1 2) '(2))");
    let mv = rewrite(&w, "(mv '(2) '(1))").0;
    iff("(equal '3 '3)") == "'t"
        && iff("(equal a b)") == "(equal a b)"
        && t_out == "'t"
        && bound(&t_sigma, "v") == "'t"
        && f_out == "'nil"
        && bound(&f_sigma, "v") == "'nil"
        && split == mv
        && bound(&split_sigma, "v") == split
        && rewrite(&w, "(integer-length-bound v '5)").0 == "'3"
        && rewrite(&w, "(integer-length-bound v '-9)").0 == "'4"
        && rewrite(&w, "(integer-length-bound v '0)").0 == "'0"
}

fn special_form_guards() -> (usize, usize, bool) {
    let w = corpus_world();
    let forms = ["(syntax-interp x)", "(fgl-interp-obj x)", "(assume (consp x) x)"];
    let wrappers = ["{}", "(car {})", "(cons a {})", "(if {} a b)", "(not {})", "((lambda (x) {}) y)", "(fgl-prog2 a {})", "(equal {} b)"];
    let (mut total, mut raised) = (0, 0);
    for f in forms {
        for wrap in wrappers {
            let t = parse_term(&wrap.replace("{}", f)).unwrap();
            for ctx in [EquivCtx::equal(), EquivCtx::iff()] {
                total += 1;
                if matches!(
                    rewrite_term(&w, &t, &Bindings::new(), &ctx, Config::default()),
                    Err(RwError::UnsoundSpecialForm(_))
                ) {
                    raised += 1;
                }
            }
        }
    }
    let bad_rules = [
        "(defbinder-rule r1 :fn bind-var :var var :args (x) :form (cons var x) :hyp-equiv equal :equiv equal)",
        "(defbinder-rule r2 :fn bind-var :var var :args (x) :form x :hyps ((consp var)) :hyp-equiv equal :equiv equal)",
        "(defbinder-rule r3 :fn bind-var :var var :args (var) :form 't :hyp-equiv equal :equiv equal)",
    ];
    let rejected = bad_rules
        .iter()
        .all(|r| matches!(load_world(&format!("{}\n{r}", corpus())), Err(LoadError::Binder { .. })));
    (total, raised, rejected)
}

fn main() {
    let failed = with_big_stack(run);
    if !failed.is_empty() {
        eprintln!("acceptance failed: {failed:?}");
        std::process::exit(1);
    }
}

fn run() -> Vec<String> {
    let w = corpus_world();
    let mut r = Report::default();

    let params = Params::default();
    let start = Instant::now();
    let mut extension_violations = 0;
    let s = run_contract_suite(&w, 0..10_000, &params, false, |rec| {
        if let Verdict::Fail(c) = &rec.verdict {
            if c.reason.contains("does not extend") {
                extension_violations += 1;
            }
        }
    });
    let elapsed = start.elapsed();
    if let Some((seed, c)) = &s.first_failure {
        println!("first failure at seed {seed}: {}", shrink(&w, c, params.config, params.eval_fuel));
    }
    r.record(
        1,
        s.ok() && s.cases == 10_000 && elapsed < Duration::from_secs(300),
        format!(
            "contract: {} cases, {} fail, {:.1}% inconclusive, {:.1}s",
            s.cases,
            s.fail,
            100.0 * s.inconclusive_ratio(),
            elapsed.as_secs_f64()
        ),
    );
    r.record(
        2,
        extension_violations == 0 && cfg!(debug_assertions),
        format!("extension monotonicity: {extension_violations} violations, debug assertions on: {}", cfg!(debug_assertions)),
    );

    let mismatches: Vec<u64> = (0..5000u64)
        .filter(|&seed| matches!(check_lambda_differential(&w, seed, 8), LambdaVerdict::Mismatch { .. }))
        .collect();
    r.record(
        3,
        mismatches.is_empty(),
        format!("lambda differential: 5000 nests, {} mismatches", mismatches.len()),
    );

    let golden = golden_traces();
    let values = corpus_values();
    r.record(4, golden && values, format!("corpus traces: golden {golden}, values {values}"));

    let rows = bench_power2(&[4, 8, 16, 32]).unwrap();
    let rs = ratios(&rows);
    let bench_ok = rs
        .iter()
        .all(|&(_, _, red, bin)| (3.0..=5.0).contains(&red) && (1.5..=2.5).contains(&bin));
    let shown: Vec<String> = rs.iter().map(|(a, b, red, bin)| format!("{a}->{b} {red:.2}/{bin:.2}")).collect();
    r.record(5, bench_ok, format!("power2p ratios redundant/binder: {}", shown.join(", ")));

    let mut caught = Vec::new();
    for m in Mutation::ALL {
        match detect_mutation(&w, m, 10_000, &params) {
            Some((n, _)) => caught.push(format!("{}@{n}", m.name())),
            None => println!("mutation {} survived", m.name()),
        }
    }
    r.record(
        6,
        caught.len() == Mutation::ALL.len(),
        format!("mutations caught {}/{}: {}", caught.len(), Mutation::ALL.len(), caught.join(" ")),
    );

    let (total, raised, rejected) = special_form_guards();
    r.record(
        7,
        total == raised && rejected,
        format!("soundness guards: {raised}/{total} special forms refused, bad binder rules rejected: {rejected}"),
    );

    r.failed
}
