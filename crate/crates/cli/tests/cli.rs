use std::process::{Command, Output};

fn rw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rw"))
        .args(args)
        .env_remove("RW_CORPUS")
        .output()
        .expect("run rw")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp_file(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("rw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn rewrite_equal_of_constants() {
    let o = rw(&["rewrite", "corpus", "--term", "(equal '3 '3)", "--equiv", "iff"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("'t"));
}

#[test]
fn rewrite_quote() {
    let o = rw(&["rewrite", "corpus", "--term", "'7"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "'7\n()\n");
}

#[test]
fn unknown_function_fails() {
    let o = rw(&["rewrite", "corpus", "--term", "(undefined-fn)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown function undefined-fn"));
}

#[test]
fn parse_errors_carry_positions() {
    let f = tmp_file("broken.lisp", "\n  (defrule oops :lhs (car x)");
    let o = rw(&["rewrite", "corpus", &f, "--term", "'1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.lisp:2:3"));
}

#[test]
fn trace_shows_abort() {
    let o = rw(&["trace", "--term", "(equal a b)"]);
    let s = stdout(&o);
    assert!(s.contains("fgl-equal: abort-rewrite -> rule failed"), "{s}");
    assert!(s.ends_with("=> (equal a b)\n"));
}

#[test]
fn trace_tries_newest_rule_first() {
    let o = rw(&["trace", "--term", "(syntactically-true v 'nil)", "--equiv", "equal"]);
    let s = stdout(&o);
    let t = s.find("try syntactically-true-binder-rewrite-true").unwrap();
    let f = s.find("try syntactically-true-binder-rewrite-false").unwrap();
    assert!(t < f, "{s}");
}

#[test]
fn trace_of_quote_is_empty() {
    assert_eq!(stdout(&rw(&["trace", "--term", "'3"])), "=> '3\n");
}

#[test]
fn trace_file_is_written() {
    let f = tmp_file("trace.txt", "");
    let o = rw(&["rewrite", "--term", "(equal a b)", "--trace-file", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&f).unwrap().contains("try fgl-equal"));
}

#[test]
fn check_corpus_passes() {
    let o = rw(&["check", "corpus", "--cases", "200", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fail          0"));
}

#[test]
fn check_output_is_reproducible() {
    let a = tmp_file("a.tsv", "");
    let b = tmp_file("b.tsv", "");
    rw(&["check", "--cases", "100", "--seed", "9", "--trace-file", &a]);
    rw(&["check", "--cases", "100", "--seed", "9", "--trace-file", &b]);
    let a = std::fs::read_to_string(a).unwrap();
    assert_eq!(a.lines().count(), 100);
    assert_eq!(a, std::fs::read_to_string(b).unwrap());
}

#[test]
fn check_finds_planted_bug() {
    let f = tmp_file("bad.lisp", "(defrule bad :lhs (equal x x) :rhs nil)");
    let o = rw(&["check", "corpus", &f, "--cases", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(counterexample"));
}

#[test]
fn check_zero_cases_warns() {
    let o = rw(&["check", "--cases", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn corpus_env_override() {
    let f = tmp_file("tiny.lisp", "(defun twice (x) (binary-+ x x))");
    let o = Command::new(env!("CARGO_BIN_EXE_rw"))
        .args(["rewrite", "corpus", "--term", "(twice '4)", "--equiv", "equal"])
        .env("RW_CORPUS", &f)
        .output()
        .unwrap();
    assert_eq!(stdout(&o).lines().next(), Some("'8"));
}

#[test]
fn bench_table() {
    let o = rw(&["bench-power2", "--n", "1,4,8"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("redundant x4.00"), "{s}");
}
