//! S-expression reader and translation of s-expressions into terms.
//!
//! Besides the core syntax (symbols, integers, `'datum`, calls and lambda
//! applications) the translator expands the usual Lisp conveniences into
//! core terms: `and`, `or`, `cond`, `let`, `mv-let`, `list`, `+`, `-`, `*`,
//! and wraps the argument of `syntax-interp` in a quotation.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::term::{check_lambda, reify_term, Term, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

impl SyntaxError {
    fn new(pos: Pos, msg: impl Into<String>) -> Self {
        SyntaxError { pos, msg: msg.into() }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, col: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<(Value, Pos)>, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        let v = match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                let mut tail = Value::Nil;
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return Err(SyntaxError::new(start, "unterminated list")),
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some('.') => {
                            let dot = self.pos;
                            let atom = self.read_atom_text();
                            if atom == "." {
                                if items.is_empty() {
                                    return Err(SyntaxError::new(dot, "dot at list start"));
                                }
                                tail = self
                                    .read()?
                                    .ok_or_else(|| SyntaxError::new(dot, "missing dotted tail"))?
                                    .0;
                                self.skip_ws();
                                if self.bump() != Some(')') {
                                    return Err(SyntaxError::new(dot, "expected ) after dotted tail"));
                                }
                                break;
                            }
                            items.push(parse_atom(&atom, dot)?);
                        }
                        Some(_) => {
                            let (v, _) = self.read()?.expect("peeked a char");
                            items.push(v);
                        }
                    }
                }
                items
                    .into_iter()
                    .rev()
                    .fold(tail, |t, h| Value::cons(h, t))
            }
            ')' => return Err(SyntaxError::new(start, "unexpected )")),
            '\'' => {
                self.bump();
                let (v, _) = self
                    .read()?
                    .ok_or_else(|| SyntaxError::new(start, "quote without datum"))?;
                Value::list([Value::sym("quote"), v])
            }
            _ => {
                let atom = self.read_atom_text();
                parse_atom(&atom, start)?
            }
        };
        Ok(Some((v, start)))
    }

    fn read_atom_text(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' || c == '\'' || c == ';' {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }
}

fn parse_atom(text: &str, pos: Pos) -> Result<Value, SyntaxError> {
    if text.is_empty() {
        return Err(SyntaxError::new(pos, "empty atom"));
    }
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let i: BigInt = text
            .parse()
            .map_err(|_| SyntaxError::new(pos, format!("bad integer {text}")))?;
        return Ok(Value::Integer(i));
    }
    Ok(Value::sym(&text.to_ascii_lowercase()))
}

/// Reads every top-level datum of `text` with its starting position.
pub fn read_all(text: &str) -> Result<Vec<(Value, Pos)>, SyntaxError> {
    let mut r = Reader::new(text);
    let mut out = Vec::new();
    while let Some(item) = r.read()? {
        out.push(item);
    }
    Ok(out)
}

/// Reads exactly one datum.
pub fn read_one(text: &str) -> Result<Value, SyntaxError> {
    let mut items = read_all(text)?;
    match items.len() {
        1 => Ok(items.pop().unwrap().0),
        0 => Err(SyntaxError::new(Pos { line: 1, col: 1 }, "empty input")),
        _ => Err(SyntaxError::new(items[1].1, "trailing input")),
    }
}

/// Parses term text.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let v = read_one(text)?;
    translate(&v).map_err(|msg| SyntaxError::new(Pos { line: 1, col: 1 }, msg))
}

fn list_of(v: &Value, what: &str) -> Result<Vec<Value>, String> {
    v.to_vec().ok_or_else(|| format!("{what} must be a proper list: {v}"))
}

fn symbol_of(v: &Value, what: &str) -> Result<Arc<str>, String> {
    match v {
        Value::Symbol(s) if !s.starts_with(':') => Ok(s.clone()),
        _ => Err(format!("{what} must be a variable symbol: {v}")),
    }
}

fn mk_if(c: Term, a: Term, b: Term) -> Term {
    Term::app("if", vec![c, a, b])
}

/// Wraps `body` in a lambda binding `formals` to `actuals`, adding self-pairs
/// for every other free variable of the body.
fn let_lambda(formals: Vec<Arc<str>>, actuals: Vec<Term>, body: Term) -> Result<Term, String> {
    let mut formals = formals;
    let mut actuals = actuals;
    for v in body.free_vars() {
        if !formals.contains(&v) {
            formals.push(v.clone());
            actuals.push(Term::Var(v));
        }
    }
    check_lambda(&formals, &body, &actuals)?;
    Ok(Term::Lam {
        formals,
        body: Box::new(body),
        actuals,
    })
}

/// Translates an s-expression into a term.
pub fn translate(v: &Value) -> Result<Term, String> {
    match v {
        Value::Nil | Value::True | Value::Integer(_) => Ok(Term::Quote(v.clone())),
        Value::Symbol(s) => {
            if s.starts_with(':') {
                Ok(Term::Quote(v.clone()))
            } else {
                Ok(Term::Var(s.clone()))
            }
        }
        Value::Pair(head, tail) => {
            let args = list_of(tail, "argument list")?;
            match &**head {
                Value::Symbol(f) => translate_call(f, &args),
                Value::Pair(..) => {
                    let lam = list_of(head, "lambda")?;
                    let [kw, formals, body] = lam.as_slice() else {
                        return Err(format!("malformed lambda {head}"));
                    };
                    if kw.as_symbol() != Some("lambda") {
                        return Err(format!("bad function position {head}"));
                    }
                    let formals = list_of(formals, "lambda formals")?
                        .iter()
                        .map(|f| symbol_of(f, "lambda formal"))
                        .collect::<Result<Vec<_>, _>>()?;
                    let body = translate(body)?;
                    let actuals = args.iter().map(translate).collect::<Result<Vec<_>, _>>()?;
                    check_lambda(&formals, &body, &actuals)?;
                    Ok(Term::Lam {
                        formals,
                        body: Box::new(body),
                        actuals,
                    })
                }
                other => Err(format!("bad function position {other}")),
            }
        }
    }
}

fn translate_all(args: &[Value]) -> Result<Vec<Term>, String> {
    args.iter().map(translate).collect()
}

fn translate_call(f: &str, args: &[Value]) -> Result<Term, String> {
    match f {
        "quote" => match args {
            [x] => Ok(Term::Quote(x.clone())),
            _ => Err("quote takes one datum".into()),
        },
        "and" => {
            let mut ts = translate_all(args)?;
            let Some(last) = ts.pop() else {
                return Ok(Term::t());
            };
            Ok(ts
                .into_iter()
                .rev()
                .fold(last, |acc, t| mk_if(t, acc, Term::nil())))
        }
        "or" => {
            let mut ts = translate_all(args)?;
            let Some(last) = ts.pop() else {
                return Ok(Term::nil());
            };
            Ok(ts
                .into_iter()
                .rev()
                .fold(last, |acc, t| mk_if(t.clone(), t, acc)))
        }
        "cond" => {
            let mut acc = Term::nil();
            for clause in args.iter().rev() {
                let parts = list_of(clause, "cond clause")?;
                acc = match parts.as_slice() {
                    [test, val] => {
                        let test = translate(test)?;
                        let val = translate(val)?;
                        if test == Term::t() {
                            val
                        } else {
                            mk_if(test, val, acc)
                        }
                    }
                    _ => return Err(format!("cond clause must have two elements: {clause}")),
                };
            }
            Ok(acc)
        }
        "list" => Ok(translate_all(args)?
            .into_iter()
            .rev()
            .fold(Term::nil(), |tail, h| Term::app("cons", vec![h, tail]))),
        "mv" => Ok(Term::app("mv", translate_all(args)?)),
        "+" | "*" => {
            let op = if f == "+" { "binary-+" } else { "binary-*" };
            let unit = if f == "+" { 0 } else { 1 };
            let mut ts = translate_all(args)?;
            let Some(last) = ts.pop() else {
                return Ok(Term::quote(Value::int(unit)));
            };
            Ok(ts
                .into_iter()
                .rev()
                .fold(last, |acc, t| Term::app(op, vec![t, acc])))
        }
        "-" => match translate_all(args)?.as_slice() {
            [x] => Ok(Term::app("unary--", vec![x.clone()])),
            [x, y] => Ok(Term::app(
                "binary-+",
                vec![x.clone(), Term::app("unary--", vec![y.clone()])],
            )),
            _ => Err("- takes one or two arguments".into()),
        },
        "let" => {
            let [bindings, body] = args else {
                return Err("let takes bindings and one body".into());
            };
            let mut formals = Vec::new();
            let mut actuals = Vec::new();
            for b in list_of(bindings, "let bindings")? {
                let pair = list_of(&b, "let binding")?;
                let [var, val] = pair.as_slice() else {
                    return Err(format!("bad let binding {b}"));
                };
                formals.push(symbol_of(var, "let variable")?);
                actuals.push(translate(val)?);
            }
            let_lambda(formals, actuals, translate(body)?)
        }
        "mv-let" => {
            let [vars, val, body] = args else {
                return Err("mv-let takes variables, a value form and one body".into());
            };
            let vars = list_of(vars, "mv-let variables")?
                .iter()
                .map(|v| symbol_of(v, "mv-let variable"))
                .collect::<Result<Vec<_>, _>>()?;
            let mv: Arc<str> = Arc::from("mv");
            if vars.contains(&mv) {
                return Err("mv-let cannot bind the variable mv".into());
            }
            let inner_actuals = (0..vars.len())
                .map(|i| {
                    Term::app(
                        "mv-nth",
                        vec![Term::quote(Value::int(i as i64)), Term::Var(mv.clone())],
                    )
                })
                .collect();
            let inner = let_lambda(vars, inner_actuals, translate(body)?)?;
            let_lambda(vec![mv], vec![translate(val)?], inner)
        }
        "syntax-interp" => match args {
            [x] => {
                let inner = translate(x)?;
                let quoted = match inner {
                    Term::Quote(_) => inner,
                    other => Term::Quote(reify_term(&other)),
                };
                Ok(Term::app("syntax-interp", vec![quoted]))
            }
            _ => Err("syntax-interp takes one argument".into()),
        },
        "lambda" => Err("lambda is only allowed in function position".into()),
        _ => Ok(Term::app(f, translate_all(args)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_basic_terms() {
        assert_eq!(parse_term("'7").unwrap(), Term::quote(Value::int(7)));
        assert_eq!(parse_term("7").unwrap(), Term::quote(Value::int(7)));
        assert_eq!(parse_term("t").unwrap(), Term::t());
        assert_eq!(parse_term("x").unwrap(), Term::var("x"));
        assert_eq!(
            parse_term("(cons x 'nil)").unwrap(),
            Term::app("cons", vec![Term::var("x"), Term::nil()])
        );
        assert_eq!(
            parse_term("'(1 2 . 3)").unwrap(),
            Term::quote(Value::cons(
                Value::int(1),
                Value::cons(Value::int(2), Value::int(3))
            ))
        );
    }

    #[test]
    fn reads_lambda() {
        let t = parse_term("((lambda (a b) (f a b)) a (b-expr))").unwrap();
        let Term::Lam { formals, actuals, .. } = &t else {
            panic!("expected lambda")
        };
        assert_eq!(formals.len(), 2);
        assert_eq!(actuals[0], Term::var("a"));
        assert!(parse_term("((lambda (a) (f a b)) x)").is_err());
        assert!(parse_term("((lambda (a a) a) x y)").is_err());
    }

    #[test]
    fn let_adds_self_pairs() {
        let t = parse_term("(let ((b (b-expr))) (f a b))").unwrap();
        assert_eq!(t.to_string(), "((lambda (b a) (f a b)) (b-expr) a)");
    }

    #[test]
    fn mv_let_expands_through_mv_nth() {
        let t = parse_term("(mv-let (p q) (g x) (cons p (cons q y)))").unwrap();
        assert_eq!(
            t.to_string(),
            "((lambda (mv y) ((lambda (p q y) (cons p (cons q y))) (mv-nth '0 mv) (mv-nth '1 mv) y)) (g x) y)"
        );
    }

    #[test]
    fn boolean_sugar() {
        assert_eq!(parse_term("(and a b)").unwrap().to_string(), "(if a b 'nil)");
        assert_eq!(parse_term("(or a b)").unwrap().to_string(), "(if a a b)");
        assert_eq!(
            parse_term("(cond (a '1) (b '2) (t '3))").unwrap().to_string(),
            "(if a '1 (if b '2 '3))"
        );
    }

    #[test]
    fn syntax_interp_quotes_its_argument() {
        assert_eq!(
            parse_term("(syntax-interp (f x))").unwrap().to_string(),
            "(syntax-interp '(f x))"
        );
        assert_eq!(
            parse_term("(syntax-interp '(quote 1))").unwrap().to_string(),
            "(syntax-interp ''1)"
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = read_all("(a\n  (b").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 3 });
        let e = read_all("x\n )").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 2 });
    }

    #[test]
    fn printed_terms_reparse() {
        for src in [
            "(f '(1 . 2) x 'sym '-4)",
            "((lambda (a) (cons a 'nil)) '3)",
            "(if (consp x) (car x) 'nil)",
        ] {
            let t = parse_term(src).unwrap();
            assert_eq!(parse_term(&t.to_string()).unwrap(), t);
        }
    }
}
