//! Scalar expression language used for model formulas.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr  := term  (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | '+' unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2 = -4` and
//! `2^-1 = 0.5`. Identifiers are bound at evaluation time; `pi` is the only named constant.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Ln,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Expr {
    Num(f64),
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error in {0}")]
    Domain(&'static str),
}

/// Variable lookup for [`Expr::eval`].
pub trait Bindings {
    fn get(&self, name: &str) -> Option<f64>;
}

impl Bindings for BTreeMap<String, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        BTreeMap::get(self, name).copied()
    }
}

impl Bindings for BTreeMap<&str, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        BTreeMap::get(self, name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn get(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn get(&self, name: &str) -> Option<f64> {
        Bindings::get(self.as_slice(), name)
    }
}

struct Override<'a, B: ?Sized> {
    inner: &'a B,
    name: &'a str,
    value: f64,
}

impl<B: Bindings + ?Sized> Bindings for Override<'_, B> {
    fn get(&self, name: &str) -> Option<f64> {
        if name == self.name {
            Some(self.value)
        } else {
            self.inner.get(name)
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some((off, _)) => Err(ParseError {
            offset: off,
            message: "unexpected trailing input".to_string(),
        }),
    }
}

pub fn eval_expr<B: Bindings + ?Sized>(e: &Expr, bindings: &B) -> Result<f64, EvalError> {
    e.eval(bindings)
}

/// Central-difference derivative of `e` in `var` at `point`.
pub fn diff_expr_numeric<B: Bindings + ?Sized>(
    e: &Expr,
    var: &str,
    point: &B,
) -> Result<f64, EvalError> {
    let p = point
        .get(var)
        .ok_or_else(|| EvalError::Unbound(var.to_string()))?;
    central_difference(
        |v| {
            e.eval(&Override {
                inner: point,
                name: var,
                value: v,
            })
        },
        p,
    )
}

/// Derivative of a scalar function at `p` by central differences.
///
/// Step `h = ε^{1/3}·max(1, |p|)`, rounded so that `p ± h` is exact. When one side of the
/// stencil fails to evaluate the second-order one-sided formula on the other side is used.
pub fn central_difference<E>(mut f: impl FnMut(f64) -> Result<f64, E>, p: f64) -> Result<f64, E> {
    let scale = if libm::fabs(p) > 1.0 {
        libm::fabs(p)
    } else {
        1.0
    };
    let h0 = libm::cbrt(f64::EPSILON) * scale;
    let h = (p + h0) - p;
    match (f(p + h), f(p - h)) {
        (Ok(fp), Ok(fm)) => Ok((fp - fm) / (2.0 * h)),
        (Ok(fp), Err(_)) => {
            let f0 = f(p)?;
            let f2 = f(p + 2.0 * h)?;
            Ok((-3.0 * f0 + 4.0 * fp - f2) / (2.0 * h))
        }
        (Err(_), Ok(fm)) => {
            let f0 = f(p)?;
            let f2 = f(p - 2.0 * h)?;
            Ok((3.0 * f0 - 4.0 * fm + f2) / (2.0 * h))
        }
        (Err(e), Err(_)) => Err(e),
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn eval<B: Bindings + ?Sized>(&self, b: &B) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(core::f64::consts::PI),
            Expr::Var(name) => b.get(name).ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Neg(a) => Ok(-a.eval(b)?),
            Expr::Call(f, a) => apply_func(*f, a.eval(b)?),
            Expr::Binary(op, l, r) => apply_bin(*op, l.eval(b)?, r.eval(b)?),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) | Expr::Pi => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Replaces every occurrence of variable `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Var(n) if n == name => with.clone(),
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(name, with))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(name, with))),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.substitute(name, with)),
                Box::new(r.substitute(name, with)),
            ),
        }
    }

    /// Resolves variables to slot indices so that evaluation needs no name lookups.
    pub fn bind(&self, resolve: &dyn Fn(&str) -> Option<usize>) -> Result<BoundExpr, EvalError> {
        Ok(BoundExpr {
            root: self.bind_node(resolve)?,
        })
    }

    fn bind_node(&self, resolve: &dyn Fn(&str) -> Option<usize>) -> Result<Node, EvalError> {
        Ok(match self {
            Expr::Num(v) => Node::Num(*v),
            Expr::Pi => Node::Num(core::f64::consts::PI),
            Expr::Var(n) => Node::Slot(resolve(n).ok_or_else(|| EvalError::Unbound(n.clone()))?),
            Expr::Neg(a) => Node::Neg(Box::new(a.bind_node(resolve)?)),
            Expr::Call(f, a) => Node::Call(*f, Box::new(a.bind_node(resolve)?)),
            Expr::Binary(op, l, r) => Node::Binary(
                *op,
                Box::new(l.bind_node(resolve)?),
                Box::new(r.bind_node(resolve)?),
            ),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn apply_func(f: Func, a: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Sin => libm::sin(a),
        Func::Cos => libm::cos(a),
        Func::Exp => libm::exp(a),
        Func::Abs => libm::fabs(a),
        Func::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::Domain("sqrt"));
            }
            libm::sqrt(a)
        }
        Func::Ln => {
            if a <= 0.0 {
                return Err(EvalError::Domain("ln"));
            }
            libm::log(a)
        }
    })
}

fn apply_bin(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a / b
        }
        BinOp::Pow => {
            if a == 0.0 && b < 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            let v = libm::pow(a, b);
            if v.is_nan() && !a.is_nan() && !b.is_nan() {
                return Err(EvalError::Domain("^"));
            }
            v
        }
        BinOp::Min => a.min(b),
        BinOp::Max => a.max(b),
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op @ (BinOp::Min | BinOp::Max), l, r) => {
                let name = if *op == BinOp::Min { "min" } else { "max" };
                write!(f, "{name}({l}, {r})")
            }
            Expr::Binary(BinOp::Pow, l, r) => {
                wrap(f, l, l.precedence() <= 4)?;
                f.write_str("^")?;
                wrap(f, r, r.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let prec = self.precedence();
                wrap(f, l, l.precedence() < prec)?;
                f.write_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    _ => "/",
                })?;
                wrap(f, r, r.precedence() <= prec)
            }
        }
    }
}

/// An [`Expr`] whose variables have been resolved to positions in a value slice.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
}

impl BoundExpr {
    /// Evaluates with `slots[i]` as the value of the variable bound to index `i`.
    pub fn eval(&self, slots: &[f64]) -> Result<f64, EvalError> {
        self.root.eval(slots)
    }
}

impl Node {
    fn eval(&self, s: &[f64]) -> Result<f64, EvalError> {
        match self {
            Node::Num(v) => Ok(*v),
            Node::Slot(i) => Ok(s[*i]),
            Node::Neg(a) => Ok(-a.eval(s)?),
            Node::Call(f, a) => apply_func(*f, a.eval(s)?),
            Node::Binary(op, l, r) => apply_bin(*op, l.eval(s)?, r.eval(s)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 = text[start..i].parse().map_err(|_| ParseError {
                offset: start,
                message: alloc::format!("malformed number `{}`", &text[start..i]),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if b"+-*/^(),".contains(&c) {
            out.push((i, Tok::Op(c as char)));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: i,
                message: alloc::format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.pos).map(|(o, t)| (*o, t))
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some((_, Tok::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |(o, _)| o)
    }

    fn error<T>(&self, message: &str) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            message: message.to_string(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&alloc::format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some((offset, tok)) = self.peek() else {
            return self.error("unexpected end of input");
        };
        match tok.clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let mut args = alloc::vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    return call(&name, args, offset);
                }
                Ok(if name == "pi" {
                    Expr::Pi
                } else {
                    Expr::Var(name)
                })
            }
            Tok::Op(c) => self.error(&alloc::format!("unexpected `{c}`")),
        }
    }
}

fn call(name: &str, mut args: Vec<Expr>, offset: usize) -> Result<Expr, ParseError> {
    let func = match name {
        "sin" => Some(Func::Sin),
        "cos" => Some(Func::Cos),
        "exp" => Some(Func::Exp),
        "abs" => Some(Func::Abs),
        "sqrt" => Some(Func::Sqrt),
        "ln" => Some(Func::Ln),
        "min" | "max" => None,
        _ => {
            return Err(ParseError {
                offset,
                message: alloc::format!("unknown function `{name}`"),
            });
        }
    };
    let arity = if func.is_some() { 1 } else { 2 };
    if args.len() != arity {
        return Err(ParseError {
            offset,
            message: alloc::format!("`{name}` takes {arity} argument(s), got {}", args.len()),
        });
    }
    Ok(match func {
        Some(f) => Expr::Call(f, Box::new(args.pop().unwrap())),
        None => {
            let r = args.pop().unwrap();
            let l = args.pop().unwrap();
            let op = if name == "min" {
                BinOp::Min
            } else {
                BinOp::Max
            };
            Expr::binary(op, l, r)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, b: &[(&str, f64)]) -> f64 {
        parse_expr(text).unwrap().eval(b).unwrap()
    }

    #[test]
    fn forcing_term_at_zero() {
        assert_eq!(ev("2 - (4/5)*sin(2*pi*t/5)", &[("t", 0.0)]), 2.0);
    }

    #[test]
    fn hill_feedback() {
        assert_eq!(ev("2/(1+u)", &[("u", 0.0)]), 2.0);
        let v = ev("2/(1+u)", &[("u", 5.0 / 6.0)]);
        assert!((v - 12.0 / 11.0).abs() < 1e-15);
        assert_eq!(ev("t", &[("t", 3.5)]), 3.5);
    }

    #[test]
    fn unbalanced_parenthesis_offset() {
        let err = parse_expr("2*(1+").unwrap_err();
        assert_eq!(err.offset, 5);
    }

    #[test]
    fn other_syntax_errors() {
        assert_eq!(parse_expr("1 + * 2").unwrap_err().offset, 4);
        assert_eq!(parse_expr("1 2").unwrap_err().offset, 2);
        assert_eq!(parse_expr("a $ b").unwrap_err().offset, 2);
        assert_eq!(parse_expr("foo(1)").unwrap_err().offset, 0);
        assert_eq!(parse_expr("min(1)").unwrap_err().offset, 0);
        assert_eq!(parse_expr("").unwrap_err().offset, 0);
        assert_eq!(parse_expr("(1))").unwrap_err().offset, 3);
    }

    #[test]
    fn unknown_identifier_is_deferred() {
        let e = parse_expr("zeta + 1").unwrap();
        assert_eq!(
            e.eval(&[("t", 0.0)]),
            Err(EvalError::Unbound("zeta".into()))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-2^2", &[]), -4.0);
        assert_eq!(ev("2^3^2", &[]), 512.0);
        assert_eq!(ev("2^-1", &[]), 0.5);
        assert_eq!(ev("8/4/2", &[]), 1.0);
        assert_eq!(ev("8-4-2", &[]), 2.0);
        assert_eq!(ev("1+2*3", &[]), 7.0);
        assert_eq!(ev("2*-3", &[]), -6.0);
        assert_eq!(ev("min(3, 1+1) + max(1, 2)", &[]), 4.0);
        assert_eq!(ev("1.5e2 + .5", &[]), 150.5);
        assert_eq!(ev("abs(-3) + exp(0) + cos(0)", &[]), 5.0);
    }

    #[test]
    fn evaluation_errors() {
        let e = parse_expr("1/u").unwrap();
        assert_eq!(e.eval(&[("u", 0.0)]), Err(EvalError::DivisionByZero));
        assert_eq!(ev("0^2", &[]), 0.0);
        assert!(parse_expr("0^(-1)").unwrap().eval(&[]).is_err());
        assert!(parse_expr("(-8)^0.5").unwrap().eval(&[]).is_err());
        assert!(parse_expr("sqrt(-1)").unwrap().eval(&[]).is_err());
        assert!(parse_expr("ln(0)").unwrap().eval(&[]).is_err());
    }

    #[test]
    fn printing_is_canonical() {
        for (src, printed) in [
            ("2 - (4/5)*sin(2*pi*t/5)", "2 - 4/5*sin(2*pi*t/5)"),
            ("(a - b) - (c - d)", "a - b - (c - d)"),
            ("-(x^2)", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("(2^3)^2", "(2^3)^2"),
            ("a/(b*c)", "a/(b*c)"),
            ("max(u,1)", "max(u, 1)"),
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(e.to_string(), printed);
            assert_eq!(parse_expr(printed).unwrap(), e);
        }
    }

    #[test]
    fn derivative_of_feedback() {
        let g = parse_expr("2/(1+u)").unwrap();
        let d = diff_expr_numeric(&g, "u", &[("u", 0.0)]).unwrap();
        assert!((d + 2.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn derivative_of_constant_and_square() {
        let c = parse_expr("c").unwrap();
        let d = diff_expr_numeric(&c, "u", &[("u", 1.3), ("c", 4.0)]).unwrap();
        assert!(d.abs() < 1e-9);
        let sq = parse_expr("u^2").unwrap();
        let d = diff_expr_numeric(&sq, "u", &[("u", 3.0)]).unwrap();
        assert!((d - 6.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_falls_back_to_one_side() {
        let e = parse_expr("sqrt(u)*sqrt(u)").unwrap();
        let d = diff_expr_numeric(&e, "u", &[("u", 0.0)]).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn bound_matches_named_evaluation() {
        let e = parse_expr("x1*u - sin(t)").unwrap();
        let names = ["t", "x1", "u"];
        let bound = e.bind(&|n| names.iter().position(|m| *m == n)).unwrap();
        let named = e.eval(&[("t", 0.3), ("x1", 2.0), ("u", -1.5)]).unwrap();
        assert_eq!(bound.eval(&[0.3, 2.0, -1.5]).unwrap(), named);
        assert!(e.bind(&|_| None).is_err());
    }

    #[test]
    fn substitution() {
        let g = parse_expr("2/(1+u)").unwrap();
        let h = g.substitute("u", &Expr::var("x3"));
        assert_eq!(h.to_string(), "2/(1 + x3)");
        assert_eq!(h.free_vars().into_iter().collect::<Vec<_>>(), ["x3"]);
    }
}
