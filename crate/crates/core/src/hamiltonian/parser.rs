//! Recursive-descent parser for Hamiltonian expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | 'x' integer | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)` while `x1^-2` is still accepted.

use super::expr::{boxed, Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((start, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
            out.push((start, Tok::Num(value)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(syntax(start, format!("unexpected character `{ch}`")));
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(boxed(lhs), boxed(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(boxed(lhs), boxed(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(boxed(lhs), boxed(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(boxed(lhs), boxed(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(boxed(self.factor()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Pow(boxed(base), boxed(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (offset, tok) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let index: usize = digits.parse().unwrap_or(usize::MAX);
                        if index == 0 || index > self.dim {
                            return Err(Error::VariableOutOfRange {
                                index,
                                max: self.dim,
                            });
                        }
                        return Ok(Expr::Var(index));
                    }
                }
                if *self.peek() != Tok::LParen {
                    return Err(syntax(offset, format!("unknown identifier `{name}`")));
                }
                let func: Func = name.parse()?;
                self.bump();
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(func, boxed(arg)))
            }
            Tok::End => Err(syntax(offset, "unexpected end of input")),
            other => Err(syntax(offset, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses `source` over the variables `x1..x{dim}`.
pub fn parse_expr(source: &str, dim: usize) -> Result<Expr> {
    if source.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser {
        toks: tokenize(source)?,
        pos: 0,
        dim,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Expr::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse_expr("x1^2 + 0.5*sin(x2)", 8).unwrap(),
            Add(b(Pow(b(Var(1)), b(Const(2.0)))), b(Mul(b(Const(0.5)), b(Call(Func::Sin, b(Var(2)))))))
        );
        assert_eq!(parse_expr("-x1^2", 8).unwrap(), Neg(b(Pow(b(Var(1)), b(Const(2.0))))));
        assert_eq!(
            parse_expr("2^3^2", 8).unwrap(),
            Pow(b(Const(2.0)), b(Pow(b(Const(3.0)), b(Const(2.0)))))
        );
        assert_eq!(parse_expr("x1^-2", 8).unwrap(), Pow(b(Var(1)), b(Neg(b(Const(2.0))))));
        assert_eq!(
            parse_expr("x1 - x2 - x3", 8).unwrap(),
            Sub(b(Sub(b(Var(1)), b(Var(2)))), b(Var(3)))
        );
        assert_eq!(parse_expr("1.5e-3", 8).unwrap(), Const(1.5e-3));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_expr("x9", 8),
            Err(Error::VariableOutOfRange { index: 9, max: 8 })
        ));
        assert!(matches!(parse_expr("x0", 8), Err(Error::VariableOutOfRange { index: 0, .. })));
        assert!(matches!(parse_expr("foo(x1)", 8), Err(Error::UnknownFunction(f)) if f == "foo"));
        assert!(matches!(parse_expr("x1 +", 8), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expr("(x1", 8), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("x1 $ x2", 8), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("x1 x2", 8), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("  ", 8), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("pi", 8), Err(Error::Syntax { offset: 0, .. })));
    }
}
