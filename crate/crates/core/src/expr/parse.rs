//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative through
//! `factor`, so `-t^2` is `-(t^2)` and `2^3^2` is `2^(3^2)`.

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: {message} (found `{token}`)")]
pub struct ParseError {
    /// Byte offset into the source; equals the source length at end of input.
    pub offset: usize,
    pub message: String,
    pub token: String,
}

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

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    text: String,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i);
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: "malformed number".into(),
                    token: text.into(),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        message: "number out of range".into(),
                        token: text.into(),
                    });
                }
                out.push(Token {
                    tok: Tok::Num(value),
                    offset: start,
                    text: text.into(),
                });
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let text = &src[start..i];
                out.push(Token {
                    tok: Tok::Ident(text.into()),
                    offset: start,
                    text: text.into(),
                });
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    message: "unexpected character".into(),
                    token: ch.to_string(),
                });
            }
        };
        i += 1;
        out.push(Token {
            tok,
            offset: start,
            text: src[start..i].into(),
        });
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len(),
        text: String::new(),
    });
    Ok(out)
}

/// digits ("." digits*)? | "." digits+, then an optional exponent that is only
/// consumed when digits follow it.
fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
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
    i
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    variables: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: &str) -> ParseError {
        let t = self.peek();
        ParseError {
            offset: t.offset,
            message: message.into(),
            token: if t.tok == Tok::End {
                "end of input".into()
            } else {
                t.text.clone()
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let inner = self.power()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let next_is_paren = self.tokens[self.pos + 1].tok == Tok::LParen;
                if let (Some(func), true) = (Func::from_name(&name), next_is_paren) {
                    self.bump();
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match self.variables.iter().position(|v| *v == name) {
                    Some(slot) => {
                        self.bump();
                        Ok(Expr::Var(Var { name, slot }))
                    }
                    None if Func::from_name(&name).is_some() => {
                        Err(self.error_here("expected `(` after function name"))
                    }
                    None => Err(self.error_here("unknown identifier")),
                }
            }
            Tok::End => Err(self.error_here("unexpected end of input")),
            _ => Err(self.error_here("unexpected token")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here("expected `)`"))
        }
    }
}

/// Parses `source` into an expression over `variables`.
pub fn parse(source: &str, variables: &[&str]) -> Result<Expr, ParseError> {
    if variables.is_empty() {
        return Err(ParseError {
            offset: 0,
            message: "no variables declared".into(),
            token: String::new(),
        });
    }
    let tokens = lex(source)?;
    if tokens[0].tok == Tok::End {
        return Err(ParseError {
            offset: 0,
            message: "empty expression".into(),
            token: "end of input".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        variables,
    };
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::End {
        return Err(parser.error_here("trailing input"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TS: [&str; 2] = ["t", "s"];

    fn eval(src: &str, t: f64, s: f64) -> f64 {
        parse(src, &TS).unwrap().eval(&[t, s]).unwrap()
    }

    #[test]
    fn malformed_operator_sequence() {
        let err = parse("t**", &TS).unwrap_err();
        assert_eq!(err.offset, 2);
        assert_eq!(err.token, "*");
    }

    #[test]
    fn unbalanced_parenthesis_at_end() {
        let err = parse("t*(s", &TS).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.message.contains(")"));
    }

    #[test]
    fn stray_close_paren_is_trailing_input() {
        let err = parse("t)", &TS).unwrap_err();
        assert_eq!(err.offset, 1);
        assert_eq!(err.message, "trailing input");
    }

    #[test]
    fn empty_and_blank_input() {
        assert_eq!(parse("", &TS).unwrap_err().offset, 0);
        assert_eq!(parse("   ", &TS).unwrap_err().offset, 0);
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("t + y", &TS).unwrap_err();
        assert_eq!(err.offset, 4);
        assert_eq!(err.token, "y");
        let err = parse("sin + 1", &TS).unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn unexpected_character() {
        let err = parse("t % s", &TS).unwrap_err();
        assert_eq!(err.offset, 2);
        assert_eq!(err.token, "%");
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("-t^2", 3.0, 0.0), -9.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("1-2-3", 0.0, 0.0), -4.0);
        assert_eq!(eval("8/2/2", 0.0, 0.0), 2.0);
        assert_eq!(eval("2+3*4", 0.0, 0.0), 14.0);
        assert_eq!(eval("t^-1", 4.0, 0.0), 0.25);
        assert_eq!(eval("2*-s", 0.0, 5.0), -10.0);
    }

    #[test]
    fn numbers() {
        assert_eq!(eval("1.5e2", 0.0, 0.0), 150.0);
        assert_eq!(eval(".25", 0.0, 0.0), 0.25);
        assert_eq!(eval("3.", 0.0, 0.0), 3.0);
        assert_eq!(eval("2E-1", 0.0, 0.0), 0.2);
        // `e` without digits is not an exponent
        assert!(parse("2e", &TS).is_err());
        assert!(parse("1e999", &TS).is_err());
    }

    #[test]
    fn function_calls() {
        assert_eq!(eval("sqrt(t*s)", 2.0, 8.0), 4.0);
        assert_eq!(eval("abs(t-s)", 1.0, 3.0), 2.0);
        assert_eq!(eval("exp(0)+cos(0)+log(1)", 0.0, 0.0), 2.0);
    }

    #[test]
    fn empty_variable_set_rejected() {
        assert!(parse("1", &[]).is_err());
    }
}
