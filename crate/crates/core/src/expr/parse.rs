//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)* ;
//! term   := '-' term | factor (('*'|'/') factor)* ;
//! factor := '-' factor | base ('^' ['-'] integer)? ;
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' ;
//! ```
//!
//! A leading minus negates the whole product that follows it, so `-x2/2` is
//! `neg(x2/2)` and `-x^2` is `neg(x^2)`.

use super::ast::{BinOp, Expr, Func, Node};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                message: format!("malformed number '{s}'"),
            })?;
            if !v.is_finite() {
                return Err(ExprError::Syntax {
                    pos: start,
                    message: format!("number '{s}' is not finite"),
                });
            }
            out.push(Token { tok: Tok::Num(v), pos: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(text[start..i].to_string()), pos: start });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Sym(c), pos: i });
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos: i, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    at: usize,
    end: usize,
    variables: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ExprError::Syntax { pos: self.pos(), message: format!("expected '{c}'") })
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.term()?)));
        }
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.eat('^') {
            let pos = self.pos();
            let negative = self.eat('-');
            match self.peek() {
                Some(Tok::Num(v)) if v.fract() == 0.0 && *v <= i32::MAX as f64 => {
                    let k = *v as i32;
                    self.at += 1;
                    return Ok(Node::Pow(Box::new(base), if negative { -k } else { k }));
                }
                _ => {
                    return Err(ExprError::Syntax {
                        pos,
                        message: "exponent must be an integer literal".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node, ExprError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.eat('(') {
                    let func = Func::from_name(&name)
                        .ok_or(ExprError::UnknownFunction { name: name.clone(), pos })?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Node::Call(func, Box::new(arg)))
                } else {
                    let idx = self
                        .variables
                        .iter()
                        .position(|v| *v == name)
                        .ok_or(ExprError::UnknownIdentifier { name, pos })?;
                    Ok(Node::Var(idx))
                }
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Sym(c)) => {
                Err(ExprError::Syntax { pos, message: format!("unexpected '{c}'") })
            }
            None => Err(ExprError::Syntax { pos, message: "unexpected end of input".into() }),
        }
    }
}

pub fn parse_expr<S: AsRef<str>>(text: &str, variables: &[S]) -> Result<Expr, ExprError> {
    let variables: Vec<String> = variables.iter().map(|s| s.as_ref().to_string()).collect();
    let mut p = Parser { tokens: lex(text)?, at: 0, end: text.len(), variables: &variables };
    let root = p.expr()?;
    if p.at != p.tokens.len() {
        return Err(ExprError::Syntax { pos: p.pos(), message: "trailing input".into() });
    }
    Ok(Expr::new(root, variables))
}
