use super::ast::{BinOp, Expr, Func};
use super::{DslError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Op(BinOp),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> DslError {
    DslError::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            b'+' => Some(Tok::Op(BinOp::Add)),
            b'-' => Some(Tok::Op(BinOp::Sub)),
            b'*' => Some(Tok::Op(BinOp::Mul)),
            b'/' => Some(Tok::Op(BinOp::Div)),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, offset: start });
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
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
                } else {
                    return Err(syntax(j, "malformed exponent"));
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("bad number {text:?}")))?;
            if !v.is_finite() {
                return Err(syntax(start, format!("number {text:?} out of range")));
            }
            out.push(Token {
                tok: Tok::Num(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                offset: start,
            });
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(syntax(start, format!("unexpected character {ch:?}")));
        }
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Tok::Op(op @ (BinOp::Add | BinOp::Sub)) = self.peek().tok {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ (BinOp::Mul | BinOp::Div)) = self.peek().tok {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Op(BinOp::Sub) {
            self.bump();
            // a minus directly before a literal is part of the literal
            if let Tok::Num(v) = self.peek().tok {
                self.bump();
                return self.postfix(Expr::Num(-v));
            }
            return Ok(Expr::neg(self.unary()?));
        }
        let base = self.primary()?;
        self.postfix(base)
    }

    fn postfix(&mut self, mut base: Expr) -> Result<Expr> {
        while self.peek().tok == Tok::LBracket {
            self.bump();
            let t = self.bump();
            let idx = match t.tok {
                Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 => v as usize,
                _ => return Err(syntax(t.offset, "index must be a nonnegative integer literal")),
            };
            let close = self.bump();
            if close.tok != Tok::RBracket {
                return Err(syntax(close.offset, "expected ']'"));
            }
            base = Expr::Index(Box::new(base), idx);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(syntax(close.offset, "expected ')'"));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    self.bump();
                    let args = self.args()?;
                    build_call(name, args, t.offset)
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            Tok::End => Err(syntax(t.offset, "unexpected end of input")),
            other => Err(syntax(t.offset, format!("unexpected token {other:?}"))),
        }
    }

    /// Arguments after an opening parenthesis, through the closing one.
    fn args(&mut self) -> Result<Vec<Expr>> {
        let mut args = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            let t = self.bump();
            match t.tok {
                Tok::Comma => continue,
                Tok::RParen => return Ok(args),
                Tok::End => return Err(syntax(t.offset, "unclosed call, expected ',' or ')'")),
                _ => return Err(syntax(t.offset, "expected ',' or ')'")),
            }
        }
    }
}

fn build_call(name: String, args: Vec<Expr>, offset: usize) -> Result<Expr> {
    let arity_err = |expected: &str, got: usize| DslError::Arity {
        name: name.clone(),
        expected: expected.to_string(),
        got,
        offset,
    };
    match name.as_str() {
        "neg" => {
            if args.len() != 1 {
                return Err(arity_err("1", args.len()));
            }
            Ok(Expr::neg(args.into_iter().next().unwrap()))
        }
        "vec" => {
            if args.is_empty() {
                return Err(arity_err("at least 1", 0));
            }
            Ok(Expr::Vector(args))
        }
        _ => {
            let f = Func::from_name(&name).ok_or_else(|| DslError::UnknownFunction {
                name: name.clone(),
                offset,
            })?;
            let super::ast::Arity(lo, hi) = f.arity();
            let ok = args.len() >= lo && hi.is_none_or(|h| args.len() <= h);
            if !ok {
                let expected = match hi {
                    Some(h) if h == lo => format!("{lo}"),
                    Some(h) => format!("{lo} to {h}"),
                    None => format!("at least {lo}"),
                };
                return Err(arity_err(&expected, args.len()));
            }
            Ok(Expr::Call(f, args))
        }
    }
}

/// Parse program text into an expression tree.
pub fn parse(source: &str) -> Result<Expr> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(syntax(t.offset, "trailing input"));
    }
    Ok(e)
}
