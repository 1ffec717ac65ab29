use thiserror::Error;

use crate::ast::{BinOp, Expr, Func, Node, Var, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown function `{name}` at {line}:{col}")]
    UnknownFunction { name: String, line: usize, col: usize },
    #[error("variable `{name}` at {line}:{col} is out of range for dimension {n}")]
    VarOutOfRange {
        name: String,
        n: usize,
        line: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[s..i].iter().collect();
            let v = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                line,
                col: start_col,
                msg: format!("bad number `{lit}`"),
            })?;
            col += i - s;
            out.push(Token { tok: Tok::Num(v), line, col: start_col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Token {
                tok: Tok::Ident(chars[s..i].iter().collect()),
                line,
                col: start_col,
            });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Token { tok, line, col });
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let t = self.peek();
        let msg = match t.tok {
            Tok::End => format!("{} at end of input", msg.into()),
            _ => msg.into(),
        };
        ParseError::Syntax { line: t.line, col: t.col, msg }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.peek().tok {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(if c == '+' { BinOp::Add } else { BinOp::Sub }, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.peek().tok {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(if c == '*' { BinOp::Mul } else { BinOp::Div }, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, line, col) = {
            let t = self.peek();
            (t.tok.clone(), t.line, t.col)
        };
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek().tok == Tok::LParen {
                    let f = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { name, line, col })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(f, arg));
                }
                self.ident(&name, line, col)
            }
            _ => Err(self.err("expected a number, variable, function call or `(`")),
        }
    }

    fn ident(&self, name: &str, line: usize, col: usize) -> Result<Expr, ParseError> {
        if name == "pi" {
            return Ok(Expr::new(Node::Pi));
        }
        let mut cs = name.chars();
        let kind = match cs.next() {
            Some('x') => Some(VarKind::X),
            Some('y') => Some(VarKind::Y),
            _ => None,
        };
        let digits = cs.as_str();
        match kind {
            Some(kind) if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => {
                let k: usize = digits.parse().unwrap_or(usize::MAX);
                if k == 0 || k > self.n {
                    return Err(ParseError::VarOutOfRange {
                        name: name.to_string(),
                        n: self.n,
                        line,
                        col,
                    });
                }
                Ok(Expr::var(Var { kind, index: k - 1 }))
            }
            _ => Err(ParseError::Syntax {
                line,
                col,
                msg: format!("unknown identifier `{name}`"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.err("expected `)`"))
        }
    }
}

/// Parse `text` in a chart of dimension `n`.
pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, n };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}
