//! Recursive-descent parser for constraint text.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! constraint := expr cmp NUMBER | expr "in" "[" NUMBER "," NUMBER "]"
//! expr       := term (("+" | "-") term)*
//! term       := factor (("*" | "/") factor)*
//! factor     := NUMBER | agg | "(" expr ")"
//! agg        := ("sum"|"min"|"max"|"avg") "(" IDENT ["," filter] ")"
//!             | "count" "(" [filter] ")"
//! filter     := cmpexpr ("&&" cmpexpr)*
//! cmpexpr    := IDENT ("=="|"!="|"<"|"<="|">"|">=") NUMBER
//! cmp        := "<" | "<=" | ">" | ">="
//! ```
//!
//! `avg(x, f)` is rewritten into `sum(x, f) / count(f)` on the spot, so the
//! returned constraint only registers decomposable aggregates.

use super::{
    AggFn, AggregateConstraint, ArithExpr, Comparison, ConstraintError, FilterAggQuery, FilterCmp,
};
use crate::interval::ArithOp;
use crate::query::ComparisonOp;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    AndAnd,
    CmpOp(ComparisonOp),
    In,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<(Token, usize), ConstraintError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Token::End, start));
        }
        let b = self.src[self.pos];
        let tok = match b {
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'/' => {
                self.pos += 1;
                Token::Slash
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b'[' => {
                self.pos += 1;
                Token::LBracket
            }
            b']' => {
                self.pos += 1;
                Token::RBracket
            }
            b',' => {
                self.pos += 1;
                Token::Comma
            }
            b'&' => {
                if self.src.get(self.pos + 1) == Some(&b'&') {
                    self.pos += 2;
                    Token::AndAnd
                } else {
                    return Err(ConstraintError::Syntax {
                        pos: start,
                        expected: "\"&&\"".into(),
                    });
                }
            }
            b'=' => {
                if self.src.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::CmpOp(ComparisonOp::Eq)
                } else {
                    return Err(ConstraintError::Syntax {
                        pos: start,
                        expected: "\"==\"".into(),
                    });
                }
            }
            b'!' => {
                if self.src.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::CmpOp(ComparisonOp::Neq)
                } else {
                    return Err(ConstraintError::Syntax {
                        pos: start,
                        expected: "\"!=\"".into(),
                    });
                }
            }
            b'<' => {
                if self.src.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::CmpOp(ComparisonOp::Le)
                } else {
                    self.pos += 1;
                    Token::CmpOp(ComparisonOp::Lt)
                }
            }
            b'>' => {
                if self.src.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::CmpOp(ComparisonOp::Ge)
                } else {
                    self.pos += 1;
                    Token::CmpOp(ComparisonOp::Gt)
                }
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit()
                        || self.src[end] == b'.'
                        || self.src[end] == b'e'
                        || self.src[end] == b'E'
                        || ((self.src[end] == b'+' || self.src[end] == b'-')
                            && end > self.pos
                            && (self.src[end - 1] == b'e' || self.src[end - 1] == b'E')))
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let v: f64 = text.parse().map_err(|_| ConstraintError::Syntax {
                    pos: start,
                    expected: "a number".into(),
                })?;
                self.pos = end;
                Token::Number(v)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end])
                    .unwrap()
                    .to_string();
                self.pos = end;
                if text == "in" {
                    Token::In
                } else {
                    Token::Ident(text)
                }
            }
            _ => {
                return Err(ConstraintError::Syntax {
                    pos: start,
                    expected: "a token".into(),
                })
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    schema: &'a [String],
    aggs: Vec<FilterAggQuery>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.cursor].0
    }

    fn pos(&self) -> usize {
        self.tokens[self.cursor].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.cursor].0.clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<(), ConstraintError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn err(&self, expected: &str) -> ConstraintError {
        ConstraintError::Syntax {
            pos: self.pos(),
            expected: expected.into(),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ConstraintError> {
        let negate = if *self.peek() == Token::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Token::Number(v) => Ok(if negate { -v } else { v }),
            _ => Err(ConstraintError::Syntax {
                pos: self.tokens[self.cursor.saturating_sub(1)].1,
                expected: what.into(),
            }),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ConstraintError> {
        match self.bump() {
            Token::Ident(s) => Ok(s),
            _ => Err(ConstraintError::Syntax {
                pos: self.tokens[self.cursor.saturating_sub(1)].1,
                expected: what.into(),
            }),
        }
    }

    fn check_attr(&self, name: &str) -> Result<(), ConstraintError> {
        if self.schema.iter().any(|a| a == name) {
            Ok(())
        } else {
            Err(ConstraintError::UnknownAttribute(name.to_string()))
        }
    }

    fn register(
        &mut self,
        func: AggFn,
        input_attr: Option<String>,
        filter: Vec<FilterCmp>,
    ) -> usize {
        let id = self.aggs.len();
        self.aggs.push(FilterAggQuery {
            id,
            func,
            input_attr,
            filter,
        });
        id
    }

    fn parse_filter(&mut self) -> Result<Vec<FilterCmp>, ConstraintError> {
        let mut cmps = Vec::new();
        loop {
            let attr = self.ident("an attribute name")?;
            self.check_attr(&attr)?;
            let op = match self.bump() {
                Token::CmpOp(op) => op,
                _ => {
                    return Err(ConstraintError::Syntax {
                        pos: self.tokens[self.cursor.saturating_sub(1)].1,
                        expected: "a comparison operator".into(),
                    })
                }
            };
            let constant = self.number("a number")?;
            cmps.push(FilterCmp { attr, op, constant });
            if *self.peek() == Token::AndAnd {
                self.bump();
            } else {
                return Ok(cmps);
            }
        }
    }

    fn parse_agg(&mut self, name: &str) -> Result<ArithExpr, ConstraintError> {
        let func = match name {
            "count" => AggFn::Count,
            "sum" => AggFn::Sum,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "avg" => AggFn::Avg,
            _ => return Err(self.err("an aggregate function")),
        };
        self.expect(&Token::LParen, "\"(\"")?;
        if func == AggFn::Count {
            let filter = if *self.peek() == Token::RParen {
                Vec::new()
            } else {
                self.parse_filter()?
            };
            self.expect(&Token::RParen, "\")\"")?;
            return Ok(ArithExpr::Leaf(self.register(AggFn::Count, None, filter)));
        }
        let attr = self.ident("an attribute name")?;
        self.check_attr(&attr)?;
        let filter = if *self.peek() == Token::Comma {
            self.bump();
            self.parse_filter()?
        } else {
            Vec::new()
        };
        self.expect(&Token::RParen, "\")\"")?;
        if func == AggFn::Avg {
            // avg(x, f) := sum(x, f) / count(f)
            let sum_id = self.register(AggFn::Sum, Some(attr), filter.clone());
            let count_id = self.register(AggFn::Count, None, filter);
            return Ok(ArithExpr::binary(
                ArithOp::Div,
                ArithExpr::Leaf(sum_id),
                ArithExpr::Leaf(count_id),
            ));
        }
        Ok(ArithExpr::Leaf(self.register(func, Some(attr), filter)))
    }

    fn parse_factor(&mut self) -> Result<ArithExpr, ConstraintError> {
        match self.peek().clone() {
            Token::Number(_) | Token::Minus => Ok(ArithExpr::Const(self.number("a number")?)),
            Token::LParen => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect(&Token::RParen, "\")\"")?;
                Ok(e)
            }
            Token::Ident(name) => {
                self.bump();
                self.parse_agg(&name)
            }
            _ => Err(self.err("a number, aggregate, or \"(\"")),
        }
    }

    fn parse_term(&mut self) -> Result<ArithExpr, ConstraintError> {
        let mut left = self.parse_factor()?;
        loop {
            let op = match self.peek() {
                Token::Star => ArithOp::Mul,
                Token::Slash => ArithOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.parse_factor()?;
            left = ArithExpr::binary(op, left, right);
        }
    }

    fn parse_expr(&mut self) -> Result<ArithExpr, ConstraintError> {
        let mut left = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => ArithOp::Add,
                Token::Minus => ArithOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.parse_term()?;
            left = ArithExpr::binary(op, left, right);
        }
    }
}

/// Parses constraint text against a schema.
pub fn parse_constraint(
    text: &str,
    schema: &[String],
) -> Result<AggregateConstraint, ConstraintError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let (tok, pos) = lexer.next_token()?;
        let end = tok == Token::End;
        tokens.push((tok, pos));
        if end {
            break;
        }
    }
    let mut p = Parser {
        tokens,
        cursor: 0,
        schema,
        aggs: Vec::new(),
    };
    let expr = p.parse_expr()?;
    let comparison = match p.bump() {
        Token::CmpOp(ComparisonOp::Lt) => Comparison::Lt(p.number("a threshold")?),
        Token::CmpOp(ComparisonOp::Le) => Comparison::Le(p.number("a threshold")?),
        Token::CmpOp(ComparisonOp::Gt) => Comparison::Gt(p.number("a threshold")?),
        Token::CmpOp(ComparisonOp::Ge) => Comparison::Ge(p.number("a threshold")?),
        Token::In => {
            p.expect(&Token::LBracket, "\"[\"")?;
            let lo = p.number("a lower bound")?;
            p.expect(&Token::Comma, "\",\"")?;
            let hi = p.number("an upper bound")?;
            p.expect(&Token::RBracket, "\"]\"")?;
            if lo > hi {
                return Err(ConstraintError::EmptyRangeBound(lo, hi));
            }
            Comparison::InRange(lo, hi)
        }
        _ => {
            return Err(ConstraintError::Syntax {
                pos: p.tokens[p.cursor.saturating_sub(1)].1,
                expected: "a comparison (<, <=, >, >=, in)".into(),
            })
        }
    };
    if *p.peek() != Token::End {
        return Err(p.err("end of input"));
    }
    Ok(AggregateConstraint {
        expr,
        comparison,
        aggs: p.aggs,
    })
}
