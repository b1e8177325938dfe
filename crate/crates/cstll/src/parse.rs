//! Text grammar for STL formulas.
//!
//! ```text
//! formula   := conjunct ("|" conjunct)*          -- "&" binds tighter than "|"
//! conjunct  := term ("&" term)*
//! term      := "G[" int "," (int | "inf") "](" formula ")"
//!            | "F[" int "," (int | "inf") "](" formula ")"
//!            | "(" formula ")"
//!            | atom
//! atom      := linear_expr (">" | "<") number
//! linear    := ["+"|"-"] product (("+"|"-") product)*
//! product   := [number "*"] channel_name
//! ```
//!
//! A bare channel name means coefficient 1. `expr < b` is desugared during
//! parsing to `-expr > -b`, so only the `>` comparison exists in the AST.
//! Consecutive `&` (or `|`) at one level produce a single n-ary node;
//! mixing the two at the same level groups `&` first.

use thiserror::Error;

use crate::formula::{Atom, Formula, FormulaError, IntervalEnd};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown channel `{name}` at byte {pos}")]
    UnknownChannel { pos: usize, name: String },
    #[error("interval [{start},{end}] at byte {pos} has start > end")]
    BadInterval {
        pos: usize,
        start: usize,
        end: usize,
    },
    #[error(transparent)]
    Invalid(#[from] FormulaError),
}

/// Parse a formula in the text grammar against a channel-name list.
pub fn parse_formula(text: &str, channel_names: &[String]) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        channels: channel_names,
    };
    let formula = parser.formula()?;
    parser.expect_end()?;
    Ok(formula)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Amp,
    Pipe,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Star,
    Plus,
    Minus,
    Greater,
    Less,
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<SpannedTok>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '&' => out.push(SpannedTok { tok: Tok::Amp, pos }),
            '|' => out.push(SpannedTok { tok: Tok::Pipe, pos }),
            '(' => out.push(SpannedTok {
                tok: Tok::LParen,
                pos,
            }),
            ')' => out.push(SpannedTok {
                tok: Tok::RParen,
                pos,
            }),
            '[' => out.push(SpannedTok {
                tok: Tok::LBracket,
                pos,
            }),
            ']' => out.push(SpannedTok {
                tok: Tok::RBracket,
                pos,
            }),
            ',' => out.push(SpannedTok {
                tok: Tok::Comma,
                pos,
            }),
            '*' => out.push(SpannedTok { tok: Tok::Star, pos }),
            '+' => out.push(SpannedTok { tok: Tok::Plus, pos }),
            '-' => out.push(SpannedTok {
                tok: Tok::Minus,
                pos,
            }),
            '>' => out.push(SpannedTok {
                tok: Tok::Greater,
                pos,
            }),
            '<' => out.push(SpannedTok { tok: Tok::Less, pos }),
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent
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
                let slice = &text[start..i];
                let value: f64 = slice.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("invalid number `{slice}`"),
                })?;
                out.push(SpannedTok {
                    tok: Tok::Number(value),
                    pos: start,
                });
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(SpannedTok {
                    tok: Tok::Ident(text[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<SpannedTok>,
    pos: usize,
    channels: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&SpannedTok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<SpannedTok> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.pos)
            .unwrap_or_else(|| self.tokens.last().map(|t| t.pos + 1).unwrap_or(0))
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos: self.here(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t.tok == tok => Ok(()),
            Some(t) => Err(ParseError::Syntax {
                pos: t.pos,
                message: format!("expected {what}"),
            }),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if let Some(t) = self.peek() {
            return Err(ParseError::Syntax {
                pos: t.pos,
                message: "trailing input after formula".to_string(),
            });
        }
        Ok(())
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.conjunct()?;
        let mut children = vec![first];
        while matches!(self.peek().map(|t| &t.tok), Some(Tok::Pipe)) {
            self.next();
            children.push(self.conjunct()?);
        }
        if children.len() == 1 {
            Ok(children.pop().expect("one child"))
        } else {
            Ok(Formula::or(children)?)
        }
    }

    fn conjunct(&mut self) -> Result<Formula, ParseError> {
        let first = self.term()?;
        let mut children = vec![first];
        while matches!(self.peek().map(|t| &t.tok), Some(Tok::Amp)) {
            self.next();
            children.push(self.term()?);
        }
        if children.len() == 1 {
            Ok(children.pop().expect("one child"))
        } else {
            Ok(Formula::and(children)?)
        }
    }

    fn term(&mut self) -> Result<Formula, ParseError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Ident(name)) if (name == "G" || name == "F") && self.is_temporal() => {
                self.temporal(name == "G")
            }
            Some(Tok::LParen) => {
                self.next();
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(_) => self.atom(),
            None => Err(self.err("expected a formula, found end of input")),
        }
    }

    /// True when the current `G`/`F` identifier is followed by `[`,
    /// distinguishing a temporal operator from a channel named `G` or `F`.
    fn is_temporal(&self) -> bool {
        matches!(
            self.tokens.get(self.pos + 1).map(|t| &t.tok),
            Some(Tok::LBracket)
        )
    }

    fn temporal(&mut self, always: bool) -> Result<Formula, ParseError> {
        let op_pos = self.here();
        self.next(); // G or F
        self.expect(Tok::LBracket, "`[`")?;
        let start = self.interval_bound()?;
        let start = match start {
            IntervalEnd::Step(s) => s,
            IntervalEnd::Unbounded => {
                return Err(ParseError::Syntax {
                    pos: op_pos,
                    message: "interval start must be a finite integer".to_string(),
                })
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let end = self.interval_bound()?;
        self.expect(Tok::RBracket, "`]`")?;
        if let IntervalEnd::Step(e) = end {
            if start > e {
                return Err(ParseError::BadInterval {
                    pos: op_pos,
                    start,
                    end: e,
                });
            }
        }
        self.expect(Tok::LParen, "`(`")?;
        let child = self.formula()?;
        self.expect(Tok::RParen, "`)`")?;
        let node = if always {
            Formula::always(start, end, child)?
        } else {
            Formula::eventually(start, end, child)?
        };
        Ok(node)
    }

    fn interval_bound(&mut self) -> Result<IntervalEnd, ParseError> {
        match self.next() {
            Some(SpannedTok {
                tok: Tok::Number(n),
                pos,
            }) => {
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(ParseError::Syntax {
                        pos,
                        message: format!("interval bound must be a non-negative integer, got {n}"),
                    });
                }
                Ok(IntervalEnd::Step(n as usize))
            }
            Some(SpannedTok {
                tok: Tok::Ident(name),
                pos,
            }) => {
                if name == "inf" {
                    Ok(IntervalEnd::Unbounded)
                } else {
                    Err(ParseError::Syntax {
                        pos,
                        message: format!("expected integer or `inf`, got `{name}`"),
                    })
                }
            }
            Some(t) => Err(ParseError::Syntax {
                pos: t.pos,
                message: "expected integer or `inf`".to_string(),
            }),
            None => Err(self.err("expected interval bound, found end of input")),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let mut weights = vec![0.0; self.channels.len()];
        let mut sign = 1.0;
        // optional leading sign
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.next();
            }
            Some(Tok::Plus) => {
                self.next();
            }
            _ => {}
        }
        self.product(sign, &mut weights)?;
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => {
                    self.next();
                    self.product(1.0, &mut weights)?;
                }
                Some(Tok::Minus) => {
                    self.next();
                    self.product(-1.0, &mut weights)?;
                }
                _ => break,
            }
        }
        let greater = match self.next() {
            Some(SpannedTok {
                tok: Tok::Greater, ..
            }) => true,
            Some(SpannedTok { tok: Tok::Less, .. }) => false,
            Some(t) => {
                return Err(ParseError::Syntax {
                    pos: t.pos,
                    message: "expected `>` or `<` after linear expression".to_string(),
                })
            }
            None => return Err(self.err("expected `>` or `<`, found end of input")),
        };
        let threshold = self.signed_number()?;
        // `expr < b` becomes `-expr > -b`.
        let (weights, threshold) = if greater {
            (weights, threshold)
        } else {
            (weights.iter().map(|w| -w).collect(), -threshold)
        };
        Ok(Formula::Atom(Atom::new(weights, threshold)?))
    }

    /// One `coefficient * channel` product (coefficient optional), added
    /// into the weight accumulator with the given sign.
    fn product(&mut self, sign: f64, weights: &mut [f64]) -> Result<(), ParseError> {
        let coeff = match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Number(n)) => {
                self.next();
                self.expect(Tok::Star, "`*` between coefficient and channel")?;
                n
            }
            _ => 1.0,
        };
        match self.next() {
            Some(SpannedTok {
                tok: Tok::Ident(name),
                pos,
            }) => {
                let idx = self
                    .channels
                    .iter()
                    .position(|c| *c == name)
                    .ok_or(ParseError::UnknownChannel { pos, name })?;
                weights[idx] += sign * coeff;
                Ok(())
            }
            Some(t) => Err(ParseError::Syntax {
                pos: t.pos,
                message: "expected channel name".to_string(),
            }),
            None => Err(self.err("expected channel name, found end of input")),
        }
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let mut sign = 1.0;
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Minus)) {
            sign = -1.0;
            self.next();
        }
        match self.next() {
            Some(SpannedTok {
                tok: Tok::Number(n),
                ..
            }) => Ok(sign * n),
            Some(t) => Err(ParseError::Syntax {
                pos: t.pos,
                message: "expected number".to_string(),
            }),
            None => Err(self.err("expected number, found end of input")),
        }
    }
}
