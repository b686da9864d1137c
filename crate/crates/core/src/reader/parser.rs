//! Operator-precedence reader for standard Prolog terms.

use std::collections::HashMap;

use super::lexer::{Token, TokenKind};
use super::ops::{Assoc, OpTable};
use super::term::{Loc, Term, TermKind, EMPTY_LIST};
use super::{Dialect, ReadError};

/// One clause-level term together with its variable names, indexed by id.
#[derive(Debug, Clone)]
pub struct ReadTerm {
    pub term: Term,
    pub var_names: Vec<String>,
}

pub struct TermReader {
    tokens: Vec<Token>,
    pos: usize,
    dialect: Dialect,
    vars: HashMap<String, usize>,
    var_names: Vec<String>,
}

type PResult<T> = Result<T, ReadError>;

impl TermReader {
    pub fn new(tokens: Vec<Token>, dialect: Dialect) -> Self {
        TermReader {
            tokens,
            pos: 0,
            dialect,
            vars: HashMap::new(),
            var_names: Vec::new(),
        }
    }

    pub fn at_eof(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Reads the next `.`-terminated term. On error the reader skips past
    /// the next end token so the caller can continue with the following clause.
    pub fn next_term(&mut self, ops: &OpTable) -> Option<PResult<ReadTerm>> {
        if self.at_eof() {
            return None;
        }
        self.vars.clear();
        self.var_names.clear();
        let result = self.parse(ops, 1200).and_then(|t| match self.peek() {
            Some(Token { kind: TokenKind::End, .. }) => {
                self.pos += 1;
                Ok(t)
            }
            Some(tok) => Err(self.unexpected(tok, "operator or end of clause")),
            None => Err(ReadError::Parse {
                loc: t.loc.clone(),
                msg: "missing end of clause".into(),
            }),
        });
        match result {
            Ok(term) => Some(Ok(ReadTerm {
                term,
                var_names: std::mem::take(&mut self.var_names),
            })),
            Err(e) => {
                self.recover();
                Some(Err(e))
            }
        }
    }

    fn recover(&mut self) {
        while let Some(tok) = self.tokens.get(self.pos) {
            self.pos += 1;
            if tok.kind == TokenKind::End {
                break;
            }
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.tokens.get(self.pos + k)
    }

    fn last_loc(&self) -> Loc {
        self.tokens
            .get(self.pos.saturating_sub(1))
            .map(|t| t.loc.clone())
            .unwrap_or_else(Loc::unknown)
    }

    fn unexpected(&self, tok: &Token, expected: &str) -> ReadError {
        ReadError::Parse {
            loc: tok.loc.clone(),
            msg: format!("unexpected {}, expected {expected}", describe(&tok.kind)),
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        match self.peek() {
            Some(Token { kind: TokenKind::Punct(p), .. }) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(self.unexpected(tok, &format!("'{c}'"))),
            None => Err(ReadError::Parse {
                loc: self.last_loc(),
                msg: format!("unexpected end of file, expected '{c}'"),
            }),
        }
    }

    fn parse(&mut self, ops: &OpTable, max: u16) -> PResult<Term> {
        self.parse_prec(ops, max).map(|(t, _)| t)
    }

    fn parse_prec(&mut self, ops: &OpTable, max: u16) -> PResult<(Term, u16)> {
        let (mut left, mut left_p) = self.parse_primary(ops, max)?;
        while let Some(tok) = self.peek() {
            let name = match &tok.kind {
                TokenKind::Name(s) => s.clone(),
                TokenKind::Punct(',') => ",".into(),
                TokenKind::Punct('|') => "|".into(),
                _ => break,
            };
            if let Some((p, assoc)) = ops.infix(&name) {
                let (la, ra) = match assoc {
                    Assoc::Xfy => (p - 1, p),
                    Assoc::Yfx => (p, p - 1),
                    _ => (p - 1, p - 1),
                };
                if p <= max && left_p <= la {
                    self.pos += 1;
                    let right = self.parse(ops, ra)?;
                    let functor = if name == "|" { ";".to_string() } else { name };
                    let loc = left.loc.clone();
                    left = Term::compound(functor, vec![left, right], loc);
                    left_p = p;
                    continue;
                }
            }
            if let Some((p, assoc)) = ops.postfix(&name) {
                let la = if assoc == Assoc::Yf { p } else { p - 1 };
                if p <= max && left_p <= la {
                    self.pos += 1;
                    let loc = left.loc.clone();
                    left = Term::compound(name, vec![left], loc);
                    left_p = p;
                    continue;
                }
            }
            break;
        }
        Ok((left, left_p))
    }

    fn fresh_var(&mut self, name: &str) -> usize {
        let id = self.var_names.len();
        self.var_names.push(name.to_string());
        id
    }

    fn starts_term(&self, ops: &OpTable, k: usize) -> bool {
        match self.peek_at(k).map(|t| &t.kind) {
            None | Some(TokenKind::End) => false,
            Some(TokenKind::Punct(c)) => matches!(c, '(' | '[' | '{'),
            Some(TokenKind::Name(n)) => {
                // an infix operator right after a prefix operator makes the
                // prefix operator an atom operand, as in `- = x`
                let functional = self
                    .peek_at(k + 1)
                    .is_some_and(|t| t.kind == TokenKind::Punct('(') && !t.layout_before);
                functional || ops.infix(n).is_none() || ops.prefix(n).is_some()
            }
            Some(_) => true,
        }
    }

    fn parse_args(&mut self, ops: &OpTable) -> PResult<Vec<Term>> {
        let mut args = vec![self.parse(ops, 999)?];
        while let Some(TokenKind::Punct(',')) = self.peek().map(|t| &t.kind) {
            self.pos += 1;
            args.push(self.parse(ops, 999)?);
        }
        Ok(args)
    }

    fn parse_primary(&mut self, ops: &OpTable, max: u16) -> PResult<(Term, u16)> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ReadError::Parse {
                loc: self.last_loc(),
                msg: "unexpected end of file".into(),
            });
        };
        let loc = tok.loc.clone();
        self.pos += 1;
        let term = match tok.kind {
            TokenKind::Int(i) => Term::new(TermKind::Int(i), loc),
            TokenKind::Float(x) => Term::new(TermKind::Float(x), loc),
            TokenKind::Var(name) => {
                let id = if name == "_" {
                    self.fresh_var("_")
                } else if let Some(id) = self.vars.get(&name) {
                    *id
                } else {
                    let id = self.fresh_var(&name);
                    self.vars.insert(name.clone(), id);
                    id
                };
                Term::new(TermKind::Var { name, id }, loc)
            }
            TokenKind::Str(s) => match self.dialect {
                Dialect::Swipl => Term::new(TermKind::Str(s), loc),
                Dialect::Sicstus => code_list(&s, loc),
            },
            TokenKind::BackQuoted(s) => code_list(&s, loc),
            TokenKind::Punct('(') => {
                let t = self.parse(ops, 1200)?;
                self.expect_punct(')')?;
                return Ok((t, 0));
            }
            TokenKind::Punct('[') => {
                if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Punct(']'))) {
                    self.pos += 1;
                    return self.after_name(ops, EMPTY_LIST.into(), loc, true, max);
                }
                let items = self.parse_args(ops)?;
                let tail = if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Punct('|'))) {
                    self.pos += 1;
                    self.parse(ops, 999)?
                } else {
                    Term::atom(EMPTY_LIST, self.last_loc())
                };
                self.expect_punct(']')?;
                Term::list(items, tail)
            }
            TokenKind::Punct('{') => {
                if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Punct('}'))) {
                    self.pos += 1;
                    return self.after_name(ops, "{}".into(), loc, true, max);
                }
                let t = self.parse(ops, 1200)?;
                self.expect_punct('}')?;
                Term::compound("{}", vec![t], loc)
            }
            TokenKind::Name(name) => return self.after_name(ops, name, loc, false, max),
            TokenKind::QuotedName(name) => return self.after_name(ops, name, loc, true, max),
            _ => {
                self.pos -= 1;
                return Err(self.unexpected(&tok, "a term"));
            }
        };
        Ok((term, 0))
    }

    fn after_name(&mut self, ops: &OpTable, name: String, loc: Loc, quoted: bool, max: u16) -> PResult<(Term, u16)> {
        if let Some(next) = self.peek() {
            if next.kind == TokenKind::Punct('(') && !next.layout_before {
                self.pos += 1;
                let args = self.parse_args(ops)?;
                self.expect_punct(')')?;
                return Ok((Term::compound(name, args, loc), 0));
            }
            if name == "-" && !quoted && !next.layout_before {
                match next.kind {
                    TokenKind::Int(i) => {
                        self.pos += 1;
                        return Ok((Term::new(TermKind::Int(-i), loc), 0));
                    }
                    TokenKind::Float(x) => {
                        self.pos += 1;
                        return Ok((Term::new(TermKind::Float(-x), loc), 0));
                    }
                    _ => {}
                }
            }
        }
        if !quoted {
            if let Some((p, assoc)) = ops.prefix(&name) {
                if self.starts_term(ops, 0) {
                    let p = p.min(max.max(1));
                    let arg_max = if assoc == Assoc::Fy { p } else { p - 1 };
                    let arg = self.parse(ops, arg_max)?;
                    return Ok((Term::compound(name, vec![arg], loc), p));
                }
            }
        }
        Ok((Term::atom(name, loc), 0))
    }
}

fn code_list(s: &str, loc: Loc) -> Term {
    let items = s
        .chars()
        .map(|c| Term::new(TermKind::Int(c as i64), loc.clone()))
        .collect();
    Term::list(items, Term::atom(EMPTY_LIST, loc))
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Name(n) | TokenKind::QuotedName(n) => format!("atom {n:?}"),
        TokenKind::Var(v) => format!("variable {v}"),
        TokenKind::Int(i) => format!("integer {i}"),
        TokenKind::Float(x) => format!("float {x}"),
        TokenKind::Str(_) | TokenKind::BackQuoted(_) => "string".into(),
        TokenKind::Punct(c) => format!("'{c}'"),
        TokenKind::End => "end of clause".into(),
    }
}
