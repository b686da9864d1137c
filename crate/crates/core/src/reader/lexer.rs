//! Prolog tokenizer. Comments are dropped; every token remembers whether
//! layout preceded it, which the parser needs for `f(` versus `f (`.

use std::sync::Arc;

use super::term::{is_symbol_char, Loc};
use super::ReadError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Unquoted name: letters, symbol chars, `!`, `;`.
    Name(String),
    QuotedName(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    BackQuoted(String),
    /// One of `( ) [ ] { } , |`.
    Punct(char),
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Loc,
    pub layout_before: bool,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
}

pub fn tokenize(source: &str, file: &Arc<str>) -> Result<Vec<Token>, ReadError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file: file.clone(),
    };
    let mut out = Vec::new();
    loop {
        let layout = lx.skip_layout()?;
        if lx.peek(0).is_none() {
            break;
        }
        let loc = lx.loc();
        let kind = lx.next_token()?;
        out.push(Token {
            kind,
            loc,
            layout_before: layout,
        });
    }
    Ok(out)
}

impl Lexer {
    fn loc(&self) -> Loc {
        Loc::new(self.file.clone(), self.line, self.col)
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, loc: Loc, msg: impl Into<String>) -> ReadError {
        ReadError::Lex { loc, msg: msg.into() }
    }

    fn skip_layout(&mut self) -> Result<bool, ReadError> {
        let start = self.pos;
        loop {
            match self.peek(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some('/') if self.peek(1) == Some('*') => {
                    let loc = self.loc();
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => return Err(self.err(loc, "unterminated block comment")),
                            Some('*') if self.peek(0) == Some('/') => {
                                self.bump();
                                break;
                            }
                            _ => {}
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(self.pos > start)
    }

    fn next_token(&mut self) -> Result<TokenKind, ReadError> {
        let c = self.peek(0).expect("caller checked for input");
        if c.is_ascii_digit() {
            return self.number();
        }
        if c == '_' || c.is_uppercase() {
            return Ok(TokenKind::Var(self.word()));
        }
        if c.is_alphabetic() {
            return Ok(TokenKind::Name(self.word()));
        }
        match c {
            '\'' => {
                let loc = self.loc();
                self.bump();
                Ok(TokenKind::QuotedName(self.quoted('\'', loc)?))
            }
            '"' => {
                let loc = self.loc();
                self.bump();
                Ok(TokenKind::Str(self.quoted('"', loc)?))
            }
            '`' => {
                let loc = self.loc();
                self.bump();
                Ok(TokenKind::BackQuoted(self.quoted('`', loc)?))
            }
            '(' | ')' | '[' | ']' | '{' | '}' | ',' => {
                self.bump();
                Ok(TokenKind::Punct(c))
            }
            '|' => {
                self.bump();
                if self.peek(0) == Some('|') {
                    self.bump();
                    return Ok(TokenKind::Name("||".into()));
                }
                Ok(TokenKind::Punct('|'))
            }
            '!' | ';' => {
                self.bump();
                Ok(TokenKind::Name(c.to_string()))
            }
            '.' if matches!(self.peek(1), None | Some('%')) || self.peek(1).is_some_and(char::is_whitespace) => {
                self.bump();
                Ok(TokenKind::End)
            }
            _ if is_symbol_char(c) => {
                let mut s = String::new();
                while let Some(c) = self.peek(0).filter(|c| is_symbol_char(*c)) {
                    s.push(c);
                    self.bump();
                }
                Ok(TokenKind::Name(s))
            }
            _ => {
                let loc = self.loc();
                Err(self.err(loc, format!("unexpected character {c:?}")))
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| c.is_alphanumeric() || *c == '_') {
            s.push(c);
            self.bump();
        }
        s
    }

    fn digits(&mut self, radix: u32) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_digit(radix) {
                s.push(c);
                self.bump();
            } else if c == '_' && self.peek(1).is_some_and(|d| d.is_digit(radix)) {
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self) -> Result<TokenKind, ReadError> {
        let loc = self.loc();
        if self.peek(0) == Some('0') {
            match self.peek(1) {
                Some('\'') => {
                    self.bump();
                    self.bump();
                    let code = match self.bump() {
                        Some('\\') => self.escape(loc.clone())?,
                        Some('\'') if self.peek(0) == Some('\'') => {
                            self.bump();
                            Some('\'')
                        }
                        Some(c) => Some(c),
                        None => return Err(self.err(loc, "unterminated character code")),
                    };
                    return Ok(TokenKind::Int(code.map_or(0, |c| c as i64)));
                }
                Some(r @ ('x' | 'o' | 'b')) if self.peek(2).is_some_and(|d| d.is_ascii_hexdigit()) => {
                    let radix = match r {
                        'x' => 16,
                        'o' => 8,
                        _ => 2,
                    };
                    self.bump();
                    self.bump();
                    let ds = self.digits(radix);
                    return i64::from_str_radix(&ds, radix)
                        .map(TokenKind::Int)
                        .map_err(|_| self.err(loc, "integer literal out of range"));
                }
                _ => {}
            }
        }
        let mut text = self.digits(10);
        let mut is_float = false;
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|d| d.is_ascii_digit()) {
            self.bump();
            text.push('.');
            text.push_str(&self.digits(10));
            is_float = true;
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let d = if sign { self.peek(2) } else { self.peek(1) };
            if d.is_some_and(|d| d.is_ascii_digit()) {
                self.bump();
                text.push('e');
                if sign {
                    text.push(self.bump().expect("peeked"));
                }
                text.push_str(&self.digits(10));
                is_float = true;
            }
        }
        if is_float {
            text.parse::<f64>()
                .map(TokenKind::Float)
                .map_err(|_| self.err(loc, "malformed float literal"))
        } else {
            text.parse::<i64>()
                .map(TokenKind::Int)
                .map_err(|_| self.err(loc, "integer literal out of range"))
        }
    }

    /// Reads an escape after the backslash. `None` for line continuation.
    fn escape(&mut self, loc: Loc) -> Result<Option<char>, ReadError> {
        let c = self.bump().ok_or_else(|| self.err(loc.clone(), "unterminated escape"))?;
        Ok(Some(match c {
            'n' => '\n',
            't' => '\t',
            'r' => '\r',
            'a' => '\x07',
            'b' => '\x08',
            'f' => '\x0c',
            'v' => '\x0b',
            'e' => '\x1b',
            's' => ' ',
            '0'..='7' => {
                let mut s = c.to_string();
                while let Some(d) = self.peek(0).filter(|d| d.is_digit(8)) {
                    s.push(d);
                    self.bump();
                }
                if self.peek(0) == Some('\\') {
                    self.bump();
                }
                let v = u32::from_str_radix(&s, 8).map_err(|_| self.err(loc.clone(), "bad octal escape"))?;
                char::from_u32(v).ok_or_else(|| self.err(loc, "bad octal escape"))?
            }
            'x' => {
                let mut s = String::new();
                while let Some(d) = self.peek(0).filter(char::is_ascii_hexdigit) {
                    s.push(d);
                    self.bump();
                }
                if self.peek(0) == Some('\\') {
                    self.bump();
                }
                let v = u32::from_str_radix(&s, 16).map_err(|_| self.err(loc.clone(), "bad hex escape"))?;
                char::from_u32(v).ok_or_else(|| self.err(loc, "bad hex escape"))?
            }
            '\n' => return Ok(None),
            other => other,
        }))
    }

    fn quoted(&mut self, q: char, loc: Loc) -> Result<String, ReadError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(loc, format!("unterminated quoted {}", if q == '\'' { "atom" } else { "string" }))),
                Some(c) if c == q => {
                    if self.peek(0) == Some(q) {
                        self.bump();
                        s.push(q);
                    } else {
                        return Ok(s);
                    }
                }
                Some('\\') => {
                    if let Some(c) = self.escape(loc.clone())? {
                        s.push(c);
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }
}
