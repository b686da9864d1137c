use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::ops::{Assoc, OpTable};

/// Functor used for list cells, whatever the dialect writes internally.
pub const LIST_CONS: &str = ".";
pub const EMPTY_LIST: &str = "[]";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub file: Arc<str>,
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(file: Arc<str>, line: u32, col: u32) -> Self {
        Loc { file, line, col }
    }

    pub fn unknown() -> Self {
        Loc {
            file: Arc::from("<unknown>"),
            line: 0,
            col: 0,
        }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum TermKind {
    /// `id` is unique within the clause; every `_` gets its own id.
    Var { name: String, id: usize },
    Atom(String),
    Int(i64),
    Float(f64),
    Str(String),
    Compound { functor: String, args: Vec<Term> },
}

#[derive(Debug, Clone)]
pub struct Term {
    pub kind: TermKind,
    pub loc: Loc,
}

impl Term {
    pub fn new(kind: TermKind, loc: Loc) -> Self {
        Term { kind, loc }
    }

    pub fn atom(name: impl Into<String>, loc: Loc) -> Self {
        Term::new(TermKind::Atom(name.into()), loc)
    }

    pub fn compound(functor: impl Into<String>, args: Vec<Term>, loc: Loc) -> Self {
        debug_assert!(!args.is_empty());
        Term::new(
            TermKind::Compound {
                functor: functor.into(),
                args,
            },
            loc,
        )
    }

    /// Builds a proper or partial list from `items` ending in `tail`.
    pub fn list(items: Vec<Term>, tail: Term) -> Self {
        items.into_iter().rev().fold(tail, |acc, item| {
            let loc = item.loc.clone();
            Term::compound(LIST_CONS, vec![item, acc], loc)
        })
    }

    pub fn is_var(&self) -> bool {
        matches!(self.kind, TermKind::Var { .. })
    }

    pub fn is_callable(&self) -> bool {
        matches!(self.kind, TermKind::Atom(_) | TermKind::Compound { .. })
    }

    /// Name and arity for atoms and compounds.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match &self.kind {
            TermKind::Atom(a) => Some((a, 0)),
            TermKind::Compound { functor, args } => Some((functor, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match &self.kind {
            TermKind::Compound { args, .. } => args,
            _ => &[],
        }
    }

    pub fn is_functor(&self, name: &str, arity: usize) -> bool {
        self.functor() == Some((name, arity))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match &self.kind {
            TermKind::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Elements of a proper list, `None` for partial or non-lists.
    pub fn list_items(&self) -> Option<Vec<&Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match &cur.kind {
                TermKind::Atom(a) if a == EMPTY_LIST => return Some(out),
                TermKind::Compound { functor, args } if functor == LIST_CONS && args.len() == 2 => {
                    out.push(&args[0]);
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match &self.kind {
            TermKind::Var { .. } => false,
            TermKind::Compound { args, .. } => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Visits variables left to right, including repeated occurrences.
    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str, usize)) {
        match &self.kind {
            TermKind::Var { name, id } => f(name, *id),
            TermKind::Compound { args, .. } => args.iter().for_each(|a| a.visit_vars(f)),
            _ => {}
        }
    }

    /// Structural equality ignoring locations; variables are compared by
    /// first-occurrence order, so `f(X,Y)` equals `f(A,B)`.
    pub fn variant_of(&self, other: &Term) -> bool {
        fn go(a: &Term, b: &Term, left: &mut HashMap<usize, usize>, right: &mut HashMap<usize, usize>) -> bool {
            match (&a.kind, &b.kind) {
                (TermKind::Var { id: x, .. }, TermKind::Var { id: y, .. }) => {
                    let n = left.len();
                    let lx = *left.entry(*x).or_insert(n);
                    let n = right.len();
                    let ry = *right.entry(*y).or_insert(n);
                    lx == ry
                }
                (TermKind::Atom(x), TermKind::Atom(y)) => x == y,
                (TermKind::Int(x), TermKind::Int(y)) => x == y,
                (TermKind::Float(x), TermKind::Float(y)) => x.to_bits() == y.to_bits(),
                (TermKind::Str(x), TermKind::Str(y)) => x == y,
                (
                    TermKind::Compound { functor: f, args: xs },
                    TermKind::Compound { functor: g, args: ys },
                ) => f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, left, right)),
                _ => false,
            }
        }
        go(self, other, &mut HashMap::new(), &mut HashMap::new())
    }

    /// Renders the term with operators and list sugar so that the reader
    /// parses it back to a variant of itself.
    pub fn display_with<'a>(&'a self, ops: &'a OpTable) -> TermDisplay<'a> {
        TermDisplay { term: self, ops }
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    ops: &'a OpTable,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_term(&mut out, self.term, self.ops, 1200);
        f.write_str(&out)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(OpTable::iso()))
    }
}

fn is_letter_atom(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_lowercase() => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn is_symbol_char(c: char) -> bool {
    "+-*/\\^<>=~:.?@#&$".contains(c)
}

/// Quotes an atom when it would not read back as itself.
pub fn quote_atom(s: &str) -> String {
    let plain = is_letter_atom(s)
        || matches!(s, "[]" | "!" | ";" | "{}")
        || (!s.is_empty() && s.chars().all(is_symbol_char) && s != ".");
    if plain {
        return s.to_string();
    }
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn quote_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_atom_operand(out: &mut String, name: &str, ops: &OpTable, max: u16) {
    let q = quote_atom(name);
    if ops.is_op(name) && max < 1200 {
        out.push('(');
        out.push_str(&q);
        out.push(')');
    } else {
        out.push_str(&q);
    }
}

fn write_term(out: &mut String, t: &Term, ops: &OpTable, max: u16) {
    match &t.kind {
        TermKind::Var { name, id } => {
            if name == "_" {
                out.push_str(&format!("_G{id}"));
            } else {
                out.push_str(name);
            }
        }
        TermKind::Atom(a) => write_atom_operand(out, a, ops, max),
        TermKind::Int(i) => {
            if *i < 0 && max < 200 {
                out.push_str(&format!("({i})"));
            } else {
                out.push_str(&i.to_string());
            }
        }
        TermKind::Float(x) => {
            let s = if x.fract() == 0.0 && x.is_finite() {
                format!("{x:.1}")
            } else {
                format!("{x}")
            };
            if *x < 0.0 && max < 200 {
                out.push_str(&format!("({s})"));
            } else {
                out.push_str(&s);
            }
        }
        TermKind::Str(s) => out.push_str(&quote_string(s)),
        TermKind::Compound { functor, args } => {
            if functor == LIST_CONS && args.len() == 2 {
                write_list(out, t, ops);
                return;
            }
            if functor == "{}" && args.len() == 1 {
                out.push('{');
                write_term(out, &args[0], ops, 1200);
                out.push('}');
                return;
            }
            if args.len() == 2 {
                if let Some((p, assoc)) = ops.infix(functor) {
                    let (lmax, rmax) = match assoc {
                        Assoc::Xfx => (p - 1, p - 1),
                        Assoc::Xfy => (p - 1, p),
                        Assoc::Yfx => (p, p - 1),
                        _ => (p - 1, p - 1),
                    };
                    let paren = p > max;
                    if paren {
                        out.push('(');
                    }
                    write_term(out, &args[0], ops, lmax);
                    if functor == "," {
                        out.push_str(", ");
                    } else {
                        out.push(' ');
                        out.push_str(&quote_atom(functor));
                        out.push(' ');
                    }
                    write_term(out, &args[1], ops, rmax);
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            if args.len() == 1 && functor != "-" && functor != "+" {
                if let Some((p, assoc)) = ops.prefix(functor) {
                    let amax = if assoc == Assoc::Fy { p } else { p - 1 };
                    let paren = p > max;
                    if paren {
                        out.push('(');
                    }
                    out.push_str(&quote_atom(functor));
                    out.push(' ');
                    // keep the operand from being read as a further operator application
                    let needs_paren = matches!(&args[0].kind, TermKind::Atom(a) if ops.is_op(a));
                    if needs_paren {
                        out.push('(');
                        write_term(out, &args[0], ops, 1200);
                        out.push(')');
                    } else {
                        write_term(out, &args[0], ops, amax);
                    }
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            out.push_str(&quote_atom(functor));
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(out, a, ops, 999);
            }
            out.push(')');
        }
    }
}

fn write_list(out: &mut String, t: &Term, ops: &OpTable) {
    out.push('[');
    let mut cur = t;
    let mut first = true;
    loop {
        match &cur.kind {
            TermKind::Compound { functor, args } if functor == LIST_CONS && args.len() == 2 => {
                if !first {
                    out.push(',');
                }
                first = false;
                write_term(out, &args[0], ops, 999);
                cur = &args[1];
            }
            TermKind::Atom(a) if a == EMPTY_LIST => break,
            _ => {
                out.push('|');
                write_term(out, cur, ops, 999);
                break;
            }
        }
    }
    out.push(']');
}
