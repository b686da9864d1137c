//! Subtyping, intersection and union over [`Spec`].
//!
//! Leaves form the hierarchy below; `list`, `tuple`, `compound` and `exact`
//! are structured refinements of `compound` and `atom`. The only meet of two
//! leaves without a leaf of its own, ground compound terms, is represented as
//! `and([ground, compound])`.
//!
//! ```text
//! any ── var
//!  └── nonvar ── ground ── atomic ── atom ── exact(a)
//!        │         │         ├── string
//!        │         │         ├── number ── int, float
//!        │         │         └── empty_list
//!        │         └── and([ground, compound]) ── empty_list
//!        └── compound ── list(S) ── empty_list
//! ```

use super::{Spec, TypeDefs};
use crate::reader::{Dialect, LIST_CONS};

pub const WIDEN_CAP: usize = 8;
const UNFOLD_FUEL: u32 = 4;
const SUBTYPE_STEPS: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Leaf {
    Any,
    Var,
    Nonvar,
    Ground,
    CompoundAny,
    GroundCompound,
    Atomic,
    Atom,
    Str,
    Number,
    Int,
    Float,
    EmptyList,
}

const LEAVES: [Leaf; 13] = [
    Leaf::Any,
    Leaf::Var,
    Leaf::Nonvar,
    Leaf::Ground,
    Leaf::CompoundAny,
    Leaf::GroundCompound,
    Leaf::Atomic,
    Leaf::Atom,
    Leaf::Str,
    Leaf::Number,
    Leaf::Int,
    Leaf::Float,
    Leaf::EmptyList,
];

impl Leaf {
    fn parents(self) -> &'static [Leaf] {
        use Leaf::*;
        match self {
            Any => &[],
            Var | Nonvar => &[Any],
            Ground | CompoundAny => &[Nonvar],
            GroundCompound => &[Ground, CompoundAny],
            Atomic => &[Ground],
            Atom | Str | Number => &[Atomic],
            Int | Float => &[Number],
            EmptyList => &[Atomic, GroundCompound],
        }
    }

    fn le(self, other: Leaf) -> bool {
        self == other || self.parents().iter().any(|p| p.le(other))
    }

    fn to_spec(self) -> Spec {
        match self {
            Leaf::Any => Spec::Any,
            Leaf::Var => Spec::Var,
            Leaf::Nonvar => Spec::Nonvar,
            Leaf::Ground => Spec::Ground,
            Leaf::CompoundAny => Spec::CompoundAny,
            Leaf::GroundCompound => Spec::ground_compound(),
            Leaf::Atomic => Spec::Atomic,
            Leaf::Atom => Spec::Atom,
            Leaf::Str => Spec::Str,
            Leaf::Number => Spec::Number,
            Leaf::Int => Spec::Int,
            Leaf::Float => Spec::Float,
            Leaf::EmptyList => Spec::EmptyList,
        }
    }
}

fn leaf_of(s: &Spec) -> Option<Leaf> {
    Some(match s {
        Spec::Any | Spec::SpecVar(_) | Spec::Union(_) | Spec::Compatible(_) => Leaf::Any,
        Spec::Var => Leaf::Var,
        Spec::Nonvar => Leaf::Nonvar,
        Spec::Ground => Leaf::Ground,
        Spec::CompoundAny => Leaf::CompoundAny,
        Spec::Atomic => Leaf::Atomic,
        Spec::Atom => Leaf::Atom,
        Spec::Str => Leaf::Str,
        Spec::Number => Leaf::Number,
        Spec::Int => Leaf::Int,
        Spec::Float => Leaf::Float,
        Spec::EmptyList => Leaf::EmptyList,
        Spec::And(xs) if xs.len() == 2 && xs[0] == Spec::Ground && xs[1] == Spec::CompoundAny => Leaf::GroundCompound,
        _ => return None,
    })
}

fn leaf_glb(a: Leaf, b: Leaf) -> Spec {
    if a.le(b) {
        return a.to_spec();
    }
    if b.le(a) {
        return b.to_spec();
    }
    // common lower bounds of incomparable leaves form a chain
    LEAVES
        .iter()
        .copied()
        .filter(|c| c.le(a) && c.le(b))
        .fold(None, |best: Option<Leaf>, c| match best {
            Some(b) if !b.le(c) => Some(b),
            _ => Some(c),
        })
        .map_or(Spec::Bottom, Leaf::to_spec)
}

fn is_cons(s: &Spec) -> Option<(&Spec, &Spec)> {
    match s {
        Spec::Compound(f, xs) if f == LIST_CONS && xs.len() == 2 => Some((&xs[0], &xs[1])),
        _ => None,
    }
}

fn tuple_rest(ts: &[Spec]) -> Spec {
    if ts.len() <= 1 {
        Spec::EmptyList
    } else {
        Spec::Tuple(ts[1..].to_vec())
    }
}

/// Builds `f(args)`, collapsing to bottom on an empty argument and turning
/// list cells with a known-length tail into tuples.
pub(crate) fn mk_compound(functor: &str, args: Vec<Spec>) -> Spec {
    if args.is_empty() {
        return Spec::exact(functor);
    }
    if args.iter().any(Spec::is_bottom) {
        return Spec::Bottom;
    }
    if functor == LIST_CONS && args.len() == 2 {
        match &args[1] {
            Spec::EmptyList => return Spec::Tuple(vec![args[0].clone()]),
            Spec::Tuple(ts) => {
                let mut v = Vec::with_capacity(ts.len() + 1);
                v.push(args[0].clone());
                v.extend(ts.iter().cloned());
                return Spec::Tuple(v);
            }
            _ => {}
        }
    }
    Spec::Compound(functor.to_string(), args)
}

fn mk_tuple(items: Vec<Spec>) -> Spec {
    if items.is_empty() {
        Spec::EmptyList
    } else if items.iter().any(Spec::is_bottom) {
        Spec::Bottom
    } else {
        Spec::Tuple(items)
    }
}

// ---------------------------------------------------------------- subtype

struct Sub<'a> {
    defs: &'a TypeDefs,
    steps: u32,
    assumed: Vec<(Spec, Spec)>,
}

/// `a ≤ b`: every term described by `a` is described by `b`.
/// Incomplete only when the step budget runs out, in which case it answers false.
pub fn subtype(a: &Spec, b: &Spec, defs: &TypeDefs) -> bool {
    Sub {
        defs,
        steps: 0,
        assumed: Vec::new(),
    }
    .le(a, b)
}

impl Sub<'_> {
    fn le(&mut self, a: &Spec, b: &Spec) -> bool {
        if a == b {
            return true;
        }
        self.steps += 1;
        if self.steps > SUBTYPE_STEPS {
            return false;
        }
        if a.is_bottom() || b.is_any_like() {
            return true;
        }
        if b.is_bottom() {
            return false;
        }
        let a = if a.is_any_like() { &Spec::Any } else { a };
        if let Spec::OneOf(xs) = a {
            return xs.iter().all(|x| self.le(x, b));
        }
        if matches!(a, Spec::And(_)) && leaf_of(a).is_none() {
            let n = normalize(a, self.defs);
            return !matches!(n, Spec::And(_)) && self.le(&n, b) || n.is_bottom();
        }
        if let Spec::And(cs) = b {
            if leaf_of(b).is_none() {
                return cs.iter().all(|c| self.le(a, c));
            }
        }
        if matches!(a, Spec::User(..)) || matches!(b, Spec::User(..)) {
            if let Spec::OneOf(ys) = b {
                if ys.contains(a) {
                    return true;
                }
            }
            let key = (a.clone(), b.clone());
            if self.assumed.contains(&key) {
                return true;
            }
            self.assumed.push(key);
            let r = match a {
                Spec::User(n, xs) => {
                    let ua = self.defs.unfold(n, xs).unwrap_or(Spec::Any);
                    self.le(&ua, b)
                }
                _ => {
                    let Spec::User(n, ys) = b else { unreachable!() };
                    let ub = self.defs.unfold(n, ys).unwrap_or(Spec::Any);
                    self.le(a, &ub)
                }
            };
            self.assumed.pop();
            return r;
        }
        if let Spec::OneOf(ys) = b {
            if ys.iter().any(|y| self.le(a, y)) {
                return true;
            }
            return match split(a, self.defs.dialect) {
                Some(parts) => parts.iter().all(|p| self.le(p, b)),
                None => false,
            };
        }
        match (leaf_of(a), leaf_of(b)) {
            (Some(x), Some(y)) => x.le(y),
            (None, Some(l)) => self.struct_le_leaf(a, l),
            (Some(x), None) => x == Leaf::EmptyList && matches!(b, Spec::List(_)),
            (None, None) => self.struct_le_struct(a, b),
        }
    }

    fn struct_le_leaf(&mut self, s: &Spec, l: Leaf) -> bool {
        use Leaf::*;
        match s {
            Spec::Exact(_) => Atom.le(l),
            Spec::List(e) => match l {
                Any | Nonvar | CompoundAny => true,
                Ground | GroundCompound => self.le(e, &Spec::Ground),
                _ => false,
            },
            Spec::Tuple(xs) | Spec::Compound(_, xs) => match l {
                Any | Nonvar | CompoundAny => true,
                Ground | GroundCompound => xs.iter().all(|x| self.le(x, &Spec::Ground)),
                _ => false,
            },
            _ => false,
        }
    }

    fn struct_le_struct(&mut self, a: &Spec, b: &Spec) -> bool {
        if let (Some((h, t)), Spec::List(e)) = (is_cons(a), b) {
            return self.le(h, e) && self.le(t, b);
        }
        if let (Spec::Tuple(ts), Some((h, t))) = (a, is_cons(b)) {
            return self.le(&ts[0], h) && self.le(&tuple_rest(ts), t);
        }
        if let (Some((h, t)), Spec::Tuple(ts)) = (is_cons(a), b) {
            return self.le(h, &ts[0]) && self.le(t, &tuple_rest(ts));
        }
        match (a, b) {
            (Spec::Exact(x), Spec::Exact(y)) => x == y,
            (Spec::List(x), Spec::List(y)) => self.le(x, y),
            (Spec::Tuple(ts), Spec::List(e)) => ts.iter().all(|t| self.le(t, e)),
            (Spec::Tuple(xs), Spec::Tuple(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.le(x, y))
            }
            (Spec::Compound(f, xs), Spec::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.le(x, y))
            }
            _ => false,
        }
    }
}

/// Covers `s` by smaller pieces whose union is exactly `s`.
fn split(s: &Spec, dialect: Dialect) -> Option<Vec<Spec>> {
    Some(match s {
        Spec::Any => vec![Spec::Var, Spec::Nonvar],
        Spec::Nonvar => vec![Spec::Atomic, Spec::CompoundAny],
        Spec::Ground => vec![Spec::Atomic, Spec::ground_compound()],
        Spec::Atomic if dialect == Dialect::Sicstus => vec![Spec::Atom, Spec::Number, Spec::EmptyList],
        Spec::Atomic => vec![Spec::Atom, Spec::Str, Spec::Number, Spec::EmptyList],
        Spec::Number => vec![Spec::Int, Spec::Float],
        Spec::OneOf(xs) => xs.clone(),
        Spec::List(e) => vec![
            Spec::EmptyList,
            mk_compound(LIST_CONS, vec![(**e).clone(), s.clone()]),
        ],
        Spec::Tuple(xs) => {
            let (i, parts) = xs.iter().enumerate().find_map(|(i, x)| split(x, dialect).map(|p| (i, p)))?;
            parts
                .into_iter()
                .map(|p| {
                    let mut v = xs.clone();
                    v[i] = p;
                    Spec::Tuple(v)
                })
                .collect()
        }
        Spec::Compound(f, xs) => {
            let (i, parts) = xs.iter().enumerate().find_map(|(i, x)| split(x, dialect).map(|p| (i, p)))?;
            parts
                .into_iter()
                .map(|p| {
                    let mut v = xs.clone();
                    v[i] = p;
                    mk_compound(f, v)
                })
                .collect()
        }
        _ => return None,
    })
}

// ---------------------------------------------------------------- glb

/// Greatest lower bound. Exact on the term model: a term is described by
/// the result iff it is described by both operands.
pub fn glb(a: &Spec, b: &Spec, defs: &TypeDefs) -> Spec {
    meet(a, b, defs, UNFOLD_FUEL)
}

fn meet(a: &Spec, b: &Spec, defs: &TypeDefs, fuel: u32) -> Spec {
    // argument order never affects the result
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if a == b {
        return a.clone();
    }
    if a.is_bottom() || b.is_bottom() {
        return Spec::Bottom;
    }
    if a.is_any_like() {
        return b.clone();
    }
    if b.is_any_like() {
        return a.clone();
    }
    if matches!(a, Spec::OneOf(_)) || matches!(b, Spec::OneOf(_)) {
        let mut out = Vec::new();
        for x in a.alternatives() {
            for y in b.alternatives() {
                out.push(meet(x, y, defs, fuel));
            }
        }
        return normalize_alts(out, defs);
    }
    for (x, y) in [(a, b), (b, a)] {
        if let Spec::And(cs) = x {
            if leaf_of(x).is_none() {
                return cs.iter().fold(y.clone(), |acc, c| meet(&acc, c, defs, fuel));
            }
        }
    }
    if matches!(a, Spec::User(..)) || matches!(b, Spec::User(..)) {
        if subtype(a, b, defs) {
            return a.clone();
        }
        if subtype(b, a, defs) {
            return b.clone();
        }
        if fuel == 0 {
            // over-approximate rather than report an empty type
            return if matches!(a, Spec::User(..)) { b.clone() } else { a.clone() };
        }
        let unfold = |s: &Spec| match s {
            Spec::User(n, xs) => defs.unfold(n, xs).unwrap_or(Spec::Any),
            other => other.clone(),
        };
        return meet(&unfold(a), &unfold(b), defs, fuel - 1);
    }
    match (leaf_of(a), leaf_of(b)) {
        (Some(x), Some(y)) => leaf_glb(x, y),
        (Some(l), None) => meet_struct_leaf(b, l, defs, fuel),
        (None, Some(l)) => meet_struct_leaf(a, l, defs, fuel),
        (None, None) => meet_struct(a, b, defs, fuel),
    }
}

fn meet_struct_leaf(s: &Spec, l: Leaf, defs: &TypeDefs, fuel: u32) -> Spec {
    use Leaf::*;
    match s {
        Spec::Exact(_) if Atom.le(l) => s.clone(),
        Spec::List(e) => match l {
            Any | Nonvar | CompoundAny => s.clone(),
            Ground | GroundCompound => Spec::list(meet(e, &Spec::Ground, defs, fuel)),
            Atomic | EmptyList => Spec::EmptyList,
            _ => Spec::Bottom,
        },
        Spec::Tuple(xs) | Spec::Compound(_, xs) => match l {
            Any | Nonvar | CompoundAny => s.clone(),
            Ground | GroundCompound => {
                let args = xs.iter().map(|x| meet(x, &Spec::Ground, defs, fuel)).collect();
                match s {
                    Spec::Compound(f, _) => mk_compound(f, args),
                    _ => mk_tuple(args),
                }
            }
            _ => Spec::Bottom,
        },
        _ => Spec::Bottom,
    }
}

/// Both operands structured, `a < b` in the derived order.
fn meet_struct(a: &Spec, b: &Spec, defs: &TypeDefs, fuel: u32) -> Spec {
    let m = |x: &Spec, y: &Spec| meet(x, y, defs, fuel);
    match (a, b) {
        (Spec::Exact(_), _) => Spec::Bottom,
        (Spec::List(x), Spec::List(y)) => Spec::list(m(x, y)),
        (Spec::List(e), Spec::Tuple(ts)) => mk_tuple(ts.iter().map(|t| m(t, e)).collect()),
        (Spec::List(e), Spec::Compound(..)) => match is_cons(b) {
            Some((h, t)) => mk_compound(LIST_CONS, vec![m(h, e), m(t, a)]),
            None => Spec::Bottom,
        },
        (Spec::Tuple(xs), Spec::Tuple(ys)) if xs.len() == ys.len() => {
            mk_tuple(xs.iter().zip(ys).map(|(x, y)| m(x, y)).collect())
        }
        (Spec::Tuple(ts), Spec::Compound(..)) => match is_cons(b) {
            Some((h, t)) => mk_compound(LIST_CONS, vec![m(&ts[0], h), m(&tuple_rest(ts), t)]),
            None => Spec::Bottom,
        },
        (Spec::Compound(f, xs), Spec::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
            mk_compound(f, xs.iter().zip(ys).map(|(x, y)| m(x, y)).collect())
        }
        _ => Spec::Bottom,
    }
}

// ---------------------------------------------------------------- lub

/// Least upper bound; unions wider than [`WIDEN_CAP`] are widened to a
/// common leaf ancestor.
pub fn lub(a: &Spec, b: &Spec, defs: &TypeDefs) -> Spec {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if a == b || b.is_bottom() {
        return a.clone();
    }
    if a.is_bottom() {
        return b.clone();
    }
    if subtype(a, b, defs) {
        return b.clone();
    }
    if subtype(b, a, defs) {
        return a.clone();
    }
    let joined = normalize_alts(vec![a.clone(), b.clone()], defs);
    match &joined {
        Spec::OneOf(alts) if alts.len() > WIDEN_CAP => widen(alts, defs),
        _ => joined,
    }
}

/// Least upper bound of a sequence; bottom when empty.
pub fn lub_all<'a>(items: impl IntoIterator<Item = &'a Spec>, defs: &TypeDefs) -> Spec {
    items.into_iter().fold(Spec::Bottom, |acc, s| lub(&acc, s, defs))
}

fn widen(alts: &[Spec], defs: &TypeDefs) -> Spec {
    let candidates = [
        Spec::Atom,
        Spec::Number,
        Spec::Atomic,
        Spec::list_any(),
        Spec::CompoundAny,
        Spec::Ground,
        Spec::Nonvar,
    ];
    candidates
        .into_iter()
        .find(|c| alts.iter().all(|a| subtype(a, c, defs)))
        .unwrap_or(Spec::Any)
}

// ---------------------------------------------------------------- normalize

fn normalize_alts(items: Vec<Spec>, defs: &TypeDefs) -> Spec {
    let mut flat: Vec<Spec> = Vec::new();
    for s in items {
        match s {
            Spec::OneOf(xs) => flat.extend(xs),
            Spec::Bottom => {}
            other => flat.push(other),
        }
    }
    flat.retain(|s| !s.is_bottom());
    flat.sort();
    flat.dedup();
    if flat.contains(&Spec::Any) {
        return Spec::Any;
    }
    // drop alternatives covered by another; among equivalent ones keep the first
    let keep: Vec<bool> = (0..flat.len())
        .map(|i| {
            !(0..flat.len()).any(|j| {
                j != i
                    && subtype(&flat[i], &flat[j], defs)
                    && (j < i || !subtype(&flat[j], &flat[i], defs))
            })
        })
        .collect();
    let mut alts: Vec<Spec> = flat.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect();
    match alts.len() {
        0 => Spec::Bottom,
        1 => alts.pop().expect("one alternative"),
        _ => Spec::OneOf(alts),
    }
}

/// Canonical form: flattened, subsumption-free, sorted `one_of`s, evaluated
/// `and`s, tuples for list cells of known length. User types stay folded.
pub fn normalize(s: &Spec, defs: &TypeDefs) -> Spec {
    let n = |x: &Spec| normalize(x, defs);
    match s {
        Spec::Exact(a) => Spec::exact(a.clone()),
        Spec::List(e) => Spec::list(n(e)),
        Spec::Tuple(xs) => mk_tuple(xs.iter().map(n).collect()),
        Spec::Compound(f, xs) => mk_compound(f, xs.iter().map(n).collect()),
        Spec::OneOf(xs) => normalize_alts(xs.iter().map(n).collect(), defs),
        Spec::And(xs) => xs.iter().map(n).fold(Spec::Any, |acc, c| glb(&acc, &c, defs)),
        Spec::User(name, xs) => Spec::User(name.clone(), xs.iter().map(n).collect()),
        other => other.clone(),
    }
}

/// Type of a list cell `[H|T]` given the types of its parts. A tail that may
/// still become a list makes the cell a list.
pub fn construct_cons(head: &Spec, tail: &Spec, defs: &TypeDefs) -> Spec {
    if head.is_bottom() || tail.is_bottom() {
        return Spec::Bottom;
    }
    let list_any = Spec::list_any();
    match tail {
        Spec::EmptyList | Spec::Tuple(_) => mk_compound(LIST_CONS, vec![head.clone(), tail.clone()]),
        Spec::List(e) => Spec::list(lub(head, e, defs)),
        _ if subtype(tail, &list_any, defs) => Spec::list(lub(head, &list_elem(tail, defs), defs)),
        _ if tail.is_any_like() || *tail == Spec::Var || tail.widen_var() == Spec::Any => list_any,
        _ if glb(tail, &list_any, defs).is_bottom() => mk_compound(LIST_CONS, vec![head.clone(), tail.clone()]),
        _ => list_any,
    }
}

/// Element type of a spec known to describe lists.
pub fn list_elem(s: &Spec, defs: &TypeDefs) -> Spec {
    match s {
        Spec::List(e) => (**e).clone(),
        Spec::Tuple(ts) => lub_all(ts, defs),
        Spec::EmptyList => Spec::Bottom,
        Spec::OneOf(xs) => lub_all(xs.iter().map(|x| list_elem(x, defs)).collect::<Vec<_>>().iter(), defs),
        Spec::Compound(f, xs) if f == LIST_CONS && xs.len() == 2 => lub(&xs[0], &list_elem(&xs[1], defs), defs),
        _ => Spec::Any,
    }
}
