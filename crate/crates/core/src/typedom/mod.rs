//! Abstract type domain: spec expressions and the lattice operations on them.

mod inhabit;
mod lattice;
mod parse;

use std::fmt;

pub use inhabit::{abstract_term, generalize, inhabits, relax_term};
pub use lattice::{construct_cons, glb, list_elem, lub, lub_all, normalize, subtype, WIDEN_CAP};
pub(crate) use lattice::mk_compound;
pub use parse::{parse_spec, parse_spec_list, SpecError, TypeDef, TypeDefs};

use crate::reader::{quote_atom, EMPTY_LIST, LIST_CONS};

/// A type expression. Leaves come first so that the derived order sorts
/// `one_of` alternatives from general to structured.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spec {
    Any,
    Var,
    Nonvar,
    Ground,
    CompoundAny,
    Atomic,
    Atom,
    Str,
    Number,
    Int,
    Float,
    EmptyList,
    Exact(String),
    List(Box<Spec>),
    Tuple(Vec<Spec>),
    Compound(String, Vec<Spec>),
    OneOf(Vec<Spec>),
    And(Vec<Spec>),
    User(String, Vec<Spec>),
    SpecVar(String),
    Union(String),
    Compatible(String),
    /// The empty type.
    Bottom,
}

impl Spec {
    pub fn list(elem: Spec) -> Spec {
        if elem == Spec::Bottom {
            Spec::EmptyList
        } else {
            Spec::List(Box::new(elem))
        }
    }

    pub fn list_any() -> Spec {
        Spec::List(Box::new(Spec::Any))
    }

    pub fn exact(name: impl Into<String>) -> Spec {
        let name = name.into();
        if name == EMPTY_LIST {
            Spec::EmptyList
        } else {
            Spec::Exact(name)
        }
    }

    pub fn compound(functor: impl Into<String>, args: Vec<Spec>) -> Spec {
        Spec::Compound(functor.into(), args)
    }

    pub fn one_of(alts: Vec<Spec>) -> Spec {
        Spec::OneOf(alts)
    }

    /// Ground terms that are lists or compounds; the one intersection of two
    /// leaves that has no leaf of its own.
    pub fn ground_compound() -> Spec {
        Spec::And(vec![Spec::Ground, Spec::CompoundAny])
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Spec::Bottom)
    }

    /// `SpecVar`, `Union` and `Compatible` carry no constraint of their own.
    pub fn is_any_like(&self) -> bool {
        matches!(self, Spec::Any | Spec::SpecVar(_) | Spec::Union(_) | Spec::Compatible(_))
    }

    pub fn alternatives(&self) -> &[Spec] {
        match self {
            Spec::OneOf(alts) => alts,
            other => std::slice::from_ref(other),
        }
    }

    pub fn has_markers(&self) -> bool {
        match self {
            Spec::Union(_) | Spec::Compatible(_) => true,
            Spec::List(e) => e.has_markers(),
            Spec::Tuple(xs) | Spec::Compound(_, xs) | Spec::OneOf(xs) | Spec::And(xs) | Spec::User(_, xs) => {
                xs.iter().any(Spec::has_markers)
            }
            _ => false,
        }
    }

    /// Replaces type-variable markers and spec variables with `any`.
    pub fn strip_markers(&self) -> Spec {
        self.map_children(&|s| match s {
            Spec::Union(_) | Spec::Compatible(_) | Spec::SpecVar(_) => Some(Spec::Any),
            _ => None,
        })
    }

    /// Replaces `var` alternatives at the top level with `any`.
    pub fn widen_var(&self) -> Spec {
        match self {
            Spec::Var => Spec::Any,
            Spec::OneOf(alts) if alts.contains(&Spec::Var) => Spec::Any,
            other => other.clone(),
        }
    }

    /// `widen_var` at every nesting level: what the term may look like once
    /// its variables are bound.
    pub fn widen_var_deep(&self) -> Spec {
        self.map_children(&|s| match s {
            Spec::Var => Some(Spec::Any),
            Spec::OneOf(alts) if alts.contains(&Spec::Var) => Some(Spec::Any),
            _ => None,
        })
    }

    /// Whether an unbound variable inhabits this spec.
    pub fn admits_var(&self) -> bool {
        match self {
            Spec::Var => true,
            s if s.is_any_like() => true,
            Spec::OneOf(alts) => alts.iter().any(Spec::admits_var),
            Spec::And(cs) => cs.iter().all(Spec::admits_var),
            _ => false,
        }
    }

    /// Rewrites top-down; `f` returns `Some` to replace a node.
    pub fn map_children(&self, f: &dyn Fn(&Spec) -> Option<Spec>) -> Spec {
        if let Some(r) = f(self) {
            return r;
        }
        let m = |xs: &[Spec]| xs.iter().map(|x| x.map_children(f)).collect::<Vec<_>>();
        match self {
            Spec::List(e) => Spec::List(Box::new(e.map_children(f))),
            Spec::Tuple(xs) => Spec::Tuple(m(xs)),
            Spec::Compound(n, xs) => Spec::Compound(n.clone(), m(xs)),
            Spec::OneOf(xs) => Spec::OneOf(m(xs)),
            Spec::And(xs) => Spec::And(m(xs)),
            Spec::User(n, xs) => Spec::User(n.clone(), m(xs)),
            other => other.clone(),
        }
    }

    /// Head and tail specs if this describes a non-empty list cell.
    pub fn cons_parts(&self) -> Option<(Spec, Spec)> {
        match self {
            Spec::Tuple(xs) if !xs.is_empty() => {
                let tail = if xs.len() == 1 {
                    Spec::EmptyList
                } else {
                    Spec::Tuple(xs[1..].to_vec())
                };
                Some((xs[0].clone(), tail))
            }
            Spec::Compound(f, xs) if f == LIST_CONS && xs.len() == 2 => Some((xs[0].clone(), xs[1].clone())),
            _ => None,
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[Spec]) -> fmt::Result {
    f.write_str("[")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str("]")
}

fn write_args(f: &mut fmt::Formatter<'_>, xs: &[Spec]) -> fmt::Result {
    f.write_str("(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(")")
}

fn write_var(f: &mut fmt::Formatter<'_>, wrapper: &str, name: &str) -> fmt::Result {
    write!(f, "{wrapper}({name})")
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spec::Any => f.write_str("any"),
            Spec::Var => f.write_str("var"),
            Spec::Nonvar => f.write_str("nonvar"),
            Spec::Ground => f.write_str("ground"),
            Spec::CompoundAny => f.write_str("compound"),
            Spec::Atomic => f.write_str("atomic"),
            Spec::Atom => f.write_str("atom"),
            Spec::Str => f.write_str("string"),
            Spec::Number => f.write_str("number"),
            Spec::Int => f.write_str("int"),
            Spec::Float => f.write_str("float"),
            Spec::EmptyList => f.write_str("empty_list"),
            Spec::Exact(a) => write!(f, "atom({})", quote_atom(a)),
            Spec::List(e) => write!(f, "list({e})"),
            Spec::Tuple(xs) => {
                f.write_str("tuple(")?;
                write_list(f, xs)?;
                f.write_str(")")
            }
            Spec::Compound(name, xs) => {
                write!(f, "compound({}", quote_atom(name))?;
                write_args(f, xs)?;
                f.write_str(")")
            }
            Spec::OneOf(xs) => {
                f.write_str("one_of(")?;
                write_list(f, xs)?;
                f.write_str(")")
            }
            Spec::And(xs) => {
                f.write_str("and(")?;
                write_list(f, xs)?;
                f.write_str(")")
            }
            Spec::User(name, xs) => {
                f.write_str(&quote_atom(name))?;
                if xs.is_empty() {
                    Ok(())
                } else {
                    write_args(f, xs)
                }
            }
            Spec::SpecVar(x) => write_var(f, "specvar", x),
            Spec::Union(x) => write_var(f, "union", x),
            Spec::Compatible(x) => write_var(f, "compatible", x),
            Spec::Bottom => f.write_str("error"),
        }
    }
}

/// Renders a spec vector as `[a, b, c]`.
pub fn display_vec(xs: &[Spec]) -> String {
    struct V<'a>(&'a [Spec]);
    impl fmt::Display for V<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_list(f, self.0)
        }
    }
    V(xs).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_surface_syntax() {
        let s = Spec::OneOf(vec![
            Spec::Var,
            Spec::compound("stars", vec![Spec::Any]),
            Spec::exact("destiny"),
            Spec::list_any(),
        ]);
        assert_eq!(s.to_string(), "one_of([var, compound(stars(any)), atom(destiny), list(any)])");
        assert_eq!(Spec::Compatible("X".into()).to_string(), "compatible(X)");
        assert_eq!(display_vec(&[Spec::list_any(), Spec::Any, Spec::Any]), "[list(any), any, any]");
        assert_eq!(Spec::exact("Hello").to_string(), "atom('Hello')");
    }

    #[test]
    fn empty_list_atom_is_not_exact() {
        assert_eq!(Spec::exact("[]"), Spec::EmptyList);
        assert_eq!(Spec::list(Spec::Bottom), Spec::EmptyList);
    }

    #[test]
    fn cons_parts_of_tuple() {
        let t = Spec::Tuple(vec![Spec::Int, Spec::Atom]);
        assert_eq!(t.cons_parts(), Some((Spec::Int, Spec::Tuple(vec![Spec::Atom]))));
        assert_eq!(Spec::Tuple(vec![Spec::Int]).cons_parts(), Some((Spec::Int, Spec::EmptyList)));
    }

    #[test]
    fn deep_widening() {
        let s = Spec::Tuple(vec![Spec::Var, Spec::OneOf(vec![Spec::Var, Spec::Atom]), Spec::Int]);
        assert_eq!(s.widen_var_deep(), Spec::Tuple(vec![Spec::Any, Spec::Any, Spec::Int]));
        assert!(Spec::OneOf(vec![Spec::Var, Spec::Atom]).admits_var());
        assert!(!Spec::list(Spec::Var).admits_var());
        assert!(Spec::Compatible("X".into()).admits_var());
    }

    #[test]
    fn widen_var_only_touches_top_level() {
        assert_eq!(Spec::OneOf(vec![Spec::Var, Spec::Int]).widen_var(), Spec::Any);
        assert_eq!(Spec::list(Spec::Var).widen_var(), Spec::list(Spec::Var));
    }
}
