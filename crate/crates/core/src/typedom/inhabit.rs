use super::lattice::{lub, mk_compound};
use super::{construct_cons, Spec, TypeDefs};
use crate::reader::{Term, TermKind, EMPTY_LIST, LIST_CONS};

const UNFOLD_LIMIT: u32 = 64;

/// Membership of a term in the set a spec describes.
pub fn inhabits(t: &Term, s: &Spec, defs: &TypeDefs) -> bool {
    member(t, s, defs, UNFOLD_LIMIT)
}

fn member(t: &Term, s: &Spec, defs: &TypeDefs, fuel: u32) -> bool {
    let is_nil = t.as_atom() == Some(EMPTY_LIST);
    match s {
        Spec::Bottom => false,
        Spec::Any | Spec::SpecVar(_) | Spec::Union(_) | Spec::Compatible(_) => true,
        Spec::Var => t.is_var(),
        Spec::Nonvar => !t.is_var(),
        Spec::Ground => t.is_ground(),
        Spec::CompoundAny => is_nil || matches!(t.kind, TermKind::Compound { .. }),
        Spec::Atomic => !t.is_var() && !matches!(t.kind, TermKind::Compound { .. }),
        Spec::Atom => matches!(t.kind, TermKind::Atom(_)) && !is_nil,
        Spec::Str => matches!(t.kind, TermKind::Str(_)),
        Spec::Number => matches!(t.kind, TermKind::Int(_) | TermKind::Float(_)),
        Spec::Int => matches!(t.kind, TermKind::Int(_)),
        Spec::Float => matches!(t.kind, TermKind::Float(_)),
        Spec::EmptyList => is_nil,
        Spec::Exact(a) => t.as_atom() == Some(a.as_str()),
        Spec::List(e) => t
            .list_items()
            .is_some_and(|items| items.iter().all(|x| member(x, e, defs, fuel))),
        Spec::Tuple(ts) => t.list_items().is_some_and(|items| {
            items.len() == ts.len() && items.iter().zip(ts).all(|(x, s)| member(x, s, defs, fuel))
        }),
        Spec::Compound(f, args) => {
            t.is_functor(f, args.len()) && t.args().iter().zip(args).all(|(x, s)| member(x, s, defs, fuel))
        }
        Spec::OneOf(alts) => alts.iter().any(|a| member(t, a, defs, fuel)),
        Spec::And(cs) => cs.iter().all(|c| member(t, c, defs, fuel)),
        Spec::User(name, params) => match defs.unfold(name, params) {
            Some(body) => fuel > 0 && member(t, &body, defs, fuel - 1),
            None => true,
        },
    }
}

/// The most precise spec describing a term occurrence as written.
pub fn abstract_term(t: &Term) -> Spec {
    match &t.kind {
        TermKind::Var { .. } => Spec::Var,
        TermKind::Atom(a) => Spec::exact(a.clone()),
        TermKind::Int(_) => Spec::Int,
        TermKind::Float(_) => Spec::Float,
        TermKind::Str(_) => Spec::Str,
        TermKind::Compound { functor, args } => mk_compound(functor, args.iter().map(abstract_term).collect()),
    }
}

/// Drops literal detail: single atoms become `atom`, known-length lists
/// become lists of the joined element type. Applied to clause results and
/// to generated conditions.
pub fn generalize(s: &Spec, defs: &TypeDefs) -> Spec {
    match s {
        Spec::Exact(_) => Spec::Atom,
        Spec::EmptyList => Spec::list_any(),
        Spec::Tuple(ts) => {
            let elems: Vec<Spec> = ts.iter().map(|t| generalize(t, defs)).collect();
            Spec::list(elems.iter().fold(Spec::Bottom, |acc, e| lub(&acc, e, defs)))
        }
        Spec::List(e) => Spec::list(generalize(e, defs)),
        Spec::Compound(f, xs) if f == LIST_CONS && xs.len() == 2 => {
            let h = generalize(&xs[0], defs);
            let t = generalize(&xs[1], defs);
            construct_cons(&h, &t, defs)
        }
        Spec::Compound(f, xs) => Spec::Compound(f.clone(), xs.iter().map(|x| generalize(x, defs)).collect()),
        Spec::OneOf(xs) => xs
            .iter()
            .map(|x| generalize(x, defs))
            .fold(Spec::Bottom, |acc, x| lub(&acc, &x, defs)),
        other => other.clone(),
    }
}

/// Abstraction of a clause-head literal with variables relaxed to `any`,
/// then generalized.
pub fn relax_term(t: &Term, defs: &TypeDefs) -> Spec {
    let abs = abstract_term(t).map_children(&|s| (*s == Spec::Var).then_some(Spec::Any));
    generalize(&super::normalize(&abs, defs), defs)
}
