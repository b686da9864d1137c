use std::collections::BTreeMap;

use thiserror::Error;

use super::Spec;
use crate::reader::{Dialect, Term, TermKind, EMPTY_LIST, LIST_CONS};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct SpecError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError(msg.into()))
}

fn var_name(t: &Term) -> Option<String> {
    match &t.kind {
        TermKind::Var { name, id } if name == "_" => Some(format!("_G{id}")),
        TermKind::Var { name, .. } => Some(name.clone()),
        _ => None,
    }
}

/// Reads a spec written in annotation syntax.
pub fn parse_spec(t: &Term) -> Result<Spec, SpecError> {
    match &t.kind {
        TermKind::Var { .. } => Ok(Spec::SpecVar(var_name(t).unwrap_or_default())),
        TermKind::Atom(a) => Ok(match a.as_str() {
            "any" => Spec::Any,
            "var" => Spec::Var,
            "nonvar" => Spec::Nonvar,
            "ground" => Spec::Ground,
            "compound" => Spec::CompoundAny,
            "atomic" => Spec::Atomic,
            "atom" => Spec::Atom,
            "string" => Spec::Str,
            "number" => Spec::Number,
            "int" | "integer" => Spec::Int,
            "float" => Spec::Float,
            "empty_list" | EMPTY_LIST => Spec::EmptyList,
            "list" => Spec::list_any(),
            other => Spec::User(other.to_string(), Vec::new()),
        }),
        TermKind::Compound { functor, args } => {
            let one = |what: &str| -> Result<&Term, SpecError> {
                if args.len() == 1 {
                    Ok(&args[0])
                } else {
                    err(format!("{what} takes one argument"))
                }
            };
            match (functor.as_str(), args.len()) {
                ("atom" | "exact", 1) => match one("atom")?.as_atom() {
                    Some(a) => Ok(Spec::exact(a)),
                    None => err(format!("atom/1 expects an atom, got {}", args[0])),
                },
                ("list", 1) => Ok(Spec::List(Box::new(parse_spec(&args[0])?))),
                ("tuple", 1) => {
                    let items = parse_spec_list(&args[0])?;
                    Ok(if items.is_empty() {
                        Spec::EmptyList
                    } else {
                        Spec::Tuple(items)
                    })
                }
                ("compound", 1) => match &args[0].kind {
                    // compound(f([S1, S2])) lists the argument specs
                    TermKind::Compound { functor, args } if args.len() == 1 && args[0].is_functor(LIST_CONS, 2) => {
                        Ok(Spec::Compound(functor.clone(), parse_spec_list(&args[0])?))
                    }
                    TermKind::Compound { functor, args } => Ok(Spec::Compound(
                        functor.clone(),
                        args.iter().map(parse_spec).collect::<Result<_, _>>()?,
                    )),
                    _ => err(format!("compound/1 expects a compound term, got {}", args[0])),
                },
                ("one_of", 1) | ("and", 1) => {
                    let items = parse_spec_list(&args[0])?;
                    if items.is_empty() {
                        return err(format!("{functor}/1 needs at least one alternative"));
                    }
                    Ok(if functor == "one_of" {
                        Spec::OneOf(items)
                    } else {
                        Spec::And(items)
                    })
                }
                ("specvar" | "union" | "compatible", 1) => {
                    let name = var_name(&args[0])
                        .or_else(|| args[0].as_atom().map(str::to_string))
                        .ok_or_else(|| SpecError(format!("{functor}/1 expects a variable")))?;
                    Ok(match functor.as_str() {
                        "specvar" => Spec::SpecVar(name),
                        "union" => Spec::Union(name),
                        _ => Spec::Compatible(name),
                    })
                }
                (LIST_CONS, 2) => err(format!("a list is not a spec: {t}")),
                _ => Ok(Spec::User(
                    functor.clone(),
                    args.iter().map(parse_spec).collect::<Result<_, _>>()?,
                )),
            }
        }
        _ => err(format!("not a spec: {t}")),
    }
}

/// Reads a proper list of specs.
pub fn parse_spec_list(t: &Term) -> Result<Vec<Spec>, SpecError> {
    match t.list_items() {
        Some(items) => items.into_iter().map(parse_spec).collect(),
        None => err(format!("expected a list of specs, got {t}")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDef {
    pub params: Vec<String>,
    pub body: Spec,
}

/// User type definitions, keyed by name and parameter count.
#[derive(Debug, Clone, Default)]
pub struct TypeDefs {
    defs: BTreeMap<(String, usize), TypeDef>,
    pub dialect: Dialect,
}

impl TypeDefs {
    pub fn new(dialect: Dialect) -> Self {
        TypeDefs {
            defs: BTreeMap::new(),
            dialect,
        }
    }

    /// Registers `defspec(Head, Body)`. Parameters in `Head` must be variables.
    pub fn define(&mut self, head: &Term, body: &Term) -> Result<(), SpecError> {
        let (name, arity) = head
            .functor()
            .ok_or_else(|| SpecError(format!("defspec head must be an atom or compound, got {head}")))?;
        let params = head
            .args()
            .iter()
            .map(|a| var_name(a).ok_or_else(|| SpecError(format!("defspec parameter must be a variable, got {a}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let body = parse_spec(body)?;
        self.insert(name, arity, TypeDef { params, body });
        Ok(())
    }

    pub fn insert(&mut self, name: &str, arity: usize, def: TypeDef) {
        self.defs.insert((name.to_string(), arity), def);
    }

    pub fn get(&self, name: &str, arity: usize) -> Option<&TypeDef> {
        self.defs.get(&(name.to_string(), arity))
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// One level of unfolding with parameters substituted.
    pub fn unfold(&self, name: &str, args: &[Spec]) -> Option<Spec> {
        let def = self.get(name, args.len())?;
        if def.params.is_empty() {
            return Some(def.body.clone());
        }
        Some(def.body.map_children(&|s| match s {
            Spec::SpecVar(v) => def.params.iter().position(|p| p == v).map(|i| args[i].clone()),
            _ => None,
        }))
    }

    /// Rejects references to undefined user types and `string` where the
    /// dialect has none.
    pub fn check(&self, s: &Spec) -> Result<(), SpecError> {
        match s {
            Spec::Str if self.dialect == Dialect::Sicstus => err("type string is not available under sicstus"),
            Spec::User(name, args) => {
                if self.get(name, args.len()).is_none() {
                    return err(format!("undefined spec {name}/{}", args.len()));
                }
                args.iter().try_for_each(|a| self.check(a))
            }
            Spec::List(e) => self.check(e),
            Spec::Tuple(xs) | Spec::Compound(_, xs) | Spec::OneOf(xs) | Spec::And(xs) => {
                xs.iter().try_for_each(|a| self.check(a))
            }
            _ => Ok(()),
        }
    }

    /// Checks every definition body.
    pub fn check_all(&self) -> Vec<(String, usize, SpecError)> {
        self.defs
            .iter()
            .filter_map(|((n, a), d)| self.check(&d.body).err().map(|e| (n.clone(), *a, e)))
            .collect()
    }
}
