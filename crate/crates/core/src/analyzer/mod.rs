//! Clause-local analysis. Each clause gets a directed graph whose nodes are
//! term occurrences carrying a type domain; labelled edges record structure,
//! unifications and type-variable relationships.

mod goals;
mod propagate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::pred::PredId;
use crate::reader::{Clause, Loc, Term, TermKind, Warning, EMPTY_LIST, LIST_CONS};
use crate::typedom::{abstract_term, generalize, glb, lub, mk_compound, subtype, Spec, TypeDefs};

pub use goals::{analyze_clause, apply_post, check_pre, init_env};
pub use propagate::{local_fixpoint, resolve_type_vars};

/// Propagation sweeps allowed per fixpoint run.
pub const STEP_CAP: usize = 50;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Pos(usize),
    IsHead,
    IsTail,
    Union(String),
    Compatible(String),
    HasType,
    Link,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Var { id: usize, name: String },
    Atomic,
    Compound { functor: String, args: Vec<NodeId> },
    /// A type variable instantiated for one postcondition application.
    TypeVar { name: String },
    /// Holds a marker-carrying spec applied to the node it is linked from.
    Holder { template: Spec },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub label: String,
    pub dom: Spec,
    pub artificial: bool,
    pub loc: Loc,
    /// Structural edges have been added for this node.
    linked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeError {
    #[serde(serialize_with = "ser_display")]
    pub loc: Loc,
    pub msg: String,
    #[serde(serialize_with = "ser_opt_display")]
    pub expected: Option<Spec>,
    #[serde(serialize_with = "ser_opt_display")]
    pub actual: Option<Spec>,
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_opt_display<T: fmt::Display, S: serde::Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownCall {
    pub loc: Loc,
    pub goal: String,
}

/// Where narrowing happens, for error messages.
#[derive(Debug, Clone)]
struct Context {
    loc: Loc,
    what: String,
}

#[derive(Debug, Clone, Default)]
pub struct Env {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub errors: Vec<TypeError>,
    pub warnings: Vec<Warning>,
    pub head_args: Vec<NodeId>,
    pub watcher: Option<NodeId>,
    pub unknown_calls: Vec<UnknownCall>,
    pub goal_count: usize,
    vars: BTreeMap<usize, NodeId>,
    /// Variable nodes an annotation explicitly typed as `var`.
    var_constrained: BTreeSet<NodeId>,
    next_fresh: usize,
    context: Option<Context>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dom(&self, id: NodeId) -> &Spec {
        &self.nodes[id].dom
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id].kind {
            NodeKind::Compound { args, .. } => args,
            _ => &[],
        }
    }

    /// The node of a named clause variable.
    pub fn var_node(&self, name: &str) -> Option<NodeId> {
        self.vars
            .values()
            .copied()
            .find(|&n| matches!(&self.nodes[n].kind, NodeKind::Var { name: v, .. } if v == name))
    }

    pub fn var_dom(&self, name: &str) -> Option<&Spec> {
        self.var_node(name).map(|n| self.dom(n))
    }

    /// Type variables by marker name, in creation order.
    pub fn type_vars(&self) -> Vec<(&str, &Spec)> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::TypeVar { name } => Some((name.as_str(), &n.dom)),
                _ => None,
            })
            .collect()
    }

    pub fn edges_from(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    fn add_node(&mut self, kind: NodeKind, label: String, dom: Spec, artificial: bool, loc: Loc) -> NodeId {
        self.nodes.push(Node {
            kind,
            label,
            dom,
            artificial,
            loc,
            linked: false,
        });
        self.nodes.len() - 1
    }

    /// `T__<n>`, numbered per clause.
    fn fresh_name(&mut self) -> String {
        self.next_fresh += 1;
        format!("T__{}", self.next_fresh)
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, label: EdgeLabel) {
        let e = Edge { from, to, label };
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
    }

    /// Adds nodes for a term occurrence. Variables are shared by identity;
    /// every other occurrence gets fresh nodes. Head variables start as
    /// `any`, body variables as `var`.
    pub fn intern(&mut self, t: &Term, in_head: bool) -> NodeId {
        match &t.kind {
            TermKind::Var { name, id } => {
                if let Some(&n) = self.vars.get(id) {
                    return n;
                }
                let dom = if in_head { Spec::Any } else { Spec::Var };
                let kind = NodeKind::Var {
                    id: *id,
                    name: name.clone(),
                };
                let n = self.add_node(kind, name.clone(), dom, false, t.loc.clone());
                self.vars.insert(*id, n);
                n
            }
            TermKind::Compound { functor, args } => {
                let kids: Vec<NodeId> = args.iter().map(|a| self.intern(a, in_head)).collect();
                let dom = build(functor, &kids.iter().map(|&k| self.dom(k).clone()).collect::<Vec<_>>());
                let kind = NodeKind::Compound {
                    functor: functor.clone(),
                    args: kids,
                };
                self.add_node(kind, t.to_string(), dom, false, t.loc.clone())
            }
            _ => self.add_node(NodeKind::Atomic, t.to_string(), abstract_term(t), false, t.loc.clone()),
        }
    }

    /// Artificial list `[n1, ..., nk]` over existing nodes.
    fn artificial_list(&mut self, items: &[NodeId], loc: &Loc) -> NodeId {
        let mut tail = self.add_node(NodeKind::Atomic, EMPTY_LIST.into(), Spec::EmptyList, true, loc.clone());
        for &item in items.iter().rev() {
            let dom = build(LIST_CONS, &[self.dom(item).clone(), self.dom(tail).clone()]);
            let label = self.fresh_name();
            let kind = NodeKind::Compound {
                functor: LIST_CONS.into(),
                args: vec![item, tail],
            };
            tail = self.add_node(kind, label, dom, true, loc.clone());
        }
        tail
    }

    /// Gives every compound node its `pos`, `is-head` and `is-tail` edges.
    pub fn add_structural_edges(&mut self) {
        for p in 0..self.nodes.len() {
            if self.nodes[p].linked {
                continue;
            }
            self.nodes[p].linked = true;
            let NodeKind::Compound { functor, args } = &self.nodes[p].kind else { continue };
            let labels: Vec<(NodeId, EdgeLabel)> = if functor == LIST_CONS && args.len() == 2 {
                vec![(args[0], EdgeLabel::IsHead), (args[1], EdgeLabel::IsTail)]
            } else {
                args.iter().enumerate().map(|(i, &a)| (a, EdgeLabel::Pos(i))).collect()
            };
            for (to, label) in labels {
                self.add_edge(p, to, label);
            }
        }
    }

    fn structural_children(&self, p: NodeId) -> Option<(&str, &[NodeId])> {
        if !self.nodes[p].linked {
            return None;
        }
        match &self.nodes[p].kind {
            NodeKind::Compound { functor, args } => Some((functor, args)),
            _ => None,
        }
    }

    fn set_context(&mut self, loc: &Loc, what: String) {
        self.context = Some(Context { loc: loc.clone(), what });
    }

    /// Replaces a domain. Reaching bottom from a non-bottom domain records
    /// one error naming the constraint that caused it.
    fn update(&mut self, id: NodeId, new: Spec, constraint: &Spec) -> bool {
        let old = &self.nodes[id].dom;
        if *old == new {
            return false;
        }
        if new.is_bottom() && !old.is_bottom() {
            let node = &self.nodes[id];
            let (loc, within) = match &self.context {
                Some(c) => (c.loc.clone(), format!(" in {}", c.what)),
                None => (node.loc.clone(), String::new()),
            };
            let msg = format!("type conflict for {}{within}: {old} is incompatible with {constraint}", node.label);
            self.errors.push(TypeError {
                loc,
                msg,
                expected: Some(constraint.clone()),
                actual: Some(old.clone()),
            });
        }
        self.nodes[id].dom = new;
        true
    }

    fn error(&mut self, loc: &Loc, msg: String, expected: Option<Spec>, actual: Option<Spec>) {
        self.errors.push(TypeError {
            loc: loc.clone(),
            msg,
            expected,
            actual,
        });
    }
}

/// Domain of a compound built from argument domains; variables inside count
/// as whatever they may become.
fn build(functor: &str, args: &[Spec]) -> Spec {
    mk_compound(functor, args.iter().map(Spec::widen_var_deep).collect())
}

/// Narrowing that may bind variables: `var` parts of `d` may take any
/// shape `c` allows. Keeps `d` when `c` already admits it.
pub fn bind(d: &Spec, c: &Spec, defs: &TypeDefs) -> Spec {
    if subtype(d, c, defs) {
        d.clone()
    } else {
        glb(&d.widen_var_deep(), c, defs)
    }
}

/// Domain shared by two unified terms: each side's variables may be bound
/// to the other side's shape.
pub fn unify(a: &Spec, b: &Spec, defs: &TypeDefs) -> Spec {
    lub(
        &glb(&a.widen_var_deep(), b, defs),
        &glb(a, &b.widen_var_deep(), defs),
        defs,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub dom: Spec,
    /// An annotation typed this variable as `var`.
    pub constrained_var: bool,
}

/// Outcome of analyzing one clause.
#[derive(Debug, Clone)]
pub struct ClauseResult {
    pub pred: PredId,
    pub index: usize,
    pub loc: Loc,
    /// Generalized domains of the head arguments.
    pub args: Vec<Spec>,
    pub errors: Vec<TypeError>,
    pub warnings: Vec<Warning>,
    /// The head already conflicted with the predicate's preconditions.
    pub head_failed: bool,
    pub vars: Vec<VarInfo>,
    pub goal_count: usize,
    pub unknown_calls: Vec<UnknownCall>,
}

impl ClauseResult {
    pub fn from_env(clause: &Clause, index: usize, env: &Env, head_failed: bool, defs: &TypeDefs) -> Self {
        let args = env.head_args.iter().map(|&n| generalize(env.dom(n), defs)).collect();
        let mut seen = BTreeSet::new();
        let vars = clause
            .var_names
            .iter()
            .enumerate()
            .filter(|(_, name)| name.as_str() != "_" && seen.insert(name.as_str()))
            .map(|(id, name)| {
                let node = env.vars.get(&id).copied();
                VarInfo {
                    name: name.clone(),
                    dom: node.map_or(Spec::Any, |n| env.dom(n).clone()),
                    constrained_var: node.is_some_and(|n| env.var_constrained.contains(&n)),
                }
            })
            .collect();
        ClauseResult {
            pred: clause.pred_id(),
            index,
            loc: clause.loc.clone(),
            args,
            errors: env.errors.clone(),
            warnings: env.warnings.clone(),
            head_failed,
            vars,
            goal_count: env.goal_count,
            unknown_calls: env.unknown_calls.clone(),
        }
    }

    /// Usable for the predicate's inferred postcondition.
    pub fn succeeds(&self) -> bool {
        !self.head_failed && !self.args.iter().any(Spec::is_bottom)
    }
}
