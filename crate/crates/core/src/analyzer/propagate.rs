use super::{bind, build, unify, EdgeLabel, Env, NodeId, NodeKind};
use crate::reader::{Warning, LIST_CONS};
use crate::typedom::{glb, list_elem, lub, lub_all, Spec, TypeDefs};

/// Propagates along all edges until no domain changes or `cap` sweeps have
/// run. Returns the number of sweeps.
pub fn local_fixpoint(env: &mut Env, defs: &TypeDefs, cap: usize) -> usize {
    for step in 1..=cap {
        if !sweep(env, defs) {
            return step;
        }
    }
    let loc = env
        .context
        .as_ref()
        .map(|c| c.loc.clone())
        .or_else(|| env.nodes.first().map(|n| n.loc.clone()))
        .unwrap_or_else(crate::reader::Loc::unknown);
    env.warnings.push(Warning {
        loc,
        msg: format!("local analysis stopped after {cap} propagation steps"),
    });
    cap
}

fn sweep(env: &mut Env, defs: &TypeDefs) -> bool {
    let mut changed = false;
    // children are interned before their parents
    for p in 0..env.nodes.len() {
        changed |= up(env, p, defs);
    }
    for p in (0..env.nodes.len()).rev() {
        changed |= down(env, p, defs);
    }
    changed |= links(env, defs);
    changed |= resolve_type_vars(env, defs);
    changed
}

/// Tightens a compound from its components.
fn up(env: &mut Env, p: NodeId, defs: &TypeDefs) -> bool {
    let Some((functor, kids)) = env.structural_children(p) else { return false };
    if env.dom(p).is_bottom() || kids.iter().any(|&k| env.dom(k).is_bottom()) {
        return false;
    }
    let cand = build(functor, &kids.iter().map(|&k| env.dom(k).clone()).collect::<Vec<_>>());
    let new = bind(env.dom(p), &cand, defs);
    env.update(p, new, &cand)
}

/// Pushes a compound's component types down to its children.
fn down(env: &mut Env, p: NodeId, defs: &TypeDefs) -> bool {
    let Some((functor, kids)) = env.structural_children(p) else { return false };
    if env.dom(p).is_bottom() {
        return false;
    }
    let kids = kids.to_vec();
    let Some(comps) = components(env.dom(p), functor, kids.len(), defs) else { return false };
    let mut changed = false;
    for (k, c) in kids.into_iter().zip(comps) {
        if env.dom(k).is_bottom() {
            continue;
        }
        let new = bind(env.dom(k), &c, defs);
        changed |= env.update(k, new, &c);
    }
    changed
}

/// Argument types of `functor/n` terms described by `dom`, joined over its
/// alternatives. `None` if `dom` has no such terms.
pub(super) fn components(dom: &Spec, functor: &str, n: usize, defs: &TypeDefs) -> Option<Vec<Spec>> {
    let shaped = glb(dom, &Spec::compound(functor, vec![Spec::Any; n]), defs);
    if shaped.is_bottom() {
        return None;
    }
    let mut acc = vec![Spec::Bottom; n];
    for alt in shaped.alternatives() {
        let parts = if functor == LIST_CONS && n == 2 {
            alt.cons_parts().map(|(h, t)| vec![h, t])
        } else {
            match alt {
                Spec::Compound(f, xs) if f == functor && xs.len() == n => Some(xs.clone()),
                _ => None,
            }
        };
        let parts = parts.unwrap_or_else(|| vec![Spec::Any; n]);
        for (a, x) in acc.iter_mut().zip(parts) {
            *a = lub(a, &x, defs);
        }
    }
    Some(acc)
}

/// Unified terms share one domain.
fn links(env: &mut Env, defs: &TypeDefs) -> bool {
    let pairs: Vec<(NodeId, NodeId)> = env
        .edges
        .iter()
        .filter(|e| e.label == EdgeLabel::Link)
        .map(|e| (e.from, e.to))
        .collect();
    let mut changed = false;
    for (a, b) in pairs {
        if env.dom(a).is_bottom() || env.dom(b).is_bottom() {
            continue;
        }
        let m = unify(env.dom(a), env.dom(b), defs);
        if m.is_bottom() {
            let (da, db) = (env.dom(a).clone(), env.dom(b).clone());
            let msg = format!(
                "cannot unify {} ({da}) with {} ({db})",
                env.nodes[a].label, env.nodes[b].label
            );
            let loc = env.context.as_ref().map_or_else(|| env.nodes[a].loc.clone(), |c| c.loc.clone());
            env.error(&loc, msg, Some(db), Some(da));
            env.nodes[a].dom = Spec::Bottom;
            env.nodes[b].dom = Spec::Bottom;
            changed = true;
            continue;
        }
        let ma = m.clone();
        changed |= env.update(a, ma, &m);
        changed |= env.update(b, m.clone(), &m);
    }
    changed
}

/// A holder's template and the node it constrains.
struct Applied {
    holder: NodeId,
    source: NodeId,
    template: Spec,
}

fn applied(env: &Env, holder: NodeId) -> Option<Applied> {
    let NodeKind::Holder { template } = &env.nodes[holder].kind else { return None };
    let source = env
        .edges
        .iter()
        .find(|e| e.to == holder && e.label == EdgeLabel::HasType)?
        .from;
    Some(Applied {
        holder,
        source,
        template: template.clone(),
    })
}

/// Computes every type variable from its `union` contributors, intersects
/// it with its `compatible` terms, then narrows those terms to it.
pub fn resolve_type_vars(env: &mut Env, defs: &TypeDefs) -> bool {
    let tvs: Vec<NodeId> = (0..env.nodes.len())
        .filter(|&n| matches!(env.nodes[n].kind, NodeKind::TypeVar { .. }))
        .collect();
    let mut changed = false;
    for &tv in &tvs {
        let NodeKind::TypeVar { name } = &env.nodes[tv].kind else { continue };
        let name = name.clone();
        let mut unions = Vec::new();
        let mut compats = Vec::new();
        for e in env.edges.iter().filter(|e| e.to == tv) {
            let Some(a) = applied(env, e.from) else { continue };
            let dom = env.dom(a.source).widen_var_deep();
            match &e.label {
                EdgeLabel::Union(_) => unions.extend(contributions(&a.template, &dom, true, &name, defs)),
                EdgeLabel::Compatible(_) => compats.extend(contributions(&a.template, &dom, false, &name, defs)),
                _ => {}
            }
        }
        if unions.iter().chain(&compats).any(Spec::is_bottom) {
            continue;
        }
        let u = if unions.is_empty() { Spec::Any } else { lub_all(&unions, defs) };
        let x = compats.iter().fold(u, |acc, c| glb(&acc, c, defs));
        if *env.dom(tv) == x {
            continue;
        }
        if x.is_bottom() {
            let label = env.nodes[tv].label.clone();
            let loc = env.context.as_ref().map_or_else(|| env.nodes[tv].loc.clone(), |c| c.loc.clone());
            let shown = Spec::OneOf(compats.clone());
            env.error(&loc, format!("type variable {label} has no type compatible with all of {shown}"), None, Some(shown));
        }
        env.nodes[tv].dom = x;
        changed = true;
    }
    // narrow compatible terms
    for &tv in &tvs {
        if env.dom(tv).is_bottom() {
            continue;
        }
        let holders: Vec<NodeId> = env
            .edges
            .iter()
            .filter(|e| e.to == tv && matches!(e.label, EdgeLabel::Compatible(_)))
            .map(|e| e.from)
            .collect();
        for h in holders {
            let Some(a) = applied(env, h) else { continue };
            if env.dom(a.source).is_bottom() {
                continue;
            }
            let inst = instantiate(env, a.holder, &a.template);
            let new = bind(env.dom(a.source), &inst, defs);
            changed |= env.update(a.source, new, &inst);
        }
    }
    changed
}

/// Replaces `compatible(X)` by the current type of `X` and `union(X)` by
/// `any`.
fn instantiate(env: &Env, holder: NodeId, template: &Spec) -> Spec {
    let tv_of = |name: &str| {
        env.edges_from(holder).find_map(|e| match &e.label {
            EdgeLabel::Compatible(n) | EdgeLabel::Union(n) if n == name => Some(e.to),
            _ => None,
        })
    };
    template.map_children(&|s| match s {
        Spec::Compatible(n) => Some(tv_of(n).map_or(Spec::Any, |tv| env.dom(tv).clone())),
        Spec::Union(_) => Some(Spec::Any),
        _ => None,
    })
}

/// Types that `dom` places at the positions marked `union(name)` (or
/// `compatible(name)`) in `template`. List elements contribute one by one.
fn contributions(template: &Spec, dom: &Spec, union: bool, name: &str, defs: &TypeDefs) -> Vec<Spec> {
    match template {
        Spec::Union(n) if union && n == name => vec![dom.clone()],
        Spec::Compatible(n) if !union && n == name => vec![dom.clone()],
        Spec::List(t) => list_contributions(t, dom, union, name, defs),
        Spec::Tuple(ts) => {
            let mut out = Vec::new();
            let mut cur = dom.clone();
            for t in ts {
                let Some(parts) = components(&cur, LIST_CONS, 2, defs) else { break };
                out.extend(contributions(t, &parts[0], union, name, defs));
                cur = parts[1].clone();
            }
            out
        }
        Spec::Compound(f, ts) => match components(dom, f, ts.len(), defs) {
            Some(parts) => ts
                .iter()
                .zip(parts)
                .flat_map(|(t, p)| contributions(t, &p, union, name, defs))
                .collect(),
            None => Vec::new(),
        },
        _ => Vec::new(),
    }
}

fn list_contributions(elem: &Spec, dom: &Spec, union: bool, name: &str, defs: &TypeDefs) -> Vec<Spec> {
    match dom {
        Spec::Tuple(xs) => xs.iter().flat_map(|x| contributions(elem, x, union, name, defs)).collect(),
        Spec::Compound(f, xs) if f == LIST_CONS && xs.len() == 2 => {
            let mut out = contributions(elem, &xs[0], union, name, defs);
            out.extend(list_contributions(elem, &xs[1], union, name, defs));
            out
        }
        Spec::EmptyList => Vec::new(),
        other => contributions(elem, &list_elem(other, defs), union, name, defs),
    }
}
