use std::collections::BTreeSet;

use super::{bind, local_fixpoint, resolve_type_vars, ClauseResult, EdgeLabel, Env, NodeId, NodeKind, UnknownCall};
use crate::reader::{Clause, Term, TermKind};
use crate::specdb::{Conditions, SpecDb};
use crate::typedom::{display_vec, glb, lub, lub_all, normalize, subtype, Spec, TypeDefs};

/// Head arguments, each narrowed by the join of the predicate's
/// preconditions, plus the watcher: an artificial list of all arguments
/// whose domain admits exactly the precondition vectors.
pub fn init_env(clause: &Clause, pres: &[Vec<Spec>], defs: &TypeDefs) -> Env {
    let mut env = Env::new();
    env.set_context(&clause.head.loc, format!("head of {}", clause.pred_id()));
    let args: Vec<NodeId> = clause.head.args().iter().map(|a| env.intern(a, true)).collect();
    env.head_args = args.clone();
    for (i, &n) in args.iter().enumerate() {
        let joined = lub_all(&pres.iter().map(|p| p[i].strip_markers()).collect::<Vec<_>>(), defs);
        if joined == Spec::Var {
            env.var_constrained.insert(n);
        }
        let new = glb(env.dom(n), &joined, defs);
        env.update(n, new, &joined);
    }
    let watcher = env.artificial_list(&args, &clause.head.loc);
    let tuples: Vec<Spec> = pres
        .iter()
        .map(|p| {
            let v: Vec<Spec> = p.iter().map(|s| s.strip_markers().widen_var_deep()).collect();
            if v.is_empty() {
                Spec::EmptyList
            } else {
                Spec::Tuple(v)
            }
        })
        .collect();
    env.nodes[watcher].dom = normalize(&Spec::OneOf(tuples), defs);
    env.nodes[watcher].label = format!("watcher {}", display_vec_terms(&env, &args));
    env.watcher = Some(watcher);
    env.add_structural_edges();
    env
}

fn display_vec_terms(env: &Env, ids: &[NodeId]) -> String {
    let labels: Vec<&str> = ids.iter().map(|&n| env.nodes[n].label.as_str()).collect();
    format!("[{}]", labels.join(", "))
}

/// Indices of the preconditions compatible with the argument domains.
/// Unbound variables are compatible with any precondition.
pub fn check_pre(env: &Env, args: &[NodeId], conds: &Conditions, defs: &TypeDefs) -> Vec<usize> {
    conds
        .effective_pres()
        .iter()
        .enumerate()
        .filter(|(_, pre)| {
            args.iter()
                .zip(pre.iter())
                .all(|(&a, p)| !glb(&env.dom(a).widen_var_deep(), &p.strip_markers(), defs).is_bottom())
        })
        .map(|(i, _)| i)
        .collect()
}

/// Narrows arguments by the surviving preconditions. A precondition never
/// turns an unbound variable into a bound one.
fn narrow_by_pres(env: &mut Env, args: &[NodeId], pres: &[&Vec<Spec>], defs: &TypeDefs) {
    for (i, &a) in args.iter().enumerate() {
        let joined = lub_all(&pres.iter().map(|p| p[i].strip_markers()).collect::<Vec<_>>(), defs);
        if joined == Spec::Var {
            env.var_constrained.insert(a);
        }
        let allowed = match &env.nodes[a].kind {
            NodeKind::Var { .. } if env.dom(a).admits_var() => lub(&Spec::Var, &joined, defs),
            NodeKind::Var { .. } => joined,
            _ => normalize(&admit_var_inside(&joined), defs),
        };
        let new = glb(env.dom(a), &allowed, defs);
        if !new.is_bottom() {
            env.update(a, new, &allowed);
        }
    }
}

/// Lets every argument position below the top admit an unbound variable.
fn admit_var_inside(s: &Spec) -> Spec {
    let opt = |x: &Spec| Spec::OneOf(vec![Spec::Var, admit_var_inside(x)]);
    match s {
        Spec::List(e) => Spec::List(Box::new(opt(e))),
        Spec::Tuple(xs) => Spec::Tuple(xs.iter().map(opt).collect()),
        Spec::Compound(f, xs) => Spec::Compound(f.clone(), xs.iter().map(opt).collect()),
        Spec::OneOf(xs) => Spec::OneOf(xs.iter().map(admit_var_inside).collect()),
        other => other.clone(),
    }
}

/// Applies every postcondition whose premise covers the argument domains.
/// Conclusions carrying `union`/`compatible` markers are attached through
/// holder nodes and fresh type variables.
pub fn apply_post(env: &mut Env, args: &[NodeId], conds: &Conditions, defs: &TypeDefs) {
    for post in &conds.posts {
        let applicable = args
            .iter()
            .zip(&post.premise)
            .all(|(&a, q)| subtype(env.dom(a), &q.strip_markers(), defs));
        if !applicable {
            continue;
        }
        let mut tvs: Vec<(String, NodeId)> = Vec::new();
        for (&a, c) in args.iter().zip(&post.conclusion) {
            if *c == Spec::Var {
                env.var_constrained.insert(a);
            }
            if env.dom(a).is_bottom() {
                continue;
            }
            let plain = c.strip_markers();
            let new = bind(env.dom(a), &plain, defs);
            env.update(a, new, &plain);
            if c.has_markers() {
                attach_markers(env, a, c, &mut tvs);
            }
        }
    }
}

fn attach_markers(env: &mut Env, source: NodeId, template: &Spec, tvs: &mut Vec<(String, NodeId)>) {
    let loc = env.nodes[source].loc.clone();
    let label = env.fresh_name();
    let holder = env.add_node(
        NodeKind::Holder {
            template: template.clone(),
        },
        label,
        template.strip_markers(),
        true,
        loc.clone(),
    );
    env.add_edge(source, holder, EdgeLabel::HasType);
    let mut markers = BTreeSet::new();
    collect_markers(template, &mut markers);
    for (union, name) in markers {
        let tv = match tvs.iter().find(|(n, _)| *n == name) {
            Some(&(_, tv)) => tv,
            None => {
                let label = format!("{}({name})", env.fresh_name());
                let tv = env.add_node(NodeKind::TypeVar { name: name.clone() }, label, Spec::Any, true, loc.clone());
                tvs.push((name.clone(), tv));
                tv
            }
        };
        let edge = if union {
            EdgeLabel::Union(name)
        } else {
            EdgeLabel::Compatible(name)
        };
        env.add_edge(holder, tv, edge);
    }
}

fn collect_markers(s: &Spec, out: &mut BTreeSet<(bool, String)>) {
    match s {
        Spec::Union(n) => {
            out.insert((true, n.clone()));
        }
        Spec::Compatible(n) => {
            out.insert((false, n.clone()));
        }
        Spec::List(e) => collect_markers(e, out),
        Spec::Tuple(xs) | Spec::Compound(_, xs) | Spec::OneOf(xs) | Spec::And(xs) | Spec::User(_, xs) => {
            xs.iter().for_each(|x| collect_markers(x, out))
        }
        _ => {}
    }
}

struct Analyzer<'a> {
    env: Env,
    db: &'a SpecDb,
    module: &'a str,
    cap: usize,
}

/// Runs the clause-local analysis: head and watcher, each body goal in
/// order, then type variables and structure to a fixed point.
pub fn analyze_clause(clause: &Clause, index: usize, db: &SpecDb, step_cap: usize) -> (Env, ClauseResult) {
    let defs = &db.typedefs;
    let id = clause.pred_id();
    let pres = db
        .conditions
        .get(&id)
        .map(|c| c.effective_pres())
        .unwrap_or_else(|| vec![vec![Spec::Any; id.arity]]);
    let env = init_env(clause, &pres, defs);
    let mut a = Analyzer {
        env,
        db,
        module: &clause.module,
        cap: step_cap,
    };
    a.fixpoint();
    let head_failed = !a.env.errors.is_empty();
    for g in &clause.body {
        a.goal(g);
    }
    a.env.context = None;
    a.env.add_structural_edges();
    resolve_type_vars(&mut a.env, defs);
    a.fixpoint();
    let result = ClauseResult::from_env(clause, index, &a.env, head_failed, defs);
    (a.env, result)
}

impl Analyzer<'_> {
    fn defs(&self) -> &TypeDefs {
        &self.db.typedefs
    }

    fn fixpoint(&mut self) {
        local_fixpoint(&mut self.env, &self.db.typedefs, self.cap);
    }

    fn goal(&mut self, g: &Term) {
        if g.is_var() {
            return self.unknown(g);
        }
        let args = g.args();
        match g.functor() {
            Some((",", 2)) => {
                self.goal(&args[0]);
                self.goal(&args[1]);
            }
            Some((";", 2)) => {
                let left = &args[0];
                let branches: Vec<Vec<&Term>> = if left.is_functor("->", 2) || left.is_functor("*->", 2) {
                    vec![vec![&left.args()[0], &left.args()[1]], vec![&args[1]]]
                } else {
                    vec![vec![left], vec![&args[1]]]
                };
                self.disjunction(g, &branches);
            }
            Some(("->", 2)) | Some(("*->", 2)) => {
                self.goal(&args[0]);
                self.goal(&args[1]);
            }
            Some(("\\+", 1)) | Some(("not", 1)) => self.env.goal_count += 1,
            Some(("=", 2)) => self.unify_goal(g),
            Some(("call", n)) if n >= 1 => self.unknown(g),
            Some((":", 2)) if args[1].is_var() => self.unknown(g),
            _ => self.call(g),
        }
    }

    fn unknown(&mut self, g: &Term) {
        self.env.goal_count += 1;
        let goal = match g.functor() {
            Some((":", 2)) => g.args()[1]
                .functor()
                .map(|(n, a)| format!("{}:{n}/{a}", g.args()[0]))
                .unwrap_or_else(|| g.to_string()),
            Some((n, a)) => format!("{n}/{a}"),
            None => g.to_string(),
        };
        self.env.unknown_calls.push(UnknownCall { loc: g.loc.clone(), goal });
        // keep the variables known to the environment
        let target = if g.is_functor(":", 2) { &g.args()[1] } else { g };
        for a in target.args() {
            self.env.intern(a, false);
        }
        self.env.add_structural_edges();
    }

    fn unify_goal(&mut self, g: &Term) {
        self.env.goal_count += 1;
        self.env.set_context(&g.loc, format!("{g}"));
        let a = self.env.intern(&g.args()[0], false);
        let b = self.env.intern(&g.args()[1], false);
        self.env.add_structural_edges();
        self.env.add_edge(a, b, EdgeLabel::Link);
        self.fixpoint();
    }

    fn call(&mut self, g: &Term) {
        let db = self.db;
        let Some(resolved) = db.lookup(g, self.module) else {
            return self.unknown(g);
        };
        self.env.goal_count += 1;
        let id = resolved.id;
        let conds = resolved.conditions;
        self.env.set_context(&g.loc, format!("call to {id}"));
        let target = if g.is_functor(":", 2) { &g.args()[1] } else { g };
        let args: Vec<NodeId> = target.args().iter().map(|a| self.env.intern(a, false)).collect();
        self.env.add_structural_edges();
        self.fixpoint();
        if args.iter().any(|&a| self.env.dom(a).is_bottom()) {
            return;
        }
        let survivors = check_pre(&self.env, &args, conds, self.defs());
        if survivors.is_empty() {
            self.report_pre_failure(g, id.to_string(), &args, conds);
            return;
        }
        let pres = conds.effective_pres();
        let chosen: Vec<&Vec<Spec>> = survivors.iter().map(|&i| &pres[i]).collect();
        narrow_by_pres(&mut self.env, &args, &chosen, &db.typedefs);
        apply_post(&mut self.env, &args, conds, &db.typedefs);
        self.fixpoint();
    }

    fn report_pre_failure(&mut self, g: &Term, id: String, args: &[NodeId], conds: &Conditions) {
        let defs = &self.db.typedefs;
        let pres = conds.effective_pres();
        let fits = |i: usize, p: &Vec<Spec>| {
            !glb(&self.env.dom(args[i]).widen_var_deep(), &p[i].strip_markers(), defs).is_bottom()
        };
        let pos = (0..args.len())
            .find(|&i| pres.iter().all(|p| !fits(i, p)))
            .or_else(|| (0..args.len()).find(|&i| !fits(i, &pres[0])))
            .unwrap_or(0);
        let expected = normalize(&Spec::OneOf(pres.iter().map(|p| p[pos].strip_markers()).collect()), defs);
        let actual = self.env.dom(args[pos]).clone();
        let listed: Vec<String> = pres.iter().map(|p| display_vec(p)).collect();
        let msg = format!(
            "no precondition satisfiable for {id}: argument {} is {actual}, expected {expected} (preconditions {})",
            pos + 1,
            listed.join(", ")
        );
        self.env.error(&g.loc, msg, Some(expected), Some(actual));
    }

    /// Analyzes each branch on a copy of the environment and joins the
    /// domains of the nodes that existed before the branches.
    fn disjunction(&mut self, g: &Term, branches: &[Vec<&Term>]) {
        let mut vars = Vec::new();
        collect_vars(g, &mut vars);
        for v in vars {
            self.env.intern(v, false);
        }
        let base = self.env.clone();
        let n = base.nodes.len();
        let mut outcomes = Vec::new();
        for branch in branches {
            self.env = base.clone();
            for goal in branch {
                self.goal(goal);
            }
            self.fixpoint();
            outcomes.push(std::mem::take(&mut self.env));
        }
        let defs = &self.db.typedefs;
        let mut joined = base.clone();
        for (i, node) in joined.nodes.iter_mut().enumerate().take(n) {
            node.dom = outcomes
                .iter()
                .map(|o| o.nodes[i].dom.clone())
                .fold(Spec::Bottom, |acc, d| lub(&acc, &d, defs));
        }
        for o in &outcomes {
            joined.errors.extend(o.errors[base.errors.len()..].iter().cloned());
            joined.warnings.extend(o.warnings[base.warnings.len()..].iter().cloned());
            joined.unknown_calls.extend(o.unknown_calls[base.unknown_calls.len()..].iter().cloned());
            joined.goal_count += o.goal_count - base.goal_count;
            joined.var_constrained.extend(o.var_constrained.iter().copied().filter(|&v| v < n));
            joined.next_fresh = joined.next_fresh.max(o.next_fresh);
        }
        self.env = joined;
        self.fixpoint();
    }
}

fn collect_vars<'t>(t: &'t Term, out: &mut Vec<&'t Term>) {
    match &t.kind {
        TermKind::Var { .. } => out.push(t),
        TermKind::Compound { args, .. } => args.iter().for_each(|a| collect_vars(a, out)),
        _ => {}
    }
}
