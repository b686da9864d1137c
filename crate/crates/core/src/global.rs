//! Global propagation: clause results become inferred postconditions, which
//! feed the next round of clause analysis until nothing changes.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::analyzer::{analyze_clause, ClauseResult, TypeError, STEP_CAP};
use crate::pred::PredId;
use crate::reader::{Loc, Program, Warning};
use crate::specdb::{Origin, Post, SpecDb};
use crate::typedom::{glb, lub, subtype, Spec, TypeDefs};

/// Global iterations before the analysis gives up on a fixed point.
pub const GLOBAL_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub global_iters: usize,
    pub local_steps: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            global_iters: GLOBAL_CAP,
            local_steps: STEP_CAP,
        }
    }
}

/// Positionwise join of the clause results that can succeed. `None` when no
/// clause can.
pub fn merge_predicate(results: &[&ClauseResult], defs: &TypeDefs) -> Option<Vec<Spec>> {
    let mut ok = results.iter().filter(|r| r.succeeds());
    let first = ok.next()?.args.clone();
    Some(ok.fold(first, |acc, r| {
        acc.iter().zip(&r.args).map(|(a, b)| lub(a, b, defs)).collect()
    }))
}

/// Installs merged conclusions as inferred postconditions. Generated and
/// inferred posts are only ever tightened; user and builtin posts are kept
/// and the inferred one is added beside them. Returns whether any
/// predicate's conditions changed.
pub fn propagate(db: &mut SpecDb, merged: &BTreeMap<PredId, Vec<Spec>>) -> bool {
    let mut changed = false;
    for (id, conclusion) in merged {
        let defs = db.typedefs.clone();
        let Some(c) = db.conditions.get_mut(id) else { continue };
        let replaceable = c
            .posts
            .iter()
            .position(|p| p.origin == Origin::Inferred)
            .or_else(|| c.posts.iter().position(|p| p.origin == Origin::Generated));
        match replaceable {
            Some(i) => {
                let old = &c.posts[i];
                let new: Vec<Spec> = old
                    .conclusion
                    .iter()
                    .zip(conclusion)
                    .map(|(o, n)| glb(o, n, &defs))
                    .collect();
                if new.iter().any(Spec::is_bottom) {
                    continue;
                }
                let tighter = new != old.conclusion;
                if tighter || old.origin != Origin::Inferred {
                    c.posts[i] = Post {
                        premise: vec![Spec::Any; id.arity],
                        conclusion: new,
                        origin: Origin::Inferred,
                    };
                }
                changed |= tighter;
            }
            None => {
                c.posts.push(Post {
                    premise: vec![Spec::Any; id.arity],
                    conclusion: conclusion.clone(),
                    origin: Origin::Inferred,
                });
                changed = true;
            }
        }
    }
    changed
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub db: SpecDb,
    /// Results of the last round, in program order.
    pub results: Vec<ClauseResult>,
    /// Clause errors of the last round and predicates that cannot succeed.
    pub errors: Vec<(PredId, TypeError)>,
    pub warnings: Vec<Warning>,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternates clause analysis (in parallel) with merging and propagation
/// until the conditions stop changing or `caps.global_iters` rounds ran.
pub fn run_analysis(program: &Program, mut db: SpecDb, caps: Caps) -> Analysis {
    let clauses: Vec<_> = program
        .predicates
        .values()
        .flat_map(|cs| cs.iter().enumerate())
        .collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut results;
    let mut warnings = Vec::new();
    loop {
        iterations += 1;
        let snapshot = &db;
        results = clauses
            .par_iter()
            .map(|(i, c)| analyze_clause(c, *i, snapshot, caps.local_steps).1)
            .collect::<Vec<_>>();
        let merged = merge_all(&results, &db.typedefs);
        let changed = propagate(&mut db, &merged);
        log::debug!("global iteration {iterations}: changed={changed}");
        if !changed {
            converged = true;
            break;
        }
        if iterations >= caps.global_iters {
            let loc = program.clauses().next().map_or_else(Loc::unknown, |c| c.loc.clone());
            warnings.push(Warning {
                loc,
                msg: format!("analysis truncated after {iterations} global iterations"),
            });
            break;
        }
    }
    let mut errors: Vec<(PredId, TypeError)> = results
        .iter()
        .flat_map(|r| r.errors.iter().map(|e| (r.pred.clone(), e.clone())))
        .collect();
    for (id, clauses) in &program.predicates {
        let mine: Vec<&ClauseResult> = results.iter().filter(|r| &r.pred == id).collect();
        if !clauses.is_empty() && mine.iter().all(|r| !r.succeeds()) && !mine.iter().all(|r| !r.errors.is_empty()) {
            errors.push((
                id.clone(),
                TypeError {
                    loc: clauses[0].loc.clone(),
                    msg: format!("no clause of {id} can succeed"),
                    expected: None,
                    actual: None,
                },
            ));
        }
    }
    warnings.extend(results.iter().flat_map(|r| r.warnings.iter().cloned()));
    Analysis {
        db,
        results,
        errors,
        warnings,
        iterations,
        converged,
    }
}

fn merge_all(results: &[ClauseResult], defs: &TypeDefs) -> BTreeMap<PredId, Vec<Spec>> {
    let mut by_pred: BTreeMap<&PredId, Vec<&ClauseResult>> = BTreeMap::new();
    for r in results {
        by_pred.entry(&r.pred).or_default().push(r);
    }
    by_pred
        .into_iter()
        .filter_map(|(id, rs)| merge_predicate(&rs, defs).map(|m| (id.clone(), m)))
        .collect()
}

/// Positionwise subtype.
pub fn vector_le(a: &[Spec], b: &[Spec], defs: &TypeDefs) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| subtype(x, y, defs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reader::{parse_source, parse_term, Dialect};
    use crate::specdb::load_builtin_db;
    use crate::typedom::{normalize, parse_spec_list};

    fn specs(s: &str) -> Vec<Spec> {
        let defs = TypeDefs::new(Dialect::Swipl);
        parse_spec_list(&parse_term(s, Dialect::Swipl).unwrap().term)
            .unwrap()
            .iter()
            .map(|x| normalize(x, &defs))
            .collect()
    }

    fn analyze(src: &str) -> (Program, Analysis) {
        let program = parse_source("t.pl", src, Dialect::Swipl);
        let mut db = load_builtin_db(Dialect::Swipl).unwrap();
        db.load_program(&program);
        let a = run_analysis(&program, db, Caps::default());
        (program, a)
    }

    fn inferred(a: &Analysis, name: &str, arity: usize) -> Vec<Spec> {
        a.db.conditions[&PredId::user(name, arity)]
            .inferred_post()
            .unwrap_or_else(|| panic!("no inferred post for {name}/{arity}"))
            .conclusion
            .clone()
    }

    const APPEND: &str = "
        append([], L, L).
        append([H|T], L, [H|R]) :- append(T, L, R).
    ";

    const RATE_MY_SHIP: &str = "
        ship(Ship) :- member(Ship, [destiny, galactica, enterprise]).
        rating(stars(Rate)) :- member(Rate, [1, 2, 3, 4, 5]).
        rate_my_ship(S, R) :- ship(S), rating(R).
    ";

    #[test]
    fn append_merges_clause_results() {
        let (_, a) = analyze(APPEND);
        let args: Vec<_> = a.results.iter().map(|r| r.args.clone()).collect();
        assert_eq!(args, vec![specs("[list(any), any, any]"), specs("[list(any), any, list(any)]")]);
        assert_eq!(inferred(&a, "append", 3), specs("[list(any), any, any]"));
        assert!(a.errors.is_empty());
        assert!(a.converged);
    }

    #[test]
    fn rate_my_ship_converges_in_three_iterations() {
        let (_, a) = analyze(RATE_MY_SHIP);
        assert_eq!(a.iterations, 3);
        assert_eq!(inferred(&a, "ship", 1), specs("[atom]"));
        assert_eq!(inferred(&a, "rating", 1), specs("[compound(stars(int))]"));
        assert_eq!(inferred(&a, "rate_my_ship", 2), specs("[atom, compound(stars(int))]"));
    }

    #[test]
    fn converged_db_does_not_change() {
        let (program, a) = analyze(RATE_MY_SHIP);
        let again = run_analysis(&program, a.db.clone(), Caps::default());
        assert_eq!(again.iterations, 1);
        for (id, c) in &a.db.conditions {
            assert_eq!(&again.db.conditions[id], c);
        }
        assert!(!propagate(&mut a.db.clone(), &merge_all(&a.results, &a.db.typedefs)));
    }

    #[test]
    fn user_posts_are_kept() {
        let (_, a) = analyze(":- spec_post(p/1, [any], [any]).\np(1).");
        let posts = &a.db.conditions[&PredId::user("p", 1)].posts;
        assert_eq!(posts[0].origin, Origin::User);
        assert_eq!(posts[0].conclusion, vec![Spec::Any]);
        assert_eq!(inferred(&a, "p", 1), vec![Spec::Int]);
    }

    #[test]
    fn empty_program_takes_one_iteration() {
        let (_, a) = analyze("");
        assert_eq!(a.iterations, 1);
        assert!(a.results.is_empty() && a.errors.is_empty());
    }

    #[test]
    fn merge_is_sound_and_order_independent() {
        let (_, a) = analyze("p(1, [a]). p(b, []). p(f(x), [1, 2]). p(X, Y) :- atom(X), Y = [X].");
        let defs = &a.db.typedefs;
        let rs: Vec<&ClauseResult> = a.results.iter().collect();
        let merged = merge_predicate(&rs, defs).unwrap();
        for r in &rs {
            assert!(vector_le(&r.args, &merged, defs), "{:?} vs {:?}", r.args, merged);
        }
        let mut rev = rs.clone();
        rev.reverse();
        assert_eq!(merge_predicate(&rev, defs), Some(merged.clone()));
        rev.swap(0, 2);
        assert_eq!(merge_predicate(&rev, defs), Some(merged));
    }

    #[test]
    fn predicate_that_cannot_succeed() {
        let (_, a) = analyze(":- spec_pre(p/1, [atom]).\np(1).\np(2).");
        // each clause already reports why it fails
        assert_eq!(a.errors.len(), 2, "{:?}", a.errors);
        assert!(a.results.iter().all(|r| !r.succeeds()));
        assert!(a.db.conditions[&PredId::user("p", 1)].inferred_post().is_none());
    }

    #[test]
    fn mutual_recursion_terminates() {
        let (_, a) = analyze(
            "even(0). even(N) :- N > 0, M is N - 1, odd(M).
             odd(N) :- N > 0, M is N - 1, even(M).",
        );
        assert!(a.iterations <= GLOBAL_CAP);
        assert!(a.errors.is_empty(), "{:?}", a.errors);
    }
}
