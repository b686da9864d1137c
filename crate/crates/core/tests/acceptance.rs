//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{random_normal_spec, term, term_corpus};
use plstatic::analyzer::{analyze_clause, ClauseResult, STEP_CAP};
use plstatic::global::{run_analysis, Analysis, Caps, GLOBAL_CAP};
use plstatic::pred::PredId;
use plstatic::reader::{parse_source, Dialect, Program};
use plstatic::report::{collect_diagnostics, compute_stats, emit_annotations, render_report, Format};
use plstatic::specdb::{load_builtin_db, Origin, SpecDb};
use plstatic::typedom::{generalize, glb, inhabits, lub, normalize, parse_spec, subtype, Spec, TypeDefs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<(), String>;

/// Name, check and time limit.
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn spec(s: &str) -> Spec {
    let defs = TypeDefs::new(Dialect::Swipl);
    normalize(&parse_spec(&term(s)).expect("fixture spec parses"), &defs)
}

fn specs(s: &str) -> Vec<Spec> {
    let defs = TypeDefs::new(Dialect::Swipl);
    plstatic::typedom::parse_spec_list(&term(s))
        .expect("fixture spec list parses")
        .iter()
        .map(|x| normalize(x, &defs))
        .collect()
}

fn prepare(src: &str) -> (Program, SpecDb) {
    let program = parse_source("fixture.pl", src, Dialect::Swipl);
    let mut db = load_builtin_db(Dialect::Swipl).expect("builtin data loads");
    db.load_program(&program);
    (program, db)
}

fn analyze(src: &str) -> (Program, Analysis) {
    let (program, db) = prepare(src);
    let a = run_analysis(&program, db, Caps::default());
    (program, a)
}

fn clause<'a>(a: &'a Analysis, name: &str, arity: usize, index: usize) -> &'a ClauseResult {
    a.results
        .iter()
        .find(|r| r.pred == PredId::user(name, arity) && r.index == index)
        .expect("clause analyzed")
}

fn var(r: &ClauseResult, name: &str) -> Spec {
    r.vars.iter().find(|v| v.name == name).map_or(Spec::Bottom, |v| v.dom.clone())
}

fn inferred_post(a: &Analysis, name: &str, arity: usize) -> Option<(Vec<Spec>, Vec<Spec>)> {
    let p = a.db.conditions.get(&PredId::user(name, arity))?.inferred_post()?;
    Some((p.premise.clone(), p.conclusion.clone()))
}

fn show(xs: &[Spec]) -> String {
    plstatic::typedom::display_vec(xs)
}

const RATE_MY_SHIP: &str = "
ship(Ship) :- member(Ship, [destiny, galactica, enterprise]).
rating(stars(Rate)) :- member(Rate, [1, 2, 3, 4, 5]).
rate_my_ship(S, R) :- ship(S), rating(R).
";

fn rate_my_ship() -> Outcome {
    let (_, a) = analyze(RATE_MY_SHIP);
    check!(a.converged, "did not converge");
    check!(a.errors.is_empty(), "errors: {:?}", a.errors);
    let r = clause(&a, "rate_my_ship", 2, 0);
    let want_r = spec("compound(stars([atom]))");
    let mut problems = Vec::new();
    if var(r, "S") != Spec::Atom {
        problems.push(format!("S is {}, expected atom", var(r, "S")));
    }
    if var(r, "R") != want_r {
        problems.push(format!("R is {}, expected {want_r}", var(r, "R")));
    }
    let any1 = vec![Spec::Any];
    let ship = inferred_post(&a, "ship", 1);
    if ship != Some((any1.clone(), vec![Spec::Atom])) {
        problems.push(format!("ship/1 post {ship:?}"));
    }
    match inferred_post(&a, "rating", 1) {
        Some((p, c)) if p == any1 && c == vec![want_r.clone()] => {}
        Some((p, c)) => problems.push(format!("rating/1 post {} -> {}, expected [any] -> [{want_r}]", show(&p), show(&c))),
        None => problems.push("rating/1 has no inferred post".into()),
    }
    check!(problems.is_empty(), "{}", problems.join("; "));
    Ok(())
}

fn append() -> Outcome {
    let (_, a) = analyze("append([], L, L).\nappend([H|T], L, [H|R]) :- append(T, L, R).");
    check!(a.errors.is_empty(), "errors: {:?}", a.errors);
    let c0 = &clause(&a, "append", 3, 0).args;
    let c1 = &clause(&a, "append", 3, 1).args;
    check!(*c0 == specs("[list(any), any, any]"), "clause 1 result {}", show(c0));
    check!(*c1 == specs("[list(any), any, list(any)]"), "clause 2 result {}", show(c1));
    let post = inferred_post(&a, "append", 3);
    check!(
        post == Some((vec![Spec::Any; 3], specs("[list(any), any, any]"))),
        "inferred post {post:?}"
    );
    Ok(())
}

fn cake() -> Outcome {
    let (_, a) = analyze(
        ":- spec_pre(cake/2, [atom, int]).
         :- spec_pre(cake/2, [int, atom]).
         cake(X, Y) :- integer(Y).
         cake(X, Y) :- X = 1, Y = 2.",
    );
    let c0 = clause(&a, "cake", 2, 0);
    check!(c0.errors.is_empty(), "first clause errors: {:?}", c0.errors);
    check!(var(c0, "Y") == Spec::Int, "Y is {}", var(c0, "Y"));
    check!(var(c0, "X") == Spec::Atom, "X is {}", var(c0, "X"));
    let c1 = clause(&a, "cake", 2, 1);
    check!(c1.errors.len() == 1, "second clause has {} errors: {:?}", c1.errors.len(), c1.errors);
    Ok(())
}

fn union_compatible() -> Outcome {
    let src = "
        :- spec_post(u/1, [any], [list(union(X))]).
        :- spec_post(c/1, [any], [list(compatible(X))]).
        tu :- u([1, a]).
        tc :- c([1, a]).
        tv(I, A) :- integer(I), atom(A), u([I, A]).
    ";
    let (program, db) = prepare(src);
    let run = |name: &str, arity: usize| {
        let c = &program.predicates[&PredId::user(name, arity)][0];
        analyze_clause(c, 0, &db, STEP_CAP).0
    };
    let want = spec("one_of([int, atom])");
    // the literal keeps its exact atom; the reported type generalizes it
    let env = run("tu", 0);
    let tvs = env.type_vars();
    check!(env.errors.is_empty(), "union errors: {:?}", env.errors);
    check!(tvs.len() == 1, "type variables {tvs:?}");
    let x = generalize(tvs[0].1, &db.typedefs);
    check!(x == want, "union X is {}", tvs[0].1);
    let env = run("tv", 2);
    let tvs = env.type_vars();
    check!(tvs.len() == 1 && *tvs[0].1 == want, "union over typed variables gives {tvs:?}");
    let env = run("tc", 0);
    check!(env.errors.len() == 1, "compatible gives {} errors: {:?}", env.errors.len(), env.errors);
    check!(env.errors[0].msg.contains("type variable"), "message: {}", env.errors[0].msg);
    Ok(())
}

fn tree_table() -> Outcome {
    let program = parse_source(
        "tree.pl",
        ":- defspec(tree, one_of([int, compound(node(tree, int, tree))])).",
        Dialect::Swipl,
    );
    let mut db = SpecDb::new(Dialect::Swipl);
    db.register_annotations(&program.directives, Origin::User);
    check!(db.errors.is_empty(), "defspec errors: {:?}", db.errors);
    let tree = spec("tree");
    let table = [
        ("1", true),
        ("node(1, 2, 3)", true),
        ("node(node(0, 1, 2), 3, 4)", true),
        ("tree(1, 2, 3)", false),
        ("node(a, b, c)", false),
    ];
    let wrong: Vec<_> = table
        .iter()
        .filter(|(t, want)| inhabits(&term(t), &tree, &db.typedefs) != *want)
        .map(|(t, _)| *t)
        .collect();
    check!(wrong.is_empty(), "wrong answers for {wrong:?}");
    Ok(())
}

fn lattice_suite() -> Outcome {
    let defs = TypeDefs::new(Dialect::Swipl);
    let corpus = term_corpus();
    let failures: Vec<String> = (0..10_000u64)
        .into_par_iter()
        .filter_map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_normal_spec(&mut rng, 3, &defs);
            let b = random_normal_spec(&mut rng, 3, &defs);
            lattice_laws(&a, &b, &corpus, &defs).err().map(|e| format!("seed {seed}: {e}"))
        })
        .collect();
    check!(failures.is_empty(), "{} counterexamples, first: {}", failures.len(), failures[0]);
    Ok(())
}

fn lattice_laws(a: &Spec, b: &Spec, corpus: &[plstatic::reader::Term], defs: &TypeDefs) -> Outcome {
    let m = glb(a, b, defs);
    let j = lub(a, b, defs);
    check!(normalize(a, defs) == *a, "normalize not idempotent on {a}");
    check!(subtype(&m, a, defs) && subtype(&m, b, defs), "glb {m} of {a} and {b} is not below both");
    check!(subtype(a, &j, defs) && subtype(b, &j, defs), "lub {j} of {a} and {b} is not above both");
    let sub = subtype(a, b, defs);
    for t in corpus {
        let (ia, ib) = (inhabits(t, a, defs), inhabits(t, b, defs));
        check!((ia && ib) == inhabits(t, &m, defs), "glb {m} of {a} and {b} is inexact on {t}");
        check!(!(ia || ib) || inhabits(t, &j, defs), "lub {j} of {a} and {b} misses {t}");
        check!(!sub || !ia || ib, "{a} <= {b} but {t} is only in {a}");
    }
    Ok(())
}

fn variable_rules() -> Outcome {
    // q/1 has no clauses where a clause would let it infer a post
    let fixtures: [(&str, &str, usize, &str, Spec, usize); 4] = [
        ("own pre binds head variable", ":- spec_pre(p/1, [int]).\np(X) :- true.", 1, "X", Spec::Int, 0),
        ("callee pre does not bind", ":- spec_pre(q/1, [int]).\np :- q(X).", 0, "X", Spec::Var, 0),
        ("callee post binds", ":- spec_post(q/1, [any], [int]).\nq(_).\np :- q(X).", 0, "X", Spec::Int, 0),
        ("bound variable acts as its term", ":- spec_pre(q/1, [int]).\nq(_).\np :- X = a, q(X).", 0, "X", spec("atom(a)"), 1),
    ];
    let mut problems = Vec::new();
    for (what, src, arity, v, want, errors) in fixtures {
        let (_, a) = analyze(src);
        let r = clause(&a, "p", arity, 0);
        let got = var(r, v);
        if got != want || r.errors.len() != errors {
            problems.push(format!("{what}: {v} is {got} with {} errors", r.errors.len()));
        }
    }
    check!(problems.is_empty(), "{}", problems.join("; "));
    Ok(())
}

fn run_cli(src: &str) -> Result<(i32, String), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("fixture.pl");
    std::fs::write(&path, src).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_plstatic"))
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn error_contract() -> Outcome {
    let base = ":- spec_pre(atom_member/2, [one_of([var, atom]), list(atom)]).
atom_member(X, L) :- member(X, L).
";
    let (code, out) = run_cli(&format!("{base}main :- atom_member(1, [a]).\n"))?;
    let errors: Vec<&str> = out.lines().filter(|l| l.contains(": error: ")).collect();
    check!(errors.len() == 1, "{} error lines: {out}", errors.len());
    check!(code == 1, "exit code {code}");
    check!(errors[0].contains("(expected one_of([var, atom]), got int)"), "diagnostic: {}", errors[0]);
    let (code, out) = run_cli(&format!("{base}main :- true.\n"))?;
    check!(code == 0 && out.is_empty(), "clean variant exits {code} with: {out}");
    Ok(())
}

/// Predicates `p<i>/2` with five clauses each, mixing lists, arithmetic,
/// calls to lower-numbered predicates and unknown calls.
fn synthetic_program(clauses: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut src = String::new();
    for i in 0..clauses {
        let p = i / 5;
        let callee = if p > 0 { rng.gen_range(0..p) } else { 0 };
        let body = match rng.gen_range(0..6) {
            0 => "X = [Y|_], integer(Y)".to_string(),
            1 => "Y is X * 2 + 1".to_string(),
            2 if p > 0 => format!("p{callee}(X, Z), Y = f(Z)"),
            3 => "member(Y, X), atom(Y)".to_string(),
            4 => format!("unknown{}(X, Y)", rng.gen_range(0..10)),
            _ => "append(X, [a], Y)".to_string(),
        };
        src.push_str(&format!("p{p}(X, Y) :- {body}.\n"));
    }
    src
}

fn run_report(src: &str) -> (usize, String) {
    let (program, a) = analyze(src);
    let diags = collect_diagnostics(&program, &a);
    let stats = compute_stats(&a.results, &a.db.typedefs);
    let mut out = render_report(&diags, &[(None, stats)], Format::Json, &a.db);
    out.push_str(&emit_annotations(&a.db));
    (a.iterations, out)
}

fn termination() -> Outcome {
    let mutual = "
        even(0).
        even(N) :- N > 0, M is N - 1, odd(M).
        odd(N) :- N > 0, M is N - 1, even(M).
        walk([], []).
        walk([X|Xs], [f(X)|Ys]) :- stroll(Xs, Ys).
        stroll(Xs, Ys) :- walk(Xs, Ys).
    ";
    let synthetic = synthetic_program(1000);
    for (name, src) in [("mutual recursion", mutual), ("synthetic", synthetic.as_str())] {
        let (iters, first) = run_report(src);
        check!(iters <= GLOBAL_CAP, "{name}: {iters} iterations");
        let (_, second) = run_report(src);
        check!(first == second, "{name}: output differs between runs");
    }
    Ok(())
}

fn stats_plumbing() -> Outcome {
    // X: atom, Y: untouched by the unknown call, Z: compound(f(atom)), W: int
    let (program, a) = analyze("p(X, Y) :- atom(X), foo(Y), Z = f(X), integer(W).");
    let stats = compute_stats(&a.results, &a.db.typedefs);
    let diags = collect_diagnostics(&program, &a);
    let text = render_report(&diags, &[(None, stats)], Format::Text, &a.db);
    check!(stats.unknown_pct() == 25.0, "unknown {}% ({} of {})", stats.unknown_pct(), stats.unknown_calls, stats.total_calls);
    check!(stats.inferred_pct() == 75.0, "inferred {}% ({} of {})", stats.inferred_pct(), stats.inferred, stats.variables);
    check!(
        text.contains("inferred: 3 (75%)") && text.contains("unknown calls: 1 (25%)"),
        "report: {text}"
    );
    Ok(())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rate-my-ship golden", rate_my_ship, Duration::from_secs(1)),
        ("append golden", append, Duration::from_secs(1)),
        ("cake watcher", cake, Duration::from_secs(1)),
        ("union/compatible", union_compatible, Duration::from_secs(1)),
        ("tree inhabitation", tree_table, Duration::from_secs(1)),
        ("lattice properties", lattice_suite, Duration::from_secs(60)),
        ("variable rules", variable_rules, Duration::from_secs(1)),
        ("error reporting", error_contract, Duration::from_secs(1)),
        ("termination", termination, Duration::from_secs(30)),
        ("stats plumbing", stats_plumbing, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if took > limit {
                Err(format!("took {took:?}, limit {limit:?}"))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!("PASS {:>2} {name} ({} ms)", i + 1, took.as_millis()),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({} ms): {e}", i + 1, took.as_millis());
            }
        }
        let _ = std::io::stdout().flush();
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
