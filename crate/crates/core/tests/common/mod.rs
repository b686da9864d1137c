//! Shared fixtures for integration tests: a random spec generator and the
//! enumerated term corpus used as a membership oracle.
#![allow(dead_code)]

use plstatic::reader::{parse_term, Dialect, Term};
use plstatic::typedom::{normalize, Spec, TypeDefs};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn term(s: &str) -> Term {
    parse_term(s, Dialect::Swipl).expect("fixture term parses").term
}

const LEAVES: [Spec; 12] = [
    Spec::Any,
    Spec::Var,
    Spec::Nonvar,
    Spec::Ground,
    Spec::CompoundAny,
    Spec::Atomic,
    Spec::Atom,
    Spec::Str,
    Spec::Number,
    Spec::Int,
    Spec::Float,
    Spec::EmptyList,
];

/// A random spec of nesting depth at most `depth`, over the functors and
/// atoms that occur in the corpus. Not normalized.
pub fn random_spec<R: Rng>(rng: &mut R, depth: u32) -> Spec {
    let structured = depth > 0 && rng.gen_bool(0.4);
    if !structured {
        return match rng.gen_range(0..14) {
            12 => Spec::exact("a"),
            13 => Spec::exact("b"),
            i => LEAVES[i].clone(),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => Spec::List(Box::new(random_spec(rng, d))),
        1 => {
            let n = rng.gen_range(1..=2);
            Spec::Tuple((0..n).map(|_| random_spec(rng, d)).collect())
        }
        2 => {
            let (f, n) = *[("f", 1), ("f", 2), ("node", 3)].choose(rng).expect("non-empty");
            Spec::Compound(f.into(), (0..n).map(|_| random_spec(rng, d)).collect())
        }
        3 => Spec::Compound(".".into(), vec![random_spec(rng, d), random_spec(rng, d.min(1))]),
        4 | 5 => {
            let n = rng.gen_range(2..=3);
            Spec::OneOf((0..n).map(|_| random_spec(rng, d)).collect())
        }
        _ => Spec::And(vec![random_spec(rng, d), random_spec(rng, d)]),
    }
}

pub fn random_normal_spec<R: Rng>(rng: &mut R, depth: u32, defs: &TypeDefs) -> Spec {
    normalize(&random_spec(rng, depth), defs)
}

/// Terms of depth at most two over atoms `a`, `b`, integers 1 and 2, the
/// float 1.5, one string, one variable, `[]`, functors f/1, f/2, node/3 and
/// lists of length up to three. Depth-two terms are built over a fixed
/// subset of depth-one terms to keep the corpus small.
pub fn term_corpus() -> Vec<Term> {
    let d0 = ["a", "b", "1", "2", "1.5", "\"s\"", "X", "[]"];
    let small = ["a", "1", "X", "[]"];
    let mut d1: Vec<String> = Vec::new();
    for x in d0 {
        d1.push(format!("f({x})"));
        d1.push(format!("[{x}]"));
        for y in d0 {
            d1.push(format!("[{x}, {y}]"));
        }
    }
    for x in small {
        for y in small {
            d1.push(format!("f({x}, {y})"));
            for z in ["a", "1", "X"] {
                d1.push(format!("node({x}, {y}, {z})"));
                d1.push(format!("[{x}, {y}, {z}]"));
            }
        }
    }
    d1.push("[a|X]".into());
    d1.push("[1, 2|X]".into());
    let inner: Vec<&String> = d1.iter().step_by(7).collect();
    let mut d2: Vec<String> = Vec::new();
    for x in &inner {
        d2.push(format!("f({x})"));
        d2.push(format!("[{x}]"));
        d2.push(format!("[1, {x}]"));
        d2.push(format!("f({x}, a)"));
        d2.push(format!("node({x}, 1, 2)"));
    }
    d2.push("[[1], [a, b]]".into());
    d2.push("[[], [[]]]".into());
    d2.push("[f(a), f(1), f(X)]".into());
    d0.iter()
        .map(|s| s.to_string())
        .chain(d1)
        .chain(d2)
        .map(|s| term(&s))
        .collect()
}
