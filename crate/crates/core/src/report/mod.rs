//! Diagnostics, inferred annotations and corpus statistics.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analyzer::ClauseResult;
use crate::global::Analysis;
use crate::reader::{Loc, Program, ReadError};
use crate::specdb::{Origin, SpecDb};
use crate::typedom::{display_vec, subtype, Spec, TypeDefs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(serialize_with = "ser_display")]
    pub loc: Loc,
    pub message: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
    /// Predicate whose clause raised the diagnostic.
    pub predicate: Option<String>,
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl Diagnostic {
    fn new(severity: Severity, loc: Loc, message: String) -> Self {
        Diagnostic {
            severity,
            loc,
            message,
            expected: None,
            actual: None,
            predicate: None,
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}: {}", self.loc, self.severity, self.message)?;
        match (&self.expected, &self.actual) {
            (Some(e), Some(a)) => write!(f, " (expected {e}, got {a})"),
            (Some(e), None) => write!(f, " (expected {e})"),
            (None, Some(a)) => write!(f, " (got {a})"),
            (None, None) => Ok(()),
        }
    }
}

/// Everything worth telling the user, ordered by location.
pub fn collect_diagnostics(program: &Program, analysis: &Analysis) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for e in &program.errors {
        let loc = match e {
            ReadError::Io { path, .. } => Loc::new(path.as_str().into(), 0, 0),
            _ => e.loc().cloned().unwrap_or_else(Loc::unknown),
        };
        let msg = match e {
            ReadError::Lex { msg, .. } | ReadError::Parse { msg, .. } => format!("syntax error: {msg}"),
            ReadError::Io { msg, .. } => msg.clone(),
        };
        out.push(Diagnostic::new(Severity::Error, loc, msg));
    }
    for e in &analysis.db.errors {
        out.push(Diagnostic::new(Severity::Error, e.loc.clone(), e.msg.clone()));
    }
    for (pred, e) in &analysis.errors {
        out.push(Diagnostic {
            severity: Severity::Error,
            loc: e.loc.clone(),
            message: e.msg.clone(),
            expected: e.expected.as_ref().map(Spec::to_string),
            actual: e.actual.as_ref().map(Spec::to_string),
            predicate: Some(pred.to_string()),
        });
    }
    for w in program.warnings.iter().chain(&analysis.warnings) {
        out.push(Diagnostic::new(Severity::Warning, w.loc.clone(), w.msg.clone()));
    }
    out.sort_by(|a, b| (&a.loc, a.severity).cmp(&(&b.loc, b.severity)));
    out
}

/// 1 iff some diagnostic is an error.
pub fn exit_code(diags: &[Diagnostic]) -> i32 {
    i32::from(diags.iter().any(|d| d.severity == Severity::Error))
}

/// Variable and call counts. Variables are counted once per distinct name
/// per clause; `_` is not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub variables: usize,
    /// Variables whose final type is strictly below `any`.
    pub inferred: usize,
    pub unknown_calls: usize,
    pub total_calls: usize,
}

fn pct(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        (n as f64 * 10000.0 / d as f64).round() / 100.0
    }
}

impl Stats {
    pub fn inferred_pct(&self) -> f64 {
        pct(self.inferred, self.variables)
    }

    pub fn unknown_pct(&self) -> f64 {
        pct(self.unknown_calls, self.total_calls)
    }

    pub fn add(&mut self, other: &Stats) {
        self.variables += other.variables;
        self.inferred += other.inferred;
        self.unknown_calls += other.unknown_calls;
        self.total_calls += other.total_calls;
    }
}

impl std::fmt::Display for Stats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "variables: {}, inferred: {} ({}%), goals: {}, unknown calls: {} ({}%)",
            self.variables,
            self.inferred,
            self.inferred_pct(),
            self.total_calls,
            self.unknown_calls,
            self.unknown_pct()
        )
    }
}

#[derive(Serialize)]
struct StatsRecord<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    variables: usize,
    inferred: usize,
    inferred_pct: f64,
    unknown_calls: usize,
    total_calls: usize,
    unknown_pct: f64,
}

impl Stats {
    fn record<'a>(&self, name: Option<&'a str>) -> StatsRecord<'a> {
        StatsRecord {
            name,
            variables: self.variables,
            inferred: self.inferred,
            inferred_pct: self.inferred_pct(),
            unknown_calls: self.unknown_calls,
            total_calls: self.total_calls,
            unknown_pct: self.unknown_pct(),
        }
    }
}

/// A variable typed `var` counts only if an annotation asked for `var`; an
/// untouched body variable carries no information.
pub fn is_inferred(dom: &Spec, constrained_var: bool, defs: &TypeDefs) -> bool {
    !dom.is_bottom() && !subtype(&Spec::Any, dom, defs) && (*dom != Spec::Var || constrained_var)
}

pub fn compute_stats<'a>(results: impl IntoIterator<Item = &'a ClauseResult>, defs: &TypeDefs) -> Stats {
    let mut s = Stats::default();
    for r in results {
        s.variables += r.vars.len();
        s.inferred += r.vars.iter().filter(|v| is_inferred(&v.dom, v.constrained_var, defs)).count();
        s.unknown_calls += r.unknown_calls.len();
        s.total_calls += r.goal_count;
    }
    s
}

/// Stats for the clauses read from under `root`.
pub fn stats_for_path(results: &[ClauseResult], root: &Path, defs: &TypeDefs) -> Stats {
    compute_stats(results.iter().filter(|r| Path::new(&*r.loc.file).starts_with(root)), defs)
}

/// `:- spec_pre` directives for generated preconditions and `:- spec_post`
/// directives for inferred postconditions, ordered by predicate.
pub fn emit_annotations(db: &SpecDb) -> String {
    let mut out = String::new();
    for (id, c) in &db.conditions {
        if c.origin == Origin::Generated {
            for pre in &c.pres {
                let _ = writeln!(out, ":- spec_pre({id}, {}).", display_vec(pre));
            }
        }
        for p in c.posts.iter().filter(|p| p.origin == Origin::Inferred) {
            let _ = writeln!(
                out,
                ":- spec_post({id}, {}, {}).",
                display_vec(&p.premise),
                display_vec(&p.conclusion)
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Annotations,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record<'a> {
    Diagnostic(&'a Diagnostic),
    Stats(StatsRecord<'a>),
}

/// Renders diagnostics and stats rows (`None` names the total). Text
/// prints stats only when rows are given; json always ends with the total;
/// annotations prints the inferred directives, with stats as comments.
pub fn render_report(diags: &[Diagnostic], stats: &[(Option<&str>, Stats)], format: Format, db: &SpecDb) -> String {
    let mut out = String::new();
    match format {
        Format::Text => {
            for d in diags {
                let _ = writeln!(out, "{d}");
            }
            for (name, s) in stats {
                let _ = writeln!(out, "{}: {s}", name.unwrap_or("total"));
            }
        }
        Format::Json => {
            for d in diags {
                let _ = writeln!(out, "{}", serde_json::to_string(&Record::Diagnostic(d)).expect("serializable"));
            }
            for (name, s) in stats {
                let _ = writeln!(out, "{}", serde_json::to_string(&Record::Stats(s.record(*name))).expect("serializable"));
            }
        }
        Format::Annotations => {
            out.push_str(&emit_annotations(db));
            for (name, s) in stats {
                let _ = writeln!(out, "% {}: {s}", name.unwrap_or("total"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::{run_analysis, Caps};
    use crate::pred::PredId;
    use crate::reader::{parse_source, Dialect};
    use crate::specdb::load_builtin_db;

    fn analyze(src: &str) -> (Program, Analysis) {
        let program = parse_source("t.pl", src, Dialect::Swipl);
        let mut db = load_builtin_db(Dialect::Swipl).unwrap();
        db.load_program(&program);
        let a = run_analysis(&program, db, Caps::default());
        (program, a)
    }

    const RATE_MY_SHIP: &str = "
        ship(Ship) :- member(Ship, [destiny, galactica, enterprise]).
        rating(stars(Rate)) :- member(Rate, [1, 2, 3, 4, 5]).
        rate_my_ship(S, R) :- ship(S), rating(R).
    ";

    #[test]
    fn rate_my_ship_stats() {
        let (_, a) = analyze(RATE_MY_SHIP);
        let s = compute_stats(&a.results, &a.db.typedefs);
        assert_eq!((s.variables, s.inferred), (4, 4));
        assert_eq!(s.inferred_pct(), 100.0);
        assert_eq!(s.unknown_calls, 0);
    }

    #[test]
    fn unknown_call_only() {
        let (_, a) = analyze("p(X) :- foo(X).");
        let s = compute_stats(&a.results, &a.db.typedefs);
        assert_eq!((s.variables, s.inferred), (1, 0));
        assert_eq!((s.unknown_calls, s.total_calls), (1, 1));
        assert_eq!(s.unknown_pct(), 100.0);
    }

    #[test]
    fn untouched_var_is_not_inferred() {
        let defs = TypeDefs::new(Dialect::Swipl);
        assert!(!is_inferred(&Spec::Var, false, &defs));
        assert!(is_inferred(&Spec::Var, true, &defs));
        assert!(!is_inferred(&Spec::Any, false, &defs));
        assert!(!is_inferred(&Spec::one_of(vec![Spec::Var, Spec::Nonvar]), false, &defs));
        assert!(is_inferred(&Spec::Int, false, &defs));
        assert!(!is_inferred(&Spec::Bottom, false, &defs));
    }

    #[test]
    fn percentages_are_derived() {
        let s = Stats {
            variables: 3,
            inferred: 1,
            unknown_calls: 0,
            total_calls: 0,
        };
        assert_eq!(s.inferred_pct(), 33.33);
        assert_eq!(s.unknown_pct(), 0.0);
        assert!(s.to_string().contains("(33.33%)"));
    }

    #[test]
    fn emitted_annotations() {
        let (_, a) = analyze(RATE_MY_SHIP);
        let text = emit_annotations(&a.db);
        assert!(text.contains(":- spec_post(ship/1, [any], [atom]).\n"), "{text}");
        assert!(text.contains(":- spec_post(rating/1, [any], [compound(stars(int))]).\n"), "{text}");
        let (_, a) = analyze("append([], L, L).\nappend([H|T], L, [H|R]) :- append(T, L, R).");
        let text = emit_annotations(&a.db);
        assert!(text.contains(":- spec_post(append/3, [any, any, any], [list(any), any, any]).\n"), "{text}");
    }

    #[test]
    fn emitted_annotations_round_trip() {
        let (_, a) = analyze(&format!("{RATE_MY_SHIP}\nappend([], L, L).\nappend([H|T], L, [H|R]) :- append(T, L, R).\nq(f(X), 'it''s') :- atom(X)."));
        let text = emit_annotations(&a.db);
        let reread = parse_source("ann.pl", &text, Dialect::Swipl);
        assert!(reread.errors.is_empty(), "{:?}", reread.errors);
        let mut db = SpecDb::new(Dialect::Swipl);
        db.register_annotations(&reread.directives, Origin::Inferred);
        assert!(db.errors.is_empty(), "{:?}", db.errors);
        let inferred: Vec<(&PredId, _, _)> = a
            .db
            .conditions
            .iter()
            .filter(|(_, c)| c.origin == Origin::Generated || c.inferred_post().is_some())
            .map(|(id, c)| {
                let pres = if c.origin == Origin::Generated { c.pres.clone() } else { Vec::new() };
                (id, pres, c.inferred_post().cloned())
            })
            .collect();
        assert_eq!(inferred.len(), db.conditions.len());
        for (id, pres, post) in inferred {
            let c = &db.conditions[id];
            assert_eq!(c.pres, pres, "{id}");
            assert_eq!(c.posts.first(), post.as_ref(), "{id}");
        }
    }

    #[test]
    fn annotation_order_is_by_predicate() {
        let (_, a) = analyze("zz(1). aa(a). mm(X) :- zz(X).");
        let text = emit_annotations(&a.db);
        let posts: Vec<&str> = text.lines().filter(|l| l.starts_with(":- spec_post")).collect();
        assert_eq!(posts.len(), 3);
        assert!(posts[0].contains("aa/1") && posts[1].contains("mm/1") && posts[2].contains("zz/1"));
    }

    #[test]
    fn wrong_argument_gives_one_diagnostic() {
        let src = ":- spec_pre(atom_member/2, [one_of([var, atom]), list(atom)]).
                   atom_member(X, L) :- member(X, L).
                   main :- atom_member(1, [a]).";
        let (program, a) = analyze(src);
        let diags = collect_diagnostics(&program, &a);
        let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
        assert_eq!(errors.len(), 1, "{diags:?}");
        let d = errors[0];
        assert!(d.message.contains("argument 1"), "{}", d.message);
        assert_eq!(d.expected.as_deref(), Some("one_of([var, atom])"));
        assert_eq!(d.actual.as_deref(), Some("int"));
        assert_eq!(d.predicate.as_deref(), Some("main/0"));
        assert_eq!(exit_code(&diags), 1);
        let line = d.to_string();
        assert!(line.starts_with("t.pl:3:"), "{line}");
        assert!(line.contains(": error: no precondition satisfiable"), "{line}");
        assert!(line.ends_with("(expected one_of([var, atom]), got int)"), "{line}");
    }

    #[test]
    fn clean_program_exits_zero() {
        let (program, a) = analyze(RATE_MY_SHIP);
        let diags = collect_diagnostics(&program, &a);
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(exit_code(&diags), 0);
        assert_eq!(render_report(&diags, &[], Format::Text, &a.db), "");
    }

    #[test]
    fn parse_and_annotation_errors_are_reported() {
        let (program, a) = analyze("p(.\n:- spec_pre(q/1, [nosuchtype]).\nq(1).");
        let diags = collect_diagnostics(&program, &a);
        assert!(diags.iter().any(|d| d.message.starts_with("syntax error")), "{diags:?}");
        assert!(diags.len() >= 2, "{diags:?}");
        assert_eq!(exit_code(&diags), 1);
    }

    #[test]
    fn json_records() {
        let (program, a) = analyze("main :- atom_length(1, a).");
        let diags = collect_diagnostics(&program, &a);
        let stats = compute_stats(&a.results, &a.db.typedefs);
        let out = render_report(&diags, &[(None, stats)], Format::Json, &a.db);
        let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), diags.len() + 1);
        assert_eq!(lines[0]["type"], "diagnostic");
        assert_eq!(lines[0]["severity"], "error");
        assert_eq!(lines[0]["predicate"], "main/0");
        let last = lines.last().unwrap();
        assert_eq!(last["type"], "stats");
        assert_eq!(last["total_calls"], 1);
    }
}
