//! Reading Prolog source into clauses and directives. Nothing is executed:
//! directives are only pattern-matched for module, operator and annotation forms.

mod lexer;
mod ops;
mod parser;
mod term;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

pub use lexer::{tokenize, Token, TokenKind};
pub use ops::{Assoc, OpTable};
pub use parser::{ReadTerm, TermReader};
pub use term::{quote_atom, Loc, Term, TermKind, EMPTY_LIST, LIST_CONS};

use crate::pred::{PredId, USER_MODULE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Dialect {
    #[default]
    Swipl,
    Sicstus,
}

impl FromStr for Dialect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "swipl" | "swi" => Ok(Dialect::Swipl),
            "sicstus" => Ok(Dialect::Sicstus),
            other => Err(format!("unknown dialect `{other}` (expected swipl or sicstus)")),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Swipl => "swipl",
            Dialect::Sicstus => "sicstus",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReadError {
    #[error("{loc}: syntax error: {msg}")]
    Lex { loc: Loc, msg: String },
    #[error("{loc}: syntax error: {msg}")]
    Parse { loc: Loc, msg: String },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl ReadError {
    pub fn loc(&self) -> Option<&Loc> {
        match self {
            ReadError::Lex { loc, .. } | ReadError::Parse { loc, .. } => Some(loc),
            ReadError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Warning {
    pub loc: Loc,
    pub msg: String,
}

#[derive(Debug, Clone)]
pub struct Clause {
    pub head: Term,
    /// Top-level conjunction, flattened.
    pub body: Vec<Term>,
    pub loc: Loc,
    pub module: String,
    /// Variable names indexed by the ids used in `head` and `body`.
    pub var_names: Vec<String>,
}

impl Clause {
    pub fn pred_id(&self) -> PredId {
        let (name, arity) = self.head.functor().expect("clause heads are callable");
        PredId::new(self.module.clone(), name, arity)
    }
}

#[derive(Debug, Clone)]
pub struct Directive {
    pub goal: Term,
    pub loc: Loc,
    /// Module in effect where the directive appeared.
    pub module: String,
}

#[derive(Debug, Clone)]
pub enum ImportSource {
    Library(String),
    File(String),
}

/// Predicates named in an import list; `None` imports everything exported.
pub type ImportList = Option<Vec<(String, usize)>>;

#[derive(Debug, Clone)]
pub struct Import {
    pub source: ImportSource,
    /// `None` imports everything the module exports.
    pub only: ImportList,
    pub loc: Loc,
}

#[derive(Debug, Clone, Default)]
pub struct ModuleInfo {
    pub file: Option<PathBuf>,
    pub exports: Vec<(String, usize)>,
    pub imports: Vec<Import>,
    /// Imports resolved to module names after all files are read.
    pub resolved_imports: Vec<(String, ImportList)>,
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: PathBuf,
    pub module: String,
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub predicates: IndexMap<PredId, Vec<Clause>>,
    pub directives: Vec<Directive>,
    pub modules: BTreeMap<String, ModuleInfo>,
    pub files: Vec<SourceFile>,
    pub dialect: Dialect,
    pub errors: Vec<ReadError>,
    pub warnings: Vec<Warning>,
}

impl Program {
    pub fn new(dialect: Dialect) -> Self {
        Program {
            dialect,
            ..Default::default()
        }
    }

    pub fn clause_count(&self) -> usize {
        self.predicates.values().map(Vec::len).sum()
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.predicates.values().flatten()
    }

    /// Reads one source text and merges it into the program.
    pub fn add_source(&mut self, path: &Path, source: &str) {
        let file: Arc<str> = Arc::from(path.display().to_string());
        let default_module = USER_MODULE.to_string();
        let mut state = FileState {
            module: default_module,
            ops: OpTable::for_dialect(self.dialect),
            cond: Vec::new(),
            file: file.clone(),
        };
        let tokens = match tokenize(source, &file) {
            Ok(t) => t,
            Err(e) => {
                self.errors.push(e);
                return;
            }
        };
        let mut reader = TermReader::new(tokens, self.dialect);
        let mut first_module = None;
        while let Some(item) = {
            let ops = state.ops.clone();
            reader.next_term(&ops)
        } {
            match item {
                Ok(rt) => self.add_read_term(rt, &mut state, path, &mut first_module),
                Err(e) => self.errors.push(e),
            }
        }
        if let Some(c) = state.cond.last() {
            self.warnings.push(Warning {
                loc: c.loc.clone(),
                msg: "conditional compilation block is not closed".into(),
            });
        }
        self.files.push(SourceFile {
            path: path.to_path_buf(),
            module: first_module.unwrap_or_else(|| USER_MODULE.into()),
        });
    }

    fn add_read_term(&mut self, rt: ReadTerm, st: &mut FileState, path: &Path, first_module: &mut Option<String>) {
        let ReadTerm { term, var_names } = rt;
        let loc = term.loc.clone();
        // directives
        if term.is_functor(":-", 1) || term.is_functor("?-", 1) {
            let goal = term.args()[0].clone();
            if self.conditional(&goal, st) {
                return;
            }
            if st.skipping() {
                return;
            }
            self.interpret_directive(&goal, st, path, first_module);
            self.directives.push(Directive {
                goal,
                loc,
                module: st.module.clone(),
            });
            return;
        }
        if st.skipping() {
            return;
        }
        if term.is_functor("-->", 2) {
            self.warnings.push(Warning {
                loc,
                msg: "DCG rule skipped".into(),
            });
            return;
        }
        let (head, body) = if term.is_functor(":-", 2) {
            let args = term.args();
            (args[0].clone(), flatten_conjunction(&args[1]))
        } else {
            (term, Vec::new())
        };
        let (module, head) = match &head.kind {
            TermKind::Compound { functor, args } if functor == ":" && args.len() == 2 && args[0].as_atom().is_some() => {
                (args[0].as_atom().unwrap_or_default().to_string(), args[1].clone())
            }
            _ => (st.module.clone(), head),
        };
        if !head.is_callable() {
            self.errors.push(ReadError::Parse {
                loc: head.loc.clone(),
                msg: "clause head is not callable".into(),
            });
            return;
        }
        let clause = Clause {
            head,
            body,
            loc,
            module,
            var_names,
        };
        self.predicates.entry(clause.pred_id()).or_default().push(clause);
    }

    /// Handles `if/elif/else/endif`. Returns true when the directive was one of them.
    fn conditional(&mut self, goal: &Term, st: &mut FileState) -> bool {
        let name = goal.functor();
        match name {
            Some(("if", 1)) => {
                let parent_skipping = st.skipping();
                if !parent_skipping {
                    self.warnings.push(Warning {
                        loc: goal.loc.clone(),
                        msg: "conditional compilation is not evaluated; taking the `if` branch".into(),
                    });
                }
                st.cond.push(CondFrame {
                    loc: goal.loc.clone(),
                    skipping: parent_skipping,
                    parent_skipping,
                });
            }
            Some(("elif", 1)) | Some(("else", 0)) => {
                if let Some(top) = st.cond.last_mut() {
                    top.skipping = true;
                } else {
                    self.warnings.push(Warning {
                        loc: goal.loc.clone(),
                        msg: "conditional directive without `if`".into(),
                    });
                }
            }
            Some(("endif", 0)) => {
                if st.cond.pop().is_none() {
                    self.warnings.push(Warning {
                        loc: goal.loc.clone(),
                        msg: "`endif` without `if`".into(),
                    });
                }
            }
            _ => return false,
        }
        true
    }

    fn interpret_directive(&mut self, goal: &Term, st: &mut FileState, path: &Path, first_module: &mut Option<String>) {
        match goal.functor() {
            Some(("module", 2)) => {
                let Some(m) = goal.args()[0].as_atom() else { return };
                st.module = m.to_string();
                first_module.get_or_insert_with(|| m.to_string());
                let exports = goal.args()[1]
                    .list_items()
                    .unwrap_or_default()
                    .into_iter()
                    .filter_map(indicator)
                    .collect();
                let info = self.modules.entry(m.to_string()).or_default();
                info.file = Some(path.to_path_buf());
                info.exports = exports;
            }
            Some(("use_module", 1)) | Some(("use_module", 2)) | Some(("ensure_loaded", 1)) => {
                let Some(source) = import_source(&goal.args()[0]) else { return };
                let only = goal
                    .args()
                    .get(1)
                    .and_then(Term::list_items)
                    .map(|items| items.into_iter().filter_map(indicator).collect());
                self.modules.entry(st.module.clone()).or_default().imports.push(Import {
                    source,
                    only,
                    loc: goal.loc.clone(),
                });
            }
            Some(("op", 3)) => self.op_directive(goal, st),
            _ => {}
        }
    }

    fn op_directive(&mut self, goal: &Term, st: &mut FileState) {
        let args = goal.args();
        let prio = match args[0].kind {
            TermKind::Int(p) if (0..=1200).contains(&p) => p as u16,
            _ => return self.bad_op(goal),
        };
        let Some(assoc) = args[1].as_atom().and_then(Assoc::parse) else {
            return self.bad_op(goal);
        };
        let names: Vec<String> = match args[2].list_items() {
            Some(items) => items.iter().filter_map(|t| t.as_atom().map(str::to_string)).collect(),
            None => args[2].as_atom().map(|a| vec![a.to_string()]).unwrap_or_default(),
        };
        for n in names {
            st.ops.add(prio, assoc, &n);
        }
    }

    fn bad_op(&mut self, goal: &Term) {
        self.warnings.push(Warning {
            loc: goal.loc.clone(),
            msg: "ignoring malformed op/3 directive".into(),
        });
    }

    /// Maps `use_module` directives to module names once every file is known.
    pub fn resolve_imports(&mut self) {
        let by_stem: BTreeMap<String, String> = self
            .files
            .iter()
            .filter_map(|f| Some((f.path.file_stem()?.to_string_lossy().into_owned(), f.module.clone())))
            .collect();
        for info in self.modules.values_mut() {
            info.resolved_imports = info
                .imports
                .iter()
                .filter_map(|imp| {
                    let module = match &imp.source {
                        ImportSource::Library(l) => l.clone(),
                        ImportSource::File(f) => {
                            let stem = Path::new(f).file_stem()?.to_string_lossy().into_owned();
                            by_stem.get(&stem)?.clone()
                        }
                    };
                    Some((module, imp.only.clone()))
                })
                .collect();
        }
    }
}

struct CondFrame {
    loc: Loc,
    skipping: bool,
    parent_skipping: bool,
}

struct FileState {
    module: String,
    ops: OpTable,
    cond: Vec<CondFrame>,
    #[allow(dead_code)]
    file: Arc<str>,
}

impl FileState {
    fn skipping(&self) -> bool {
        self.cond.last().is_some_and(|c| c.skipping || c.parent_skipping)
    }
}

/// `Name/Arity` as a pair.
pub fn indicator(t: &Term) -> Option<(String, usize)> {
    if !t.is_functor("/", 2) {
        return None;
    }
    let name = t.args()[0].as_atom()?;
    match t.args()[1].kind {
        TermKind::Int(n) if n >= 0 => Some((name.to_string(), n as usize)),
        _ => None,
    }
}

fn import_source(t: &Term) -> Option<ImportSource> {
    if t.is_functor("library", 1) {
        let inner = &t.args()[0];
        // library(clpfd), library(dialect/sicstus) -> last path component
        let mut cur = inner;
        while cur.is_functor("/", 2) {
            cur = &cur.args()[1];
        }
        return cur.as_atom().map(|a| ImportSource::Library(a.to_string()));
    }
    let mut cur = t;
    while cur.is_functor("/", 2) {
        cur = &cur.args()[1];
    }
    cur.as_atom().map(|a| ImportSource::File(a.to_string()))
}

/// Splits a body on `','/2`.
pub fn flatten_conjunction(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cur = t;
    while cur.is_functor(",", 2) {
        out.extend(flatten_conjunction(&cur.args()[0]));
        cur = &cur.args()[1];
    }
    out.push(cur.clone());
    out
}

/// Parses source text as a single file named `name`.
pub fn parse_source(name: &str, source: &str, dialect: Dialect) -> Program {
    let mut p = Program::new(dialect);
    p.add_source(Path::new(name), source);
    p.resolve_imports();
    p
}

/// Reads a single term such as `foo(X, [a])` without a terminating dot.
pub fn parse_term(text: &str, dialect: Dialect) -> Result<ReadTerm, ReadError> {
    let file: Arc<str> = Arc::from("<term>");
    let mut tokens = tokenize(text, &file)?;
    if !matches!(tokens.last().map(|t| &t.kind), Some(TokenKind::End)) {
        let loc = tokens.last().map(|t| t.loc.clone()).unwrap_or_else(Loc::unknown);
        tokens.push(Token {
            kind: TokenKind::End,
            loc,
            layout_before: true,
        });
    }
    let ops = OpTable::for_dialect(dialect);
    let mut r = TermReader::new(tokens, dialect);
    match r.next_term(&ops) {
        Some(res) => res,
        None => Err(ReadError::Parse {
            loc: Loc::new(file, 1, 1),
            msg: "empty input".into(),
        }),
    }
}

/// Reads files and directories (recursively, `.pl` files only) into one program.
pub fn parse_program(paths: &[PathBuf], dialect: Dialect) -> Program {
    let mut files = Vec::new();
    let mut program = Program::new(dialect);
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = walkdir::WalkDir::new(p)
                .into_iter()
                .filter_map(Result::ok)
                .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "pl"))
                .map(|e| e.into_path())
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    for f in files {
        match std::fs::read_to_string(&f) {
            Ok(src) => program.add_source(&f, &src),
            Err(e) => program.errors.push(ReadError::Io {
                path: f.display().to_string(),
                msg: e.to_string(),
            }),
        }
    }
    program.resolve_imports();
    program
}
