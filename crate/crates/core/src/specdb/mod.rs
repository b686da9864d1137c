//! Pre- and postconditions per predicate: user annotations, the bundled
//! builtin annotations and the conditions generated for unannotated
//! predicates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::pred::{PredId, USER_MODULE};
use crate::reader::{indicator, parse_program, parse_source, Dialect, Directive, ImportList, Loc, Program, Term};
use crate::typedom::{lub_all, normalize, parse_spec_list, relax_term, Spec, TypeDefs};

/// Module holding the ISO and dialect builtins.
pub const SYSTEM_MODULE: &str = "system";

const DATA_ISO: &str = include_str!("../../data/iso.pl");
const DATA_LISTS: &str = include_str!("../../data/lists.pl");
const DATA_SWIPL: &str = include_str!("../../data/swipl.pl");
const DATA_SICSTUS: &str = include_str!("../../data/sicstus.pl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    User,
    Builtin,
    Generated,
    Inferred,
}

/// If the call matched `premise` and succeeded, `conclusion` holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub premise: Vec<Spec>,
    pub conclusion: Vec<Spec>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conditions {
    pub arity: usize,
    /// At least one of these must hold at call time.
    pub pres: Vec<Vec<Spec>>,
    pub posts: Vec<Post>,
    /// Where `pres` came from.
    pub origin: Origin,
}

impl Conditions {
    pub fn new(arity: usize, origin: Origin) -> Self {
        Conditions {
            arity,
            pres: Vec::new(),
            posts: Vec::new(),
            origin,
        }
    }

    /// `pres`, or the single all-`any` vector when none are given.
    pub fn effective_pres(&self) -> Vec<Vec<Spec>> {
        if self.pres.is_empty() {
            vec![vec![Spec::Any; self.arity]]
        } else {
            self.pres.clone()
        }
    }

    pub fn inferred_post(&self) -> Option<&Post> {
        self.posts.iter().find(|p| p.origin == Origin::Inferred)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationError {
    pub loc: Loc,
    pub msg: String,
}

#[derive(Debug, Error)]
pub enum SpecDbError {
    #[error("builtin data {file}: {msg}")]
    Data { file: String, msg: String },
}

/// Result of resolving a call.
#[derive(Debug, Clone, Copy)]
pub struct Resolved<'a> {
    pub id: &'a PredId,
    pub conditions: &'a Conditions,
}

#[derive(Debug, Clone)]
pub struct SpecDb {
    pub conditions: BTreeMap<PredId, Conditions>,
    pub typedefs: TypeDefs,
    /// Library modules searched after `system`, in order.
    library_modules: Vec<String>,
    /// Per importing module: imported module and optional import list.
    imports: BTreeMap<String, Vec<(String, ImportList)>>,
    pub errors: Vec<AnnotationError>,
}

impl SpecDb {
    pub fn new(dialect: Dialect) -> Self {
        SpecDb {
            conditions: BTreeMap::new(),
            typedefs: TypeDefs::new(dialect),
            library_modules: Vec::new(),
            imports: BTreeMap::new(),
            errors: Vec::new(),
        }
    }

    pub fn dialect(&self) -> Dialect {
        self.typedefs.dialect
    }

    /// Stores `defspec`, `spec_pre` and `spec_post` directives. Type
    /// definitions are read first so annotations may use types defined later
    /// in the same batch.
    pub fn register_annotations(&mut self, directives: &[Directive], origin: Origin) {
        for d in directives {
            match d.goal.functor() {
                Some(("defspec", 2)) => {
                    let a = d.goal.args();
                    if let Err(e) = self.typedefs.define(&a[0], &a[1]) {
                        self.error(&d.loc, e.0);
                    }
                }
                Some(("defspec_pred", 2)) => self.error(&d.loc, "defspec_pred is not supported".into()),
                _ => {}
            }
        }
        for d in directives {
            let args = d.goal.args();
            match d.goal.functor() {
                Some(("spec_pre" | "pre_spec", 2)) => {
                    if let Some((id, pre)) = self.read_vector(d, &args[0], &args[1]) {
                        let c = self.entry(id, origin);
                        c.pres.push(pre);
                    }
                }
                Some(("spec_post" | "post_spec", 3)) => {
                    let Some((id, premise)) = self.read_vector(d, &args[0], &args[1]) else { continue };
                    let Some((_, conclusion)) = self.read_vector(d, &args[0], &args[2]) else { continue };
                    self.entry(id, origin).posts.push(Post {
                        premise,
                        conclusion,
                        origin,
                    });
                }
                _ => {}
            }
        }
    }

    fn entry(&mut self, id: PredId, origin: Origin) -> &mut Conditions {
        let arity = id.arity;
        self.conditions.entry(id).or_insert_with(|| Conditions::new(arity, origin))
    }

    fn error(&mut self, loc: &Loc, msg: String) {
        self.errors.push(AnnotationError { loc: loc.clone(), msg });
    }

    /// Reads one annotated spec vector, checking it against the indicator.
    fn read_vector(&mut self, d: &Directive, ind: &Term, list: &Term) -> Option<(PredId, Vec<Spec>)> {
        let (module, ind) = match ind.functor() {
            Some((":", 2)) if ind.args()[0].as_atom().is_some() => {
                (ind.args()[0].as_atom().unwrap_or_default().to_string(), &ind.args()[1])
            }
            _ => (d.module.clone(), ind),
        };
        let Some((name, arity)) = indicator(ind) else {
            self.error(&d.loc, format!("expected Name/Arity, got {ind}"));
            return None;
        };
        let specs = match parse_spec_list(list) {
            Ok(s) => s,
            Err(e) => {
                self.error(&d.loc, e.0);
                return None;
            }
        };
        if specs.len() != arity {
            self.error(
                &d.loc,
                format!("arity mismatch: {name}/{arity} annotated with {} specs", specs.len()),
            );
            return None;
        }
        for s in &specs {
            if let Err(e) = self.typedefs.check(s) {
                self.error(&d.loc, e.0);
                return None;
            }
        }
        // a bare variable in a predicate annotation ties positions together
        let specs = specs
            .iter()
            .map(|s| {
                s.map_children(&|x| match x {
                    Spec::SpecVar(v) => Some(Spec::Compatible(v.clone())),
                    _ => None,
                })
            })
            .collect();
        Some((PredId::new(module, name, arity), specs))
    }

    /// Records the import structure and the user annotations of `program`,
    /// then generates conditions for the remaining predicates.
    pub fn load_program(&mut self, program: &Program) {
        for (m, info) in &program.modules {
            self.imports.insert(m.clone(), info.resolved_imports.clone());
        }
        self.register_annotations(&program.directives, Origin::User);
        self.prepare_initial_conditions(program);
    }

    /// Reads additional annotation files as user annotations.
    pub fn load_annotation_files(&mut self, paths: &[impl AsRef<Path>]) -> Result<(), SpecDbError> {
        let paths: Vec<_> = paths.iter().map(|p| p.as_ref().to_path_buf()).collect();
        let program = parse_program(&paths, self.dialect());
        if let Some(e) = program.errors.first() {
            return Err(SpecDbError::Data {
                file: e.loc().map(|l| l.file.to_string()).unwrap_or_default(),
                msg: e.to_string(),
            });
        }
        self.register_annotations(&program.directives, Origin::User);
        Ok(())
    }

    /// Seeds pre- and postconditions from clause heads for every predicate
    /// without annotated preconditions.
    pub fn prepare_initial_conditions(&mut self, program: &Program) {
        for (id, clauses) in &program.predicates {
            let c = self.conditions.entry(id.clone()).or_insert_with(|| Conditions::new(id.arity, Origin::Generated));
            if !c.pres.is_empty() {
                continue;
            }
            let relaxed: Vec<Spec> = (0..id.arity)
                .map(|i| {
                    let per_clause: Vec<Spec> =
                        clauses.iter().map(|cl| relax_term(&cl.head.args()[i], &self.typedefs)).collect();
                    lub_all(&per_clause, &self.typedefs)
                })
                .collect();
            c.origin = Origin::Generated;
            c.pres = vec![relaxed
                .iter()
                .map(|r| normalize(&Spec::OneOf(vec![Spec::Var, r.clone()]), &self.typedefs))
                .collect()];
            c.posts.push(Post {
                premise: vec![Spec::Any; id.arity],
                conclusion: relaxed,
                origin: Origin::Generated,
            });
        }
    }

    /// Resolves a goal called from `caller`: explicit qualification, the
    /// caller's own predicates, its imports, `user`, then the builtins.
    pub fn lookup(&self, goal: &Term, caller: &str) -> Option<Resolved<'_>> {
        if goal.is_functor(":", 2) {
            let module = goal.args()[0].as_atom()?;
            let (name, arity) = goal.args()[1].functor()?;
            return self.get(&PredId::new(module, name, arity));
        }
        let (name, arity) = goal.functor()?;
        let key = |m: &str| PredId::new(m, name, arity);
        if let Some(r) = self.get(&key(caller)) {
            return Some(r);
        }
        for (m, only) in self.imports.get(caller).into_iter().flatten() {
            let listed = only
                .as_ref()
                .is_none_or(|o| o.iter().any(|(n, a)| n == name && *a == arity));
            if listed {
                if let Some(r) = self.get(&key(m)) {
                    return Some(r);
                }
            }
        }
        std::iter::once(USER_MODULE)
            .chain(std::iter::once(SYSTEM_MODULE))
            .chain(self.library_modules.iter().map(String::as_str))
            .find_map(|m| self.get(&key(m)))
    }

    fn get(&self, id: &PredId) -> Option<Resolved<'_>> {
        self.conditions
            .get_key_value(id)
            .map(|(id, conditions)| Resolved { id, conditions })
    }
}

/// The builtin annotations for a dialect.
pub fn load_builtin_db(dialect: Dialect) -> Result<SpecDb, SpecDbError> {
    let dialect_file = match dialect {
        Dialect::Swipl => ("swipl.pl", DATA_SWIPL),
        Dialect::Sicstus => ("sicstus.pl", DATA_SICSTUS),
    };
    let mut db = SpecDb::new(dialect);
    for (file, src) in [dialect_file, ("iso.pl", DATA_ISO), ("lists.pl", DATA_LISTS)] {
        let program = parse_source(file, src, dialect);
        if let Some(e) = program.errors.first() {
            return Err(SpecDbError::Data {
                file: file.into(),
                msg: e.to_string(),
            });
        }
        db.register_annotations(&program.directives, Origin::Builtin);
        if let Some(e) = db.errors.first() {
            return Err(SpecDbError::Data {
                file: file.into(),
                msg: format!("{}: {}", e.loc, e.msg),
            });
        }
        for f in &program.files {
            if f.module != SYSTEM_MODULE && !db.library_modules.contains(&f.module) {
                db.library_modules.push(f.module.clone());
            }
        }
    }
    Ok(db)
}
