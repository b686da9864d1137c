//! Predicate indicators shared by the reader, `specdb` and reports.

use std::fmt;

use serde::Serialize;

/// Module that unqualified, non-module files load into.
pub const USER_MODULE: &str = "user";

/// `module:name/arity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PredId {
    pub module: String,
    pub name: String,
    pub arity: usize,
}

impl PredId {
    pub fn new(module: impl Into<String>, name: impl Into<String>, arity: usize) -> Self {
        PredId {
            module: module.into(),
            name: name.into(),
            arity,
        }
    }

    pub fn user(name: impl Into<String>, arity: usize) -> Self {
        Self::new(USER_MODULE, name, arity)
    }
}

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.module != USER_MODULE {
            write!(f, "{}:", crate::reader::quote_atom(&self.module))?;
        }
        write!(f, "{}/{}", crate::reader::quote_atom(&self.name), self.arity)
    }
}
