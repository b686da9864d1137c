use std::collections::HashMap;
use std::sync::OnceLock;

use super::Dialect;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assoc {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
    Xf,
    Yf,
}

impl Assoc {
    pub fn parse(s: &str) -> Option<Assoc> {
        Some(match s {
            "xfx" => Assoc::Xfx,
            "xfy" => Assoc::Xfy,
            "yfx" => Assoc::Yfx,
            "fy" => Assoc::Fy,
            "fx" => Assoc::Fx,
            "xf" => Assoc::Xf,
            "yf" => Assoc::Yf,
            _ => return None,
        })
    }

    fn class(self) -> usize {
        match self {
            Assoc::Xfx | Assoc::Xfy | Assoc::Yfx => 1,
            Assoc::Fy | Assoc::Fx => 0,
            Assoc::Xf | Assoc::Yf => 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct OpDefs {
    // prefix, infix, postfix
    slots: [Option<(u16, Assoc)>; 3],
}

#[derive(Debug, Clone, Default)]
pub struct OpTable {
    ops: HashMap<String, OpDefs>,
}

const ISO_OPS: &[(u16, &str, &[&str])] = &[
    (1200, "xfx", &[":-", "-->"]),
    (1200, "fx", &[":-", "?-"]),
    (1100, "xfy", &[";", "|"]),
    (1050, "xfy", &["->", "*->"]),
    (1000, "xfy", &[","]),
    (900, "fy", &["\\+"]),
    (
        700,
        "xfx",
        &[
            "=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=", "=..", "is", "=:=", "=\\=", "<", ">", "=<", ">=",
        ],
    ),
    (600, "xfy", &[":"]),
    (500, "yfx", &["+", "-", "/\\", "\\/", "xor"]),
    (400, "yfx", &["*", "/", "//", "rem", "mod", "div", "<<", ">>", "rdiv", "divmod"]),
    (200, "xfx", &["**"]),
    (200, "xfy", &["^"]),
    (200, "fy", &["-", "+", "\\"]),
    (100, "yfx", &["."]),
    (1, "fx", &["$"]),
];

const SWI_OPS: &[(u16, &str, &[&str])] = &[
    (
        1150,
        "fx",
        &[
            "dynamic",
            "discontiguous",
            "initialization",
            "meta_predicate",
            "module_transparent",
            "multifile",
            "public",
            "thread_local",
            "table",
        ],
    ),
    (990, "xfx", &[":="]),
    (700, "xfx", &["as", ">:<", ":<"]),
    (200, "xfy", &["::"]),
];

const SICSTUS_OPS: &[(u16, &str, &[&str])] = &[
    (
        1150,
        "fx",
        &["dynamic", "discontiguous", "initialization", "meta_predicate", "multifile", "public", "volatile", "block", "mode"],
    ),
    (550, "xfy", &[":"]),
];

impl OpTable {
    fn from_defs(defs: &[&[(u16, &str, &[&str])]]) -> Self {
        let mut t = OpTable::default();
        for group in defs {
            for (p, typ, names) in group.iter() {
                let assoc = Assoc::parse(typ).expect("static op type");
                for n in names.iter() {
                    t.add(*p, assoc, n);
                }
            }
        }
        t
    }

    pub fn iso() -> &'static OpTable {
        static ISO: OnceLock<OpTable> = OnceLock::new();
        ISO.get_or_init(|| OpTable::from_defs(&[ISO_OPS]))
    }

    pub fn for_dialect(dialect: Dialect) -> Self {
        match dialect {
            Dialect::Swipl => OpTable::from_defs(&[ISO_OPS, SWI_OPS]),
            Dialect::Sicstus => OpTable::from_defs(&[ISO_OPS, SICSTUS_OPS]),
        }
    }

    /// Priority 0 removes the definition, as `op/3` does.
    pub fn add(&mut self, priority: u16, assoc: Assoc, name: &str) {
        let entry = self.ops.entry(name.to_string()).or_default();
        entry.slots[assoc.class()] = if priority == 0 { None } else { Some((priority, assoc)) };
    }

    pub fn prefix(&self, name: &str) -> Option<(u16, Assoc)> {
        self.ops.get(name).and_then(|d| d.slots[0])
    }

    pub fn infix(&self, name: &str) -> Option<(u16, Assoc)> {
        self.ops.get(name).and_then(|d| d.slots[1])
    }

    pub fn postfix(&self, name: &str) -> Option<(u16, Assoc)> {
        self.ops.get(name).and_then(|d| d.slots[2])
    }

    pub fn is_op(&self, name: &str) -> bool {
        self.ops.get(name).is_some_and(|d| d.slots.iter().any(Option::is_some))
    }
}
