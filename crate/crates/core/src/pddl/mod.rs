//! Typed STRIPS input: parsing, grounding and compilation into a task over
//! two-valued state variables, one per ground atom.

mod encode;
mod ground;
mod parse;
pub mod sexpr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use encode::{binary_encode, FALSE, TRUE};
pub use ground::{ground_task, DEFAULT_ACTION_CAP};
pub use parse::{parse_domain, parse_problem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported feature: {construct}")]
    Unsupported { construct: String },
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("`{predicate}` expects {expected} argument(s), found {found}")]
    Arity { predicate: String, expected: usize, found: usize },
    #[error("object `{object}` is not of type `{expected}`")]
    TypeMismatch { object: String, expected: String },
    #[error("goal is not a conjunction of atoms")]
    NonConjunctiveGoal,
    #[error("grounding exceeds the cap of {cap} actions")]
    ResourceLimit { cap: usize },
    #[error("action `{action}` both adds and deletes {atom}")]
    AddDeleteConflict { action: String, atom: String },
}

impl PddlError {
    pub(crate) fn unsupported(construct: impl Into<String>) -> Self {
        PddlError::Unsupported { construct: construct.into() }
    }
}

/// Argument of an atom inside a schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    /// Index into the schema's parameter list.
    Param(usize),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSchema {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    /// `(name, type)` pairs.
    pub parameters: Vec<(String, String)>,
    pub precondition: Vec<AtomSchema>,
    pub add: Vec<AtomSchema>,
    pub delete: Vec<AtomSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// Type to parent type; `object` is the root and has no entry.
    pub types: BTreeMap<String, String>,
    /// `(name, type)` pairs.
    pub constants: Vec<(String, String)>,
    /// Predicate to parameter types.
    pub predicates: BTreeMap<String, Vec<String>>,
    pub schemas: Vec<ActionSchema>,
}

impl Domain {
    /// Whether `t` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, t: &str, ancestor: &str) -> bool {
        let mut cur = t;
        let mut guard = 0;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(p) if guard <= self.types.len() => {
                    cur = p;
                    guard += 1;
                }
                _ => return ancestor == "object",
            }
        }
    }

    pub fn has_type(&self, t: &str) -> bool {
        t == "object" || self.types.contains_key(t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        GroundAtom { predicate: predicate.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// `(name, type)` pairs, domain constants included.
    pub objects: Vec<(String, String)>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: BTreeSet<GroundAtom>,
}

/// A ground action over fluent atoms; static preconditions are dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    /// Schema name and arguments separated by spaces.
    pub name: String,
    pub preconditions: BTreeSet<GroundAtom>,
    pub add_effects: BTreeSet<GroundAtom>,
    pub delete_effects: BTreeSet<GroundAtom>,
}

impl GroundAction {
    pub fn is_applicable(&self, state: &BTreeSet<GroundAtom>) -> bool {
        self.preconditions.iter().all(|a| state.contains(a))
    }

    /// Deletes first, then adds.
    pub fn apply(&self, state: &mut BTreeSet<GroundAtom>) {
        for a in &self.delete_effects {
            state.remove(a);
        }
        for a in &self.add_effects {
            state.insert(a.clone());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTask {
    /// Sorted by name.
    pub actions: Vec<GroundAction>,
    /// Fluent atoms that are initially true or added by some action, plus
    /// goal atoms; sorted.
    pub atoms: Vec<GroundAtom>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: BTreeSet<GroundAtom>,
}
