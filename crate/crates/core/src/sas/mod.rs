//! Multi-valued (SAS+) planning tasks.
//!
//! A task is a set of finite-domain state variables, a set of actions that
//! change (effects) or require without changing (prevails) variable values,
//! a total initial state and a partial goal state.

mod dtg;
mod format;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

pub use dtg::{build_dtgs, enumerate_two_paths, DomainTransitionGraph, Transition, TwoPath, TwoPathTable};
pub use format::{parse_sas, write_sas, SasError};

/// Separator between an action's original name and the suffix given to
/// compiled duplicates of it.
pub const DUPLICATE_MARK: char = '#';

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Variable {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }
}

/// A value change on one variable. `pre == None` means the action sets the
/// variable regardless of its current value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Effect {
    pub pre: Option<usize>,
    pub post: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SasAction {
    pub name: String,
    pub effects: BTreeMap<usize, Effect>,
    pub prevails: BTreeMap<usize, usize>,
    /// Parsed and carried along; planning ignores it.
    pub cost: i64,
}

impl SasAction {
    pub fn new(name: impl Into<String>) -> Self {
        SasAction {
            name: name.into(),
            effects: BTreeMap::new(),
            prevails: BTreeMap::new(),
            cost: 1,
        }
    }

    pub fn with_effect(mut self, var: usize, pre: Option<usize>, post: usize) -> Self {
        self.effects.insert(var, Effect { pre, post });
        self
    }

    pub fn with_prevail(mut self, var: usize, value: usize) -> Self {
        self.prevails.insert(var, value);
        self
    }

    /// Name with any duplicate-compilation suffix removed.
    pub fn original_name(&self) -> &str {
        original_name(&self.name)
    }

    /// Variables this action changes or requires.
    pub fn touched_variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.effects.keys().chain(self.prevails.keys()).copied()
    }

    /// Sequential applicability in a total state.
    pub fn is_applicable(&self, state: &[usize]) -> bool {
        self.effects
            .iter()
            .all(|(&v, e)| e.pre.map_or(true, |p| state[v] == p))
            && self.prevails.iter().all(|(&v, &p)| state[v] == p)
    }

    pub fn apply(&self, state: &mut [usize]) {
        for (&v, e) in &self.effects {
            state[v] = e.post;
        }
    }
}

pub fn original_name(name: &str) -> &str {
    match name.find(DUPLICATE_MARK) {
        Some(i) => &name[..i],
        None => name,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SasTask {
    pub variables: Vec<Variable>,
    pub actions: Vec<SasAction>,
    pub initial: Vec<usize>,
    pub goal: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// An effect with a defined precondition that equals its postcondition.
    EffectWithoutChange { action: String, var: usize },
    /// An effect and a prevail condition on the same variable.
    EffectAndPrevail { action: String, var: usize },
    UnknownVariable { action: String, var: usize },
    ValueOutOfRange { action: String, var: usize, value: usize },
    DuplicateActionName { action: String },
    InitialStateLength { expected: usize, found: usize },
    InitialValueOutOfRange { var: usize, value: usize },
    GoalLength { expected: usize, found: usize },
    GoalValueOutOfRange { var: usize, value: usize },
    EmptyDomain { var: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EffectWithoutChange { action, var } => {
                write!(f, "action `{action}`: effect on var{var} has pre = post")
            }
            Violation::EffectAndPrevail { action, var } => {
                write!(f, "action `{action}`: both effect and prevail on var{var}")
            }
            Violation::UnknownVariable { action, var } => {
                write!(f, "action `{action}`: unknown variable var{var}")
            }
            Violation::ValueOutOfRange { action, var, value } => {
                write!(f, "action `{action}`: value {value} out of range for var{var}")
            }
            Violation::DuplicateActionName { action } => write!(f, "duplicate action name `{action}`"),
            Violation::InitialStateLength { expected, found } => {
                write!(f, "initial state has {found} values, expected {expected}")
            }
            Violation::InitialValueOutOfRange { var, value } => {
                write!(f, "initial value {value} out of range for var{var}")
            }
            Violation::GoalLength { expected, found } => {
                write!(f, "goal has {found} entries, expected {expected}")
            }
            Violation::GoalValueOutOfRange { var, value } => {
                write!(f, "goal value {value} out of range for var{var}")
            }
            Violation::EmptyDomain { var } => write!(f, "var{var} has an empty domain"),
        }
    }
}

impl SasTask {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.variables[var].domain_size()
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    /// Whether `state` satisfies the (partial) goal.
    pub fn is_goal(&self, state: &[usize]) -> bool {
        self.goal
            .iter()
            .zip(state)
            .all(|(g, &s)| g.map_or(true, |g| g == s))
    }

    /// Checks the structural restrictions every action and state must obey.
    /// Returns every violation found; an empty list means the task is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.num_vars();
        let mut out = Vec::new();
        for (v, var) in self.variables.iter().enumerate() {
            if var.values.is_empty() {
                out.push(Violation::EmptyDomain { var: v });
            }
        }
        if self.initial.len() != n {
            out.push(Violation::InitialStateLength { expected: n, found: self.initial.len() });
        } else {
            for (v, &val) in self.initial.iter().enumerate() {
                if val >= self.domain_size(v) {
                    out.push(Violation::InitialValueOutOfRange { var: v, value: val });
                }
            }
        }
        if self.goal.len() != n {
            out.push(Violation::GoalLength { expected: n, found: self.goal.len() });
        } else {
            for (v, g) in self.goal.iter().enumerate() {
                if let Some(val) = *g {
                    if val >= self.domain_size(v) {
                        out.push(Violation::GoalValueOutOfRange { var: v, value: val });
                    }
                }
            }
        }
        let mut names = HashSet::new();
        for a in &self.actions {
            if !names.insert(a.name.as_str()) {
                out.push(Violation::DuplicateActionName { action: a.name.clone() });
            }
            let check_value = |var: usize, value: usize, out: &mut Vec<Violation>| {
                if var >= n {
                    out.push(Violation::UnknownVariable { action: a.name.clone(), var });
                    false
                } else if value >= self.domain_size(var) {
                    out.push(Violation::ValueOutOfRange { action: a.name.clone(), var, value });
                    false
                } else {
                    true
                }
            };
            for (&var, e) in &a.effects {
                if !check_value(var, e.post, &mut out) {
                    continue;
                }
                if let Some(pre) = e.pre {
                    if check_value(var, pre, &mut out) && pre == e.post {
                        out.push(Violation::EffectWithoutChange { action: a.name.clone(), var });
                    }
                }
            }
            for (&var, &val) in &a.prevails {
                check_value(var, val, &mut out);
                if a.effects.contains_key(&var) {
                    out.push(Violation::EffectAndPrevail { action: a.name.clone(), var });
                }
            }
        }
        out
    }

    pub fn has_undefined_preconditions(&self) -> bool {
        self.actions
            .iter()
            .any(|a| a.effects.values().any(|e| e.pre.is_none()))
    }

    /// Compiles effects with an undefined precondition away by duplicating
    /// the action: one copy per possible source value `f != post` carrying
    /// the effect `f -> post`, and one copy that prevails `post` (the
    /// variable already holds the target value). Actions with several such
    /// effects get the cross product of copies. Copies are named
    /// `<name>#<k>`; actions without such effects are kept unchanged.
    pub fn split_undefined_preconditions(&self) -> SasTask {
        let mut actions = Vec::with_capacity(self.actions.len());
        for a in &self.actions {
            let open: Vec<(usize, usize)> = a
                .effects
                .iter()
                .filter(|(_, e)| e.pre.is_none())
                .map(|(&v, e)| (v, e.post))
                .collect();
            if open.is_empty() {
                actions.push(a.clone());
                continue;
            }
            // Each open effect has |V_c| alternatives: None = prevail copy.
            let choices: Vec<Vec<Option<usize>>> = open
                .iter()
                .map(|&(v, post)| {
                    (0..self.domain_size(v))
                        .filter(|&f| f != post)
                        .map(Some)
                        .chain(std::iter::once(None))
                        .collect()
                })
                .collect();
            let mut idx = vec![0usize; open.len()];
            let mut k = 0;
            loop {
                let mut copy = a.clone();
                copy.name = format!("{}{}{}", a.name, DUPLICATE_MARK, k);
                for (j, &(v, post)) in open.iter().enumerate() {
                    match choices[j][idx[j]] {
                        Some(f) => {
                            copy.effects.insert(v, Effect { pre: Some(f), post });
                        }
                        None => {
                            copy.effects.remove(&v);
                            copy.prevails.insert(v, post);
                        }
                    }
                }
                actions.push(copy);
                k += 1;
                // odometer increment
                let mut j = 0;
                while j < idx.len() {
                    idx[j] += 1;
                    if idx[j] < choices[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == idx.len() {
                    break;
                }
            }
        }
        SasTask {
            variables: self.variables.clone(),
            actions,
            initial: self.initial.clone(),
            goal: self.goal.clone(),
        }
    }
}

/// Validation entry point matching the task checker used by the frontends.
pub fn validate_task(task: &SasTask) -> Result<(), Vec<Violation>> {
    let v = task.validate();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
