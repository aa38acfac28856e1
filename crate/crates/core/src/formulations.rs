//! Time-expanded network-flow encodings of a SAS+ task.
//!
//! All four encodings share the action variables `x[a][t]`, one arc flow
//! variable per transition and period, and one value variable per value
//! and period. They differ in how many transitions a variable may make per
//! period and in how prevail conditions are linked to the flows. Ordering
//! (cycle) rows are never built here; they are separated on demand.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{LinearConstraint, MipModel, ModelError, ModelVariable, Sense, VarId};
use crate::sas::{build_dtgs, enumerate_two_paths, DomainTransitionGraph, SasTask, TwoPathTable};
use crate::separation::GraphVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formulation {
    /// One transition or persistence per variable and period; prevailed
    /// values must persist.
    OneSc,
    /// One transition per period; a prevail may be met by any value the
    /// transition touches.
    G1sc,
    /// Up to two chained transitions per period.
    G2sc,
    /// A path of transitions per period visiting each value at most once.
    PathSc,
}

impl Formulation {
    pub const ALL: [Formulation; 4] =
        [Formulation::OneSc, Formulation::G1sc, Formulation::G2sc, Formulation::PathSc];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::OneSc => "1sc",
            Formulation::G1sc => "g1sc",
            Formulation::G2sc => "g2sc",
            Formulation::PathSc => "pathsc",
        }
    }

    /// Precedence graph whose cycles must be cut, `None` when the encoding
    /// needs no ordering rows.
    pub fn precedence_variant(self) -> Option<GraphVariant> {
        match self {
            Formulation::OneSc => None,
            Formulation::G1sc => Some(GraphVariant::Base),
            Formulation::G2sc | Formulation::PathSc => Some(GraphVariant::Primed),
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown formulation `{s}` (expected 1sc, g1sc, g2sc or pathsc)"))
    }
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What a model column stands for. Periods are 1-based except for `End`,
/// which also exists at period 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Action { t: usize, action: usize },
    /// Flow on DTG arc `arc` of variable `var`.
    Arc { t: usize, var: usize, arc: usize },
    /// Persistence (layered encodings) or visit (path encoding) of a value.
    Value { t: usize, var: usize, value: usize },
    /// Flow on entry `path` of the variable's two-path table.
    TwoPath { t: usize, var: usize, path: usize },
    /// The value a variable holds at the end of period `t`.
    End { t: usize, var: usize, value: usize },
}

/// Bijection between model columns and their meaning. Action columns come
/// first, ordered by `(t, action)`, so `x(a, t) = (t - 1) * |A| + a`.
#[derive(Clone, Debug)]
pub struct VarMap {
    pub horizon: usize,
    num_actions: usize,
    kinds: Vec<VarKind>,
    index: HashMap<VarKind, VarId>,
}

impl VarMap {
    fn new(horizon: usize, num_actions: usize) -> Self {
        VarMap { horizon, num_actions, kinds: Vec::new(), index: HashMap::new() }
    }

    fn push(&mut self, kind: VarKind) -> VarId {
        let id = self.kinds.len();
        self.kinds.push(kind);
        self.index.insert(kind, id);
        id
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn x(&self, action: usize, t: usize) -> VarId {
        debug_assert!(action < self.num_actions && (1..=self.horizon).contains(&t));
        (t - 1) * self.num_actions + action
    }

    pub fn is_action(&self, id: VarId) -> bool {
        id < self.num_actions * self.horizon
    }

    pub fn y(&self, var: usize, arc: usize, t: usize) -> Option<VarId> {
        self.index.get(&VarKind::Arc { t, var, arc }).copied()
    }

    pub fn value(&self, var: usize, value: usize, t: usize) -> Option<VarId> {
        self.index.get(&VarKind::Value { t, var, value }).copied()
    }

    pub fn two_path(&self, var: usize, path: usize, t: usize) -> Option<VarId> {
        self.index.get(&VarKind::TwoPath { t, var, path }).copied()
    }

    pub fn end(&self, var: usize, value: usize, t: usize) -> Option<VarId> {
        self.index.get(&VarKind::End { t, var, value }).copied()
    }

    pub fn kind(&self, id: VarId) -> VarKind {
        self.kinds[id]
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }
}

/// An encoded task. `task` is the task whose action indices the action
/// columns refer to: the input with undefined-precondition effects split
/// into one copy per source value plus a prevail copy.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub formulation: Formulation,
    pub task: SasTask,
    pub dtgs: Vec<DomainTransitionGraph>,
    /// Empty unless the formulation is G2SC.
    pub two_paths: Vec<TwoPathTable>,
    pub model: MipModel,
    pub map: VarMap,
}

impl Encoding {
    pub fn horizon(&self) -> usize {
        self.map.horizon
    }
}

/// Accumulates terms, merging repeated columns.
#[derive(Default)]
struct Row(BTreeMap<VarId, f64>);

impl Row {
    fn add(&mut self, id: VarId, coef: f64) -> &mut Self {
        *self.0.entry(id).or_insert(0.0) += coef;
        self
    }

    fn add_all(&mut self, ids: impl IntoIterator<Item = VarId>, coef: f64) -> &mut Self {
        for id in ids {
            self.add(id, coef);
        }
        self
    }

    fn build(&self, name: String, sense: Sense, rhs: f64) -> LinearConstraint {
        let terms = self.0.iter().filter(|(_, &c)| c != 0.0).map(|(&j, &c)| (j, c)).collect();
        LinearConstraint::new(name, terms, sense, rhs)
    }
}

struct Builder<'a> {
    f: Formulation,
    task: &'a SasTask,
    dtgs: &'a [DomainTransitionGraph],
    paths: &'a [TwoPathTable],
    map: VarMap,
    vars: Vec<ModelVariable>,
    rows: Vec<LinearConstraint>,
}

impl Builder<'_> {
    fn var(&mut self, kind: VarKind, name: String) -> VarId {
        self.vars.push(ModelVariable::binary(name));
        self.map.push(kind)
    }

    fn columns(&mut self) {
        let horizon = self.map.horizon;
        for t in 1..=horizon {
            for a in 0..self.task.actions.len() {
                self.var(VarKind::Action { t, action: a }, format!("x_{t}_{a}"));
            }
        }
        if self.f == Formulation::PathSc {
            for c in 0..self.task.num_vars() {
                for f in 0..self.task.domain_size(c) {
                    self.var(VarKind::End { t: 0, var: c, value: f }, format!("z_0_{c}_{f}"));
                }
            }
        }
        for t in 1..=horizon {
            for c in 0..self.task.num_vars() {
                for e in 0..self.dtgs[c].arcs.len() {
                    self.var(VarKind::Arc { t, var: c, arc: e }, format!("y_{t}_{c}_{e}"));
                }
                for f in 0..self.task.domain_size(c) {
                    self.var(VarKind::Value { t, var: c, value: f }, format!("v_{t}_{c}_{f}"));
                }
                if self.f == Formulation::G2sc {
                    for p in 0..self.paths[c].paths.len() {
                        self.var(VarKind::TwoPath { t, var: c, path: p }, format!("p_{t}_{c}_{p}"));
                    }
                }
                if self.f == Formulation::PathSc {
                    for f in 0..self.task.domain_size(c) {
                        self.var(VarKind::End { t, var: c, value: f }, format!("z_{t}_{c}_{f}"));
                    }
                }
            }
        }
    }

    fn y(&self, c: usize, e: usize, t: usize) -> VarId {
        self.map.y(c, e, t).expect("arc column")
    }

    fn v(&self, c: usize, f: usize, t: usize) -> VarId {
        self.map.value(c, f, t).expect("value column")
    }

    fn p(&self, c: usize, p: usize, t: usize) -> VarId {
        self.map.two_path(c, p, t).expect("two-path column")
    }

    fn z(&self, c: usize, f: usize, t: usize) -> VarId {
        self.map.end(c, f, t).expect("end column")
    }

    fn arcs_in(&self, c: usize, f: usize, t: usize) -> Vec<VarId> {
        self.dtgs[c].in_arcs[f].iter().map(|&e| self.y(c, e, t)).collect()
    }

    fn arcs_out(&self, c: usize, f: usize, t: usize) -> Vec<VarId> {
        self.dtgs[c].out_arcs[f].iter().map(|&e| self.y(c, e, t)).collect()
    }

    fn paths_of(&self, ids: &[usize], c: usize, t: usize) -> Vec<VarId> {
        if self.f == Formulation::G2sc {
            ids.iter().map(|&p| self.p(c, p, t)).collect()
        } else {
            Vec::new()
        }
    }

    /// Flow leaving value `f` at the start of period `t` (layered networks).
    fn leaving(&self, c: usize, f: usize, t: usize) -> Vec<VarId> {
        let mut ids = self.arcs_out(c, f, t);
        ids.push(self.v(c, f, t));
        if self.f == Formulation::G2sc {
            ids.extend(self.paths_of(&self.paths[c].starting[f], c, t));
        }
        ids
    }

    /// Flow arriving at value `f` at the end of period `t` (layered networks).
    fn arriving(&self, c: usize, f: usize, t: usize) -> Vec<VarId> {
        let mut ids = self.arcs_in(c, f, t);
        ids.push(self.v(c, f, t));
        if self.f == Formulation::G2sc {
            ids.extend(self.paths_of(&self.paths[c].ending[f], c, t));
        }
        ids
    }

    fn layered_flows(&mut self) {
        let horizon = self.map.horizon;
        let mut rows = Vec::new();
        for c in 0..self.task.num_vars() {
            for f in 0..self.task.domain_size(c) {
                let rhs = if self.task.initial[c] == f { 1.0 } else { 0.0 };
                rows.push(Row::default().add_all(self.leaving(c, f, 1), 1.0).build(
                    format!("init_{c}_{f}"),
                    Sense::Eq,
                    rhs,
                ));
            }
        }
        for t in 1..horizon {
            for c in 0..self.task.num_vars() {
                for f in 0..self.task.domain_size(c) {
                    let mut r = Row::default();
                    r.add_all(self.leaving(c, f, t + 1), 1.0);
                    r.add_all(self.arriving(c, f, t), -1.0);
                    rows.push(r.build(format!("flow_{t}_{c}_{f}"), Sense::Eq, 0.0));
                }
            }
        }
        for c in 0..self.task.num_vars() {
            if let Some(g) = self.task.goal[c] {
                rows.push(Row::default().add_all(self.arriving(c, g, horizon), 1.0).build(
                    format!("goal_{c}"),
                    Sense::Eq,
                    1.0,
                ));
            }
        }
        self.rows.extend(rows);
    }

    fn path_flows(&mut self) {
        let horizon = self.map.horizon;
        let mut rows = Vec::new();
        for c in 0..self.task.num_vars() {
            for f in 0..self.task.domain_size(c) {
                let rhs = if self.task.initial[c] == f { 1.0 } else { 0.0 };
                rows.push(Row::default().add(self.z(c, f, 0), 1.0).build(
                    format!("init_{c}_{f}"),
                    Sense::Eq,
                    rhs,
                ));
            }
        }
        for t in 1..=horizon {
            for c in 0..self.task.num_vars() {
                for f in 0..self.task.domain_size(c) {
                    let mut r = Row::default();
                    r.add_all(self.arcs_in(c, f, t), 1.0)
                        .add(self.z(c, f, t - 1), 1.0)
                        .add(self.v(c, f, t), -1.0);
                    rows.push(r.build(format!("in_{t}_{c}_{f}"), Sense::Eq, 0.0));
                    let mut r = Row::default();
                    r.add(self.v(c, f, t), 1.0)
                        .add_all(self.arcs_out(c, f, t), -1.0)
                        .add(self.z(c, f, t), -1.0);
                    rows.push(r.build(format!("out_{t}_{c}_{f}"), Sense::Eq, 0.0));
                }
            }
        }
        for c in 0..self.task.num_vars() {
            if let Some(g) = self.task.goal[c] {
                rows.push(Row::default().add(self.z(c, g, horizon), 1.0).build(
                    format!("goal_{c}"),
                    Sense::Eq,
                    1.0,
                ));
            }
        }
        self.rows.extend(rows);
    }

    fn action_links(&mut self) {
        let horizon = self.map.horizon;
        let mut rows = Vec::new();
        for t in 1..=horizon {
            for c in 0..self.task.num_vars() {
                let dtg = &self.dtgs[c];
                for (e, arc) in dtg.arcs.iter().enumerate() {
                    let mut r = Row::default();
                    r.add_all(arc.actions.iter().map(|&a| self.map.x(a, t)), 1.0);
                    r.add(self.y(c, e, t), -1.0);
                    if self.f == Formulation::G2sc {
                        r.add_all(self.paths_of(&self.paths[c].by_arc[e], c, t), -1.0);
                    }
                    rows.push(r.build(format!("eff_{t}_{c}_{e}"), Sense::Eq, 0.0));
                }
            }
            for (a, action) in self.task.actions.iter().enumerate() {
                for (&c, &f) in &action.prevails {
                    let mut r = Row::default();
                    r.add(self.map.x(a, t), 1.0).add(self.v(c, f, t), -1.0);
                    if matches!(self.f, Formulation::G1sc | Formulation::G2sc) {
                        r.add_all(self.arcs_in(c, f, t), -1.0);
                        r.add_all(self.arcs_out(c, f, t), -1.0);
                    }
                    if self.f == Formulation::G2sc {
                        let table = &self.paths[c];
                        r.add_all(self.paths_of(&table.through[f], c, t), -1.0);
                        r.add_all(self.paths_of(&table.ending[f], c, t), -1.0);
                        r.add_all(self.paths_of(&table.starting[f], c, t), -1.0);
                    }
                    rows.push(r.build(format!("prev_{t}_{a}_{c}"), Sense::Le, 0.0));
                }
            }
        }
        self.rows.extend(rows);
    }
}

/// Encodes `task` with `horizon` periods. The objective minimizes the
/// number of executed actions.
pub fn encode(task: &SasTask, formulation: Formulation, horizon: usize) -> Result<Encoding, EncodeError> {
    if horizon < 1 {
        return Err(EncodeError::ZeroHorizon);
    }
    let violations = task.validate();
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(EncodeError::InvalidTask(msgs.join("; ")));
    }
    let task = if task.has_undefined_preconditions() {
        task.split_undefined_preconditions()
    } else {
        task.clone()
    };
    let dtgs = build_dtgs(&task);
    let two_paths: Vec<TwoPathTable> = if formulation == Formulation::G2sc {
        dtgs.iter().map(enumerate_two_paths).collect()
    } else {
        Vec::new()
    };
    let mut b = Builder {
        f: formulation,
        task: &task,
        dtgs: &dtgs,
        paths: &two_paths,
        map: VarMap::new(horizon, task.actions.len()),
        vars: Vec::new(),
        rows: Vec::new(),
    };
    b.columns();
    if formulation == Formulation::PathSc {
        b.path_flows();
    } else {
        b.layered_flows();
    }
    b.action_links();
    let objective = (0..horizon * task.actions.len()).map(|j| (j, 1.0)).collect();
    let Builder { map, vars, rows, .. } = b;
    let model = MipModel::new(vars, rows, objective)?;
    Ok(Encoding { formulation, task, dtgs, two_paths, model, map })
}

pub fn encode_1sc(task: &SasTask, horizon: usize) -> Result<Encoding, EncodeError> {
    encode(task, Formulation::OneSc, horizon)
}

pub fn encode_g1sc(task: &SasTask, horizon: usize) -> Result<Encoding, EncodeError> {
    encode(task, Formulation::G1sc, horizon)
}

pub fn encode_g2sc(task: &SasTask, horizon: usize) -> Result<Encoding, EncodeError> {
    encode(task, Formulation::G2sc, horizon)
}

pub fn encode_pathsc(task: &SasTask, horizon: usize) -> Result<Encoding, EncodeError> {
    encode(task, Formulation::PathSc, horizon)
}
