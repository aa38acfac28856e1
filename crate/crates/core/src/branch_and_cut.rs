//! LP-based branch-and-bound with cuts generated at every node.
//!
//! Nodes are explored best-bound first. At a node the LP is solved, then
//! the separator is asked for violated rows; rows found are appended to the
//! shared relaxation (never removed) and the node is re-solved. A node whose
//! point is integral and cut-free becomes the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{LinearConstraint, MipModel, SolutionPoint, SolveStatus, VarId, FEASIBILITY_TOL, INTEGRALITY_TOL};
use crate::separation::CycleSeparator;
use crate::simplex::{LpError, LpOptions, LpSolver};

/// Produces rows violated by a point of the current relaxation.
pub trait Separator {
    /// New rows cutting off `point`; empty when none is found.
    fn cuts(&mut self, point: &[f64]) -> Vec<LinearConstraint>;

    /// Whether an integral `point` is acceptable to the separator's family.
    fn accepts(&self, _point: &[f64]) -> bool {
        true
    }
}

/// Separator for models without lazily generated rows.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoCuts;

impl Separator for NoCuts {
    fn cuts(&mut self, _point: &[f64]) -> Vec<LinearConstraint> {
        Vec::new()
    }
}

impl Separator for CycleSeparator {
    fn cuts(&mut self, point: &[f64]) -> Vec<LinearConstraint> {
        CycleSeparator::cuts(self, point)
    }

    fn accepts(&self, point: &[f64]) -> bool {
        self.is_acyclic(point)
    }
}

impl<S: Separator + ?Sized> Separator for &mut S {
    fn cuts(&mut self, point: &[f64]) -> Vec<LinearConstraint> {
        (**self).cuts(point)
    }

    fn accepts(&self, point: &[f64]) -> bool {
        (**self).accepts(point)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Stop at the first incumbent.
    #[default]
    FirstFeasible,
    /// Continue until the pool is exhausted.
    Optimize,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub node_limit: usize,
    pub time_limit: Duration,
    pub lp: LpOptions,
    /// Keep one log entry per processed node.
    pub record_log: bool,
    /// Columns `0..preferred_columns` win fractionality ties.
    pub preferred_columns: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::FirstFeasible,
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(1800),
            lp: LpOptions::default(),
            record_log: true,
            preferred_columns: 0,
        }
    }
}

/// A subproblem: the root box tightened by `overrides`.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchNode {
    pub overrides: Vec<(VarId, f64, f64)>,
    /// LP value of the parent; a lower bound for the subtree.
    pub bound: f64,
    pub depth: usize,
    seq: u64,
}

impl SearchNode {
    pub fn root() -> Self {
        SearchNode { overrides: Vec::new(), bound: f64::NEG_INFINITY, depth: 0, seq: 0 }
    }
}

/// Heap entry ordered so that the maximum is the node to explore next.
#[derive(Debug)]
struct Ranked(SearchNode);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        b.bound
            .total_cmp(&a.bound)
            .then(a.depth.cmp(&b.depth))
            .then(b.seq.cmp(&a.seq))
    }
}

/// Open nodes. Smallest bound first, then deepest, then oldest.
#[derive(Debug, Default)]
pub struct NodePool {
    heap: BinaryHeap<Ranked>,
    next_seq: u64,
}

impl NodePool {
    pub fn new() -> Self {
        NodePool::default()
    }

    pub fn push(&mut self, mut node: SearchNode) {
        node.seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Ranked(node));
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Smallest bound among open nodes.
    pub fn best_bound(&self) -> Option<f64> {
        self.heap.peek().map(|r| r.0.bound)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BranchError {
    #[error("no fractional integral variable")]
    Integral,
    #[error("the node pool is empty")]
    EmptyPool,
}

/// Removes the node with the smallest bound, ties to the deepest node, then
/// to the earliest inserted.
pub fn choose_next_node(pool: &mut NodePool) -> Result<SearchNode, BranchError> {
    pool.heap.pop().map(|r| r.0).ok_or(BranchError::EmptyPool)
}

fn fractionality(v: f64) -> f64 {
    (v - v.floor()).min(v.ceil() - v)
}

/// Most fractional variable among `integral`. Ties (within 1e-9) prefer
/// `preferred` variables, then the lowest id.
pub fn choose_branch_variable(
    values: &[f64],
    integral: &[VarId],
    preferred: impl Fn(VarId) -> bool,
) -> Result<VarId, BranchError> {
    let best = integral
        .iter()
        .map(|&j| fractionality(values[j]))
        .fold(0.0_f64, f64::max);
    if best <= INTEGRALITY_TOL {
        return Err(BranchError::Integral);
    }
    integral
        .iter()
        .copied()
        .filter(|&j| fractionality(values[j]) >= best - 1e-9)
        .min_by_key(|&j| (!preferred(j), j))
        .ok_or(BranchError::Integral)
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeAction {
    PruneInfeasible,
    PruneBound,
    /// Rows appended before re-solving the same node.
    Cut(usize),
    Branch(VarId),
    Incumbent,
}

impl fmt::Display for NodeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeAction::PruneInfeasible => f.write_str("prune infeasible"),
            NodeAction::PruneBound => f.write_str("prune bound"),
            NodeAction::Cut(n) => write!(f, "cut {n}"),
            NodeAction::Branch(j) => write!(f, "branch {j}"),
            NodeAction::Incumbent => f.write_str("incumbent"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    pub node: usize,
    pub depth: usize,
    /// LP value at the time of the action; infinite when infeasible.
    pub lp_value: f64,
    /// Global lower bound when the node was selected.
    pub best_bound: f64,
    pub action: NodeAction,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node={} depth={} lp={:.6} bound={:.6} action={}",
            self.node, self.depth, self.lp_value, self.best_bound, self.action
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchCounters {
    pub nodes: usize,
    pub lp_solves: usize,
    pub cuts_added: usize,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpStatus {
    /// Pool exhausted with an incumbent (optimize mode).
    Optimal,
    /// First incumbent found (first-feasible mode).
    Feasible,
    /// Pool exhausted without an incumbent.
    Infeasible,
    /// Time or node limit hit.
    Timeout,
}

#[derive(Clone, Debug)]
pub struct SearchState {
    pub mode: SearchMode,
    pub incumbent: Option<SolutionPoint>,
    pub counters: SearchCounters,
    /// Rows appended by the separator, in order.
    pub cuts: Vec<LinearConstraint>,
    pub log: Vec<LogEntry>,
    /// Lower bound on the optimum when the search stopped.
    pub best_bound: f64,
    pub elapsed: Duration,
}

impl SearchState {
    /// Incumbent value `Z*`.
    pub fn incumbent_value(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|p| p.objective)
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("LP failure: {0}")]
    Lp(#[from] LpError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("incumbent rejected: {0}")]
    InvalidIncumbent(String),
}

#[derive(Clone, Debug)]
pub struct IpResult {
    pub status: IpStatus,
    pub state: SearchState,
}

/// Objective coefficients integral and only on integral columns: objective
/// values of integral points are integers.
fn integral_objective(model: &MipModel) -> bool {
    model
        .objective()
        .iter()
        .all(|&(j, c)| c.fract() == 0.0 && model.variables()[j].integral)
}

struct Engine<'a, S: Separator> {
    model: &'a MipModel,
    sep: S,
    config: &'a SearchConfig,
    lp: LpSolver,
    integral: Vec<VarId>,
    int_obj: bool,
    state: SearchState,
    start: Instant,
}

impl<S: Separator> Engine<'_, S> {
    fn out_of_budget(&self) -> bool {
        self.state.counters.nodes >= self.config.node_limit || self.start.elapsed() >= self.config.time_limit
    }

    /// Whether a relaxation value can no longer beat the incumbent.
    fn dominated(&self, value: f64) -> bool {
        match self.state.incumbent_value() {
            None => false,
            Some(z) if self.int_obj => (value - 1e-6).ceil() >= z - 0.5,
            Some(z) => value >= z - 1e-9,
        }
    }

    fn log(&mut self, node: &SearchNode, lp_value: f64, best_bound: f64, action: NodeAction) {
        if self.config.record_log {
            self.state.log.push(LogEntry {
                node: self.state.counters.nodes,
                depth: node.depth,
                lp_value,
                best_bound,
                action,
            });
        }
    }

    fn solve_lp(&mut self) -> Result<SolutionPoint, SolveError> {
        let before = self.lp.counters().pivots;
        let p = self.lp.solve()?;
        self.state.counters.lp_solves += 1;
        self.state.counters.pivots += self.lp.counters().pivots - before;
        Ok(p)
    }

    fn validate(&self, point: &SolutionPoint) -> Result<SolutionPoint, SolveError> {
        let mut values = point.values.clone();
        for &j in &self.integral {
            values[j] = values[j].round();
        }
        let report = self
            .model
            .check_point(&values, FEASIBILITY_TOL)
            .map_err(|e| SolveError::InvalidIncumbent(e.to_string()))?;
        if !report.is_feasible() {
            return Err(SolveError::InvalidIncumbent(format!("{:?}", report.violations)));
        }
        if let Some(c) = self.state.cuts.iter().find(|c| c.violation(&values) > FEASIBILITY_TOL) {
            return Err(SolveError::InvalidIncumbent(format!("violates cut {}", c.name)));
        }
        if !self.sep.accepts(&values) {
            return Err(SolveError::InvalidIncumbent("separator rejects point".into()));
        }
        let objective = self.model.objective_value(&values);
        Ok(SolutionPoint { values, objective, status: SolveStatus::Feasible })
    }

    fn run(&mut self) -> Result<IpStatus, SolveError> {
        let mut pool = NodePool::new();
        pool.push(SearchNode::root());
        while let Some(best_bound) = pool.best_bound() {
            if self.out_of_budget() {
                self.state.best_bound = best_bound;
                return Ok(IpStatus::Timeout);
            }
            let node = choose_next_node(&mut pool).expect("pool checked nonempty");
            self.state.counters.nodes += 1;
            if self.dominated(node.bound) {
                self.log(&node, node.bound, best_bound, NodeAction::PruneBound);
                continue;
            }
            self.lp.set_bounds(&node.overrides)?;
            loop {
                let p = self.solve_lp()?;
                match p.status {
                    SolveStatus::Infeasible => {
                        self.log(&node, f64::INFINITY, best_bound, NodeAction::PruneInfeasible);
                        break;
                    }
                    SolveStatus::Unbounded => return Err(SolveError::Unbounded),
                    _ => {}
                }
                if self.dominated(p.objective) {
                    self.log(&node, p.objective, best_bound, NodeAction::PruneBound);
                    break;
                }
                let rows = self.sep.cuts(&p.values);
                if !rows.is_empty() {
                    for r in &rows {
                        self.model.check_row(r).map_err(|e| SolveError::InvalidIncumbent(e.to_string()))?;
                    }
                    self.state.counters.cuts_added += rows.len();
                    self.log(&node, p.objective, best_bound, NodeAction::Cut(rows.len()));
                    self.lp.add_rows(&rows);
                    self.state.cuts.extend(rows);
                    if self.start.elapsed() >= self.config.time_limit {
                        self.state.best_bound = best_bound;
                        return Ok(IpStatus::Timeout);
                    }
                    continue;
                }
                let prefix = self.config.preferred_columns;
                let preferred = |j: VarId| j < prefix;
                match choose_branch_variable(&p.values, &self.integral, preferred) {
                    Ok(j) => {
                        let v = p.values[j];
                        let bound = p.objective.max(node.bound);
                        let mut left = node.overrides.clone();
                        left.push((j, f64::NEG_INFINITY, v.floor()));
                        let mut right = node.overrides.clone();
                        right.push((j, v.ceil(), f64::INFINITY));
                        pool.push(SearchNode { overrides: left, bound, depth: node.depth + 1, seq: 0 });
                        pool.push(SearchNode { overrides: right, bound, depth: node.depth + 1, seq: 0 });
                        self.log(&node, p.objective, best_bound, NodeAction::Branch(j));
                    }
                    Err(_) => {
                        let point = self.validate(&p)?;
                        self.log(&node, point.objective, best_bound, NodeAction::Incumbent);
                        self.state.incumbent = Some(point);
                        if self.config.mode == SearchMode::FirstFeasible {
                            self.state.best_bound = best_bound;
                            return Ok(IpStatus::Feasible);
                        }
                    }
                }
                break;
            }
        }
        Ok(match &self.state.incumbent {
            Some(p) => {
                self.state.best_bound = p.objective;
                IpStatus::Optimal
            }
            None => {
                self.state.best_bound = f64::INFINITY;
                IpStatus::Infeasible
            }
        })
    }
}

/// Branch-and-cut on `model`. Variables flagged integral are branched on;
/// ties in fractionality go to the lowest column id.
pub fn solve_ip<S: Separator>(model: &MipModel, separator: S, config: &SearchConfig) -> Result<IpResult, SolveError> {
    let start = Instant::now();
    let mut engine = Engine {
        model,
        sep: separator,
        config,
        lp: LpSolver::new(model, config.lp),
        integral: model.integral_vars(),
        int_obj: integral_objective(model),
        state: SearchState {
            mode: config.mode,
            incumbent: None,
            counters: SearchCounters::default(),
            cuts: Vec::new(),
            log: Vec::new(),
            best_bound: f64::NEG_INFINITY,
            elapsed: Duration::ZERO,
        },
        start,
    };
    let status = engine.run()?;
    engine.state.elapsed = start.elapsed();
    Ok(IpResult { status, state: engine.state })
}
