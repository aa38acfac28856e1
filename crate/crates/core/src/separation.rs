//! Implied precedence graphs and separation of violated ordering cycles.
//!
//! Within one period, a cycle `Δ` in the precedence graph restricted to the
//! executed actions cannot be linearized; the row
//! `Σ_{a ∈ V(Δ)} x[a][t] ≤ |V(Δ)| - 1` removes it. Cycles are found by
//! all-pairs shortest paths over the weights `1 - (x_a + x_b - 1)`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::model::{LinearConstraint, Sense, VarId};
use crate::sas::{build_dtgs, SasTask};

/// Nodes enter the weighted subgraph above this activity.
pub const NODE_THRESHOLD: f64 = 1e-9;
/// Strictness of the violation tests.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphVariant {
    /// Prevail-before-delete and add-before-prevail arcs.
    Base,
    /// Base arcs plus add-before-delete arcs on a shared value.
    Primed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcCause {
    /// `a` prevails a value that `b` changes away from.
    PrevailBeforeLeave,
    /// `a` changes into a value that `b` prevails.
    EnterBeforePrevail,
    /// `a` changes into a value that `b` changes away from.
    EnterBeforeLeave,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrecedenceArc {
    pub from: usize,
    pub to: usize,
    pub var: usize,
    pub cause: ArcCause,
}

/// Directed graph over action indices. No self-arcs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedenceGraph {
    num_actions: usize,
    /// Every `(from, to, var, cause)` reason, sorted.
    reasons: Vec<PrecedenceArc>,
    /// Sorted successor lists.
    succ: Vec<Vec<usize>>,
}

impl PrecedenceGraph {
    pub fn from_arcs(num_actions: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let reasons = arcs
            .into_iter()
            .map(|(from, to)| PrecedenceArc { from, to, var: 0, cause: ArcCause::EnterBeforeLeave })
            .collect();
        Self::from_reasons(num_actions, reasons)
    }

    fn from_reasons(num_actions: usize, mut reasons: Vec<PrecedenceArc>) -> Self {
        reasons.retain(|r| r.from != r.to);
        reasons.sort();
        reasons.dedup();
        let mut succ = vec![Vec::new(); num_actions];
        for r in &reasons {
            succ[r.from].push(r.to);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        PrecedenceGraph { num_actions, reasons, succ }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn has_arc(&self, a: usize, b: usize) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }

    pub fn successors(&self, a: usize) -> &[usize] {
        &self.succ[a]
    }

    /// Distinct arcs, sorted.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (0..self.num_actions).flat_map(|a| self.succ[a].iter().map(move |&b| (a, b))).collect()
    }

    pub fn reasons(&self) -> &[PrecedenceArc] {
        &self.reasons
    }

    pub fn num_arcs(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }
}

/// Builds the implied precedence graph of `task`. Effects with undefined
/// precondition leave every value other than their postcondition.
pub fn build_precedence_graph(task: &SasTask, variant: GraphVariant) -> PrecedenceGraph {
    let mut reasons = Vec::new();
    for dtg in build_dtgs(task) {
        let var = dtg.var;
        for f in 0..dtg.num_values {
            let collect = |arcs: &[usize]| -> BTreeSet<usize> {
                arcs.iter().flat_map(|&e| dtg.arcs[e].actions.iter().copied()).collect()
            };
            let leavers = collect(&dtg.out_arcs[f]);
            let enterers = collect(&dtg.in_arcs[f]);
            for &p in &dtg.prevailed_by[f] {
                for &b in &leavers {
                    reasons.push(PrecedenceArc { from: p, to: b, var, cause: ArcCause::PrevailBeforeLeave });
                }
                for &a in &enterers {
                    reasons.push(PrecedenceArc { from: a, to: p, var, cause: ArcCause::EnterBeforePrevail });
                }
            }
            if variant == GraphVariant::Primed {
                for &a in &enterers {
                    for &b in &leavers {
                        reasons.push(PrecedenceArc { from: a, to: b, var, cause: ArcCause::EnterBeforeLeave });
                    }
                }
            }
        }
    }
    PrecedenceGraph::from_reasons(task.actions.len(), reasons)
}

/// How strictly a cycle must be violated to be reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SeparationMode {
    /// Report when the cycle's complemented length is below 1.
    #[default]
    Paper,
    /// Report whenever the cycle row is violated, i.e. complemented length
    /// below 2.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CutStrategy {
    /// Stop at the first violated cycle.
    #[default]
    First,
    /// Report every distinct violated cycle found by the arc scan.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CutScope {
    /// Emit the cycle row for every period.
    #[default]
    AllPeriods,
    /// Emit the row only for the period it was found in.
    Period,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($name:literal => $v:expr),+) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($v),)+
                    _ => Err(format!(concat!("unknown ", $what, " `{}`"), s)),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $v { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(SeparationMode, "separation mode", "paper" => SeparationMode::Paper, "exact" => SeparationMode::Exact);
keyword_enum!(CutStrategy, "cut strategy", "first" => CutStrategy::First, "all" => CutStrategy::All);
keyword_enum!(CutScope, "cut scope", "all" => CutScope::AllPeriods, "period" => CutScope::Period);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SeparationConfig {
    pub mode: SeparationMode,
    pub strategy: CutStrategy,
    pub scope: CutScope,
}

/// The precedence graph restricted to actions active in one period, with
/// arc weights and all-pairs shortest complemented distances.
#[derive(Clone, Debug)]
pub struct WeightedSubgraph {
    pub period: usize,
    /// Active actions, ascending.
    pub nodes: Vec<usize>,
    values: Vec<f64>,
    dist: Vec<Vec<f64>>,
    next: Vec<Vec<Option<usize>>>,
    graph_arcs: Vec<(usize, usize)>,
}

impl WeightedSubgraph {
    /// `values[a]` is the activity of action `a` in `period`.
    pub fn new(graph: &PrecedenceGraph, values: &[f64], period: usize) -> Self {
        let nodes: Vec<usize> = (0..graph.num_actions()).filter(|&a| values[a] > NODE_THRESHOLD).collect();
        let k = nodes.len();
        let mut pos = vec![usize::MAX; graph.num_actions()];
        for (i, &a) in nodes.iter().enumerate() {
            pos[a] = i;
        }
        let mut dist = vec![vec![f64::INFINITY; k]; k];
        let mut next = vec![vec![None; k]; k];
        let mut graph_arcs = Vec::new();
        for (i, &a) in nodes.iter().enumerate() {
            dist[i][i] = 0.0;
            next[i][i] = Some(i);
            for &b in graph.successors(a) {
                let j = pos[b];
                if j != usize::MAX {
                    let wbar = 2.0 - values[a] - values[b];
                    dist[i][j] = wbar.max(0.0);
                    next[i][j] = Some(j);
                    graph_arcs.push((a, b));
                }
            }
        }
        for m in 0..k {
            for i in 0..k {
                let dim = dist[i][m];
                if dim == f64::INFINITY {
                    continue;
                }
                for j in 0..k {
                    let cand = dim + dist[m][j];
                    if cand < dist[i][j] {
                        dist[i][j] = cand;
                        next[i][j] = next[i][m];
                    }
                }
            }
        }
        let vals = nodes.iter().map(|&a| values[a]).collect();
        WeightedSubgraph { period, nodes, values: vals, dist, next, graph_arcs }
    }

    fn pos(&self, a: usize) -> Option<usize> {
        self.nodes.binary_search(&a).ok()
    }

    /// `w_{a,b} = x_a + x_b - 1` for arcs of the subgraph.
    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        if self.graph_arcs.binary_search(&(a, b)).is_err() {
            return None;
        }
        Some(self.values[self.pos(a)?] + self.values[self.pos(b)?] - 1.0)
    }

    /// Shortest complemented distance from `a` to `b`, `None` if unreachable.
    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        let d = self.dist[self.pos(a)?][self.pos(b)?];
        d.is_finite().then_some(d)
    }

    /// Nodes of a shortest path from `a` to `b`, both ends included.
    pub fn path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let (mut i, j) = (self.pos(a)?, self.pos(b)?);
        self.next[i][j]?;
        let mut out = vec![self.nodes[i]];
        while i != j {
            i = self.next[i][j]?;
            out.push(self.nodes[i]);
        }
        Some(out)
    }

    /// Subgraph arcs in ascending `(from, to)` order.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.graph_arcs
    }

    /// Cycles closed by arcs `(b, a)` whose shortest return path `a ~> b`
    /// passes the mode's test, as sorted action sets.
    pub fn violated_cycles(&self, mode: SeparationMode, strategy: CutStrategy) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for &(b, a) in &self.graph_arcs {
            let Some(d) = self.distance(a, b) else { continue };
            let w_ba = self.values[self.pos(b).unwrap()] + self.values[self.pos(a).unwrap()] - 1.0;
            let violated = match mode {
                SeparationMode::Paper => d - w_ba < -VIOLATION_TOL,
                SeparationMode::Exact => d + (1.0 - w_ba) < 2.0 - VIOLATION_TOL,
            };
            if !violated {
                continue;
            }
            let mut cycle = self.path(a, b).expect("reachable");
            cycle.sort_unstable();
            cycle.dedup();
            let lhs: f64 = cycle.iter().map(|&v| self.values[self.pos(v).unwrap()]).sum();
            if lhs <= (cycle.len() - 1) as f64 + VIOLATION_TOL || out.contains(&cycle) {
                continue;
            }
            out.push(cycle);
            if strategy == CutStrategy::First {
                break;
            }
        }
        out
    }
}

/// A cycle found in one period. `actions` is sorted and has at least two
/// members.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycleCut {
    pub actions: Vec<usize>,
    pub period: usize,
}

impl CycleCut {
    pub fn rhs(&self) -> f64 {
        (self.actions.len() - 1) as f64
    }

    /// The cycle row for period `t` over columns `x(a, t)`.
    pub fn row(&self, t: usize, x: impl Fn(usize, usize) -> VarId) -> LinearConstraint {
        let mut name = format!("cyc_{t}");
        for a in &self.actions {
            name.push('_');
            name.push_str(&a.to_string());
        }
        let terms = self.actions.iter().map(|&a| (x(a, t), 1.0)).collect();
        LinearConstraint::new(name, terms, Sense::Le, self.rhs())
    }
}

/// Action activities of period `t` in a point laid out with action columns
/// first, `(t - 1) * num_actions + a`.
pub fn period_values(point: &[f64], num_actions: usize, t: usize) -> &[f64] {
    &point[(t - 1) * num_actions..t * num_actions]
}

/// Separates cycles violated in period `t`.
pub fn separate(
    point: &[f64],
    num_actions: usize,
    graph: &PrecedenceGraph,
    t: usize,
    mode: SeparationMode,
    strategy: CutStrategy,
) -> Vec<CycleCut> {
    WeightedSubgraph::new(graph, period_values(point, num_actions, t), t)
        .violated_cycles(mode, strategy)
        .into_iter()
        .map(|actions| CycleCut { actions, period: t })
        .collect()
}

/// Periods a cut is emitted for.
pub fn lift_cut(cut: &CycleCut, horizon: usize, scope: CutScope) -> Vec<usize> {
    match scope {
        CutScope::AllPeriods => (1..=horizon).collect(),
        CutScope::Period => vec![cut.period],
    }
}

/// Stateful separator for one encoding: remembers which `(cycle, period)`
/// rows were already emitted and never emits them twice.
#[derive(Clone, Debug)]
pub struct CycleSeparator {
    graph: PrecedenceGraph,
    horizon: usize,
    config: SeparationConfig,
    emitted: HashSet<(Vec<usize>, usize)>,
    cycles_found: usize,
}

impl CycleSeparator {
    pub fn new(graph: PrecedenceGraph, horizon: usize, config: SeparationConfig) -> Self {
        CycleSeparator { graph, horizon, config, emitted: HashSet::new(), cycles_found: 0 }
    }

    pub fn graph(&self) -> &PrecedenceGraph {
        &self.graph
    }

    /// Distinct cycles that produced at least one new row.
    pub fn cycles_found(&self) -> usize {
        self.cycles_found
    }

    fn x(&self) -> impl Fn(usize, usize) -> VarId {
        let n = self.graph.num_actions();
        move |a, t| (t - 1) * n + a
    }

    /// New rows cutting off `point`. Periods are scanned in order; under the
    /// first-cut strategy the first cycle contributing a new row wins.
    pub fn cuts(&mut self, point: &[f64]) -> Vec<LinearConstraint> {
        let n = self.graph.num_actions();
        let mut rows = Vec::new();
        for t in 1..=self.horizon {
            let sub = WeightedSubgraph::new(&self.graph, period_values(point, n, t), t);
            for actions in sub.violated_cycles(self.config.mode, CutStrategy::All) {
                let cut = CycleCut { actions, period: t };
                let mut fresh = false;
                for tt in lift_cut(&cut, self.horizon, self.config.scope) {
                    if self.emitted.insert((cut.actions.clone(), tt)) {
                        rows.push(cut.row(tt, self.x()));
                        fresh = true;
                    }
                }
                if fresh {
                    self.cycles_found += 1;
                    if self.config.strategy == CutStrategy::First {
                        return rows;
                    }
                }
            }
        }
        rows
    }

    /// Whether no period of `point` contains a violated cycle, regardless of
    /// rows already emitted.
    pub fn is_acyclic(&self, point: &[f64]) -> bool {
        let n = self.graph.num_actions();
        (1..=self.horizon).all(|t| {
            WeightedSubgraph::new(&self.graph, period_values(point, n, t), t)
                .violated_cycles(SeparationMode::Exact, CutStrategy::First)
                .is_empty()
        })
    }
}
