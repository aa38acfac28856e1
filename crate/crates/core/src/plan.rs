//! Decoding integer points into parallel plans, ordering each period and
//! checking the result by sequential simulation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

use crate::formulations::{Formulation, VarMap};
use crate::model::INTEGRALITY_TOL;
use crate::sas::SasTask;
use crate::separation::PrecedenceGraph;

/// A parallel plan. `periods[t - 1]` lists the indices of the actions
/// executed in period `t`, ascending; indices refer to the encoded task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub formulation: Formulation,
    pub horizon: usize,
    pub periods: Vec<Vec<usize>>,
}

impl Plan {
    pub fn num_actions(&self) -> usize {
        self.periods.iter().map(Vec::len).sum()
    }

    /// Original (pre-duplication) names per period.
    pub fn period_names<'a>(&self, task: &'a SasTask) -> Vec<Vec<&'a str>> {
        self.periods
            .iter()
            .map(|p| p.iter().map(|&a| task.actions[a].original_name()).collect())
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("action column {var} has fractional value {value}")]
    Fractional { var: usize, value: f64 },
    #[error("point has {found} values, expected at least {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("period {period} contains a precedence cycle among actions {actions:?}")]
    Cycle { period: usize, actions: Vec<usize> },
}

/// Period `t` holds exactly the actions with `x[a][t] >= 1 - 1e-6`.
pub fn extract_plan(values: &[f64], map: &VarMap, formulation: Formulation) -> Result<Plan, PlanError> {
    let n = map.num_actions();
    let needed = n * map.horizon;
    if values.len() < needed {
        return Err(PlanError::Dimension { expected: needed, found: values.len() });
    }
    let mut periods = Vec::with_capacity(map.horizon);
    for t in 1..=map.horizon {
        let mut period = Vec::new();
        for a in 0..n {
            let id = map.x(a, t);
            let v = values[id];
            if v >= 1.0 - INTEGRALITY_TOL {
                period.push(a);
            } else if v > INTEGRALITY_TOL {
                return Err(PlanError::Fractional { var: id, value: v });
            }
        }
        periods.push(period);
    }
    Ok(Plan { formulation, horizon: map.horizon, periods })
}

/// Topological order of one period's induced subgraph, smallest index first
/// among the available actions.
pub fn order_period(actions: &[usize], graph: &PrecedenceGraph, period: usize) -> Result<Vec<usize>, PlanError> {
    let k = actions.len();
    let pos = |a: usize| actions.iter().position(|&b| b == a);
    let mut indegree = vec![0usize; k];
    let mut succ = vec![Vec::new(); k];
    for (i, &a) in actions.iter().enumerate() {
        for &b in graph.successors(a) {
            if let Some(j) = pos(b) {
                succ[i].push(j);
                indegree[j] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..k)
        .filter(|&i| indegree[i] == 0)
        .map(|i| Reverse((actions[i], i)))
        .collect();
    let mut out = Vec::with_capacity(k);
    while let Some(Reverse((a, i))) = ready.pop() {
        out.push(a);
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse((actions[j], j)));
            }
        }
    }
    if out.len() < k {
        let mut stuck: Vec<usize> = (0..k).filter(|&i| indegree[i] > 0).map(|i| actions[i]).collect();
        stuck.sort_unstable();
        return Err(PlanError::Cycle { period, actions: stuck });
    }
    Ok(out)
}

/// Ordered periods.
pub fn linearize_periods(plan: &Plan, graph: &PrecedenceGraph) -> Result<Vec<Vec<usize>>, PlanError> {
    plan.periods
        .iter()
        .enumerate()
        .map(|(i, p)| order_period(p, graph, i + 1))
        .collect()
}

/// Concatenation of the ordered periods.
pub fn linearize(plan: &Plan, graph: &PrecedenceGraph) -> Result<Vec<usize>, PlanError> {
    Ok(linearize_periods(plan, graph)?.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    /// An effect precondition or prevail condition did not hold.
    Step { step: usize, action: String, var: usize, expected: usize, actual: usize },
    /// A goal value was not reached.
    Goal { var: usize, expected: usize, actual: usize },
    /// A period breaks the structural limits of its formulation.
    Shape { period: usize, var: usize, reason: String },
    /// An action index outside the task.
    UnknownAction { step: usize, action: usize },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Step { step, action, var, expected, actual } => write!(
                f,
                "step {step} `{action}`: var{var} is {actual}, needs {expected}"
            ),
            Failure::Goal { var, expected, actual } => {
                write!(f, "goal: var{var} is {actual}, needs {expected}")
            }
            Failure::Shape { period, var, reason } => write!(f, "period {period}, var{var}: {reason}"),
            Failure::UnknownAction { step, action } => write!(f, "step {step}: unknown action {action}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Simulates `sequence` from the initial state under sequential semantics
/// and checks the goal at the end.
pub fn validate_linear(task: &SasTask, sequence: &[usize]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut state = task.initial.clone();
    for (step, &a) in sequence.iter().enumerate() {
        let Some(action) = task.actions.get(a) else {
            report.failures.push(Failure::UnknownAction { step, action: a });
            continue;
        };
        let mut fail = |var: usize, expected: usize, actual: usize| {
            report.failures.push(Failure::Step { step, action: action.name.clone(), var, expected, actual });
        };
        for (&var, e) in &action.effects {
            if let Some(pre) = e.pre {
                if state[var] != pre {
                    fail(var, pre, state[var]);
                }
            }
        }
        for (&var, &val) in &action.prevails {
            if state[var] != val {
                fail(var, val, state[var]);
            }
        }
        action.apply(&mut state);
    }
    for (var, g) in task.goal.iter().enumerate() {
        if let Some(g) = *g {
            if state[var] != g {
                report.failures.push(Failure::Goal { var, expected: g, actual: state[var] });
            }
        }
    }
    report
}

/// Checks every period against the per-period limits of the plan's
/// formulation. Each variable's trajectory within a period is recovered by
/// chaining the effects of the period's actions from the value held at the
/// period start.
pub fn check_formulation_shape(task: &SasTask, plan: &Plan) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut state = task.initial.clone();
    let prevailed_anywhere = |var: usize, value: usize| {
        task.actions.iter().any(|a| a.prevails.get(&var) == Some(&value))
    };
    for (i, period) in plan.periods.iter().enumerate() {
        let t = i + 1;
        for var in 0..task.num_vars() {
            let mut shape = |reason: String| {
                report.failures.push(Failure::Shape { period: t, var, reason });
            };
            let mut effects: Vec<(Option<usize>, usize)> = period
                .iter()
                .filter_map(|&a| task.actions[a].effects.get(&var).map(|e| (e.pre, e.post)))
                .collect();
            let prevails: Vec<usize> = period
                .iter()
                .filter_map(|&a| task.actions[a].prevails.get(&var).copied())
                .collect();
            // chain the effects from the start value
            let mut trajectory = vec![state[var]];
            while !effects.is_empty() {
                let cur = *trajectory.last().unwrap();
                let next = effects
                    .iter()
                    .position(|&(pre, post)| pre == Some(cur) && post != cur)
                    .or_else(|| effects.iter().position(|&(pre, post)| pre.is_none() && post != cur));
                match next {
                    Some(k) => trajectory.push(effects.swap_remove(k).1),
                    None => break,
                }
            }
            if !effects.is_empty() {
                shape(format!("{} effect(s) do not chain from value {}", effects.len(), trajectory.last().unwrap()));
            }
            let changes = trajectory.len() - 1;
            match plan.formulation {
                Formulation::OneSc => {
                    if changes > 1 {
                        shape(format!("{changes} changes, at most 1 allowed"));
                    }
                    if changes > 0 && !prevails.is_empty() {
                        shape("prevailed value changes in the same period".into());
                    }
                    if prevails.iter().any(|&p| p != state[var]) {
                        shape("prevail does not hold at period start".into());
                    }
                }
                Formulation::G1sc | Formulation::G2sc => {
                    let cap = if plan.formulation == Formulation::G1sc { 1 } else { 2 };
                    if changes > cap {
                        shape(format!("{changes} changes, at most {cap} allowed"));
                    }
                    if changes == 2 && trajectory[0] == trajectory[2] && prevailed_anywhere(var, trajectory[0]) {
                        shape(format!("returns to prevailed value {}", trajectory[0]));
                    }
                    if prevails.iter().any(|p| !trajectory.contains(p)) {
                        shape("prevailed value not on the period's trajectory".into());
                    }
                }
                Formulation::PathSc => {
                    let mut seen = trajectory.clone();
                    seen.sort_unstable();
                    seen.dedup();
                    if seen.len() != trajectory.len() {
                        shape(format!("trajectory {trajectory:?} revisits a value"));
                    }
                    if prevails.iter().any(|p| !trajectory.contains(p)) {
                        shape("prevailed value not on the period's trajectory".into());
                    }
                }
            }
            state[var] = *trajectory.last().unwrap();
        }
    }
    report
}

/// Writes ordered periods as `; period k` headers followed by one
/// `(name)` line per action, lower case, duplicate suffixes removed.
pub fn write_plan(task: &SasTask, ordered: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for (i, period) in ordered.iter().enumerate() {
        out.push_str(&format!("; period {}\n", i + 1));
        for &a in period {
            out.push('(');
            out.push_str(&task.actions[a].original_name().to_lowercase());
            out.push_str(")\n");
        }
    }
    out
}
