//! Shortest parallel plans by explicit search. A period is any sequence of
//! distinct actions that executes sequentially and respects the
//! formulation's per-variable limit on the value trajectory:
//!
//! * one change, and no prevail on a changed variable;
//! * one change;
//! * two changes, never returning to the start value;
//! * any number of changes, never revisiting a value.

use std::collections::HashSet;

use flowplan::formulations::Formulation;
use flowplan::sas::SasTask;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Partial {
    state: Vec<usize>,
    used: u128,
    /// Values taken by each variable so far in this period, start included.
    trajectories: Vec<Vec<usize>>,
    prevailed: u64,
}

fn trajectory_ok(f: Formulation, traj: &[usize]) -> bool {
    match f {
        Formulation::OneSc | Formulation::G1sc => traj.len() <= 2,
        Formulation::G2sc => traj.len() <= 2 || (traj.len() == 3 && traj[2] != traj[0]),
        Formulation::PathSc => {
            let mut seen = HashSet::new();
            traj.iter().all(|v| seen.insert(*v))
        }
    }
}

/// States reachable from `state` in one period.
pub fn successors(task: &SasTask, f: Formulation, state: &[usize]) -> HashSet<Vec<usize>> {
    assert!(task.actions.len() <= 128 && task.num_vars() <= 64);
    let mut out = HashSet::new();
    let mut seen = HashSet::new();
    let start = Partial {
        state: state.to_vec(),
        used: 0,
        trajectories: state.iter().map(|&v| vec![v]).collect(),
        prevailed: 0,
    };
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        if !seen.insert(p.clone()) {
            continue;
        }
        out.insert(p.state.clone());
        'actions: for (i, a) in task.actions.iter().enumerate() {
            if p.used >> i & 1 == 1 {
                continue;
            }
            let mut q = p.clone();
            q.used |= 1 << i;
            for (&v, &val) in &a.prevails {
                if q.state[v] != val {
                    continue 'actions;
                }
                if f == Formulation::OneSc && q.trajectories[v].len() > 1 {
                    continue 'actions;
                }
                q.prevailed |= 1 << v;
            }
            for (&v, e) in &a.effects {
                if e.pre.is_some_and(|pre| q.state[v] != pre) {
                    continue 'actions;
                }
                if q.state[v] == e.post {
                    // undefined precondition already at the target: a prevail
                    if f == Formulation::OneSc && q.trajectories[v].len() > 1 {
                        continue 'actions;
                    }
                    q.prevailed |= 1 << v;
                    continue;
                }
                if f == Formulation::OneSc && q.prevailed >> v & 1 == 1 {
                    continue 'actions;
                }
                q.state[v] = e.post;
                q.trajectories[v].push(e.post);
                if !trajectory_ok(f, &q.trajectories[v]) {
                    continue 'actions;
                }
            }
            stack.push(q);
        }
    }
    out
}

/// Fewest periods reaching the goal, searching up to `max_periods`.
pub fn shortest_parallel(task: &SasTask, f: Formulation, max_periods: usize) -> Option<usize> {
    let mut frontier: HashSet<Vec<usize>> = [task.initial.clone()].into();
    let mut seen = frontier.clone();
    for t in 0..=max_periods {
        if frontier.iter().any(|s| task.is_goal(s)) {
            return Some(t);
        }
        let mut next = HashSet::new();
        for s in &frontier {
            for n in successors(task, f, s) {
                if seen.insert(n.clone()) {
                    next.insert(n);
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    None
}
