//! Random multi-valued tasks and a breadth-first search oracle over
//! sequential semantics.

use std::collections::{HashMap, VecDeque};

use flowplan::sas::{parse_sas, SasAction, SasTask, Variable};
use rand::Rng;

pub fn data(name: &str) -> String {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn logistics_toy() -> SasTask {
    parse_sas(&data("logistics-toy.sas")).unwrap()
}

/// Two variables over {f, g, h} and five actions; A1 and A2 prevail `g` on
/// the first variable, A3 moves it `g -> h`, A4 prevails `h` and moves the
/// second variable `g -> f`, A1 prevails `f` on the second.
pub fn separation_example() -> SasTask {
    let (f, g, h) = (0, 1, 2);
    SasTask {
        variables: vec![Variable::new("c1", &["f", "g", "h"]), Variable::new("c2", &["f", "g", "h"])],
        actions: vec![
            SasAction::new("A1").with_prevail(0, g).with_prevail(1, f),
            SasAction::new("A2").with_prevail(0, g),
            SasAction::new("A3").with_effect(0, Some(g), h),
            SasAction::new("A4").with_prevail(0, h).with_effect(1, Some(g), f),
            SasAction::new("A5").with_effect(1, Some(g), h),
        ],
        initial: vec![g, g],
        goal: vec![Some(h), None],
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TaskShape {
    pub max_vars: usize,
    pub max_domain: usize,
    pub max_actions: usize,
    /// Probability that an effect leaves its precondition undefined.
    pub undefined_pre: f64,
}

impl Default for TaskShape {
    fn default() -> Self {
        TaskShape { max_vars: 4, max_domain: 4, max_actions: 8, undefined_pre: 0.1 }
    }
}

/// A structurally valid random task. Every action has at least one effect.
pub fn random_task<R: Rng>(rng: &mut R, shape: TaskShape) -> SasTask {
    let n = rng.gen_range(1..=shape.max_vars);
    let variables: Vec<Variable> = (0..n)
        .map(|v| {
            let d = rng.gen_range(2..=shape.max_domain);
            Variable { name: format!("v{v}"), values: (0..d).map(|k| format!("d{k}")).collect() }
        })
        .collect();
    let dom = |v: usize| variables[v].values.len();
    let num_actions = rng.gen_range(1..=shape.max_actions);
    let mut actions = Vec::with_capacity(num_actions);
    for i in 0..num_actions {
        let mut a = SasAction::new(format!("a{i}"));
        let touched = rng.gen_range(1..=n.min(3));
        let mut vars: Vec<usize> = (0..n).collect();
        for k in 0..touched {
            let j = rng.gen_range(k..n);
            vars.swap(k, j);
        }
        for (k, &v) in vars[..touched].iter().enumerate() {
            if k == 0 || rng.gen_bool(0.5) {
                let post = rng.gen_range(0..dom(v));
                let pre = if rng.gen_bool(shape.undefined_pre) {
                    None
                } else {
                    let mut p = rng.gen_range(0..dom(v) - 1);
                    if p >= post {
                        p += 1;
                    }
                    Some(p)
                };
                a.effects.insert(v, flowplan::sas::Effect { pre, post });
            } else {
                a.prevails.insert(v, rng.gen_range(0..dom(v)));
            }
        }
        actions.push(a);
    }
    let initial = (0..n).map(|v| rng.gen_range(0..dom(v))).collect();
    let mut goal: Vec<Option<usize>> = vec![None; n];
    let g = rng.gen_range(0..n);
    goal[g] = Some(rng.gen_range(0..dom(g)));
    for (v, slot) in goal.iter_mut().enumerate() {
        if v != g && rng.gen_bool(0.3) {
            *slot = Some(rng.gen_range(0..dom(v)));
        }
    }
    SasTask { variables, actions, initial, goal }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub reachable: usize,
    /// Length of a shortest sequential plan.
    pub optimal: Option<usize>,
}

/// Exhaustive breadth-first search from the initial state, stopping after
/// `limit` states.
pub fn bfs(task: &SasTask, limit: usize) -> SearchOutcome {
    let mut depth: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    depth.insert(task.initial.clone(), 0);
    queue.push_back(task.initial.clone());
    let mut optimal = None;
    while let Some(s) = queue.pop_front() {
        let d = depth[&s];
        if optimal.is_none() && task.is_goal(&s) {
            optimal = Some(d);
        }
        for a in &task.actions {
            // independent re-implementation of sequential semantics
            let ok = a.effects.iter().all(|(&v, e)| e.pre.map_or(true, |p| s[v] == p))
                && a.prevails.iter().all(|(&v, &p)| s[v] == p);
            if !ok {
                continue;
            }
            let mut next = s.clone();
            for (&v, e) in &a.effects {
                next[v] = e.post;
            }
            if !depth.contains_key(&next) && depth.len() < limit {
                depth.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    SearchOutcome { reachable: depth.len(), optimal }
}
