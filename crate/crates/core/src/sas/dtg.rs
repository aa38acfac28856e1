//! Domain transition graphs and the length-2 path tables built on them.

use std::collections::BTreeMap;

use super::SasTask;

/// One arc `(from, to)` of a domain transition graph together with every
/// action that causes it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub actions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainTransitionGraph {
    pub var: usize,
    pub num_values: usize,
    /// Sorted by `(from, to)`.
    pub arcs: Vec<Transition>,
    /// `prevailed_by[f]`: actions with prevail condition `f` on this variable.
    pub prevailed_by: Vec<Vec<usize>>,
    /// Arc indices entering each value.
    pub in_arcs: Vec<Vec<usize>>,
    /// Arc indices leaving each value.
    pub out_arcs: Vec<Vec<usize>>,
}

impl DomainTransitionGraph {
    pub fn arc_index(&self, from: usize, to: usize) -> Option<usize> {
        self.arcs
            .binary_search_by(|t| (t.from, t.to).cmp(&(from, to)))
            .ok()
    }

    pub fn is_prevailed(&self, value: usize) -> bool {
        !self.prevailed_by[value].is_empty()
    }
}

/// Builds one graph per variable. Arcs are exactly the effects present in
/// the actions; an effect with undefined precondition contributes an arc
/// `(f, post)` for every `f != post`, labelled with the same action.
pub fn build_dtgs(task: &SasTask) -> Vec<DomainTransitionGraph> {
    let n = task.num_vars();
    let mut arcs: Vec<BTreeMap<(usize, usize), Vec<usize>>> = vec![BTreeMap::new(); n];
    let mut prevailed_by: Vec<Vec<Vec<usize>>> =
        (0..n).map(|v| vec![Vec::new(); task.domain_size(v)]).collect();
    for (ai, a) in task.actions.iter().enumerate() {
        for (&v, e) in &a.effects {
            match e.pre {
                Some(f) => arcs[v].entry((f, e.post)).or_default().push(ai),
                None => {
                    for f in (0..task.domain_size(v)).filter(|&f| f != e.post) {
                        arcs[v].entry((f, e.post)).or_default().push(ai);
                    }
                }
            }
        }
        for (&v, &f) in &a.prevails {
            prevailed_by[v][f].push(ai);
        }
    }
    arcs.into_iter()
        .zip(prevailed_by)
        .enumerate()
        .map(|(var, (arcs, prevailed_by))| {
            let num_values = task.domain_size(var);
            let arcs: Vec<Transition> = arcs
                .into_iter()
                .map(|((from, to), actions)| Transition { from, to, actions })
                .collect();
            let mut in_arcs = vec![Vec::new(); num_values];
            let mut out_arcs = vec![Vec::new(); num_values];
            for (i, t) in arcs.iter().enumerate() {
                out_arcs[t.from].push(i);
                in_arcs[t.to].push(i);
            }
            DomainTransitionGraph { var, num_values, arcs, prevailed_by, in_arcs, out_arcs }
        })
        .collect()
}

/// Two consecutive transitions `first = (start, mid)`, `second = (mid, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TwoPath {
    pub first: usize,
    pub second: usize,
    pub start: usize,
    pub mid: usize,
    pub end: usize,
}

impl TwoPath {
    pub fn is_cyclic(&self) -> bool {
        self.start == self.end
    }

    pub fn contains_arc(&self, arc: usize) -> bool {
        self.first == arc || self.second == arc
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TwoPathTable {
    pub paths: Vec<TwoPath>,
    /// Paths starting at each value.
    pub starting: Vec<Vec<usize>>,
    /// Paths ending at each value.
    pub ending: Vec<Vec<usize>>,
    /// Paths passing through each value without starting or ending there.
    pub through: Vec<Vec<usize>>,
    /// Paths using each arc as either leg.
    pub by_arc: Vec<Vec<usize>>,
}

/// Enumerates every chain of two arcs. A chain returning to its start
/// value is kept only when no action prevails that value.
pub fn enumerate_two_paths(dtg: &DomainTransitionGraph) -> TwoPathTable {
    let nv = dtg.num_values;
    let mut table = TwoPathTable {
        paths: Vec::new(),
        starting: vec![Vec::new(); nv],
        ending: vec![Vec::new(); nv],
        through: vec![Vec::new(); nv],
        by_arc: vec![Vec::new(); dtg.arcs.len()],
    };
    for (i, e1) in dtg.arcs.iter().enumerate() {
        for &j in &dtg.out_arcs[e1.to] {
            let e2 = &dtg.arcs[j];
            if e2.to == e1.from && dtg.is_prevailed(e1.from) {
                continue;
            }
            let id = table.paths.len();
            table.paths.push(TwoPath { first: i, second: j, start: e1.from, mid: e1.to, end: e2.to });
            table.starting[e1.from].push(id);
            table.ending[e2.to].push(id);
            table.through[e1.to].push(id);
            table.by_arc[i].push(id);
            table.by_arc[j].push(id);
        }
    }
    table
}
