use std::collections::{BTreeMap, BTreeSet};

use super::{AtomSchema, Domain, GroundAction, GroundAtom, GroundTask, PddlError, Problem, Term};

/// Ground actions allowed before grounding gives up.
pub const DEFAULT_ACTION_CAP: usize = 200_000;

/// Predicates that no schema adds or deletes.
fn static_predicates(domain: &Domain) -> BTreeSet<String> {
    let mut fluent = BTreeSet::new();
    for s in &domain.schemas {
        for a in s.add.iter().chain(&s.delete) {
            fluent.insert(a.predicate.clone());
        }
    }
    domain.predicates.keys().filter(|p| !fluent.contains(*p)).cloned().collect()
}

fn instantiate(a: &AtomSchema, binding: &[usize], objects: &[&str]) -> GroundAtom {
    GroundAtom {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Param(k) => objects[binding[*k]].to_string(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

struct Grounder<'a> {
    objects: Vec<&'a str>,
    /// Candidate object indices per schema parameter.
    candidates: Vec<Vec<usize>>,
    /// Static preconditions, each checked once its last parameter is bound.
    checks: Vec<Vec<&'a AtomSchema>>,
    init: &'a BTreeSet<GroundAtom>,
    out: Vec<Vec<usize>>,
    remaining: usize,
    cap: usize,
}

impl Grounder<'_> {
    fn run(&mut self, binding: &mut Vec<usize>) -> Result<(), PddlError> {
        let depth = binding.len();
        if depth == self.candidates.len() {
            if self.out.len() == self.remaining {
                return Err(PddlError::ResourceLimit { cap: self.cap });
            }
            self.out.push(binding.clone());
            return Ok(());
        }
        for i in 0..self.candidates[depth].len() {
            binding.push(self.candidates[depth][i]);
            let ok = self.checks[depth].iter().all(|a| self.init.contains(&instantiate(a, binding, &self.objects)));
            if ok {
                self.run(binding)?;
            }
            binding.pop();
        }
        Ok(())
    }
}

/// Grounds every schema over the problem's objects, drops static atoms,
/// then prunes actions whose preconditions can never all hold because
/// some atom is neither initially true nor added by a surviving action.
pub fn ground_task(domain: &Domain, problem: &Problem, cap: usize) -> Result<GroundTask, PddlError> {
    let statics = static_predicates(domain);
    let objects: Vec<&str> = problem.objects.iter().map(|(o, _)| o.as_str()).collect();
    let mut actions = Vec::new();
    for schema in &domain.schemas {
        let candidates: Vec<Vec<usize>> = schema
            .parameters
            .iter()
            .map(|(_, t)| (0..objects.len()).filter(|&i| domain.is_subtype(&problem.objects[i].1, t)).collect())
            .collect();
        let mut checks: Vec<Vec<&AtomSchema>> = vec![Vec::new(); schema.parameters.len().max(1)];
        let mut constant_static = Vec::new();
        for a in schema.precondition.iter().filter(|a| statics.contains(&a.predicate)) {
            let last = a.args.iter().filter_map(|t| if let Term::Param(k) = t { Some(*k) } else { None }).max();
            match last {
                Some(k) => checks[k].push(a),
                None => constant_static.push(a),
            }
        }
        if !constant_static.iter().all(|a| problem.init.contains(&instantiate(a, &[], &objects))) {
            continue;
        }
        let mut g = Grounder { objects: objects.clone(), candidates, checks, init: &problem.init, out: Vec::new(), remaining: cap - actions.len(), cap };
        g.run(&mut Vec::new())?;
        for binding in g.out {
            let mut name = schema.name.clone();
            for &b in &binding {
                name.push(' ');
                name.push_str(objects[b]);
            }
            let ground = |list: &[AtomSchema], keep_static: bool| -> BTreeSet<GroundAtom> {
                list.iter()
                    .filter(|a| keep_static || !statics.contains(&a.predicate))
                    .map(|a| instantiate(a, &binding, &objects))
                    .collect()
            };
            let action = GroundAction {
                preconditions: ground(&schema.precondition, false),
                add_effects: ground(&schema.add, true),
                delete_effects: ground(&schema.delete, true),
                name,
            };
            if let Some(atom) = action.add_effects.intersection(&action.delete_effects).next() {
                return Err(PddlError::AddDeleteConflict { action: action.name.clone(), atom: atom.to_string() });
            }
            actions.push(action);
        }
    }

    let fluent_init: BTreeSet<GroundAtom> =
        problem.init.iter().filter(|a| !statics.contains(&a.predicate)).cloned().collect();
    // Fixpoint: removing an action can remove the only adder of an atom.
    loop {
        let reachable: BTreeSet<GroundAtom> =
            fluent_init.iter().chain(actions.iter().flat_map(|a| a.add_effects.iter())).cloned().collect();
        let before = actions.len();
        actions.retain(|a| a.preconditions.iter().all(|p| reachable.contains(p)));
        if actions.len() == before {
            break;
        }
    }
    actions.sort_by(|a, b| a.name.cmp(&b.name));

    let mut atoms: BTreeSet<GroundAtom> = fluent_init.clone();
    for a in &actions {
        atoms.extend(a.add_effects.iter().cloned());
    }
    atoms.extend(problem.goal.iter().cloned());
    // Deletes of atoms outside the set are no-ops; drop them.
    for a in &mut actions {
        a.delete_effects.retain(|d| atoms.contains(d));
    }
    let mut init = fluent_init;
    // A static goal atom that holds initially stays true forever.
    init.extend(problem.goal.iter().filter(|g| statics.contains(&g.predicate) && problem.init.contains(*g)).cloned());
    Ok(GroundTask { actions, atoms: atoms.into_iter().collect(), init, goal: problem.goal.clone() })
}

/// Map from atom to its position in `task.atoms`.
pub(crate) fn atom_index(task: &GroundTask) -> BTreeMap<&GroundAtom, usize> {
    task.atoms.iter().enumerate().map(|(i, a)| (a, i)).collect()
}
