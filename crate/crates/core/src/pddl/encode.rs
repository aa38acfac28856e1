use super::ground::atom_index;
use super::GroundTask;
use crate::sas::{SasAction, SasTask, Variable};

pub const FALSE: usize = 0;
pub const TRUE: usize = 1;

/// One two-valued variable per atom. Per action and atom:
///
/// * required and deleted: effect `TRUE -> FALSE`;
/// * required (and possibly re-added): prevail `TRUE`;
/// * added without being required: copies with `FALSE -> TRUE` or prevail `TRUE`;
/// * deleted without being required: copies with `TRUE -> FALSE` or prevail `FALSE`.
///
/// The last two cases yield the cross product of copies, named `<name>#<k>`.
pub fn binary_encode(task: &GroundTask) -> SasTask {
    let index = atom_index(task);
    let variables = task
        .atoms
        .iter()
        .map(|a| Variable::new(a.to_string(), &["false", "true"]))
        .collect();
    let mut actions = Vec::with_capacity(task.actions.len());
    for ga in &task.actions {
        let mut a = SasAction::new(ga.name.clone());
        for p in &ga.preconditions {
            let v = index[p];
            if ga.delete_effects.contains(p) {
                a.effects.insert(v, crate::sas::Effect { pre: Some(TRUE), post: FALSE });
            } else {
                a.prevails.insert(v, TRUE);
            }
        }
        for (atoms, post) in [(&ga.add_effects, TRUE), (&ga.delete_effects, FALSE)] {
            for e in atoms.iter().filter(|e| !ga.preconditions.contains(*e)) {
                a.effects.insert(index[e], crate::sas::Effect { pre: None, post });
            }
        }
        actions.push(a);
    }
    let unsplit = SasTask {
        variables,
        actions,
        initial: task.atoms.iter().map(|a| if task.init.contains(a) { TRUE } else { FALSE }).collect(),
        goal: task.atoms.iter().map(|a| task.goal.contains(a).then_some(TRUE)).collect(),
    };
    unsplit.split_undefined_preconditions()
}
