//! Classical planning as a set of loosely coupled network-flow integer
//! programs, one network per multi-valued state variable, solved with an
//! LP-based branch-and-cut that generates action-ordering cycle
//! constraints on demand.

pub mod branch_and_cut;
pub mod driver;
pub mod formulations;
pub mod model;
pub mod pddl;
pub mod plan;
pub mod sas;
pub mod separation;
pub mod simplex;
