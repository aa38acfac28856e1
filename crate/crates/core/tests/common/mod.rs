#![allow(dead_code)]

pub mod graphs;
pub mod lp_oracle;
pub mod parallel;
pub mod tasks;
