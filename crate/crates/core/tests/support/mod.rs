//! Checks shared by the individual suites and the acceptance run.
#![allow(dead_code)]

pub mod grad;
pub mod props;
pub mod solvers;
