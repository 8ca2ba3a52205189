//! Numerical toolkit for common fixed points of selfmap pairs (f, T) on
//! metric spaces: exact piecewise-map evaluation, hypothesis checks
//! (contractivity, compatibility, range inclusion), and the constructive
//! iterations that locate the fixed points those hypotheses promise.

pub mod config;
pub mod dsl;
pub mod gallery;
pub mod metric;
pub mod real;
pub mod report;
pub mod solver;
pub mod verifiers;
