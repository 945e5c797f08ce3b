//! Benchmark problems, error norms, convergence studies and corner regularity.

pub mod convergence;
pub mod norms;
pub mod problems;
pub mod regularity;
