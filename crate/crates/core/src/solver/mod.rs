//! Exact and bounding solvers for the max-min allocation programs.

pub mod bnb;
pub mod dual;
pub mod oracle;
pub mod report;

pub use bnb::{solve_bnb, SolveOptions, DEFAULT_TOLERANCE};
pub use dual::dual_bound;
pub use oracle::{brute_force_oracle, count_allocations, greedy_incumbent, random_instance, ORACLE_LIMIT};
pub use report::{BoundReport, ReportRecord, Status};
