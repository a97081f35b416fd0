//! Optimal multi-agent path finding on 4-neighbor grids: conflict-based search with
//! admissible heuristics and rectangle, target and corridor symmetry reasoning.

pub mod astar;
pub mod cbs;
pub mod conflict;
pub mod constraint;
pub mod corridor;
pub mod error;
pub mod fixtures;
pub mod framework;
pub mod grid;
pub mod heuristic;
pub mod instance;
pub mod mdd;
pub mod oracle;
pub mod rectangle;
pub mod target;
#[cfg(test)]
mod invariants;

pub use cbs::{solve, solve_observed, SolveResult, SolveStats, Solution, SolverConfig};
pub use conflict::{Cardinality, Conflict, ConflictKind, SymmetryClass};
pub use constraint::{Constraint, ConstraintTable, Path};
pub use error::{Error, Result};
pub use framework::ReasoningOutcome;
pub use grid::{GridMap, Vertex, INF};
pub use instance::{AgentSpec, Instance};
