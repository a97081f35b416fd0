//! Target symmetry: an agent parked at its target blocks another agent later on.

use crate::conflict::{Cardinality, Conflict, ConflictKind};
use crate::constraint::{Constraint, Path};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetFinding {
    /// The agent already at its target.
    pub finished: usize,
    pub other: usize,
    pub t: u32,
    pub cardinality: Cardinality,
}

/// A vertex conflict at or after the end of one agent's path. `card` is the cardinality of
/// the underlying vertex conflict; target conflicts are never reported non-cardinal.
pub fn detect_target_conflict(conflict: &Conflict, path_a: &Path, path_b: &Path, card: Cardinality) -> Option<TargetFinding> {
    let ConflictKind::Vertex { t, .. } = conflict.kind else {
        return None;
    };
    let (finished, other) = if t >= path_a.cost() {
        (conflict.a, conflict.b)
    } else if t >= path_b.cost() {
        (conflict.b, conflict.a)
    } else {
        return None;
    };
    let cardinality = if card == Cardinality::Non { Cardinality::Semi } else { card };
    Some(TargetFinding { finished, other, t, cardinality })
}

/// `{l > t}` and `{l <= t}` on the finished agent's path length.
pub fn target_split(f: &TargetFinding) -> [Vec<Constraint>; 2] {
    [
        vec![Constraint::LengthLower { agent: f.finished, bound: f.t }],
        vec![Constraint::LengthUpper { agent: f.finished, bound: f.t }],
    ]
}
