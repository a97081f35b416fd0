//! Dispatch of a conflict to the symmetry reasoning techniques, and conflict selection.

use crate::cbs::{NodeView, RectangleMode, SolverConfig};
use crate::conflict::{Cardinality, Conflict, ConflictKind, SymmetryClass};
use crate::constraint::Constraint;
use crate::{corridor, rectangle, target};

/// How one conflict would be resolved: its class, priority and the two constraint sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReasoningOutcome {
    pub conflict: Conflict,
    pub class: SymmetryClass,
    pub cardinality: Cardinality,
    pub sets: [Vec<Constraint>; 2],
}

/// The two singleton constraints of plain CBS.
pub fn standard_split(c: &Conflict) -> [Vec<Constraint>; 2] {
    match c.kind {
        ConflictKind::Vertex { v, t } => {
            [vec![Constraint::Vertex { agent: c.a, v, t }], vec![Constraint::Vertex { agent: c.b, v, t }]]
        }
        ConflictKind::Edge { u, v, t } => [
            vec![Constraint::Edge { agent: c.a, from: u, to: v, t }],
            vec![Constraint::Edge { agent: c.b, from: v, to: u, t }],
        ],
    }
}

/// Corridor, then target, then rectangle reasoning; plain splitting if none applies.
pub fn reason_symmetry(conflict: &Conflict, card: Cardinality, view: &NodeView, cfg: &SolverConfig) -> ReasoningOutcome {
    let outcome = |class, cardinality, sets| ReasoningOutcome { conflict: *conflict, class, cardinality, sets };
    if let Some(f) = corridor::generalized_corridor_reasoning(conflict, card, view, cfg.corridor) {
        return outcome(SymmetryClass::Corridor, f.cardinality, f.sets);
    }
    if cfg.target {
        if let Some(f) = target::detect_target_conflict(conflict, view.path(conflict.a), view.path(conflict.b), card) {
            return outcome(SymmetryClass::Target, f.cardinality, target::target_split(&f));
        }
    }
    if cfg.rectangle != RectangleMode::Off && conflict.is_vertex() && card != Cardinality::Cardinal {
        if let Some(f) = rectangle::rectangle_reasoning(conflict, view, cfg.rectangle) {
            return outcome(SymmetryClass::Rectangle, f.cardinality, f.split());
        }
    }
    outcome(SymmetryClass::VertexEdge, card, standard_split(conflict))
}

/// Index of the outcome to branch on: cardinality first, then class, then list order.
pub fn select_conflict(outcomes: &[ReasoningOutcome]) -> Option<usize> {
    outcomes.iter().enumerate().min_by_key(|(i, o)| (o.cardinality, o.class, *i)).map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(card: Cardinality, class: SymmetryClass) -> ReasoningOutcome {
        let c = Conflict::vertex(0, 1, 0, 1);
        ReasoningOutcome { conflict: c, class, cardinality: card, sets: standard_split(&c) }
    }

    #[test]
    fn selection_order() {
        use Cardinality::*;
        use SymmetryClass::*;
        assert_eq!(select_conflict(&[o(Non, Rectangle), o(Cardinal, VertexEdge)]), Some(1));
        assert_eq!(select_conflict(&[o(Cardinal, Corridor), o(Cardinal, Target)]), Some(1));
        assert_eq!(select_conflict(&[o(Semi, VertexEdge), o(Semi, Rectangle)]), Some(1));
        assert_eq!(select_conflict(&[o(Semi, VertexEdge), o(Semi, VertexEdge)]), Some(0));
        assert_eq!(select_conflict(&[]), None);
    }

    #[test]
    fn standard_edge_split() {
        let s = standard_split(&Conflict::edge(2, 5, 10, 11, 3));
        assert_eq!(s[0], vec![Constraint::Edge { agent: 2, from: 10, to: 11, t: 3 }]);
        assert_eq!(s[1], vec![Constraint::Edge { agent: 5, from: 11, to: 10, t: 3 }]);
    }
}
