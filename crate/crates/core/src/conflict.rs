//! Pairwise conflicts between paths and their MDD-based classification.

use rustc_hash::FxHashMap;

use crate::constraint::Path;
use crate::grid::Vertex;
use crate::mdd::Mdd;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConflictKind {
    /// Both agents at `v` at `t`.
    Vertex { v: Vertex, t: u32 },
    /// Agent `a` moves `u -> v` while agent `b` moves `v -> u`, arriving at `t`.
    Edge { u: Vertex, v: Vertex, t: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Conflict {
    pub a: usize,
    pub b: usize,
    pub kind: ConflictKind,
}

impl Conflict {
    pub fn vertex(a: usize, b: usize, v: Vertex, t: u32) -> Self {
        Conflict { a, b, kind: ConflictKind::Vertex { v, t } }
    }

    pub fn edge(a: usize, b: usize, u: Vertex, v: Vertex, t: u32) -> Self {
        Conflict { a, b, kind: ConflictKind::Edge { u, v, t } }
    }

    pub fn time(&self) -> u32 {
        match self.kind {
            ConflictKind::Vertex { t, .. } | ConflictKind::Edge { t, .. } => t,
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self.kind, ConflictKind::Vertex { .. })
    }

    /// The same conflict seen from the other agent.
    pub fn swapped(&self) -> Self {
        let kind = match self.kind {
            ConflictKind::Vertex { v, t } => ConflictKind::Vertex { v, t },
            ConflictKind::Edge { u, v, t } => ConflictKind::Edge { u: v, v: u, t },
        };
        Conflict { a: self.b, b: self.a, kind }
    }
}

/// Ordered so that `Cardinal < Semi < Non` matches selection priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cardinality {
    Cardinal,
    Semi,
    Non,
}

/// Ordered by selection priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymmetryClass {
    Target,
    Corridor,
    Rectangle,
    VertexEdge,
}

impl SymmetryClass {
    pub const ALL: [SymmetryClass; 4] =
        [SymmetryClass::Target, SymmetryClass::Corridor, SymmetryClass::Rectangle, SymmetryClass::VertexEdge];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// All vertex and edge conflicts among `paths` (agent id, path), ordered by timestep and then
/// by agent ids. Finished agents stay at their targets.
pub fn detect_conflicts_among(paths: &[(usize, &Path)]) -> Vec<Conflict> {
    let horizon = paths.iter().map(|(_, p)| p.cost()).max().unwrap_or(0);
    let mut out = Vec::new();
    let mut at: FxHashMap<Vertex, usize> = FxHashMap::with_capacity_and_hasher(paths.len(), Default::default());
    let mut moves: FxHashMap<(Vertex, Vertex), usize> = FxHashMap::with_capacity_and_hasher(paths.len(), Default::default());
    for t in 1..=horizon {
        at.clear();
        moves.clear();
        let mut found: Vec<Conflict> = Vec::new();
        for &(id, p) in paths {
            let v = p.at(t);
            if let Some(&other) = at.get(&v) {
                found.push(Conflict::vertex(other.min(id), other.max(id), v, t));
            } else {
                at.insert(v, id);
            }
            let u = p.at(t - 1);
            if u != v {
                if let Some(&other) = moves.get(&(v, u)) {
                    let c = Conflict::edge(other, id, v, u, t);
                    found.push(if other < id { c } else { c.swapped() });
                }
                moves.insert((u, v), id);
            }
        }
        found.sort_by_key(|c| (c.a, c.b, !c.is_vertex()));
        out.extend(found);
    }
    out
}

/// Conflicts of a plan indexed by agent.
pub fn detect_conflicts(plan: &[Path]) -> Vec<Conflict> {
    let v: Vec<(usize, &Path)> = plan.iter().enumerate().collect();
    detect_conflicts_among(&v)
}

/// Whether agent `side`'s MDD forces it through the conflicting location.
fn forced(conflict: &Conflict, first: bool, mdd: &Mdd) -> bool {
    match conflict.kind {
        ConflictKind::Vertex { v, t } => mdd.singleton_at(v, t),
        ConflictKind::Edge { u, v, t } => {
            let (from, to) = if first { (u, v) } else { (v, u) };
            t >= 1 && mdd.singleton_at(from, t - 1) && mdd.singleton_at(to, t)
        }
    }
}

/// Cardinal iff both agents are forced, semi-cardinal iff exactly one is.
pub fn classify_conflict(conflict: &Conflict, mdd_a: &Mdd, mdd_b: &Mdd) -> Cardinality {
    match (forced(conflict, true, mdd_a), forced(conflict, false, mdd_b)) {
        (true, true) => Cardinality::Cardinal,
        (false, false) => Cardinality::Non,
        _ => Cardinality::Semi,
    }
}
