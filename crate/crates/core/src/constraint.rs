//! Constraints, paths and the per-agent lookup table used by the low-level planner.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::grid::{Vertex, INF};
use crate::instance::Instance;

/// A timestep-indexed vertex sequence. After its last entry the agent waits at the target forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Path {
    pub vertices: Vec<Vertex>,
}

impl Path {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        Path { vertices }
    }

    /// Number of moves, i.e. the arrival time at the target.
    pub fn cost(&self) -> u32 {
        self.vertices.len().saturating_sub(1) as u32
    }

    /// Location at `t`, parked at the last vertex beyond the end.
    pub fn at(&self, t: u32) -> Vertex {
        let i = (t as usize).min(self.vertices.len() - 1);
        self.vertices[i]
    }

    pub fn first_visit(&self, v: Vertex) -> Option<u32> {
        self.vertices.iter().position(|&w| w == v).map(|t| t as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    /// Agent may not be at `v` at `t`.
    Vertex { agent: usize, v: Vertex, t: u32 },
    /// Agent may not move `from -> to` arriving at `t`.
    Edge { agent: usize, from: Vertex, to: Vertex, t: u32 },
    /// A set of vertex constraints for one agent.
    Barrier { agent: usize, nodes: Vec<(Vertex, u32)> },
    /// Agent may not be at `v` at any timestep in `[t_min, t_max]`; `t_max == INF` means forever.
    Range { agent: usize, v: Vertex, t_min: u32, t_max: u32 },
    /// Path length must exceed `bound`.
    LengthLower { agent: usize, bound: u32 },
    /// Path length must be at most `bound`; every other agent is barred from this agent's
    /// target from `bound` on.
    LengthUpper { agent: usize, bound: u32 },
}

impl Constraint {
    pub fn agent(&self) -> usize {
        match *self {
            Constraint::Vertex { agent, .. }
            | Constraint::Edge { agent, .. }
            | Constraint::Barrier { agent, .. }
            | Constraint::Range { agent, .. }
            | Constraint::LengthLower { agent, .. }
            | Constraint::LengthUpper { agent, .. } => agent,
        }
    }

    /// Whether this constraint restricts `agent` at all.
    pub fn binds(&self, agent: usize) -> bool {
        self.agent() == agent || matches!(self, Constraint::LengthUpper { .. })
    }

    /// Whether `path`, followed by `agent`, breaks this constraint.
    pub fn violated_by(&self, agent: usize, path: &Path, instance: &Instance) -> bool {
        if let Constraint::LengthUpper { agent: k, bound } = *self {
            if k == agent {
                return path.cost() > bound;
            }
            let g = instance.target(k);
            let end = path.vertices.len() as u32;
            return (bound..end.max(bound + 1)).any(|t| path.at(t) == g);
        }
        if self.agent() != agent {
            return false;
        }
        match self {
            Constraint::Vertex { v, t, .. } => path.at(*t) == *v,
            Constraint::Edge { from, to, t, .. } => *t >= 1 && path.at(t - 1) == *from && path.at(*t) == *to,
            Constraint::Barrier { nodes, .. } => nodes.iter().any(|&(v, t)| path.at(t) == v),
            Constraint::Range { v, t_min, t_max, .. } => {
                let last = path.cost();
                if *t_max >= last && path.at(last) == *v {
                    return true;
                }
                (*t_min..=(*t_max).min(last)).any(|t| path.at(t) == *v)
            }
            Constraint::LengthLower { bound, .. } => path.cost() <= *bound,
            Constraint::LengthUpper { .. } => unreachable!(),
        }
    }
}

/// True if any constraint in `set` is broken by `path` for `agent`.
pub fn set_violated(set: &[Constraint], agent: usize, path: &Path, instance: &Instance) -> bool {
    set.iter().any(|c| c.violated_by(agent, path, instance))
}

/// Order-independent hash of the constraints that bind `agent`.
pub fn signature(constraints: &[Constraint], agent: usize) -> u64 {
    constraints
        .iter()
        .filter(|c| c.binds(agent))
        .map(|c| {
            let mut h = DefaultHasher::new();
            c.hash(&mut h);
            h.finish()
        })
        .fold(0u64, |acc, h| acc.wrapping_add(h.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ h))
}

/// Indexed prohibitions for one agent.
#[derive(Clone, Debug, Default)]
pub struct ConstraintTable {
    vertex: FxHashMap<Vertex, Vec<(u32, u32)>>,
    edge: FxHashSet<(Vertex, Vertex, u32)>,
    blocked_from: FxHashMap<Vertex, u32>,
    /// Smallest admissible path length.
    pub min_len: u32,
    /// Largest admissible path length.
    pub max_len: u32,
    /// Largest timestep mentioned by any finite prohibition or length bound.
    pub max_time: u32,
}

impl ConstraintTable {
    pub fn unconstrained() -> Self {
        ConstraintTable { max_len: u32::MAX, ..Default::default() }
    }

    /// Table for `agent` from every constraint that binds it.
    pub fn build(constraints: &[Constraint], agent: usize, instance: &Instance) -> Self {
        let mut tab = ConstraintTable::unconstrained();
        for c in constraints {
            tab.add(c, agent, instance);
        }
        tab
    }

    pub fn add(&mut self, c: &Constraint, agent: usize, instance: &Instance) {
        if let Constraint::LengthUpper { agent: k, bound } = *c {
            if k == agent {
                self.max_len = self.max_len.min(bound);
                self.max_time = self.max_time.max(bound);
            } else {
                let g = instance.target(k);
                let e = self.blocked_from.entry(g).or_insert(bound);
                *e = (*e).min(bound);
                self.max_time = self.max_time.max(bound);
            }
            return;
        }
        if c.agent() != agent {
            return;
        }
        match c {
            Constraint::Vertex { v, t, .. } => self.add_range(*v, *t, *t),
            Constraint::Edge { from, to, t, .. } => {
                self.edge.insert((*from, *to, *t));
                self.max_time = self.max_time.max(*t);
            }
            Constraint::Barrier { nodes, .. } => {
                for &(v, t) in nodes {
                    self.add_range(v, t, t);
                }
            }
            Constraint::Range { v, t_min, t_max, .. } => self.add_range(*v, *t_min, *t_max),
            Constraint::LengthLower { bound, .. } => {
                self.min_len = self.min_len.max(bound + 1);
                self.max_time = self.max_time.max(bound + 1);
            }
            Constraint::LengthUpper { .. } => unreachable!(),
        }
    }

    /// `hi == INF` bars `v` from `lo` on.
    pub fn add_range(&mut self, v: Vertex, lo: u32, hi: u32) {
        if hi == INF {
            let e = self.blocked_from.entry(v).or_insert(lo);
            *e = (*e).min(lo);
            return;
        }
        self.vertex.entry(v).or_default().push((lo, hi));
        self.max_time = self.max_time.max(hi);
    }

    /// The window is empty: no path can satisfy the table.
    pub fn contradictory(&self) -> bool {
        self.min_len > self.max_len
    }

    pub fn vertex_blocked(&self, v: Vertex, t: u32) -> bool {
        if let Some(&b) = self.blocked_from.get(&v) {
            if t >= b {
                return true;
            }
        }
        self.vertex.get(&v).is_some_and(|r| r.iter().any(|&(lo, hi)| lo <= t && t <= hi))
    }

    pub fn edge_blocked(&self, from: Vertex, to: Vertex, t: u32) -> bool {
        !self.edge.is_empty() && self.edge.contains(&(from, to, t))
    }

    /// Whether an agent at `v` at time `t` may stay there forever.
    pub fn can_hold(&self, v: Vertex, t: u32) -> bool {
        if self.blocked_from.contains_key(&v) {
            return false;
        }
        self.vertex.get(&v).is_none_or(|r| r.iter().all(|&(_, hi)| hi < t))
    }

    /// Vertices barred from some timestep on.
    pub fn permanently_blocked(&self) -> impl Iterator<Item = (Vertex, u32)> + '_ {
        self.blocked_from.iter().map(|(&v, &t)| (v, t))
    }

    pub fn has_permanent_blocks(&self) -> bool {
        !self.blocked_from.is_empty()
    }
}

/// Free-function form of [`ConstraintTable::build`].
pub fn build_constraint_table(constraints: &[Constraint], agent: usize, instance: &Instance) -> ConstraintTable {
    ConstraintTable::build(constraints, agent, instance)
}
