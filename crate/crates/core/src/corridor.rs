//! Corridor symmetry: two agents that must cross inside a chain of degree-2 vertices.

use rustc_hash::FxHashSet;

use crate::astar::earliest_arrival;
use crate::cbs::{CorridorMode, NodeView};
use crate::conflict::{Cardinality, Conflict, ConflictKind};
use crate::constraint::{Constraint, Path};
use crate::grid::{GridMap, Vertex, INF};
use crate::mdd::Mdd;

/// A chain of degree-2 vertices `interior` between `ends[0]` and `ends[1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corridor {
    pub interior: Vec<Vertex>,
    pub ends: [Vertex; 2],
}

impl Corridor {
    /// Number of moves from one endpoint to the other.
    pub fn length(&self) -> u32 {
        self.interior.len() as u32 + 1
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.interior.contains(&v)
    }

    /// 0 at `ends[0]`, `length()` at `ends[1]`.
    pub fn position(&self, v: Vertex) -> Option<u32> {
        if v == self.ends[0] {
            return Some(0);
        }
        if v == self.ends[1] {
            return Some(self.length());
        }
        self.interior.iter().position(|&w| w == v).map(|i| i as u32 + 1)
    }

    /// All vertices from `ends[0]` to `ends[1]`.
    pub fn chain(&self) -> Vec<Vertex> {
        let mut c = Vec::with_capacity(self.interior.len() + 2);
        c.push(self.ends[0]);
        c.extend(&self.interior);
        c.push(self.ends[1]);
        c
    }

    pub fn edges(&self) -> FxHashSet<(Vertex, Vertex)> {
        self.chain().windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Grows a corridor around the conflict. Chains stop at vertices whose degree is not 2 and
/// at any vertex in `stops`. `None` if no conflicting vertex can be interior, or the chain
/// closes into a ring or a loop.
pub fn find_corridor(conflict: &Conflict, map: &GridMap, stops: &[Vertex]) -> Option<Corridor> {
    let interior_ok = |v: Vertex| map.degree(v) == 2 && !stops.contains(&v);
    let seed = match conflict.kind {
        ConflictKind::Vertex { v, .. } => Some(v).filter(|&v| interior_ok(v)),
        ConflictKind::Edge { u, v, .. } => [u, v].into_iter().find(|&w| interior_ok(w)),
    }?;
    let nb: Vec<Vertex> = map.neighbors(seed).collect();
    let mut sides = [vec![], vec![]];
    let mut ends = [0; 2];
    for (k, &first) in nb.iter().enumerate() {
        let (mut prev, mut cur) = (seed, first);
        while interior_ok(cur) {
            if cur == seed {
                return None;
            }
            sides[k].push(cur);
            let next = map.neighbors(cur).find(|&w| w != prev).expect("degree 2");
            prev = cur;
            cur = next;
        }
        ends[k] = cur;
    }
    if ends[0] == ends[1] {
        return None;
    }
    let [left, right] = sides;
    let mut interior: Vec<Vertex> = left.into_iter().rev().collect();
    interior.push(seed);
    interior.extend(right);
    Some(Corridor { interior, ends })
}

/// How one agent's current path uses the corridor around the conflict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Passage {
    /// Start vertex if the path begins inside, else the endpoint it enters from.
    pub entrance: Vertex,
    /// Target vertex if the path ends inside, else the endpoint it leaves through.
    pub exit: Vertex,
}

/// The passage containing one of the `times` at which the path is inside the corridor.
pub fn passage(path: &Path, corridor: &Corridor, times: &[u32]) -> Option<Passage> {
    let last = path.cost();
    let tr = times.iter().copied().find(|&t| corridor.contains(path.at(t)))?.min(last);
    let mut s0 = tr;
    while s0 > 0 && corridor.contains(path.at(s0 - 1)) {
        s0 -= 1;
    }
    let mut s1 = tr;
    while s1 < last && corridor.contains(path.at(s1 + 1)) {
        s1 += 1;
    }
    let entrance = if s0 == 0 { path.at(0) } else { path.at(s0 - 1) };
    let exit = if s1 == last { path.at(last) } else { path.at(s1 + 1) };
    Some(Passage { entrance, exit })
}

/// Whether the two passages force the agents past each other: their order along the chain
/// at entry is the reverse of their order at exit.
pub fn must_cross(p1: &Passage, p2: &Passage, corridor: &Corridor) -> bool {
    let pos = |v| corridor.position(v).map(|p| p as i64);
    let (Some(b1), Some(b2), Some(x1), Some(x2)) = (pos(p1.entrance), pos(p2.entrance), pos(p1.exit), pos(p2.exit))
    else {
        return false;
    };
    b1 != b2 && x1 != x2 && (b2 - b1) * (x2 - x1) < 0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorridorFlavor {
    Basic,
    Pseudo,
    /// One target inside the corridor.
    TargetOne,
    /// Both targets inside the corridor.
    TargetTwo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorridorFinding {
    pub corridor: Corridor,
    pub flavor: CorridorFlavor,
    pub sets: [Vec<Constraint>; 2],
    pub cardinality: Cardinality,
}

/// `[0, hi]` range on `v` for `agent`, `None` when `hi` is negative or unbounded.
fn bounded_range(agent: usize, v: Vertex, t_prime: u32, t_other: u32, k: u32) -> Option<Constraint> {
    let a = if t_prime == INF { INF } else { t_prime.checked_sub(1)? };
    let b = if t_other == INF { INF } else { t_other.saturating_add(k).min(INF - 1) };
    let hi = a.min(b);
    (hi != INF).then_some(Constraint::Range { agent, v, t_min: 0, t_max: hi })
}

/// Range constraints `<a_i, e_i, [0, min(t'_i(e_i) - 1, t_j(e_j) + k)]>` where `e_i` is the
/// endpoint through which agent `a_i` leaves and `k` the distance between the endpoints.
pub fn basic_corridor_constraints(
    view: &NodeView,
    agents: [usize; 2],
    exits: [Vertex; 2],
    corridor_edges: &FxHashSet<(Vertex, Vertex)>,
    k: u32,
) -> Option<[Vec<Constraint>; 2]> {
    let inst = view.instance;
    let mut t = [0; 2];
    let mut t_prime = [0; 2];
    for i in 0..2 {
        let table = view.table(agents[i]);
        t[i] = earliest_arrival(inst, agents[i], exits[i], &table, None);
        t_prime[i] = earliest_arrival(inst, agents[i], exits[i], &table, Some(corridor_edges));
    }
    let c1 = bounded_range(agents[0], exits[0], t_prime[0], t[1], k)?;
    let c2 = bounded_range(agents[1], exits[1], t_prime[1], t[0], k)?;
    Some([vec![c1], vec![c2]])
}

/// The vertex an MDD forces the agent onto at `t`, if the layer is a singleton.
fn forced_vertex(mdd: &Mdd, t: u32) -> Option<Vertex> {
    if t >= mdd.cost {
        return Some(mdd.goal);
    }
    match mdd.layers.get(t as usize) {
        Some(layer) if layer.len() == 1 => Some(layer[0]),
        _ => None,
    }
}

/// Length-1 corridors detected from MDD singletons around the conflict. Always cardinal.
pub fn pseudo_corridor_reasoning(conflict: &Conflict, view: &NodeView) -> Option<CorridorFinding> {
    let (a, b) = (conflict.a, conflict.b);
    let (m1, m2) = (view.mdd(a), view.mdd(b));
    let (e1, e2) = match conflict.kind {
        ConflictKind::Vertex { v, t } => {
            let f = |m: &Mdd, s: u32| forced_vertex(m, s);
            let (p1, c1, n1) = (f(&m1, t - 1)?, f(&m1, t)?, f(&m1, t + 1)?);
            let (p2, c2, n2) = (f(&m2, t - 1)?, f(&m2, t)?, f(&m2, t + 1)?);
            if c1 != v || c2 != v || p1 != n2 || p2 != n1 || p1 == v {
                return None;
            }
            (v, p1)
        }
        ConflictKind::Edge { u, v, t } => {
            let f = |m: &Mdd, s: u32| forced_vertex(m, s);
            if f(&m1, t - 1)? != u || f(&m1, t)? != v || f(&m2, t - 1)? != v || f(&m2, t)? != u {
                return None;
            }
            (v, u)
        }
    };
    let edges: FxHashSet<(Vertex, Vertex)> = [(e1, e2)].into_iter().collect();
    let sets = basic_corridor_constraints(view, [a, b], [e1, e2], &edges, 1)?;
    let corridor = Corridor { interior: Vec::new(), ends: [e2, e1] };
    let finding = CorridorFinding { corridor, flavor: CorridorFlavor::Pseudo, sets, cardinality: Cardinality::Cardinal };
    gate(view, [a, b], finding)
}

/// Keeps the finding only if the current plan breaks both sets.
fn gate(view: &NodeView, agents: [usize; 2], f: CorridorFinding) -> Option<CorridorFinding> {
    let broken = |set: &[Constraint]| {
        agents.iter().any(|&ag| set.iter().any(|c| c.violated_by(ag, view.path(ag), view.instance)))
    };
    (broken(&f.sets[0]) && broken(&f.sets[1])).then_some(f)
}

fn conflict_times(c: &Conflict) -> Vec<u32> {
    match c.kind {
        ConflictKind::Vertex { t, .. } => vec![t],
        ConflictKind::Edge { t, .. } => vec![t, t - 1],
    }
}

/// Corridor reasoning for `mode`: basic corridors, corridors with starts or targets inside,
/// corridor-target conflicts and pseudo-corridors. `card` is the underlying conflict's
/// cardinality.
pub fn generalized_corridor_reasoning(
    conflict: &Conflict,
    card: Cardinality,
    view: &NodeView,
    mode: CorridorMode,
) -> Option<CorridorFinding> {
    if mode == CorridorMode::Off {
        return None;
    }
    let inst = view.instance;
    let (a, b) = (conflict.a, conflict.b);
    let stops: Vec<Vertex> = if mode.long_chains() {
        Vec::new()
    } else {
        vec![inst.start(a), inst.start(b), inst.target(a), inst.target(b)]
    };
    let Some(corridor) = find_corridor(conflict, inst.map(), &stops) else {
        return if mode.pseudo() { pseudo_corridor_reasoning(conflict, view) } else { None };
    };
    let times = conflict_times(conflict);
    let pa = passage(view.path(a), &corridor, &times)?;
    let pb = passage(view.path(b), &corridor, &times)?;
    let k = corridor.length();
    let edges = corridor.edges();

    if !mode.long_chains() {
        let at_end = |v| v == corridor.ends[0] || v == corridor.ends[1];
        let opposite = pa.entrance == pb.exit && pa.exit == pb.entrance && pa.entrance != pa.exit;
        if !opposite || !at_end(pa.entrance) || !at_end(pa.exit) {
            return None;
        }
        let sets = basic_corridor_constraints(view, [a, b], [pa.exit, pb.exit], &edges, k)?;
        let f = CorridorFinding { corridor, flavor: CorridorFlavor::Basic, sets, cardinality: card };
        return gate(view, [a, b], f);
    }

    if !must_cross(&pa, &pb, &corridor) {
        return None;
    }
    let inside_a = corridor.contains(inst.target(a)) && pa.exit == inst.target(a);
    let inside_b = corridor.contains(inst.target(b)) && pb.exit == inst.target(b);
    if !inside_a && !inside_b {
        let sets = basic_corridor_constraints(view, [a, b], [pa.exit, pb.exit], &edges, k)?;
        let f = CorridorFinding { corridor, flavor: CorridorFlavor::Basic, sets, cardinality: card };
        return gate(view, [a, b], f);
    }
    // a1 is the agent whose target is inside
    let (a1, a2, p1, p2) = if inside_a { (a, b, pa, pb) } else { (b, a, pb, pa) };
    let pos = |v| corridor.position(v).unwrap();
    // e2: endpoint on a1's entrance side; e1: the other one
    let (e2, e1) = if pos(p1.entrance) < pos(p2.entrance) {
        (corridor.ends[0], corridor.ends[1])
    } else {
        (corridor.ends[1], corridor.ends[0])
    };
    let g1 = inst.target(a1);
    let (tab1, tab2) = (view.table(a1), view.table(a2));
    let mut l = INF;
    for e in [e1, e2] {
        let t1 = earliest_arrival(inst, a1, e, &tab1, None);
        let t2 = earliest_arrival(inst, a2, e, &tab2, None);
        let d = inst.distance(e, g1);
        if t1 == INF || t2 == INF || d == INF {
            continue;
        }
        l = l.min((t1.saturating_sub(1)).max(t2) + d);
    }
    if l == INF {
        return None;
    }
    let mut c2 = vec![Constraint::LengthUpper { agent: a1, bound: l }];
    let flavor = if inside_a && inside_b {
        let g2 = inst.target(a2);
        let chain = corridor.chain();
        let i = chain.iter().position(|&v| v == g1).unwrap();
        let around: FxHashSet<(Vertex, Vertex)> = [(chain[i - 1], g1), (g1, chain[i + 1])].into_iter().collect();
        let t2g = earliest_arrival(inst, a2, g2, &tab2, Some(&around));
        if t2g == INF {
            // a2 cannot reach its target without passing g1
            c2.push(Constraint::Range { agent: a2, v: g2, t_min: 0, t_max: INF });
        } else if t2g > 0 {
            c2.push(Constraint::LengthLower { agent: a2, bound: t2g - 1 });
        }
        CorridorFlavor::TargetTwo
    } else {
        let t2e = earliest_arrival(inst, a2, e2, &tab2, Some(&edges));
        if t2e > 0 {
            c2.push(Constraint::Range { agent: a2, v: e2, t_min: 0, t_max: if t2e == INF { INF } else { t2e - 1 } });
        }
        CorridorFlavor::TargetOne
    };
    let sets = [vec![Constraint::LengthLower { agent: a1, bound: l }], c2];
    let f = CorridorFinding { corridor, flavor, sets, cardinality: card };
    gate(view, [a1, a2], f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMap;

    // Row 3 (index 2) holds the corridor A3..D3 with B3, C3 interior.
    fn fig8_map() -> GridMap {
        GridMap::from_rows(&["@@@@", ".@@.", "....", ".@@."]).unwrap()
    }

    #[test]
    fn fig8_corridor_found() {
        let m = fig8_map();
        let c = Conflict::edge(0, 1, m.vertex(1, 2), m.vertex(2, 2), 2);
        let cor = find_corridor(&c, &m, &[]).unwrap();
        assert_eq!(cor.length(), 3);
        let mut ends = cor.ends.to_vec();
        ends.sort();
        assert_eq!(ends, vec![m.vertex(0, 2), m.vertex(3, 2)]);
        assert_eq!(cor.interior.len(), 2);
    }

    #[test]
    fn open_grid_has_no_corridor() {
        let m = GridMap::open(5, 5);
        assert!(find_corridor(&Conflict::vertex(0, 1, m.vertex(2, 2), 3), &m, &[]).is_none());
    }

    #[test]
    fn ring_is_not_a_corridor() {
        let m = GridMap::from_rows(&["...", ".@.", "..."]).unwrap();
        assert!(find_corridor(&Conflict::vertex(0, 1, m.vertex(1, 0), 1), &m, &[]).is_none());
    }

    #[test]
    fn stops_cut_the_chain() {
        let m = GridMap::from_rows(&["@@@@@@", "......", "@@@@.@"]).unwrap();
        let stop = m.vertex(2, 1);
        let c = find_corridor(&Conflict::vertex(0, 1, m.vertex(3, 1), 1), &m, &[stop]).unwrap();
        assert!(c.ends.contains(&stop));
        assert_eq!(c.length(), 2);
    }

    #[test]
    fn crossing_rules() {
        let m = GridMap::from_rows(&["@@@@@@", "......", "@@@@@@"]).unwrap();
        let cor = Corridor { interior: (1..5).map(|x| m.vertex(x, 1)).collect(), ends: [m.vertex(0, 1), m.vertex(5, 1)] };
        let v = |x| m.vertex(x, 1);
        // head-on traversal
        assert!(must_cross(&Passage { entrance: v(0), exit: v(5) }, &Passage { entrance: v(5), exit: v(0) }, &cor));
        // same entrance
        assert!(!must_cross(&Passage { entrance: v(0), exit: v(5) }, &Passage { entrance: v(0), exit: v(3) }, &cor));
        // same direction, a1 behind at entry and ahead at exit
        assert!(must_cross(&Passage { entrance: v(1), exit: v(4) }, &Passage { entrance: v(2), exit: v(3) }, &cor));
        // parallel, no crossing
        assert!(!must_cross(&Passage { entrance: v(1), exit: v(3) }, &Passage { entrance: v(2), exit: v(5) }, &cor));
    }

    #[test]
    fn passage_of_parked_agent() {
        let m = GridMap::from_rows(&["@@@@@@", "......", "@@@@@@"]).unwrap();
        let cor = Corridor { interior: (1..5).map(|x| m.vertex(x, 1)).collect(), ends: [m.vertex(0, 1), m.vertex(5, 1)] };
        let p = Path::new(vec![m.vertex(0, 1), m.vertex(1, 1), m.vertex(2, 1)]);
        let ps = passage(&p, &cor, &[6]).unwrap();
        assert_eq!(ps, Passage { entrance: m.vertex(0, 1), exit: m.vertex(2, 1) });
    }

    #[test]
    fn range_bounds() {
        assert_eq!(bounded_range(0, 7, INF, 4, 3), Some(Constraint::Range { agent: 0, v: 7, t_min: 0, t_max: 7 }));
        assert_eq!(bounded_range(0, 7, 5, 4, 3), Some(Constraint::Range { agent: 0, v: 7, t_min: 0, t_max: 4 }));
        assert_eq!(bounded_range(0, 7, INF, INF, 3), None);
        assert_eq!(bounded_range(0, 7, 0, 4, 3), None);
    }
}
