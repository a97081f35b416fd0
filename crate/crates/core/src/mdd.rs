//! Multi-valued decision diagrams: all shortest constrained paths of one agent.

use std::fmt::Write as _;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::constraint::ConstraintTable;
use crate::grid::Vertex;
use crate::instance::Instance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mdd {
    pub agent: usize,
    pub cost: u32,
    pub goal: Vertex,
    /// Sorted vertices per timestep.
    pub layers: Vec<Vec<Vertex>>,
    /// `children[t][i]` indexes into `layers[t + 1]`.
    pub children: Vec<Vec<Vec<u32>>>,
    /// `parents[t][i]` indexes into `layers[t - 1]`; empty at `t = 0`.
    pub parents: Vec<Vec<Vec<u32>>>,
}

impl Mdd {
    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn index(&self, v: Vertex, t: u32) -> Option<usize> {
        self.layers.get(t as usize)?.binary_search(&v).ok()
    }

    /// Membership, with the agent parked at its goal after `cost`.
    pub fn contains(&self, v: Vertex, t: u32) -> bool {
        if t > self.cost {
            return v == self.goal;
        }
        self.index(v, t).is_some()
    }

    /// Layer at `t` is exactly `{v}` (parked beyond the last layer).
    pub fn singleton_at(&self, v: Vertex, t: u32) -> bool {
        if t > self.cost {
            return v == self.goal;
        }
        self.layers.get(t as usize).is_some_and(|l| l.len() == 1 && l[0] == v)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex, t: u32) -> bool {
        if t == 0 || t > self.cost {
            return false;
        }
        match (self.index(u, t - 1), self.index(v, t)) {
            (Some(i), Some(j)) => self.children[t as usize - 1][i].contains(&(j as u32)),
            _ => false,
        }
    }

    /// All `(from, to, t)` edges, `t` being the arrival time.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex, u32)> + '_ {
        self.children.iter().enumerate().flat_map(move |(t, layer)| {
            layer.iter().enumerate().flat_map(move |(i, ch)| {
                ch.iter().map(move |&j| (self.layers[t][i], self.layers[t + 1][j as usize], t as u32 + 1))
            })
        })
    }

    /// Timesteps at which each vertex appears.
    pub fn projection(&self) -> FxHashMap<Vertex, Vec<u32>> {
        let mut m: FxHashMap<Vertex, Vec<u32>> = FxHashMap::default();
        for (t, l) in self.layers.iter().enumerate() {
            for &v in l {
                m.entry(v).or_default().push(t as u32);
            }
        }
        m
    }

    pub fn num_nodes(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// One line per layer: `t: v1 v2 ...`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (t, l) in self.layers.iter().enumerate() {
            let _ = write!(s, "{t}:");
            for v in l {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    /// Every source-to-sink path, up to `limit` of them.
    pub fn paths(&self, limit: usize) -> Vec<Vec<Vertex>> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let mut cur: Vec<Vertex> = Vec::new();
        fn rec(m: &Mdd, t: usize, i: usize, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>, limit: usize) {
            if out.len() >= limit {
                return;
            }
            cur.push(m.layers[t][i]);
            if t == m.cost as usize {
                out.push(cur.clone());
            } else {
                for &j in &m.children[t][i] {
                    rec(m, t + 1, j as usize, cur, out, limit);
                }
            }
            cur.pop();
        }
        rec(self, 0, 0, &mut cur, &mut out, limit);
        out
    }
}

/// Builds the MDD of `agent` for paths of length exactly `cost` satisfying `table`.
/// Returns an empty MDD when no such path exists.
pub fn build_mdd(instance: &Instance, agent: usize, table: &ConstraintTable, cost: u32) -> Mdd {
    let map = instance.map();
    let start = instance.start(agent);
    let goal = instance.target(agent);
    let dist = instance.target_distances(agent);
    let empty = Mdd { agent, cost, goal, layers: vec![], children: vec![], parents: vec![] };
    if table.vertex_blocked(start, 0)
        || dist[start as usize] > cost
        || cost < table.min_len
        || cost > table.max_len
        || !table.can_hold(goal, cost)
    {
        return empty;
    }
    let n = cost as usize;
    let mut fwd: Vec<Vec<Vertex>> = vec![vec![start]];
    for t in 0..n {
        let nt = t as u32 + 1;
        let mut next = FxHashSet::default();
        for &v in &fwd[t] {
            for w in map.neighbors(v).chain(std::iter::once(v)) {
                if dist[w as usize] <= cost - nt
                    && !table.vertex_blocked(w, nt)
                    && (w == v || !table.edge_blocked(v, w, nt))
                {
                    next.insert(w);
                }
            }
        }
        let mut next: Vec<Vertex> = next.into_iter().collect();
        next.sort_unstable();
        fwd.push(next);
    }
    if fwd[n].binary_search(&goal).is_err() {
        return empty;
    }
    let mut layers: Vec<Vec<Vertex>> = vec![Vec::new(); n + 1];
    layers[n] = vec![goal];
    let mut edges: Vec<Vec<(Vertex, Vertex)>> = vec![Vec::new(); n];
    for t in (0..n).rev() {
        let nt = t as u32 + 1;
        let mut keep = Vec::new();
        for &v in &fwd[t] {
            let mut any = false;
            for w in map.neighbors(v).chain(std::iter::once(v)) {
                if layers[t + 1].binary_search(&w).is_err() {
                    continue;
                }
                if w != v && table.edge_blocked(v, w, nt) {
                    continue;
                }
                if t + 1 == n && v == goal && w == goal {
                    continue;
                }
                edges[t].push((v, w));
                any = true;
            }
            if any {
                keep.push(v);
            }
        }
        layers[t] = keep;
    }
    if layers[0].is_empty() {
        return empty;
    }
    let mut children: Vec<Vec<Vec<u32>>> = layers[..n].iter().map(|l| vec![Vec::new(); l.len()]).collect();
    let mut parents: Vec<Vec<Vec<u32>>> = layers.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    for t in 0..n {
        for &(v, w) in &edges[t] {
            let i = layers[t].binary_search(&v).unwrap();
            let j = layers[t + 1].binary_search(&w).unwrap();
            children[t][i].push(j as u32);
            parents[t + 1][j].push(i as u32);
        }
        for c in children[t].iter_mut() {
            c.sort_unstable();
        }
    }
    Mdd { agent, cost, goal, layers, children, parents }
}

/// Layers of size one, in timestep order.
pub fn find_singletons(mdd: &Mdd) -> Vec<(Vertex, u32)> {
    mdd.layers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.len() == 1)
        .map(|(t, l)| (l[0], t as u32))
        .collect()
}

/// True iff every source-to-sink path of `mdd` visits a prohibited node.
pub fn blocks_all_paths(mdd: &Mdd, prohibited: &FxHashSet<(Vertex, u32)>) -> bool {
    if mdd.is_empty() {
        return true;
    }
    let mut reach: Vec<bool> = vec![!prohibited.contains(&(mdd.layers[0][0], 0))];
    for t in 0..mdd.cost as usize {
        let mut next = vec![false; mdd.layers[t + 1].len()];
        for (i, ok) in reach.iter().enumerate() {
            if !ok {
                continue;
            }
            for &j in &mdd.children[t][i] {
                let v = mdd.layers[t + 1][j as usize];
                if !prohibited.contains(&(v, t as u32 + 1)) {
                    next[j as usize] = true;
                }
            }
        }
        if !next.iter().any(|&b| b) {
            return true;
        }
        reach = next;
    }
    !reach[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astar::{plan_shortest_path, ConflictAvoidance};
    use crate::constraint::{build_constraint_table, Constraint};
    use crate::grid::GridMap;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_row_all_singletons() {
        let i = Instance::from_xy(GridMap::open(5, 1), &[((0, 0), (4, 0))]).unwrap();
        let m = build_mdd(&i, 0, &ConstraintTable::unconstrained(), 4);
        assert_eq!(find_singletons(&m).len(), 5);
        assert_eq!(m.dump(), "0: 0\n1: 1\n2: 2\n3: 3\n4: 4\n");
    }

    #[test]
    fn open_three_by_three_layer_two() {
        let i = Instance::from_xy(GridMap::open(3, 3), &[((0, 0), (2, 2))]).unwrap();
        let m = build_mdd(&i, 0, &ConstraintTable::unconstrained(), 4);
        // the six monotone paths pass through (2,0), (1,1) and (0,2) at t=2
        assert_eq!(m.layers[2].len(), 3);
        assert_eq!(m.paths(100).len(), 6);
        assert_eq!(find_singletons(&m), vec![(i.start(0), 0), (i.target(0), 4)]);
    }

    #[test]
    fn cut_queries() {
        let i = Instance::from_xy(GridMap::open(3, 3), &[((0, 0), (2, 2))]).unwrap();
        let m = build_mdd(&i, 0, &ConstraintTable::unconstrained(), 4);
        assert!(!blocks_all_paths(&m, &FxHashSet::default()));
        let layer: FxHashSet<_> = m.layers[2].iter().map(|&v| (v, 2)).collect();
        assert!(blocks_all_paths(&m, &layer));
        let partial: FxHashSet<_> = m.layers[2][..2].iter().map(|&v| (v, 2)).collect();
        assert!(!blocks_all_paths(&m, &partial));
    }

    #[test]
    fn wait_creates_singleton() {
        // a forced wait makes the start a singleton over two layers
        let i = Instance::from_xy(GridMap::open(3, 1), &[((0, 0), (2, 0))]).unwrap();
        let cs = [Constraint::Vertex { agent: 0, v: i.map().vertex(1, 0), t: 1 }];
        let tab = build_constraint_table(&cs, 0, &i);
        let p = plan_shortest_path(&i, 0, &tab, &ConflictAvoidance::default()).unwrap();
        let m = build_mdd(&i, 0, &tab, p.cost());
        assert_eq!(p.cost(), 3);
        assert!(m.singleton_at(i.start(0), 1));
        assert_eq!(m.paths(10), vec![p.vertices]);
    }

    #[test]
    fn infeasible_cost_gives_empty() {
        let i = Instance::from_xy(GridMap::open(3, 1), &[((0, 0), (2, 0))]).unwrap();
        assert!(build_mdd(&i, 0, &ConstraintTable::unconstrained(), 1).is_empty());
    }

    /// Exhaustive depth-first enumeration of constrained paths of exactly `len` steps that
    /// end with a fresh arrival at the target.
    fn brute_paths(i: &Instance, tab: &ConstraintTable, len: u32) -> FxHashSet<Vec<Vertex>> {
        fn rec(i: &Instance, tab: &ConstraintTable, len: u32, cur: &mut Vec<Vertex>, out: &mut FxHashSet<Vec<Vertex>>) {
            let t = cur.len() as u32 - 1;
            let v = *cur.last().unwrap();
            let g = i.target(0);
            if t == len {
                let fresh = len == 0 || cur[len as usize - 1] != g;
                if v == g && fresh && tab.can_hold(g, t) && t >= tab.min_len && t <= tab.max_len {
                    out.insert(cur.clone());
                }
                return;
            }
            let opts: Vec<Vertex> = i.map().neighbors(v).chain(std::iter::once(v)).collect();
            for w in opts {
                if tab.vertex_blocked(w, t + 1) || (w != v && tab.edge_blocked(v, w, t + 1)) {
                    continue;
                }
                cur.push(w);
                rec(i, tab, len, cur, out);
                cur.pop();
            }
        }
        let mut out = FxHashSet::default();
        if !tab.vertex_blocked(i.start(0), 0) {
            rec(i, tab, len, &mut vec![i.start(0)], &mut out);
        }
        out
    }

    fn random_case(seed: u64, side: usize) -> Option<(Instance, Vec<Constraint>)> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let blocked: Vec<bool> = (0..side * side).map(|_| rng.gen_bool(0.15)).collect();
        let m = GridMap::new(side, side, blocked).unwrap();
        let free: Vec<Vertex> = m.free_vertices().collect();
        if free.len() < 2 {
            return None;
        }
        let s = free[rng.gen_range(0..free.len())];
        let g = free[rng.gen_range(0..free.len())];
        let inst = Instance::new(std::sync::Arc::new(m), vec![crate::AgentSpec { start: s, target: g }]).ok()?;
        let mut cs = Vec::new();
        for _ in 0..rng.gen_range(0..5) {
            let v = free[rng.gen_range(0..free.len())];
            cs.push(Constraint::Vertex { agent: 0, v, t: rng.gen_range(1..7) });
        }
        Some((inst, cs))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn mdd_equals_exhaustive_shortest_paths(seed in any::<u64>(), side in 3usize..6) {
            let Some((inst, cs)) = random_case(seed, side) else { return Ok(()) };
            let tab = build_constraint_table(&cs, 0, &inst);
            let Some(p) = plan_shortest_path(&inst, 0, &tab, &ConflictAvoidance::default()) else { return Ok(()) };
            prop_assume!(p.cost() <= 9);
            let m = build_mdd(&inst, 0, &tab, p.cost());
            let got: FxHashSet<Vec<Vertex>> = m.paths(1_000_000).into_iter().collect();
            prop_assert_eq!(got, brute_paths(&inst, &tab, p.cost()));
            // no dead nodes
            for t in 0..m.cost as usize {
                prop_assert!(m.children[t].iter().all(|c| !c.is_empty()));
            }
        }

        #[test]
        fn prefix_property(seed in any::<u64>()) {
            let Some((inst, cs)) = random_case(seed, 7) else { return Ok(()) };
            let tab = build_constraint_table(&cs, 0, &inst);
            let Some(p) = plan_shortest_path(&inst, 0, &tab, &ConflictAvoidance::default()) else { return Ok(()) };
            let m = build_mdd(&inst, 0, &tab, p.cost());
            for (t, &v) in p.vertices.iter().enumerate() {
                prop_assert!(m.contains(v, t as u32));
            }
        }
    }
}
