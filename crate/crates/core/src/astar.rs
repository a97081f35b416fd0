//! Space-time A* over (vertex, timestep) states.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::constraint::{ConstraintTable, Path};
use crate::grid::{Vertex, INF};
use crate::instance::Instance;

/// Occupancy of already planned paths, used to count conflicts for tie-breaking.
#[derive(Default, Debug, Clone)]
pub struct ConflictAvoidance {
    vertex: FxHashMap<(Vertex, u32), u32>,
    edge: FxHashMap<(Vertex, Vertex, u32), u32>,
    parked: FxHashMap<Vertex, u32>,
}

impl ConflictAvoidance {
    pub fn new<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Self {
        let mut cat = ConflictAvoidance::default();
        for p in paths {
            cat.add(p);
        }
        cat
    }

    pub fn add(&mut self, p: &Path) {
        let n = p.vertices.len();
        for t in 0..n {
            if t + 1 < n {
                *self.vertex.entry((p.vertices[t], t as u32)).or_default() += 1;
            }
            if t > 0 && p.vertices[t - 1] != p.vertices[t] {
                *self.edge.entry((p.vertices[t - 1], p.vertices[t], t as u32)).or_default() += 1;
            }
        }
        let e = self.parked.entry(p.vertices[n - 1]).or_insert(u32::MAX);
        *e = (*e).min((n - 1) as u32);
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty() && self.parked.is_empty()
    }

    /// Conflicts caused by moving `from -> to` arriving at `t`.
    pub fn count(&self, from: Vertex, to: Vertex, t: u32) -> u32 {
        let mut c = self.vertex.get(&(to, t)).copied().unwrap_or(0);
        if self.parked.get(&to).is_some_and(|&s| s <= t) {
            c += 1;
        }
        if from != to {
            c += self.edge.get(&(to, from, t)).copied().unwrap_or(0);
        }
        c
    }
}

/// Finite search horizon: free cells + largest constrained timestep + 1.
pub fn horizon(instance: &Instance, table: &ConstraintTable) -> u32 {
    (instance.map().num_vertices() as u32).saturating_add(table.max_time).saturating_add(1)
}

/// Distances to `goal` avoiding every vertex that is blocked forever at some point.
fn static_distances(instance: &Instance, goal: Vertex, table: &ConstraintTable) -> Option<Vec<u32>> {
    if !table.has_permanent_blocks() {
        return None;
    }
    let map = instance.map();
    let banned: FxHashSet<Vertex> = table.permanently_blocked().map(|(v, _)| v).collect();
    let mut dist = vec![INF; map.cells()];
    if banned.contains(&goal) {
        return Some(dist);
    }
    let mut q = VecDeque::new();
    dist[goal as usize] = 0;
    q.push_back(goal);
    while let Some(u) = q.pop_front() {
        for w in map.neighbors(u) {
            if dist[w as usize] == INF && !banned.contains(&w) {
                dist[w as usize] = dist[u as usize] + 1;
                q.push_back(w);
            }
        }
    }
    Some(dist)
}

struct Node {
    v: Vertex,
    t: u32,
    parent: u32,
}

/// Shortest path for `agent` under `table`, breaking ties by fewest conflicts with
/// `cat`, then by generation order. `None` if no path exists within the horizon.
pub fn plan_shortest_path(
    instance: &Instance,
    agent: usize,
    table: &ConstraintTable,
    cat: &ConflictAvoidance,
) -> Option<Path> {
    if table.contradictory() {
        return None;
    }
    let map = instance.map();
    let start = instance.start(agent);
    let goal = instance.target(agent);
    let dist = instance.target_distances(agent);
    let limit = horizon(instance, table).min(table.max_len);
    let settled_after = table.max_time;
    let dist_static = static_distances(instance, goal, table);
    let h = |v: Vertex, t: u32| dist[v as usize].max(table.min_len.saturating_sub(t));

    if table.vertex_blocked(start, 0) || dist[start as usize] == INF {
        return None;
    }
    let mut nodes = vec![Node { v: start, t: 0, parent: u32::MAX }];
    // key -> (conflicts, node index, closed)
    let mut best: FxHashMap<u64, (u32, u32, bool)> = FxHashMap::default();
    let key = |v: Vertex, t: u32, stale: bool| ((t as u64) << 33) | ((v as u64) << 1) | stale as u64;
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    best.insert(key(start, 0, false), (0, 0, false));
    open.push(Reverse((h(start, 0), 0u32, seq, 0u32, false)));

    while let Some(Reverse((_, conf, _, idx, stale))) = open.pop() {
        let (v, t) = (nodes[idx as usize].v, nodes[idx as usize].t);
        let k = key(v, t, stale);
        match best.get_mut(&k) {
            Some(e) if e.1 == idx && !e.2 => e.2 = true,
            _ => continue,
        }
        if v == goal && !stale && t >= table.min_len && t <= table.max_len && table.can_hold(v, t) {
            let mut out = Vec::with_capacity(t as usize + 1);
            let mut i = idx;
            while i != u32::MAX {
                out.push(nodes[i as usize].v);
                i = nodes[i as usize].parent;
            }
            out.reverse();
            return Some(Path::new(out));
        }
        let nt = t + 1;
        if nt > limit {
            continue;
        }
        for w in map.neighbors(v).chain(std::iter::once(v)) {
            if table.vertex_blocked(w, nt) || (w != v && table.edge_blocked(v, w, nt)) {
                continue;
            }
            let hw = h(w, nt);
            if hw == INF || nt.saturating_add(hw) > limit {
                continue;
            }
            if nt > settled_after {
                if let Some(ds) = &dist_static {
                    if ds[w as usize] == INF {
                        continue;
                    }
                }
            }
            let nstale = w == goal && v == goal;
            let c = conf + if cat.is_empty() { 0 } else { cat.count(v, w, nt) };
            let nk = key(w, nt, nstale);
            if let Some(&(bc, _, closed)) = best.get(&nk) {
                if closed || bc <= c {
                    continue;
                }
            }
            nodes.push(Node { v: w, t: nt, parent: idx });
            let ni = (nodes.len() - 1) as u32;
            best.insert(nk, (c, ni, false));
            seq += 1;
            open.push(Reverse((nt + hw, c, seq, ni, nstale)));
        }
    }
    None
}

/// Earliest timestep at which `agent` can occupy `x` under `table`. Moves along any edge in
/// `excluded` (either direction) are forbidden. `INF` if unreachable.
pub fn earliest_arrival(
    instance: &Instance,
    agent: usize,
    x: Vertex,
    table: &ConstraintTable,
    excluded: Option<&FxHashSet<(Vertex, Vertex)>>,
) -> u32 {
    let map = instance.map();
    let start = instance.start(agent);
    if table.vertex_blocked(start, 0) {
        return INF;
    }
    if start == x {
        return 0;
    }
    let limit = horizon(instance, table);
    let mut cur = vec![false; map.cells()];
    cur[start as usize] = true;
    let mut frontier = vec![start];
    let banned = |u: Vertex, w: Vertex| excluded.is_some_and(|e| e.contains(&(u, w)) || e.contains(&(w, u)));
    for t in 1..=limit {
        let mut next = vec![false; map.cells()];
        let mut nf = Vec::with_capacity(frontier.len() + 4);
        for &u in &frontier {
            for w in map.neighbors(u).chain(std::iter::once(u)) {
                if next[w as usize] || table.vertex_blocked(w, t) {
                    continue;
                }
                if w != u && (table.edge_blocked(u, w, t) || banned(u, w)) {
                    continue;
                }
                if w == x {
                    return t;
                }
                next[w as usize] = true;
                nf.push(w);
            }
        }
        if nf.is_empty() {
            return INF;
        }
        if t > table.max_time && next == cur {
            return INF;
        }
        cur = next;
        frontier = nf;
    }
    INF
}
