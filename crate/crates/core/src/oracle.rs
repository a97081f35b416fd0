//! Brute-force ground truth: optimal joint-state search and exhaustive checking that a pair
//! of constraint sets excludes no conflict-free pair of paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::astar::{plan_shortest_path, ConflictAvoidance};
use crate::constraint::{set_violated, Constraint, ConstraintTable, Path};
use crate::grid::{Vertex, INF};
use crate::instance::Instance;

/// Largest team the joint search accepts.
pub const MAX_JOINT_AGENTS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSolution {
    pub cost: u64,
    pub paths: Vec<Path>,
}

/// Joint state: one 16-bit position per agent, then one "finished" bit per agent.
type Packed = u128;

fn pack(pos: &[Vertex], done: u8) -> Packed {
    let mut k: Packed = done as Packed;
    for (i, &v) in pos.iter().enumerate() {
        k |= (v as Packed) << (8 + 16 * i);
    }
    k
}

fn unpack(k: Packed, m: usize) -> (Vec<Vertex>, u8) {
    let pos = (0..m).map(|i| ((k >> (8 + 16 * i)) & 0xFFFF) as Vertex).collect();
    (pos, (k & 0xFF) as u8)
}

/// Optimal sum of costs by A* over joint states. An agent standing on its target may
/// finish, after which it stays there and costs nothing; every other agent pays one per
/// timestep. States costing more than `m * horizon` are dropped, so `None` means no
/// solution within that budget. The default horizon is `m * (|V| + m)`.
pub fn joint_state_astar(instance: &Instance, horizon: Option<u64>) -> Option<JointSolution> {
    let m = instance.num_agents();
    assert!(m <= MAX_JOINT_AGENTS, "joint search supports at most {MAX_JOINT_AGENTS} agents");
    assert!(instance.map().cells() <= 1 << 16);
    let map = instance.map();
    let nv = map.num_vertices() as u64;
    let budget = m as u64 * horizon.unwrap_or(m as u64 * (nv + m as u64));
    let goals: Vec<Vertex> = (0..m).map(|a| instance.target(a)).collect();
    let h = |pos: &[Vertex], done: u8| -> u64 {
        (0..m).filter(|&a| done >> a & 1 == 0).map(|a| instance.target_distances(a)[pos[a] as usize] as u64).sum()
    };
    let full: u8 = ((1u16 << m) - 1) as u8;
    let starts: Vec<Vertex> = (0..m).map(|a| instance.start(a)).collect();
    let root = pack(&starts, 0);
    let mut g: FxHashMap<Packed, (u64, Packed)> = [(root, (0, root))].into_iter().collect();
    let mut open = BinaryHeap::from([Reverse((h(&starts, 0), Reverse(0u64), root))]);
    let mut next: Vec<(Vec<Vertex>, u8, u64)> = Vec::new();
    while let Some(Reverse((f, Reverse(gc), key))) = open.pop() {
        if g.get(&key).is_none_or(|e| e.0 < gc) {
            continue;
        }
        let (pos, done) = unpack(key, m);
        if done == full {
            return Some(JointSolution { cost: gc, paths: rebuild(&g, key, m, &goals) });
        }
        if f > budget {
            return None;
        }
        next.clear();
        successors(instance, &pos, done, &mut next);
        for (np, nd, step) in next.drain(..) {
            let ng = gc + step;
            let nk = pack(&np, nd);
            if g.get(&nk).is_some_and(|e| e.0 <= ng) {
                continue;
            }
            let hn = h(&np, nd);
            if ng + hn > budget {
                continue;
            }
            g.insert(nk, (ng, key));
            open.push(Reverse((ng + hn, Reverse(ng), nk)));
        }
    }
    None
}

/// All joint moves: finished agents hold; an unfinished agent on its target may finish at no
/// cost; otherwise it waits or moves for one. Vertex and swap conflicts are excluded.
fn successors(instance: &Instance, pos: &[Vertex], done: u8, out: &mut Vec<(Vec<Vertex>, u8, u64)>) {
    let m = pos.len();
    let mut choice: Vec<Vec<(Vertex, bool)>> = Vec::with_capacity(m);
    for a in 0..m {
        let v = pos[a];
        if done >> a & 1 == 1 {
            choice.push(vec![(v, true)]);
            continue;
        }
        let mut c: Vec<(Vertex, bool)> = instance.map().neighbors(v).chain(std::iter::once(v)).map(|w| (w, false)).collect();
        if v == instance.target(a) {
            c.push((v, true));
        }
        choice.push(c);
    }
    let mut cur: Vec<(Vertex, bool)> = Vec::with_capacity(m);
    fn rec(
        pos: &[Vertex],
        choice: &[Vec<(Vertex, bool)>],
        cur: &mut Vec<(Vertex, bool)>,
        out: &mut Vec<(Vec<Vertex>, u8, u64)>,
    ) {
        let a = cur.len();
        if a == choice.len() {
            let np = cur.iter().map(|c| c.0).collect();
            let nd = cur.iter().enumerate().fold(0u8, |acc, (i, c)| acc | (c.1 as u8) << i);
            let step = cur.iter().filter(|c| !c.1).count() as u64;
            out.push((np, nd, step));
            return;
        }
        for &(w, fin) in &choice[a] {
            let clash = cur.iter().enumerate().any(|(b, &(wb, _))| wb == w || (wb == pos[a] && w == pos[b] && w != pos[a]));
            if clash {
                continue;
            }
            cur.push((w, fin));
            rec(pos, choice, cur, out);
            cur.pop();
        }
    }
    rec(pos, &choice, &mut cur, out);
}

fn rebuild(g: &FxHashMap<Packed, (u64, Packed)>, mut key: Packed, m: usize, goals: &[Vertex]) -> Vec<Path> {
    let mut states = vec![key];
    while g[&key].1 != key {
        key = g[&key].1;
        states.push(key);
    }
    states.reverse();
    (0..m)
        .map(|a| {
            let mut vs = Vec::new();
            for &s in &states {
                let (pos, done) = unpack(s, m);
                if done >> a & 1 == 1 {
                    break;
                }
                vs.push(pos[a]);
            }
            debug_assert_eq!(*vs.last().unwrap(), goals[a]);
            Path::new(vs)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Disjunction {
    /// Every conflict-free pair within the cost window satisfies at least one set.
    Holds { paths_checked: u64 },
    /// A conflict-free pair that breaks both sets, in the order of `agents`.
    Counterexample { paths: [Path; 2] },
    /// The enumeration exceeded its budget.
    Inconclusive,
}

/// Caps on the paths enumerated for one agent and on the states visited while searching
/// partner paths for the other.
#[derive(Clone, Copy, Debug)]
pub struct EnumerationBudget {
    pub paths: usize,
    pub states: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { paths: 50_000, states: 100_000_000 }
    }
}

/// Every path of `agent` that obeys `constraints` and costs at most its constrained optimum
/// plus `slack`. `None` if there are more than `limit`.
pub fn enumerate_paths(
    instance: &Instance,
    agent: usize,
    constraints: &[Constraint],
    slack: u32,
    limit: usize,
) -> Option<Vec<Path>> {
    let table = ConstraintTable::build(constraints, agent, instance);
    let Some(best) = plan_shortest_path(instance, agent, &table, &ConflictAvoidance::default()) else {
        return Some(Vec::new());
    };
    let cap = (best.cost() + slack).min(table.max_len);
    let goal = instance.target(agent);
    let dist = instance.target_distances(agent);
    let mut out = Vec::new();
    let mut stack = vec![instance.start(agent)];
    fn dfs(
        inst: &Instance,
        table: &ConstraintTable,
        dist: &[u32],
        goal: Vertex,
        cap: u32,
        stack: &mut Vec<Vertex>,
        out: &mut Vec<Path>,
        limit: usize,
    ) -> bool {
        let t = (stack.len() - 1) as u32;
        let v = *stack.last().unwrap();
        let arrived = t == 0 || stack[stack.len() - 2] != goal;
        if v == goal && arrived && t >= table.min_len && table.can_hold(v, t) {
            if out.len() >= limit {
                return false;
            }
            out.push(Path::new(stack.clone()));
        }
        if t == cap {
            return true;
        }
        let nt = t + 1;
        for w in inst.map().neighbors(v).chain(std::iter::once(v)) {
            if dist[w as usize] == INF || nt + dist[w as usize] > cap {
                continue;
            }
            if table.vertex_blocked(w, nt) || (w != v && table.edge_blocked(v, w, nt)) {
                continue;
            }
            stack.push(w);
            let ok = dfs(inst, table, dist, goal, cap, stack, out, limit);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    if table.vertex_blocked(stack[0], 0) {
        return Some(out);
    }
    dfs(instance, &table, dist, goal, cap, &mut stack, &mut out, limit).then_some(out)
}

/// No vertex or swap conflict between two parked-at-target paths.
fn conflict_free(a: &Path, b: &Path) -> bool {
    let end = a.vertices.len().max(b.vertices.len()) as u32;
    (0..end).all(|t| {
        let (u, v) = (a.at(t), b.at(t));
        u != v && !(t > 0 && u == b.at(t - 1) && v == a.at(t - 1))
    })
}

/// Arriving at `v` at `t` from `prev` is prohibited by `tab`.
fn step_breaks(tab: &ConstraintTable, prev: Vertex, v: Vertex, t: u32) -> bool {
    tab.vertex_blocked(v, t) || (t > 0 && tab.edge_blocked(prev, v, t))
}

/// Stopping for good at `v` at `t` is prohibited by `tab`.
fn end_breaks(tab: &ConstraintTable, v: Vertex, t: u32) -> bool {
    !tab.can_hold(v, t) || t < tab.min_len || t > tab.max_len
}

/// `path` is inconsistent with `tab`; equals [`set_violated`] for the table built from the set.
#[cfg(test)]
fn path_breaks(tab: &ConstraintTable, path: &Path) -> bool {
    let vs = &path.vertices;
    (0..vs.len()).any(|t| step_breaks(tab, vs[t.saturating_sub(1)], vs[t], t as u32))
        || end_breaks(tab, *vs.last().unwrap(), path.cost())
}

struct PartnerSearch<'a> {
    inst: &'a Instance,
    goal: Vertex,
    dist: &'a [u32],
    node: ConstraintTable,
    sets: [ConstraintTable; 2],
    cap: u32,
    states: u64,
    budget: u64,
}

impl PartnerSearch<'_> {
    /// Depth-first search for a path that avoids `other`, obeys the node table and breaks
    /// every set marked in `need`. `seen` holds (vertex, time, broken-so-far) states already
    /// known to lead nowhere. `Err` when the state budget runs out.
    fn run(
        &mut self,
        other: &Path,
        need: [bool; 2],
        stack: &mut Vec<Vertex>,
        broken: [bool; 2],
        seen: &mut FxHashSet<(Vertex, u32, [bool; 2])>,
    ) -> Result<bool, ()> {
        self.states += 1;
        if self.states > self.budget {
            return Err(());
        }
        let t = (stack.len() - 1) as u32;
        let v = *stack.last().unwrap();
        if v == self.goal && t >= self.node.min_len && self.node.can_hold(v, t) {
            let last = (other.vertices.len() as u32).max(t + 1);
            let clear = (t..last).all(|u| other.at(u) != v);
            let done = |s: usize| !need[s] || broken[s] || end_breaks(&self.sets[s], v, t);
            if clear && done(0) && done(1) {
                return Ok(true);
            }
        }
        if t == self.cap {
            return Ok(false);
        }
        let nt = t + 1;
        let moves: Vec<Vertex> = self.inst.map().neighbors(v).chain(std::iter::once(v)).collect();
        for w in moves {
            if self.dist[w as usize] == INF || nt + self.dist[w as usize] > self.cap {
                continue;
            }
            if self.node.vertex_blocked(w, nt) || (w != v && self.node.edge_blocked(v, w, nt)) {
                continue;
            }
            if other.at(nt) == w || (other.at(nt) == v && other.at(t) == w) {
                continue;
            }
            let b = [0, 1].map(|s| broken[s] || step_breaks(&self.sets[s], v, w, nt));
            if !seen.insert((w, nt, b)) {
                continue;
            }
            stack.push(w);
            if self.run(other, need, stack, b, seen)? {
                return Ok(true);
            }
            stack.pop();
        }
        Ok(false)
    }
}

/// Checks that no pair of conflict-free paths for `agents` breaks both `sets`. Paths obey
/// the `node` constraints and cost at most `slack` over each agent's constrained optimum.
///
/// One agent's paths are enumerated; for each, a memoized search over the other agent's
/// (vertex, time, sets broken) states decides whether a conflict-free partner breaking the
/// remaining sets exists. The agent with fewer paths is enumerated when one side overflows.
pub fn verify_mutually_disjunctive(
    instance: &Instance,
    agents: [usize; 2],
    sets: &[Vec<Constraint>; 2],
    node: &[Constraint],
    slack: u32,
    budget: EnumerationBudget,
) -> Disjunction {
    for side in [0, 1] {
        let (a, b) = (agents[side], agents[1 - side]);
        let Some(mine) = enumerate_paths(instance, a, node, slack, budget.paths) else {
            continue;
        };
        let node_b = ConstraintTable::build(node, b, instance);
        let Some(best_b) = plan_shortest_path(instance, b, &node_b, &ConflictAvoidance::default()) else {
            return Disjunction::Holds { paths_checked: 0 };
        };
        let binds_b = [0, 1].map(|s| sets[s].iter().any(|c| c.binds(b)));
        let mut search = PartnerSearch {
            inst: instance,
            goal: instance.target(b),
            dist: instance.target_distances(b),
            cap: (best_b.cost() + slack).min(node_b.max_len),
            node: node_b,
            sets: [0, 1].map(|s| ConstraintTable::build(&sets[s], b, instance)),
            states: 0,
            budget: budget.states,
        };
        let start = instance.start(b);
        let mut checked = 0u64;
        for p in &mine {
            let need = [0, 1].map(|s| !set_violated(&sets[s], a, p, instance));
            if (need[0] && !binds_b[0]) || (need[1] && !binds_b[1]) || p.at(0) == start {
                continue;
            }
            checked += 1;
            let mut stack = vec![start];
            let broken = [0, 1].map(|s| step_breaks(&search.sets[s], start, start, 0));
            let mut seen = FxHashSet::default();
            match search.run(p, need, &mut stack, broken, &mut seen) {
                Err(()) => return Disjunction::Inconclusive,
                Ok(false) => {}
                Ok(true) => {
                    let q = Path::new(stack);
                    assert!(
                        conflict_free(p, &q) && [0, 1].iter().all(|&s| {
                            set_violated(&sets[s], a, p, instance) || set_violated(&sets[s], b, &q, instance)
                        }),
                        "partner search returned an invalid pair"
                    );
                    let paths = if side == 0 { [p.clone(), q] } else { [q, p.clone()] };
                    return Disjunction::Counterexample { paths };
                }
            }
        }
        return Disjunction::Holds { paths_checked: checked };
    }
    Disjunction::Inconclusive
}
