//! Rectangle symmetry: two agents whose shortest paths all cross inside a shared area.
//!
//! Three detectors are provided: start and target nodes of entire paths, MDD singletons as
//! segment endpoints, and arbitrary conflicting areas read off the MDDs.

use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::cbs::{NodeView, RectangleMode};
use crate::conflict::{Cardinality, Conflict, ConflictKind};
use crate::constraint::{Constraint, Path};
use crate::grid::{GridMap, Vertex};
use crate::mdd::{blocks_all_paths, find_singletons, Mdd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceTimeNode {
    pub x: i64,
    pub y: i64,
    pub t: i64,
}

impl SpaceTimeNode {
    pub fn new(x: i64, y: i64, t: i64) -> Self {
        SpaceTimeNode { x, y, t }
    }

    pub fn at(map: &GridMap, v: Vertex, t: u32) -> Self {
        let (x, y) = map.coords(v);
        SpaceTimeNode { x: x as i64, y: y as i64, t: t as i64 }
    }

    pub fn manhattan(&self, x: i64, y: i64) -> i64 {
        (self.x - x).abs() + (self.y - y).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectangleFinding {
    pub rs: SpaceTimeNode,
    pub rg: SpaceTimeNode,
    pub r1: SpaceTimeNode,
    pub r2: SpaceTimeNode,
    /// `B(a_1, R_1, R_g)` and `B(a_2, R_2, R_g)`.
    pub barriers: [Constraint; 2],
    pub cardinality: Cardinality,
}

impl RectangleFinding {
    pub fn split(&self) -> [Vec<Constraint>; 2] {
        [vec![self.barriers[0].clone()], vec![self.barriers[1].clone()]]
    }
}

/// Manhattan-optimal segments moving the same way along both axes; with `segments`, the
/// start nodes must also be distinct and on different sides of the rectangle.
pub fn is_rectangle(s1: SpaceTimeNode, s2: SpaceTimeNode, g1: SpaceTimeNode, g2: SpaceTimeNode, segments: bool) -> bool {
    let manhattan = |s: SpaceTimeNode, g: SpaceTimeNode| {
        let d = g.t - s.t;
        d > 0 && s.manhattan(g.x, g.y) == d
    };
    if !manhattan(s1, g1) || !manhattan(s2, g2) {
        return false;
    }
    if (s1.x - g1.x) * (s2.x - g2.x) < 0 || (s1.y - g1.y) * (s2.y - g2.y) < 0 {
        return false;
    }
    if segments && (s1 == s2 || (s1.x - s2.x) * (s1.y - s2.y) * (s1.x - g1.x) * (s1.y - g1.y) > 0) {
        return false;
    }
    true
}

/// Corner nodes plus the orientation of the exit borders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corners {
    pub rs: SpaceTimeNode,
    pub rg: SpaceTimeNode,
    pub r1: SpaceTimeNode,
    pub r2: SpaceTimeNode,
    /// Agent 1 leaves through the border parallel to the x axis (a row).
    pub a1_exits_row: bool,
}

fn dir(a: i64, b: i64) -> i64 {
    if b >= a {
        1
    } else {
        -1
    }
}

/// Corners of the intersection of the `S_1-G_1` and `S_2-G_2` boxes. Computed in a frame
/// mirrored so both agents move toward larger x and y; `R_1` faces `S_1` across the box.
pub fn rectangle_corners(s1: SpaceTimeNode, s2: SpaceTimeNode, g1: SpaceTimeNode, g2: SpaceTimeNode) -> Option<Corners> {
    let dx = if s1.x != g1.x { dir(s1.x, g1.x) } else { dir(s2.x, g2.x) };
    let dy = if s1.y != g1.y { dir(s1.y, g1.y) } else { dir(s2.y, g2.y) };
    let f = |n: SpaceTimeNode| (n.x * dx, n.y * dy);
    let (s1f, s2f, g1f, g2f) = (f(s1), f(s2), f(g1), f(g2));
    let rs = (s1f.0.max(s2f.0), s1f.1.max(s2f.1));
    let rg = (g1f.0.min(g2f.0), g1f.1.min(g2f.1));
    if rs.0 > rg.0 || rs.1 > rg.1 {
        return None;
    }
    let ahead_x = s1f.0 - s2f.0;
    let ahead_y = s1f.1 - s2f.1;
    let a1_exits_row = ahead_x > 0 || (ahead_x == 0 && ahead_y < 0);
    let (r1, r2) = if a1_exits_row { ((rs.0, rg.1), (rg.0, rs.1)) } else { ((rg.0, rs.1), (rs.0, rg.1)) };
    let node = |(x, y): (i64, i64)| {
        let (x, y) = (x * dx, y * dy);
        SpaceTimeNode { x, y, t: s1.t + s1.manhattan(x, y) }
    };
    Some(Corners { rs: node(rs), rg: node(rg), r1: node(r1), r2: node(r2), a1_exits_row })
}

/// Whether a barrier on agent `i`'s exit border blocks every shortest segment `s -> g`.
fn exit_blocks(c: &Corners, i: usize, s: SpaceTimeNode, g: SpaceTimeNode) -> bool {
    let (r, row) = if i == 0 { (c.r1, c.a1_exits_row) } else { (c.r2, !c.a1_exits_row) };
    if row {
        r.x - c.rg.x == s.x - g.x
    } else {
        r.y - c.rg.y == s.y - g.y
    }
}

pub fn classify_rectangle(c: &Corners, s1: SpaceTimeNode, s2: SpaceTimeNode, g1: SpaceTimeNode, g2: SpaceTimeNode) -> Cardinality {
    match (exit_blocks(c, 0, s1, g1), exit_blocks(c, 1, s2, g2)) {
        (true, true) => Cardinality::Cardinal,
        (false, false) => Cardinality::Non,
        _ => Cardinality::Semi,
    }
}

/// Cells from `R_i` to `R_g` with the time agent `i` reaches them from `s`.
fn exit_border(map: &GridMap, c: &Corners, i: usize, s: SpaceTimeNode) -> Vec<(Vertex, u32)> {
    let r = if i == 0 { c.r1 } else { c.r2 };
    let mut out = Vec::new();
    let (sx, sy) = ((c.rg.x - r.x).signum(), (c.rg.y - r.y).signum());
    let steps = (c.rg.x - r.x).abs() + (c.rg.y - r.y).abs();
    for k in 0..=steps {
        let (x, y) = (r.x + sx * k, r.y + sy * k);
        if map.is_free_xy(x, y) {
            let t = s.t + s.manhattan(x, y);
            out.push((map.vertex(x as usize, y as usize), t as u32));
        }
    }
    out
}

fn barrier(agent: usize, nodes: Vec<(Vertex, u32)>) -> Constraint {
    Constraint::Barrier { agent, nodes }
}

fn area(c: &Corners) -> i64 {
    (c.r1.x - c.r2.x).abs() * (c.r1.y - c.r2.y).abs()
}

/// Rectangle from the agents' start and target nodes, with full exit borders. The vertex
/// conflict `c` must lie at both agents' Manhattan arrival time, so that every cell of the
/// area is equally far from both starts. `None` unless both current paths cross their
/// barriers.
pub fn detect_rectangle_entire(
    map: &GridMap,
    agents: [usize; 2],
    c: SpaceTimeNode,
    s: [SpaceTimeNode; 2],
    g: [SpaceTimeNode; 2],
    paths: [&Path; 2],
) -> Option<RectangleFinding> {
    if s.iter().any(|n| n.t + n.manhattan(c.x, c.y) != c.t) {
        return None;
    }
    if !is_rectangle(s[0], s[1], g[0], g[1], false) {
        return None;
    }
    let c = rectangle_corners(s[0], s[1], g[0], g[1])?;
    let cardinality = classify_rectangle(&c, s[0], s[1], g[0], g[1]);
    let b = [exit_border(map, &c, 0, s[0]), exit_border(map, &c, 1, s[1])];
    finish(agents, c, b, cardinality, paths)
}

fn finish(
    agents: [usize; 2],
    c: Corners,
    b: [Vec<(Vertex, u32)>; 2],
    cardinality: Cardinality,
    paths: [&Path; 2],
) -> Option<RectangleFinding> {
    let crosses = |p: &Path, nodes: &[(Vertex, u32)]| nodes.iter().any(|&(v, t)| p.at(t) == v);
    if !crosses(paths[0], &b[0]) || !crosses(paths[1], &b[1]) {
        return None;
    }
    let [b1, b2] = b;
    Some(RectangleFinding {
        rs: c.rs,
        rg: c.rg,
        r1: c.r1,
        r2: c.r2,
        barriers: [barrier(agents[0], b1), barrier(agents[1], b2)],
        cardinality,
    })
}

/// Rectangles between MDD singletons around the conflict; best cardinality first, then
/// largest area. Barriers keep only nodes of the agents' MDDs.
pub fn detect_rectangle_segments(
    map: &GridMap,
    conflict: &Conflict,
    mdds: [&Mdd; 2],
    paths: [&Path; 2],
) -> Option<RectangleFinding> {
    let ConflictKind::Vertex { v, t } = conflict.kind else {
        return None;
    };
    if t > mdds[0].cost || t > mdds[1].cost {
        return None;
    }
    let c = SpaceTimeNode::at(map, v, t);
    let candidates = |m: &Mdd| {
        let all: Vec<SpaceTimeNode> = find_singletons(m).into_iter().map(|(u, s)| SpaceTimeNode::at(map, u, s)).collect();
        let starts: Vec<SpaceTimeNode> = all.iter().copied().filter(|n| n.t <= c.t && n.manhattan(c.x, c.y) == c.t - n.t).collect();
        let goals: Vec<SpaceTimeNode> = all.iter().copied().filter(|n| n.t >= c.t && n.manhattan(c.x, c.y) == n.t - c.t).collect();
        (starts, goals)
    };
    let (st1, go1) = candidates(mdds[0]);
    let (st2, go2) = candidates(mdds[1]);
    let mut best: Option<(Cardinality, i64, Corners, [SpaceTimeNode; 2])> = None;
    for &s1 in &st1 {
        for &s2 in &st2 {
            for &g1 in &go1 {
                for &g2 in &go2 {
                    if !is_rectangle(s1, s2, g1, g2, true) {
                        continue;
                    }
                    let Some(cr) = rectangle_corners(s1, s2, g1, g2) else { continue };
                    let kind = classify_rectangle(&cr, s1, s2, g1, g2);
                    let a = area(&cr);
                    let better = match &best {
                        None => true,
                        Some((bk, ba, _, _)) => kind < *bk || (kind == *bk && a > *ba),
                    };
                    if better {
                        best = Some((kind, a, cr, [s1, s2]));
                    }
                }
            }
        }
    }
    let (kind, _, cr, s) = best?;
    let restrict = |nodes: Vec<(Vertex, u32)>, m: &Mdd| nodes.into_iter().filter(|&(u, s)| m.contains(u, s)).collect();
    let b = [restrict(exit_border(map, &cr, 0, s[0]), mdds[0]), restrict(exit_border(map, &cr, 1, s[1]), mdds[1])];
    finish([conflict.a, conflict.b], cr, b, kind, paths)
}

/// Space-time nodes visited by both agents' MDDs at a single, shared timestep, grown from
/// the conflicting vertex, plus the agents' entrance edges into the area.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedRectangle {
    /// Vertex to its unique timestep.
    pub nodes: FxHashMap<Vertex, u32>,
    /// Per agent, MDD edges `(from, to)` entering the area; `to` is inside, `from` is not.
    pub entrances: [Vec<(Vertex, Vertex)>; 2],
}

fn single_time(proj: &FxHashMap<Vertex, Vec<u32>>, v: Vertex) -> Option<u32> {
    match proj.get(&v).map(Vec::as_slice) {
        Some([t]) => Some(*t),
        _ => None,
    }
}

/// Flood search from the conflicting vertex over grid neighbors `u` whose projections in
/// both MDDs are the same single timestep, one apart from the neighbor's.
pub fn find_conflicting_area(map: &GridMap, conflict: &Conflict, mdds: [&Mdd; 2]) -> Option<GeneralizedRectangle> {
    let ConflictKind::Vertex { v, t } = conflict.kind else {
        return None;
    };
    let proj = [mdds[0].projection(), mdds[1].projection()];
    let time = |u: Vertex| match (single_time(&proj[0], u), single_time(&proj[1], u)) {
        (Some(a), Some(b)) if a == b => Some(a),
        _ => None,
    };
    if time(v) != Some(t) {
        return None;
    }
    let mut nodes: FxHashMap<Vertex, u32> = [(v, t)].into_iter().collect();
    let mut q = VecDeque::from([v]);
    while let Some(u) = q.pop_front() {
        let tu = nodes[&u];
        for w in map.neighbors(u) {
            if nodes.contains_key(&w) {
                continue;
            }
            if let Some(tw) = time(w) {
                if tw.abs_diff(tu) == 1 {
                    nodes.insert(w, tw);
                    q.push_back(w);
                }
            }
        }
    }
    if nodes.len() <= 1 {
        return None;
    }
    let mut entrances = [Vec::new(), Vec::new()];
    for (i, m) in mdds.iter().enumerate() {
        for (from, to, s) in m.edges() {
            if nodes.get(&to) == Some(&s) && nodes.get(&from) != Some(&(s - 1)) {
                entrances[i].push((from, to));
            }
        }
        entrances[i].sort_unstable();
        entrances[i].dedup();
    }
    Some(GeneralizedRectangle { nodes, entrances })
}

/// A unit side of an area cell, facing direction `d` (0 up, 1 left, 2 down, 3 right).
type Side = ((i64, i64), u8);

const DIRS: [(i64, i64); 4] = [(0, -1), (-1, 0), (0, 1), (1, 0)];

/// Lattice segment of a side, oriented so that consecutive sides of one contour chain up.
fn side_segment(((x, y), d): Side) -> ((i64, i64), (i64, i64)) {
    match d {
        0 => ((x + 1, y), (x, y)),
        1 => ((x, y), (x, y + 1)),
        2 => ((x, y + 1), (x + 1, y + 1)),
        _ => ((x + 1, y + 1), (x + 1, y)),
    }
}

/// Corners, border arcs and barrier cells derived from an area.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorderScan {
    pub rs: Vertex,
    pub rg: Vertex,
    /// `R_1` and `R_2`: where the other agent's last entrance lies before `R_g`.
    pub r: [Vertex; 2],
    /// Exit border cells of each agent, from `R_i` to `R_g`.
    pub exit_cells: [Vec<Vertex>; 2],
}

/// Traces the boundary of the area into closed contours of sides. `None` if two contours
/// touch at a lattice point, which makes the tracing ambiguous.
fn contours(cells: &FxHashSet<(i64, i64)>) -> Option<Vec<Vec<Side>>> {
    let mut by_start: FxHashMap<(i64, i64), Side> = FxHashMap::default();
    let mut sides = Vec::new();
    for &(x, y) in cells {
        for (d, (dx, dy)) in DIRS.iter().enumerate() {
            if !cells.contains(&(x + dx, y + dy)) {
                let s = ((x, y), d as u8);
                if by_start.insert(side_segment(s).0, s).is_some() {
                    return None;
                }
                sides.push(s);
            }
        }
    }
    sides.sort_unstable();
    let mut used: FxHashSet<Side> = FxHashSet::default();
    let mut out = Vec::new();
    for &first in &sides {
        if used.contains(&first) {
            continue;
        }
        let mut cyc = vec![first];
        used.insert(first);
        let mut cur = first;
        loop {
            let next = *by_start.get(&side_segment(cur).1)?;
            if next == first {
                break;
            }
            if !used.insert(next) {
                return None;
            }
            cyc.push(next);
            cur = next;
        }
        out.push(cyc);
    }
    Some(out)
}

/// Splits the outer border into the two arcs between `R_s` and `R_g`, checks that each
/// agent enters through its own arc and that no hole is entered by both, and derives
/// `R_1`, `R_2` and the exit borders.
pub fn scan_border_and_holes(map: &GridMap, gr: &GeneralizedRectangle) -> Option<BorderScan> {
    let cell = |v: Vertex| {
        let (x, y) = map.coords(v);
        (x as i64, y as i64)
    };
    let cells: FxHashSet<(i64, i64)> = gr.nodes.keys().map(|&v| cell(v)).collect();
    let all = contours(&cells)?;
    let leftmost = *cells.iter().min()?;
    let outer_idx = all.iter().position(|c| c.contains(&(leftmost, 1)))?;
    let vertex = |(x, y): (i64, i64)| map.vertex(x as usize, y as usize);
    let time = |c: (i64, i64)| gr.nodes[&vertex(c)];

    // entrance sides per agent
    let side_of = |(from, to): (Vertex, Vertex)| -> Option<Side> {
        let (a, b) = (cell(from), cell(to));
        let d = DIRS.iter().position(|&(dx, dy)| (b.0 + dx, b.1 + dy) == a)?;
        Some((b, d as u8))
    };
    let mut ent: [FxHashSet<Side>; 2] = [FxHashSet::default(), FxHashSet::default()];
    for i in 0..2 {
        for &e in &gr.entrances[i] {
            ent[i].insert(side_of(e)?);
        }
    }
    for (k, c) in all.iter().enumerate() {
        if k != outer_idx && c.iter().any(|s| ent[0].contains(s)) && c.iter().any(|s| ent[1].contains(s)) {
            return None;
        }
    }
    let outer = &all[outer_idx];
    let border_cells: Vec<(i64, i64)> = outer.iter().map(|s| s.0).collect();
    let tmin = border_cells.iter().map(|&c| time(c)).min()?;
    let tmax = border_cells.iter().map(|&c| time(c)).max()?;
    let unique = |t: u32| {
        let mut v: Vec<(i64, i64)> = border_cells.iter().copied().filter(|&c| time(c) == t).collect();
        v.dedup();
        v.sort_unstable();
        v.dedup();
        (v.len() == 1).then(|| v[0])
    };
    let (rs, rg) = (unique(tmin)?, unique(tmax)?);
    // rotate so the sequence starts with the R_s run
    let n = outer.len();
    let runs = |c: (i64, i64)| (0..n).filter(|&i| outer[i].0 == c && outer[(i + n - 1) % n].0 != c).count();
    if runs(rs) != 1 || runs(rg) != 1 {
        return None;
    }
    let start = (0..n).find(|&i| outer[i].0 == rs && outer[(i + n - 1) % n].0 != rs)?;
    let seq: Vec<Side> = (0..n).map(|k| outer[(start + k) % n]).collect();
    let rs_end = seq.iter().position(|s| s.0 != rs)?;
    let rg_start = seq.iter().position(|s| s.0 == rg)?;
    let rg_end = rg_start + seq[rg_start..].iter().position(|s| s.0 != rg).unwrap_or(n - rg_start);
    let arc_a = &seq[rs_end..rg_start];
    let arc_b: Vec<Side> = seq[rg_end..].iter().rev().copied().collect();
    if seq[rg_start..rg_end].iter().any(|s| ent[0].contains(s) || ent[1].contains(s)) {
        return None;
    }
    let on = |arc: &[Side], i: usize| arc.iter().any(|s| ent[i].contains(s));
    let on_rs = |i: usize| seq[..rs_end].iter().any(|s| ent[i].contains(s));
    for i in 0..2 {
        if !on(arc_a, i) && !on(&arc_b, i) && !on_rs(i) {
            return None;
        }
    }
    // agent entering through arc A
    let p = match (on(arc_a, 0) || on(&arc_b, 1), on(&arc_b, 0) || on(arc_a, 1)) {
        (true, false) => 0,
        (false, true) => 1,
        _ => return None,
    };
    let q = 1 - p;
    // cells from the last entrance of `who` along `arc` up to R_g
    let exit_from = |arc: &[Side], who: usize| -> Vec<Vertex> {
        let from = arc.iter().rposition(|s| ent[who].contains(s));
        let mut cells: Vec<(i64, i64)> = match from {
            Some(k) => arc[k..].iter().map(|s| s.0).collect(),
            None => std::iter::once(rs).chain(arc.iter().map(|s| s.0)).collect(),
        };
        cells.push(rg);
        cells.dedup();
        let mut seen = FxHashSet::default();
        cells.into_iter().filter(|c| seen.insert(*c)).map(vertex).collect()
    };
    let mut exit_cells: [Vec<Vertex>; 2] = [Vec::new(), Vec::new()];
    exit_cells[q] = exit_from(arc_a, p);
    exit_cells[p] = exit_from(&arc_b, q);
    let r = [exit_cells[0][0], exit_cells[1][0]];
    Some(BorderScan { rs: vertex(rs), rg: vertex(rg), r, exit_cells })
}

/// Barriers along both exit borders, gated on the current paths crossing them; cardinality
/// from whether each barrier cuts its agent's MDD.
pub fn generate_and_classify_gr(
    gr: &GeneralizedRectangle,
    scan: &BorderScan,
    agents: [usize; 2],
    mdds: [&Mdd; 2],
    paths: [&Path; 2],
    map: &GridMap,
) -> Option<RectangleFinding> {
    let nodes = |i: usize| -> Vec<(Vertex, u32)> { scan.exit_cells[i].iter().map(|&v| (v, gr.nodes[&v])).collect() };
    let b = [nodes(0), nodes(1)];
    let cut = |i: usize| blocks_all_paths(mdds[i], &b[i].iter().copied().collect());
    let cardinality = match (cut(0), cut(1)) {
        (true, true) => Cardinality::Cardinal,
        (false, false) => Cardinality::Non,
        _ => Cardinality::Semi,
    };
    let st = |v: Vertex| SpaceTimeNode::at(map, v, gr.nodes[&v]);
    let c = Corners { rs: st(scan.rs), rg: st(scan.rg), r1: st(scan.r[0]), r2: st(scan.r[1]), a1_exits_row: false };
    finish(agents, c, b, cardinality, paths)
}

/// The configured rectangle technique on a semi- or non-cardinal vertex conflict.
pub fn rectangle_reasoning(conflict: &Conflict, view: &NodeView, mode: RectangleMode) -> Option<RectangleFinding> {
    let map = view.instance.map();
    let (a, b) = (conflict.a, conflict.b);
    let paths = [view.path(a), view.path(b)];
    match mode {
        RectangleMode::Off => None,
        RectangleMode::Entire => {
            let ConflictKind::Vertex { v, t } = conflict.kind else {
                return None;
            };
            let inst = view.instance;
            let s = [SpaceTimeNode::at(map, inst.start(a), 0), SpaceTimeNode::at(map, inst.start(b), 0)];
            let g = [
                SpaceTimeNode::at(map, inst.target(a), paths[0].cost()),
                SpaceTimeNode::at(map, inst.target(b), paths[1].cost()),
            ];
            detect_rectangle_entire(map, [a, b], SpaceTimeNode::at(map, v, t), s, g, paths)
        }
        RectangleMode::Segments => {
            let (m1, m2) = (view.mdd(a), view.mdd(b));
            detect_rectangle_segments(map, conflict, [&m1, &m2], paths)
        }
        RectangleMode::Generalized => {
            let (m1, m2) = (view.mdd(a), view.mdd(b));
            let gr = find_conflicting_area(map, conflict, [&m1, &m2])?;
            let scan = scan_border_and_holes(map, &gr)?;
            generate_and_classify_gr(&gr, &scan, [a, b], [&m1, &m2], paths, map)
        }
    }
}
