//! Small hand-built instances that exhibit each symmetry, and a random instance generator.
//!
//! Cells are written as in the figures they come from: column letter, row number, with
//! `A1` at `(0, 0)`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridMap, Vertex};
use crate::instance::{AgentSpec, Instance};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 6] =
    ["fig1-rectangle", "fig3-rectangle", "fig5-target", "table1-target", "fig7-pseudo-corridor", "fig8-corridor"];

/// Two agents crossing on an open 4x4 grid: A2 to D3 and B1 to C4.
pub fn fig1() -> Instance {
    fig3(4)
}

/// The crossing of [`fig1`] on an `n` by `n` grid; the shared area is `(n-2)^2` cells.
pub fn fig3(n: usize) -> Instance {
    assert!(n >= 4);
    Instance::from_xy(GridMap::open(n, n), &[((0, 1), (n - 1, n - 2)), ((1, 0), (n - 2, n - 1))]).unwrap()
}

/// Agent 1 walks A2 to E2 past D2, where agent 2 parks after one step from C2.
pub fn fig5() -> Instance {
    table1(3)
}

/// The target conflict of [`fig5`] with `d` steps from agent 1's start to agent 2's target.
pub fn table1(d: usize) -> Instance {
    assert!(d >= 2);
    let w = d + 2;
    let mut rows = ["@".repeat(w), ".".repeat(w), "@".repeat(w)];
    rows[2].replace_range(d - 1..d, ".");
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let map = GridMap::from_rows(&rows).unwrap();
    Instance::from_xy(map, &[((0, 1), (d + 1, 1)), ((d - 1, 1), (d, 1))]).unwrap()
}

/// Two agents swapping sides through row 2 with an open row above it; neither waiting
/// anywhere nor taking row 2 second is as cheap as one detour.
pub fn fig7() -> Instance {
    let map = GridMap::from_rows(&["......", "......", ".@@@@.", ".@@@@."]).unwrap();
    Instance::from_xy(map, &[((0, 2), (5, 3)), ((5, 2), (0, 3))]).unwrap()
}

/// Head-on traversal of a corridor of length `k` (the figure has `k = 3`): agent 1 from the
/// bottom left to the bottom right, agent 2 from the top right to the top left.
pub fn fig8(k: usize) -> Instance {
    assert!(k >= 2);
    let w = k + 1;
    let side = format!(".{}.", "@".repeat(w - 2));
    let rows = ["@".repeat(w), side.clone(), ".".repeat(w), side];
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let map = GridMap::from_rows(&rows).unwrap();
    Instance::from_xy(map, &[((0, 3), (k, 3)), ((k, 1), (0, 1))]).unwrap()
}

/// A named fixture; `param` is the size for the parameterized ones.
pub fn by_name(name: &str, param: Option<usize>) -> Result<Instance> {
    let bad = |what: &str| Error::InvalidInstance(format!("fixture {name}: {what}"));
    match name {
        "fig1-rectangle" => Ok(fig1()),
        "fig3-rectangle" => match param.unwrap_or(4) {
            n if n >= 4 => Ok(fig3(n)),
            _ => Err(bad("size must be at least 4")),
        },
        "fig5-target" => Ok(fig5()),
        "table1-target" => match param.unwrap_or(10) {
            d if d >= 2 => Ok(table1(d)),
            _ => Err(bad("distance must be at least 2")),
        },
        "fig7-pseudo-corridor" => Ok(fig7()),
        "fig8-corridor" => match param.unwrap_or(3) {
            k if k >= 2 => Ok(fig8(k)),
            _ => Err(bad("corridor length must be at least 2")),
        },
        _ => Err(bad("unknown fixture")),
    }
}

/// Largest 4-connected set of free cells.
pub fn largest_component(map: &GridMap) -> Vec<Vertex> {
    let mut seen = vec![false; map.cells()];
    let mut best = Vec::new();
    for s in map.free_vertices() {
        if seen[s as usize] {
            continue;
        }
        seen[s as usize] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            for w in map.neighbors(comp[i]) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

/// A grid with each cell blocked with probability `obstacles`.
pub fn random_map<R: Rng>(rng: &mut R, width: usize, height: usize, obstacles: f64) -> GridMap {
    let blocked = (0..width * height).map(|_| rng.gen_bool(obstacles)).collect();
    GridMap::new(width, height, blocked).unwrap()
}

/// `agents` distinct starts and distinct targets drawn from the largest component of `map`.
pub fn random_agents<R: Rng>(rng: &mut R, map: &Arc<GridMap>, agents: usize) -> Option<Instance> {
    let comp = largest_component(map);
    if comp.len() < agents.max(2) {
        return None;
    }
    let starts: Vec<Vertex> = comp.choose_multiple(rng, agents).copied().collect();
    let targets: Vec<Vertex> = comp.choose_multiple(rng, agents).copied().collect();
    let specs = starts.into_iter().zip(targets).map(|(start, target)| AgentSpec { start, target }).collect();
    Instance::new(map.clone(), specs).ok()
}

/// Random map and agents, retried until the instance is valid.
pub fn random_instance<R: Rng>(rng: &mut R, width: usize, height: usize, obstacles: f64, agents: usize) -> Instance {
    loop {
        let map = Arc::new(random_map(rng, width, height, obstacles));
        if let Some(i) = random_agents(rng, &map, agents) {
            return i;
        }
    }
}
