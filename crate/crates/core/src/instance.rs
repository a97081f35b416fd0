//! Agents, instances and the movingai `.scen` format.

use std::sync::{Arc, Mutex};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::grid::{true_distance, GridMap, Vertex, INF};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AgentSpec {
    pub start: Vertex,
    pub target: Vertex,
}

/// A map plus an ordered list of agents. Distance tables to each target are built once;
/// tables from other sources are computed on demand and cached.
#[derive(Clone, Debug)]
pub struct Instance {
    map: Arc<GridMap>,
    agents: Vec<AgentSpec>,
    to_target: Vec<Arc<Vec<u32>>>,
    cache: Arc<Mutex<FxHashMap<Vertex, Arc<Vec<u32>>>>>,
}

impl Instance {
    pub fn new(map: Arc<GridMap>, agents: Vec<AgentSpec>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidInstance("no agents".into()));
        }
        let mut starts = FxHashSet::default();
        let mut targets = FxHashSet::default();
        let mut to_target = Vec::with_capacity(agents.len());
        for (i, a) in agents.iter().enumerate() {
            if !map.is_free(a.start) || !map.is_free(a.target) {
                return Err(Error::InvalidInstance(format!("agent {i} has a blocked start or target")));
            }
            if !starts.insert(a.start) || !targets.insert(a.target) {
                return Err(Error::InvalidInstance(format!("agent {i} shares a start or target")));
            }
            let d = true_distance(&map, a.target)?;
            if d[a.start as usize] == INF {
                return Err(Error::InvalidInstance(format!("agent {i} cannot reach its target")));
            }
            to_target.push(Arc::new(d));
        }
        Ok(Instance { map, agents, to_target, cache: Arc::new(Mutex::new(FxHashMap::default())) })
    }

    pub fn from_xy(map: GridMap, agents: &[((usize, usize), (usize, usize))]) -> Result<Self> {
        let specs = agents
            .iter()
            .map(|&((sx, sy), (gx, gy))| AgentSpec { start: map.vertex(sx, sy), target: map.vertex(gx, gy) })
            .collect();
        Instance::new(Arc::new(map), specs)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn start(&self, a: usize) -> Vertex {
        self.agents[a].start
    }

    pub fn target(&self, a: usize) -> Vertex {
        self.agents[a].target
    }

    /// Distances to agent `a`'s target.
    pub fn target_distances(&self, a: usize) -> &[u32] {
        &self.to_target[a]
    }

    /// Distance table from an arbitrary free vertex.
    pub fn distances_from(&self, source: Vertex) -> Arc<Vec<u32>> {
        if let Some(i) = self.agents.iter().position(|s| s.target == source) {
            return self.to_target[i].clone();
        }
        let mut cache = self.cache.lock().expect("distance cache poisoned");
        cache
            .entry(source)
            .or_insert_with(|| Arc::new(true_distance(&self.map, source).unwrap_or_else(|_| vec![INF; self.map.cells()])))
            .clone()
    }

    pub fn distance(&self, u: Vertex, v: Vertex) -> u32 {
        self.distances_from(v)[u as usize]
    }

    /// Sum of individual shortest path lengths.
    pub fn sic(&self) -> u64 {
        (0..self.agents.len()).map(|a| self.to_target[a][self.agents[a].start as usize] as u64).sum()
    }

    /// Same map, first `k` agents only.
    pub fn prefix(&self, k: usize) -> Result<Instance> {
        Instance::new(self.map.clone(), self.agents[..k.min(self.agents.len())].to_vec())
    }
}

/// Parses a movingai `.scen` file against `map`, returning agents in file order.
pub fn parse_scen(text: &str, map: &GridMap) -> Result<Vec<AgentSpec>> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    match lines.next() {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == ["version", "1"] => {}
        Some((_, l)) if l.split_whitespace().next() == Some("version") => {
            return Err(Error::Parse { line: 1, msg: format!("unsupported {l:?}") })
        }
        _ => return Err(Error::Parse { line: 1, msg: "expected `version 1`".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split('\t').flat_map(|s| s.split(' ')).filter(|s| !s.is_empty()).collect();
        if f.len() < 9 {
            return Err(err(format!("expected 9 fields, got {}", f.len())));
        }
        // the map name may contain spaces only in odd files; numeric fields are the last 7
        let n = f.len();
        let num = |s: &str| s.parse::<i64>().map_err(|_| err(format!("bad integer {s:?}")));
        let (sx, sy, gx, gy) = (num(f[n - 5])?, num(f[n - 4])?, num(f[n - 3])?, num(f[n - 2])?);
        f[n - 1].parse::<f64>().map_err(|_| err(format!("bad distance {:?}", f[n - 1])))?;
        for (x, y, what) in [(sx, sy, "start"), (gx, gy, "goal")] {
            if !map.in_bounds(x, y) {
                return Err(err(format!("{what} ({x},{y}) out of bounds")));
            }
            if !map.is_free_xy(x, y) {
                return Err(err(format!("{what} ({x},{y}) is blocked")));
            }
        }
        out.push(AgentSpec {
            start: map.vertex(sx as usize, sy as usize),
            target: map.vertex(gx as usize, gy as usize),
        });
    }
    Ok(out)
}
