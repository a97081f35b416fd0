//! Best-first search over the constraint tree.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;

use crate::astar::{plan_shortest_path, ConflictAvoidance};
use crate::conflict::{classify_conflict, detect_conflicts_among, Cardinality, Conflict, SymmetryClass};
use crate::constraint::{signature, Constraint, ConstraintTable, Path};
use crate::error::{Error, Result};
use crate::framework::{reason_symmetry, ReasoningOutcome};
use crate::heuristic::{min_vertex_cover, min_weighted_vertex_cover};
use crate::instance::Instance;
use crate::mdd::{build_mdd, Mdd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeuristicMode {
    /// h = 0, plain CBS with conflict prioritization.
    Zero,
    /// Minimum vertex cover of the cardinal conflict graph.
    Cg,
    /// Edge-weighted cover of the pairwise dependency graph, weights from 2-agent sub-solves.
    Wdg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RectangleMode {
    Off,
    /// Entire paths: start and target nodes only.
    Entire,
    /// Path segments between MDD singletons.
    Segments,
    /// Conflicting areas of arbitrary shape.
    Generalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorridorMode {
    Off,
    /// Degree-2 chains bounded by starts and targets.
    Basic,
    /// Basic plus length-1 pseudo-corridors.
    Pseudo,
    /// Chains may contain starts and targets; corridor-target constraints.
    StartTarget,
    /// Everything: chains with starts/targets, corridor-target and pseudo-corridors.
    Generalized,
}

impl CorridorMode {
    pub fn long_chains(self) -> bool {
        matches!(self, CorridorMode::StartTarget | CorridorMode::Generalized)
    }

    pub fn pseudo(self) -> bool {
        matches!(self, CorridorMode::Pseudo | CorridorMode::Generalized)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub name: String,
    pub heuristic: HeuristicMode,
    pub rectangle: RectangleMode,
    pub target: bool,
    pub corridor: CorridorMode,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Expansion budget of each 2-agent sub-solve under [`HeuristicMode::Wdg`].
    pub pair_node_limit: u64,
}

impl SolverConfig {
    pub const NAMES: [&'static str; 13] =
        ["cbs", "none", "r", "rm", "gr", "t", "c", "pc", "stc", "gc", "rtc", "cbsh2", "cbsh2-rtc"];

    pub fn named(name: &str) -> Result<Self> {
        use CorridorMode as C;
        use RectangleMode as R;
        let (h, r, t, c) = match name.trim().to_ascii_lowercase().as_str() {
            "cbs" => (HeuristicMode::Zero, R::Off, false, C::Off),
            "none" => (HeuristicMode::Cg, R::Off, false, C::Off),
            "r" => (HeuristicMode::Cg, R::Entire, false, C::Off),
            "rm" => (HeuristicMode::Cg, R::Segments, false, C::Off),
            "gr" => (HeuristicMode::Cg, R::Generalized, false, C::Off),
            "t" => (HeuristicMode::Cg, R::Off, true, C::Off),
            "c" => (HeuristicMode::Cg, R::Off, false, C::Basic),
            "pc" => (HeuristicMode::Cg, R::Off, false, C::Pseudo),
            "stc" => (HeuristicMode::Cg, R::Off, false, C::StartTarget),
            "gc" => (HeuristicMode::Cg, R::Off, false, C::Generalized),
            "rtc" => (HeuristicMode::Cg, R::Generalized, true, C::Generalized),
            "cbsh2" => (HeuristicMode::Wdg, R::Off, false, C::Off),
            "cbsh2-rtc" => (HeuristicMode::Wdg, R::Generalized, true, C::Generalized),
            other => return Err(Error::UnknownConfig(other.to_string())),
        };
        Ok(SolverConfig {
            name: name.trim().to_ascii_lowercase(),
            heuristic: h,
            rectangle: r,
            target: t,
            corridor: c,
            time_limit: None,
            node_limit: None,
            pair_node_limit: 64,
        })
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_node_limit(mut self, limit: u64) -> Self {
        self.node_limit = Some(limit);
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    /// CT nodes popped from the open list, the goal node included.
    pub expanded: u64,
    /// CT nodes split into children.
    pub branched: u64,
    pub generated: u64,
    /// Children discarded because some agent had no path.
    pub pruned: u64,
    pub runtime: Duration,
    /// Splits per [`SymmetryClass`], indexed by [`SymmetryClass::index`].
    pub branches: [u64; 4],
    pub solved: bool,
    pub infeasible: bool,
    pub cost: Option<u64>,
    pub root_cost: u64,
    pub root_h: u64,
    /// Largest cost + h over expanded nodes.
    pub max_expanded_f: u64,
    /// Children whose cost was below their parent's (must stay 0).
    pub cost_decreases: u64,
}

impl SolveStats {
    /// Share of splits by `class`, in percent. 0 when nothing was split.
    pub fn branch_pct(&self, class: SymmetryClass) -> f64 {
        let total: u64 = self.branches.iter().sum();
        if total == 0 {
            0.0
        } else {
            100.0 * self.branches[class.index()] as f64 / total as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub paths: Vec<Path>,
    pub cost: u64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub solution: Option<Solution>,
    pub stats: SolveStats,
}

/// MDDs and tables shared by all nodes of one search.
#[derive(Default)]
pub struct NodeCache {
    mdds: RefCell<FxHashMap<(usize, u64, u32), Rc<Mdd>>>,
    tables: RefCell<FxHashMap<(usize, u64), Rc<ConstraintTable>>>,
}

impl NodeCache {
    const MAX_ENTRIES: usize = 50_000;

    fn trim(&self) {
        if self.mdds.borrow().len() > Self::MAX_ENTRIES {
            self.mdds.borrow_mut().clear();
        }
        if self.tables.borrow().len() > Self::MAX_ENTRIES {
            self.tables.borrow_mut().clear();
        }
    }
}

/// Read access to one CT node: its constraints, plan, and lazily built tables and MDDs.
pub struct NodeView<'a> {
    pub instance: &'a Instance,
    pub constraints: &'a [Constraint],
    paths: &'a [Option<Arc<Path>>],
    cache: &'a NodeCache,
    sigs: RefCell<FxHashMap<usize, u64>>,
}

impl<'a> NodeView<'a> {
    pub fn new(
        instance: &'a Instance,
        constraints: &'a [Constraint],
        paths: &'a [Option<Arc<Path>>],
        cache: &'a NodeCache,
    ) -> Self {
        NodeView { instance, constraints, paths, cache, sigs: RefCell::new(FxHashMap::default()) }
    }

    pub fn path(&self, agent: usize) -> &Path {
        self.paths[agent].as_ref().expect("agent not active in this search")
    }

    fn sig(&self, agent: usize) -> u64 {
        *self.sigs.borrow_mut().entry(agent).or_insert_with(|| signature(self.constraints, agent))
    }

    pub fn table(&self, agent: usize) -> Rc<ConstraintTable> {
        let key = (agent, self.sig(agent));
        if let Some(t) = self.cache.tables.borrow().get(&key) {
            return t.clone();
        }
        let t = Rc::new(ConstraintTable::build(self.constraints, agent, self.instance));
        self.cache.tables.borrow_mut().insert(key, t.clone());
        t
    }

    /// MDD at the cost of the agent's current (shortest) path.
    pub fn mdd(&self, agent: usize) -> Rc<Mdd> {
        let cost = self.path(agent).cost();
        let key = (agent, self.sig(agent), cost);
        if let Some(m) = self.cache.mdds.borrow().get(&key) {
            return m.clone();
        }
        let table = self.table(agent);
        let m = Rc::new(build_mdd(self.instance, agent, &table, cost));
        self.cache.mdds.borrow_mut().insert(key, m.clone());
        m
    }

    pub fn cardinality(&self, c: &Conflict) -> Cardinality {
        classify_conflict(c, &self.mdd(c.a), &self.mdd(c.b))
    }
}

struct CtNode {
    parent: Option<usize>,
    added: Vec<Constraint>,
    paths: Vec<Option<Arc<Path>>>,
    cost: u64,
    h: u64,
    conflicts: Vec<Conflict>,
    cards: Vec<Cardinality>,
}

/// Called with the constraints of the node being split and the chosen outcome.
pub type SplitObserver<'o> = dyn FnMut(&[Constraint], &ReasoningOutcome) + 'o;

struct Engine<'a, 'o> {
    inst: &'a Instance,
    cfg: &'a SolverConfig,
    active: Vec<usize>,
    base: Vec<Constraint>,
    nodes: Vec<CtNode>,
    cache: NodeCache,
    memo: FxHashMap<(usize, usize, u64, u64), u32>,
    stats: SolveStats,
    deadline: Option<Instant>,
    observer: Option<&'o mut SplitObserver<'o>>,
}

/// Optimal sum-of-costs solution, or the reason there is none.
pub fn solve(instance: &Instance, config: &SolverConfig) -> SolveResult {
    run(instance, config, (0..instance.num_agents()).collect(), Vec::new(), None, None)
}

/// Like [`solve`], calling `observer` with every split performed.
pub fn solve_observed<'o>(
    instance: &Instance,
    config: &SolverConfig,
    observer: &'o mut SplitObserver<'o>,
) -> SolveResult {
    run(instance, config, (0..instance.num_agents()).collect(), Vec::new(), None, Some(observer))
}

/// Solves the sub-problem of `agents` under `constraints`, optionally starting from given paths.
pub fn solve_subset(
    instance: &Instance,
    config: &SolverConfig,
    agents: &[usize],
    constraints: Vec<Constraint>,
    initial: Option<Vec<Option<Arc<Path>>>>,
) -> SolveResult {
    run(instance, config, agents.to_vec(), constraints, initial, None)
}

fn run<'o>(
    inst: &Instance,
    cfg: &SolverConfig,
    active: Vec<usize>,
    base: Vec<Constraint>,
    initial: Option<Vec<Option<Arc<Path>>>>,
    observer: Option<&'o mut SplitObserver<'o>>,
) -> SolveResult {
    let begin = Instant::now();
    let mut eng = Engine {
        inst,
        cfg,
        active,
        base,
        nodes: Vec::new(),
        cache: NodeCache::default(),
        memo: FxHashMap::default(),
        stats: SolveStats::default(),
        deadline: cfg.time_limit.map(|d| begin + d),
        observer,
    };
    let solution = eng.search(initial);
    let mut stats = eng.stats;
    stats.runtime = begin.elapsed();
    if let Some(s) = &solution {
        stats.solved = true;
        stats.cost = Some(s.cost);
    }
    SolveResult { solution, stats }
}

impl Engine<'_, '_> {
    fn constraints_of(&self, mut idx: usize) -> Vec<Constraint> {
        let mut chain = Vec::new();
        loop {
            chain.push(idx);
            match self.nodes[idx].parent {
                Some(p) => idx = p,
                None => break,
            }
        }
        let mut out = self.base.clone();
        for &i in chain.iter().rev() {
            out.extend(self.nodes[i].added.iter().cloned());
        }
        out
    }

    fn conflicts(&self, paths: &[Option<Arc<Path>>]) -> Vec<Conflict> {
        let list: Vec<(usize, &Path)> = self.active.iter().map(|&a| (a, paths[a].as_deref().unwrap())).collect();
        detect_conflicts_among(&list)
    }

    fn cost(&self, paths: &[Option<Arc<Path>>]) -> u64 {
        self.active.iter().map(|&a| paths[a].as_ref().unwrap().cost() as u64).sum()
    }

    fn out_of_budget(&self) -> bool {
        if self.cfg.node_limit.is_some_and(|n| self.stats.expanded >= n) {
            return true;
        }
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn replan(
        &self,
        agent: usize,
        constraints: &[Constraint],
        paths: &[Option<Arc<Path>>],
    ) -> Option<Path> {
        let table = ConstraintTable::build(constraints, agent, self.inst);
        let others = self.active.iter().filter(|&&b| b != agent).filter_map(|&b| paths[b].as_deref());
        let cat = ConflictAvoidance::new(others);
        plan_shortest_path(self.inst, agent, &table, &cat)
    }

    /// Conflicts, cardinalities and h of a plan; `None` if h proves the node dead.
    fn evaluate(&mut self, constraints: &[Constraint], paths: Vec<Option<Arc<Path>>>, parent: Option<usize>, added: Vec<Constraint>) -> CtNode {
        let cost = self.cost(&paths);
        let conflicts = self.conflicts(&paths);
        let cards: Vec<Cardinality> = if self.cfg.heuristic == HeuristicMode::Zero && conflicts.is_empty() {
            Vec::new()
        } else {
            let view = NodeView::new(self.inst, constraints, &paths, &self.cache);
            conflicts.iter().map(|c| view.cardinality(c)).collect()
        };
        let mut h = self.heuristic(constraints, &paths, &conflicts, &cards);
        if let Some(p) = parent {
            let pf = self.nodes[p].cost + self.nodes[p].h;
            h = h.max(pf.saturating_sub(cost));
        }
        CtNode { parent, added, paths, cost, h, conflicts, cards }
    }

    fn heuristic(
        &mut self,
        constraints: &[Constraint],
        paths: &[Option<Arc<Path>>],
        conflicts: &[Conflict],
        cards: &[Cardinality],
    ) -> u64 {
        let m = self.inst.num_agents();
        match self.cfg.heuristic {
            HeuristicMode::Zero => 0,
            HeuristicMode::Cg => {
                let mut edges: Vec<(usize, usize)> = conflicts
                    .iter()
                    .zip(cards)
                    .filter(|(_, &k)| k == Cardinality::Cardinal)
                    .map(|(c, _)| (c.a.min(c.b), c.a.max(c.b)))
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                min_vertex_cover(m, &edges) as u64
            }
            HeuristicMode::Wdg => {
                let mut pairs: FxHashMap<(usize, usize), bool> = FxHashMap::default();
                for (c, &k) in conflicts.iter().zip(cards) {
                    *pairs.entry((c.a.min(c.b), c.a.max(c.b))).or_default() |= k == Cardinality::Cardinal;
                }
                let mut keys: Vec<_> = pairs.into_iter().collect();
                keys.sort_unstable();
                let mut edges = Vec::with_capacity(keys.len());
                for ((i, j), cardinal) in keys {
                    let w = self.pair_weight(constraints, paths, i, j, cardinal);
                    edges.push((i, j, w));
                }
                min_weighted_vertex_cover(m, &edges)
            }
        }
    }

    /// Extra cost the pair needs to become conflict-free under the node's constraints.
    fn pair_weight(&mut self, constraints: &[Constraint], paths: &[Option<Arc<Path>>], i: usize, j: usize, cardinal: bool) -> u32 {
        let key = (i, j, signature(constraints, i), signature(constraints, j));
        if let Some(&w) = self.memo.get(&key) {
            return w;
        }
        let mut sub = self.cfg.clone();
        sub.heuristic = HeuristicMode::Cg;
        sub.node_limit = Some(self.cfg.pair_node_limit);
        sub.time_limit = self.deadline.map(|d| d.saturating_duration_since(Instant::now()));
        let mut init = vec![None; self.inst.num_agents()];
        init[i] = paths[i].clone();
        init[j] = paths[j].clone();
        let res = run(self.inst, &sub, vec![i, j], constraints.to_vec(), Some(init), None);
        let before = paths[i].as_ref().unwrap().cost() as u64 + paths[j].as_ref().unwrap().cost() as u64;
        let w = match res.solution {
            Some(s) => (s.cost - before) as u32,
            None => cardinal as u32,
        };
        self.memo.insert(key, w);
        w
    }

    fn search(&mut self, initial: Option<Vec<Option<Arc<Path>>>>) -> Option<Solution> {
        let base = self.base.clone();
        let paths = match initial {
            Some(p) => p,
            None => {
                let mut paths: Vec<Option<Arc<Path>>> = vec![None; self.inst.num_agents()];
                for &a in &self.active.clone() {
                    match self.replan(a, &base, &paths) {
                        Some(p) => paths[a] = Some(Arc::new(p)),
                        None => {
                            self.stats.infeasible = true;
                            return None;
                        }
                    }
                }
                paths
            }
        };
        let root = self.evaluate(&base, paths, None, Vec::new());
        self.stats.root_cost = root.cost;
        self.stats.root_h = root.h;
        self.stats.generated = 1;
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        open.push(Reverse((root.cost + root.h, root.conflicts.len(), seq, 0usize)));
        self.nodes.push(root);

        while let Some(Reverse((f, _, _, idx))) = open.pop() {
            if self.out_of_budget() {
                return None;
            }
            self.stats.expanded += 1;
            self.stats.max_expanded_f = self.stats.max_expanded_f.max(f);
            if self.nodes[idx].conflicts.is_empty() {
                let node = &self.nodes[idx];
                let paths = self.active.iter().map(|&a| (*node.paths[a].clone().unwrap()).clone()).collect();
                return Some(Solution { paths, cost: node.cost });
            }
            let constraints = self.constraints_of(idx);
            let outcome = {
                let node = &self.nodes[idx];
                let view = NodeView::new(self.inst, &constraints, &node.paths, &self.cache);
                choose(&view, self.cfg, &node.conflicts, &node.cards)
            };
            self.stats.branched += 1;
            self.stats.branches[outcome.class.index()] += 1;
            if let Some(obs) = self.observer.as_mut() {
                obs(&constraints, &outcome);
            }
            for set in outcome.sets.iter() {
                match self.child(idx, &constraints, set) {
                    Some(node) => {
                        if node.cost < self.nodes[idx].cost {
                            self.stats.cost_decreases += 1;
                        }
                        self.stats.generated += 1;
                        seq += 1;
                        open.push(Reverse((node.cost + node.h, node.conflicts.len(), seq, self.nodes.len())));
                        self.nodes.push(node);
                    }
                    None => self.stats.pruned += 1,
                }
            }
            self.cache.trim();
        }
        self.stats.infeasible = true;
        None
    }

    fn child(&mut self, parent: usize, parent_constraints: &[Constraint], set: &[Constraint]) -> Option<CtNode> {
        let mut all = parent_constraints.to_vec();
        all.extend(set.iter().cloned());
        let mut paths = self.nodes[parent].paths.clone();
        let hit: Vec<usize> = self
            .active
            .iter()
            .copied()
            .filter(|&a| set.iter().any(|c| c.violated_by(a, paths[a].as_ref().unwrap(), self.inst)))
            .collect();
        for a in hit {
            let p = self.replan(a, &all, &paths)?;
            paths[a] = Some(Arc::new(p));
        }
        Some(self.evaluate(&all, paths, Some(parent), set.to_vec()))
    }
}

/// Speculative reasoning on the conflicts of a node, in order of their best possible
/// priority, stopping once no remaining conflict can beat the best outcome so far.
fn choose(view: &NodeView, cfg: &SolverConfig, conflicts: &[Conflict], cards: &[Cardinality]) -> ReasoningOutcome {
    let mut order: Vec<(Cardinality, SymmetryClass, usize)> =
        conflicts.iter().zip(cards).enumerate().map(|(i, (c, &k))| optimistic(view, cfg, c, k, i)).collect();
    order.sort_unstable();
    let mut best: Option<(Cardinality, SymmetryClass, usize, ReasoningOutcome)> = None;
    for (ok, oc, i) in order {
        if let Some((bk, bc, bi, _)) = &best {
            if (ok, oc, i) >= (*bk, *bc, *bi) {
                break;
            }
        }
        let out = reason_symmetry(&conflicts[i], cards[i], view, cfg);
        let key = (out.cardinality, out.class, i);
        if best.as_ref().is_none_or(|b| key < (b.0, b.1, b.2)) {
            best = Some((key.0, key.1, i, out));
        }
    }
    best.expect("node has conflicts").3
}

/// An upper bound on the selection priority reasoning can give conflict `c`.
fn optimistic(view: &NodeView, cfg: &SolverConfig, c: &Conflict, card: Cardinality, i: usize) -> (Cardinality, SymmetryClass, usize) {
    let t = c.time();
    let target = cfg.target && c.is_vertex() && (t >= view.path(c.a).cost() || t >= view.path(c.b).cost());
    let rect = cfg.rectangle != RectangleMode::Off && c.is_vertex() && card != Cardinality::Cardinal;
    let class = if target {
        SymmetryClass::Target
    } else if cfg.corridor != CorridorMode::Off {
        SymmetryClass::Corridor
    } else if rect {
        SymmetryClass::Rectangle
    } else {
        SymmetryClass::VertexEdge
    };
    let upgrade = rect || cfg.corridor.pseudo();
    (if upgrade { Cardinality::Cardinal } else { card }, class, i)
}
