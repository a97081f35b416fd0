use std::sync::Arc;

use crate::astar::{plan_shortest_path, ConflictAvoidance};
use crate::cbs::{NodeCache, NodeView, RectangleMode};
use crate::conflict::detect_conflicts;
use crate::mdd::build_mdd;
use crate::oracle::{enumerate_paths, joint_state_astar};
use crate::rectangle::{rectangle_reasoning, SpaceTimeNode};
use crate::{cbs, fixtures, solve, Cardinality, Constraint, ConstraintTable, GridMap, Instance, Path};
use crate::{ReasoningOutcome, SolverConfig, SymmetryClass};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(seed: u64, side: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = rng.gen_range(2..=4);
    fixtures::random_instance(&mut rng, side, side, 0.2, agents)
}

fn splits(inst: &Instance, cfg: &str) -> Vec<(Vec<Constraint>, ReasoningOutcome)> {
    let mut log = Vec::new();
    let mut obs = |cs: &[Constraint], o: &ReasoningOutcome| log.push((cs.to_vec(), o.clone()));
    cbs::solve_observed(inst, &SolverConfig::named(cfg).unwrap().with_node_limit(3000), &mut obs);
    log
}

fn shortest(inst: &Instance, agent: usize, cs: &[Constraint]) -> Option<Path> {
    let tab = ConstraintTable::build(cs, agent, inst);
    plan_shortest_path(inst, agent, &tab, &ConflictAvoidance::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn costs_never_drop_and_bounds_stay_admissible(seed in any::<u64>(), k in 0usize..SolverConfig::NAMES.len()) {
        let inst = random_case(seed, 7);
        let cfg = SolverConfig::named(SolverConfig::NAMES[k]).unwrap().with_node_limit(3000);
        let s = solve(&inst, &cfg).stats;
        prop_assert_eq!(s.cost_decreases, 0);
        if s.solved {
            let cost = s.cost.unwrap();
            prop_assert!(s.max_expanded_f <= cost, "f {} > optimum {}", s.max_expanded_f, cost);
            prop_assert!(s.root_cost + s.root_h <= cost);
            prop_assert_eq!(Some(cost), joint_state_astar(&inst, None).map(|j| j.cost));
        }
    }

    #[test]
    fn identical_nodes_give_identical_splits(seed in any::<u64>()) {
        let inst = random_case(seed, 8);
        prop_assert_eq!(splits(&inst, "rtc"), splits(&inst, "rtc"));
    }
}

#[test]
fn target_lower_bound_child_always_costs_more() {
    let mut seen = 0;
    for seed in 0..150 {
        let inst = random_case(seed, 7);
        for (node, o) in splits(&inst, "rtc") {
            if o.class != SymmetryClass::Target {
                continue;
            }
            for set in &o.sets {
                for c in set {
                    if let Constraint::LengthLower { agent, .. } = *c {
                        let before = shortest(&inst, agent, &node).unwrap().cost();
                        let mut more = node.clone();
                        more.extend(set.iter().cloned());
                        let after = shortest(&inst, agent, &more).map_or(u32::MAX, |p| p.cost());
                        assert!(after > before, "seed {seed}: {before} -> {after}");
                        seen += 1;
                    }
                }
            }
        }
    }
    assert!(seen >= 10, "only {seen} target splits");
}

#[test]
fn segment_barriers_lie_in_the_mdds() {
    let mut seen = 0;
    let cases = (0..120).map(|s| random_case(s, 8)).chain((5..9).map(fixtures::fig3));
    for inst in cases {
        for (node, o) in splits(&inst, "rm") {
            if o.class != SymmetryClass::Rectangle {
                continue;
            }
            for c in o.sets.iter().flatten() {
                let Constraint::Barrier { agent, nodes } = c else { continue };
                let tab = ConstraintTable::build(&node, *agent, &inst);
                let cost = shortest(&inst, *agent, &node).unwrap().cost();
                let mdd = build_mdd(&inst, *agent, &tab, cost);
                for &(v, t) in nodes {
                    assert!(mdd.contains(v, t), "barrier node ({v}, {t}) outside the MDD");
                }
                seen += 1;
            }
        }
    }
    assert!(seen >= 8, "only {seen} barriers");
}

fn side_cells(a: SpaceTimeNode, b: SpaceTimeNode) -> Vec<(i64, i64)> {
    let (dx, dy) = ((b.x - a.x).signum(), (b.y - a.y).signum());
    let n = (b.x - a.x).abs().max((b.y - a.y).abs());
    (0..=n).map(|i| (a.x + i * dx, a.y + i * dy)).collect()
}

#[test]
fn paths_through_a_barrier_cross_the_entrance_border() {
    for n in 5..=7 {
        let inst = fixtures::fig3(n);
        let map = inst.map();
        let paths: Vec<Option<Arc<Path>>> = (0..2).map(|a| shortest(&inst, a, &[]).map(Arc::new)).collect();
        let plan: Vec<Path> = paths.iter().map(|p| (**p.as_ref().unwrap()).clone()).collect();
        let cache = NodeCache::default();
        let view = NodeView::new(&inst, &[], &paths, &cache);
        let mut found = 0;
        for c in detect_conflicts(&plan) {
            let Some(f) = rectangle_reasoning(&c, &view, RectangleMode::Entire) else { continue };
            found += 1;
            for i in 0..2 {
                let Constraint::Barrier { agent, nodes } = &f.barriers[i] else { panic!("{:?}", f.barriers[i]) };
                let other_corner = if *agent == c.a { f.r2 } else { f.r1 };
                let entrance: Vec<(u32, u32)> = side_cells(f.rs, other_corner)
                    .into_iter()
                    .map(|(x, y)| (map.vertex(x as usize, y as usize), (f.rs.t + f.rs.manhattan(x, y)) as u32))
                    .collect();
                let all = enumerate_paths(&inst, *agent, &[], 3, 200_000).unwrap();
                let mut crossing = 0;
                for p in &all {
                    if nodes.iter().any(|&(v, t)| p.at(t) == v) {
                        crossing += 1;
                        assert!(entrance.iter().any(|&(v, t)| p.at(t) == v), "n={n} {p:?}");
                    }
                }
                assert!(crossing > 0);
            }
        }
        assert!(found > 0, "n={n}");
    }
}

#[test]
fn generalized_rectangles_agree_with_segments_on_open_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    let mut cardinal = 0;
    for _ in 0..5000 {
        if compared >= 50 {
            break;
        }
        let side = rng.gen_range(5..=10);
        // one agent heading east and south, the other south and east, so their areas overlap
        let (r1, r2) = (rng.gen_range(0..side / 2), rng.gen_range(side / 2..side));
        let (c1, c2) = (rng.gen_range(0..side / 2), rng.gen_range(side / 2..side));
        let ends = [((0, r1), (side - 1, r2)), ((c1, 0), (c2, side - 1))];
        let Ok(inst) = Instance::from_xy(GridMap::open(side, side), &ends) else { continue };
        let paths: Vec<Option<Arc<Path>>> = (0..2).map(|a| shortest(&inst, a, &[]).map(Arc::new)).collect();
        let plan: Vec<Path> = paths.iter().map(|p| (**p.as_ref().unwrap()).clone()).collect();
        let cache = NodeCache::default();
        let view = NodeView::new(&inst, &[], &paths, &cache);
        for c in detect_conflicts(&plan) {
            if !c.is_vertex() || view.cardinality(&c) == Cardinality::Cardinal {
                continue;
            }
            let seg = rectangle_reasoning(&c, &view, RectangleMode::Segments);
            let gen = rectangle_reasoning(&c, &view, RectangleMode::Generalized);
            if let (Some(a), Some(b)) = (seg, gen) {
                assert_eq!(a.cardinality, b.cardinality, "{c:?} on {side}x{side}");
                compared += 1;
                cardinal += (a.cardinality == Cardinality::Cardinal) as u32;
            }
        }
    }
    assert!(compared >= 50, "only {compared} comparable rectangles");
    assert!(cardinal > 0);
}
