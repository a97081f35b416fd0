//! Vertex-cover lower bounds over conflict graphs.

use rustc_hash::FxHashMap;

/// Largest component handled by the exact edge-weighted search.
const EXACT_WEIGHTED_LIMIT: usize = 10;

fn components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] || adj[s].is_empty() {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < comp.len() {
            for &w in &adj[comp[i]] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Exact minimum vertex cover size of an undirected graph on vertices `0..n`.
pub fn min_vertex_cover(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut total = 0;
    for comp in components(n, edges) {
        let idx: FxHashMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let k = comp.len();
        let mut adj = vec![Vec::new(); k];
        for &(u, v) in edges {
            if let (Some(&a), Some(&b)) = (idx.get(&u), idx.get(&v)) {
                if a != b {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let mut best = k.saturating_sub(1).max(1);
        let mut removed = vec![false; k];
        mvc_branch(&adj, &mut removed, 0, &mut best);
        total += best;
    }
    total
}

fn mvc_branch(adj: &[Vec<usize>], removed: &mut Vec<bool>, taken: usize, best: &mut usize) {
    if taken >= *best {
        return;
    }
    // highest remaining degree vertex
    let mut pick = None;
    let mut deg_max = 0;
    let mut edges_left = 0;
    for v in 0..adj.len() {
        if removed[v] {
            continue;
        }
        let d = adj[v].iter().filter(|&&w| !removed[w]).count();
        edges_left += d;
        if d > deg_max {
            deg_max = d;
            pick = Some(v);
        }
    }
    let Some(v) = pick else {
        *best = taken;
        return;
    };
    edges_left /= 2;
    // each chosen vertex covers at most deg_max edges
    if taken + edges_left.div_ceil(deg_max) >= *best {
        return;
    }
    removed[v] = true;
    mvc_branch(adj, removed, taken + 1, best);
    removed[v] = false;

    let nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !removed[w]).collect();
    if deg_max > 1 || nbrs.is_empty() {
        for &w in &nbrs {
            removed[w] = true;
        }
        removed[v] = true;
        mvc_branch(adj, removed, taken + nbrs.len(), best);
        removed[v] = false;
        for &w in &nbrs {
            removed[w] = false;
        }
    }
}

/// Minimum total of nonnegative integer vertex values such that every edge `(u, v, w)`
/// has `x_u + x_v >= w`. Components above a size limit fall back to a weaker but still
/// admissible bound.
pub fn min_weighted_vertex_cover(n: usize, edges: &[(usize, usize, u32)]) -> u64 {
    let plain: Vec<(usize, usize)> = edges.iter().filter(|e| e.2 > 0).map(|e| (e.0, e.1)).collect();
    let mut total = 0u64;
    for comp in components(n, &plain) {
        let idx: FxHashMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let k = comp.len();
        let mut w = vec![vec![0u32; k]; k];
        for &(u, v, c) in edges {
            if let (Some(&a), Some(&b)) = (idx.get(&u), idx.get(&v)) {
                w[a][b] = w[a][b].max(c);
                w[b][a] = w[b][a].max(c);
            }
        }
        if k > EXACT_WEIGHTED_LIMIT {
            let local: Vec<(usize, usize)> =
                (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).filter(|&(a, b)| w[a][b] > 0).collect();
            let heaviest = w.iter().flatten().copied().max().unwrap_or(0) as u64;
            total += (min_vertex_cover(k, &local) as u64).max(heaviest);
            continue;
        }
        let upper: u64 = (0..k).map(|a| *w[a].iter().max().unwrap() as u64).sum();
        let mut best = upper;
        let mut x = vec![0u32; k];
        wvc_assign(&w, &mut x, 0, 0, &mut best);
        total += best;
    }
    total
}

fn wvc_assign(w: &[Vec<u32>], x: &mut Vec<u32>, i: usize, sum: u64, best: &mut u64) {
    if sum >= *best {
        return;
    }
    if i == w.len() {
        *best = sum;
        return;
    }
    let lb = (0..i).map(|j| w[i][j].saturating_sub(x[j])).max().unwrap_or(0);
    let ub = *w[i].iter().max().unwrap();
    for val in lb..=ub.max(lb) {
        x[i] = val;
        wvc_assign(w, x, i + 1, sum + val as u64, best);
    }
    x[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_mvc(n: usize, edges: &[(usize, usize)]) -> usize {
        (0u32..1 << n)
            .filter(|s| edges.iter().all(|&(u, v)| s >> u & 1 == 1 || s >> v & 1 == 1))
            .map(|s| s.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn small_graphs() {
        assert_eq!(min_vertex_cover(3, &[]), 0);
        assert_eq!(min_vertex_cover(2, &[(0, 1)]), 1);
        assert_eq!(min_vertex_cover(3, &[(0, 1), (1, 2), (0, 2)]), 2);
    }

    #[test]
    fn weighted_disjoint_edges_sum() {
        assert_eq!(min_weighted_vertex_cover(4, &[(0, 1, 1), (2, 3, 2)]), 3);
        assert_eq!(min_weighted_vertex_cover(3, &[(0, 1, 2), (1, 2, 2)]), 2);
        assert_eq!(min_weighted_vertex_cover(3, &[(0, 1, 0)]), 0);
    }

    proptest! {
        #[test]
        fn mvc_matches_brute_force(n in 1usize..9, raw in proptest::collection::vec((0usize..9, 0usize..9), 0..16)) {
            let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
            prop_assert_eq!(min_vertex_cover(n, &edges), brute_mvc(n, &edges));
        }

        #[test]
        fn weighted_matches_brute_force(raw in proptest::collection::vec((0usize..5, 0usize..5, 0u32..4), 0..8)) {
            let n = 5;
            let edges: Vec<(usize, usize, u32)> = raw.into_iter().filter(|e| e.0 != e.1).collect();
            let mut best = u64::MAX;
            for code in 0..4u32.pow(n as u32) {
                let x: Vec<u32> = (0..n).map(|i| code / 4u32.pow(i as u32) % 4).collect();
                if edges.iter().all(|&(u, v, w)| x[u] + x[v] >= w) {
                    best = best.min(x.iter().map(|&v| v as u64).sum());
                }
            }
            prop_assert_eq!(min_weighted_vertex_cover(n, &edges), best);
        }
    }
}
