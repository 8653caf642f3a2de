//! Greedy matching against an exhaustive perfect-matching enumeration
//! oracle on small graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavegcn::matching::{edge_dissimilarity, greedy_match};
use wavegcn::{FeatureMatrix, Graph};

/// Enumerates every perfect matching (as edge subsets of the graph) and
/// returns the minimum total weight, if any matching exists.
fn min_perfect_matching_weight(g: &Graph, weights: &[f64]) -> Option<f64> {
    fn recurse(
        g: &Graph,
        weights: &[f64],
        matched: &mut Vec<bool>,
        acc: f64,
        best: &mut Option<f64>,
    ) {
        let Some(u) = matched.iter().position(|&m| !m) else {
            *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
            return;
        };
        matched[u] = true;
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let v = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if matched[v] {
                continue;
            }
            matched[v] = true;
            recurse(g, weights, matched, acc + weights[e], best);
            matched[v] = false;
        }
        matched[u] = false;
    }
    let mut best = None;
    let mut matched = vec![false; g.n()];
    recurse(g, weights, &mut matched, 0.0, &mut best);
    best
}

fn greedy_edge_weight(g: &Graph, weights: &[f64], seed: u64) -> Option<f64> {
    let pg = greedy_match(g, weights, seed).unwrap();
    if pg.edge_pairs() != g.n() / 2 || !g.n().is_multiple_of(2) {
        return None; // the edge phase did not produce a perfect matching
    }
    let mut total = 0.0;
    for &(i, j) in pg.pairs() {
        let e = g
            .edges()
            .iter()
            .position(|&(a, b)| (a, b) == (i, j))
            .expect("edge-phase pairs are graph edges");
        total += weights[e];
    }
    Some(total)
}

/// All labeled connected graphs on `n` nodes (small `n` only).
fn connected_graphs(n: usize) -> Vec<Graph> {
    let all_edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << all_edges.len()) {
        let edges: Vec<_> = all_edges
            .iter()
            .enumerate()
            .filter(|&(e, _)| mask & (1 << e) != 0)
            .map(|(_, &uv)| uv)
            .collect();
        if edges.len() < n - 1 {
            continue;
        }
        let g = Graph::new(n, edges).unwrap();
        if is_connected(&g) {
            out.push(g);
        }
    }
    out
}

fn is_connected(g: &Graph) -> bool {
    if g.n() == 0 {
        return true;
    }
    let mut seen = vec![false; g.n()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[test]
fn greedy_never_beats_optimal_on_all_small_connected_graphs() {
    for n in [4usize, 6] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for g in connected_graphs(n) {
            let weights: Vec<f64> = (0..g.edge_count())
                .map(|_| rng.random_range(0.1..10.0))
                .collect();
            let Some(greedy) = greedy_edge_weight(&g, &weights, 0) else {
                continue;
            };
            let optimal = min_perfect_matching_weight(&g, &weights)
                .expect("a completed greedy matching implies one exists");
            assert!(
                greedy >= optimal - 1e-12,
                "n={n}: greedy {greedy} below optimal {optimal}"
            );
        }
    }
}

#[test]
fn greedy_never_beats_optimal_on_random_eight_node_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut compared = 0;
    for seed in 0..200u64 {
        let g = wavegcn::synth::gen_er(8, 0.45, seed).unwrap();
        let weights: Vec<f64> = (0..g.edge_count())
            .map(|_| rng.random_range(0.1..10.0))
            .collect();
        let Some(greedy) = greedy_edge_weight(&g, &weights, seed) else {
            continue;
        };
        let optimal = min_perfect_matching_weight(&g, &weights).unwrap();
        assert!(greedy >= optimal - 1e-12);
        compared += 1;
    }
    assert!(compared > 50, "too few completed matchings to compare");
}

#[test]
fn greedy_is_exact_on_paths_when_it_completes() {
    // Even paths have exactly one perfect matching: the alternating edges.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2usize, 4, 6, 8, 10] {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = Graph::new(n, edges).unwrap();
        let mut completed = 0;
        for _ in 0..60 {
            let weights: Vec<f64> = (0..g.edge_count())
                .map(|_| rng.random_range(0.1..10.0))
                .collect();
            let Some(greedy) = greedy_edge_weight(&g, &weights, 0) else {
                continue;
            };
            let unique: f64 = (0..n - 1).step_by(2).map(|e| weights[e]).sum();
            assert!(
                (greedy - unique).abs() < 1e-12,
                "n={n}: greedy {greedy} differs from the unique matching {unique}"
            );
            completed += 1;
        }
        assert!(completed > 0, "n={n}: greedy never completed");
    }
}

#[test]
fn zero_weight_pairs_on_planted_two_cluster_graphs() {
    // Two cliques of even size joined by one edge, features constant per
    // clique: a zero-weight perfect matching exists inside the clusters and
    // greedy must find pairs of zero dissimilarity only.
    for (a, b) in [(2usize, 2usize), (2, 4), (4, 4), (4, 6)] {
        let n = a + b;
        let mut edges = Vec::new();
        for u in 0..a {
            for v in u + 1..a {
                edges.push((u, v));
            }
        }
        for u in a..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        edges.push((a - 1, a));
        let g = Graph::new(n, edges).unwrap();
        let mut data = vec![1.0; a];
        data.extend(vec![-3.0; b]);
        let f = FeatureMatrix::from_vec(n, 1, data).unwrap();
        let w = edge_dissimilarity(&g, &f).unwrap();
        // Oracle: the optimal perfect matching has zero weight.
        let optimal = min_perfect_matching_weight(&g, &w).unwrap();
        assert!(optimal.abs() < 1e-12);
        for seed in 0..5 {
            let pg = greedy_match(&g, &w, seed).unwrap();
            assert_eq!(pg.edge_pairs(), n / 2, "greedy left nodes unmatched");
            for &(i, j) in pg.pairs() {
                let mut d = 0.0;
                for c in 0..f.cols() {
                    d += (f.get(i, c) - f.get(j, c)).powi(2);
                }
                assert!(d.sqrt() < 1e-12, "pair ({i}, {j}) has nonzero weight");
            }
        }
    }
}
