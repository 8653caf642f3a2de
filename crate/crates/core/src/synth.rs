//! Synthetic data generators: planted-partition graphs for the toy
//! classification benchmark, ER graphs, and diffusion-smoothed features for
//! the compression experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::gcn_propagation;
use crate::{Error, FeatureMatrix, Graph, Result};

/// Stochastic block model with planted community features. Nodes are split
/// into `communities` contiguous blocks; intra-block edges appear with
/// probability `p_in`, inter-block with `p_out`. Features are the community
/// mean (a scaled one-hot direction) plus Gaussian noise. Labels are the
/// community ids. The output graph may be disconnected.
pub fn gen_planted(
    n: usize,
    communities: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Graph, FeatureMatrix, Vec<i64>)> {
    if communities == 0 || n < communities {
        return Err(Error::InvalidArgument(format!(
            "need at least one node per community ({n} nodes, {communities} communities)"
        )));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) {
        return Err(Error::InvalidArgument(
            "edge probabilities must lie in [0, 1]".into(),
        ));
    }
    if p_in <= p_out {
        return Err(Error::InvalidArgument(format!(
            "p_in = {p_in} must exceed p_out = {p_out}"
        )));
    }
    let block = n.div_ceil(communities);
    let labels: Vec<i64> = (0..n).map(|i| (i / block) as i64).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random_range(0.0..1.0) < p {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::new(n, edges)?;

    let c = communities.max(2);
    let noise = 0.3;
    let mut data = vec![0.0; n * c];
    for i in 0..n {
        let k = labels[i] as usize;
        for ch in 0..c {
            let mean = if ch == k { 1.0 } else { 0.0 };
            let eps: f64 = StandardNormal.sample(&mut rng);
            data[i * c + ch] = mean + noise * eps;
        }
    }
    let f = FeatureMatrix::from_vec(n, c, data)?;
    Ok((g, f, labels))
}

/// Erdos-Renyi graph with edge probability `p`; every node of positive
/// index is chained to its predecessor when it would otherwise be isolated,
/// keeping matchings non-degenerate.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} out of [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut degree = vec![0usize; n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_range(0.0..1.0) < p {
                edges.push((u, v));
                degree[u] += 1;
                degree[v] += 1;
            }
        }
    }
    for u in 1..n {
        if degree[u] == 0 {
            edges.push((u - 1, u));
            degree[u - 1] += 1;
            degree[u] += 1;
        }
    }
    Graph::new(n, edges)
}

/// Equal communities plus a few tiny triangle satellites, each tethered to
/// the main graph by a single edge. Diffusion mixes the big communities
/// quickly while the satellites keep larger values, giving smoothed fields
/// the high dynamic range of real feature maps.
pub fn gen_satellite_communities(
    n: usize,
    communities: usize,
    p_in: f64,
    satellites: usize,
    seed: u64,
) -> Result<Graph> {
    if n < 3 * satellites + communities {
        return Err(Error::InvalidArgument(format!(
            "{n} nodes cannot hold {satellites} satellites plus {communities} communities"
        )));
    }
    if !(0.0..=1.0).contains(&p_in) {
        return Err(Error::InvalidArgument(format!(
            "p_in = {p_in} out of [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let main_n = n - 3 * satellites;
    let block = main_n.div_ceil(communities);
    let mut edges = Vec::new();
    for u in 0..main_n {
        for v in u + 1..main_n {
            let p = if u / block == v / block { p_in } else { 0.002 };
            if rng.random_range(0.0..1.0) < p {
                edges.push((u, v));
            }
        }
    }
    for t in 0..satellites {
        let base = main_n + 3 * t;
        edges.push((base, base + 1));
        edges.push((base, base + 2));
        edges.push((base + 1, base + 2));
        let anchor = rng.random_range(0..main_n);
        edges.push((anchor, base));
    }
    Graph::new(n, edges)
}

/// Random points in the unit cube.
pub fn gen_points(n: usize, dims: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * dims).map(|_| rng.random_range(0.0..1.0)).collect();
    FeatureMatrix::from_vec(n, dims, data).expect("finite by construction")
}

/// Unit Gaussian noise matrix.
pub fn gaussian_features(n: usize, c: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * c)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    FeatureMatrix::from_vec(n, c, data).expect("finite by construction")
}

/// Diffusion-smoothed features: `steps` applications of the GCN propagation
/// operator to unit Gaussian noise. Stands in for learnt feature maps.
pub fn smooth_features(g: &Graph, c: usize, steps: usize, seed: u64) -> Result<FeatureMatrix> {
    let noise = gaussian_features(g.n(), c, seed);
    gcn_propagation(g).apply_n(&noise, steps)
}
