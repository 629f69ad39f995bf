//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use kuradyn::graph::SkeletonGraph;

pub fn triangle() -> SkeletonGraph {
    SkeletonGraph::from_dense(3, vec![1.0; 9]).unwrap()
}

pub fn two_vertex() -> SkeletonGraph {
    SkeletonGraph::from_dense(2, vec![1.0; 4]).unwrap()
}

/// Path 0 – 1 – 2 with unit weights and unit self-loops.
pub fn p3_loops() -> SkeletonGraph {
    SkeletonGraph::from_dense(3, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap()
}

/// `½ Σ_{i,j} π(x_i, x_j)(1 − cos(θ_j − θ_i))`, written out directly.
pub fn energy(g: &SkeletonGraph, x: &[usize], theta: &[f64]) -> f64 {
    let mut u = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            u += g.weight(x[i], x[j]) * (1.0 - (theta[j] - theta[i]).cos());
        }
    }
    u / 2.0
}

/// Drift with unit gain, `Σ_j π(x_i, x_j) sin(θ_j − θ_i)`.
pub fn drift(g: &SkeletonGraph, x: &[usize], theta: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            (0..x.len())
                .map(|j| g.weight(x[i], x[j]) * (theta[j] - theta[i]).sin())
                .sum()
        })
        .collect()
}

/// Degree-proportional measure.
pub fn stationary(g: &SkeletonGraph) -> Vec<f64> {
    let n = g.vertex_count();
    let deg: Vec<f64> = (0..n)
        .map(|u| (0..n).map(|v| g.weight(u, v)).sum())
        .collect();
    let total: f64 = deg.iter().sum();
    deg.iter().map(|d| d / total).collect()
}

/// Union–find connectivity of the pairs in `edges` on `n` vertices.
pub fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

/// Every connected simple graph on `n` labelled vertices, as edge lists.
pub fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    (0u32..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect::<Vec<_>>()
        })
        .filter(|edges| connected(n, edges))
        .collect()
}

pub fn build(n: usize, edges: &[(usize, usize)], self_loops: Option<f64>) -> SkeletonGraph {
    let list: Vec<(usize, usize, f64)> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
    let g = SkeletonGraph::from_edges(n, &list).unwrap();
    match self_loops {
        Some(w) => g.with_self_loops(w).unwrap(),
        None => g,
    }
}

/// `‖θ − mean(θ)‖²` of a lift that is already unwrapped.
pub fn centered_norm_sq(theta: &[f64]) -> f64 {
    let mean = theta.iter().sum::<f64>() / theta.len() as f64;
    theta.iter().map(|t| (t - mean).powi(2)).sum()
}
