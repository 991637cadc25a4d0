use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-10;
pub const PAGERANK_MAX_ITER: usize = 10_000;

/// Simple undirected graph as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    /// Builds from an edge list; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Shape(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(UndirectedGraph { adj })
    }

    /// Wraps symmetric adjacency lists (as produced by the interaction graph).
    pub fn from_neighbors(adj: Vec<Vec<usize>>) -> Result<Self> {
        let edges: Vec<(usize, usize)> = adj
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        let g = Self::from_edges(adj.len(), &edges)?;
        let mut sorted = adj;
        for list in &mut sorted {
            list.sort_unstable();
            list.dedup();
        }
        if g.adj != sorted {
            return Err(Error::Shape("neighbor lists are not symmetric".into()));
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// BFS hop distances from `source`; `usize::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_nodes()];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Power iteration with uniform teleportation; mass of isolated nodes is
/// spread uniformly. Stops when the L1 change drops below `tol`.
pub fn pagerank(g: &UndirectedGraph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    let n = g.num_nodes();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| x[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        let next: Vec<f64> = (0..n)
            .map(|v| {
                base + damping
                    * g.neighbors(v)
                        .iter()
                        .map(|&u| x[u] / g.degree(u) as f64)
                        .sum::<f64>()
            })
            .collect();
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < tol {
            return Ok(x);
        }
    }
    Err(Error::Analysis(format!(
        "PageRank did not converge in {PAGERANK_MAX_ITER} iterations"
    )))
}

/// Sources are processed in fixed chunks whose partial sums are combined in
/// order, so the result does not depend on the thread count.
const SOURCE_CHUNK: usize = 64;

fn sum_over_sources(n: usize, per_source: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            for &s in chunk {
                per_source(s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Brandes' accumulation on unweighted shortest paths, normalized by
/// `2 / ((n - 1)(n - 2))`.
pub fn betweenness(g: &UndirectedGraph) -> Vec<f64> {
    let n = g.num_nodes();
    if n <= 2 {
        return vec![0.0; n];
    }
    let raw = sum_over_sources(n, |s, acc| {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                acc[w] += delta[w];
            }
        }
    });
    // every unordered pair was counted from both ends
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    raw.into_iter().map(|b| b * scale).collect()
}

/// `(n_v - 1) / sum of distances`, scaled by `(n_v - 1) / (n - 1)` where
/// `n_v` is the size of the node's component. Isolated nodes score 0.
pub fn closeness(g: &UndirectedGraph) -> Vec<f64> {
    let n = g.num_nodes();
    (0..n)
        .into_par_iter()
        .map(|v| {
            let dist = g.bfs_distances(v);
            let reached: Vec<usize> = dist.into_iter().filter(|&d| d != usize::MAX).collect();
            let total: usize = reached.iter().sum();
            if total == 0 || n < 2 {
                return 0.0;
            }
            let nv = (reached.len() - 1) as f64;
            nv / total as f64 * nv / (n - 1) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> UndirectedGraph {
        UndirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn path_examples() {
        let g = path3();
        assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0]);
        let c = closeness(&g);
        assert_eq!(c[1], 1.0);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge() {
        let g = UndirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(betweenness(&g), vec![0.0, 0.0]);
        let pr = pagerank(&g, PAGERANK_DAMPING, PAGERANK_TOL).unwrap();
        assert!((pr[0] - 0.5).abs() < 1e-12 && (pr[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isolated_nodes() {
        let g = UndirectedGraph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let c = closeness(&g);
        assert_eq!(c[3], 0.0);
        assert!((c[1] - 1.0 * 2.0 / 3.0).abs() < 1e-15);
        let pr = pagerank(&g, PAGERANK_DAMPING, PAGERANK_TOL).unwrap();
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn star_hub_dominates() {
        let g = UndirectedGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let pr = pagerank(&g, PAGERANK_DAMPING, PAGERANK_TOL).unwrap();
        assert!(pr[1..].iter().all(|&p| p < pr[0]));
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(betweenness(&g)[0], 1.0);
    }

    #[test]
    fn neighbor_lists_must_be_symmetric() {
        assert!(UndirectedGraph::from_neighbors(vec![vec![1], vec![0]]).is_ok());
        assert!(UndirectedGraph::from_neighbors(vec![vec![1], vec![]]).is_err());
    }
}
