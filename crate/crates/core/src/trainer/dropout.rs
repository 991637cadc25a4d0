use crate::error::Result;
use crate::graph::NormalizedAdjacency;
use crate::numerics::{CsrMatrix, Rng};

/// Symmetric edge dropout: each undirected edge survives with probability
/// `1 - rate` and survivors are rescaled by `1 / (1 - rate)`.
///
/// One draw per stored upper-triangular entry (diagonal included); the
/// mirror entry follows the same draw. `rate == 0` returns a copy without
/// touching the generator.
pub fn edge_dropout(
    adj: &NormalizedAdjacency,
    rate: f64,
    rng: &mut Rng,
) -> Result<NormalizedAdjacency> {
    assert!(
        (0.0..1.0).contains(&rate),
        "dropout rate must lie in [0, 1)"
    );
    if rate == 0.0 {
        return Ok(adj.clone());
    }
    let m = adj.matrix();
    let n = m.rows();
    let (row_ptr, col_idx) = (m.row_ptr(), m.col_idx());
    let mut keep = vec![false; m.nnz()];
    // next unvisited lower-triangular slot of each row
    let mut cursor: Vec<usize> = row_ptr[..n].to_vec();
    for r in 0..n {
        for k in row_ptr[r]..row_ptr[r + 1] {
            let c = col_idx[k];
            if c < r {
                continue;
            }
            let kept = rng.bernoulli(1.0 - rate);
            keep[k] = kept;
            if c > r {
                let mirror = cursor[c];
                debug_assert_eq!(
                    col_idx[mirror], r,
                    "adjacency is not structurally symmetric"
                );
                keep[mirror] = kept;
                cursor[c] += 1;
            }
        }
    }

    let scale = 1.0 / (1.0 - rate);
    let mut new_ptr = Vec::with_capacity(n + 1);
    let mut new_cols = Vec::new();
    let mut new_vals = Vec::new();
    new_ptr.push(0);
    for r in 0..n {
        for k in row_ptr[r]..row_ptr[r + 1] {
            if keep[k] {
                new_cols.push(col_idx[k]);
                new_vals.push(m.values()[k] * scale);
            }
        }
        new_ptr.push(new_cols.len());
    }
    let matrix = CsrMatrix::from_parts(n, n, new_ptr, new_cols, new_vals)?;
    NormalizedAdjacency::from_matrix(adj.num_users(), adj.num_items(), matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_adjacency, InteractionGraph};

    fn dense_graph(nu: usize, ni: usize) -> InteractionGraph {
        let train: Vec<Vec<u32>> = (0..nu).map(|_| (0..ni as u32).collect()).collect();
        InteractionGraph::from_splits(nu, ni, train, vec![vec![]; nu], vec![vec![]; nu]).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let adj = build_adjacency(&dense_graph(3, 4)).unwrap();
        let mut rng = Rng::seed_from_u64(0);
        let out = edge_dropout(&adj, 0.0, &mut rng).unwrap();
        assert_eq!(out.matrix(), adj.matrix());
    }

    #[test]
    fn keep_fraction_and_symmetry() {
        // 250 x 200 complete bipartite graph = 50k undirected edges, 100k entries
        let adj = build_adjacency(&dense_graph(250, 200)).unwrap();
        let mut rng = Rng::seed_from_u64(11);
        let out = edge_dropout(&adj, 0.4, &mut rng).unwrap();
        let frac = out.nnz() as f64 / adj.nnz() as f64;
        assert!((frac - 0.6).abs() < 0.01, "{frac}");
        assert!(out.matrix().is_symmetric());
        let w = adj.matrix().values()[0];
        assert!(out
            .matrix()
            .values()
            .iter()
            .all(|&v| (v - w / 0.6).abs() < 1e-15));
    }

    #[test]
    fn unbiased_on_average() {
        let adj = build_adjacency(&dense_graph(2, 3)).unwrap();
        let dense = adj.to_dense();
        let mut rng = Rng::seed_from_u64(2);
        let mut acc = crate::numerics::DenseMatrix::zeros(5, 5);
        let reps = 10_000;
        for _ in 0..reps {
            acc.add_scaled(1.0, &edge_dropout(&adj, 0.4, &mut rng).unwrap().to_dense())
                .unwrap();
        }
        acc.scale(1.0 / reps as f64);
        for r in 0..5 {
            for c in 0..5 {
                let want = dense.get(r, c);
                if want != 0.0 {
                    assert!((acc.get(r, c) / want - 1.0).abs() < 0.05, "({r},{c})");
                } else {
                    assert_eq!(acc.get(r, c), 0.0);
                }
            }
        }
    }
}
