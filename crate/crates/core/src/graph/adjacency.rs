use super::InteractionGraph;
use crate::error::{Error, Result};
use crate::numerics::{spmm, CsrMatrix, DenseMatrix};

/// Symmetric bipartite adjacency over users then items, with each training pair
/// `(u, v)` weighted `1 / sqrt(|N_u| |N_v|)` in both directions.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    num_users: usize,
    num_items: usize,
    matrix: CsrMatrix,
}

impl NormalizedAdjacency {
    pub(crate) fn from_matrix(
        num_users: usize,
        num_items: usize,
        matrix: CsrMatrix,
    ) -> Result<Self> {
        let n = num_users + num_items;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::Shape(format!(
                "adjacency must be {n}x{n}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(NormalizedAdjacency {
            num_users,
            num_items,
            matrix,
        })
    }

    /// Wraps an arbitrary square matrix; meant for tests that need a
    /// non-bipartite operator (e.g. identity).
    pub fn from_csr_unchecked(
        num_users: usize,
        num_items: usize,
        matrix: CsrMatrix,
    ) -> Result<Self> {
        Self::from_matrix(num_users, num_items, matrix)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.num_users + self.num_items
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        spmm(&self.matrix, x)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }
}

/// Builds the normalized adjacency from the training interactions only.
pub fn build_adjacency(graph: &InteractionGraph) -> Result<NormalizedAdjacency> {
    if graph.num_train() == 0 {
        return Err(Error::EmptyDataset("training set is empty".into()));
    }
    let nu = graph.num_users();
    let n = graph.num_nodes();
    let inv_sqrt: Vec<f64> = graph
        .node_degrees()
        .into_iter()
        .map(|d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();

    let mut item_users: Vec<Vec<usize>> = vec![Vec::new(); graph.num_items()];
    for (u, items) in graph.train().iter().enumerate() {
        for &i in items {
            item_users[i as usize].push(u);
        }
    }

    let nnz = 2 * graph.num_train();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for (u, items) in graph.train().iter().enumerate() {
        for &i in items {
            let v = nu + i as usize;
            col_idx.push(v);
            values.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        row_ptr.push(col_idx.len());
    }
    for (i, users) in item_users.iter().enumerate() {
        let v = nu + i;
        for &u in users {
            col_idx.push(u);
            values.push(inv_sqrt[v] * inv_sqrt[u]);
        }
        row_ptr.push(col_idx.len());
    }
    let matrix = CsrMatrix::from_parts(n, n, row_ptr, col_idx, values)?;
    NormalizedAdjacency::from_matrix(nu, graph.num_items(), matrix)
}
