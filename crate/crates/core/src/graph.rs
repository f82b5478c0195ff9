//! Undirected predictor graphs and the neighborhoods they induce.
//!
//! Every coefficient group used by the regularizers is a closed neighborhood
//! `N_i = ne(i) ∪ {i}` of this graph. Nodes are 0-indexed.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Undirected simple graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    p: usize,
    neighbors: Vec<Vec<usize>>,
}

/// Closed neighborhood of a node: the node itself plus its neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub node: usize,
    /// Sorted member indices, always containing `node`.
    pub members: Vec<usize>,
}

impl Neighborhood {
    /// `d_i = |N_i|`, counting the node itself.
    pub fn degree(&self) -> usize {
        self.members.len()
    }
}

impl UndirectedGraph {
    /// Graph on `p` nodes with no edges.
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            neighbors: vec![Vec::new(); p],
        }
    }

    /// Builds a graph from an edge list; either endpoint order is accepted and
    /// duplicate edges collapse.
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); p];
        for (i, j) in edges {
            if i >= p || j >= p {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) out of range for p = {p}"
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop on node {i}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { p, neighbors })
    }

    /// Path `0 - 1 - ... - (p-1)`.
    pub fn path(p: usize) -> Self {
        Self::from_edges(p, (1..p).map(|i| (i - 1, i))).expect("path edges are valid")
    }

    pub fn complete(p: usize) -> Self {
        let edges = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j)));
        Self::from_edges(p, edges).expect("complete edges are valid")
    }

    /// Number of nodes.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Open neighbor list `ne(i)`, sorted.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.p && self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` pairs with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn neighborhood(&self, i: usize) -> Result<Neighborhood> {
        if i >= self.p {
            return Err(Error::invalid(format!(
                "node {i} out of range for p = {}",
                self.p
            )));
        }
        Ok(self.closed_neighborhood(i))
    }

    fn closed_neighborhood(&self, i: usize) -> Neighborhood {
        let ne = &self.neighbors[i];
        let mut members = Vec::with_capacity(ne.len() + 1);
        let at = ne.partition_point(|&j| j < i);
        members.extend_from_slice(&ne[..at]);
        members.push(i);
        members.extend_from_slice(&ne[at..]);
        Neighborhood { node: i, members }
    }

    /// All closed neighborhoods, indexed by node.
    pub fn neighborhoods(&self) -> Vec<Neighborhood> {
        (0..self.p).map(|i| self.closed_neighborhood(i)).collect()
    }

    /// `|N_i|` for every node.
    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(|ne| ne.len() + 1).collect()
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p {
            return Err(Error::invalid("permutation length does not match p"));
        }
        Self::from_edges(self.p, self.edges().map(|(i, j)| (perm[i], perm[j])))
    }

    /// Support pattern of a precision matrix: ones on the diagonal and on edges.
    pub fn precision_pattern(&self) -> Array2<f64> {
        let mut m = Array2::eye(self.p);
        for (i, j) in self.edges() {
            m[[i, j]] = 1.0;
            m[[j, i]] = 1.0;
        }
        m
    }
}

/// Reads the conditional-independence graph off a precision matrix:
/// edge `{i, j}` iff `|ω_ij| > tol`.
pub fn graph_from_precision(omega: &Array2<f64>, tol: f64) -> Result<UndirectedGraph> {
    let (rows, cols) = omega.dim();
    if rows != cols {
        return Err(Error::invalid(format!(
            "precision matrix must be square, got {rows}x{cols}"
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in i + 1..cols {
            let (a, b) = (omega[[i, j]], omega[[j, i]]);
            if (a - b).abs() > tol {
                return Err(Error::invalid(format!(
                    "precision matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
            if a.abs() > tol {
                edges.push((i, j));
            }
        }
    }
    UndirectedGraph::from_edges(rows, edges)
}
