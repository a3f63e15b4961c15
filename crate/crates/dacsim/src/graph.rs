//! Undirected communication graphs and their Laplacian spectra.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{linalg, real, tol, Scalar};

/// An undirected simple graph on nodes `1..=n`.
///
/// Edges are stored as ordered pairs `(i, j)` with `i < j`; self-loops and
/// duplicate edges are rejected at construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for idx in [a, b] {
                if idx == 0 || idx > n {
                    return Err(Error::NodeOutOfRange { index: idx, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let key = (a.min(b), a.max(b));
            if !set.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
        }
        Ok(Self { n, edges: set })
    }

    /// The bundled nine-node benchmark topology: a six-cycle
    /// `1-2-3-4-5-7-1` joined through node 3 to a triangle `6-8-9`.
    pub fn nine_node_benchmark() -> Self {
        Self::new(
            9,
            &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 7), (7, 1), (3, 6), (6, 8), (8, 9), (9, 6)],
        )
        .expect("benchmark topology is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Neighbors of node `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    /// A copy of the graph with edge `(i, j)` removed.
    pub fn remove_edge(&self, i: usize, j: usize) -> Result<Self> {
        let key = (i.min(j), i.max(j));
        let mut edges = self.edges.clone();
        if !edges.remove(&key) {
            return Err(Error::EdgeNotPresent(key.0, key.1));
        }
        Ok(Self { n: self.n, edges })
    }

    /// Connected components, each sorted ascending, ordered by smallest
    /// member. The output is deterministic for a given graph.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n + 1];
        let mut out = Vec::new();
        for start in 1..=self.n {
            if seen[start] {
                continue;
            }
            let mut queue = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(v) = queue.pop() {
                comp.push(v);
                for w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Graph Laplacian `L = D - A` with its eigenvalue list.
    ///
    /// The matrix is assembled in integer arithmetic before conversion, so
    /// `L * 1 = 0` holds exactly in floating point.
    pub fn laplacian<T: Scalar>(&self) -> Result<Laplacian<T>> {
        let n = self.n;
        let mut degree = vec![0i64; n + 1];
        let mut adj = vec![false; n * n];
        for &(a, b) in &self.edges {
            degree[a] += 1;
            degree[b] += 1;
            adj[(a - 1) * n + (b - 1)] = true;
            adj[(b - 1) * n + (a - 1)] = true;
        }
        let matrix = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                real::<T>(degree[r + 1] as f64)
            } else if adj[r * n + c] {
                -T::one()
            } else {
                T::zero()
            }
        });
        let eigenvalues = linalg::symmetric_eigenvalues(&matrix)?;
        Ok(Laplacian { matrix, eigenvalues })
    }
}

/// A Laplacian matrix together with its eigenvalues sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian<T: Scalar> {
    pub matrix: DMatrix<T>,
    pub eigenvalues: Vec<T>,
}

impl<T: Scalar> Laplacian<T> {
    /// Algebraic connectivity `lambda_2`; zero for a single node.
    pub fn fiedler_value(&self) -> T {
        self.eigenvalues.get(1).copied().unwrap_or_else(T::zero)
    }

    /// Whether the spectrum certifies connectivity: exactly one eigenvalue
    /// at zero (within [`tol::HURWITZ_MARGIN`]).
    pub fn spectrum_connected(&self) -> bool {
        let margin = real::<T>(tol::HURWITZ_MARGIN);
        self.eigenvalues.iter().filter(|&&l| l.abs() <= margin).count() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn construction_validates_edges() {
        assert!(matches!(
            Graph::new(3, &[(1, 4)]).unwrap_err(),
            Error::NodeOutOfRange { index: 4, n: 3 }
        ));
        assert_eq!(Graph::new(3, &[(2, 2)]).unwrap_err(), Error::SelfLoop(2));
        assert_eq!(
            Graph::new(3, &[(1, 2), (2, 1)]).unwrap_err(),
            Error::DuplicateEdge(1, 2)
        );
        assert!(matches!(
            Graph::new(2, &[(0, 1)]).unwrap_err(),
            Error::NodeOutOfRange { index: 0, n: 2 }
        ));
    }

    #[test]
    fn path_graph_spectrum() {
        // Path on 3 nodes: eigenvalues {0, 1, 3}.
        let g = Graph::new(3, &[(1, 2), (2, 3)]).unwrap();
        let lap = g.laplacian::<f64>().unwrap();
        assert_relative_eq!(lap.eigenvalues[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(lap.eigenvalues[1], 1.0, max_relative = 1e-9);
        assert_relative_eq!(lap.eigenvalues[2], 3.0, max_relative = 1e-9);
        assert!(lap.spectrum_connected());
    }

    #[test]
    fn single_node_graph() {
        let g = Graph::new(1, &[]).unwrap();
        let lap = g.laplacian::<f64>().unwrap();
        assert_eq!(lap.eigenvalues, vec![0.0]);
        assert!(g.is_connected());
        assert_eq!(g.components(), vec![vec![1]]);
    }

    #[test]
    fn complete_graph_spectrum() {
        // K2: eigenvalues {0, 2}.
        let g = Graph::new(2, &[(1, 2)]).unwrap();
        let lap = g.laplacian::<f64>().unwrap();
        assert_relative_eq!(lap.eigenvalues[1], 2.0, max_relative = 1e-9);
        // Triangle: {0, 3, 3}.
        let g = Graph::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let lap = g.laplacian::<f64>().unwrap();
        assert_relative_eq!(lap.eigenvalues[1], 3.0, max_relative = 1e-9);
        assert_relative_eq!(lap.eigenvalues[2], 3.0, max_relative = 1e-9);
    }

    #[test]
    fn laplacian_rows_sum_to_zero_exactly() {
        let g = Graph::nine_node_benchmark();
        let lap = g.laplacian::<f64>().unwrap();
        for r in 0..9 {
            let sum: f64 = lap.matrix.row(r).iter().sum();
            assert_eq!(sum, 0.0);
        }
    }

    #[test]
    fn benchmark_topology_splits_as_expected() {
        let g = Graph::nine_node_benchmark();
        assert_eq!(g.n(), 9);
        assert_eq!(g.edge_count(), 10);
        assert!(g.is_connected());
        assert_eq!(g.neighbors(3), vec![2, 4, 6]);

        let split = g.remove_edge(3, 6).unwrap();
        let comps = split.components();
        assert_eq!(comps, vec![vec![1, 2, 3, 4, 5, 7], vec![6, 8, 9]]);
        assert!(!split.is_connected());
        assert!(!split.laplacian::<f64>().unwrap().spectrum_connected());
    }

    #[test]
    fn remove_edge_errors_when_absent() {
        let g = Graph::new(3, &[(1, 2)]).unwrap();
        assert_eq!(g.remove_edge(2, 3).unwrap_err(), Error::EdgeNotPresent(2, 3));
        // Removal is copy-on-write: the original keeps its edge.
        let h = g.remove_edge(1, 2).unwrap();
        assert!(g.has_edge(1, 2));
        assert!(!h.has_edge(1, 2));
    }
}
