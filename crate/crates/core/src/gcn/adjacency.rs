use ndarray::{Array2, ArrayView2};

use crate::mesh::FaceGraph;
use crate::{Error, Result};

/// `D̃^-1/2 (A + I) D̃^-1/2` in compressed sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    /// Builds from sorted, symmetric neighbour lists without self entries.
    pub fn from_neighbors(neighbors: &[Vec<usize>]) -> Self {
        let n = neighbors.len();
        let deg: Vec<f64> = neighbors.iter().map(|nb| (nb.len() + 1) as f64).collect();
        let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, nb) in neighbors.iter().enumerate() {
            let mut row: Vec<usize> = nb.iter().copied().chain(std::iter::once(i)).collect();
            row.sort_unstable();
            for j in row {
                cols.push(j);
                vals.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            row_ptr.push(cols.len());
        }
        NormalizedAdjacency { row_ptr, cols, vals }
    }

    pub fn from_graph(graph: &FaceGraph) -> Self {
        Self::from_neighbors(&graph.neighbors)
    }

    /// From a dense boolean matrix; it must be symmetric with a zero diagonal.
    pub fn from_dense(a: &[Vec<bool>]) -> Result<Self> {
        let n = a.len();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            if a[i].len() != n {
                return Err(Error::ShapeMismatch(format!("adjacency row {i} has {} entries, expected {n}", a[i].len())));
            }
            if a[i][i] {
                return Err(Error::ShapeMismatch(format!("adjacency has a self loop at {i}")));
            }
            for j in 0..n {
                if a[i][j] != a[j][i] {
                    return Err(Error::ShapeMismatch(format!("adjacency not symmetric at ({i}, {j})")));
                }
                if a[i][j] {
                    neighbors[i].push(j);
                }
            }
        }
        Ok(Self::from_neighbors(&neighbors))
    }

    pub fn num_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes()).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut m = Array2::zeros((n, n));
        for (i, j, v) in self.triplets() {
            m[[i, j]] = v;
        }
        m
    }

    /// `Â · F`.
    pub fn apply(&self, f: ArrayView2<f64>) -> Result<Array2<f64>> {
        let n = self.num_nodes();
        if f.nrows() != n {
            return Err(Error::ShapeMismatch(format!("feature matrix has {} rows for {n} nodes", f.nrows())));
        }
        let d = f.ncols();
        let f = f.as_standard_layout();
        let src = f.as_slice().expect("standard layout");
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            let dst = &mut out[i * d..(i + 1) * d];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.vals[k];
                let row = &src[self.cols[k] * d..(self.cols[k] + 1) * d];
                for (o, &x) in dst.iter_mut().zip(row) {
                    *o += v * x;
                }
            }
        }
        Ok(Array2::from_shape_vec((n, d), out).expect("shape matches buffer"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_face_graph, shapes::tetrahedron};

    #[test]
    fn hand_computed_small_cases() {
        let one = NormalizedAdjacency::from_dense(&[vec![false]]).unwrap();
        assert_eq!(one.to_dense(), ndarray::arr2(&[[1.0]]));
        let two = NormalizedAdjacency::from_dense(&[vec![false, true], vec![true, false]]).unwrap();
        assert!(two.to_dense().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert_eq!(two.nnz(), 4);
        let tet = NormalizedAdjacency::from_graph(&build_face_graph(&tetrahedron()));
        assert!(tet.to_dense().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(NormalizedAdjacency::from_dense(&[vec![false, true], vec![false, false]]).is_err());
        assert!(NormalizedAdjacency::from_dense(&[vec![true]]).is_err());
    }
}
