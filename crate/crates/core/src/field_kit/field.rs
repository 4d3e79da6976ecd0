use std::ops::{Index, IndexMut};

use super::function::AnalyticFn;
use super::grid::Grid;
use super::jet::Point;

/// Node values on a grid, stored in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: *grid,
            data: vec![0.0; grid.node_count()],
        }
    }

    pub fn from_vec(grid: &Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.node_count(), "field length must match node count");
        Field { grid: *grid, data }
    }

    /// Samples `f(t, x)` at every node.
    pub fn sample(grid: &Grid, f: &dyn AnalyticFn, t: f64) -> Self {
        let data = (0..grid.node_count())
            .map(|k| f.value(&Point::new(t, &grid.coords(k)[..grid.n])))
            .collect();
        Field { grid: *grid, data }
    }

    /// Samples `f(t, x)` at every node, with the boundary ring set to zero.
    pub fn sample_interior(grid: &Grid, f: &dyn AnalyticFn, t: f64) -> Self {
        let mut field = Self::sample(grid, f, t);
        field.zero_boundary();
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zero_boundary(&mut self) {
        for k in 0..self.data.len() {
            if self.grid.is_boundary(k) {
                self.data[k] = 0.0;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Field {
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(x, y)| a * x + b * y)
            .collect();
        Field {
            grid: self.grid,
            data,
        }
    }

    /// Discrete L² norm `(Σ dxⁿ v²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.data.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.data[k]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.data[k]
    }
}
