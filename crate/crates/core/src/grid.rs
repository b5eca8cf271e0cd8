//! Rectangular domains, tensor grids and fields sampled on them.

use rand::Rng;

use crate::error::{Error, Result};

/// Axis-aligned box `[a_1, b_1] x ... x [a_n, b_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("domain needs at least one axis".into()));
        }
        for (axis, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis}: lower bound {a} must be below upper bound {b}"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.bounds[axis].0
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.bounds[axis].1
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.bounds[axis].1 - self.bounds[axis].0
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(&v, &(a, b))| v >= a && v <= b)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(a, b)| a + (b - a) * rng.random::<f64>())
            .collect()
    }
}

/// Tensor grid with `N` nodes per axis; node `k` on axis `i` sits at `a_i + k * h_i`
/// with `h_i = (b_i - a_i) / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    domain: Domain,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(domain: Domain, points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 points per axis, got {points_per_axis}"
            )));
        }
        Ok(Self { domain, points_per_axis })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.points_per_axis as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.h(i)).collect()
    }

    /// Volume of one grid box, `h_1 * ... * h_n`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.h(i)).product()
    }

    pub fn num_nodes(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    /// Number of nodes with no index on the boundary, `(N-2)^n`.
    pub fn num_interior(&self) -> usize {
        (self.points_per_axis - 2).pow(self.dim() as u32)
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        self.domain.lower(axis) + index as f64 * self.h(axis)
    }

    /// Row-major flat index (first axis varies slowest).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.points_per_axis + k)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let n = self.dim();
        let mut multi = vec![0; n];
        for slot in multi.iter_mut().rev() {
            *slot = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
        multi
    }

    pub fn node(&self, multi: &[usize]) -> Vec<f64> {
        multi.iter().enumerate().map(|(axis, &k)| self.coordinate(axis, k)).collect()
    }

    pub fn node_flat(&self, flat: usize) -> Vec<f64> {
        self.node(&self.multi_index(flat))
    }

    /// Stride of `axis` in the flat ordering.
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim() - 1 - axis) as u32)
    }

    pub fn is_boundary(&self, multi: &[usize]) -> bool {
        multi.iter().any(|&k| k == 0 || k + 1 == self.points_per_axis)
    }

    /// Per-axis index of the nearest node, `floor((x - a)/h + 1/2)`, or `None`
    /// if that index falls off the grid.
    pub fn nearest_index(&self, x: &[f64]) -> Option<Vec<usize>> {
        let mut multi = Vec::with_capacity(x.len());
        for (axis, &v) in x.iter().enumerate() {
            multi.push(self.axis_bin(axis, v)?);
        }
        Some(multi)
    }

    #[inline]
    pub(crate) fn axis_bin(&self, axis: usize, v: f64) -> Option<usize> {
        let t = ((v - self.domain.lower(axis)) / self.h(axis) + 0.5).floor();
        if t >= 0.0 && t < self.points_per_axis as f64 {
            Some(t as usize)
        } else {
            None
        }
    }

    /// Flat indices of all interior nodes, in row-major order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&k| !self.is_boundary(&self.multi_index(k)))
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&k| self.is_boundary(&self.multi_index(k)))
            .collect()
    }

    pub fn is_uniform(&self) -> bool {
        let h0 = self.h(0);
        (1..self.dim()).all(|i| (self.h(i) - h0).abs() <= 1e-12 * h0)
    }
}

/// Nonnegative values on every node of a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::DimensionMismatch { expected: grid.num_nodes(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.num_nodes();
        Self { grid, values: vec![0.0; n] }
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: GridSpec, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        let mut x = vec![0.0; grid.dim()];
        for k in 0..grid.num_nodes() {
            for (axis, &i) in grid.multi_index(k).iter().enumerate() {
                x[axis] = grid.coordinate(axis, i);
            }
            values.push(f(&x));
        }
        Self { grid, values }
    }

    /// `h_1 ... h_n * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_rejects_inverted_bounds() {
        assert!(Domain::new(vec![(1.0, 0.0)]).is_err());
        assert!(Domain::new(vec![(0.0, 0.0)]).is_err());
        assert!(Domain::new(vec![]).is_err());
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = GridSpec::new(Domain::cube(3, 0.0, 1.0).unwrap(), 5).unwrap();
        for k in 0..g.num_nodes() {
            assert_eq!(g.flat_index(&g.multi_index(k)), k);
        }
        assert_eq!(g.stride(0), 25);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn nodes_sit_at_lower_plus_index_times_h() {
        let g = GridSpec::new(Domain::new(vec![(0.0, 1.0)]).unwrap(), 10).unwrap();
        assert!((g.h(0) - 0.1).abs() < 1e-15);
        assert!((g.coordinate(0, 3) - 0.3).abs() < 1e-15);
        assert_eq!(g.nearest_index(&[0.14]), Some(vec![1]));
        assert_eq!(g.nearest_index(&[0.96]), None);
    }

    #[test]
    fn interior_count() {
        let g = GridSpec::new(Domain::cube(2, -2.0, 2.0).unwrap(), 10).unwrap();
        assert_eq!(g.interior_nodes().len(), 64);
        assert_eq!(g.boundary_nodes().len(), 36);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(GridSpec::new(Domain::cube(1, 0.0, 1.0).unwrap(), 2).is_err());
    }
}
