//! Uniform tensor grids on truncated boxes and nodal functions on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid in one or two dimensions. Nodes include both endpoints:
/// x_i = lo + i * dx with dx = (hi - lo) / (nx - 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nx: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nx: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > 2 {
            return Err(Error::Domain("grid dimension must be 1 or 2".into()));
        }
        if hi.len() != dim || nx.len() != dim {
            return Err(Error::Dimension("grid axis lists disagree".into()));
        }
        for d in 0..dim {
            if !(lo[d] < hi[d]) {
                return Err(Error::Domain("grid needs lo < hi".into()));
            }
            if nx[d] < 8 {
                return Err(Error::Domain("grid needs at least 8 nodes per axis".into()));
            }
        }
        Ok(Self { lo, hi, nx })
    }

    /// Symmetric 1-d grid [-radius, radius] with node spacing <= dx and a
    /// node exactly at the origin.
    pub fn symmetric_1d(radius: f64, dx: f64) -> Result<Self> {
        if !(radius > 0.0 && dx > 0.0) {
            return Err(Error::Domain("radius and dx must be positive".into()));
        }
        let half = (radius / dx).ceil().max(4.0) as usize;
        let r = half as f64 * dx;
        Grid::new(vec![-r], vec![r], vec![2 * half + 1])
    }

    /// Symmetric 2-d grid with common spacing and a node at the origin.
    pub fn symmetric_2d(radius: [f64; 2], dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::Domain("dx must be positive".into()));
        }
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut nx = Vec::new();
        for r in radius {
            if !(r > 0.0) {
                return Err(Error::Domain("radius must be positive".into()));
            }
            let half = (r / dx).ceil().max(4.0) as usize;
            lo.push(-(half as f64) * dx);
            hi.push(half as f64 * dx);
            nx.push(2 * half + 1);
        }
        Grid::new(lo, hi, nx)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn nx(&self, axis: usize) -> usize {
        self.nx[axis]
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn dx(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.nx[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + self.dx(axis) * i as f64
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.nx[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nx.iter().product()
    }

    /// Index of the node at the origin; errors unless 0 is a node on every
    /// axis.
    pub fn origin_index(&self) -> Result<usize> {
        let mut flat = 0;
        for d in 0..self.dim() {
            let pos = -self.lo[d] / self.dx(d);
            let i = pos.round();
            if (pos - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.nx[d] {
                return Err(Error::Domain("origin is not a grid node".into()));
            }
            flat = flat * self.nx[d] + i as usize;
        }
        Ok(flat)
    }
}

/// Real nodal values on a grid, row-major in 2-d (index = i * ny + j).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Dimension(format!(
                "grid has {} nodes, got {} values",
                grid.node_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn sample_1d(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Dimension("expected a 1-d grid".into()));
        }
        let values = (0..grid.nx(0)).map(|i| f(grid.coord(0, i))).collect();
        Self::new(grid, values)
    }

    pub fn sample_2d(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Dimension("expected a 2-d grid".into()));
        }
        let (nx, ny) = (grid.nx(0), grid.nx(1));
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let x = grid.coord(0, i);
            for j in 0..ny {
                values.push(f(x, grid.coord(1, j)));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Multilinear interpolation at a point inside the box.
    pub fn evaluate_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.grid.dim() {
            return Err(Error::Dimension("point dimension mismatch".into()));
        }
        let mut idx = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for d in 0..self.grid.dim() {
            let (lo, hi) = (self.grid.lo(d), self.grid.hi(d));
            if x[d] < lo - 1e-12 || x[d] > hi + 1e-12 {
                return Err(Error::Domain(format!(
                    "point {} outside [{lo}, {hi}] on axis {d}",
                    x[d]
                )));
            }
            let pos = ((x[d] - lo) / self.grid.dx(d)).clamp(0.0, (self.grid.nx(d) - 1) as f64);
            let i = (pos.floor() as usize).min(self.grid.nx(d) - 2);
            idx[d] = i;
            frac[d] = pos - i as f64;
        }
        match self.grid.dim() {
            1 => {
                let (i, t) = (idx[0], frac[0]);
                Ok(self.values[i] * (1.0 - t) + self.values[i + 1] * t)
            }
            2 => {
                let ny = self.grid.nx(1);
                let (i, j) = (idx[0], idx[1]);
                let (s, t) = (frac[0], frac[1]);
                let v00 = self.values[i * ny + j];
                let v01 = self.values[i * ny + j + 1];
                let v10 = self.values[(i + 1) * ny + j];
                let v11 = self.values[(i + 1) * ny + j + 1];
                Ok(v00 * (1.0 - s) * (1.0 - t)
                    + v01 * (1.0 - s) * t
                    + v10 * s * (1.0 - t)
                    + v11 * s * t)
            }
            _ => unreachable!(),
        }
    }

    /// CSV serialization: coordinate columns then the value column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.grid.dim() {
            1 => {
                out.push_str("x,value\n");
                for (i, v) in self.values.iter().enumerate() {
                    out.push_str(&format!("{},{}\n", self.grid.coord(0, i), v));
                }
            }
            _ => {
                out.push_str("x,y,value\n");
                let ny = self.grid.nx(1);
                for (k, v) in self.values.iter().enumerate() {
                    let (i, j) = (k / ny, k % ny);
                    out.push_str(&format!(
                        "{},{},{}\n",
                        self.grid.coord(0, i),
                        self.grid.coord(1, j),
                        v
                    ));
                }
            }
        }
        out
    }

    /// JSON metadata describing the grid.
    pub fn metadata_json(&self) -> String {
        serde_json::to_string(&self.grid).expect("grid serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_grids_center_the_origin() {
        let g = Grid::symmetric_1d(4.0, 0.1).unwrap();
        let i0 = g.origin_index().unwrap();
        assert_eq!(g.coord(0, i0), 0.0);
        let g2 = Grid::symmetric_2d([4.0, 5.7], 0.1).unwrap();
        assert!(g2.origin_index().is_ok());
        assert_relative_eq!(g2.dx(0), g2.dx(1), epsilon = 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![0.0], vec![0.0], vec![16]).is_err());
        assert!(Grid::new(vec![0.0], vec![1.0], vec![4]).is_err());
        assert!(Grid::new(vec![0.0, 0.0, 0.0], vec![1.0; 3], vec![16; 3]).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let g = Grid::new(vec![0.0], vec![1.0], vec![11]).unwrap();
        let f = GridFunction::sample_1d(g, |x| 2.0 * x + 1.0).unwrap();
        // node point is exact
        assert_eq!(f.evaluate_at(&[0.3]).unwrap(), f.values()[3]);
        // midpoint of linear data is exact
        assert_relative_eq!(f.evaluate_at(&[0.35]).unwrap(), 1.7, epsilon = 1e-15);
        // out of box
        assert!(f.evaluate_at(&[1.5]).is_err());
    }

    #[test]
    fn interpolation_error_decays_quadratically() {
        // quadratic data: interpolation error at off-node points ~ dx^2
        let mut errs = Vec::new();
        for nx in [17usize, 33, 65] {
            let g = Grid::new(vec![-1.0], vec![1.0], vec![nx]).unwrap();
            let f = GridFunction::sample_1d(g, |x| x * x).unwrap();
            let p = 0.123456;
            errs.push((f.evaluate_at(&[p]).unwrap() - p * p).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}, errors {errs:?}");
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 2.0).abs() < 0.2);
    }

    #[test]
    fn bilinear_2d_matches_exact_bilinear_data() {
        let g = Grid::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![9, 17]).unwrap();
        let f = GridFunction::sample_2d(g, |x, y| 1.0 + 2.0 * x + 3.0 * y + 4.0 * x * y).unwrap();
        let v = f.evaluate_at(&[0.37, 1.21]).unwrap();
        assert_relative_eq!(v, 1.0 + 2.0 * 0.37 + 3.0 * 1.21 + 4.0 * 0.37 * 1.21, epsilon = 1e-12);
    }

    #[test]
    fn csv_has_expected_columns() {
        let g = Grid::new(vec![0.0], vec![1.0], vec![8]).unwrap();
        let f = GridFunction::sample_1d(g, |x| x).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("x,value\n"));
        assert_eq!(csv.lines().count(), 9);
        assert!(f.metadata_json().contains("\"nx\":[8]"));
    }
}
