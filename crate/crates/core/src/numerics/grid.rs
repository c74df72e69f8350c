use alloc::vec::Vec;

use crate::{Error, Result};

/// Tolerance on interpolation queries just outside `[t0, t1]`.
pub const SLACK: f64 = 1e-9;

/// Uniform grid `t0 + k·(t1 − t0)/steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("time grid needs at least one step"));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidArgument("time grid needs finite t0 < t1"));
        }
        Ok(TimeGrid { t0, t1, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + (self.t1 - self.t0) * (k as f64) / (self.steps as f64)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |k| self.node(k))
    }

    /// Bracketing node index and fractional position, or the exact node.
    fn locate(&self, t: f64) -> Result<Location> {
        if !(t >= self.t0 - SLACK && t <= self.t1 + SLACK) {
            return Err(Error::OutOfRange { t, t0: self.t0, t1: self.t1 });
        }
        let s = (t - self.t0) / (self.t1 - self.t0) * self.steps as f64;
        let s = s.clamp(0.0, self.steps as f64);
        let nearest = libm::round(s);
        if (s - nearest).abs() < 1e-9 {
            return Ok(Location::Node(nearest as usize));
        }
        let k = (libm::floor(s) as usize).min(self.steps - 1);
        Ok(Location::Between(k, s - k as f64))
    }
}

enum Location {
    Node(usize),
    Between(usize, f64),
}

/// Values of an `dim`-vector at every node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridTrajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl GridTrajectory {
    /// `values` holds the node vectors back to back.
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim,
                found: values.len(),
                what: "trajectory values",
            });
        }
        Ok(GridTrajectory { grid, dim, values })
    }

    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for t in grid.nodes() {
            let v = f(t);
            assert_eq!(v.len(), dim, "from_fn dimension");
            values.extend_from_slice(&v);
        }
        GridTrajectory { grid, dim, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.node(0)
    }

    pub fn last(&self) -> &[f64] {
        self.node(self.grid.steps)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Component `i` at every node.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.iter().map(|v| v[i]).collect()
    }

    /// Node-wise map into a new trajectory on the same grid.
    pub fn map(&self, dim: usize, mut f: impl FnMut(usize, f64, &[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(self.len() * dim);
        for k in 0..self.len() {
            let v = f(k, self.grid.node(k), self.node(k));
            assert_eq!(v.len(), dim, "map dimension");
            values.extend_from_slice(&v);
        }
        GridTrajectory { grid: self.grid, dim, values }
    }

    pub fn is_finite(&self) -> bool {
        super::all_finite(&self.values)
    }

    /// Piecewise-linear interpolation; exact at nodes, clamped within [`SLACK`].
    pub fn eval_at(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        match self.grid.locate(t)? {
            Location::Node(k) => out.copy_from_slice(self.node(k)),
            Location::Between(k, theta) => {
                let (a, b) = (self.node(k), self.node(k + 1));
                for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                    *o = (1.0 - theta) * x + theta * y;
                }
            }
        }
        Ok(())
    }

    /// Cubic Hermite interpolation using node derivatives `slopes`; exact at
    /// nodes and fourth-order accurate in between.
    pub fn eval_hermite_into(&self, slopes: &GridTrajectory, t: f64, out: &mut [f64]) -> Result<()> {
        match self.grid.locate(t)? {
            Location::Node(k) => out.copy_from_slice(self.node(k)),
            Location::Between(k, s) => {
                let h = self.grid.step();
                let (x0, x1) = (self.node(k), self.node(k + 1));
                let (d0, d1) = (slopes.node(k), slopes.node(k + 1));
                let s2 = s * s;
                let s3 = s2 * s;
                let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
                let h10 = s3 - 2.0 * s2 + s;
                let h01 = -2.0 * s3 + 3.0 * s2;
                let h11 = s3 - s2;
                for i in 0..self.dim {
                    out[i] = h00 * x0[i] + h10 * h * d0[i] + h01 * x1[i] + h11 * h * d1[i];
                }
            }
        }
        Ok(())
    }

    /// Largest node-wise Euclidean distance to another trajectory.
    pub fn max_distance(&self, other: &GridTrajectory) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| super::norm(&super::sub(a, b)))
            .fold(0.0, f64::max)
    }
}

/// Weight of node `k` in the composite trapezoidal rule on `grid`.
pub fn trapezoid_weight(grid: &TimeGrid, k: usize) -> f64 {
    let h = grid.step();
    if k == 0 || k == grid.steps() {
        0.5 * h
    } else {
        h
    }
}

/// Composite trapezoidal rule for a scalar trajectory (component 0).
pub fn trapezoid(integrand: &GridTrajectory) -> f64 {
    let grid = integrand.grid();
    let m = grid.steps();
    let ends = 0.5 * (integrand.node(0)[0] + integrand.node(m)[0]);
    let interior: f64 = (1..m).map(|k| integrand.node(k)[0]).sum();
    (grid.t1() - grid.t0()) * (interior + ends) / m as f64
}
