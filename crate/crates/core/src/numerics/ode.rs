use alloc::vec;
use alloc::vec::Vec;

use super::{all_finite, GridTrajectory, TimeGrid};
use crate::{Error, Result};

/// Traversal direction of a fixed-grid solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From `t0` to `t1`; the start value sits at node 0.
    Forward,
    /// From `t1` to `t0` with negated step; the start value sits at the last node.
    Backward,
}

/// Classical RK4 on `grid`.
///
/// `rhs(t, x, dx)` writes the derivative into `dx`. The result is always
/// indexed `t0 → t1`, whatever the direction.
pub fn integrate<F>(rhs: F, start: &[f64], grid: &TimeGrid, direction: Direction) -> Result<GridTrajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    integrate_projected(rhs, |_| {}, start, grid, direction)
}

/// [`integrate`] with `project` applied to the state after every step.
pub fn integrate_projected<F, P>(
    mut rhs: F,
    mut project: P,
    start: &[f64],
    grid: &TimeGrid,
    direction: Direction,
) -> Result<GridTrajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: FnMut(&mut [f64]),
{
    let n = start.len();
    let m = grid.steps();
    if !all_finite(start) {
        return Err(Error::NonFinite { t: start_time(grid, direction), context: "initial value" });
    }
    let mut values = vec![0.0; (m + 1) * n];
    let mut x = start.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];

    let store = |values: &mut Vec<f64>, k: usize, x: &[f64]| {
        values[k * n..(k + 1) * n].copy_from_slice(x);
    };
    let first = match direction {
        Direction::Forward => 0,
        Direction::Backward => m,
    };
    store(&mut values, first, &x);

    for i in 0..m {
        let (from, to) = match direction {
            Direction::Forward => (i, i + 1),
            Direction::Backward => (m - i, m - i - 1),
        };
        let t = grid.node(from);
        let t_end = grid.node(to);
        let h = t_end - t;
        let t_mid = t + 0.5 * h;

        rhs(t, &x, &mut k1)?;
        for j in 0..n {
            stage[j] = x[j] + 0.5 * h * k1[j];
        }
        rhs(t_mid, &stage, &mut k2)?;
        for j in 0..n {
            stage[j] = x[j] + 0.5 * h * k2[j];
        }
        rhs(t_mid, &stage, &mut k3)?;
        for j in 0..n {
            stage[j] = x[j] + h * k3[j];
        }
        rhs(t_end, &stage, &mut k4)?;
        for j in 0..n {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        project(&mut x);
        if !all_finite(&x) {
            return Err(Error::NonFinite { t: t_end, context: "integrate" });
        }
        store(&mut values, to, &x);
    }
    GridTrajectory::new(*grid, n, values)
}

fn start_time(grid: &TimeGrid, direction: Direction) -> f64 {
    match direction {
        Direction::Forward => grid.t0(),
        Direction::Backward => grid.t1(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn harmonic(_t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        dx[0] = x[1];
        dx[1] = -x[0];
        Ok(())
    }

    #[test]
    fn exponential_growth() {
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let tr = integrate(
            |_, x, dx| {
                dx[0] = x[0];
                Ok(())
            },
            &[1.0],
            &grid,
            Direction::Forward,
        )
        .unwrap();
        assert!((tr.last()[0] - core::f64::consts::E).abs() < 1e-7);
    }

    #[test]
    fn backward_conserves_energy() {
        let grid = TimeGrid::new(0.0, 2.0 * PI, 2000).unwrap();
        let tr = integrate(harmonic, &[1.0, 0.0], &grid, Direction::Backward).unwrap();
        assert_eq!(tr.last(), &[1.0, 0.0]);
        for v in tr.iter() {
            assert!((super::super::norm(v) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_rhs_is_constant() {
        let grid = TimeGrid::new(0.0, 5.0, 17).unwrap();
        let tr = integrate(
            |_, _, dx| {
                dx.iter_mut().for_each(|d| *d = 0.0);
                Ok(())
            },
            &[0.3, -2.5, 7.0],
            &grid,
            Direction::Forward,
        )
        .unwrap();
        for v in tr.iter() {
            assert_eq!(v, &[0.3, -2.5, 7.0]);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |m: usize| {
            let grid = TimeGrid::new(0.0, 10.0, m).unwrap();
            let tr = integrate(harmonic, &[1.0, 0.0], &grid, Direction::Forward).unwrap();
            let x = tr.last();
            libm::hypot(x[0] - libm::cos(10.0), x[1] + libm::sin(10.0))
        };
        let ratio = err(100) / err(200);
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn backward_then_forward_round_trip() {
        let grid = TimeGrid::new(0.0, 10.0, 1000).unwrap();
        let back = integrate(harmonic, &[0.4, -1.1], &grid, Direction::Backward).unwrap();
        let fwd = integrate(harmonic, back.first(), &grid, Direction::Forward).unwrap();
        let end = fwd.last();
        assert!((end[0] - 0.4).abs() < 1e-6 && (end[1] + 1.1).abs() < 1e-6);
    }

    #[test]
    fn blow_up_is_reported() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let res = integrate(
            |_, x, dx| {
                dx[0] = x[0] * x[0] * 1e300;
                Ok(())
            },
            &[1e10],
            &grid,
            Direction::Forward,
        );
        assert!(matches!(res, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn projection_applies_each_step() {
        let grid = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let tr = integrate_projected(
            |_, _, dx| {
                dx[0] = 1.0;
                Ok(())
            },
            |x| x[0] = x[0].min(0.5),
            &[0.0],
            &grid,
            Direction::Forward,
        )
        .unwrap();
        assert_eq!(tr.last(), &[0.5]);
    }
}
