//! Network-based observer
//! `ẋ̂ = f(x̂) + κ (D_x h(t, x̂))⁻¹ Cᵀ (y − Cx̂)`, `x̂(0) = x₀`,
//! where `D_x h` stands in for the Hessian of the value function.

use alloc::vec;
use alloc::vec::Vec;

use crate::netgain::ValueGradient;
use crate::numerics::{axpy, integrate, sub, GridTrajectory, Lu, Mat};
use crate::systems::{ObservationRecord, Scenario};
use crate::{Direction, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverOptions {
    /// Multiply the injection by `α` (`κ = α`), otherwise `κ = 1`.
    pub alpha_in_gain: bool,
    /// Tikhonov shift used only when the plain solve is singular; `0`
    /// surfaces the singularity as an error.
    pub ridge: f64,
    /// Use `(J + Jᵀ)/2` in place of the input Jacobian `J`.
    pub symmetrize: bool,
}

impl Default for ObserverOptions {
    fn default() -> Self {
        ObserverOptions { alpha_in_gain: true, ridge: 1e-8, symmetrize: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverResult {
    pub xhat: GridTrajectory,
    /// `(D_x h)⁻¹ Cᵀ`, row-major `n × r` per node, without the `κ` factor.
    pub gain: GridTrajectory,
    /// `|det D_x h|` per node.
    pub conditioning: GridTrajectory,
}

/// `(D_x h(t, x))⁻¹ Cᵀ` together with `|det D_x h(t, x)|`.
pub fn gain_matrix<G: ValueGradient>(
    surrogate: &G,
    t: f64,
    x: &[f64],
    c: &Mat,
    options: &ObserverOptions,
) -> Result<(Mat, f64)> {
    let mut jac = surrogate.input_jacobian(t, x)?;
    if options.symmetrize {
        jac.symmetrize();
    }
    // a singular Jacobian reports |det| = 0
    let (lu, det) = match Lu::factor(&jac, 0.0) {
        Ok(lu) => {
            let det = lu.determinant().abs();
            (lu, det)
        }
        Err(Error::Singular { .. }) if options.ridge > 0.0 => (Lu::factor(&jac, options.ridge)?, 0.0),
        Err(e) => return Err(e),
    };
    let (n, r) = (c.cols(), c.rows());
    let mut gain = Mat::zeros(n, r);
    for j in 0..r {
        let col = lu.solve(c.row(j));
        for i in 0..n {
            gain[(i, j)] = col[i];
        }
    }
    Ok((gain, det))
}

/// Runs the observer forward on the observation grid from `x̂(0) = x₀`.
pub fn network_observer<G: ValueGradient>(
    surrogate: &G,
    obs: &ObservationRecord,
    scenario: &Scenario,
    options: &ObserverOptions,
) -> Result<ObserverResult> {
    let model = &scenario.model;
    let c = model.c();
    let kappa = if options.alpha_in_gain { scenario.alpha } else { 1.0 };
    let mut y = vec![0.0; model.r()];
    let xhat = integrate(
        |t, x, dx| {
            model.f_into(x, dx);
            obs.y.eval_into(t, &mut y)?;
            let innovation = sub(&y, &c.mul_vec(x));
            let (gain, _) = gain_matrix(surrogate, t, x, c, options)?;
            axpy(kappa, &gain.mul_vec(&innovation), dx);
            Ok(())
        },
        &scenario.x0_prior,
        obs.grid(),
        Direction::Forward,
    )?;

    let grid = *obs.grid();
    let (n, r) = (model.n(), model.r());
    let mut gains = Vec::with_capacity(grid.len() * n * r);
    let mut dets = Vec::with_capacity(grid.len());
    for (k, x) in xhat.iter().enumerate() {
        let (gain, det) = gain_matrix(surrogate, grid.node(k), x, c, options)?;
        gains.extend_from_slice(gain.as_slice());
        dets.push(det);
    }
    Ok(ObserverResult {
        gain: GridTrajectory::new(grid, n * r, gains)?,
        conditioning: GridTrajectory::new(grid, 1, dets)?,
        xhat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgain::{NetGain, NetworkShape, ShiftFunction, Theta};

    struct Constant(Mat);

    impl ValueGradient for Constant {
        fn dim(&self) -> usize {
            self.0.rows()
        }
        fn eval(&self, _t: f64, x: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.mul_vec(x))
        }
        fn input_jacobian(&self, _t: f64, _x: &[f64]) -> Result<Mat> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn identity_jacobian_gives_ct() {
        let c = Mat::from_rows(&[&[1.0, 0.0]]);
        let (gain, det) = gain_matrix(&Constant(Mat::identity(2)), 0.0, &[0.0, 0.0], &c, &ObserverOptions::default()).unwrap();
        assert_eq!(gain, c.transpose());
        assert_eq!(det, 1.0);
    }

    #[test]
    fn degenerate_network_uses_ridge() {
        let theta = Theta::zeros(&NetworkShape::square(2, 2, false).unwrap());
        let shift = ShiftFunction::Zero;
        let net = NetGain::new(&theta, &shift);
        let c = Mat::from_rows(&[&[1.0, 0.0]]);
        let strict = ObserverOptions { ridge: 0.0, ..Default::default() };
        assert!(matches!(gain_matrix(&net, 0.0, &[0.1, 0.2], &c, &strict), Err(Error::Singular { .. })));
        let loose = ObserverOptions { ridge: 1e-6, ..Default::default() };
        let (gain, det) = gain_matrix(&net, 0.0, &[0.1, 0.2], &c, &loose).unwrap();
        assert!(gain.is_finite());
        assert!((gain[(0, 0)] - 1e6).abs() < 1e-3);
        assert_eq!(det, 0.0);
    }

    #[test]
    fn symmetrize_option() {
        let jac = Mat::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]);
        let c = Mat::identity(2);
        let opts = ObserverOptions { symmetrize: true, ..Default::default() };
        let (gain, _) = gain_matrix(&Constant(jac), 0.0, &[0.0, 0.0], &c, &opts).unwrap();
        let sym = Mat::from_rows(&[&[2.0, 0.5], &[0.5, 2.0]]);
        assert!(sym.matmul(&gain).sub(&Mat::identity(2)).norm() < 1e-14);
    }
}
