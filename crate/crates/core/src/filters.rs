//! Exact linear theory and the extended Kalman baseline.
//!
//! For `f(x) = Ax` the value function is quadratic,
//! `V(t, ξ) = ½(ξ − x̂)ᵀ Σ⁻¹ (ξ − x̂) + α/2 ∫₀ᵗ ‖y − Cx̂‖²`, with `Σ` from the
//! differential Riccati equation and `x̂` the Kalman-Bucy estimate. Both are
//! integrated jointly as one state of dimension `n + n²`.

use alloc::vec;
use alloc::vec::Vec;

use crate::netgain::ValueGradient;
use crate::numerics::{
    axpy, dot, integrate, integrate_projected, norm_sq, sub, Direction, GridTrajectory, Mat,
};
use crate::systems::{ObservationRecord, Scenario, SystemModel};
use crate::{Error, Result};

/// Estimate and Riccati trajectories of a Kalman-type filter.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanResult {
    pub xhat: GridTrajectory,
    /// `Σ`, row-major `n × n` per node.
    pub sigma: GridTrajectory,
    /// `α Σ Cᵀ`, row-major `n × r` per node.
    pub gain: GridTrajectory,
    /// `‖y − Cx̂‖²` per node.
    pub output_misfit: GridTrajectory,
    /// Running trapezoid of `α/2 ‖y − Cx̂‖²` from `t0`.
    pub misfit_integral: GridTrajectory,
    pub alpha: f64,
}

impl KalmanResult {
    pub fn n(&self) -> usize {
        self.xhat.dim()
    }

    pub fn sigma_at(&self, t: f64) -> Result<Mat> {
        let n = self.n();
        Mat::new(n, n, self.sigma.eval_at(t)?)
    }

    pub fn sigma_node(&self, k: usize) -> Mat {
        let n = self.n();
        Mat::new(n, n, self.sigma.node(k).to_vec()).expect("stored n×n")
    }

    /// `Σ(t)⁻¹`, the Hessian of `V(t, ·)`.
    pub fn sigma_inv_at(&self, t: f64) -> Result<Mat> {
        self.sigma_at(t)?.inverse()
    }
}

/// Kalman-Bucy filter for a linear model.
pub fn kalman_bucy(model: &SystemModel, obs: &ObservationRecord, scenario: &Scenario) -> Result<KalmanResult> {
    let a = model.linear_drift().ok_or(Error::NotLinear)?.clone();
    riccati_filter(model, obs, scenario, |_| a.clone())
}

/// Extended Kalman filter: the Riccati equation runs along `Df(x̂(t))`.
pub fn extended_kalman(model: &SystemModel, obs: &ObservationRecord, scenario: &Scenario) -> Result<KalmanResult> {
    riccati_filter(model, obs, scenario, |x| model.jacobian(x))
}

fn riccati_filter<D>(model: &SystemModel, obs: &ObservationRecord, scenario: &Scenario, linearize: D) -> Result<KalmanResult>
where
    D: Fn(&[f64]) -> Mat,
{
    scenario.validate()?;
    let grid = scenario.grid()?;
    if obs.grid() != &grid {
        return Err(Error::InvalidArgument("observation grid differs from scenario grid"));
    }
    let (n, r) = (model.n(), model.r());
    let alpha = scenario.alpha;
    let c = model.c();
    let ct = c.transpose();
    let ctc = ct.matmul(c);
    let ggt = model.ggt();

    let mut start = scenario.x0_prior.clone();
    start.extend_from_slice(scenario.q0.inverse()?.as_slice());

    let mut y = vec![0.0; r];
    let traj = integrate_projected(
        |t, state, dstate| {
            let (xhat, sig) = state.split_at(n);
            let sigma = Mat::new(n, n, sig.to_vec())?;
            obs.y.eval_into(t, &mut y)?;
            let innovation = sub(&y, &c.mul_vec(xhat));
            let (dx, dsig) = dstate.split_at_mut(n);

            model.f_into(xhat, dx);
            let correction = sigma.mul_vec(&ct.mul_vec(&innovation));
            axpy(alpha, &correction, dx);

            let d = linearize(xhat);
            let ds = d
                .matmul(&sigma)
                .add(&sigma.matmul(&d.transpose()))
                .add(&ggt)
                .sub(&sigma.matmul(&ctc).matmul(&sigma).scale(alpha));
            dsig.copy_from_slice(ds.as_slice());
            Ok(())
        },
        |state| {
            let sig = &mut state[n..];
            for i in 0..n {
                for j in (i + 1)..n {
                    let avg = 0.5 * (sig[i * n + j] + sig[j * n + i]);
                    sig[i * n + j] = avg;
                    sig[j * n + i] = avg;
                }
            }
        },
        &start,
        &grid,
        Direction::Forward,
    )?;

    let xhat = traj.map(n, |_, _, s| s[..n].to_vec());
    let sigma = traj.map(n * n, |_, _, s| s[n..].to_vec());
    let gain = sigma.map(n * r, |_, _, s| {
        Mat::new(n, n, s.to_vec()).expect("n×n").matmul(&ct).scale(alpha).into_vec()
    });
    let output_misfit = xhat.map(1, |k, _, x| vec![norm_sq(&sub(obs.y.node(k), &c.mul_vec(x)))]);

    let h = grid.step();
    let mut acc = 0.0;
    let mut cumulative = Vec::with_capacity(grid.len());
    cumulative.push(0.0);
    for k in 1..grid.len() {
        acc += 0.25 * alpha * h * (output_misfit.node(k - 1)[0] + output_misfit.node(k)[0]);
        cumulative.push(acc);
    }
    let misfit_integral = GridTrajectory::new(grid, 1, cumulative)?;

    Ok(KalmanResult { xhat, sigma, gain, output_misfit, misfit_integral, alpha })
}

/// `V(t, ξ)` with its gradient and Hessian in the linear case.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearValue {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Mat,
}

pub fn value_linear(kr: &KalmanResult, t: f64, xi: &[f64]) -> Result<LinearValue> {
    let hess = kr.sigma_inv_at(t)?;
    let dev = sub(xi, &kr.xhat.eval_at(t)?);
    let grad = hess.mul_vec(&dev);
    let value = 0.5 * dot(&dev, &grad) + kr.misfit_integral.eval_at(t)?[0];
    Ok(LinearValue { value, grad, hess })
}

/// Mean of `V(t, ξ_j)` over the terminal states.
pub fn ensemble_optimal_cost(kr: &KalmanResult, terminals: &[Vec<f64>], t: f64) -> Result<f64> {
    if terminals.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble"));
    }
    let mut total = 0.0;
    for xi in terminals {
        total += value_linear(kr, t, xi)?.value;
    }
    Ok(total / terminals.len() as f64)
}

/// `∇_ξ V(t, x) = Σ(t)⁻¹ (x − x̂(t))` from a Kalman-Bucy run.
#[derive(Debug, Clone, Copy)]
pub struct LinearOracle<'a> {
    pub kr: &'a KalmanResult,
}

impl<'a> LinearOracle<'a> {
    pub fn new(kr: &'a KalmanResult) -> Self {
        LinearOracle { kr }
    }
}

impl ValueGradient for LinearOracle<'_> {
    fn dim(&self) -> usize {
        self.kr.n()
    }

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.kr.sigma_inv_at(t)?.mul_vec(&sub(x, &self.kr.xhat.eval_at(t)?)))
    }

    fn input_jacobian(&self, t: f64, _x: &[f64]) -> Result<Mat> {
        self.kr.sigma_inv_at(t)
    }
}

/// Optimal trajectory ending in `ξ` and its disturbance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub x_opt: GridTrajectory,
    /// `Gᵀ Σ⁻¹ (x_opt − x̂)`
    pub v_opt: GridTrajectory,
}

/// Solves `ẋ = f(x) + G Gᵀ Σ⁻¹(t)(x − x̂(t))` backward from `x(T) = ξ`.
pub fn optimal_closed_loop(kr: &KalmanResult, model: &SystemModel, xi: &[f64]) -> Result<ClosedLoop> {
    if !model.is_linear() {
        return Err(Error::NotLinear);
    }
    let oracle = LinearOracle::new(kr);
    let ggt = model.ggt();
    let grid = *kr.xhat.grid();
    let x_opt = integrate(
        |t, x, dx| {
            model.f_into(x, dx);
            axpy(1.0, &ggt.mul_vec(&oracle.eval(t, x)?), dx);
            Ok(())
        },
        xi,
        &grid,
        Direction::Backward,
    )?;
    let gt = model.g().transpose();
    let mut err = None;
    let v_opt = x_opt.map(model.m(), |k, _, x| {
        let dev = sub(x, kr.xhat.node(k));
        match kr.sigma_node(k).inverse() {
            Ok(inv) => gt.mul_vec(&inv.mul_vec(&dev)),
            Err(e) => {
                err = Some(e);
                vec![0.0; model.m()]
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(ClosedLoop { x_opt, v_opt }),
    }
}
