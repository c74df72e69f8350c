//! Learning the network parameters.
//!
//! For an ensemble of terminal states `ξ_j` the closed-loop state
//! `ẋ = f(x) + G Gᵀ h_θ(t, x)` is solved backward from `x(T) = ξ_j`; the
//! reduced cost averages the energy
//! `½‖x(0) − x₀‖²_{Q₀} + ½∫(‖Gᵀh_θ‖² + α‖y − Cx‖²)` over the ensemble.
//!
//! The continuous adjoint
//! `−ṗ = Dfᵀp + D_x hᵀ G Gᵀ(p + h) − αCᵀ(y − Cx)`, `p(0) = −Q₀(x(0) − x₀)`,
//! is available through [`adjoint_solve`]. The training gradient is its
//! discrete counterpart: the exact derivative of the discretized cost,
//! obtained by reversing the RK4 steps of the backward state solve. Descent
//! uses Barzilai-Borwein steps.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::filters::{ensemble_optimal_cost, kalman_bucy};
use crate::netgain::{NetGain, NetworkShape, ShiftFunction, Theta, ValueGradient};
use crate::numerics::{
    axpy, dot, integrate, norm_sq, sub, trapezoid_weight, Direction, GridTrajectory,
};
use crate::observer::{network_observer, ObserverOptions};
use crate::systems::{ObservationRecord, Scenario};
use crate::{Error, Result};

/// Terminal states `ξ_j` of the training ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleSpec {
    Explicit(Vec<Vec<f64>>),
    /// `ξ_j = center + stddev · η_j`, `η_j` standard normal (Box-Muller).
    Gaussian { center: Vec<f64>, stddev: f64, count: usize, seed: u64 },
}

impl EnsembleSpec {
    pub const DEFAULT_STDDEV: f64 = 1.2;
    pub const DEFAULT_SEED: u64 = 42;

    /// Gaussian ensemble with the default spread and seed.
    pub fn gaussian(center: Vec<f64>, count: usize) -> Self {
        EnsembleSpec::Gaussian { center, stddev: Self::DEFAULT_STDDEV, count, seed: Self::DEFAULT_SEED }
    }
}

pub fn sample_ensemble(spec: &EnsembleSpec) -> Result<Vec<Vec<f64>>> {
    match spec {
        EnsembleSpec::Explicit(list) => {
            if list.is_empty() {
                return Err(Error::InvalidArgument("empty ensemble"));
            }
            Ok(list.clone())
        }
        EnsembleSpec::Gaussian { center, stddev, count, seed } => {
            if *count == 0 {
                return Err(Error::InvalidArgument("empty ensemble"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut normals = Vec::with_capacity(count * center.len() + 1);
            while normals.len() < count * center.len() {
                let u1 = 1.0 - rng.gen::<f64>();
                let u2 = rng.gen::<f64>();
                let radius = libm::sqrt(-2.0 * libm::log(u1));
                let angle = 2.0 * core::f64::consts::PI * u2;
                normals.push(radius * libm::cos(angle));
                normals.push(radius * libm::sin(angle));
            }
            Ok(normals
                .chunks_exact(center.len())
                .take(*count)
                .map(|eta| center.iter().zip(eta).map(|(c, e)| c + stddev * e).collect())
                .collect())
        }
    }
}

/// Solves `ẋ = f(x) + G Gᵀ h(t, x)` backward from `x(T) = ξ`.
pub fn backward_state<G: ValueGradient>(surrogate: &G, xi: &[f64], scenario: &Scenario) -> Result<GridTrajectory> {
    let model = &scenario.model;
    let ggt = model.ggt();
    integrate(
        |t, x, dx| {
            model.f_into(x, dx);
            axpy(1.0, &ggt.mul_vec(&surrogate.eval(t, x)?), dx);
            Ok(())
        },
        xi,
        &scenario.grid()?,
        Direction::Backward,
    )
}

/// Integrates the adjoint forward from `p(0) = −Q₀(x(0) − x₀)`.
pub fn adjoint_solve<G: ValueGradient>(
    surrogate: &G,
    x_traj: &GridTrajectory,
    obs: &ObservationRecord,
    scenario: &Scenario,
) -> Result<GridTrajectory> {
    let model = &scenario.model;
    let grid = scenario.grid()?;
    if x_traj.grid() != &grid {
        return Err(Error::InvalidArgument("state trajectory is not on the scenario grid"));
    }
    let ggt = model.ggt();
    let c = model.c();
    let alpha = scenario.alpha;
    let (n, r) = (model.n(), model.r());
    let p0: Vec<f64> = scenario.q0.mul_vec(&sub(x_traj.first(), &scenario.x0_prior)).iter().map(|v| -v).collect();

    // node slopes of the state for Hermite interpolation at stage times
    let mut slopes = Vec::with_capacity(x_traj.len() * n);
    for (k, xk) in x_traj.iter().enumerate() {
        let mut dx = model.f(xk);
        axpy(1.0, &ggt.mul_vec(&surrogate.eval(grid.node(k), xk)?), &mut dx);
        slopes.extend_from_slice(&dx);
    }
    let slopes = GridTrajectory::new(grid, n, slopes)?;
    // output misfit on the nodes, interpolated linearly like the data
    let residual = x_traj.map(r, |k, _, xk| sub(obs.y.node(k), &c.mul_vec(xk)));

    let mut x = vec![0.0; n];
    let mut misfit = vec![0.0; r];
    integrate(
        |t, p, dp| {
            x_traj.eval_hermite_into(&slopes, t, &mut x)?;
            residual.eval_into(t, &mut misfit)?;
            let h = surrogate.eval(t, &x)?;
            let jac = surrogate.input_jacobian(t, &x)?;
            let mut ph = p.to_vec();
            axpy(1.0, &h, &mut ph);
            let source = jac.tr_mul_vec(&ggt.mul_vec(&ph));
            let drift = model.jacobian(&x).tr_mul_vec(p);
            let misfit = c.tr_mul_vec(&misfit);
            for i in 0..n {
                dp[i] = -(drift[i] + source[i] - alpha * misfit[i]);
            }
            Ok(())
        },
        &p0,
        &grid,
        Direction::Forward,
    )
}

/// Energy of one closed-loop trajectory, trapezoid in time.
fn trajectory_cost<G: ValueGradient>(
    surrogate: &G,
    x_traj: &GridTrajectory,
    obs: &ObservationRecord,
    scenario: &Scenario,
) -> Result<f64> {
    let model = &scenario.model;
    let grid = x_traj.grid();
    let gt = model.g().transpose();
    let initial = 0.5 * scenario.q0.quad_form(&sub(x_traj.first(), &scenario.x0_prior));
    let mut running = 0.0;
    for (k, x) in x_traj.iter().enumerate() {
        let t = grid.node(k);
        let control = norm_sq(&gt.mul_vec(&surrogate.eval(t, x)?));
        let misfit = norm_sq(&sub(obs.y.node(k), &model.c().mul_vec(x)));
        running += trapezoid_weight(grid, k) * (control + scenario.alpha * misfit);
    }
    Ok(initial + 0.5 * running)
}

fn check_grids(obs: &ObservationRecord, scenario: &Scenario) -> Result<()> {
    if obs.grid() != &scenario.grid()? {
        return Err(Error::InvalidArgument("observation grid differs from scenario grid"));
    }
    Ok(())
}

/// Reduced cost `J(θ)` for any surrogate of `∇_ξ V`.
pub fn reduced_cost<G: ValueGradient>(
    surrogate: &G,
    terminals: &[Vec<f64>],
    obs: &ObservationRecord,
    scenario: &Scenario,
) -> Result<f64> {
    check_grids(obs, scenario)?;
    if terminals.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble"));
    }
    let mut total = 0.0;
    for xi in terminals {
        let x_traj = backward_state(surrogate, xi, scenario)?;
        total += trajectory_cost(surrogate, &x_traj, obs, scenario)?;
    }
    Ok(total / terminals.len() as f64)
}

/// Adjoint gradient of [`reduced_cost`] with respect to the flat parameters.
pub fn reduced_gradient(
    theta: &Theta,
    shift: &ShiftFunction,
    terminals: &[Vec<f64>],
    obs: &ObservationRecord,
    scenario: &Scenario,
) -> Result<Vec<f64>> {
    cost_and_gradient(theta, shift, terminals, obs, scenario).map(|(_, g)| g).map_err(|(_, e)| e)
}

/// Cost and gradient in one pass; failures carry the sample index.
fn cost_and_gradient(
    theta: &Theta,
    shift: &ShiftFunction,
    terminals: &[Vec<f64>],
    obs: &ObservationRecord,
    scenario: &Scenario,
) -> core::result::Result<(f64, Vec<f64>), (Option<usize>, Error)> {
    check_grids(obs, scenario).map_err(|e| (None, e))?;
    if terminals.is_empty() {
        return Err((None, Error::InvalidArgument("empty ensemble")));
    }
    let net = NetGain::new(theta, shift);
    let mut cost = 0.0;
    let mut grad = vec![0.0; theta.shape().param_count()];
    for (j, xi) in terminals.iter().enumerate() {
        let at = |e: Error| (Some(j), e);
        let x_traj = backward_state(&net, xi, scenario).map_err(at)?;
        cost += trajectory_cost(&net, &x_traj, obs, scenario).map_err(at)?;
        discrete_adjoint(theta, &net, &x_traj, obs, scenario, &mut grad).map_err(at)?;
    }
    let d = terminals.len() as f64;
    grad.iter_mut().for_each(|g| *g /= d);
    Ok((cost / d, grad))
}

/// Accumulates the exact gradient of the discrete trajectory cost (trapezoid
/// weights, backward RK4 state) into `grad`.
///
/// The cotangent `μ_k` of node `k` is carried from `t₀` to `T`, reversing each
/// RK4 step `x_{k+1} ↦ x_k`. Up to the quadrature weight it approximates
/// `−p(t_k)`.
fn discrete_adjoint(
    theta: &Theta,
    net: &NetGain<'_>,
    x_traj: &GridTrajectory,
    obs: &ObservationRecord,
    scenario: &Scenario,
    grad: &mut [f64],
) -> Result<()> {
    let model = &scenario.model;
    let grid = x_traj.grid();
    let ggt = model.ggt();
    let c = model.c();

    let rhs = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let mut dx = model.f(x);
        axpy(1.0, &ggt.mul_vec(&net.eval(t, x)?), &mut dx);
        Ok(dx)
    };
    // (D_x F)ᵀ v and (D_θ F)ᵀ v for F = f + G Gᵀ h
    let state_vjp = |t: f64, x: &[f64], v: &[f64]| -> Result<Vec<f64>> {
        let mut out = model.jacobian(x).tr_mul_vec(v);
        axpy(1.0, &net.input_jacobian(t, x)?.tr_mul_vec(&ggt.mul_vec(v)), &mut out);
        Ok(out)
    };
    let param_vjp = |t: f64, x: &[f64], v: &[f64], grad: &mut [f64]| -> Result<()> {
        axpy(1.0, &theta.param_vjp(t, x, &ggt.mul_vec(v))?, grad);
        Ok(())
    };
    // node terms of the running cost
    let running = |k: usize, mu: &mut [f64], grad: &mut [f64]| -> Result<()> {
        let t = grid.node(k);
        let x = x_traj.node(k);
        let w = trapezoid_weight(grid, k);
        let h = net.eval(t, x)?;
        let gh = ggt.mul_vec(&h);
        axpy(w, &net.input_jacobian(t, x)?.tr_mul_vec(&gh), mu);
        axpy(-w * scenario.alpha, &c.tr_mul_vec(&sub(obs.y.node(k), &c.mul_vec(x))), mu);
        axpy(w, &theta.param_vjp(t, x, &gh)?, grad);
        Ok(())
    };

    let mut mu = scenario.q0.mul_vec(&sub(x_traj.first(), &scenario.x0_prior));
    running(0, &mut mu, grad)?;
    for k in 0..grid.steps() {
        let x = x_traj.node(k + 1);
        let t = grid.node(k + 1);
        let h = grid.node(k) - t;
        let t_mid = t + 0.5 * h;

        let k1 = rhs(t, x)?;
        let z2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = rhs(t_mid, &z2)?;
        let z3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = rhs(t_mid, &z3)?;
        let z4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();

        let mut next = mu.clone();
        let mut bar1: Vec<f64> = mu.iter().map(|m| h / 6.0 * m).collect();
        let mut bar2: Vec<f64> = mu.iter().map(|m| h / 3.0 * m).collect();
        let mut bar3 = bar2.clone();
        let bar4 = bar1.clone();

        let z4_bar = state_vjp(t, &z4, &bar4)?;
        param_vjp(grid.node(k), &z4, &bar4, grad)?;
        axpy(1.0, &z4_bar, &mut next);
        axpy(h, &z4_bar, &mut bar3);

        let z3_bar = state_vjp(t_mid, &z3, &bar3)?;
        param_vjp(t_mid, &z3, &bar3, grad)?;
        axpy(1.0, &z3_bar, &mut next);
        axpy(0.5 * h, &z3_bar, &mut bar2);

        let z2_bar = state_vjp(t_mid, &z2, &bar2)?;
        param_vjp(t_mid, &z2, &bar2, grad)?;
        axpy(1.0, &z2_bar, &mut next);
        axpy(0.5 * h, &z2_bar, &mut bar1);

        axpy(1.0, &state_vjp(t, x, &bar1)?, &mut next);
        param_vjp(t, x, &bar1, grad)?;

        mu = next;
        running(k + 1, &mut mu, grad)?;
    }
    Ok(())
}

/// Barzilai-Borwein step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbRule {
    /// `⟨s, s⟩ / ⟨s, y⟩`
    Long,
    /// `⟨s, y⟩ / ⟨y, y⟩`
    Short,
    /// `Long` on even iterations, `Short` on odd ones.
    Alternate,
}

/// Step length from the last parameter change `s` and gradient change `y`,
/// capped at `gamma_max`. Degenerate curvature falls back to `gamma_max`.
pub fn bb_step(s: &[f64], y: &[f64], gamma_max: f64, rule: BbRule, iteration: usize) -> f64 {
    let long = match rule {
        BbRule::Long => true,
        BbRule::Short => false,
        BbRule::Alternate => iteration % 2 == 0,
    };
    let (num, den) = if long { (dot(s, s), dot(s, y)) } else { (dot(s, y), dot(y, y)) };
    if den.abs() <= 1e-14 {
        return gamma_max;
    }
    let ratio = num / den;
    if !(ratio > 0.0) {
        return gamma_max;
    }
    ratio.min(gamma_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub scenario: Scenario,
    pub obs: ObservationRecord,
    pub shape: NetworkShape,
    pub ensemble: EnsembleSpec,
    pub iters: usize,
    /// Iteration at which the shift `g_s(t) = g_θ(x̂_θ(t))` is introduced;
    /// `None` keeps `g_s ≡ 0`.
    pub shift_at: Option<usize>,
    pub gamma_max: f64,
    pub bb_rule: BbRule,
    pub init_seed: u64,
    pub init_scale: f64,
    /// Added to the diagonal of `W_L` after the random draw, so that the
    /// initial input Jacobian is close to a multiple of the identity.
    pub init_output_diag: f64,
    /// Step of the first iteration after start or shift (no BB history).
    pub first_step: f64,
    pub observer: ObserverOptions,
}

impl TrainingConfig {
    /// Defaults: 50 iterations, shift at 20, `γ_max = 10`, alternating BB,
    /// seed 42, scale 0.1, output diagonal 1, first step 1e-2.
    pub fn new(scenario: Scenario, obs: ObservationRecord, ensemble: EnsembleSpec) -> Self {
        let n = scenario.model.n();
        TrainingConfig {
            scenario,
            obs,
            shape: NetworkShape::square(n, 2, false).expect("n ≥ 1"),
            ensemble,
            iters: 50,
            shift_at: Some(20),
            gamma_max: 10.0,
            bb_rule: BbRule::Alternate,
            init_seed: 42,
            init_scale: 0.1,
            init_output_diag: 1.0,
            first_step: 1e-2,
            observer: ObserverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        check_grids(&self.obs, &self.scenario)?;
        if self.shape.n() != self.scenario.model.n() {
            return Err(Error::DimensionMismatch {
                expected: self.scenario.model.n(),
                found: self.shape.n(),
                what: "network output width",
            });
        }
        if matches!(self.shift_at, Some(k) if k > self.iters) {
            return Err(Error::InvalidArgument("shift_at exceeds iters"));
        }
        if !(self.gamma_max > 0.0) || !(self.first_step > 0.0) {
            return Err(Error::InvalidArgument("step sizes must be positive"));
        }
        if !self.init_output_diag.is_finite() {
            return Err(Error::InvalidArgument("init_output_diag must be finite"));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::InvalidArgument("init_scale must be nonnegative"));
        }
        Ok(())
    }
}

/// One row of the optimization history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRecord {
    pub iteration: usize,
    pub cost: f64,
    /// Mean optimal cost of the ensemble, for linear models.
    pub optimal: Option<f64>,
    /// Step that produced this iterate (0 for the initial one).
    pub gamma: f64,
    pub shift_active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub theta: Theta,
    /// Last computed gradient.
    pub grad: Vec<f64>,
    pub cost_history: Vec<CostRecord>,
    pub shift: ShiftFunction,
    pub terminals: Vec<Vec<f64>>,
    /// Iteration of the returned (best) parameters.
    pub best_iteration: usize,
}

impl TrainingState {
    pub fn best_cost(&self) -> f64 {
        self.cost_history[self.best_iteration].cost
    }
}

/// Gradient descent with Barzilai-Borwein steps and the shift schedule.
///
/// Returns the lowest-cost parameters seen since the last shift update,
/// so the returned `θ` pairs with `state.shift`.
pub fn train(config: &TrainingConfig) -> Result<(Theta, TrainingState)> {
    config.validate()?;
    let scenario = &config.scenario;
    let obs = &config.obs;
    let terminals = sample_ensemble(&config.ensemble)?;
    let optimal = if scenario.model.is_linear() {
        let kr = kalman_bucy(&scenario.model, obs, scenario)?;
        Some(ensemble_optimal_cost(&kr, &terminals, scenario.horizon)?)
    } else {
        None
    };

    let mut theta = Theta::init(&config.shape, config.init_seed, config.init_scale);
    theta.shift_output_diagonal(config.init_output_diag);
    let mut shift = ShiftFunction::Zero;
    let mut history: Vec<CostRecord> = Vec::with_capacity(config.iters + 1);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut best: Option<(usize, f64, Theta)> = None;
    let mut gamma = 0.0;
    let mut grad = Vec::new();

    for k in 0..=config.iters {
        if config.shift_at == Some(k) {
            shift = compute_shift(&theta, obs, scenario, &config.observer)
                .map_err(|e| wrap(k, None, e))?;
            prev = None;
            best = None;
        }
        let (cost, g) = cost_and_gradient(&theta, &shift, &terminals, obs, scenario)
            .map_err(|(j, e)| wrap(k, j, e))?;
        if !cost.is_finite() || !crate::numerics::all_finite(&g) {
            return Err(wrap(k, None, Error::NonFinite { t: scenario.horizon, context: "reduced cost" }));
        }
        history.push(CostRecord { iteration: k, cost, optimal, gamma, shift_active: shift.is_active() });
        if best.as_ref().map_or(true, |(_, c, _)| cost < *c) {
            best = Some((k, cost, theta.clone()));
        }
        if k == config.iters {
            grad = g;
            break;
        }

        let flat = theta.to_flat();
        gamma = match &prev {
            None => config.first_step,
            Some((flat_prev, grad_prev)) => {
                bb_step(&sub(&flat, flat_prev), &sub(&g, grad_prev), config.gamma_max, config.bb_rule, k)
            }
        };
        let mut next = flat.clone();
        axpy(-gamma, &g, &mut next);
        theta = Theta::from_flat(&config.shape, &next)?;
        prev = Some((flat, g));
    }

    let (best_iteration, _, best_theta) = best.expect("at least one iteration recorded");
    let state = TrainingState {
        theta: theta.clone(),
        grad,
        cost_history: history,
        shift,
        terminals,
        best_iteration,
    };
    Ok((best_theta, state))
}

fn wrap(iteration: usize, sample: Option<usize>, e: Error) -> Error {
    Error::Training { iteration, sample, source: Box::new(e) }
}

/// `g_s(t_k) = g_θ(x̂_θ(t_k))` from an observer run with the unshifted network.
pub fn compute_shift(
    theta: &Theta,
    obs: &ObservationRecord,
    scenario: &Scenario,
    options: &ObserverOptions,
) -> Result<ShiftFunction> {
    let zero = ShiftFunction::Zero;
    let run = network_observer(&NetGain::new(theta, &zero), obs, scenario, options)?;
    let n = scenario.model.n();
    let mut err = None;
    let samples = run.xhat.map(n, |_, t, x| {
        match theta.input(t, x).and_then(|z| theta.forward(&z)) {
            Ok(g) => g,
            Err(e) => {
                err = Some(e);
                vec![0.0; n]
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(ShiftFunction::Sampled(samples)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_ensemble_passes_through() {
        let spec = EnsembleSpec::Explicit(vec![vec![1.0, 0.0]]);
        assert_eq!(sample_ensemble(&spec).unwrap(), vec![vec![1.0, 0.0]]);
        assert!(sample_ensemble(&EnsembleSpec::Explicit(vec![])).is_err());
    }

    #[test]
    fn gaussian_ensemble() {
        let spec = |stddev, seed| EnsembleSpec::Gaussian { center: vec![0.5, -1.0], stddev, count: 7, seed };
        assert_eq!(sample_ensemble(&spec(0.0, 1)).unwrap(), vec![vec![0.5, -1.0]; 7]);
        let a = sample_ensemble(&spec(0.3, 11)).unwrap();
        assert_eq!(a, sample_ensemble(&spec(0.3, 11)).unwrap());
        assert_ne!(a, sample_ensemble(&spec(0.3, 12)).unwrap());
        assert_eq!(a.len(), 7);
    }

    #[test]
    fn box_muller_moments() {
        let spec = EnsembleSpec::Gaussian { center: vec![0.0], stddev: 1.0, count: 20000, seed: 5 };
        let xs: Vec<f64> = sample_ensemble(&spec).unwrap().into_iter().map(|v| v[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.05, "{mean} {var}");
    }

    #[test]
    fn bb_rules() {
        // s = 2y with ⟨y,y⟩ = 1: ⟨s,s⟩/⟨s,y⟩ = 4/2 and ⟨s,y⟩/⟨y,y⟩ = 2/1
        let y = [0.6, 0.8];
        let s = [1.2, 1.6];
        assert!((bb_step(&s, &y, 10.0, BbRule::Long, 0) - 2.0).abs() < 1e-15);
        assert!((bb_step(&s, &y, 10.0, BbRule::Short, 0) - 2.0).abs() < 1e-15);
        // s = (1,0), y = (1,1): 1/1 and 1/2
        let (s, y) = ([1.0, 0.0], [1.0, 1.0]);
        assert_eq!(bb_step(&s, &y, 10.0, BbRule::Long, 0), 1.0);
        assert_eq!(bb_step(&s, &y, 10.0, BbRule::Short, 0), 0.5);
        assert_eq!(bb_step(&s, &y, 10.0, BbRule::Alternate, 2), 1.0);
        assert_eq!(bb_step(&s, &y, 10.0, BbRule::Alternate, 3), 0.5);
        assert_eq!(bb_step(&s, &y, 0.25, BbRule::Long, 0), 0.25);
    }

    #[test]
    fn bb_equal_vectors() {
        let v = [0.3, -2.0, 1.0];
        for rule in [BbRule::Long, BbRule::Short] {
            assert!((bb_step(&v, &v, 10.0, rule, 0) - 1.0).abs() < 1e-15);
            assert_eq!(bb_step(&v, &v, 0.5, rule, 0), 0.5);
        }
    }

    #[test]
    fn bb_safeguards() {
        assert_eq!(bb_step(&[1.0, 0.0], &[0.0, 1.0], 7.0, BbRule::Long, 0), 7.0);
        assert_eq!(bb_step(&[1.0, 0.0], &[-1.0, 0.0], 7.0, BbRule::Short, 0), 7.0);
        assert_eq!(bb_step(&[0.0, 0.0], &[0.0, 0.0], 7.0, BbRule::Short, 0), 7.0);
    }
}
