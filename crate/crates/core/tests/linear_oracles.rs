use moen_core::filters::{extended_kalman, kalman_bucy, optimal_closed_loop, value_linear, KalmanResult};
use moen_core::numerics::{dot, norm_sq, sub, trapezoid_weight};
use moen_core::systems::{simulate_truth, Scenario, Signal};
use moen_core::{ObservationRecord, ValueGradient};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn harmonic() -> (Scenario, ObservationRecord, KalmanResult) {
    let sc = Scenario::harmonic_default();
    let obs = simulate_truth(&sc).unwrap();
    let kr = kalman_bucy(&sc.model, &obs, &sc).unwrap();
    (sc, obs, kr)
}

#[test]
fn hjb_residual_at_random_points() {
    let (sc, obs, kr) = harmonic();
    let grid = sc.grid().unwrap();
    let h = grid.step();
    let model = &sc.model;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let k = rng.gen_range(1..grid.steps());
        let t = grid.node(k);
        let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let v = value_linear(&kr, t, &xi).unwrap();
        let dt = (value_linear(&kr, t + h, &xi).unwrap().value - value_linear(&kr, t - h, &xi).unwrap().value) / (2.0 * h);
        let gt_grad = model.g().tr_mul_vec(&v.grad);
        let misfit = norm_sq(&sub(obs.y.node(k), &model.c().mul_vec(&xi)));
        let residual = dt + dot(&v.grad, &model.f(&xi)) + 0.5 * norm_sq(&gt_grad) - 0.5 * sc.alpha * misfit;
        assert!(residual.abs() <= 1e-3, "t={t} xi={xi:?} residual={residual}");
    }
}

#[test]
fn value_along_estimate_grows_with_misfit() {
    let (sc, _, kr) = harmonic();
    let grid = sc.grid().unwrap();
    let h = grid.step();
    let value = |k: usize| value_linear(&kr, grid.node(k), kr.xhat.node(k)).unwrap().value;
    for k in 1..grid.steps() {
        let derivative = (value(k + 1) - value(k - 1)) / (2.0 * h);
        let expected = 0.5 * sc.alpha * kr.output_misfit.node(k)[0];
        assert!((derivative - expected).abs() <= 1e-3, "k={k}");
    }
}

#[test]
fn value_at_start_is_prior_energy() {
    let (sc, _, kr) = harmonic();
    let xi = [0.7, -0.4];
    let v = value_linear(&kr, 0.0, &xi).unwrap();
    let expected = 0.5 * sc.q0.quad_form(&sub(&xi, &sc.x0_prior));
    assert!((v.value - expected).abs() < 1e-14);
}

#[test]
fn closed_loop_cost_equals_value() {
    let (sc, obs, kr) = harmonic();
    let grid = sc.grid().unwrap();
    let model = &sc.model;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let xi = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let cl = optimal_closed_loop(&kr, model, &xi).unwrap();
        let mut cost = 0.5 * sc.q0.quad_form(&sub(cl.x_opt.first(), &sc.x0_prior));
        for k in 0..grid.len() {
            let misfit = norm_sq(&sub(obs.y.node(k), &model.c().mul_vec(cl.x_opt.node(k))));
            cost += 0.5 * trapezoid_weight(&grid, k) * (norm_sq(cl.v_opt.node(k)) + sc.alpha * misfit);
        }
        let v = value_linear(&kr, sc.horizon, &xi).unwrap().value;
        assert!((cost - v).abs() <= 1e-3 * v, "cost={cost} V={v}");
    }
}

#[test]
fn dual_relation_satisfies_adjoint_equation() {
    let (sc, obs, kr) = harmonic();
    let grid = sc.grid().unwrap();
    let h = grid.step();
    let model = &sc.model;
    let cl = optimal_closed_loop(&kr, model, &[0.9, -0.3]).unwrap();
    let oracle = moen_core::LinearOracle::new(&kr);
    let p: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| oracle.eval(grid.node(k), cl.x_opt.node(k)).unwrap().iter().map(|v| -v).collect())
        .collect();
    let a = model.linear_drift().unwrap();
    let c = model.c();
    for k in 1..grid.steps() {
        let x = cl.x_opt.node(k);
        let misfit = c.tr_mul_vec(&sub(obs.y.node(k), &c.mul_vec(x)));
        let drift = a.tr_mul_vec(&p[k]);
        for i in 0..2 {
            let dp = (p[k + 1][i] - p[k - 1][i]) / (2.0 * h);
            let residual = -dp - (drift[i] - sc.alpha * misfit[i]);
            assert!(residual.abs() <= 1e-3, "k={k} i={i} residual={residual}");
        }
    }
    let p0 = sc.q0.mul_vec(&sub(cl.x_opt.first(), &sc.x0_prior));
    for i in 0..2 {
        assert!((p[0][i] + p0[i]).abs() <= 1e-4);
    }
}

#[test]
fn closed_loop_disturbance_vanishes_at_estimate() {
    let (sc, _, kr) = harmonic();
    let cl = optimal_closed_loop(&kr, &sc.model, kr.xhat.last()).unwrap();
    assert_eq!(cl.x_opt.last(), kr.xhat.last());
    assert!(cl.v_opt.last()[0].abs() < 1e-12);
}

#[test]
fn riccati_does_not_depend_on_observations() {
    let (sc, _, kr) = harmonic();
    let other = Scenario { w: Signal::cosine(0.7, 3.1), v: Signal::sine(0.4, 0.2), ..sc.clone() };
    let obs2 = simulate_truth(&other).unwrap();
    let kr2 = kalman_bucy(&sc.model, &obs2, &sc).unwrap();
    assert!(kr.sigma.max_distance(&kr2.sigma) <= 1e-12);
    assert!(kr.xhat.max_distance(&kr2.xhat) > 1e-3);
}

#[test]
fn extended_filter_reduces_to_kalman_bucy() {
    let (sc, obs, kr) = harmonic();
    let ekf = extended_kalman(&sc.model, &obs, &sc).unwrap();
    assert!(ekf.xhat.max_distance(&kr.xhat) <= 1e-10);
    assert!(ekf.sigma.max_distance(&kr.sigma) <= 1e-10);
}

#[test]
fn covariance_stays_symmetric_positive_definite() {
    for alpha in [1.0, 10.0] {
        let sc = Scenario { alpha, ..Scenario::harmonic_default() };
        let obs = simulate_truth(&sc).unwrap();
        let kr = kalman_bucy(&sc.model, &obs, &sc).unwrap();
        assert_eq!(kr.sigma_node(0), sc.q0.inverse().unwrap());
        for k in 0..kr.sigma.len() {
            let s = kr.sigma_node(k);
            assert!(s.asymmetry() <= 1e-9);
            assert!(s.cholesky().is_some(), "k={k}");
        }
    }
}

#[test]
fn extended_filter_runs_on_duffing() {
    let sc = Scenario::duffing_training();
    let obs = simulate_truth(&sc).unwrap();
    let ekf = extended_kalman(&sc.model, &obs, &sc).unwrap();
    assert!(ekf.xhat.is_finite());
    for k in 0..ekf.sigma.len() {
        assert!(ekf.sigma_node(k).cholesky().is_some());
    }
    assert!(kalman_bucy(&sc.model, &obs, &sc).is_err());
}
