use moen_core::filters::kalman_bucy;
use moen_core::observer::{gain_matrix, network_observer};
use moen_core::systems::{simulate_truth, Scenario, Signal};
use moen_core::{LinearOracle, Mat, ObserverOptions};

fn exact() -> ObserverOptions {
    ObserverOptions { ridge: 0.0, ..ObserverOptions::default() }
}

#[test]
fn oracle_jacobian_reproduces_kalman_bucy() {
    for alpha in [1.0, 10.0] {
        let sc = Scenario { alpha, ..Scenario::harmonic_default() };
        let obs = simulate_truth(&sc).unwrap();
        let kr = kalman_bucy(&sc.model, &obs, &sc).unwrap();
        let run = network_observer(&LinearOracle::new(&kr), &obs, &sc, &exact()).unwrap();
        let dist = run.xhat.max_distance(&kr.xhat);
        assert!(dist <= 1e-4, "alpha={alpha} dist={dist}");
        assert_eq!(run.xhat.first(), sc.x0_prior.as_slice());
    }
}

#[test]
fn zero_innovation_tracks_truth() {
    let sc = Scenario {
        v: Signal::ZERO,
        w: Signal::ZERO,
        x_true_init: vec![0.0, 0.0],
        ..Scenario::harmonic_default()
    };
    let sc = Scenario { x0_prior: vec![0.3, -0.2], x_true_init: vec![0.3, -0.2], ..sc };
    let obs = simulate_truth(&sc).unwrap();
    let kr = kalman_bucy(&sc.model, &obs, &sc).unwrap();
    let run = network_observer(&LinearOracle::new(&kr), &obs, &sc, &exact()).unwrap();
    assert!(run.xhat.max_distance(&obs.x_truth) <= 1e-5);
}

#[test]
fn recorded_gain_matches_gain_matrix() {
    let sc = Scenario::harmonic_default();
    let obs = simulate_truth(&sc).unwrap();
    let kr = kalman_bucy(&sc.model, &obs, &sc).unwrap();
    let oracle = LinearOracle::new(&kr);
    let options = exact();
    let run = network_observer(&oracle, &obs, &sc, &options).unwrap();
    let grid = *obs.grid();
    for k in (0..grid.len()).step_by(37) {
        let (gain, det) = gain_matrix(&oracle, grid.node(k), run.xhat.node(k), sc.model.c(), &options).unwrap();
        for (a, b) in gain.as_slice().iter().zip(run.gain.node(k)) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!((det - run.conditioning.node(k)[0]).abs() <= 1e-12);
    }
}

#[test]
fn oracle_gain_is_kalman_direction() {
    let sc = Scenario::harmonic_default();
    let obs = simulate_truth(&sc).unwrap();
    let kr = kalman_bucy(&sc.model, &obs, &sc).unwrap();
    let t = 4.0;
    let (gain, _) = gain_matrix(&LinearOracle::new(&kr), t, &[0.1, 0.1], sc.model.c(), &exact()).unwrap();
    let expected: Mat = kr.sigma_at(t).unwrap().matmul(&sc.model.c().transpose());
    assert!(gain.sub(&expected).norm() < 1e-10);
}
