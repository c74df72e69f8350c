//! State-space models `ẋ = f(x) + Gv`, `y = Cx + w`, deterministic
//! disturbance signals and ground-truth generation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{integrate, Direction, GridTrajectory, Mat, TimeGrid};
use crate::{Error, Result};

/// Drift of the model.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// `f(x) = A x`
    Linear { a: Mat },
    /// `ẍ₁ + δẋ₁ + λx₁ + βx₁³ = u`, as a first-order system in `(x₁, ẋ₁)`.
    Duffing { delta: f64, lambda: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    name: String,
    dynamics: Dynamics,
    g: Mat,
    c: Mat,
}

impl SystemModel {
    pub fn new(name: &str, dynamics: Dynamics, g: Mat, c: Mat) -> Result<Self> {
        let n = match &dynamics {
            Dynamics::Linear { a } => {
                if !a.is_square() {
                    return Err(Error::InvalidArgument("drift matrix must be square"));
                }
                a.rows()
            }
            Dynamics::Duffing { .. } => 2,
        };
        if g.rows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.rows(), what: "rows of G" });
        }
        if c.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: c.cols(), what: "columns of C" });
        }
        Ok(SystemModel { name: name.into(), dynamics, g, c })
    }

    /// A general linear model `f(x) = Ax`.
    pub fn linear(name: &str, a: Mat, g: Mat, c: Mat) -> Result<Self> {
        SystemModel::new(name, Dynamics::Linear { a }, g, c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.g.rows()
    }

    /// Disturbance dimension.
    pub fn m(&self) -> usize {
        self.g.cols()
    }

    /// Output dimension.
    pub fn r(&self) -> usize {
        self.c.rows()
    }

    pub fn g(&self) -> &Mat {
        &self.g
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    /// `G Gᵀ`
    pub fn ggt(&self) -> Mat {
        self.g.matmul(&self.g.transpose())
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.dynamics, Dynamics::Linear { .. })
    }

    /// The drift matrix `A` of a linear model.
    pub fn linear_drift(&self) -> Option<&Mat> {
        match &self.dynamics {
            Dynamics::Linear { a } => Some(a),
            Dynamics::Duffing { .. } => None,
        }
    }

    pub fn f(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.f_into(x, &mut out);
        out
    }

    pub fn f_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.dynamics {
            Dynamics::Linear { a } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = crate::numerics::dot(a.row(i), x);
                }
            }
            &Dynamics::Duffing { delta, lambda, beta } => {
                out[0] = x[1];
                out[1] = -delta * x[1] - lambda * x[0] - beta * x[0] * x[0] * x[0];
            }
        }
    }

    /// Jacobian `Df(x)`.
    pub fn jacobian(&self, x: &[f64]) -> Mat {
        match &self.dynamics {
            Dynamics::Linear { a } => a.clone(),
            &Dynamics::Duffing { delta, lambda, beta } => {
                Mat::from_rows(&[&[0.0, 1.0], &[-lambda - 3.0 * beta * x[0] * x[0], -delta]])
            }
        }
    }
}

/// Undamped oscillator `ẍ₁ = −x₁ + v`, position observed.
pub fn harmonic_model() -> SystemModel {
    let a = Mat::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
    let g = Mat::column(&[0.0, 1.0]);
    let c = Mat::from_rows(&[&[1.0, 0.0]]);
    SystemModel::linear("harmonic", a, g, c).expect("static dimensions")
}

/// Double-well Duffing oscillator with `λ = −1`, `β = 1`, `δ = 0.3` and
/// forcing entering through `G = (0, 0.2)ᵀ`.
pub fn duffing_model() -> SystemModel {
    let dynamics = Dynamics::Duffing { delta: 0.3, lambda: -1.0, beta: 1.0 };
    let g = Mat::column(&[0.0, 0.2]);
    let c = Mat::from_rows(&[&[1.0, 0.0]]);
    SystemModel::new("duffing", dynamics, g, c).expect("static dimensions")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Zero,
    Cosine,
    Sine,
}

/// Closed-form scalar disturbance `a·cos(ωt)` or `a·sin(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub kind: SignalKind,
    pub amplitude: f64,
    pub frequency: f64,
}

impl Signal {
    pub const ZERO: Signal = Signal { kind: SignalKind::Zero, amplitude: 0.0, frequency: 0.0 };

    pub fn cosine(amplitude: f64, frequency: f64) -> Self {
        Signal { kind: SignalKind::Cosine, amplitude, frequency }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Signal { kind: SignalKind::Sine, amplitude, frequency }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            SignalKind::Zero => 0.0,
            SignalKind::Cosine => self.amplitude * libm::cos(self.frequency * t),
            SignalKind::Sine => self.amplitude * libm::sin(self.frequency * t),
        }
    }
}

/// Model, disturbances, weights and time grid of one estimation problem.
///
/// The scalar signals `v` and `w` drive every component of the disturbance and
/// measurement noise respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: SystemModel,
    /// A-priori guess `x₀` of the initial state.
    pub x0_prior: Vec<f64>,
    /// True initial state `x₀ + ζ`.
    pub x_true_init: Vec<f64>,
    pub v: Signal,
    pub w: Signal,
    pub horizon: f64,
    pub alpha: f64,
    pub q0: Mat,
    pub grid_steps: usize,
}

impl Scenario {
    /// Checks dimensions, `T > 0`, `α > 0` and `Q₀ ≻ 0`.
    pub fn validate(&self) -> Result<()> {
        let n = self.model.n();
        for (what, v) in [("x0_prior", &self.x0_prior), ("x_true_init", &self.x_true_init)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len(), what });
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument("alpha must be positive"));
        }
        if self.q0.rows() != n || self.q0.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.q0.rows(), what: "Q0" });
        }
        if self.q0.asymmetry() > 1e-12 || self.q0.cholesky().is_none() {
            return Err(Error::InvalidArgument("Q0 must be symmetric positive definite"));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.horizon, self.grid_steps)
    }

    /// Harmonic oscillator with `v = 0.1 cos(1.2t)`, `w = 0.1 sin(0.5t)`,
    /// `x(0) = (−0.1548, 0.2969)`, prior `x₀ = 0`, `T = 10`, `M = 1000`.
    pub fn harmonic_default() -> Self {
        Scenario {
            model: harmonic_model(),
            x0_prior: vec![0.0, 0.0],
            x_true_init: vec![-0.1548, 0.2969],
            v: Signal::cosine(0.1, 1.2),
            w: Signal::sine(0.1, 0.5),
            horizon: 10.0,
            alpha: 1.0,
            q0: Mat::identity(2),
            grid_steps: 1000,
        }
    }

    /// Duffing training data: forcing `0.2 cos(1.2t)` (unit signal through
    /// `G`), exact measurements, `x(0) = (0.0646, −0.1465)`, `T = 15`.
    pub fn duffing_training() -> Self {
        Scenario {
            model: duffing_model(),
            x0_prior: vec![0.0, 0.0],
            x_true_init: vec![0.0646, -0.1465],
            v: Signal::cosine(1.0, 1.2),
            w: Signal::ZERO,
            horizon: 15.0,
            alpha: 1.0,
            q0: Mat::identity(2),
            grid_steps: 1500,
        }
    }

    /// Duffing transfer data: forcing `0.28 cos(1.2t)` (period-2 regime),
    /// `w = 0.1 sin(πt)`, `x(0) = (1, 0)`, `T = 20`.
    pub fn duffing_test() -> Self {
        Scenario {
            model: duffing_model(),
            x0_prior: vec![0.0, 0.0],
            x_true_init: vec![1.0, 0.0],
            v: Signal::cosine(1.4, 1.2),
            w: Signal::sine(0.1, core::f64::consts::PI),
            horizon: 20.0,
            alpha: 1.0,
            q0: Mat::identity(2),
            grid_steps: 2000,
        }
    }
}

/// Observations `y` and the trajectory that generated them, on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub y: GridTrajectory,
    pub x_truth: GridTrajectory,
}

impl ObservationRecord {
    pub fn new(y: GridTrajectory, x_truth: GridTrajectory) -> Result<Self> {
        if y.grid() != x_truth.grid() {
            return Err(Error::InvalidArgument("observation and truth grids differ"));
        }
        Ok(ObservationRecord { y, x_truth })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.y.grid()
    }
}

/// Integrates `ẋ = f(x) + G v(t)` from the true initial state and samples
/// `y = Cx + w(t)` at every node.
pub fn simulate_truth(scenario: &Scenario) -> Result<ObservationRecord> {
    scenario.validate()?;
    let model = &scenario.model;
    let grid = scenario.grid()?;
    let (n, m) = (model.n(), model.m());
    let x_truth = integrate(
        |t, x, dx| {
            model.f_into(x, dx);
            let vt = scenario.v.eval(t);
            for i in 0..n {
                for j in 0..m {
                    dx[i] += model.g()[(i, j)] * vt;
                }
            }
            Ok(())
        },
        &scenario.x_true_init,
        &grid,
        Direction::Forward,
    )?;
    let y = x_truth.map(model.r(), |_, t, x| {
        let wt = scenario.w.eval(t);
        model.c().mul_vec(x).into_iter().map(|cx| cx + wt).collect()
    });
    Ok(ObservationRecord { y, x_truth })
}
