//! Residual network `g_θ` approximating the value-function gradient.
//!
//! Hidden layers map `z ↦ σ(W z + b) + R z` with the logistic `σ`; the output
//! layer is linear, `z ↦ W_L z`, without bias. The surrogate used by the
//! training problem and the observer is `h_θ(t, x) = g_θ(x) − g_s(t)` where
//! `g_s` is a parameter-free shift depending on time only.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::{axpy, GridTrajectory, Mat};
use crate::{Error, Result};

/// Anything that can stand in for `∇_ξ V(t, x)` inside the closed-loop state
/// equation and the observer: the network surrogate, or the exact linear
/// oracle.
pub trait ValueGradient {
    /// State dimension `n`.
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;

    /// `D_x` of [`ValueGradient::eval`], an `n × n` matrix.
    fn input_jacobian(&self, t: f64, x: &[f64]) -> Result<Mat>;
}

pub fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-s))
}

fn logistic_prime(s: f64) -> f64 {
    let sig = logistic(s);
    sig * (1.0 - sig)
}

/// Layer widths `[n₀, …, n_L]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    dims: Vec<usize>,
    time_input: bool,
}

impl NetworkShape {
    /// `dims[L]` is the state dimension; `dims[0]` must be `n` or, with
    /// `time_input`, `n + 1`.
    pub fn new(dims: Vec<usize>, time_input: bool) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidArgument("network needs at least two layers"));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be positive"));
        }
        let n = *dims.last().unwrap();
        let expected = if time_input { n + 1 } else { n };
        if dims[0] != expected {
            return Err(Error::DimensionMismatch { expected, found: dims[0], what: "network input width" });
        }
        Ok(NetworkShape { dims, time_input })
    }

    /// `layers` layers, every hidden width equal to `n`.
    pub fn square(n: usize, layers: usize, time_input: bool) -> Result<Self> {
        let mut dims = vec![n; layers + 1];
        if time_input {
            dims[0] = n + 1;
        }
        NetworkShape::new(dims, time_input)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn time_input(&self) -> bool {
        self.time_input
    }

    /// Number of layers `L`.
    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Output (state) dimension.
    pub fn n(&self) -> usize {
        self.dims[self.layers()]
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// `N = n_L n_{L−1} + Σ_{i<L} (2 n_{i−1} + 1) n_i`
    pub fn param_count(&self) -> usize {
        let l = self.layers();
        let hidden: usize = (1..l).map(|i| (2 * self.dims[i - 1] + 1) * self.dims[i]).sum();
        self.dims[l] * self.dims[l - 1] + hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub w: Mat,
    pub b: Vec<f64>,
    pub r: Mat,
}

/// Network parameters `(W₁, b₁, R₁, …, W_{L−1}, b_{L−1}, R_{L−1}, W_L)`.
///
/// The flat view orders blocks exactly like that, matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    shape: NetworkShape,
    hidden: Vec<HiddenLayer>,
    output: Mat,
}

/// Intermediate values of one forward pass.
struct Trace {
    /// Layer inputs `a₀ = z, a₁, …, a_{L−1}`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations `W_i a_{i−1} + b_i` of the hidden layers.
    pre: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl Theta {
    pub fn zeros(shape: &NetworkShape) -> Self {
        let d = &shape.dims;
        let hidden = (1..shape.layers())
            .map(|i| HiddenLayer {
                w: Mat::zeros(d[i], d[i - 1]),
                b: vec![0.0; d[i]],
                r: Mat::zeros(d[i], d[i - 1]),
            })
            .collect();
        let l = shape.layers();
        Theta { shape: shape.clone(), hidden, output: Mat::zeros(d[l], d[l - 1]) }
    }

    /// Seeded initialization: `W_i`, `b_i` and `W_L` uniform in
    /// `[−scale, scale]`, `R_i` the identity on its leading square block.
    pub fn init(shape: &NetworkShape, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = move || scale * (2.0 * rng.gen::<f64>() - 1.0);
        let mut theta = Theta::zeros(shape);
        for layer in &mut theta.hidden {
            layer.w.as_mut_slice().iter_mut().for_each(|x| *x = draw());
            layer.b.iter_mut().for_each(|x| *x = draw());
            for i in 0..layer.r.rows().min(layer.r.cols()) {
                layer.r[(i, i)] = 1.0;
            }
        }
        theta.output.as_mut_slice().iter_mut().for_each(|x| *x = draw());
        theta
    }

    /// Adds `v` to the diagonal of the leading square block of `W_L`.
    pub fn shift_output_diagonal(&mut self, v: f64) {
        let o = &mut self.output;
        for i in 0..o.rows().min(o.cols()) {
            o[(i, i)] += v;
        }
    }

    pub fn from_flat(shape: &NetworkShape, flat: &[f64]) -> Result<Self> {
        if flat.len() != shape.param_count() {
            return Err(Error::DimensionMismatch {
                expected: shape.param_count(),
                found: flat.len(),
                what: "flat parameter vector",
            });
        }
        let mut theta = Theta::zeros(shape);
        let mut rest = flat;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for layer in &mut theta.hidden {
            take(layer.w.as_mut_slice());
            take(&mut layer.b);
            take(layer.r.as_mut_slice());
        }
        take(theta.output.as_mut_slice());
        Ok(theta)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.shape.param_count());
        for layer in &self.hidden {
            flat.extend_from_slice(layer.w.as_slice());
            flat.extend_from_slice(&layer.b);
            flat.extend_from_slice(layer.r.as_slice());
        }
        flat.extend_from_slice(self.output.as_slice());
        flat
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn hidden(&self) -> &[HiddenLayer] {
        &self.hidden
    }

    pub fn hidden_mut(&mut self) -> &mut [HiddenLayer] {
        &mut self.hidden
    }

    pub fn output(&self) -> &Mat {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut Mat {
        &mut self.output
    }

    pub fn is_finite(&self) -> bool {
        crate::numerics::all_finite(&self.to_flat())
    }

    /// Network input for `(t, x)`: `x`, or `(t, x)` with time input.
    pub fn input(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.shape.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len(), what: "network state input" });
        }
        Ok(if self.shape.time_input {
            let mut z = Vec::with_capacity(n + 1);
            z.push(t);
            z.extend_from_slice(x);
            z
        } else {
            x.to_vec()
        })
    }

    fn trace(&self, z: &[f64]) -> Result<Trace> {
        if z.len() != self.shape.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.input_dim(),
                found: z.len(),
                what: "network input",
            });
        }
        let mut inputs = Vec::with_capacity(self.hidden.len() + 1);
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut a = z.to_vec();
        for layer in &self.hidden {
            let mut s = layer.w.mul_vec(&a);
            axpy(1.0, &layer.b, &mut s);
            let mut next = layer.r.mul_vec(&a);
            for (o, &si) in next.iter_mut().zip(&s) {
                *o += logistic(si);
            }
            inputs.push(a);
            pre.push(s);
            a = next;
        }
        let out = self.output.mul_vec(&a);
        inputs.push(a);
        Ok(Trace { inputs, pre, out })
    }

    /// `g_θ(z)`
    pub fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(z)?.out)
    }

    /// `h_θ(t, x) = g_θ(t, x) − g_s(t)`
    pub fn h_eval(&self, t: f64, x: &[f64], shift: &ShiftFunction) -> Result<Vec<f64>> {
        let mut h = self.forward(&self.input(t, x)?)?;
        if let ShiftFunction::Sampled(g_s) = shift {
            axpy(-1.0, &g_s.eval_at(t)?, &mut h);
        }
        Ok(h)
    }

    /// `D_x h_θ(t, x)`; the shift does not depend on `x`.
    pub fn input_jacobian(&self, t: f64, x: &[f64]) -> Result<Mat> {
        let z = self.input(t, x)?;
        let tr = self.trace(&z)?;
        let n = self.shape.n();
        let offset = usize::from(self.shape.time_input);
        let mut jac = Mat::zeros(z.len(), n);
        for i in 0..n {
            jac[(i + offset, i)] = 1.0;
        }
        for (layer, s) in self.hidden.iter().zip(&tr.pre) {
            let mut local = layer.r.clone();
            for i in 0..local.rows() {
                let d = logistic_prime(s[i]);
                for j in 0..local.cols() {
                    local[(i, j)] += d * layer.w[(i, j)];
                }
            }
            jac = local.matmul(&jac);
        }
        Ok(self.output.matmul(&jac))
    }

    /// `uᵀ D_θ h_θ(t, x)` in flat parameter order, by reverse accumulation.
    pub fn param_vjp(&self, t: f64, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let n = self.shape.n();
        if u.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: u.len(), what: "cotangent" });
        }
        let tr = self.trace(&self.input(t, x)?)?;
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(3 * self.hidden.len() + 1);

        let last_in = tr.inputs.last().unwrap();
        blocks.push(outer(u, last_in));
        let mut delta = self.output.tr_mul_vec(u);

        for (i, layer) in self.hidden.iter().enumerate().rev() {
            let a = &tr.inputs[i];
            let s: Vec<f64> = delta.iter().zip(&tr.pre[i]).map(|(d, &p)| d * logistic_prime(p)).collect();
            // pushed in reverse, so R before b before W
            blocks.push(outer(&delta, a));
            blocks.push(s.clone());
            blocks.push(outer(&s, a));
            let mut next = layer.w.tr_mul_vec(&s);
            axpy(1.0, &layer.r.tr_mul_vec(&delta), &mut next);
            delta = next;
        }
        let mut flat = Vec::with_capacity(self.shape.param_count());
        for block in blocks.iter().rev() {
            flat.extend_from_slice(block);
        }
        Ok(flat)
    }
}

/// Row-major `a bᵀ`.
fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect()
}

/// Time-only offset `g_s` subtracted from the network output.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftFunction {
    Zero,
    /// Node samples, linearly interpolated in between.
    Sampled(GridTrajectory),
}

impl ShiftFunction {
    pub fn eval(&self, t: f64, n: usize) -> Result<Vec<f64>> {
        match self {
            ShiftFunction::Zero => Ok(vec![0.0; n]),
            ShiftFunction::Sampled(g_s) => g_s.eval_at(t),
        }
    }

    pub fn is_active(&self) -> bool {
        matches!(self, ShiftFunction::Sampled(_))
    }
}

/// `h_θ` for a fixed parameter set and shift.
#[derive(Debug, Clone, Copy)]
pub struct NetGain<'a> {
    pub theta: &'a Theta,
    pub shift: &'a ShiftFunction,
}

impl<'a> NetGain<'a> {
    pub fn new(theta: &'a Theta, shift: &'a ShiftFunction) -> Self {
        NetGain { theta, shift }
    }
}

impl ValueGradient for NetGain<'_> {
    fn dim(&self) -> usize {
        self.theta.shape.n()
    }

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.theta.h_eval(t, x, self.shift)
    }

    fn input_jacobian(&self, t: f64, x: &[f64]) -> Result<Mat> {
        self.theta.input_jacobian(t, x)
    }
}
