//! The subcommands. Each writes its files into `output.out_dir` together with
//! `resolved_config.toml` and returns a short console summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use moen_core::filters::{ensemble_optimal_cost, extended_kalman, kalman_bucy, optimal_closed_loop};
use moen_core::numerics::trapezoid_weight;
use moen_core::observer::network_observer;
use moen_core::systems::simulate_truth;
use moen_core::training::{backward_state, sample_ensemble, train};
use moen_core::{
    KalmanResult, NetGain, ObservationRecord, Scenario, ShiftFunction, ValueGradient,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{fmt, matrix_names, numbered, read_theta, read_truth, write_text, write_theta, write_trajectories, write_truth, Table};

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

fn prepare(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.output.out_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_text(&dir.join(RESOLVED_CONFIG), &config.to_toml())?;
    Ok(dir)
}

/// Root mean square of `a − b` over all nodes.
pub fn rms(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// Writes `truth.csv`.
pub fn simulate(config: &RunConfig) -> Result<String> {
    let dir = prepare(config)?;
    let obs = simulate_truth(&config.scenario()?)?;
    write_truth(&dir.join("truth.csv"), &obs)?;
    Ok(format!("truth.csv: {} rows\n", obs.grid().len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    KalmanBucy,
    Extended,
}

/// Writes `estimate.csv` and `sigma.csv`.
pub fn filter(config: &RunConfig, which: Filter) -> Result<String> {
    let scenario = config.scenario()?;
    if which == Filter::KalmanBucy && !scenario.model.is_linear() {
        return Err(moen_core::Error::NotLinear.into());
    }
    let dir = prepare(config)?;
    let obs = simulate_truth(&scenario)?;
    let kr = run_filter(which, &scenario, &obs)?;
    let (n, r) = (scenario.model.n(), scenario.model.r());
    write_trajectories(
        &dir.join("estimate.csv"),
        &[(numbered("xhat", n), &kr.xhat), (matrix_names("gain", n, r), &kr.gain)],
    )?;
    write_trajectories(&dir.join("sigma.csv"), &[(matrix_names("sigma", n, n), &kr.sigma)])?;
    Ok(format!(
        "estimate.csv, sigma.csv: {} rows\nRMS(xhat1 - x1) = {}\n",
        obs.grid().len(),
        fmt(rms(&kr.xhat.component(0), &obs.x_truth.component(0)))
    ))
}

fn run_filter(which: Filter, scenario: &Scenario, obs: &ObservationRecord) -> Result<KalmanResult> {
    Ok(match which {
        Filter::KalmanBucy => kalman_bucy(&scenario.model, obs, scenario)?,
        Filter::Extended => extended_kalman(&scenario.model, obs, scenario)?,
    })
}

/// Writes `theta.csv`, its shape sidecar, `costs.csv`, `shift.csv` when the
/// shift is active and, for linear models, `disturbance_l2.csv`.
pub fn train_cmd(config: &RunConfig) -> Result<String> {
    let dir = prepare(config)?;
    let scenario = config.scenario()?;
    let obs = simulate_truth(&scenario)?;
    let tc = config.training_config(scenario.clone(), obs.clone(), config.training.d)?;
    let (theta, state) = train(&tc)?;

    write_theta(&dir.join("theta.csv"), &theta)?;
    let mut costs = Table::create(&dir.join("costs.csv"), &["iter", "J_theta", "J_opt_if_linear", "gamma", "shift_active"])?;
    for rec in &state.cost_history {
        costs.row([
            rec.iteration.to_string(),
            fmt(rec.cost),
            rec.optimal.map(fmt).unwrap_or_default(),
            fmt(rec.gamma),
            u8::from(rec.shift_active).to_string(),
        ])?;
    }
    costs.finish()?;
    if let ShiftFunction::Sampled(g_s) = &state.shift {
        write_trajectories(&dir.join("shift.csv"), &[(numbered("gs", g_s.dim()), g_s)])?;
    }

    let mut summary = String::new();
    let j_theta = state.best_cost();
    writeln!(summary, "J_theta = {} (iteration {})", fmt(j_theta), state.best_iteration).unwrap();
    if scenario.model.is_linear() {
        let kr = kalman_bucy(&scenario.model, &obs, &scenario)?;
        let j_opt = ensemble_optimal_cost(&kr, &state.terminals, scenario.horizon)?;
        let l2 = disturbance_l2(&kr, &scenario, &NetGain::new(&theta, &state.shift), &state.terminals)?;
        let mut table = Table::create(&dir.join("disturbance_l2.csv"), &["sample", "l2_error"])?;
        for (j, e) in l2.iter().enumerate() {
            table.row([j.to_string(), fmt(*e)])?;
        }
        table.finish()?;
        writeln!(summary, "J_opt = {}", fmt(j_opt)).unwrap();
        writeln!(summary, "gap = {:.4}%", 100.0 * (j_theta - j_opt) / j_opt).unwrap();
    }
    Ok(summary)
}

/// `‖Gᵀh(·, x_θ,j) − v_opt,j‖_{L²(0,T)}` per terminal state.
pub fn disturbance_l2<G: ValueGradient>(
    kr: &KalmanResult,
    scenario: &Scenario,
    surrogate: &G,
    terminals: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let model = &scenario.model;
    let gt = model.g().transpose();
    terminals
        .iter()
        .map(|xi| {
            let opt = optimal_closed_loop(kr, model, xi)?;
            let x_theta = backward_state(surrogate, xi, scenario)?;
            let grid = *x_theta.grid();
            let mut sum = 0.0;
            for (k, t) in grid.nodes().enumerate() {
                let v = gt.mul_vec(&surrogate.eval(t, x_theta.node(k))?);
                let d: f64 = v.iter().zip(opt.v_opt.node(k)).map(|(a, b)| (a - b) * (a - b)).sum();
                sum += trapezoid_weight(&grid, k) * d;
            }
            Ok(sum.sqrt())
        })
        .collect()
}

/// Runs the network observer with stored parameters and writes `observer.csv`.
///
/// Observations come from `obs_path` (a `truth.csv`) or, without it, from
/// simulating the configured scenario.
pub fn observe(config: &RunConfig, theta_path: &Path, obs_path: Option<&Path>) -> Result<String> {
    let scenario = config.scenario()?;
    let theta = read_theta(theta_path)?;
    let expected = config.shape()?;
    if theta.shape() != &expected {
        return Err(CliError::config(format!(
            "{}: parameter shape {:?} (time_input {}) does not match the configured network {:?} (time_input {})",
            theta_path.display(),
            theta.shape().dims(),
            theta.shape().time_input(),
            expected.dims(),
            expected.time_input()
        )));
    }
    let (n, r) = (scenario.model.n(), scenario.model.r());
    let obs = match obs_path {
        Some(p) => read_truth(p, n, r)?,
        None => simulate_truth(&scenario)?,
    };
    let dir = prepare(config)?;
    let shift = ShiftFunction::Zero;
    let run = network_observer(&NetGain::new(&theta, &shift), &obs, &scenario, &config.observer_options())?;
    write_trajectories(
        &dir.join("observer.csv"),
        &[
            (numbered("xhat", n), &run.xhat),
            (matrix_names("gain", n, r), &run.gain),
            (vec!["abs_det_jacobian".into()], &run.conditioning),
        ],
    )?;

    let truth = obs.x_truth.component(0);
    let trivial = vec![scenario.x0_prior[0]; truth.len()];
    let zeros = vec![0.0; truth.len()];
    let max_norm = run.xhat.iter().map(moen_core::numerics::norm).fold(0.0, f64::max);
    let mut summary = String::new();
    writeln!(summary, "observer.csv: {} rows", obs.grid().len()).unwrap();
    writeln!(summary, "RMS(xhat1 - x1)   = {}", fmt(rms(&run.xhat.component(0), &truth))).unwrap();
    writeln!(summary, "RMS(x0_1 - x1)    = {}", fmt(rms(&trivial, &truth))).unwrap();
    writeln!(summary, "RMS(x1)           = {}", fmt(rms(&truth, &zeros))).unwrap();
    if let Ok(ekf) = extended_kalman(&scenario.model, &obs, &scenario) {
        writeln!(summary, "RMS(ekf1 - x1)    = {}", fmt(rms(&ekf.xhat.component(0), &truth))).unwrap();
    }
    writeln!(summary, "max |xhat|        = {}", fmt(max_norm)).unwrap();
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub d: usize,
    pub alpha: f64,
    pub j_opt: f64,
    pub j_theta: f64,
}

impl ReportRow {
    pub fn gap(&self) -> f64 {
        (self.j_theta - self.j_opt) / self.j_opt
    }
}

/// Optimal against learned cost, one row per `(d, α)` cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut table = Table::create(path, &["d", "alpha", "J_opt", "J_theta", "gap"])?;
        for row in &self.rows {
            table.row([row.d.to_string(), fmt(row.alpha), fmt(row.j_opt), fmt(row.j_theta), fmt(row.gap())])?;
        }
        table.finish()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:>5} {:>8} {:>12} {:>12} {:>9}\n", "d", "alpha", "J_opt", "J_theta", "gap");
        for row in &self.rows {
            writeln!(
                out,
                "{:>5} {:>8} {:>12.6} {:>12.6} {:>8.3}%",
                row.d,
                row.alpha,
                row.j_opt,
                row.j_theta,
                100.0 * row.gap()
            )
            .unwrap();
        }
        out
    }
}

struct Cell {
    row: ReportRow,
    l2: Vec<f64>,
}

fn report_cell(config: &RunConfig, obs: &ObservationRecord, d: usize, alpha: f64) -> Result<Cell> {
    let mut scenario = config.scenario()?;
    scenario.alpha = alpha;
    let tc = config.training_config(scenario.clone(), obs.clone(), d)?;
    let terminals = sample_ensemble(&tc.ensemble)?;
    let kr = kalman_bucy(&scenario.model, obs, &scenario)?;
    let j_opt = ensemble_optimal_cost(&kr, &terminals, scenario.horizon)?;
    let (theta, state) = train(&tc)?;
    let l2 = disturbance_l2(&kr, &scenario, &NetGain::new(&theta, &state.shift), &terminals)?;
    Ok(Cell { row: ReportRow { d, alpha, j_opt, j_theta: state.best_cost() }, l2 })
}

/// Trains every `(d, α)` cell of the report lists (in parallel) and writes
/// `report.csv`, `report.txt` and `report_l2.csv`.
pub fn report(config: &RunConfig) -> Result<(ReportTable, String)> {
    let scenario = config.scenario()?;
    if !scenario.model.is_linear() {
        return Err(moen_core::Error::NotLinear.into());
    }
    let dir = prepare(config)?;
    let obs = simulate_truth(&scenario)?;
    let cells: Vec<(usize, f64)> = config
        .report
        .samples
        .iter()
        .flat_map(|&d| config.report.alphas.iter().map(move |&a| (d, a)))
        .collect();
    let results: Vec<Result<Cell>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            cells.iter().map(|&(d, a)| s.spawn({ let obs = &obs; move || report_cell(config, obs, d, a) })).collect();
        handles.into_iter().map(|h| h.join().expect("report worker panicked")).collect()
    });
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;

    let table = ReportTable { rows: cells.iter().map(|c| c.row).collect() };
    table.write_csv(&dir.join("report.csv"))?;
    let text = table.render();
    write_text(&dir.join("report.txt"), &text)?;
    let mut l2 = Table::create(&dir.join("report_l2.csv"), &["d", "alpha", "sample", "l2_error"])?;
    for cell in &cells {
        for (j, e) in cell.l2.iter().enumerate() {
            l2.row([cell.row.d.to_string(), fmt(cell.row.alpha), j.to_string(), fmt(*e)])?;
        }
    }
    l2.finish()?;
    Ok((table, text))
}
