//! CSV files and the parameter format.
//!
//! Every float is written with 17 significant digits, so reading a file back
//! reproduces the exact `f64` values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use moen_core::{GridTrajectory, NetworkShape, ObservationRecord, Theta, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Shortest fixed format that round-trips every `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header names `prefix1 … prefixN`.
pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// Header names `prefix1_1 … prefixR_C` for a row-major matrix.
pub fn matrix_names(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    (1..=rows).flat_map(|i| (1..=cols).map(move |j| format!("{prefix}{i}_{j}"))).collect()
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create<S: AsRef<str>>(path: &Path, header: &[S]) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
        writer.write_record(header.iter().map(|s| s.as_ref())).map_err(|e| CliError::csv(path, e))?;
        Ok(Table { path: path.to_path_buf(), writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Writes `t` followed by every column of each trajectory, one row per node.
/// All trajectories must share the grid.
pub fn write_trajectories(path: &Path, columns: &[(Vec<String>, &GridTrajectory)]) -> Result<()> {
    let grid = match columns.first() {
        Some((_, tr)) => *tr.grid(),
        None => return Err(CliError::format(path, "no columns")),
    };
    let mut header = vec!["t".to_string()];
    for (names, tr) in columns {
        debug_assert_eq!(names.len(), tr.dim());
        debug_assert_eq!(tr.grid(), &grid);
        header.extend(names.iter().cloned());
    }
    let mut table = Table::create(path, &header)?;
    for (k, t) in grid.nodes().enumerate() {
        let mut row = vec![fmt(t)];
        for (_, tr) in columns {
            row.extend(tr.node(k).iter().map(|&v| fmt(v)));
        }
        table.row(&row)?;
    }
    table.finish()
}

pub fn write_truth(path: &Path, obs: &ObservationRecord) -> Result<()> {
    write_trajectories(
        path,
        &[(numbered("x", obs.x_truth.dim()), &obs.x_truth), (numbered("y", obs.y.dim()), &obs.y)],
    )
}

/// Reads a `t,x1..xn,y1..yr` file. The time column must be a uniform grid.
pub fn read_truth(path: &Path, n: usize, r: usize) -> Result<ObservationRecord> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let mut expected = vec!["t".to_string()];
    expected.extend(numbered("x", n));
    expected.extend(numbered("y", r));
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::format(
            path,
            format!("expected header {}, found {}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let (mut times, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::format(path, format!("line {line}: {e}")))?;
        times.push(values[0]);
        xs.extend_from_slice(&values[1..=n]);
        ys.extend_from_slice(&values[n + 1..]);
    }
    if times.len() < 2 {
        return Err(CliError::format(path, "need at least two rows"));
    }
    let grid = TimeGrid::new(times[0], times[times.len() - 1], times.len() - 1)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    let tol = 1e-9 * grid.t1().abs().max(1.0);
    if let Some(k) = times.iter().enumerate().position(|(k, t)| (t - grid.node(k)).abs() > tol) {
        return Err(CliError::format(path, format!("time column is not uniform at row {}", k + 1)));
    }
    let wrap = |e: moen_core::Error| CliError::format(path, e.to_string());
    ObservationRecord::new(GridTrajectory::new(grid, r, ys).map_err(wrap)?, GridTrajectory::new(grid, n, xs).map_err(wrap)?)
        .map_err(wrap)
}

/// Layer widths stored next to a parameter file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeFile {
    pub dims: Vec<usize>,
    pub time_input: bool,
}

impl ShapeFile {
    pub fn to_shape(&self) -> std::result::Result<NetworkShape, moen_core::Error> {
        NetworkShape::new(self.dims.clone(), self.time_input)
    }
}

/// `theta.csv` → `theta.shape.toml`
pub fn shape_path(theta_path: &Path) -> PathBuf {
    theta_path.with_extension("shape.toml")
}

/// Writes the flat parameter vector (header `theta_N=<N>`, one value per
/// line) and its shape sidecar.
pub fn write_theta(path: &Path, theta: &Theta) -> Result<()> {
    let flat = theta.to_flat();
    let mut table = Table::create(path, &[format!("theta_N={}", flat.len())])?;
    for v in &flat {
        table.row([fmt(*v)])?;
    }
    table.finish()?;
    let shape = theta.shape();
    let sidecar = ShapeFile { dims: shape.dims().to_vec(), time_input: shape.time_input() };
    write_text(&shape_path(path), &toml::to_string(&sidecar).expect("shape serializes"))
}

pub fn read_theta(path: &Path) -> Result<Theta> {
    let sidecar_path = shape_path(path);
    let text = std::fs::read_to_string(&sidecar_path).map_err(|e| CliError::io(&sidecar_path, e))?;
    let sidecar: ShapeFile =
        toml::from_str(&text).map_err(|e| CliError::format(&sidecar_path, e.to_string()))?;
    let shape = sidecar.to_shape().map_err(|e| CliError::format(&sidecar_path, e.to_string()))?;

    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let declared = header
        .get(0)
        .and_then(|h| h.strip_prefix("theta_N="))
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| CliError::format(path, "header must be theta_N=<N>"))?;
    let mut flat = Vec::with_capacity(declared);
    for record in reader.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let v = record[0].trim().parse::<f64>().map_err(|e| CliError::format(path, e.to_string()))?;
        flat.push(v);
    }
    if flat.len() != declared {
        return Err(CliError::format(path, format!("header declares {declared} values, found {}", flat.len())));
    }
    if declared != shape.param_count() {
        return Err(CliError::format(
            path,
            format!("{declared} values do not fit shape {:?} ({} parameters)", shape.dims(), shape.param_count()),
        ));
    }
    Theta::from_flat(&shape, &flat).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Reads a trajectory CSV written by this crate: a `t` column followed by
/// numeric columns. Returns the header and the rows.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let row = record
            .iter()
            .map(|f| if f.is_empty() { Ok(f64::NAN) } else { f.parse::<f64>() })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::format(path, e.to_string()))?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use moen_core::{Scenario, ShiftFunction};

    #[test]
    fn format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX, 0.0] {
            assert_eq!(fmt(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
        }
    }

    #[test]
    fn header_names() {
        assert_eq!(numbered("x", 2), ["x1", "x2"]);
        assert_eq!(matrix_names("s", 2, 2), ["s1_1", "s1_2", "s2_1", "s2_2"]);
    }

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let mut sc = Scenario::harmonic_default();
        sc.grid_steps = 50;
        let obs = moen_core::systems::simulate_truth(&sc).unwrap();
        write_truth(&path, &obs).unwrap();
        assert_eq!(read_truth(&path, 2, 1).unwrap(), obs);
        assert!(matches!(read_truth(&path, 1, 2), Err(CliError::Format { .. })));
    }

    #[test]
    fn theta_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.csv");
        let shape = NetworkShape::square(2, 2, false).unwrap();
        let theta = Theta::init(&shape, 3, 0.7);
        write_theta(&path, &theta).unwrap();
        let back = read_theta(&path).unwrap();
        assert_eq!(back.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   theta.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("theta_N=14\n"));
        let h = back.h_eval(0.0, &[0.3, 0.1], &ShiftFunction::Zero).unwrap();
        assert_eq!(h, theta.h_eval(0.0, &[0.3, 0.1], &ShiftFunction::Zero).unwrap());
    }

    #[test]
    fn theta_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.csv");
        let shape = NetworkShape::square(2, 2, false).unwrap();
        write_theta(&path, &Theta::init(&shape, 3, 0.7)).unwrap();
        write_text(&shape_path(&path), "dims = [2, 2, 2, 2]\ntime_input = false\n").unwrap();
        assert!(matches!(read_theta(&path), Err(CliError::Format { .. })));
    }
}
