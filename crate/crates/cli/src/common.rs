//! Shared CLI plumbing: errors, measure loading, direction-set and
//! projector flags, and deterministic JSON output.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde_json::{Map, Value};
use slicedot_core::slicers::{qmc_mapped, random_rotation, sample_uniform_sphere, spiral_s2};
use slicedot_core::{DirectionSet, DiscreteMeasure, Error as CoreError, Projector, RngStream};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Validation(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Rejects NaN results with exit code 3.
pub fn check_finite(value: f64, what: &str) -> CliResult<f64> {
    if value.is_nan() {
        return Err(CliError::Numerical(format!("{what} is NaN")));
    }
    Ok(value)
}

pub fn load_measure(path: &Path, normalize: bool) -> CliResult<DiscreteMeasure> {
    let file = File::open(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let m = DiscreteMeasure::from_csv_reader(BufReader::new(file))
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    if normalize {
        Ok(m.normalized()?)
    } else {
        Ok(m)
    }
}

/// Direction generator choice, mirrored by the `--slicer` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SlicerKind {
    Mc,
    Qmc,
    Spiral,
    QmcRot,
}

pub fn build_directions(
    slicer: SlicerKind,
    dim: usize,
    n_dirs: usize,
    seed: u64,
) -> CliResult<DirectionSet> {
    let ds = match slicer {
        SlicerKind::Mc => sample_uniform_sphere(dim, n_dirs, RngStream::from_seed(seed))?,
        SlicerKind::Qmc => qmc_mapped(dim, n_dirs, 0)?,
        SlicerKind::Spiral => {
            if dim != 3 {
                return Err(CliError::validation(format!(
                    "spiral slicer needs parameter dimension 3, got {dim}"
                )));
            }
            spiral_s2(n_dirs)?
        }
        SlicerKind::QmcRot => {
            let base = qmc_mapped(dim, n_dirs, 0)?;
            random_rotation(&base, RngStream::from_seed(seed))?
        }
    };
    Ok(ds)
}

/// Parses `--projector linear|circular:<r>|poly:<degree>`.
pub fn parse_projector(spec: &str, data_dim: usize) -> CliResult<Projector> {
    if spec == "linear" {
        return Ok(Projector::Linear);
    }
    if let Some(r) = spec.strip_prefix("circular:") {
        let r: f64 = r
            .parse()
            .map_err(|e| CliError::validation(format!("bad circular radius {r:?}: {e}")))?;
        return Ok(Projector::Circular { r });
    }
    if let Some(deg) = spec.strip_prefix("poly:") {
        let deg: u32 = deg
            .parse()
            .map_err(|e| CliError::validation(format!("bad polynomial degree {deg:?}: {e}")))?;
        return Ok(Projector::odd_polynomial(data_dim, deg)?);
    }
    Err(CliError::validation(format!(
        "unknown projector {spec:?}; expected linear, circular:<r>, or poly:<degree>"
    )))
}

/// JSON object with deterministic (sorted) key order.
pub struct Report {
    map: Map<String, Value>,
}

impl Report {
    pub fn new(subcommand: &str) -> Self {
        let mut map = Map::new();
        map.insert("schema".into(), Value::from(1));
        map.insert("subcommand".into(), Value::from(subcommand));
        Report { map }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.map.insert(key.into(), value.into());
        self
    }

    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        // serde_json drops non-finite floats to null, which is what we want
        // for optional fields; NaN is caught before this point.
        self.map.insert(key.into(), Value::from(value));
        self
    }

    /// Prints the report with `wall_ms` taken from `started`.
    pub fn finish(mut self, started: Instant) -> CliResult<()> {
        let wall = started.elapsed().as_secs_f64() * 1e3;
        self.map.insert("wall_ms".into(), Value::from(wall));
        let ordered: std::collections::BTreeMap<_, _> = self.map.into_iter().collect();
        println!("{}", serde_json::to_string(&ordered).expect("serializable report"));
        Ok(())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)?;
    Ok(())
}

/// Formats a matrix as CSV rows with shortest round-trip float repr.
pub fn matrix_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_f64_list(spec: &str) -> CliResult<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::validation(format!("bad number {s:?}: {e}")))
        })
        .collect()
}
