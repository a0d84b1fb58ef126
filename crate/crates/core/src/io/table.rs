//! Fixed-schema CSV tables and the run manifest.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! every value round-trips exactly. Files are written to a temporary name
//! and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::FileConfig;
use super::OutputError;
use crate::experiment::{AggregateRecord, HeatmapCell, RateDominance};
use crate::population::StepRecord;
use crate::replicator::{classify_equilibrium, FieldSample, TrajectoryPoint};
use crate::scalar::Scalar;

pub const STEP_RECORDS: &str = "step_records";
pub const FIELD_SAMPLES: &str = "field_samples";
pub const TRAJECTORIES: &str = "trajectories";
pub const ENDPOINTS: &str = "endpoints";
pub const AGGREGATES: &str = "aggregates";
pub const STRIPS: &str = "strips";
pub const DOMINANCE: &str = "dominance";
pub const CROSSOVER: &str = "crossover";
pub const HEATMAP: &str = "heatmap";

/// Version of every table layout written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

const SHARE_COLUMNS: [&str; 3] = ["share_noai", "share_complement", "share_substitute"];

/// Formats a float with 17 significant digits.
pub fn float<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

/// An in-memory table bound to one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &'static str, header: Vec<String>) -> Self {
        Table {
            schema,
            header,
            rows: Vec::new(),
        }
    }

    fn with_columns(schema: &'static str, cols: &[&str]) -> Self {
        Table::new(schema, cols.iter().map(|c| c.to_string()).collect())
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Serializes the table; fails if any row does not match the header.
    pub fn to_bytes(&self) -> Result<Vec<u8>, OutputError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |source| OutputError::Csv {
            path: self.schema.to_string(),
            source,
        };
        w.write_record(&self.header).map_err(csv_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(OutputError::Schema {
                    table: self.schema.to_string(),
                    row: i,
                    got: row.len(),
                    expected: self.header.len(),
                });
            }
            w.write_record(row).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| OutputError::Io {
            path: self.schema.to_string(),
            source: e.into_error(),
        })
    }
}

fn shares<T: Scalar>(s: &[T; 3]) -> impl Iterator<Item = String> + '_ {
    s.iter().map(|&x| float(x))
}

/// One row per scope per step: the population, then each group when the
/// population has more than one.
pub fn step_records<T: Scalar>(records: &[StepRecord<T>]) -> Table {
    let mut t = Table::with_columns(
        STEP_RECORDS,
        &[
            "step",
            "scope",
            "median_skill",
            "mean_skill",
            "max_skill",
            "skill_var",
            SHARE_COLUMNS[0],
            SHARE_COLUMNS[1],
            SHARE_COLUMNS[2],
        ],
    );
    for r in records {
        let grouped = r.groups.len() > 1;
        let scopes = std::iter::once(("population".to_string(), &r.population)).chain(
            r.groups
                .iter()
                .enumerate()
                .filter(|_| grouped)
                .map(|(g, s)| (format!("group_{g}"), s)),
        );
        for (name, s) in scopes {
            let mut row = vec![
                r.step.to_string(),
                name,
                float(s.median),
                float(s.mean),
                float(s.max),
                float(s.variance),
            ];
            row.extend(shares(&s.shares));
            t.push(row);
        }
    }
    t
}

/// Strategy shares of one group over time.
pub fn strip<T: Scalar>(series: &[[T; 3]]) -> Table {
    let mut t = Table::with_columns(
        STRIPS,
        &["step", SHARE_COLUMNS[0], SHARE_COLUMNS[1], SHARE_COLUMNS[2]],
    );
    for (step, s) in series.iter().enumerate() {
        let mut row = vec![step.to_string()];
        row.extend(shares(s));
        t.push(row);
    }
    t
}

/// Per-group strips taken from single-run step records.
pub fn strips_from_records<T: Scalar>(records: &[StepRecord<T>]) -> Vec<Table> {
    let m = records.first().map_or(0, |r| r.groups.len());
    (0..m)
        .map(|g| {
            strip(
                &records
                    .iter()
                    .map(|r| r.groups[g].shares)
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

pub fn field_samples<T: Scalar>(samples: &[FieldSample<T>]) -> Table {
    let mut t = Table::with_columns(
        FIELD_SAMPLES,
        &[
            "x0",
            "xc",
            "xs",
            "dx0",
            "dxc",
            "dxs",
            "speed",
            "confidence_flag",
        ],
    );
    for s in samples {
        let mut row: Vec<String> = s.point.as_array().iter().map(|&x| float(x)).collect();
        row.extend(s.velocity.iter().map(|&v| float(v)));
        row.push(float(s.speed));
        row.push(if s.low_confidence { "1" } else { "0" }.to_string());
        t.push(row);
    }
    t
}

pub fn trajectories<T: Scalar>(paths: &[Vec<TrajectoryPoint<T>>]) -> Table {
    let mut t = Table::with_columns(TRAJECTORIES, &["traj_id", "t", "x0", "xc", "xs"]);
    for (id, path) in paths.iter().enumerate() {
        for p in path {
            let mut row = vec![id.to_string(), float(p.t)];
            row.extend(p.point.as_array().iter().map(|&x| float(x)));
            t.push(row);
        }
    }
    t
}

/// Final point and equilibrium label of each trajectory.
pub fn endpoints<T: Scalar>(paths: &[Vec<TrajectoryPoint<T>>]) -> Table {
    let mut t = Table::with_columns(
        ENDPOINTS,
        &["traj_id", "t", "x0", "xc", "xs", "equilibrium"],
    );
    for (id, path) in paths.iter().enumerate() {
        if let Some(p) = path.last() {
            let mut row = vec![id.to_string(), float(p.t)];
            row.extend(p.point.as_array().iter().map(|&x| float(x)));
            row.push(classify_equilibrium(&p.point).label().to_string());
            t.push(row);
        }
    }
    t
}

fn coord_header<T>(records: &[AggregateRecord<T>]) -> Vec<String> {
    records
        .first()
        .map(|r| r.coords.iter().map(|(p, _)| p.clone()).collect())
        .unwrap_or_default()
}

fn coord_cells<T>(r: &AggregateRecord<T>) -> Vec<String> {
    r.coords.iter().map(|(_, v)| v.to_string()).collect()
}

/// Sweep coordinates, step, median of per-run medians, its standard error
/// and mean strategy shares.
pub fn aggregates<T: Scalar>(records: &[AggregateRecord<T>]) -> Table {
    let mut header = coord_header(records);
    header.extend(["step", "median_of_medians", "se"].map(String::from));
    header.extend(SHARE_COLUMNS.map(String::from));
    let mut t = Table::new(AGGREGATES, header);
    for r in records {
        for s in &r.steps {
            let mut row = coord_cells(r);
            row.extend([s.step.to_string(), float(s.median_of_medians), float(s.se)]);
            row.extend(shares(&s.mean_shares));
            t.push(row);
        }
    }
    t
}

/// Fraction of repetitions ending dominated by each strategy, per point.
pub fn dominance<T: Scalar>(records: &[AggregateRecord<T>]) -> Table {
    let mut header = coord_header(records);
    header.extend(
        [
            "frac_noai",
            "frac_complement",
            "frac_substitute",
            "frac_none",
        ]
        .map(String::from),
    );
    let mut t = Table::new(DOMINANCE, header);
    for r in records {
        let mut row = coord_cells(r);
        row.extend(r.dominance_fractions.iter().map(|&f| float(f)));
        t.push(row);
    }
    t
}

/// Dominance per in-group rate, sorted by rate.
pub fn rate_dominance<T: Scalar>(rates: &[RateDominance<T>]) -> Table {
    let mut t = Table::with_columns(
        DOMINANCE,
        &[
            "in_group_rate",
            "frac_noai",
            "frac_complement",
            "frac_substitute",
            "frac_none",
        ],
    );
    for r in rates {
        let mut row = vec![float(r.in_group_rate)];
        row.extend(r.fractions.iter().map(|&f| float(f)));
        t.push(row);
    }
    t
}

/// Crossover generation of each leader arm; empty when it never crosses.
pub fn crossover<T: Scalar>(records: &[AggregateRecord<T>]) -> Table {
    let mut header = coord_header(records);
    header.push("crossover_generation".into());
    let mut t = Table::new(CROSSOVER, header);
    for r in records {
        if let Some(g) = r.crossover {
            let mut row = coord_cells(r);
            row.push(g.map_or_else(String::new, |g| g.to_string()));
            t.push(row);
        }
    }
    t
}

pub fn heatmap<T: Scalar>(cells: &[HeatmapCell<T>]) -> Table {
    let mut t = Table::with_columns(HEATMAP, &["d_alpha", "d_beta", "final_median"]);
    for c in cells {
        t.push(vec![
            float(c.d_alpha),
            float(c.d_beta),
            float(c.final_median),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub schema: String,
    pub schema_version: u32,
    /// Data rows, excluding the header.
    pub rows: usize,
}

/// Description of one CLI invocation's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Seconds since the epoch taken from `SOURCE_DATE_EPOCH`; absent when
    /// that variable is unset so repeated runs stay byte-identical.
    pub timestamp: Option<u64>,
    pub config: FileConfig,
    pub schemas: BTreeMap<String, u32>,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: &FileConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|s| s.trim().parse().ok()),
            config: config.clone(),
            schemas: BTreeMap::new(),
            files: Vec::new(),
            summary: BTreeMap::new(),
        }
    }
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    manifest: RunManifest,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let io_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| OutputError::Io { path: p, source }
    };
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: RunManifest) -> Result<Self, OutputError> {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn manifest_mut(&mut self) -> &mut RunManifest {
        &mut self.manifest
    }

    /// Writes `table` as `<file_name>` and records it.
    pub fn write(&mut self, file_name: &str, table: &Table) -> Result<(), OutputError> {
        let bytes = table.to_bytes()?;
        atomic_write(&self.dir.join(file_name), &bytes)?;
        self.manifest
            .schemas
            .insert(table.schema.to_string(), SCHEMA_VERSION);
        self.manifest.files.push(FileEntry {
            path: file_name.to_string(),
            schema: table.schema.to_string(),
            schema_version: SCHEMA_VERSION,
            rows: table.rows.len(),
        });
        Ok(())
    }

    /// Writes the manifest last and returns it.
    pub fn finish(self) -> Result<RunManifest, OutputError> {
        let mut json = serde_json::to_string_pretty(&self.manifest)?;
        json.push('\n');
        atomic_write(&self.dir.join(MANIFEST_FILE), json.as_bytes())?;
        Ok(self.manifest)
    }
}
