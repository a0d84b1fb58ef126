//! The `cce` command-line interface.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors (nothing
//! is written), 1 for failures while running or writing outputs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::experiment::{run_experiment, skill_heatmap, summarize_dominance, OutputKind};
use crate::io::table::{self, OutputDir, RunManifest};
use crate::io::{parse_config, ConfigError, OutputError, RunConfig};
use crate::population::Simulation;
use crate::replicator::{build_field, integrate_trajectory, PayoffCache};

#[derive(Debug, Parser)]
#[command(
    name = "cce",
    version,
    about = "Cumulative cultural evolution simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write per-step records.
    Run(Common),
    /// Run a repetition batch or parameter sweep.
    Experiment(Common),
    /// Estimate the replicator velocity on the simplex grid.
    Field(Common),
    /// Integrate replicator trajectories from the configured starts.
    Trajectory(Common),
    /// Check a configuration without running anything.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides the run budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Heatmap over this many uniformly drawn (d_alpha, d_beta) cells.
    #[arg(long, value_name = "N")]
    sample_uniform: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Sim(#[from] crate::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("cannot start thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn load(opts: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &opts.config {
        Some(path) => parse_config(path)?,
        None => crate::io::parse_config_str("")?,
    };
    if let Some(seed) = opts.seed {
        cfg.set_seed(seed);
    }
    if let Some(budget) = opts.budget {
        cfg.set_budget(budget);
    }
    if let Some(count) = opts.sample_uniform {
        cfg.set_sample_uniform(count);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, opts) = match &cli.command {
        Command::Run(o) => ("run", o),
        Command::Experiment(o) => ("experiment", o),
        Command::Field(o) => ("field", o),
        Command::Trajectory(o) => ("trajectory", o),
        Command::Validate(o) => ("validate", o),
    };
    let cfg = match load(opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if name == "validate" {
        eprintln!("configuration is valid");
        return 0;
    }
    match execute(name, opts, &cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Everything is computed before the output directory is touched.
fn execute(name: &str, opts: &Common, cfg: &RunConfig) -> Result<(), RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()?;
    let mut manifest = RunManifest::new(name, &cfg.file);
    let tables = pool.install(|| compute(name, cfg, &mut manifest))?;
    let mut out = OutputDir::create(&opts.out, manifest)?;
    for (file, t) in &tables {
        out.write(file, t)?;
    }
    let m = out.finish()?;
    eprintln!(
        "wrote {} files to {}",
        m.files.len() + 1,
        opts.out.display()
    );
    Ok(())
}

type Outputs = Vec<(String, table::Table)>;

fn compute(
    name: &str,
    cfg: &RunConfig,
    manifest: &mut RunManifest,
) -> Result<Outputs, crate::Error> {
    let mut tables: Outputs = Vec::new();
    match name {
        "run" => {
            let mut sim = Simulation::new(cfg.experiment.base.clone())?;
            let mut records = vec![sim.record()];
            for _ in 0..cfg.experiment.base.steps {
                sim.step();
                records.push(sim.record());
            }
            tables.push(("step_records.csv".into(), table::step_records(&records)));
            if cfg.experiment.base.m > 1 {
                for (g, t) in table::strips_from_records(&records).into_iter().enumerate() {
                    tables.push((format!("strips_group_{g}.csv"), t));
                }
            }
        }
        "experiment" => {
            if let Some(cells) = &cfg.heatmap {
                let hm = skill_heatmap(&cfg.experiment.base, cells)?;
                tables.push(("heatmap.csv".into(), table::heatmap(&hm)));
                return Ok(tables);
            }
            let exp = &cfg.experiment;
            let records = run_experiment(exp)?;
            tables.push(("aggregates.csv".into(), table::aggregates(&records)));
            if exp.outputs.contains(&OutputKind::Strips) {
                for r in &records {
                    for (g, series) in r.group_shares.iter().enumerate() {
                        tables.push((
                            format!("strips_point_{}_group_{g}.csv", r.point),
                            table::strip(series),
                        ));
                    }
                }
            }
            if exp.outputs.contains(&OutputKind::Dominance) {
                if exp.axes.len() == 1 && exp.axes[0].path == "in_group_rate" {
                    let summary = summarize_dominance(&records)?;
                    tables.push((
                        "dominance.csv".into(),
                        table::rate_dominance(&summary.rates),
                    ));
                    manifest
                        .summary
                        .insert("complement_threshold".into(), json!(summary.threshold));
                } else {
                    tables.push(("dominance.csv".into(), table::dominance(&records)));
                }
            }
            if exp.outputs.contains(&OutputKind::Crossover) && exp.crossover.is_some() {
                tables.push(("crossover.csv".into(), table::crossover(&records)));
            }
        }
        "field" => {
            let field = build_field(&cfg.experiment.base, &cfg.replicator)?;
            for (x, e) in &field.skipped {
                eprintln!("warning: skipped grid point {:?}: {e}", x.as_array());
            }
            manifest
                .summary
                .insert("skipped_points".into(), json!(field.skipped.len()));
            tables.push((
                "field_samples.csv".into(),
                table::field_samples(&field.samples),
            ));
        }
        "trajectory" => {
            let mut cache = PayoffCache::new(&cfg.experiment.base, cfg.replicator);
            let paths = cfg
                .starts
                .iter()
                .map(|&x0| integrate_trajectory(x0, &mut cache))
                .collect::<Result<Vec<_>, _>>()?;
            tables.push(("trajectories.csv".into(), table::trajectories(&paths)));
            tables.push(("endpoints.csv".into(), table::endpoints(&paths)));
        }
        _ => unreachable!("validate handled before execution"),
    }
    Ok(tables)
}
