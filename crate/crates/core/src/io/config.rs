//! TOML run configuration: presets, defaults and validation.
//!
//! A file is a flat table of model parameters plus optional `[[sweep]]`,
//! `[crossover]`, `[replicator]` and `[heatmap]` sections. Naming a preset
//! with `experiment = "..."` loads its table first; keys in the file then
//! override it, merging nested tables key by key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::error::Error;
use crate::experiment::{
    CrossoverSpec, ExperimentConfig, HeatmapCells, OutputKind, SweepAxis, SweepValue,
    DEFAULT_BUDGET,
};
use crate::model::{AiEffects, BaseLearningParams, StrategyId};
use crate::population::{
    AdopterPlan, AdopterSpec, GroupAssignment, OutsideScope, PopulationConfig,
};
use crate::replicator::{ReplicatorSettings, SimplexPoint};

/// Names accepted by the `experiment` key.
pub const PRESETS: [&str; 8] = [
    "baseline",
    "fig4",
    "fig5",
    "fig6",
    "fig6-mixed",
    "fig7a",
    "fig7c",
    "supp2",
];

const FIG4_EFFECTS: &str = r#"
r_alpha_c = 0.2
r_beta_c = 0.05
r_alpha_s = 0.5
r_beta_s = 0.5
"#;

const GROUP_EFFECTS: &str = r#"
m = 3
in_group_rate = 0.85
r_alpha_c = 0.2
r_beta_c = 0.4
r_alpha_s = 0.2
r_beta_s = 0.5
outputs = ["median_skill", "adoption", "strips", "dominance"]
"#;

fn preset_source(name: &str) -> Option<String> {
    let body = match name {
        "baseline" => "p = 0.0\n".to_string(),
        "fig4" => format!(
            r#"{FIG4_EFFECTS}
repetitions = 100
outputs = ["median_skill", "adoption", "crossover"]
adopters = [{{ group = 0, strategy = "complement" }}]

[[sweep]]
path = "adopters.0.strategy"
values = ["complement", "substitute"]

[crossover]
axis = "adopters.0.strategy"
leader = "complement"
trailer = "substitute"
"#
        ),
        "fig5" => format!("{FIG4_EFFECTS}\n[replicator]\nwarmup_steps = 5\n"),
        "fig6" => GROUP_EFFECTS.to_string(),
        "fig6-mixed" => {
            format!("{GROUP_EFFECTS}\nin_group_rate = 0.0\n").replace("in_group_rate = 0.85\n", "")
        }
        "fig7a" => r#"
alpha = 0.2
p = 0.0

[heatmap]
d_alpha = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
d_beta = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
"#
        .to_string(),
        "fig7c" => format!(
            r#"{GROUP_EFFECTS}
repetitions = 100

[[sweep]]
path = "in_group_rate"
values = [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99]
"#
        ),
        "supp2" => GROUP_EFFECTS.replace("m = 3", "m = 10\nassignment = \"equal_sizes\""),
        _ => return None,
    };
    Some(body)
}

/// One `adopters` entry; `fraction` falls back to `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdopterEntry {
    #[serde(default)]
    pub group: usize,
    pub strategy: StrategyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossoverEntry {
    pub axis: String,
    pub leader: toml::Value,
    pub trailer: toml::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicatorEntry {
    pub grid: usize,
    pub replicates: usize,
    pub warmup_steps: usize,
    pub dt: f64,
    pub t_max: f64,
    pub min_speed: f64,
    /// Starting compositions `[x_noai, x_complement, x_substitute]`.
    pub starts: Vec<[f64; 3]>,
}

impl Default for ReplicatorEntry {
    fn default() -> Self {
        ReplicatorEntry {
            grid: 15,
            replicates: 1000,
            warmup_steps: 0,
            dt: 0.01,
            t_max: 100.0,
            min_speed: 1e-6,
            starts: vec![
                [0.6, 0.2, 0.2],
                [0.2, 0.6, 0.2],
                [0.2, 0.2, 0.6],
                [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                [0.8, 0.1, 0.1],
                [0.1, 0.8, 0.1],
                [0.45, 0.45, 0.1],
                [0.45, 0.1, 0.45],
                [0.1, 0.45, 0.45],
                [0.7, 0.25, 0.05],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapEntry {
    #[serde(default)]
    pub d_alpha: Vec<f64>,
    #[serde(default)]
    pub d_beta: Vec<f64>,
    /// Draw this many cells uniformly instead of using the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_uniform: Option<usize>,
}

/// The configuration document with every default materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub steps: usize,
    #[serde(alias = "G")]
    pub in_group_rate: f64,
    /// Early-adopter fraction.
    pub p: f64,
    /// Explicit adopter list; when absent, groups cycle through
    /// NoAI, Complement and Substitute seeds at fraction `p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adopters: Option<Vec<AdopterEntry>>,
    pub r_alpha_c: f64,
    pub r_beta_c: f64,
    pub r_alpha_s: f64,
    pub r_beta_s: f64,
    pub allow_unordered_effects: bool,
    pub initial_skill: f64,
    pub assignment: GroupAssignment,
    pub outside_scope: OutsideScope,
    pub seed: u64,
    pub repetitions: usize,
    pub budget: u64,
    pub outputs: Vec<String>,
    pub sweep: Vec<SweepEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossover: Option<CrossoverEntry>,
    pub replicator: ReplicatorEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<HeatmapEntry>,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            experiment: None,
            name: "run".into(),
            n: 1000,
            m: 1,
            alpha: 1.0,
            beta: 0.5,
            delta: 10.0,
            steps: 1000,
            in_group_rate: 1.0,
            p: 0.1,
            adopters: None,
            r_alpha_c: 0.0,
            r_beta_c: 0.0,
            r_alpha_s: 0.0,
            r_beta_s: 0.0,
            allow_unordered_effects: true,
            initial_skill: 0.0,
            assignment: GroupAssignment::Uniform,
            outside_scope: OutsideScope::OutGroup,
            seed: 0,
            repetitions: 1,
            budget: DEFAULT_BUDGET,
            outputs: vec!["median_skill".into(), "adoption".into()],
            sweep: Vec::new(),
            crossover: None,
            replicator: ReplicatorEntry::default(),
            heatmap: None,
        }
    }
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Resolved document, recorded in the manifest.
    pub file: FileConfig,
    pub experiment: ExperimentConfig<f64>,
    pub replicator: ReplicatorSettings<f64>,
    pub starts: Vec<SimplexPoint<f64>>,
    pub heatmap: Option<HeatmapCells>,
}

impl RunConfig {
    /// Replaces the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.file.seed = seed;
        self.experiment.master_seed = seed;
        self.experiment.base.seed = seed;
        self.replicator.payoff.seed = seed;
        if let Some(HeatmapCells::Uniform { seed: s, .. }) = &mut self.heatmap {
            *s = seed;
        }
    }

    /// Switches the heatmap to `count` uniformly drawn cells.
    pub fn set_sample_uniform(&mut self, count: usize) {
        self.heatmap = Some(HeatmapCells::Uniform {
            count,
            seed: self.file.seed,
        });
        let entry = self.file.heatmap.get_or_insert(HeatmapEntry {
            d_alpha: Vec::new(),
            d_beta: Vec::new(),
            sample_uniform: None,
        });
        entry.sample_uniform = Some(count);
    }

    pub fn set_budget(&mut self, budget: u64) {
        self.file.budget = budget;
        self.experiment.budget = budget;
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.experiment.validate()?;
        self.replicator.validate()?;
        if let Some(h) = &self.heatmap {
            h.validate()?;
        }
        Ok(())
    }
}

/// Reads, merges and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text).map_err(|e| e.with_path(path))
}

/// Same as [`parse_config`] for an in-memory document.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let user: toml::Table = toml::from_str(text).map_err(|e| ConfigError::parse(text, &e))?;
    // Checks key names and value types against the user's own text so the
    // error can point at a line.
    let _: FileConfig = toml::from_str(text).map_err(|e| ConfigError::parse(text, &e))?;

    let mut merged = match user.get("experiment") {
        Some(toml::Value::String(name)) => {
            let src =
                preset_source(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?;
            let mut preset: toml::Table = toml::from_str(&src).expect("preset tables parse");
            preset.insert("name".into(), toml::Value::String(name.clone()));
            preset
        }
        _ => toml::Table::new(),
    };
    merge(&mut merged, user);
    let file: FileConfig =
        toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse {
                path: None,
                line: 0,
                column: 0,
                message: e.message().to_string(),
            })?;
    let run = build(file)?;
    run.validate()?;
    Ok(run)
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn sweep_value(field: &str, v: &toml::Value) -> Result<SweepValue, Error> {
    match v {
        toml::Value::Integer(i) => Ok(SweepValue::Number(*i as f64)),
        toml::Value::Float(x) => Ok(SweepValue::Number(*x)),
        toml::Value::String(s) => Ok(SweepValue::Text(s.clone())),
        _ => Err(Error::SweepValue {
            path: field.to_string(),
            reason: "expected a number or a string".into(),
        }),
    }
}

fn build(file: FileConfig) -> Result<RunConfig, Error> {
    let initial_adopters = match &file.adopters {
        Some(list) => AdopterPlan::Explicit(
            list.iter()
                .map(|a| AdopterSpec {
                    group: a.group,
                    strategy: a.strategy,
                    fraction: a.fraction.unwrap_or(file.p),
                })
                .collect(),
        ),
        None if file.p == 0.0 => AdopterPlan::none(),
        None => AdopterPlan::Cycle { fraction: file.p },
    };
    if !(0.0..=1.0).contains(&file.p) {
        return Err(Error::Invalid {
            field: "p".into(),
            constraint: "must be in [0, 1]".into(),
        });
    }
    let base = PopulationConfig {
        n: file.n,
        m: file.m,
        base: BaseLearningParams::new(file.alpha, file.beta)?,
        effects: AiEffects {
            r_alpha_c: file.r_alpha_c,
            r_beta_c: file.r_beta_c,
            r_alpha_s: file.r_alpha_s,
            r_beta_s: file.r_beta_s,
        },
        delta: file.delta,
        steps: file.steps,
        in_group_rate: file.in_group_rate,
        initial_adopters,
        seed: file.seed,
        assignment: file.assignment,
        outside_scope: file.outside_scope,
        allow_unordered_effects: file.allow_unordered_effects,
        initial_skill: file.initial_skill,
    };

    let mut experiment = ExperimentConfig::new(file.name.clone(), base);
    experiment.repetitions = file.repetitions;
    experiment.master_seed = file.seed;
    experiment.budget = file.budget;
    experiment.outputs = file
        .outputs
        .iter()
        .map(|o| {
            OutputKind::parse(o).ok_or_else(|| Error::Invalid {
                field: "outputs".into(),
                constraint: format!("unknown output `{o}`"),
            })
        })
        .collect::<Result<_, _>>()?;
    experiment.axes = file
        .sweep
        .iter()
        .map(|s| {
            Ok(SweepAxis {
                path: s.path.clone(),
                values: s
                    .values
                    .iter()
                    .map(|v| sweep_value(&s.path, v))
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<_, Error>>()?;
    experiment.crossover = match &file.crossover {
        Some(c) => Some(CrossoverSpec {
            axis: c.axis.clone(),
            leader: sweep_value("crossover.leader", &c.leader)?,
            trailer: sweep_value("crossover.trailer", &c.trailer)?,
        }),
        None => None,
    };

    let r = &file.replicator;
    let mut replicator = ReplicatorSettings::new(r.grid, r.replicates, r.warmup_steps, file.seed);
    replicator.dt = r.dt;
    replicator.t_max = r.t_max;
    replicator.min_speed = r.min_speed;
    let starts = r
        .starts
        .iter()
        .map(|&[a, b, c]| SimplexPoint::new(a, b, c))
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Invalid {
            field: "replicator.starts".into(),
            constraint: "each start must be non-negative and sum to 1".into(),
        })?;

    let heatmap = file.heatmap.as_ref().map(|h| match h.sample_uniform {
        Some(count) => HeatmapCells::Uniform {
            count,
            seed: file.seed,
        },
        None => HeatmapCells::Grid {
            d_alpha: h.d_alpha.clone(),
            d_beta: h.d_beta.clone(),
        },
    });

    Ok(RunConfig {
        file,
        experiment,
        replicator,
        starts,
        heatmap,
    })
}
