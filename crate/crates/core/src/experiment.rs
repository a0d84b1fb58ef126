//! Repetition batches and parameter sweeps over population simulations.

use std::fmt;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::StrategyId;
use crate::population::{
    run, AdopterPlan, GroupAssignment, OutsideScope, PopulationConfig, SimRng, StepRecord,
};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::stats;

/// Default cap on `sweep points x repetitions`; a request must stay below it.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Generations an arm must stay ahead for a crossover to count.
pub const CROSSOVER_WINDOW: usize = 10;

/// Value assigned to a sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for SweepValue {
    fn from(x: f64) -> Self {
        SweepValue::Number(x)
    }
}

impl From<&str> for SweepValue {
    fn from(s: &str) -> Self {
        SweepValue::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<SweepValue>,
}

/// Aggregate series an experiment should emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputKind {
    MedianSkill,
    Adoption,
    Strips,
    Dominance,
    Crossover,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] = [
        OutputKind::MedianSkill,
        OutputKind::Adoption,
        OutputKind::Strips,
        OutputKind::Dominance,
        OutputKind::Crossover,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::MedianSkill => "median_skill",
            OutputKind::Adoption => "adoption",
            OutputKind::Strips => "strips",
            OutputKind::Dominance => "dominance",
            OutputKind::Crossover => "crossover",
        }
    }

    pub fn parse(s: &str) -> Option<OutputKind> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Compares two arms that differ only in the value of `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverSpec {
    pub axis: String,
    pub leader: SweepValue,
    pub trailer: SweepValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<T> {
    pub name: String,
    pub base: PopulationConfig<T>,
    pub axes: Vec<SweepAxis>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub outputs: Vec<OutputKind>,
    pub budget: u64,
    pub crossover: Option<CrossoverSpec>,
}

impl<T: Scalar> ExperimentConfig<T> {
    pub fn new(name: impl Into<String>, base: PopulationConfig<T>) -> Self {
        ExperimentConfig {
            name: name.into(),
            base,
            axes: Vec::new(),
            repetitions: 1,
            master_seed: 0,
            outputs: vec![OutputKind::MedianSkill, OutputKind::Adoption],
            budget: DEFAULT_BUDGET,
            crossover: None,
        }
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Coordinates of every sweep point; the first axis varies slowest.
    pub fn sweep_points(&self) -> Vec<Vec<SweepValue>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Base config with the overrides of one sweep point applied.
    pub fn config_at(&self, coords: &[SweepValue]) -> Result<PopulationConfig<T>> {
        let mut c = self.base.clone();
        for (axis, v) in self.axes.iter().zip(coords) {
            apply_override(&mut c, &axis.path, v)?;
        }
        Ok(c)
    }

    /// Checks the budget, repetitions and every sweep point's config.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        let runs = self.point_count() as u64 * self.repetitions as u64;
        if runs >= self.budget {
            return Err(Error::Budget {
                runs,
                budget: self.budget,
            });
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::invalid(
                    format!("axes.{}", axis.path),
                    "needs at least one value",
                ));
            }
        }
        for coords in self.sweep_points() {
            self.config_at(&coords)?.validate()?;
        }
        if let Some(x) = &self.crossover {
            let axis = self
                .axes
                .iter()
                .find(|a| a.path == x.axis)
                .ok_or_else(|| Error::SweepPath(x.axis.clone()))?;
            for v in [&x.leader, &x.trailer] {
                if !axis.values.contains(v) {
                    return Err(Error::invalid(
                        "crossover",
                        format!("value `{v}` is not on axis `{}`", x.axis),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn number<T: Scalar>(path: &str, v: &SweepValue) -> Result<T> {
    match v {
        SweepValue::Number(x) => Ok(T::lit(*x)),
        SweepValue::Text(_) => Err(Error::SweepValue {
            path: path.to_string(),
            reason: "expected a number".into(),
        }),
    }
}

fn count(path: &str, v: &SweepValue) -> Result<usize> {
    match v {
        SweepValue::Number(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
        _ => Err(Error::SweepValue {
            path: path.to_string(),
            reason: "expected a non-negative integer".into(),
        }),
    }
}

fn text<'a>(path: &str, v: &'a SweepValue) -> Result<&'a str> {
    match v {
        SweepValue::Text(s) => Ok(s),
        SweepValue::Number(_) => Err(Error::SweepValue {
            path: path.to_string(),
            reason: "expected a string".into(),
        }),
    }
}

/// Sets one config field addressed by a sweep path.
///
/// Paths: `n`, `m`, `steps`, `seed`, `alpha`, `beta`, `delta`,
/// `in_group_rate`, `initial_skill`, `r_alpha_c`, `r_beta_c`, `r_alpha_s`,
/// `r_beta_s`, `assignment`, `outside_scope`, `adopters.fraction` (cycle plans) and
/// `adopters.<i>.{group,strategy,fraction}` (explicit plans).
pub fn apply_override<T: Scalar>(
    c: &mut PopulationConfig<T>,
    path: &str,
    v: &SweepValue,
) -> Result<()> {
    match path {
        "n" => c.n = count(path, v)?,
        "m" => c.m = count(path, v)?,
        "steps" => c.steps = count(path, v)?,
        "seed" => c.seed = count(path, v)? as u64,
        "alpha" => c.base.alpha = number(path, v)?,
        "beta" => c.base.beta = number(path, v)?,
        "delta" => c.delta = number(path, v)?,
        "in_group_rate" => c.in_group_rate = number(path, v)?,
        "initial_skill" => c.initial_skill = number(path, v)?,
        "r_alpha_c" => c.effects.r_alpha_c = number(path, v)?,
        "r_beta_c" => c.effects.r_beta_c = number(path, v)?,
        "r_alpha_s" => c.effects.r_alpha_s = number(path, v)?,
        "r_beta_s" => c.effects.r_beta_s = number(path, v)?,
        "assignment" => {
            c.assignment = match text(path, v)? {
                "uniform" => GroupAssignment::Uniform,
                "equal_sizes" => GroupAssignment::EqualSizes,
                other => {
                    return Err(Error::SweepValue {
                        path: path.into(),
                        reason: format!("unknown assignment `{other}`"),
                    })
                }
            }
        }
        "outside_scope" => {
            c.outside_scope = match text(path, v)? {
                "out_group" => OutsideScope::OutGroup,
                "population" => OutsideScope::Population,
                other => {
                    return Err(Error::SweepValue {
                        path: path.into(),
                        reason: format!("unknown scope `{other}`"),
                    })
                }
            }
        }
        "adopters.fraction" => match &mut c.initial_adopters {
            AdopterPlan::Cycle { fraction } => *fraction = number(path, v)?,
            AdopterPlan::Explicit(_) => return Err(Error::SweepPath(path.into())),
        },
        _ => {
            let parts: Vec<&str> = path.split('.').collect();
            let AdopterPlan::Explicit(specs) = &mut c.initial_adopters else {
                return Err(Error::SweepPath(path.into()));
            };
            match parts.as_slice() {
                ["adopters", idx, field] => {
                    let i: usize = idx.parse().map_err(|_| Error::SweepPath(path.into()))?;
                    let spec = specs
                        .get_mut(i)
                        .ok_or_else(|| Error::SweepPath(path.into()))?;
                    match *field {
                        "group" => spec.group = count(path, v)?,
                        "fraction" => spec.fraction = number(path, v)?,
                        "strategy" => spec.strategy = text(path, v)?.parse()?,
                        _ => return Err(Error::SweepPath(path.into())),
                    }
                }
                _ => return Err(Error::SweepPath(path.into())),
            }
        }
    }
    Ok(())
}

/// Per-run series kept for aggregation.
#[derive(Debug, Clone)]
pub struct RunSummary<T> {
    pub medians: Vec<T>,
    pub shares: Vec<[T; 3]>,
    pub group_shares: Vec<Vec<[T; 3]>>,
    pub final_dominant: Option<StrategyId>,
}

impl<T: Scalar> RunSummary<T> {
    pub fn from_records(records: &[StepRecord<T>]) -> Self {
        let groups = records.first().map_or(0, |r| r.groups.len());
        let last = records.last().expect("at least the initial record");
        RunSummary {
            medians: records.iter().map(|r| r.population.median).collect(),
            shares: records.iter().map(|r| r.population.shares).collect(),
            group_shares: (0..groups)
                .map(|g| records.iter().map(|r| r.groups[g].shares).collect())
                .collect(),
            final_dominant: last.population.dominant(),
        }
    }
}

/// Cross-repetition statistics at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStep<T> {
    pub step: usize,
    pub median_of_medians: T,
    /// Standard error of the per-run medians across repetitions.
    pub se: T,
    pub mean_shares: [T; 3],
}

/// Aggregated outcome of all repetitions at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRecord<T> {
    pub point: usize,
    pub coords: Vec<(String, SweepValue)>,
    pub steps: Vec<AggregateStep<T>>,
    /// Mean strategy shares per group and step.
    pub group_shares: Vec<Vec<[T; 3]>>,
    /// Strategy with mean final share above one half.
    pub final_dominant: Option<StrategyId>,
    /// Fraction of repetitions ending dominated by each strategy, then by none.
    pub dominance_fractions: [T; 4],
    pub final_medians: Vec<T>,
    /// First generation at which this arm durably leads its crossover
    /// partner (`Some(None)` when it never does).
    pub crossover: Option<Option<usize>>,
}

impl<T: Scalar> AggregateRecord<T> {
    pub fn coordinate(&self, path: &str) -> Option<&SweepValue> {
        self.coords.iter().find(|(p, _)| p == path).map(|(_, v)| v)
    }

    pub fn medians(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.median_of_medians).collect()
    }

    pub fn dominance_fraction(&self, s: Option<StrategyId>) -> T {
        self.dominance_fractions[s.map_or(3, StrategyId::index)]
    }
}

/// Reduces repetitions of one sweep point. Order of `runs` is irrelevant.
pub fn aggregate<T: Scalar>(
    point: usize,
    coords: Vec<(String, SweepValue)>,
    runs: &[RunSummary<T>],
) -> AggregateRecord<T> {
    let reps = runs.len();
    let steps = runs[0].medians.len();
    let r = T::from_count(reps);
    let mut buf = Vec::with_capacity(reps);
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        buf.clear();
        buf.extend(runs.iter().map(|run| run.medians[t]));
        // sort first so the floating point sums do not depend on run order
        buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let se = stats::standard_error(&buf);
        let median_of_medians = stats::median_in_place(&mut buf);
        let mut mean_shares = [T::zero(); 3];
        for s in 0..3 {
            let mut col: Vec<T> = runs.iter().map(|run| run.shares[t][s]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            mean_shares[s] = col.iter().fold(T::zero(), |a, &x| a + x) / r;
        }
        out.push(AggregateStep {
            step: t,
            median_of_medians,
            se,
            mean_shares,
        });
    }
    let groups = runs[0].group_shares.len();
    let group_shares = (0..groups)
        .map(|g| {
            (0..steps)
                .map(|t| {
                    let mut acc = [T::zero(); 3];
                    for s in 0..3 {
                        let mut col: Vec<T> =
                            runs.iter().map(|run| run.group_shares[g][t][s]).collect();
                        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        acc[s] = col.iter().fold(T::zero(), |a, &x| a + x) / r;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut dom = [0usize; 4];
    for run in runs {
        dom[run.final_dominant.map_or(3, StrategyId::index)] += 1;
    }
    let last = out.last().expect("non-empty series");
    let final_dominant = StrategyId::ALL
        .into_iter()
        .find(|s| last.mean_shares[s.index()] > T::lit(0.5));
    let mut final_medians: Vec<T> = runs
        .iter()
        .map(|run| *run.medians.last().unwrap())
        .collect();
    final_medians.sort_by(|a, b| a.partial_cmp(b).unwrap());
    AggregateRecord {
        point,
        coords,
        steps: out,
        group_shares,
        final_dominant,
        dominance_fractions: dom.map(|k| T::from_count(k) / r),
        final_medians,
        crossover: None,
    }
}

/// First generation where `leader` exceeds `trailer` and keeps doing so for
/// `window` consecutive generations.
pub fn crossover_generation<T: Scalar>(
    leader: &[T],
    trailer: &[T],
    window: usize,
) -> Option<usize> {
    let len = leader.len().min(trailer.len());
    let ahead: Vec<bool> = (0..len).map(|t| leader[t] > trailer[t]).collect();
    (0..len).find(|&g| g + window <= len && ahead[g..g + window].iter().all(|&a| a))
}

/// Runs every sweep point `repetitions` times and aggregates.
///
/// Run seeds are `derive_seed(master_seed, point, repetition)`, so results
/// do not depend on scheduling or on the thread count.
pub fn run_experiment<T: Scalar>(config: &ExperimentConfig<T>) -> Result<Vec<AggregateRecord<T>>> {
    config.validate()?;
    let points = config.sweep_points();
    let reps = config.repetitions;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    let summaries: Vec<RunSummary<T>> = jobs
        .into_par_iter()
        .map(|(p, r)| {
            let mut c = config.config_at(&points[p])?;
            c.seed = derive_seed(config.master_seed, p as u64, r as u64);
            Ok(RunSummary::from_records(&run(&c)?))
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<AggregateRecord<T>> = points
        .iter()
        .enumerate()
        .map(|(p, coords)| {
            let named = config
                .axes
                .iter()
                .map(|a| a.path.clone())
                .zip(coords.iter().cloned())
                .collect();
            aggregate(p, named, &summaries[p * reps..(p + 1) * reps])
        })
        .collect();

    if let Some(x) = &config.crossover {
        let axis = config.axes.iter().position(|a| a.path == x.axis).unwrap();
        for p in 0..points.len() {
            if points[p][axis] != x.leader {
                continue;
            }
            let partner = (0..points.len()).find(|&q| {
                points[q][axis] == x.trailer
                    && (0..points[q].len()).all(|i| i == axis || points[q][i] == points[p][i])
            });
            if let Some(q) = partner {
                let g = crossover_generation(
                    &records[p].medians(),
                    &records[q].medians(),
                    CROSSOVER_WINDOW,
                );
                records[p].crossover = Some(g);
            }
        }
    }
    Ok(records)
}

/// Complement dominance at one in-group rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateDominance<T> {
    pub in_group_rate: T,
    /// Fractions of repetitions ending dominated by NoAI, Complement,
    /// Substitute, or none.
    pub fractions: [T; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceSummary<T> {
    pub rates: Vec<RateDominance<T>>,
    /// Smallest swept rate at which Complement dominates more than half the
    /// repetitions.
    pub threshold: Option<T>,
}

/// Sweeps the in-group rate and reports Complement dominance per rate.
pub fn dominance_threshold<T: Scalar>(
    config: &ExperimentConfig<T>,
    rates: &[f64],
) -> Result<DominanceSummary<T>> {
    let mut exp = config.clone();
    exp.axes = vec![SweepAxis {
        path: "in_group_rate".into(),
        values: rates.iter().map(|&r| SweepValue::Number(r)).collect(),
    }];
    exp.crossover = None;
    summarize_dominance(&run_experiment(&exp)?)
}

/// Builds the dominance summary from records of an `in_group_rate` sweep.
pub fn summarize_dominance<T: Scalar>(
    records: &[AggregateRecord<T>],
) -> Result<DominanceSummary<T>> {
    let mut rates: Vec<RateDominance<T>> = records
        .iter()
        .map(|r| match r.coordinate("in_group_rate") {
            Some(SweepValue::Number(g)) => Ok(RateDominance {
                in_group_rate: T::lit(*g),
                fractions: r.dominance_fractions,
            }),
            _ => Err(Error::SweepPath("in_group_rate".into())),
        })
        .collect::<Result<_>>()?;
    rates.sort_by(|a, b| a.in_group_rate.partial_cmp(&b.in_group_rate).unwrap());
    let threshold = rates
        .iter()
        .find(|r| r.fractions[StrategyId::Complement.index()] > T::lit(0.5))
        .map(|r| r.in_group_rate);
    Ok(DominanceSummary { rates, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell<T> {
    pub d_alpha: T,
    pub d_beta: T,
    pub final_median: T,
}

/// How heatmap cells are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatmapCells {
    /// Cartesian product of the two value lists.
    Grid { d_alpha: Vec<f64>, d_beta: Vec<f64> },
    /// `count` points drawn uniformly from `[0, 1)^2` with `seed`.
    Uniform { count: usize, seed: u64 },
}

impl HeatmapCells {
    pub fn validate(&self) -> Result<()> {
        match self {
            HeatmapCells::Grid { d_alpha, d_beta } => {
                for (name, axis) in [("d_alpha", d_alpha), ("d_beta", d_beta)] {
                    if axis.len() < 5 {
                        return Err(Error::invalid(name, "needs at least 5 values"));
                    }
                    if axis.iter().any(|v| !(0.0..1.0).contains(v)) {
                        return Err(Error::invalid(name, "values must be in [0, 1)"));
                    }
                }
            }
            HeatmapCells::Uniform { count, .. } => {
                if *count == 0 {
                    return Err(Error::invalid("sample_uniform", "must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// Final median skill of a homogeneous population whose baseline
/// parameters are scaled by `(1 - d_alpha, 1 - d_beta)`.
///
/// Every cell runs with the base config's seed, so cell `(0, 0)` reproduces
/// the unmodified baseline run.
pub fn skill_heatmap<T: Scalar>(
    base: &PopulationConfig<T>,
    cells: &HeatmapCells,
) -> Result<Vec<HeatmapCell<T>>> {
    cells.validate()?;
    let coords: Vec<(f64, f64)> = match cells {
        HeatmapCells::Grid { d_alpha, d_beta } => d_alpha
            .iter()
            .flat_map(|&a| d_beta.iter().map(move |&b| (a, b)))
            .collect(),
        HeatmapCells::Uniform { count, seed } => {
            let mut rng = SimRng::seed_from_u64(*seed);
            (0..*count)
                .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
                .collect()
        }
    };
    let mut homogeneous = base.clone();
    homogeneous.initial_adopters = AdopterPlan::none();
    homogeneous.validate()?;
    coords
        .into_par_iter()
        .map(|(da, db)| {
            let mut c = homogeneous.clone();
            c.base.alpha *= T::one() - T::lit(da);
            c.base.beta *= T::one() - T::lit(db);
            let records = run(&c)?;
            Ok(HeatmapCell {
                d_alpha: T::lit(da),
                d_beta: T::lit(db),
                final_median: records.last().unwrap().population.median,
            })
        })
        .collect()
}
