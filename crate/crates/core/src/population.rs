//! Population dynamics: repeated social learning from the group's best
//! model followed by payoff-biased adoption of AI-use strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    adoption_probability, sample_learning_outcome, Agent, AiEffects, BaseLearningParams,
    StrategyId, StrategyTable,
};
use crate::scalar::Scalar;
use crate::stats;

/// Random stream used by every simulation.
pub type SimRng = ChaCha8Rng;

/// How agents are split into groups at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAssignment {
    /// Each agent joins a group drawn uniformly at random.
    #[default]
    Uniform,
    /// Contiguous blocks whose sizes differ by at most one; the first
    /// `n mod m` groups get the extra agent.
    EqualSizes,
}

/// Where an adoption partner is drawn from when it is not drawn from the
/// agent's own group (probability `1 - in_group_rate`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutsideScope {
    /// Members of other groups only.
    #[default]
    OutGroup,
    /// Anyone in the population except the agent itself.
    Population,
}

/// Seeds a fraction of one group with a strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdopterSpec<T> {
    pub group: usize,
    pub strategy: StrategyId,
    pub fraction: T,
}

/// Which agents start with an AI strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum AdopterPlan<T> {
    Explicit(Vec<AdopterSpec<T>>),
    /// Groups cycle through no adopters, Complement adopters and Substitute
    /// adopters (`g mod 3`), each seeded at `fraction`. With fewer than three
    /// groups every group gets both AI strategies at `fraction / 3`, which
    /// keeps the population-level starting shares of the three-group layout.
    Cycle {
        fraction: T,
    },
}

impl<T: Scalar> AdopterPlan<T> {
    pub fn none() -> Self {
        AdopterPlan::Explicit(Vec::new())
    }

    pub fn resolve(&self, m: usize) -> Vec<AdopterSpec<T>> {
        match self {
            AdopterPlan::Explicit(v) => v.clone(),
            AdopterPlan::Cycle { fraction } if m < 3 => (0..m)
                .flat_map(|g| {
                    [StrategyId::Complement, StrategyId::Substitute].map(|strategy| AdopterSpec {
                        group: g,
                        strategy,
                        fraction: *fraction / T::lit(3.0),
                    })
                })
                .collect(),
            AdopterPlan::Cycle { fraction } => (0..m)
                .filter_map(|g| {
                    let strategy = StrategyId::ALL[g % 3];
                    (strategy != StrategyId::NoAi).then_some(AdopterSpec {
                        group: g,
                        strategy,
                        fraction: *fraction,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationConfig<T> {
    pub n: usize,
    pub m: usize,
    pub base: BaseLearningParams<T>,
    pub effects: AiEffects<T>,
    /// Selection strength of the adoption rule.
    pub delta: T,
    pub steps: usize,
    /// Probability that an adoption partner is drawn from the agent's own group.
    pub in_group_rate: T,
    pub initial_adopters: AdopterPlan<T>,
    pub seed: u64,
    pub assignment: GroupAssignment,
    pub outside_scope: OutsideScope,
    pub allow_unordered_effects: bool,
    /// Skill every agent starts with.
    pub initial_skill: T,
}

impl<T: Scalar> PopulationConfig<T> {
    /// A single well-mixed group with the default table values
    /// (alpha 1, beta 0.5, N 1000, delta 10, 1000 steps) and no adopters.
    pub fn baseline() -> Self {
        PopulationConfig {
            n: 1000,
            m: 1,
            base: BaseLearningParams {
                alpha: T::one(),
                beta: T::lit(0.5),
            },
            effects: AiEffects::zero(),
            delta: T::lit(10.0),
            steps: 1000,
            in_group_rate: T::one(),
            initial_adopters: AdopterPlan::none(),
            seed: 0,
            assignment: GroupAssignment::Uniform,
            outside_scope: OutsideScope::default(),
            allow_unordered_effects: true,
            initial_skill: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", "must be >= 2"));
        }
        if self.m < 1 {
            return Err(Error::invalid("m", "must be >= 1"));
        }
        if self.m > self.n {
            return Err(Error::invalid("m", "must not exceed n"));
        }
        self.base.validate()?;
        self.effects.validate(self.allow_unordered_effects)?;
        if !(self.delta.is_finite() && self.delta > T::zero()) {
            return Err(Error::invalid("delta", "must be finite and > 0"));
        }
        if !(self.in_group_rate >= T::zero() && self.in_group_rate <= T::one()) {
            return Err(Error::invalid("in_group_rate", "must be in [0, 1]"));
        }
        if !self.initial_skill.is_finite() {
            return Err(Error::invalid("initial_skill", "must be finite"));
        }
        let mut totals = vec![T::zero(); self.m];
        if let AdopterPlan::Cycle { fraction } = self.initial_adopters {
            if !(fraction >= T::zero() && fraction <= T::one()) {
                return Err(Error::invalid("adopters.fraction", "must be in [0, 1]"));
            }
        }
        for (i, a) in self.initial_adopters.resolve(self.m).iter().enumerate() {
            if a.group >= self.m {
                return Err(Error::invalid(
                    format!("adopters[{i}].group"),
                    format!("must be < m = {}", self.m),
                ));
            }
            if !(a.fraction >= T::zero() && a.fraction <= T::one()) {
                return Err(Error::invalid(
                    format!("adopters[{i}].fraction"),
                    "must be in [0, 1]",
                ));
            }
            totals[a.group] += a.fraction;
        }
        for (g, t) in totals.iter().enumerate() {
            if *t > T::one() + T::lit(1e-9) {
                return Err(Error::invalid(
                    "adopters",
                    format!("fractions for group {g} sum to {t}, must be <= 1"),
                ));
            }
        }
        Ok(())
    }

    /// In-group rate actually used: one group means every partner is in-group.
    pub fn effective_in_group_rate(&self) -> T {
        if self.m == 1 {
            T::one()
        } else {
            self.in_group_rate
        }
    }

    pub fn strategy_table(&self) -> StrategyTable<T> {
        StrategyTable::new(self.base, self.effects)
    }
}

/// Simulation state at one step.
#[derive(Debug, Clone)]
pub struct PopulationState<T> {
    pub step: usize,
    pub agents: Vec<Agent<T>>,
    pub rng: SimRng,
}

/// Group membership, fixed for the lifetime of a run.
#[derive(Debug, Clone)]
pub struct GroupLayout {
    pub members: Vec<Vec<usize>>,
    /// Position of each agent inside its group's member list.
    position: Vec<usize>,
}

impl GroupLayout {
    pub fn from_agents<T>(agents: &[Agent<T>], m: usize) -> Self {
        let mut members = vec![Vec::new(); m];
        let mut position = vec![0; agents.len()];
        for (i, a) in agents.iter().enumerate() {
            position[i] = members[a.group].len();
            members[a.group].push(i);
        }
        GroupLayout { members, position }
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }

    fn in_group_partner<R: Rng + ?Sized>(&self, i: usize, g: usize, rng: &mut R) -> Option<usize> {
        let own = &self.members[g];
        if own.len() < 2 {
            return None;
        }
        let mut r = rng.gen_range(0..own.len() - 1);
        if r >= self.position[i] {
            r += 1;
        }
        Some(own[r])
    }

    fn out_group_partner<R: Rng + ?Sized>(&self, g: usize, n: usize, rng: &mut R) -> Option<usize> {
        let total = n - self.members[g].len();
        if total == 0 {
            return None;
        }
        let mut r = rng.gen_range(0..total);
        for (h, ms) in self.members.iter().enumerate() {
            if h == g {
                continue;
            }
            if r < ms.len() {
                return Some(ms[r]);
            }
            r -= ms.len();
        }
        unreachable!("partner index within out-group total")
    }

    fn any_partner<R: Rng + ?Sized>(&self, i: usize, n: usize, rng: &mut R) -> usize {
        let k = rng.gen_range(0..n - 1);
        if k >= i {
            k + 1
        } else {
            k
        }
    }
}

/// Largest-remainder apportionment of `total` items by `weights`.
///
/// Floors first, then hands the leftover units to the largest fractional
/// parts; ties go to the lower index.
pub fn largest_remainder<T: Scalar>(weights: &[T], total: usize) -> Vec<usize> {
    let sum = weights.iter().fold(T::zero(), |a, &w| a + w);
    let exact: Vec<T> = weights
        .iter()
        .map(|&w| w / sum * T::from_count(total))
        .collect();
    let mut counts: Vec<usize> = exact
        .iter()
        .map(|e| e.floor().to_usize().unwrap_or(0))
        .collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Creates the initial population: groups, seeded adopters, uniform skill.
pub fn init_population<T: Scalar>(config: &PopulationConfig<T>) -> Result<PopulationState<T>> {
    config.validate()?;
    let mut rng = SimRng::seed_from_u64(config.seed);
    let n = config.n;
    let m = config.m;

    let groups: Vec<usize> = if m == 1 {
        vec![0; n]
    } else {
        match config.assignment {
            GroupAssignment::Uniform => (0..n).map(|_| rng.gen_range(0..m)).collect(),
            GroupAssignment::EqualSizes => {
                let sizes = largest_remainder(&vec![T::one(); m], n);
                sizes
                    .iter()
                    .enumerate()
                    .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
                    .collect()
            }
        }
    };

    let mut agents: Vec<Agent<T>> = groups
        .into_iter()
        .map(|group| Agent {
            skill: config.initial_skill,
            strategy: StrategyId::NoAi,
            group,
        })
        .collect();

    let layout = GroupLayout::from_agents(&agents, m);
    for (g, members) in layout.members.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::invalid(
                "m",
                format!("group {g} received no agents; use equal_sizes or a larger n"),
            ));
        }
    }

    let mut next_free = vec![0usize; m];
    for spec in &config.initial_adopters.resolve(m) {
        let members = &layout.members[spec.group];
        let size = members.len();
        let mut count = (spec.fraction * T::from_count(size))
            .round()
            .to_usize()
            .unwrap_or(0);
        if spec.fraction > T::zero() {
            count = count.max(1);
        }
        let start = next_free[spec.group];
        let end = (start + count).min(size);
        for &i in &members[start..end] {
            agents[i].strategy = spec.strategy;
        }
        next_free[spec.group] = end;
    }

    Ok(PopulationState {
        step: 0,
        agents,
        rng,
    })
}

/// Index of the highest-skilled agent of every group; ties go to the lowest index.
pub fn group_best<T: Scalar>(agents: &[Agent<T>], m: usize) -> Vec<Option<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; m];
    for (i, a) in agents.iter().enumerate() {
        let slot = &mut best[a.group];
        match *slot {
            Some(j) if agents[j].skill >= a.skill => {}
            _ => *slot = Some(i),
        }
    }
    best
}

/// Every agent re-learns from its group's current best model.
pub fn learning_phase<T: Scalar>(
    state: &mut PopulationState<T>,
    table: &StrategyTable<T>,
    m: usize,
) {
    let best = group_best(&state.agents, m);
    let model_skill: Vec<T> = best
        .iter()
        .map(|b| b.map(|j| state.agents[j].skill).unwrap_or_else(T::zero))
        .collect();
    let rng = &mut state.rng;
    for a in state.agents.iter_mut() {
        a.skill = sample_learning_outcome(model_skill[a.group], table.get(a.strategy), rng);
    }
}

/// Every agent samples one partner and may copy the partner's strategy.
///
/// Decisions read the strategies held at the start of the phase.
pub fn adoption_phase<T: Scalar>(
    state: &mut PopulationState<T>,
    layout: &GroupLayout,
    in_group_rate: T,
    outside: OutsideScope,
    delta: T,
) {
    let n = state.agents.len();
    let multi = layout.group_count() > 1;
    let before: Vec<StrategyId> = state.agents.iter().map(|a| a.strategy).collect();
    let rng = &mut state.rng;
    for i in 0..n {
        let g = state.agents[i].group;
        let in_group = !multi || T::unit(rng) < in_group_rate;
        let partner = if in_group {
            layout
                .in_group_partner(i, g, rng)
                .or_else(|| layout.out_group_partner(g, n, rng))
        } else {
            match outside {
                OutsideScope::OutGroup => layout
                    .out_group_partner(g, n, rng)
                    .or_else(|| layout.in_group_partner(i, g, rng)),
                OutsideScope::Population => Some(layout.any_partner(i, n, rng)),
            }
        };
        let Some(k) = partner else { continue };
        if before[k] == before[i] {
            continue;
        }
        let p = adoption_probability(state.agents[k].skill, state.agents[i].skill, delta);
        if T::unit(rng) < p {
            state.agents[i].strategy = before[k];
        }
    }
}

/// Summary statistics of one scope (a group or the whole population).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScopeStats<T> {
    pub count: usize,
    pub median: T,
    pub mean: T,
    pub max: T,
    pub variance: T,
    /// Fractions of NoAI, Complement and Substitute users.
    pub shares: [T; 3],
}

impl<T: Scalar> ScopeStats<T> {
    fn compute(agents: &[Agent<T>], idx: impl Iterator<Item = usize>, buf: &mut Vec<T>) -> Self {
        buf.clear();
        let mut counts = [0usize; 3];
        for i in idx {
            buf.push(agents[i].skill);
            counts[agents[i].strategy.index()] += 1;
        }
        let count = buf.len();
        let mean = stats::mean(buf);
        let variance = stats::variance(buf);
        let max = buf.iter().copied().fold(T::neg_infinity(), T::max);
        let median = stats::median_in_place(buf);
        let c = T::from_count(count);
        ScopeStats {
            count,
            median,
            mean,
            max,
            variance,
            shares: counts.map(|k| T::from_count(k) / c),
        }
    }

    pub fn share(&self, s: StrategyId) -> T {
        self.shares[s.index()]
    }

    /// Strategy held by more than half of the scope, if any.
    pub fn dominant(&self) -> Option<StrategyId> {
        StrategyId::ALL
            .into_iter()
            .find(|s| self.share(*s) > T::lit(0.5))
    }
}

/// Population-wide and per-group statistics after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub step: usize,
    pub population: ScopeStats<T>,
    pub groups: Vec<ScopeStats<T>>,
}

/// A running simulation: configuration, derived tables and mutable state.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    config: PopulationConfig<T>,
    table: StrategyTable<T>,
    layout: GroupLayout,
    state: PopulationState<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> Simulation<T> {
    pub fn new(config: PopulationConfig<T>) -> Result<Self> {
        let state = init_population(&config)?;
        let layout = GroupLayout::from_agents(&state.agents, config.m);
        Ok(Simulation {
            table: config.strategy_table(),
            config,
            layout,
            state,
            scratch: Vec::new(),
        })
    }

    pub fn config(&self) -> &PopulationConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &PopulationState<T> {
        &self.state
    }

    pub fn layout(&self) -> &GroupLayout {
        &self.layout
    }

    pub fn learn(&mut self) {
        learning_phase(&mut self.state, &self.table, self.config.m);
    }

    pub fn adopt(&mut self) {
        adoption_phase(
            &mut self.state,
            &self.layout,
            self.config.effective_in_group_rate(),
            self.config.outside_scope,
            self.config.delta,
        );
    }

    /// One full iteration: learning, then adoption.
    pub fn step(&mut self) {
        self.learn();
        self.adopt();
        self.state.step += 1;
    }

    pub fn record(&mut self) -> StepRecord<T> {
        let agents = &self.state.agents;
        let population = ScopeStats::compute(agents, 0..agents.len(), &mut self.scratch);
        let groups = if self.config.m > 1 {
            self.layout
                .members
                .iter()
                .map(|ms| ScopeStats::compute(agents, ms.iter().copied(), &mut self.scratch))
                .collect()
        } else {
            vec![population]
        };
        StepRecord {
            step: self.state.step,
            population,
            groups,
        }
    }
}

/// Runs a full simulation, returning the initial record followed by one
/// record per iteration.
pub fn run<T: Scalar>(config: &PopulationConfig<T>) -> Result<Vec<StepRecord<T>>> {
    let mut sim = Simulation::new(config.clone())?;
    let mut records = Vec::with_capacity(config.steps + 1);
    records.push(sim.record());
    for _ in 0..config.steps {
        sim.step();
        records.push(sim.record());
    }
    Ok(records)
}
