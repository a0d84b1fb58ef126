//! Replicator dynamics on the strategy simplex with payoffs estimated by
//! Monte Carlo simulation of the learning step.

use std::collections::HashMap;

use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Agent, StrategyId};
use crate::population::{
    largest_remainder, learning_phase, PopulationConfig, PopulationState, SimRng,
};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::stats;

/// Strategy frequencies `(x_noai, x_complement, x_substitute)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexPoint<T> {
    x: [T; 3],
}

impl<T: Scalar> SimplexPoint<T> {
    pub fn new(x0: T, xc: T, xs: T) -> Result<Self> {
        let x = [x0, xc, xs];
        for (s, v) in StrategyId::ALL.iter().zip(x) {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::invalid(format!("x_{s}"), "must be in [0, 1]"));
            }
        }
        if ((x0 + xc + xs) - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::invalid("simplex point", "components must sum to 1"));
        }
        Ok(SimplexPoint { x })
    }

    /// Clips negatives to zero and rescales to unit sum.
    pub fn normalized(x: [T; 3]) -> Self {
        let c = x.map(|v| if v > T::zero() { v } else { T::zero() });
        let s = c[0] + c[1] + c[2];
        SimplexPoint {
            x: c.map(|v| v / s),
        }
    }

    pub fn vertex(s: StrategyId) -> Self {
        let mut x = [T::zero(); 3];
        x[s.index()] = T::one();
        SimplexPoint { x }
    }

    #[inline]
    pub fn get(&self, s: StrategyId) -> T {
        self.x[s.index()]
    }

    pub fn as_array(&self) -> [T; 3] {
        self.x
    }

    pub fn l1_distance(&self, other: &Self) -> T {
        (0..3).fold(T::zero(), |a, i| a + (self.x[i] - other.x[i]).abs())
    }
}

/// Mean post-learning skill per strategy at one composition.
///
/// Strategies with no agents at the composition have `None` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEstimate<T> {
    pub point: SimplexPoint<T>,
    pub payoff: [Option<T>; 3],
    pub std_error: [Option<T>; 3],
    pub replicates: usize,
}

impl<T: Scalar> PayoffEstimate<T> {
    pub fn get(&self, s: StrategyId) -> Option<T> {
        self.payoff[s.index()]
    }

    pub fn se(&self, s: StrategyId) -> Option<T> {
        self.std_error[s.index()]
    }

    /// True when some pair of present payoffs differs by less than their
    /// combined standard error.
    pub fn low_confidence(&self) -> bool {
        for a in 0..3 {
            for b in a + 1..3 {
                if let (Some(pa), Some(pb), Some(sa), Some(sb)) = (
                    self.payoff[a],
                    self.payoff[b],
                    self.std_error[a],
                    self.std_error[b],
                ) {
                    if (pa - pb).abs() < (sa * sa + sb * sb).sqrt() {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Replicator velocity at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample<T> {
    pub point: SimplexPoint<T>,
    pub velocity: [T; 3],
    pub speed: T,
    pub low_confidence: bool,
}

/// Monte Carlo settings for payoff estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSettings {
    pub replicates: usize,
    /// Learning steps run at fixed composition before payoffs are measured.
    pub warmup_steps: usize,
    pub seed: u64,
}

/// Agent counts per strategy for `x` in a population of `n`.
pub fn composition_counts<T: Scalar>(x: &SimplexPoint<T>, n: usize) -> Result<[usize; 3]> {
    let c = largest_remainder(&x.as_array(), n);
    let half = T::lit(0.5) / T::from_count(n);
    for s in StrategyId::ALL {
        if c[s.index()] == 0 && x.get(s) > half {
            return Err(Error::Composition {
                n,
                reason: format!("frequency {} of {s} rounds to zero agents", x.get(s)),
            });
        }
    }
    Ok([c[0], c[1], c[2]])
}

/// Estimates each strategy's expected post-learning skill at composition `x`.
///
/// Each replicate builds a well-mixed population with counts matching `x`,
/// optionally runs `warmup_steps` learning steps, then lets every agent learn
/// once from the population's best model and averages the outcome per
/// strategy. Means and standard errors are taken across replicates.
pub fn estimate_payoffs<T: Scalar>(
    x: &SimplexPoint<T>,
    config: &PopulationConfig<T>,
    settings: &PayoffSettings,
) -> Result<PayoffEstimate<T>> {
    if settings.replicates == 0 {
        return Err(Error::invalid("replicates", "must be >= 1"));
    }
    let n = config.n;
    let counts = composition_counts(x, n)?;
    let table = config.strategy_table();
    let template: Vec<Agent<T>> = StrategyId::ALL
        .iter()
        .flat_map(|&s| {
            let agent = Agent {
                skill: config.initial_skill,
                strategy: s,
                group: 0,
            };
            std::iter::repeat_n(agent, counts[s.index()])
        })
        .collect();

    let mut per_rep: [Vec<T>; 3] = Default::default();
    let mut state = PopulationState {
        step: 0,
        agents: template.clone(),
        rng: SimRng::seed_from_u64(0),
    };
    for r in 0..settings.replicates {
        state.agents.copy_from_slice(&template);
        state.rng = SimRng::seed_from_u64(derive_seed(settings.seed, r as u64, 0));
        for _ in 0..settings.warmup_steps {
            learning_phase(&mut state, &table, 1);
        }
        learning_phase(&mut state, &table, 1);
        let mut sums = [T::zero(); 3];
        for a in &state.agents {
            sums[a.strategy.index()] += a.skill;
        }
        for s in 0..3 {
            if counts[s] > 0 {
                per_rep[s].push(sums[s] / T::from_count(counts[s]));
            }
        }
    }

    let mut payoff = [None; 3];
    let mut std_error = [None; 3];
    for s in 0..3 {
        if counts[s] > 0 {
            payoff[s] = Some(stats::mean(&per_rep[s]));
            std_error[s] = Some(stats::standard_error(&per_rep[s]));
        }
    }
    Ok(PayoffEstimate {
        point: *x,
        payoff,
        std_error,
        replicates: settings.replicates,
    })
}

/// Replicator equation `x_s (pi_s - mean pi)` over strategies with payoffs.
///
/// The mean payoff is weighted over present strategies only, so the
/// velocity is tangent to the simplex even when a strategy with a
/// negligible frequency received no agents.
pub fn replicator_velocity<T: Scalar>(
    x: &SimplexPoint<T>,
    payoffs: &PayoffEstimate<T>,
) -> FieldSample<T> {
    let (mut weighted, mut mass) = (T::zero(), T::zero());
    for s in StrategyId::ALL {
        if let Some(p) = payoffs.get(s) {
            weighted += x.get(s) * p;
            mass += x.get(s);
        }
    }
    let mean = if mass > T::zero() {
        weighted / mass
    } else {
        T::zero()
    };
    let mut velocity = [T::zero(); 3];
    for s in StrategyId::ALL {
        if let Some(p) = payoffs.get(s) {
            if x.get(s) > T::zero() {
                velocity[s.index()] = x.get(s) * (p - mean);
            }
        }
    }
    let speed = velocity.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    FieldSample {
        point: *x,
        velocity,
        speed,
        low_confidence: payoffs.low_confidence(),
    }
}

/// Barycentric grid of resolution `g`: all `(i, j, k) / g` with `i + j + k = g`,
/// ordered by `i` then `j`.
pub fn simplex_grid(g: usize) -> Vec<[usize; 3]> {
    let mut pts = Vec::with_capacity((g + 1) * (g + 2) / 2);
    for i in 0..=g {
        for j in 0..=g - i {
            pts.push([i, j, g - i - j]);
        }
    }
    pts
}

/// Position of a grid triple in [`simplex_grid`] order.
pub fn grid_index(c: [usize; 3], g: usize) -> usize {
    let i = c[0];
    // rows before i hold (g+1) + g + ... + (g-i+2) points
    i * (g + 1) - i * (i.saturating_sub(1)) / 2 + c[1]
}

fn grid_point<T: Scalar>(c: [usize; 3], g: usize) -> SimplexPoint<T> {
    let gt = T::from_count(g);
    SimplexPoint {
        x: c.map(|k| T::from_count(k) / gt),
    }
}

/// Rounds `x` to the grid of resolution `g`, keeping every strategy with
/// positive frequency at one unit or more.
pub fn snap_to_grid<T: Scalar>(x: &SimplexPoint<T>, g: usize) -> [usize; 3] {
    let c = largest_remainder(&x.as_array(), g);
    let mut c = [c[0], c[1], c[2]];
    for s in 0..3 {
        if c[s] == 0 && x.x[s] > T::zero() {
            let donor = (0..3).max_by_key(|&i| (c[i], 3 - i)).unwrap();
            if c[donor] > 1 {
                c[donor] -= 1;
                c[s] += 1;
            }
        }
    }
    c
}

/// Settings for fields and trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicatorSettings<T> {
    pub grid: usize,
    pub payoff: PayoffSettings,
    pub dt: T,
    pub t_max: T,
    /// Integration stops once the speed drops below this value.
    pub min_speed: T,
}

impl<T: Scalar> ReplicatorSettings<T> {
    pub fn new(grid: usize, replicates: usize, warmup_steps: usize, seed: u64) -> Self {
        ReplicatorSettings {
            grid,
            payoff: PayoffSettings {
                replicates,
                warmup_steps,
                seed,
            },
            dt: T::lit(0.01),
            t_max: T::lit(100.0),
            min_speed: T::lit(1e-6),
        }
    }

    /// Payoff settings for the grid point with the given index; each point
    /// owns a substream of the master seed.
    fn for_point(&self, index: usize) -> PayoffSettings {
        PayoffSettings {
            seed: derive_seed(self.payoff.seed, 1 << 32, index as u64),
            ..self.payoff
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::invalid("grid", "must be >= 2"));
        }
        if self.payoff.replicates == 0 {
            return Err(Error::invalid("replicates", "must be >= 1"));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if !(self.t_max >= T::zero() && self.t_max.is_finite()) {
            return Err(Error::invalid("t_max", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Velocity field over the barycentric grid.
#[derive(Debug, Clone)]
pub struct Field<T> {
    pub samples: Vec<FieldSample<T>>,
    /// Grid points whose composition could not be represented.
    pub skipped: Vec<(SimplexPoint<T>, Error)>,
}

/// Evaluates the replicator velocity at every grid point.
pub fn build_field<T: Scalar>(
    config: &PopulationConfig<T>,
    settings: &ReplicatorSettings<T>,
) -> Result<Field<T>> {
    settings.validate()?;
    let g = settings.grid;
    let results: Vec<(SimplexPoint<T>, Result<PayoffEstimate<T>>)> = simplex_grid(g)
        .into_par_iter()
        .enumerate()
        .map(|(idx, c)| {
            let x = grid_point(c, g);
            (x, estimate_payoffs(&x, config, &settings.for_point(idx)))
        })
        .collect();
    let mut field = Field {
        samples: Vec::with_capacity(results.len()),
        skipped: Vec::new(),
    };
    for (x, est) in results {
        match est {
            Ok(p) => field.samples.push(replicator_velocity(&x, &p)),
            Err(e) => field.skipped.push((x, e)),
        }
    }
    Ok(field)
}

/// Memoizes payoff estimates by their snapped grid composition.
pub struct PayoffCache<'a, T> {
    config: &'a PopulationConfig<T>,
    settings: ReplicatorSettings<T>,
    entries: HashMap<[usize; 3], PayoffEstimate<T>>,
}

impl<'a, T: Scalar> PayoffCache<'a, T> {
    pub fn new(config: &'a PopulationConfig<T>, settings: ReplicatorSettings<T>) -> Self {
        PayoffCache {
            config,
            settings,
            entries: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Payoffs at the grid point nearest `x`, reusing earlier estimates.
    pub fn payoffs(&mut self, x: &SimplexPoint<T>) -> Result<PayoffEstimate<T>> {
        let g = self.settings.grid;
        let key = snap_to_grid(x, g);
        if let Some(p) = self.entries.get(&key) {
            return Ok(*p);
        }
        let point = grid_point(key, g);
        let est = estimate_payoffs(
            &point,
            self.config,
            &self.settings.for_point(grid_index(key, g)),
        )?;
        self.entries.insert(key, est);
        Ok(est)
    }

    pub fn velocity(&mut self, x: &SimplexPoint<T>) -> Result<FieldSample<T>> {
        let p = self.payoffs(x)?;
        Ok(replicator_velocity(x, &p))
    }
}

/// Point on an integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub point: SimplexPoint<T>,
}

/// Integrates the replicator equation from `x0` with classic fixed-step RK4.
///
/// After every step the state is clipped at zero and renormalized. The
/// returned sequence starts at `t = 0` and ends at `t_max` or at the first
/// point whose speed is below `min_speed`.
pub fn integrate_trajectory<T: Scalar>(
    x0: SimplexPoint<T>,
    cache: &mut PayoffCache<'_, T>,
) -> Result<Vec<TrajectoryPoint<T>>> {
    let settings = cache.settings;
    settings.validate()?;
    let dt = settings.dt;
    let half = dt / T::lit(2.0);
    let mut t = T::zero();
    let mut x = x0;
    let mut out = vec![TrajectoryPoint { t, point: x }];
    let add = |x: &SimplexPoint<T>, k: &[T; 3], h: T| {
        SimplexPoint::normalized([0, 1, 2].map(|i| x.x[i] + h * k[i]))
    };
    while t + dt <= settings.t_max + dt * T::lit(1e-9) {
        let f1 = cache.velocity(&x)?;
        if f1.speed < settings.min_speed {
            break;
        }
        let k1 = f1.velocity;
        let k2 = cache.velocity(&add(&x, &k1, half))?.velocity;
        let k3 = cache.velocity(&add(&x, &k2, half))?.velocity;
        let k4 = cache.velocity(&add(&x, &k3, dt))?.velocity;
        let six = T::lit(6.0);
        let two = T::lit(2.0);
        let next =
            [0, 1, 2].map(|i| x.x[i] + dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]));
        x = SimplexPoint::normalized(next);
        t += dt;
        out.push(TrajectoryPoint { t, point: x });
    }
    Ok(out)
}

/// Terminal-state label of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equilibrium {
    Vertex(StrategyId),
    Undetermined,
}

impl Equilibrium {
    pub fn label(&self) -> &'static str {
        match self {
            Equilibrium::Vertex(s) => s.as_str(),
            Equilibrium::Undetermined => "interior/undetermined",
        }
    }
}

/// Labels a point within L1 distance 0.05 of a vertex with that vertex.
pub fn classify_equilibrium<T: Scalar>(x: &SimplexPoint<T>) -> Equilibrium {
    StrategyId::ALL
        .into_iter()
        .find(|&s| x.l1_distance(&SimplexPoint::vertex(s)) <= T::lit(0.05))
        .map_or(Equilibrium::Undetermined, Equilibrium::Vertex)
}
