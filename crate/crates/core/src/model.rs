//! Agent-level learning model: strategies, the Gumbel learning draw and the
//! logistic strategy-adoption rule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// AI-use strategy of an agent.
///
/// The derived ordering (`NoAi < Complement < Substitute`) is the column
/// order used in every output file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyId {
    #[serde(rename = "noai")]
    NoAi,
    Complement,
    Substitute,
}

impl StrategyId {
    pub const ALL: [StrategyId; 3] = [
        StrategyId::NoAi,
        StrategyId::Complement,
        StrategyId::Substitute,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<StrategyId> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::NoAi => "noai",
            StrategyId::Complement => "complement",
            StrategyId::Substitute => "substitute",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "noai" | "no_ai" | "none" | "0" => Ok(StrategyId::NoAi),
            "complement" | "c" => Ok(StrategyId::Complement),
            "substitute" | "s" => Ok(StrategyId::Substitute),
            other => Err(Error::invalid(
                "strategy",
                format!("`{other}` is not one of noai, complement, substitute"),
            )),
        }
    }
}

/// Baseline learning error `alpha` and dispersion `beta` (skill units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseLearningParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> BaseLearningParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let p = BaseLearningParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > T::zero()) {
            return Err(Error::invalid("alpha", "must be finite and > 0"));
        }
        if !(self.beta.is_finite() && self.beta > T::zero()) {
            return Err(Error::invalid("beta", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Proportional reductions applied to `(alpha, beta)` by the two AI strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiEffects<T> {
    pub r_alpha_c: T,
    pub r_beta_c: T,
    pub r_alpha_s: T,
    pub r_beta_s: T,
}

impl<T: Scalar> AiEffects<T> {
    pub fn zero() -> Self {
        AiEffects {
            r_alpha_c: T::zero(),
            r_beta_c: T::zero(),
            r_alpha_s: T::zero(),
            r_beta_s: T::zero(),
        }
    }

    /// Checks every reduction lies in `[0, 1)` and, unless `allow_unordered`
    /// is set, that Substitute reduces both parameters strictly more than
    /// Complement.
    pub fn validate(&self, allow_unordered: bool) -> Result<()> {
        let fields = [
            ("r_alpha_c", self.r_alpha_c),
            ("r_beta_c", self.r_beta_c),
            ("r_alpha_s", self.r_alpha_s),
            ("r_beta_s", self.r_beta_s),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(name, "must be >= 0"));
            }
            if v >= T::one() {
                return Err(Error::invalid(name, "must be < 1"));
            }
        }
        if !allow_unordered {
            if self.r_alpha_s <= self.r_alpha_c {
                return Err(Error::invalid(
                    "r_alpha_s",
                    "must be > r_alpha_c (set allow_unordered_effects to relax)",
                ));
            }
            if self.r_beta_s <= self.r_beta_c {
                return Err(Error::invalid(
                    "r_beta_s",
                    "must be > r_beta_c (set allow_unordered_effects to relax)",
                ));
            }
        }
        Ok(())
    }
}

/// Effective learning parameters of one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams<T> {
    pub strategy: StrategyId,
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> StrategyParams<T> {
    /// Mean of the learning draw relative to the model's skill.
    pub fn expected_shift(&self) -> T {
        T::EULER_GAMMA * self.beta - self.alpha
    }
}

/// Effective parameters of all three strategies, indexed by [`StrategyId::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyTable<T>(pub [StrategyParams<T>; 3]);

impl<T: Scalar> StrategyTable<T> {
    pub fn new(base: BaseLearningParams<T>, effects: AiEffects<T>) -> Self {
        StrategyTable(StrategyId::ALL.map(|s| derive_strategy_params(base, effects, s)))
    }

    #[inline]
    pub fn get(&self, s: StrategyId) -> &StrategyParams<T> {
        &self.0[s.index()]
    }
}

/// One member of the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent<T> {
    pub skill: T,
    pub strategy: StrategyId,
    pub group: usize,
}

/// Scales the baseline parameters by the strategy's reductions.
pub fn derive_strategy_params<T: Scalar>(
    base: BaseLearningParams<T>,
    effects: AiEffects<T>,
    s: StrategyId,
) -> StrategyParams<T> {
    let (ra, rb) = match s {
        StrategyId::NoAi => {
            return StrategyParams {
                strategy: s,
                alpha: base.alpha,
                beta: base.beta,
            }
        }
        StrategyId::Complement => (effects.r_alpha_c, effects.r_beta_c),
        StrategyId::Substitute => (effects.r_alpha_s, effects.r_beta_s),
    };
    StrategyParams {
        strategy: s,
        alpha: base.alpha * (T::one() - ra),
        beta: base.beta * (T::one() - rb),
    }
}

/// Draws a post-learning skill from a Gumbel (max) distribution with
/// location `model_skill - alpha` and scale `beta`, by inverse transform.
#[inline]
pub fn sample_learning_outcome<T: Scalar, R: Rng + ?Sized>(
    model_skill: T,
    params: &StrategyParams<T>,
    rng: &mut R,
) -> T {
    let u = T::open_unit(rng);
    model_skill - params.alpha - params.beta * (-u.ln()).ln()
}

/// Probability that an agent with skill `z_i` copies the strategy of a
/// partner with skill `z_k`: `1 / (1 + exp(-delta (z_k - z_i)))`.
#[inline]
pub fn adoption_probability<T: Scalar>(z_k: T, z_i: T, delta: T) -> T {
    let d = delta * (z_k - z_i);
    if d >= T::zero() {
        T::one() / (T::one() + (-d).exp())
    } else {
        let e = d.exp();
        e / (T::one() + e)
    }
}
