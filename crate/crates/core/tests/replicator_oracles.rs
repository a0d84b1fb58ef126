//! Monte Carlo payoffs and replicator velocities against analytic values.

use cce_core::replicator::{
    build_field, estimate_payoffs, replicator_velocity, PayoffSettings, ReplicatorSettings,
    SimplexPoint,
};
use cce_core::{AiEffects, PopulationConfig, StrategyId};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn fig4() -> PopulationConfig<f64> {
    let mut c = PopulationConfig::baseline();
    c.effects = AiEffects {
        r_alpha_c: 0.2,
        r_beta_c: 0.05,
        r_alpha_s: 0.5,
        r_beta_s: 0.5,
    };
    c
}

/// Mean of a Gumbel learning draw around a model skill of 0.
fn analytic_payoff(alpha: f64, beta: f64) -> f64 {
    -alpha + EULER_GAMMA * beta
}

#[test]
fn standard_errors_shrink_with_replicates() {
    let config = fig4();
    let x = SimplexPoint::new(0.4, 0.3, 0.3).unwrap();
    let settings = |replicates, seed| PayoffSettings {
        replicates,
        warmup_steps: 0,
        seed,
    };
    // A single R=100 standard error scatters by about 7%, so the reference
    // is the root mean square over independent batches.
    let batches: Vec<_> = (0..20)
        .map(|seed| estimate_payoffs(&x, &config, &settings(100, 100 + seed)).unwrap())
        .collect();
    let large = estimate_payoffs(&x, &config, &settings(10_000, 8)).unwrap();
    for s in StrategyId::ALL {
        let a = (batches
            .iter()
            .map(|e| e.se(s).unwrap().powi(2))
            .sum::<f64>()
            / 20.0)
            .sqrt();
        let b = large.se(s).unwrap();
        assert!(b < 0.11 * a, "{s}: se {b} at R=1e4 vs {a} at R=100");
    }
}

#[test]
fn payoffs_order_substitute_complement_noai() {
    let config = fig4();
    let expected = [
        analytic_payoff(1.0, 0.5),
        analytic_payoff(0.8, 0.475),
        analytic_payoff(0.5, 0.25),
    ];
    for x in [[0.4, 0.3, 0.3], [0.1, 0.1, 0.8], [0.8, 0.1, 0.1]] {
        let point = SimplexPoint::new(x[0], x[1], x[2]).unwrap();
        let est = estimate_payoffs(
            &point,
            &config,
            &PayoffSettings {
                replicates: 10_000,
                warmup_steps: 0,
                seed: 1,
            },
        )
        .unwrap();
        let p = est.payoff.map(Option::unwrap);
        let se = est.std_error.map(Option::unwrap);
        for s in 0..3 {
            assert!(
                (p[s] - expected[s]).abs() < 3.0 * se[s],
                "{x:?}: strategy {s} {} vs {}",
                p[s],
                expected[s]
            );
        }
        for (hi, lo) in [(2, 1), (1, 0)] {
            let pooled = (se[hi] * se[hi] + se[lo] * se[lo]).sqrt();
            assert!(p[hi] - p[lo] > 3.0 * pooled, "{x:?}: {hi} vs {lo}");
        }
    }
}

#[test]
fn hand_evaluated_velocity() {
    let x = SimplexPoint::new(0.0, 0.5, 0.5).unwrap();
    let est = cce_core::replicator::PayoffEstimate {
        point: x,
        payoff: [None, Some(1.0), Some(2.0)],
        std_error: [None, Some(0.0), Some(0.0)],
        replicates: 1,
    };
    let v = replicator_velocity(&x, &est).velocity;
    assert_eq!(v, [0.0, -0.25, 0.25]);
}

#[test]
fn field_has_one_sample_per_grid_point() {
    let mut config = fig4();
    config.n = 120;
    for g in [2, 5, 8] {
        let settings = ReplicatorSettings::new(g, 5, 1, 3);
        let field = build_field(&config, &settings).unwrap();
        assert_eq!(
            field.samples.len() + field.skipped.len(),
            (g + 1) * (g + 2) / 2
        );
        for s in &field.samples {
            assert!(s.velocity.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
