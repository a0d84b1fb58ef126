//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even
//! when earlier criteria fail. Exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use cce_core::cli::cli_main;
use cce_core::experiment::{run_experiment, summarize_dominance, AggregateRecord};
use cce_core::io::parse_config_str;
use cce_core::replicator::{build_field, integrate_trajectory, PayoffCache, SimplexPoint};
use cce_core::{
    adoption_probability, run, sample_learning_outcome, PopulationConfig, StrategyId,
    StrategyParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn preset(body: &str) -> cce_core::io::RunConfig {
    parse_config_str(body).unwrap_or_else(|e| panic!("preset config: {e}"))
}

fn gumbel_moments() -> Outcome {
    let params = StrategyParams {
        strategy: StrategyId::NoAi,
        alpha: 1.0,
        beta: 0.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| sample_learning_outcome(0.0, &params, &mut rng))
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let want_mean = -1.0 + 0.5 * EULER_GAMMA;
    let want_var = 0.25 * std::f64::consts::PI.powi(2) / 6.0;
    let rel = (var - want_var).abs() / want_var;
    outcome(
        (mean - want_mean).abs() <= 0.01 && rel <= 0.05,
        format!("mean {mean:.5} (want {want_mean:.4} ± 0.01), variance {var:.5} (want {want_var:.4} ± 5%, off {:.2}%)", rel * 100.0),
    )
}

fn logistic_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(-50.0..50.0);
        let b: f64 = rng.gen_range(-50.0..50.0);
        let delta: f64 = rng.gen_range(0.01..100.0);
        let s = adoption_probability(a, b, delta) + adoption_probability(b, a, delta);
        worst = worst.max((s - 1.0).abs());
    }
    let mid = [0.0f64, 3.7, -12.5]
        .iter()
        .all(|&a| adoption_probability(a, a, 10.0) == 0.5);
    outcome(
        worst <= 1e-12 && mid,
        format!("max |p(a,b)+p(b,a)-1| = {worst:.2e}, p(a,a) = 0.5 exactly: {mid}"),
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn growth_rate() -> Outcome {
    let config = PopulationConfig::<f64>::baseline();
    let records = run(&config).unwrap();
    let steps: Vec<f64> = (100..=1000).map(|s| s as f64).collect();
    let maxima: Vec<f64> = (100..=1000).map(|s| records[s].population.max).collect();
    let oracle = 0.5 * (EULER_GAMMA + 1000f64.ln()) - 1.0;
    let fitted = slope(&steps, &maxima);
    let rel = (fitted - oracle).abs() / oracle;
    outcome(
        rel <= 0.10,
        format!(
            "slope {fitted:.4} vs oracle {oracle:.4} ({:.2}% off, limit 10%)",
            rel * 100.0
        ),
    )
}

fn figure4_crossover() -> Outcome {
    let cfg = preset("experiment = \"fig4\"\n");
    let records = run_experiment(&cfg.experiment).unwrap();
    let arm = |s: &str| -> &AggregateRecord<f64> {
        records
            .iter()
            .find(|r| r.coordinate("adopters.0.strategy") == Some(&s.into()))
            .unwrap()
    };
    let (c, s) = (arm("complement"), arm("substitute"));
    let (cm, sm) = (c.medians(), s.medians());
    let Some(Some(g)) = c.crossover else {
        return outcome(
            false,
            "Complement arm never crosses above Substitute arm".into(),
        );
    };
    let stays = (g..cm.len()).all(|t| cm[t] > sm[t]);
    let first_behind = (1..cm.len()).find(|&t| cm[t] < sm[t]);
    let lead_at = |t: usize| cm[t] - sm[t];
    outcome(
        (8..=40).contains(&g) && stays,
        format!(
            "crossover at generation {g} (want 8..=40), stays above through step {}: {stays}; \
             Substitute ahead first at step {first_behind:?}; C-S median lead at steps 1/5/18/1000: {:.3}/{:.3}/{:.3}/{:.3}",
            cm.len() - 1,
            lead_at(1),
            lead_at(5),
            lead_at(18),
            lead_at(1000)
        ),
    )
}

fn figure5_attractor() -> Outcome {
    let cfg = preset("experiment = \"fig5\"\n");
    let settings = cfg.replicator;
    assert_eq!(
        (
            settings.grid,
            settings.payoff.replicates,
            settings.payoff.warmup_steps
        ),
        (15, 1000, 5)
    );
    let field = build_field(&cfg.experiment.base, &settings).unwrap();
    let max_sum = field
        .samples
        .iter()
        .map(|s| s.velocity.iter().sum::<f64>().abs())
        .fold(0.0, f64::max);
    let vertex_speed = field
        .samples
        .iter()
        .filter(|s| s.point.as_array().iter().filter(|&&x| x > 0.0).count() == 1)
        .map(|s| s.speed)
        .fold(0.0, f64::max);

    let target = SimplexPoint::vertex(StrategyId::Substitute);
    let mut cache = PayoffCache::new(&cfg.experiment.base, settings);
    let mut distances = Vec::new();
    for &x0 in &cfg.starts {
        let path = integrate_trajectory(x0, &mut cache).unwrap();
        distances.push(path.last().unwrap().point.l1_distance(&target));
    }
    let worst = distances.iter().cloned().fold(0.0, f64::max);
    let interior = cfg
        .starts
        .iter()
        .all(|x| x.as_array().iter().all(|&v| v > 0.0));
    outcome(
        cfg.starts.len() == 10
            && interior
            && worst <= 0.05
            && vertex_speed == 0.0
            && max_sum <= 1e-9
            && field.skipped.is_empty(),
        format!(
            "{} interior starts, worst final L1 distance to Substitute {worst:.2e} (limit 0.05); \
             max vertex speed {vertex_speed:e}; max |sum velocity| {max_sum:.1e}; {} grid points",
            cfg.starts.len(),
            field.samples.len()
        ),
    )
}

fn dominance_fractions(body: &str) -> [f64; 4] {
    let cfg = preset(body);
    run_experiment(&cfg.experiment).unwrap()[0].dominance_fractions
}

fn fmt_fractions(f: &[f64; 4]) -> String {
    format!(
        "NoAI {:.2}, C {:.2}, S {:.2}, none {:.2}",
        f[0], f[1], f[2], f[3]
    )
}

fn figure6_dichotomy() -> Outcome {
    let structured = dominance_fractions("experiment = \"fig6\"\nrepetitions = 100\n");
    let mixed = dominance_fractions("experiment = \"fig6-mixed\"\nrepetitions = 100\n");
    let ok_s = structured[StrategyId::Complement.index()] >= 0.70;
    let ok_m = mixed[StrategyId::Substitute.index()] >= 0.70;
    outcome(
        ok_s && ok_m,
        format!(
            "structured G1=0.85: {} (C >= 0.70: {ok_s}); mixed G1=0: {} (S >= 0.70: {ok_m})",
            fmt_fractions(&structured),
            fmt_fractions(&mixed)
        ),
    )
}

fn figure7c_threshold() -> Outcome {
    let cfg = preset("experiment = \"fig7c\"\n");
    let summary = summarize_dominance(&run_experiment(&cfg.experiment).unwrap()).unwrap();
    let ok = matches!(summary.threshold, Some(g) if g == 0.9 || g == 0.99);
    let per_rate: Vec<String> = summary
        .rates
        .iter()
        .map(|r| {
            format!(
                "G={}: C {:.2} S {:.2}",
                r.in_group_rate, r.fractions[1], r.fractions[2]
            )
        })
        .collect();
    outcome(
        ok,
        format!(
            "threshold {:?} (want 0.9 or 0.99); {}",
            summary.threshold,
            per_rate.join("; ")
        ),
    )
}

fn supp2_generalization() -> Outcome {
    let f = dominance_fractions("experiment = \"supp2\"\nrepetitions = 50\n");
    outcome(
        f[1] > 0.5,
        format!(
            "m=10 structured over 50 seeds: {} (want C > 0.5)",
            fmt_fractions(&f)
        ),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .filter(|(n, _)| n.ends_with(".csv"))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("run", "experiment = \"fig6\"\nn = 300\nsteps = 100\n"),
        ("experiment", "experiment = \"fig4\"\nn = 200\nsteps = 100\nrepetitions = 8\n"),
        ("experiment", "experiment = \"fig7c\"\nn = 150\nsteps = 60\nrepetitions = 4\n"),
        ("experiment", "experiment = \"fig7a\"\nn = 200\nsteps = 30\n"),
        ("field", "experiment = \"fig5\"\nn = 200\n[replicator]\ngrid = 6\nreplicates = 20\n"),
        ("trajectory", "experiment = \"fig5\"\nn = 200\n[replicator]\ngrid = 6\nreplicates = 20\nt_max = 5.0\n"),
    ];
    let mut failures = Vec::new();
    let mut compared = 0;
    for (i, (sub, body)) in cases.iter().enumerate() {
        let cfg = tmp.path().join(format!("c{i}.toml"));
        fs::write(&cfg, body).unwrap();
        let mut snaps = Vec::new();
        for (rep, threads) in [(0, "1"), (1, "1"), (2, "4"), (3, "0")] {
            let out = tmp.path().join(format!("o{i}_{rep}"));
            let argv = [
                "cce",
                sub,
                "--config",
                &cfg.display().to_string(),
                "--seed",
                "77",
                "--threads",
                threads,
                "--out",
                &out.display().to_string(),
            ];
            if cli_main(argv) != 0 {
                failures.push(format!("{sub} exited non-zero"));
            }
            snaps.push(snapshot(&out));
        }
        compared += snaps[0].len();
        if snaps.iter().any(|s| s != &snaps[0] || s.is_empty()) {
            failures.push(format!(
                "{sub} case {i} differs across re-runs or thread counts"
            ));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} subcommand cases x 4 runs (threads 1, 1, 4, auto), {compared} CSVs byte-identical", cases.len())
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "Gumbel moments",
            gumbel_moments,
            Some(Duration::from_secs(5)),
        ),
        ("Logistic rule", logistic_rule, Some(Duration::from_secs(1))),
        (
            "Growth-rate oracle",
            growth_rate,
            Some(Duration::from_secs(30)),
        ),
        ("Figure 4 crossover", figure4_crossover, None),
        ("Figure 5 attractor", figure5_attractor, None),
        ("Figure 6 dichotomy", figure6_dichotomy, None),
        ("Figure 7c threshold", figure7c_threshold, None),
        ("Supp Figure 2 generalization", supp2_generalization, None),
        ("Determinism", determinism, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let mut o = check();
        let took = start.elapsed();
        if let Some(limit) = limit {
            if took > limit {
                o.pass = false;
                o.detail
                    .push_str(&format!("; runtime {took:.2?} exceeds {limit:?}"));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{took:.2?}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
