//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use vtt::experiment::{run_experiment, DatasetSource, ExperimentSpec, MueSource, SyntheticProfile};
use vtt::formats::session::write_session;
use vtt::report::parse_aggregate;
use vtt_core::gp::prior_split;
use vtt_core::mue::mix_seed;
use vtt_core::{
    answer_grid, generate_dataset, gp_posterior, run_session, session_seed,
    skewed_prevalence, BandMeasure, ConfidenceDistribution, Dataset, KernelParams, Mue,
    Observation, ProbabilityMatrix, Question, SessionConfig, SessionLog, StrategyKind,
    SyntheticMue, SyntheticMueSpec,
};

const N_SAMPLES: usize = 200;
const N_CONCEPTS: usize = 11;
const POOL_SEED: u64 = 42;
const REPEATS: usize = 10;

/// 200 × 11 pool, prevalence decaying from 60% to 5%.
fn skewed_pool() -> Dataset {
    generate_dataset(N_SAMPLES, &skewed_prevalence(N_CONCEPTS, 0.6, 0.05), POOL_SEED).unwrap()
}

fn biased_mue(d: &Dataset, repeat: usize) -> SyntheticMue {
    SyntheticMue::new(SyntheticMueSpec::biased(d, mix_seed(7, repeat as u64)).unwrap()).unwrap()
}

/// SplitMix64 stream mapped to [0, 1).
struct Stream(u64);

impl Stream {
    fn next(&mut self) -> f64 {
        self.0 = mix_seed(self.0, 0);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.next() * n as f64) as usize).min(n - 1)
    }
}

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(limit: Duration, start: Instant, verdict: Verdict) -> Verdict {
    let elapsed = start.elapsed();
    let verdict = verdict.map(|d| format!("{d}, {elapsed:.2?}"));
    match verdict {
        Ok(d) if elapsed > limit => Err(format!("{d} exceeds {limit:?}")),
        other => other,
    }
}

/// Dense Gauss-Jordan solve with partial pivoting; `b` holds several right-hand sides.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in 0..n {
                    a[row][k] -= f * a[col][k];
                }
                for k in 0..b[row].len() {
                    b[row][k] -= f * b[col][k];
                }
            }
        }
    }
    (0..n).map(|i| b[i].iter().map(|v| v / a[i][i]).collect()).collect()
}

fn gp_oracle() -> Verdict {
    let start = Instant::now();
    let params = KernelParams::default();
    let k = |x: f64, y: f64| params.signal_variance * (-(x - y).powi(2) / (2.0 * params.length_scale.powi(2))).exp();
    let grid = answer_grid();
    let mut stream = Stream(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 1 + stream.below(5);
        let mut bins: Vec<usize> = Vec::new();
        while bins.len() < n {
            let b = stream.below(101);
            if !bins.contains(&b) {
                bins.push(b);
            }
        }
        let obs: Vec<Observation> = bins
            .iter()
            .map(|&b| Observation { location: b as f64 / 100.0, value: (1 + stream.below(6)) as f64 })
            .collect();
        let curve = gp_posterior(&obs, &grid, &params).unwrap();

        let gram: Vec<Vec<f64>> = obs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                obs.iter()
                    .enumerate()
                    .map(|(j, q)| k(p.location, q.location) + if i == j { params.noise_variance } else { 0.0 })
                    .collect()
            })
            .collect();
        // Right-hand sides: the targets, then one cross-covariance column per grid point.
        let rhs: Vec<Vec<f64>> = obs
            .iter()
            .map(|p| std::iter::once(p.value).chain(grid.iter().map(|&g| k(p.location, g))).collect())
            .collect();
        let sol = dense_solve(gram, rhs);
        for (g, &x) in grid.iter().enumerate() {
            let cross: Vec<f64> = obs.iter().map(|p| k(p.location, x)).collect();
            let mean: f64 = cross.iter().zip(&sol).map(|(c, s)| c * s[0]).sum();
            let var = k(x, x) - cross.iter().zip(&sol).map(|(c, s)| c * s[g + 1]).sum::<f64>();
            worst = worst
                .max((mean - curve.mean[g]).abs())
                .max((var.max(0.0) - curve.variance[g]).abs());
        }
    }
    timed(Duration::from_secs(1), start, check(worst <= 1e-9, format!("max deviation {worst:.1e} over 100 sets")))
}

fn prior_uncertainty() -> Verdict {
    let split = prior_split(&KernelParams::default(), BandMeasure::StdDev).unwrap();
    check(
        split.lower == 2.0 && split.upper == 2.0 && split.total() == 4.0,
        format!("u- = {}, u+ = {}, total = {}", split.lower, split.upper, split.total()),
    )
}

/// Full-pool sessions for every strategy and repeat on the biased source.
fn full_sessions(d: &Dataset) -> Vec<(StrategyKind, SessionLog)> {
    let jobs: Vec<(StrategyKind, usize)> = StrategyKind::ALL
        .iter()
        .flat_map(|&s| (0..REPEATS).map(move |r| (s, r)))
        .collect();
    jobs.par_iter()
        .map(|&(strategy, repeat)| {
            let config = SessionConfig {
                strategy,
                max_questions: N_SAMPLES * N_CONCEPTS,
                seed: session_seed(11, repeat as u64, strategy),
                ..Default::default()
            };
            (strategy, run_session(&config, d, &mut biased_mue(d, repeat)).unwrap())
        })
        .collect()
}

fn monotone(logs: &[(StrategyKind, SessionLog)], start: Instant) -> Verdict {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut steps = 0;
    for (_, log) in logs {
        let mut prev = log.initial.total;
        for snap in &log.trace {
            worst_rise = worst_rise.max(snap.total - prev);
            prev = snap.total;
            steps += 1;
        }
    }
    let complete = logs.iter().all(|(_, l)| l.len() == N_SAMPLES * N_CONCEPTS);
    timed(
        Duration::from_secs(60),
        start,
        check(
            complete && worst_rise <= 1e-12,
            format!("{} sessions, {steps} steps, largest rise {worst_rise:.1e}", logs.len()),
        ),
    )
}

fn order_independence(d: &Dataset) -> Verdict {
    let mut matrix = ProbabilityMatrix::new(d.n_samples(), d.n_concepts());
    let mut source = biased_mue(d, 99);
    for s in 0..d.n_samples() {
        for c in 0..d.n_concepts() {
            let q = Question { sample: s, concept: c, gt: d.label(s, c) };
            matrix.set(s, c, source.answer(&q).unwrap()).unwrap();
        }
    }
    let finals: Vec<Vec<[u64; 101]>> = StrategyKind::ALL
        .par_iter()
        .map(|&strategy| {
            let config = SessionConfig {
                strategy,
                max_questions: d.n_samples() * d.n_concepts(),
                seed: 5,
                ..Default::default()
            };
            let log = run_session(&config, d, &mut matrix.clone()).unwrap();
            log.models.iter().map(|m| *m.bin_counts()).collect()
        })
        .collect();
    check(
        finals.iter().all(|f| f == &finals[0]),
        format!("{} strategies, {} concepts compared bin by bin", finals.len(), finals[0].len()),
    )
}

fn strategy_dominance() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        dataset: DatasetSource::Synthetic {
            n_samples: N_SAMPLES,
            prevalence: skewed_prevalence(N_CONCEPTS, 0.6, 0.05),
            seed: POOL_SEED,
        },
        mue: MueSource::Synthetic {
            profile: SyntheticProfile::Biased,
            confidence: ConfidenceDistribution::UniformHalf,
            seed: 7,
        },
        strategies: vec![StrategyKind::Random, StrategyKind::Uncertainty],
        repeats: REPEATS,
        checkpoints: Some((2..=20).map(|k| k * 10).collect()),
        out_dir: dir.path().to_path_buf(),
        session: SessionConfig { max_questions: 200, ..Default::default() },
        seed: 3,
        svg: false,
    };
    let report = run_experiment(&spec).unwrap();
    let rows = parse_aggregate(std::fs::File::open(&report.aggregate_path).unwrap()).unwrap();
    let mean = |strategy: &str, q: usize| {
        rows.iter().find(|r| r.strategy == strategy && r.question == q).unwrap().mean_u_total
    };
    let checkpoints = spec.checkpoints.clone().unwrap();
    let wins = checkpoints.iter().filter(|&&q| mean("uncertainty", q) <= mean("random", q)).count();
    let (u100, r100) = (mean("uncertainty", 100), mean("random", 100));
    let drop = 1.0 - u100 / r100;
    timed(
        Duration::from_secs(300),
        start,
        check(
            wins * 10 >= checkpoints.len() * 9 && drop >= 0.05,
            format!(
                "uncertainty <= random at {wins}/{} checkpoints; at q=100 {u100:.3} vs {r100:.3} ({:.1}% lower)",
                checkpoints.len(),
                100.0 * drop
            ),
        ),
    )
}

fn rare_coverage(d: &Dataset) -> Verdict {
    let rare = (0..d.n_concepts()).min_by_key(|&c| d.positives(c)).unwrap();
    let common = (0..d.n_concepts()).max_by_key(|&c| d.positives(c)).unwrap();
    let rare_prev = d.positives(rare) as f64 / d.n_samples() as f64;
    let common_prev = d.positives(common) as f64 / d.n_samples() as f64;
    let mean_rare_positives = |strategy: StrategyKind| {
        let total: usize = (0..REPEATS)
            .into_par_iter()
            .map(|repeat| {
                let config = SessionConfig {
                    strategy,
                    max_questions: 100,
                    seed: session_seed(21, repeat as u64, strategy),
                    ..Default::default()
                };
                let log = run_session(&config, d, &mut biased_mue(d, repeat)).unwrap();
                log.records.iter().filter(|r| r.question.concept == rare && r.question.gt).count()
            })
            .sum();
        total as f64 / REPEATS as f64
    };
    let uncertainty = mean_rare_positives(StrategyKind::Uncertainty);
    let random = mean_rare_positives(StrategyKind::Random);
    check(
        rare_prev == 0.05 && common_prev == 0.6 && uncertainty >= 2.0 * random && uncertainty > 0.0,
        format!(
            "rare positives in first 100: uncertainty {uncertainty:.1} vs random {random:.1} \
             (prevalence {rare_prev} / {common_prev})"
        ),
    )
}

fn confusion_recovery(logs: &[(StrategyKind, SessionLog)]) -> Verdict {
    let ranges = [0..=24, 25..=50, 51..=74, 75..=100];
    let mut checked = 0;
    for (_, log) in logs {
        for model in &log.models {
            let c = model.concept();
            // Direct tally: TN, FP, FN, TP.
            let mut direct = [0u64; 4];
            for r in log.records.iter().filter(|r| r.question.concept == c) {
                direct[2 * r.question.gt as usize + (r.prob >= 0.5) as usize] += 1;
            }
            let from_bins: Vec<u64> = ranges
                .iter()
                .map(|range| model.bin_counts()[range.clone()].iter().sum())
                .collect();
            if from_bins != direct {
                return Err(format!("concept {c}: bins {from_bins:?} vs tally {direct:?}"));
            }
            checked += 1;
        }
    }
    check(true, format!("{checked} concept models across {} sessions", logs.len()))
}

fn synthetic_fidelity() -> Verdict {
    let n = 10_000;
    let d = generate_dataset(n, &[0.5, 0.3, 0.7], 8).unwrap();
    let nominal = [0.9, 0.7, 0.5];
    let spec = SyntheticMueSpec::new(nominal.to_vec(), ConfidenceDistribution::UniformHalf, 17).unwrap();
    let mut mue = SyntheticMue::new(spec).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (c, &p) in nominal.iter().enumerate() {
        let correct = (0..n)
            .filter(|&s| {
                let gt = d.label(s, c);
                let prob = mue.answer(&Question { sample: s, concept: c, gt }).unwrap();
                (prob >= 0.5) == gt
            })
            .count();
        let observed = correct as f64 / n as f64;
        let half_width = 2.5758 * (p * (1.0 - p) / n as f64).sqrt();
        ok &= (observed - p).abs() <= half_width;
        parts.push(format!("{p}: {observed:.4} (±{half_width:.4})"));
    }
    check(ok, parts.join(", "))
}

fn determinism(d: &Dataset) -> Verdict {
    let csv = |strategy: StrategyKind| {
        let config = SessionConfig { strategy, max_questions: 300, seed: 77, ..Default::default() };
        let log = run_session(&config, d, &mut biased_mue(d, 4)).unwrap();
        let mut out = Vec::new();
        write_session(&log, d, &mut out).unwrap();
        out
    };
    for strategy in StrategyKind::ALL {
        if csv(strategy) != csv(strategy) {
            return Err(format!("{} logs differ", strategy.name()));
        }
    }
    check(true, "all four strategies, 300 questions each".into())
}

fn main() {
    let pool = skewed_pool();
    let start = Instant::now();
    let logs = full_sessions(&pool);

    let results: Vec<(&str, Verdict)> = vec![
        ("GP oracle equivalence", gp_oracle()),
        ("prior uncertainty", prior_uncertainty()),
        ("monotone uncertainty", monotone(&logs, start)),
        ("order independence", order_independence(&pool)),
        ("strategy dominance", strategy_dominance()),
        ("rare-concept coverage", rare_coverage(&pool)),
        ("confusion recovery", confusion_recovery(&logs)),
        ("synthetic fidelity", synthetic_fidelity()),
        ("determinism", determinism(&pool)),
    ];

    let mut failed = 0;
    for (i, (name, verdict)) in results.iter().enumerate() {
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
