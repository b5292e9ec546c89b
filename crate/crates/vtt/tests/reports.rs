use std::fs::File;
use std::time::Duration;

use vtt::experiment::{run_experiment, DatasetSource, ExperimentSpec, MueSource, SyntheticProfile};
use vtt::formats::session::read_session;
use vtt::report::{concept_summaries, parse_aggregate, UncertaintySeries};
use vtt::VttError;
use vtt_core::{
    generate_dataset, run_session, ConfidenceDistribution, SessionConfig, StrategyKind, SyntheticMue,
    SyntheticMueSpec,
};

fn spec(out: &std::path::Path, strategies: Vec<StrategyKind>, repeats: usize) -> ExperimentSpec {
    ExperimentSpec {
        dataset: DatasetSource::Synthetic { n_samples: 30, prevalence: vec![0.5, 0.2, 0.1], seed: 4 },
        mue: MueSource::Synthetic {
            profile: SyntheticProfile::Biased,
            confidence: ConfidenceDistribution::UniformHalf,
            seed: 9,
        },
        strategies,
        repeats,
        checkpoints: None,
        out_dir: out.to_path_buf(),
        session: SessionConfig { max_questions: 45, ..Default::default() },
        seed: 1,
        svg: true,
    }
}

#[test]
fn file_count_contract() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&spec(dir.path(), StrategyKind::ALL.to_vec(), 10)).unwrap();
    let sessions: Vec<_> = std::fs::read_dir(dir.path().join("sessions")).unwrap().collect();
    assert_eq!(sessions.len(), 40);
    assert_eq!(report.sessions.len(), 40);
    assert!(dir.path().join("aggregate.csv").is_file());
    assert!(dir.path().join("aggregate.svg").is_file());
}

#[test]
fn aggregate_recomputed_from_session_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&spec(dir.path(), vec![StrategyKind::Random, StrategyKind::Uncertainty], 3)).unwrap();
    let rows = parse_aggregate(File::open(&report.aggregate_path).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.question).take(5).collect::<Vec<_>>(), vec![10, 20, 30, 40, 45]);
    for row in &rows {
        let mut values = Vec::new();
        for s in report.sessions.iter().filter(|s| s.strategy.name() == row.strategy) {
            let session = read_session(&s.path).unwrap();
            let at = session.get(row.question - 1).or(session.last()).unwrap();
            values.push(at.u_total_after);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt();
        assert!((mean - row.mean_u_total).abs() <= 1e-9);
        assert!((sd - row.std_u_total).abs() <= 1e-9);
        assert!((mean / 3.0 - row.mean_u_per_concept).abs() <= 1e-9);
    }
    for strategy in ["random", "uncertainty"] {
        let means: Vec<f64> = rows.iter().filter(|r| r.strategy == strategy).map(|r| r.mean_u_total).collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn experiment_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let strategies = vec![StrategyKind::UncertaintyAndUnpredictability, StrategyKind::Random];
    run_experiment(&spec(a.path(), strategies.clone(), 2)).unwrap();
    run_experiment(&spec(b.path(), strategies, 2)).unwrap();
    for name in ["aggregate.csv", "comparison.csv", "sessions/combined_r01.csv", "sessions/random_r00.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn adapter_failure_fails_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path(), vec![StrategyKind::Random], 1);
    s.mue = MueSource::Subprocess {
        command: "while read l; do echo 1.7; done".into(),
        timeout: Duration::from_secs(5),
    };
    assert!(matches!(run_experiment(&s), Err(VttError::Session { .. })));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let s = spec(&blocker.join("out"), vec![StrategyKind::Random], 1);
    assert!(matches!(run_experiment(&s), Err(VttError::Io { .. })));
}

#[test]
fn comparison_counts_add_up() {
    let d = generate_dataset(40, &[0.6, 0.05, 0.3], 2).unwrap();
    let mut mue = SyntheticMue::new(SyntheticMueSpec::biased(&d, 5).unwrap()).unwrap();
    let config = SessionConfig { max_questions: 70, ..Default::default() };
    let log = run_session(&config, &d, &mut mue).unwrap();
    let rows = concept_summaries(&log, &d);
    assert_eq!(rows.iter().map(|r| r.questions).sum::<usize>(), 70);
    for r in &rows {
        assert_eq!(r.positive_questions + r.negative_questions, r.questions);
        assert_eq!((r.tn + r.fp + r.fn_ + r.tp) as usize, r.questions);
    }
    let total: f64 = rows.iter().map(|r| r.u_minus + r.u_plus).sum();
    assert!((total - UncertaintySeries::from_log(&log).at(70)).abs() < 1e-12);
}

#[test]
fn zero_question_session_summary() {
    let d = generate_dataset(20, &[0.5, 0.5], 2).unwrap();
    let mut mue = SyntheticMue::new(SyntheticMueSpec::unbiased(&d, 5).unwrap()).unwrap();
    let config = SessionConfig { uncertainty_stop: Some(100.0), ..Default::default() };
    let log = run_session(&config, &d, &mut mue).unwrap();
    for r in concept_summaries(&log, &d) {
        assert_eq!((r.questions, r.tn, r.fp, r.fn_, r.tp), (0, 0, 0, 0, 0));
        assert_eq!(r.u_minus + r.u_plus, 4.0);
    }
}
