use sscor::eigenmap::{forward, inverse};
use sscor::elliptical::Family;
use sscor::simulation::{
    eigen_scenario, run_experiment, Estimator, EstimatorSummary, ExperimentConfig, ScenarioKind,
};

fn study(family: Family, p: usize, reps: usize, estimator: Estimator) -> EstimatorSummary {
    let cfg = ExperimentConfig {
        family,
        p,
        n: 100,
        reps,
        seed: 77,
        estimators: vec![estimator],
    };
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.summaries[0].reps_failed, 0);
    r.summaries[0].clone()
}

#[test]
fn pairwise_variance_does_not_depend_on_the_generator() {
    let values: Vec<f64> = [Family::Normal, Family::T { df: 10.0 }, Family::T { df: 5.0 }, Family::Laplace]
        .into_iter()
        .map(|f| study(f, 2, 10_000, Estimator::Pairwise).scaled_variance)
        .collect();
    for v in &values {
        assert!((1.8..=2.2).contains(v), "{values:?}");
    }
}

#[test]
fn multivariate_variance_decreases_with_dimension() {
    let results: Vec<EstimatorSummary> = [2, 3, 5, 10]
        .into_iter()
        .map(|p| study(Family::Normal, p, 2000, Estimator::Multivariate))
        .collect();
    for w in results.windows(2) {
        let slack = 2.0 * (w[0].mc_stderr.powi(2) + w[1].mc_stderr.powi(2)).sqrt();
        assert!(w[1].scaled_variance <= w[0].scaled_variance + slack, "{results:?}");
    }
}

#[test]
fn spiked_scenario_round_trip() {
    let lambda = eigen_scenario(ScenarioKind::Spiked, 11).unwrap().spectrum;
    let back = inverse(&forward(&lambda).unwrap()).unwrap();
    assert!(back.max_abs_diff(&lambda) <= 1e-8);
}

#[test]
fn summaries_follow_the_requested_order() {
    let cfg = ExperimentConfig {
        family: Family::Normal,
        p: 3,
        n: 30,
        reps: 50,
        seed: 5,
        estimators: vec![Estimator::Multivariate, Estimator::Moment],
    };
    let r = run_experiment(&cfg).unwrap();
    let order: Vec<Estimator> = r.summaries.iter().map(|s| s.estimator).collect();
    assert_eq!(order, cfg.estimators);
    assert_eq!(run_experiment(&cfg).unwrap(), r);
}
