//! Large-sample checks of the estimators against the known shape matrix.

use sscor::correlation::{moment_matrix, multivariate_matrix, pairwise_matrix, sscor, sscor_two_stage};
use sscor::eigenmap::{forward, ShapeSpectrum};
use sscor::elliptical::{replication_rng, sample, seeded_rng, EllipticalModel, Family};
use sscor::linalg::{sym_eigen, SymmetricMatrix};
use sscor::robust::{column_mads, spatial_median_with, LocationVector, WeiszfeldOptions};
use sscor::sscm::sscm_auto;

fn model(family: Family, shape: &[Vec<f64>]) -> EllipticalModel {
    let shape = SymmetricMatrix::from_rows(shape).unwrap();
    let p = shape.dim();
    EllipticalModel::new(family, LocationVector::from(vec![1.0; p]), shape).unwrap()
}

#[test]
fn sscm_eigenvalues_follow_the_map() {
    let lambda = ShapeSpectrum::new(vec![0.6, 0.3, 0.1]).unwrap();
    let shape = SymmetricMatrix::from_diagonal(lambda.values());
    let m = EllipticalModel::new(Family::T { df: 3.0 }, LocationVector::zeros(3), shape).unwrap();
    let x = sample(&m, 50_000, &mut seeded_rng(31)).unwrap();
    let eig = sym_eigen(&sscm_auto(&x).unwrap().matrix).unwrap();
    let delta = forward(&lambda).unwrap();
    for (a, b) in eig.eigenvalues.iter().zip(delta.values()) {
        assert!((a - b).abs() < 0.01, "{:?} vs {:?}", eig.eigenvalues, delta.values());
    }
}

#[test]
fn bivariate_estimators_are_consistent() {
    // unequal scales: ρ = 0.6 with standard deviations 3 and 0.5
    let shape = vec![vec![9.0, 0.9], vec![0.9, 0.25]];
    for family in [Family::Normal, Family::T { df: 5.0 }, Family::Laplace] {
        let x = sample(&model(family, &shape), 50_000, &mut seeded_rng(32)).unwrap();
        let a = sscor(&x).unwrap().rho;
        let b = sscor_two_stage(&x).unwrap().rho;
        assert!((a - 0.6).abs() < 0.02, "{family}: sscor {a}");
        assert!((b - 0.6).abs() < 0.02, "{family}: two-stage {b}");
    }
}

#[test]
fn matrix_estimators_are_consistent() {
    let shape: Vec<Vec<f64>> = vec![
        vec![1.0, 0.5, -0.3, 0.0],
        vec![0.5, 4.0, 0.2, 0.6],
        vec![-0.3, 0.2, 0.25, 0.1],
        vec![0.0, 0.6, 0.1, 1.0],
    ];
    let target = SymmetricMatrix::from_fn(4, |i, j| shape[i][j] / (shape[i][i] * shape[j][j]).sqrt());
    let x = sample(&model(Family::Laplace, &shape), 50_000, &mut seeded_rng(33)).unwrap();
    for est in [pairwise_matrix(&x), multivariate_matrix(&x), moment_matrix(&x)] {
        let est = est.unwrap();
        let err = est.matrix.max_abs_diff(&target);
        assert!(err < 0.03, "{}: {err}", est.method.name());
    }
}

#[test]
fn spatial_median_near_an_observation() {
    // this sample has its spatial median 1.3e-5 away from an observation,
    // where plain Weiszfeld steps stall
    let m = EllipticalModel::spherical(Family::Normal, 2).unwrap();
    let x = sample(&m, 100, &mut replication_rng(20_160_501, 1021)).unwrap();
    let x = x.scale_columns(&column_mads(&x).unwrap());
    let fit = spatial_median_with(&x, WeiszfeldOptions::default()).unwrap();
    assert!(fit.residual <= 1e-9);
    assert_eq!(fit.coinciding, 0);
    assert!(fit.iterations < 100);
}
