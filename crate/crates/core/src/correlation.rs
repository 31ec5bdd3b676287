//! Spatial sign correlation estimators, the moment correlation baseline,
//! asymptotic variances and Wald intervals.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::eigenmap::{inverse, inverse_p2, SignSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, to_correlation, EigenDecomposition, SymmetricMatrix};
use crate::robust::{column_mads, DataMatrix};
use crate::sscm::sscm_auto;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMethod {
    Sscor,
    TwoStage,
    Moment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMethod {
    Pairwise,
    Multivariate,
    Moment,
}

impl MatrixMethod {
    pub fn name(self) -> &'static str {
        match self {
            MatrixMethod::Pairwise => "pairwise",
            MatrixMethod::Multivariate => "multivariate",
            MatrixMethod::Moment => "moment",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub rho: f64,
    pub method: CorrelationMethod,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrixEstimate {
    pub matrix: SymmetricMatrix,
    pub method: MatrixMethod,
    /// Shape estimate of the standardized data (multivariate method only).
    pub shape: Option<SymmetricMatrix>,
    /// Trace-normalized shape eigenvalues (multivariate method only).
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

fn check_bivariate(data: &DataMatrix) -> Result<()> {
    if data.p() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: data.p(),
        });
    }
    if data.n() < 3 {
        return Err(Error::InvalidInput(format!(
            "at least 3 observations required, got {}",
            data.n()
        )));
    }
    Ok(())
}

/// SSCM eigenvalues as a sign spectrum. Tiny negative eigenvalues from
/// rounding are clipped; the trace is restored to 1 when observations
/// coincide with the center.
fn sign_spectrum(eig: &EigenDecomposition) -> Result<SignSpectrum> {
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    SignSpectrum::from_unnormalized(&clipped)
}

/// Spatial sign correlation of a bivariate sample.
pub fn sscor(data: &DataMatrix) -> Result<CorrelationEstimate> {
    check_bivariate(data)?;
    let s = sscm_auto(data)?;
    let eig = sym_eigen(&s.matrix)?;
    let lambda = inverse_p2(&sign_spectrum(&eig)?)?;
    let v = eig.reconstruct_with(lambda.values());
    let (v11, v22) = (v.get(0, 0), v.get(1, 1));
    let floor = f64::EPSILON * (v11 + v22);
    if v11 <= floor || v22 <= floor {
        return Err(Error::DegenerateData(
            "shape estimate has a vanishing marginal scale".into(),
        ));
    }
    Ok(CorrelationEstimate {
        rho: (v.get(0, 1) / (v11 * v22).sqrt()).clamp(-1.0, 1.0),
        method: CorrelationMethod::Sscor,
        n: data.n(),
    })
}

/// Spatial sign correlation after dividing each column by its MAD.
pub fn sscor_two_stage(data: &DataMatrix) -> Result<CorrelationEstimate> {
    check_bivariate(data)?;
    let mads = column_mads(data)?;
    let est = sscor(&data.scale_columns(&mads))?;
    Ok(CorrelationEstimate {
        method: CorrelationMethod::TwoStage,
        ..est
    })
}

/// Asymptotic variance of the spatial sign correlation,
/// `(1-ρ²)² + ½(a + 1/a)(1-ρ²)^{3/2}` with `a` the ratio of marginal scales.
pub fn asv_sscor(rho: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput(format!("scale ratio must be positive, got {a}")));
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidInput(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    let q = 1.0 - rho * rho;
    Ok(q * q + 0.5 * (a + 1.0 / a) * q.powf(1.5))
}

/// Asymptotic variance of the two-stage estimator, `(1-ρ²)² + (1-ρ²)^{3/2}`.
pub fn asv_two_stage(rho: f64) -> f64 {
    let q = (1.0 - rho * rho).max(0.0);
    q * q + q.powf(1.5)
}

/// Wald interval `ρ̂ ± z·√(ASV(ρ̂)/n)` for a two-stage estimate, clipped to `[-1, 1]`.
pub fn confidence_interval(est: &CorrelationEstimate, level: f64) -> Result<ConfidenceInterval> {
    if est.method != CorrelationMethod::TwoStage {
        return Err(Error::InvalidInput(
            "confidence intervals are only available for the two-stage estimator".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level must lie in (0, 1), got {level}")));
    }
    if est.n < 3 {
        return Err(Error::InvalidInput("at least 3 observations required".into()));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    let half = z * (asv_two_stage(est.rho) / est.n as f64).sqrt();
    Ok(ConfidenceInterval {
        lower: (est.rho - half).clamp(-1.0, 1.0),
        upper: (est.rho + half).clamp(-1.0, 1.0),
        level,
    })
}

fn check_matrix_input(data: &DataMatrix) -> Result<()> {
    if data.p() < 2 {
        return Err(Error::InvalidInput("at least 2 variables required".into()));
    }
    if data.n() < 3 {
        return Err(Error::InvalidInput(format!(
            "at least 3 observations required, got {}",
            data.n()
        )));
    }
    Ok(())
}

/// Two-stage spatial sign correlation of columns `i` and `j`.
pub fn pairwise_entry(data: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    sscor_two_stage(&data.select_columns(&[i, j]))
        .map(|e| e.rho)
        .map_err(|e| {
            let e = match e {
                Error::DegenerateScale { index: Some(k) } => Error::DegenerateScale {
                    index: Some(if k == 0 { i } else { j }),
                },
                other => other,
            };
            Error::Pair {
                i,
                j,
                source: Box::new(e),
            }
        })
}

/// Correlation matrix filled pair by pair with two-stage spatial sign correlations.
/// The result need not be positive semi-definite.
pub fn pairwise_matrix(data: &DataMatrix) -> Result<CorrelationMatrixEstimate> {
    check_matrix_input(data)?;
    let p = data.p();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| pairwise_entry(data, i, j))
        .collect();
    // first failing pair in index order, independent of scheduling
    let entries: Vec<f64> = results.into_iter().collect::<Result<_>>()?;
    let mut full = vec![0.0; p * p];
    for (&(i, j), r) in pairs.iter().zip(&entries) {
        full[i * p + j] = *r;
        full[j * p + i] = *r;
    }
    Ok(CorrelationMatrixEstimate {
        matrix: SymmetricMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { full[i * p + j] }),
        method: MatrixMethod::Pairwise,
        shape: None,
        lambdas: None,
    })
}

/// Multivariate spatial sign correlation matrix: standardize by column MADs,
/// take the SSCM about the spatial median, invert the eigenvalue map on its
/// spectrum and rescale the resulting shape matrix to unit diagonal.
pub fn multivariate_matrix(data: &DataMatrix) -> Result<CorrelationMatrixEstimate> {
    check_matrix_input(data)?;
    let mads = column_mads(data)?;
    let standardized = data.scale_columns(&mads);
    let s = sscm_auto(&standardized)?;
    let eig = sym_eigen(&s.matrix)?;
    let delta = sign_spectrum(&eig)?;
    // the bivariate map has a closed-form inverse; use it rather than iterating
    let lambda = if delta.len() == 2 { inverse_p2(&delta)? } else { inverse(&delta)? };
    let shape = eig.reconstruct_with(lambda.values());
    let matrix = to_correlation(&shape).map_err(|e| match e {
        Error::DegenerateScale { index } => Error::DegenerateData(format!(
            "shape estimate has zero variance in column {}",
            index.unwrap_or(0)
        )),
        other => other,
    })?;
    Ok(CorrelationMatrixEstimate {
        matrix,
        method: MatrixMethod::Multivariate,
        shape: Some(shape),
        lambdas: Some(lambda.values().to_vec()),
    })
}

/// Pearson correlation matrix.
pub fn moment_matrix(data: &DataMatrix) -> Result<CorrelationMatrixEstimate> {
    if data.n() < 2 {
        return Err(Error::InvalidInput("at least 2 observations required".into()));
    }
    let p = data.p();
    let n = data.n() as f64;
    let means: Vec<f64> = (0..p)
        .map(|j| data.rows().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![0.0; p * p];
    for r in data.rows() {
        for i in 0..p {
            let di = r[i] - means[i];
            for j in i..p {
                cov[i * p + j] += di * (r[j] - means[j]);
            }
        }
    }
    let cov = SymmetricMatrix::from_upper(p, cov);
    let matrix = to_correlation(&cov)?;
    Ok(CorrelationMatrixEstimate {
        matrix,
        method: MatrixMethod::Moment,
        shape: None,
        lambdas: None,
    })
}
