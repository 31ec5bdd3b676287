//! Monte Carlo efficiency study of the correlation estimators and the
//! eigenvalue scenarios used to compare shape and SSCM spectra.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::correlation::{moment_matrix, multivariate_matrix, pairwise_entry};
use crate::eigenmap::{forward, ShapeSpectrum};
use crate::elliptical::{replication_rng, sample, EllipticalModel, Family};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Moment,
    Pairwise,
    Multivariate,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Moment, Estimator::Pairwise, Estimator::Multivariate];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Moment => "moment",
            Estimator::Pairwise => "pairwise",
            Estimator::Multivariate => "multivariate",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moment" | "cor" => Ok(Estimator::Moment),
            "pairwise" => Ok(Estimator::Pairwise),
            "multivariate" => Ok(Estimator::Multivariate),
            _ => Err(Error::InvalidInput(format!("unknown estimator '{s}'"))),
        }
    }
}

/// One Monte Carlo study at identity shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidInput(format!(
                "at least 2 replications are needed for a variance, got {}",
                self.reps
            )));
        }
        if self.p < 2 {
            return Err(Error::InvalidInput(format!("p must be at least 2, got {}", self.p)));
        }
        if self.n < 3 {
            return Err(Error::InvalidInput(format!("n must be at least 3, got {}", self.n)));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidInput("no estimators requested".into()));
        }
        Ok(())
    }
}

/// Variance summary of entry (1,2) for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    /// `n` times the empirical variance across successful replications.
    pub scaled_variance: f64,
    /// Monte Carlo standard error of `scaled_variance`.
    pub mc_stderr: f64,
    pub reps_ok: usize,
    pub reps_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub summaries: Vec<EstimatorSummary>,
}

/// Entry (1,2) of the estimator's correlation matrix.
///
/// Moment and pairwise entries depend on the first two columns only, so only
/// those are passed to the estimator.
fn entry_12(estimator: Estimator, data: &crate::robust::DataMatrix) -> Result<f64> {
    match estimator {
        Estimator::Moment => moment_matrix(&data.select_columns(&[0, 1])).map(|m| m.matrix.get(0, 1)),
        Estimator::Pairwise => pairwise_entry(data, 0, 1),
        Estimator::Multivariate => multivariate_matrix(data).map(|m| m.matrix.get(0, 1)),
    }
}

fn summarize(estimator: Estimator, n: usize, values: &[f64], failed: usize) -> EstimatorSummary {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / r;
    let variance = m2 * r / (r - 1.0);
    // Var(sample variance) ≈ (μ₄ − σ⁴)/R
    let se = ((m4 - m2 * m2).max(0.0) / r).sqrt();
    EstimatorSummary {
        estimator,
        scaled_variance: n as f64 * variance,
        mc_stderr: n as f64 * se,
        reps_ok: values.len(),
        reps_failed: failed,
    }
}

/// Runs the study on the spherical model of `cfg.family`.
///
/// Replication `r` draws from [`replication_rng`]`(cfg.seed, r)`; records are
/// reduced in replication order, so the result is independent of the number
/// of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let model = EllipticalModel::spherical(cfg.family, cfg.p)?;

    let records: Vec<Result<Vec<Result<f64>>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(cfg.seed, rep as u64);
            let data = sample(&model, cfg.n, &mut rng)?;
            Ok(cfg.estimators.iter().map(|&e| entry_12(e, &data)).collect())
        })
        .collect();

    let mut summaries = Vec::with_capacity(cfg.estimators.len());
    for (k, &estimator) in cfg.estimators.iter().enumerate() {
        let mut values = Vec::with_capacity(cfg.reps);
        let mut failed = 0;
        let mut first_error = None;
        for record in &records {
            match record.as_ref().map(|r| &r[k]) {
                Ok(Ok(v)) => values.push(*v),
                Ok(Err(e)) | Err(e) => {
                    failed += 1;
                    first_error.get_or_insert_with(|| e.clone());
                }
            }
        }
        if values.len() < 2 {
            return Err(Error::AllReplicationsFailed {
                reps: cfg.reps,
                first: Box::new(first_error.unwrap_or_else(|| {
                    Error::InvalidInput("fewer than 2 successful replications".into())
                })),
            });
        }
        summaries.push(summarize(estimator, cfg.n, &values, failed));
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        summaries,
    })
}

pub const CSV_HEADER: &str = "family,p,n,estimator,scaled_variance,mc_stderr,reps,reps_failed";

impl ExperimentResult {
    /// One CSV row per estimator; floats use their shortest round-trip representation.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "{CSV_HEADER}")?;
        }
        let c = &self.config;
        for s in &self.summaries {
            writeln!(
                out,
                "{},{},{},{},{:?},{:?},{},{}",
                c.family, c.p, c.n, s.estimator, s.scaled_variance, s.mc_stderr, c.reps, s.reps_failed
            )?;
        }
        Ok(())
    }

    pub fn write_table<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(
            out,
            "{} p={} n={} reps={} seed={}",
            c.family, c.p, c.n, c.reps, c.seed
        )?;
        writeln!(out, "{:<14} {:>12} {:>10} {:>8}", "estimator", "n*var", "mc s.e.", "failed")?;
        for s in &self.summaries {
            writeln!(
                out,
                "{:<14} {:>12.4} {:>10.4} {:>8}",
                s.estimator.name(),
                s.scaled_variance,
                s.mc_stderr,
                s.reps_failed
            )?;
        }
        Ok(())
    }

    pub fn summary(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// `λᵢ ∝ i`.
    Equidistant,
    /// `p - 1` equidistant values plus one 5 times the largest of them.
    Spiked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenScenario {
    pub kind: ScenarioKind,
    pub p: usize,
    pub spectrum: ShapeSpectrum,
}

/// Shape spectrum of a scenario, sorted descending.
///
/// Equidistant: `λᵢ = 2i/(p(p+1))`. Spiked: weights `1, …, p-1` and `5(p-1)`,
/// divided by their sum `(p-1)(p+10)/2`.
pub fn eigen_scenario(kind: ScenarioKind, p: usize) -> Result<EigenScenario> {
    if p < 2 {
        return Err(Error::InvalidInput(format!("scenario needs p >= 2, got {p}")));
    }
    let pf = p as f64;
    let values: Vec<f64> = match kind {
        ScenarioKind::Equidistant => (1..=p).map(|i| 2.0 * i as f64 / (pf * (pf + 1.0))).collect(),
        ScenarioKind::Spiked => {
            let total = (pf - 1.0) * (pf + 10.0) / 2.0;
            (1..p)
                .map(|i| i as f64 / total)
                .chain(std::iter::once(5.0 * (pf - 1.0) / total))
                .collect()
        }
    };
    Ok(EigenScenario {
        kind,
        p,
        spectrum: ShapeSpectrum::new(values)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    /// 1-based position in descending order.
    pub index: usize,
    pub lambda: f64,
    pub delta: f64,
}

/// Shape eigenvalues of a scenario paired with the SSCM eigenvalues they map to.
pub fn figure_table(kind: ScenarioKind, p: usize) -> Result<Vec<FigureRow>> {
    let scenario = eigen_scenario(kind, p)?;
    let delta = forward(&scenario.spectrum)?;
    Ok(scenario
        .spectrum
        .values()
        .iter()
        .zip(delta.values())
        .enumerate()
        .map(|(i, (&lambda, &delta))| FigureRow {
            index: i + 1,
            lambda,
            delta,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equidistant_p3() {
        let s = eigen_scenario(ScenarioKind::Equidistant, 3).unwrap();
        let v = s.spectrum.values();
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((v[2] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn spiked_shape() {
        for p in [2, 3, 11, 101] {
            let s = eigen_scenario(ScenarioKind::Spiked, p).unwrap();
            let v = s.spectrum.values();
            if p > 2 {
                assert!((v[0] / v[1] - 5.0).abs() < 1e-12);
            }
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let s = eigen_scenario(ScenarioKind::Spiked, 3).unwrap();
        assert_eq!(s.spectrum.values(), &[10.0 / 13.0, 2.0 / 13.0, 1.0 / 13.0]);
    }

    #[test]
    fn scenarios_sum_to_one() {
        for kind in [ScenarioKind::Equidistant, ScenarioKind::Spiked] {
            for p in 2..40 {
                let s = eigen_scenario(kind, p).unwrap();
                assert!((s.spectrum.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!(eigen_scenario(ScenarioKind::Equidistant, 1).is_err());
    }

    #[test]
    fn figure_rows_preserve_order() {
        let rows = figure_table(ScenarioKind::Equidistant, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].delta >= w[1].delta));
        let spiked = figure_table(ScenarioKind::Spiked, 11).unwrap();
        assert!(spiked[0].delta / spiked[1].delta <= spiked[0].lambda / spiked[1].lambda);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig {
            family: Family::Normal,
            p: 2,
            n: 20,
            reps: 1,
            seed: 1,
            estimators: vec![Estimator::Moment],
        };
        assert!(run_experiment(&cfg).is_err());
        cfg.reps = 5;
        cfg.n = 2;
        assert!(run_experiment(&cfg).is_err());
        cfg.n = 20;
        cfg.estimators.clear();
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn small_experiment_is_reproducible() {
        let cfg = ExperimentConfig {
            family: Family::Laplace,
            p: 3,
            n: 30,
            reps: 40,
            seed: 99,
            estimators: Estimator::ALL.to_vec(),
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        for s in &a.summaries {
            assert!(s.scaled_variance >= 0.0);
            assert_eq!(s.reps_ok + s.reps_failed, 40);
        }
        let mut csv = Vec::new();
        a.write_csv(&mut csv, true).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(Estimator::Moment, 10, &[1.0, 2.0, 3.0, 4.0], 1);
        // sample variance 5/3
        assert!((s.scaled_variance - 50.0 / 3.0).abs() < 1e-12);
        // m2 = 1.25, m4 = 2.5625
        assert!((s.mc_stderr - 10.0 * ((2.5625f64 - 1.5625) / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.reps_failed, 1);
    }
}
