//! Map between the eigenvalues of a trace-normalized shape matrix (λ) and the
//! eigenvalues of the corresponding spatial sign covariance matrix (δ).
//!
//! For `p = 2` the map has the closed form `δᵢ = √λᵢ / (√λ₁ + √λ₂)`. In general
//!
//! ```text
//! δᵢ = (λᵢ/2) ∫₀^∞ dx / ((1 + λᵢx) Πⱼ (1 + λⱼx)^½)
//! ```
//!
//! which is evaluated by adaptive quadrature after the substitution
//! `x = s·t/(1 - t)`. The inverse is a fixed-point iteration started at δ.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Spectra whose sum is within this distance of 1 are renormalized silently.
pub const SUM_TOLERANCE: f64 = 1e-9;

fn validate(mut values: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("{what} must not be empty")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "{what} values must be finite and nonnegative, got {v}"
        )));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "{what} must sum to 1 (got {sum}); use from_unnormalized to rescale"
        )));
    }
    values.iter_mut().for_each(|v| *v /= sum);
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

fn normalize(values: &[f64], what: &str) -> Result<Vec<f64>> {
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::InvalidInput(format!("{what} must have a positive finite sum")));
    }
    validate(values.iter().map(|v| v / sum).collect(), what)
}

macro_rules! spectrum_type {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Accepts nonnegative values summing to 1 within [`SUM_TOLERANCE`];
            /// the result is renormalized and sorted in descending order.
            pub fn new(values: Vec<f64>) -> Result<Self> {
                validate(values, $what).map(Self)
            }

            /// Rescales arbitrary nonnegative values to sum 1.
            pub fn from_unnormalized(values: &[f64]) -> Result<Self> {
                normalize(values, $what).map(Self)
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn nonzero(&self) -> usize {
                self.0.iter().filter(|v| **v > 0.0).count()
            }

            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(&other.0)
                    .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
            }
        }
    };
}

spectrum_type!(
    /// Eigenvalues `λ₁ ≥ … ≥ λ_p ≥ 0` of a trace-normalized shape matrix.
    ShapeSpectrum,
    "shape spectrum"
);

spectrum_type!(
    /// Eigenvalues `δ₁ ≥ … ≥ δ_p ≥ 0` of a spatial sign covariance matrix.
    SignSpectrum,
    "sign spectrum"
);

fn require_p2(len: usize) -> Result<()> {
    if len == 2 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("closed form requires p = 2, got p = {len}")))
    }
}

/// Closed-form map for `p = 2`.
pub fn forward_p2(lambda: &ShapeSpectrum) -> Result<SignSpectrum> {
    require_p2(lambda.len())?;
    let r: Vec<f64> = lambda.values().iter().map(|v| v.sqrt()).collect();
    let s = r[0] + r[1];
    Ok(SignSpectrum(vec![r[0] / s, r[1] / s]))
}

/// Closed-form inverse for `p = 2`: `λᵢ = δᵢ² / (δ₁² + δ₂²)`.
pub fn inverse_p2(delta: &SignSpectrum) -> Result<ShapeSpectrum> {
    require_p2(delta.len())?;
    let sq: Vec<f64> = delta.values().iter().map(|v| v * v).collect();
    let s = sq[0] + sq[1];
    Ok(ShapeSpectrum(vec![sq[0] / s, sq[1] / s]))
}

/// `∫₀^∞ dx / ((1 + λᵢx) Πⱼ (1 + λⱼx)^½)` for every `i` with `λᵢ > 0`; entries
/// for zero eigenvalues are left at 0. Needs at least two positive values.
fn sign_integrals(lambda: &[f64]) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
    if active.len() < 2 {
        return Err(Error::RankDeficient {
            nonzero: active.len(),
        });
    }
    let positive: Vec<f64> = active.iter().map(|&i| lambda[i]).collect();
    // puts x = 1/mean(positive λ) at t = 1/2
    let s = positive.len() as f64 / positive.iter().sum::<f64>();
    let ln_s = s.ln();

    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-13,
        ..QuadOptions::default()
    };
    let result = integrate(
        |t, out| {
            let one_minus = 1.0 - t;
            let x = s * t / one_minus;
            let log_prod: f64 = positive.iter().map(|l| (l * x).ln_1p()).sum();
            let common = (ln_s - 2.0 * one_minus.ln() - 0.5 * log_prod).exp();
            for (o, l) in out.iter_mut().zip(&positive) {
                *o = common / (1.0 + l * x);
            }
        },
        0.0,
        1.0,
        positive.len(),
        opts,
    )?;

    let mut integrals = vec![0.0; lambda.len()];
    for (&i, v) in active.iter().zip(result.values) {
        integrals[i] = v;
    }
    Ok(integrals)
}

/// General map λ → δ by numerical quadrature.
pub fn forward(lambda: &ShapeSpectrum) -> Result<SignSpectrum> {
    let p = lambda.len();
    if p < 2 {
        return Err(Error::InvalidInput(format!("forward map requires p >= 2, got p = {p}")));
    }
    let values = lambda.values();
    if lambda.nonzero() == 1 {
        // rank one: δ = λ by continuity
        return Ok(SignSpectrum(values.to_vec()));
    }
    let integrals = sign_integrals(values)?;
    let raw: Vec<f64> = values
        .iter()
        .zip(&integrals)
        .map(|(l, i)| 0.5 * l * i)
        .collect();
    let sum: f64 = raw.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::Quadrature(format!(
            "sign spectrum sums to {sum} before renormalization"
        )));
    }
    Ok(SignSpectrum(raw.iter().map(|v| v / sum).collect()))
}

/// Stopping rule of the fixed-point inversion.
#[derive(Debug, Clone, Copy)]
pub struct InverseOptions {
    /// Sup-norm change between successive iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 500,
        }
    }
}

/// Outcome of the fixed-point inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseFit {
    pub spectrum: ShapeSpectrum,
    pub iterations: usize,
    /// Sup-norm change of the final iteration.
    pub change: f64,
}

pub fn inverse(delta: &SignSpectrum) -> Result<ShapeSpectrum> {
    inverse_with(delta, InverseOptions::default()).map(|fit| fit.spectrum)
}

/// Inverts the map by the fixed-point scheme
///
/// ```text
/// λ⁽⁰⁾ = δ,   λ̃ᵢ = 2δᵢ / Iᵢ(λ⁽ᵏ⁾),   λ⁽ᵏ⁺¹⁾ = λ̃ / Σⱼ λ̃ⱼ
/// ```
///
/// where `Iᵢ` is the integral of the forward map.
pub fn inverse_with(delta: &SignSpectrum, opts: InverseOptions) -> Result<InverseFit> {
    let p = delta.len();
    if p < 2 {
        return Err(Error::InvalidInput(format!("inverse map requires p >= 2, got p = {p}")));
    }
    let nonzero = delta.nonzero();
    if nonzero < 2 {
        return Err(Error::RankDeficient { nonzero });
    }
    let target = delta.values();
    let mut lambda = target.to_vec();
    let mut change = f64::INFINITY;

    for iteration in 1..=opts.max_iterations {
        let integrals = sign_integrals(&lambda)?;
        let mut next: Vec<f64> = target
            .iter()
            .zip(&integrals)
            .map(|(d, i)| if *d > 0.0 { 2.0 * d / i } else { 0.0 })
            .collect();
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        change = next
            .iter()
            .zip(&lambda)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        lambda = next;
        if change <= opts.tolerance {
            return Ok(InverseFit {
                spectrum: ShapeSpectrum::from_unnormalized(&lambda)?,
                iterations: iteration,
                change,
            });
        }
    }
    Err(Error::Convergence {
        routine: "eigenvalue map inversion",
        iterations: opts.max_iterations,
        residual: change,
        last_iterate: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(v: &[f64]) -> ShapeSpectrum {
        ShapeSpectrum::new(v.to_vec()).unwrap()
    }

    fn sign(v: &[f64]) -> SignSpectrum {
        SignSpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spectrum_validation() {
        let s = ShapeSpectrum::new(vec![0.2, 0.8 + 5e-10]).unwrap();
        assert_eq!(s.values()[0], (0.8 + 5e-10) / (1.0 + 5e-10));
        assert!(ShapeSpectrum::new(vec![0.2, 0.9]).is_err());
        assert!(ShapeSpectrum::new(vec![1.2, -0.2]).is_err());
        assert!(ShapeSpectrum::new(vec![]).is_err());
        let u = SignSpectrum::from_unnormalized(&[1.0, 3.0]).unwrap();
        assert_eq!(u.values(), &[0.75, 0.25]);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(forward_p2(&shape(&[0.5, 0.5])).unwrap().values(), &[0.5, 0.5]);
        let d = forward_p2(&shape(&[0.8, 0.2])).unwrap();
        assert!((d.values()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.values()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(forward_p2(&shape(&[1.0, 0.0])).unwrap().values(), &[1.0, 0.0]);
        assert!(forward_p2(&shape(&[0.5, 0.3, 0.2])).is_err());
    }

    #[test]
    fn closed_form_inverse_examples() {
        assert_eq!(inverse_p2(&sign(&[0.5, 0.5])).unwrap().values(), &[0.5, 0.5]);
        let l = inverse_p2(&sign(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!((l.values()[0] - 0.8).abs() < 1e-15);
        assert!((l.values()[1] - 0.2).abs() < 1e-15);
        assert_eq!(inverse_p2(&sign(&[1.0, 0.0])).unwrap().values(), &[1.0, 0.0]);
    }

    #[test]
    fn forward_spherical_fixed_point() {
        for p in 2..=12 {
            let d = forward(&shape(&vec![1.0 / p as f64; p])).unwrap();
            for v in d.values() {
                assert!((v - 1.0 / p as f64).abs() < 1e-12, "p = {p}");
            }
        }
    }

    #[test]
    fn forward_matches_closed_form() {
        let l = shape(&[0.8, 0.2]);
        let q = forward(&l).unwrap();
        let c = forward_p2(&l).unwrap();
        assert!(q.max_abs_diff(&c) < 1e-10);
    }

    #[test]
    fn forward_reference_values() {
        // independent evaluation with scipy.integrate.quad (epsabs=1e-14, epsrel=1e-13)
        let d = forward(&shape(&[0.5, 1.0 / 3.0, 1.0 / 6.0])).unwrap();
        let expected = [0.43341596, 0.34385423, 0.22272981];
        for (a, b) in d.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn forward_zero_eigenvalues() {
        let d = forward(&shape(&[0.6, 0.4, 0.0])).unwrap();
        assert_eq!(d.values()[2], 0.0);
        // the integral with one zero coordinate reduces to the p = 2 case
        let c = forward_p2(&shape(&[0.6, 0.4])).unwrap();
        assert!((d.values()[0] - c.values()[0]).abs() < 1e-10);
        let r1 = forward(&shape(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(r1.values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn inverse_examples() {
        let fit = inverse_with(&sign(&[0.25; 4]), InverseOptions::default()).unwrap();
        assert!(fit.spectrum.values().iter().all(|v| (v - 0.25).abs() < 1e-12));
        let l = inverse(&sign(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!((l.values()[0] - 0.8).abs() < 1e-9);
        assert!((l.values()[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn inverse_rejects_rank_one() {
        assert_eq!(
            inverse(&sign(&[1.0, 0.0, 0.0])),
            Err(Error::RankDeficient { nonzero: 1 })
        );
    }

    #[test]
    fn inverse_reports_non_convergence() {
        let opts = InverseOptions {
            tolerance: 0.0,
            max_iterations: 3,
        };
        match inverse_with(&sign(&[0.7, 0.2, 0.1]), opts) {
            Err(Error::Convergence { iterations, last_iterate, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last_iterate.len(), 3);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
