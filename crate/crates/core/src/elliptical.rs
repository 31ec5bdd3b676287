//! Seedable samplers for elliptical distributions.
//!
//! All randomness flows through [`SeededRng`], ChaCha8 seeded from a `u64`.
//! ChaCha output is specified independently of platform and word size, so a
//! seed reproduces the same stream everywhere. Replication `r` of a study
//! with master seed `s` uses stream `r` of the generator seeded with `s`
//! (see [`replication_rng`]); results therefore do not depend on how
//! replications are scheduled across workers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricMatrix};
use crate::robust::{DataMatrix, LocationVector};

pub type SeededRng = ChaCha8Rng;

/// Generator for a master seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for replication `rep` under master seed `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Radial law of an elliptical distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Normal,
    /// Elliptical t with `df > 0` degrees of freedom.
    T { df: f64 },
    /// Elliptical Laplace, generator `g(x) ∝ exp(-√x / 2)`.
    Laplace,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Normal => write!(f, "normal"),
            Family::T { df } => write!(f, "t{df}"),
            Family::Laplace => write!(f, "laplace"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses `normal`, `laplace` or `t<df>` (e.g. `t5`, `t2.5`).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Family::Normal),
            "laplace" => Ok(Family::Laplace),
            _ => {
                let df = s
                    .strip_prefix('t')
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("unknown distribution '{s}'")))?;
                if df > 0.0 && df.is_finite() {
                    Ok(Family::T { df })
                } else {
                    Err(Error::InvalidInput(format!("degrees of freedom must be positive, got {df}")))
                }
            }
        }
    }
}

/// Elliptical law `μ + R·A·U` with `A Aᵀ` the shape matrix and `U` uniform on the sphere.
#[derive(Debug, Clone)]
pub struct EllipticalModel {
    family: Family,
    location: LocationVector,
    shape: SymmetricMatrix,
    factor: Matrix,
}

impl EllipticalModel {
    pub fn new(family: Family, location: LocationVector, shape: SymmetricMatrix) -> Result<Self> {
        if let Family::T { df } = family {
            if !(df > 0.0) {
                return Err(Error::InvalidInput(format!("degrees of freedom must be positive, got {df}")));
            }
        }
        if location.dim() != shape.dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                found: location.dim(),
            });
        }
        let factor = shape.cholesky()?;
        Ok(Self {
            family,
            location,
            shape,
            factor,
        })
    }

    /// Centered at the origin with identity shape.
    pub fn spherical(family: Family, p: usize) -> Result<Self> {
        Self::new(family, LocationVector::zeros(p), SymmetricMatrix::identity(p))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn shape(&self) -> &SymmetricMatrix {
        &self.shape
    }
}

fn standard_normal_vec<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform draw from the unit sphere in `R^p` (a random sign for `p = 1`).
pub fn sample_sphere<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    assert!(p >= 1, "dimension must be at least 1");
    loop {
        let z = standard_normal_vec(p, rng);
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return z.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// `n` independent draws from `model`.
///
/// * normal: `A·Z` with `Z` standard normal, i.e. radius `√χ²_p`;
/// * t(ν): `A·Z / √(χ²_ν/ν)` with `χ²_ν ~ Gamma(ν/2, 2)`;
/// * Laplace: radius `R ~ Gamma(p, 2)` times a uniform direction, since the
///   radial density `∝ r^{p-1} exp(-r/2)` needs no normalizing constant.
pub fn sample<R: Rng + ?Sized>(model: &EllipticalModel, n: usize, rng: &mut R) -> Result<DataMatrix> {
    let p = model.dim();
    let mut data = Vec::with_capacity(n * p);
    let chi2 = match model.family {
        Family::T { df } => Some(Gamma::new(0.5 * df, 2.0).map_err(|e| Error::InvalidInput(e.to_string()))?),
        _ => None,
    };
    let radius = match model.family {
        Family::Laplace => Some(Gamma::new(p as f64, 2.0).map_err(|e| Error::InvalidInput(e.to_string()))?),
        _ => None,
    };
    for _ in 0..n {
        let z = match model.family {
            Family::Normal => standard_normal_vec(p, rng),
            Family::T { df } => {
                let z = standard_normal_vec(p, rng);
                let w: f64 = chi2.as_ref().unwrap().sample(rng);
                let scale = (w / df).sqrt().recip();
                z.into_iter().map(|v| v * scale).collect()
            }
            Family::Laplace => {
                let u = sample_sphere(p, rng);
                let r: f64 = radius.as_ref().unwrap().sample(rng);
                u.into_iter().map(|v| v * r).collect()
            }
        };
        let x = model.factor.mul_vec(&z);
        data.extend(x.iter().zip(model.location.coords()).map(|(a, m)| a + m));
    }
    DataMatrix::from_vec(n, p, data)
}
