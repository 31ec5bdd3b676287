//! Empirical spatial sign covariance matrix.

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::robust::{centered, data_scale, spatial_median, zero_threshold, DataMatrix, LocationVector};

/// `S_n = (1/n) Σ s(x_i - t) s(x_i - t)ᵀ` with the center `t` it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct SscmEstimate {
    pub matrix: SymmetricMatrix,
    pub center_used: LocationVector,
    /// Observations with a nonzero spatial sign.
    pub n_effective: usize,
    pub n: usize,
}

/// SSCM about a given center.
///
/// Observations equal to the center have sign zero: they add nothing to the
/// sum but still count in `n`, so the trace is `n_effective / n`.
pub fn sscm(data: &DataMatrix, center: &LocationVector) -> Result<SscmEstimate> {
    let p = data.p();
    if center.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: center.dim(),
        });
    }
    let threshold = zero_threshold(data_scale(data, center.coords()));
    let mut acc = vec![0.0; p * p];
    let mut buf = vec![0.0; p];
    let mut n_effective = 0;
    for x in data.rows() {
        let Some(d) = centered(x, center.coords(), threshold, &mut buf) else {
            continue;
        };
        n_effective += 1;
        buf.iter_mut().for_each(|v| *v /= d);
        for i in 0..p {
            let si = buf[i];
            for j in i..p {
                acc[i * p + j] += si * buf[j];
            }
        }
    }
    let inv_n = 1.0 / data.n() as f64;
    acc.iter_mut().for_each(|v| *v *= inv_n);
    Ok(SscmEstimate {
        matrix: SymmetricMatrix::from_upper(p, acc),
        center_used: center.clone(),
        n_effective,
        n: data.n(),
    })
}

/// SSCM centered at the spatial median.
pub fn sscm_auto(data: &DataMatrix) -> Result<SscmEstimate> {
    if data.n() < 2 {
        return Err(Error::InvalidInput("sscm_auto needs at least 2 observations".into()));
    }
    let center = spatial_median(data)?;
    sscm(data, &center)
}
