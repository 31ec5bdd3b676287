//! Observations, spatial signs, the spatial median and the median absolute deviation.

use crate::error::{Error, Result};

/// `n` observations of dimension `p`, stored row-major. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("data must contain at least one observation".into()));
        }
        let p = rows[0].len();
        let mut data = Vec::with_capacity(n * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(n, p, data)
    }

    /// Wraps a row-major buffer of `n * p` values.
    pub fn from_vec(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput("data must have n >= 1 and p >= 1".into()));
        }
        if data.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data contains non-finite values".into()));
        }
        Ok(Self { n, p, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// New data matrix made of the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> DataMatrix {
        let data = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&j| r[j]))
            .collect();
        DataMatrix {
            n: self.n,
            p: cols.len(),
            data,
        }
    }

    /// Divides column `j` by `scales[j]`.
    pub fn scale_columns(&self, scales: &[f64]) -> DataMatrix {
        assert_eq!(scales.len(), self.p);
        let data = self
            .rows()
            .flat_map(|r| r.iter().zip(scales).map(|(x, s)| x / s))
            .collect();
        DataMatrix {
            n: self.n,
            p: self.p,
            data,
        }
    }

    /// Applies `f` to each observation.
    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<DataMatrix> {
        let rows: Vec<Vec<f64>> = self.rows().map(f).collect();
        DataMatrix::from_rows(&rows)
    }
}

/// A location in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationVector(pub Vec<f64>);

impl LocationVector {
    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for LocationVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Residuals shorter than this fraction of the data scale get the zero sign.
const ZERO_SIGN_RELATIVE: f64 = 1e-12;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest absolute coordinate over the observations and `extra`.
pub(crate) fn data_scale(data: &DataMatrix, extra: &[f64]) -> f64 {
    data.data
        .iter()
        .chain(extra)
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Distance below which a residual is treated as the zero vector.
#[inline]
pub(crate) fn zero_threshold(scale: f64) -> f64 {
    ZERO_SIGN_RELATIVE * scale
}

/// Difference `x - center` and its Euclidean norm, or `None` when the two
/// points coincide: exactly, or closer than `threshold`.
#[inline]
pub(crate) fn centered(x: &[f64], center: &[f64], threshold: f64, out: &mut [f64]) -> Option<f64> {
    let mut d2 = 0.0;
    for ((o, a), b) in out.iter_mut().zip(x).zip(center) {
        *o = a - b;
        d2 += *o * *o;
    }
    let d = d2.sqrt();
    if d == 0.0 || d < threshold {
        None
    } else {
        Some(d)
    }
}

/// Spatial sign `(x - center)/|x - center|`, or the zero vector when `x == center`.
pub fn spatial_sign(x: &[f64], center: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), center.len(), "dimension mismatch");
    let scale = x.iter().chain(center).fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut out = vec![0.0; x.len()];
    match centered(x, center, zero_threshold(scale), &mut out) {
        Some(d) => out.iter_mut().for_each(|v| *v /= d),
        None => out.iter_mut().for_each(|v| *v = 0.0),
    }
    out
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(x: &[f64]) -> f64 {
    assert!(!x.is_empty(), "median of empty sequence");
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median absolute deviation from the median, without a consistency factor.
pub fn mad(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidInput("mad of empty sequence".into()));
    }
    let m = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    let s = median(&dev);
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::DegenerateScale { index: None })
    }
}

/// MAD of every column; a zero MAD is reported with its column index.
pub fn column_mads(data: &DataMatrix) -> Result<Vec<f64>> {
    (0..data.p())
        .map(|j| {
            mad(&data.column(j)).map_err(|e| match e {
                Error::DegenerateScale { .. } => Error::DegenerateScale { index: Some(j) },
                other => other,
            })
        })
        .collect()
}

/// Stopping rule for the Weiszfeld iteration.
#[derive(Debug, Clone, Copy)]
pub struct WeiszfeldOptions {
    /// Bound on `|(1/n) Σ s(x_i - μ)|` at the returned point.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for WeiszfeldOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 10_000,
        }
    }
}

/// Spatial median together with its convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMedianFit {
    pub location: LocationVector,
    pub iterations: usize,
    /// `|(1/n) Σ s(x_i - μ)|` at the returned point.
    pub residual: f64,
    /// Number of observations coinciding with the returned point.
    pub coinciding: usize,
}

struct WeiszfeldStep {
    /// Weighted mean `Σ x_i/d_i / Σ 1/d_i` over points distinct from the iterate.
    weighted_mean: Vec<f64>,
    /// `Σ s(x_i - y)`.
    sign_sum: Vec<f64>,
    coinciding: usize,
    /// Index of the observation closest to the iterate.
    nearest: usize,
}

fn weiszfeld_step(data: &DataMatrix, y: &[f64], threshold: f64, buf: &mut [f64]) -> WeiszfeldStep {
    let p = data.p();
    let mut num = vec![0.0; p];
    let mut denom = 0.0;
    let mut sign_sum = vec![0.0; p];
    let mut coinciding = 0;
    let mut nearest = (0, f64::INFINITY);
    for (i, x) in data.rows().enumerate() {
        match centered(x, y, threshold, buf) {
            None => {
                coinciding += 1;
                nearest = (i, 0.0);
            }
            Some(d) => {
                if d < nearest.1 {
                    nearest = (i, d);
                }
                let w = 1.0 / d;
                denom += w;
                for k in 0..p {
                    num[k] += w * x[k];
                    sign_sum[k] += w * buf[k];
                }
            }
        }
    }
    let weighted_mean = if denom > 0.0 {
        num.iter().map(|v| v / denom).collect()
    } else {
        y.to_vec()
    };
    WeiszfeldStep {
        weighted_mean,
        sign_sum,
        coinciding,
        nearest: nearest.0,
    }
}

/// Newton step `y + H⁻¹R` for the distance sum, with `H = Σ (I − sᵢsᵢᵀ)/dᵢ`
/// and `R = Σ sᵢ`. `None` when `y` sits on an observation or `H` is singular.
fn newton_candidate(data: &DataMatrix, y: &[f64], threshold: f64, buf: &mut [f64]) -> Option<Vec<f64>> {
    let p = data.p();
    let mut hessian = vec![0.0; p * p];
    let mut gradient = vec![0.0; p];
    for x in data.rows() {
        let d = centered(x, y, threshold, buf)?;
        let w = 1.0 / d;
        for i in 0..p {
            let si = buf[i] * w;
            gradient[i] += si;
            hessian[i * p + i] += w;
            for j in i..p {
                hessian[i * p + j] -= w * si * buf[j] * w;
            }
        }
    }
    let step = solve_ldl(p, hessian, gradient)?;
    let next: Vec<f64> = y.iter().zip(&step).map(|(a, b)| a + b).collect();
    next.iter().all(|v| v.is_finite()).then_some(next)
}

/// Solves `A x = b` for symmetric positive definite `A` (upper triangle of a
/// row-major `p×p` buffer) by an `LDLᵀ` factorization. Square-root free, so
/// the solution scales exactly with power-of-two rescalings of the system.
fn solve_ldl(p: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let scale = (0..p).fold(0.0f64, |m, i| m.max(a[i * p + i]));
    // a[i*p + j] for j < i holds L[i][j]; the diagonal holds D
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k] * a[k * p + k];
        }
        if !(d > 1e-14 * scale) {
            return None;
        }
        a[j * p + j] = d;
        for i in (j + 1)..p {
            let mut v = a[j * p + i];
            for k in 0..j {
                v -= a[i * p + k] * a[j * p + k] * a[k * p + k];
            }
            a[i * p + j] = v / d;
        }
    }
    for i in 0..p {
        for k in 0..i {
            b[i] -= a[i * p + k] * b[k];
        }
    }
    for i in 0..p {
        b[i] /= a[i * p + i];
    }
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            b[i] -= a[k * p + i] * b[k];
        }
    }
    Some(b)
}

const POLISH_STEPS: usize = 4;

fn polish(data: &DataMatrix, mut y: Vec<f64>, mut residual: f64, threshold: f64, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let n = data.n() as f64;
    for _ in 0..POLISH_STEPS {
        let Some(next) = newton_candidate(data, &y, threshold, buf) else {
            break;
        };
        let step = weiszfeld_step(data, &next, threshold, buf);
        let r = norm(&step.sign_sum) / n;
        if step.coinciding > 0 || !(r < residual) {
            break;
        }
        y = next;
        residual = r;
    }
    (y, residual)
}

/// Sum of Euclidean distances from `mu` to the observations.
pub fn spatial_median_objective(data: &DataMatrix, mu: &[f64]) -> f64 {
    data.rows()
        .map(|x| x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .sum()
}

/// Coordinatewise median, the starting point of the Weiszfeld iteration.
pub fn coordinatewise_median(data: &DataMatrix) -> LocationVector {
    LocationVector((0..data.p()).map(|j| median(&data.column(j))).collect())
}

const DATA_POINT_CHECK_PERIOD: usize = 16;

pub fn spatial_median(data: &DataMatrix) -> Result<LocationVector> {
    spatial_median_with(data, WeiszfeldOptions::default()).map(|f| f.location)
}

/// Spatial median by Weiszfeld iteration with the Vardi–Zhang modification.
///
/// Starts at the coordinatewise median. When an iterate sits on `η` observations
/// the step is damped by `min(1, η/|R|)` with `R` the sign sum of the remaining
/// points, and the iterate is accepted as optimal as soon as `|R| <= η`.
/// For collinear data the minimizer may not be unique; the first point meeting
/// the first-order condition is returned.
///
/// Weiszfeld steps approach a minimizer at or very near an observation only
/// slowly. Away from observations a Newton step replaces the Weiszfeld step
/// whenever it attains a lower objective, and every few iterations the
/// observation nearest to the iterate is tested directly against the
/// optimality condition.
pub fn spatial_median_with(data: &DataMatrix, opts: WeiszfeldOptions) -> Result<SpatialMedianFit> {
    let n = data.n() as f64;
    let mut y = coordinatewise_median(data).0;
    let mut buf = vec![0.0; data.p()];
    let mut residual = f64::INFINITY;
    let threshold = zero_threshold(data_scale(data, &[]));

    for iter in 0..=opts.max_iterations {
        let step = weiszfeld_step(data, &y, threshold, &mut buf);
        let r = norm(&step.sign_sum);
        residual = r / n;
        let eta = step.coinciding as f64;
        if residual <= opts.tolerance && step.coinciding == 0 {
            // Polish with Newton steps so that the returned point no longer
            // depends on the path taken to reach the tolerance.
            let (y, residual) = polish(data, y, residual, threshold, &mut buf);
            return Ok(SpatialMedianFit {
                location: LocationVector(y),
                iterations: iter,
                residual,
                coinciding: 0,
            });
        }
        if residual <= opts.tolerance || (step.coinciding > 0 && r <= eta) {
            return Ok(SpatialMedianFit {
                location: LocationVector(y),
                iterations: iter,
                residual,
                coinciding: step.coinciding,
            });
        }
        if iter == opts.max_iterations {
            break;
        }
        if iter > 0 && iter % DATA_POINT_CHECK_PERIOD == 0 && step.coinciding == 0 {
            let candidate = data.row(step.nearest).to_vec();
            let at = weiszfeld_step(data, &candidate, threshold, &mut buf);
            let r = norm(&at.sign_sum);
            if r <= at.coinciding as f64 {
                return Ok(SpatialMedianFit {
                    location: LocationVector(candidate),
                    iterations: iter,
                    residual: r / n,
                    coinciding: at.coinciding,
                });
            }
        }
        y = if step.coinciding == 0 {
            // take the Newton step when it improves on the Weiszfeld step
            match newton_candidate(data, &y, threshold, &mut buf) {
                Some(newton)
                    if spatial_median_objective(data, &newton)
                        < spatial_median_objective(data, &step.weighted_mean) =>
                {
                    newton
                }
                _ => step.weighted_mean,
            }
        } else {
            let gamma = (eta / r).min(1.0);
            step.weighted_mean
                .iter()
                .zip(&y)
                .map(|(t, yk)| (1.0 - gamma) * t + gamma * yk)
                .collect()
        };
    }
    Err(Error::Convergence {
        routine: "spatial median",
        iterations: opts.max_iterations,
        residual,
        last_iterate: y,
    })
}
