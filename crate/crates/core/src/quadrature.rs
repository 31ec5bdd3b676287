//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands on a
//! finite interval. All components share one set of panels, which lets the
//! eigenvalue integrals reuse the common product term at every node.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone)]
#[allow(dead_code)]
pub(crate) struct QuadResult {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];

    f(center, buf);
    for k in 0..dim {
        kronrod[k] = WGK[7] * buf[k];
        gauss[k] = WG[3] * buf[k];
    }
    for (j, (&x, &wk)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        for t in [center - dx, center + dx] {
            f(t, buf);
            for k in 0..dim {
                kronrod[k] += wk * buf[k];
                if j % 2 == 1 {
                    gauss[k] += WG[j / 2] * buf[k];
                }
            }
        }
    }
    let values: Vec<f64> = kronrod.iter().map(|v| v * half).collect();
    let errors = kronrod
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * half).abs())
        .collect();
    Panel { a, b, values, errors }
}

/// Integrates the `dim` components written by `f(t, out)` over `[a, b]`.
///
/// Panels are bisected, worst first, until every component satisfies
/// `error <= max(abs_tol, rel_tol * |value|)`.
pub(crate) fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [f64]),
{
    let mut buf = vec![0.0; dim];
    let mut panels = vec![gk15(&mut f, a, b, dim, &mut buf)];

    loop {
        let mut values = vec![0.0; dim];
        let mut errors = vec![0.0; dim];
        for panel in &panels {
            for k in 0..dim {
                values[k] += panel.values[k];
                errors[k] += panel.errors[k];
            }
        }
        let tolerances: Vec<f64> = values
            .iter()
            .map(|v| opts.abs_tol.max(opts.rel_tol * v.abs()))
            .collect();
        let done = errors.iter().zip(&tolerances).all(|(e, t)| e <= t);
        if done {
            return Ok(QuadResult {
                values,
                errors,
                panels: panels.len(),
            });
        }
        if panels.len() >= opts.max_panels {
            let worst = errors
                .iter()
                .zip(&tolerances)
                .map(|(e, t)| e / t)
                .fold(0.0, f64::max);
            return Err(Error::Quadrature(format!(
                "tolerance not reached with {} panels (error/tolerance = {worst:.3e})",
                panels.len()
            )));
        }

        // bisect the panel contributing most relative to the tolerances
        let badness = |p: &Panel| -> f64 {
            p.errors
                .iter()
                .zip(&tolerances)
                .map(|(e, t)| e / t)
                .fold(0.0, f64::max)
        };
        let (worst, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, badness(p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let panel = panels.swap_remove(worst);
        let mid = 0.5 * (panel.a + panel.b);
        if !(mid > panel.a && mid < panel.b) {
            return Err(Error::Quadrature("panel width underflow".into()));
        }
        panels.push(gk15(&mut f, panel.a, mid, dim, &mut buf));
        panels.push(gk15(&mut f, mid, panel.b, dim, &mut buf));
    }
}
