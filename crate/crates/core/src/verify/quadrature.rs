//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands and
//! nested two-dimensional integrals.  Used as the deterministic oracle for
//! single-vertex identities.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-8, max_depth: 40 }
    }
}

/// `(value, error estimate)` of one Kronrod panel.
fn panel<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for (idx, (&x, &wk)) in XGK.iter().zip(&WGK).enumerate() {
        let points: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sign in points {
            let v = f(c + sign * h * x)?;
            if v.len() != dim {
                return Err(Error::Shape(format!("integrand returned {} values, expected {dim}", v.len())));
            }
            for d in 0..dim {
                k[d] += wk * v[d];
                if idx % 2 == 1 {
                    g[d] += WG[idx / 2] * v[d];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    Ok((k, err))
}

/// Adaptive integral of a vector-valued `f` over `[a, b]`.
///
/// Panels are bisected until each one's Kronrod–Gauss difference is below its
/// share of `abs_tol`; returns the integral and the summed error estimate.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, opts: QuadOptions) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("bad integration range [{a}, {b}]")));
    }
    let total = b - a;
    let mut out = vec![0.0; dim];
    let mut err_sum = 0.0;
    let mut stack = vec![(a, b, 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = panel(&mut f, lo, hi, dim)?;
        let budget = opts.abs_tol * (hi - lo) / total;
        if err <= budget || depth >= opts.max_depth {
            if err > budget && err > opts.abs_tol {
                return Err(Error::Estimation(format!(
                    "quadrature did not converge on [{lo}, {hi}] (error {err:.3e})"
                )));
            }
            for d in 0..dim {
                out[d] += v[d];
            }
            err_sum += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok((out, err_sum))
}

/// `∫_{x0}^{x1} ∫_{y0(x)}^{y1(x)} f(x, y) dy dx` by nested adaptive quadrature.
pub fn integrate_2d<F, R>(f: F, x: (f64, f64), y_range: R, dim: usize, opts: QuadOptions) -> Result<(Vec<f64>, f64)>
where
    F: Fn(f64, f64) -> Result<Vec<f64>>,
    R: Fn(f64) -> (f64, f64),
{
    let inner_opts = QuadOptions { abs_tol: 1e-2 * opts.abs_tol / (x.1 - x.0).max(1.0), ..opts };
    let mut inner_err = 0.0;
    let (v, outer_err) = integrate(
        |xv| {
            let (y0, y1) = y_range(xv);
            let (v, e) = integrate(|yv| f(xv, yv), y0, y1, dim, inner_opts)?;
            inner_err += e;
            Ok(v)
        },
        x.0,
        x.1,
        dim,
        opts,
    )?;
    Ok((v, outer_err + inner_err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_and_polynomial() {
        let (v, _) = integrate(|x| Ok(vec![(-x * x).exp(), x * x]), -10.0, 10.0, 2, QuadOptions::default()).unwrap();
        assert!((v[0] - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        assert!((v[1] - 2000.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_dimensional() {
        let (v, _) = integrate_2d(
            |x, y| Ok(vec![(-(x * x + y * y)).exp()]),
            (-8.0, 8.0),
            |x| (-8.0 + 0.1 * x, 8.0 + 0.1 * x),
            1,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v[0] - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_range() {
        assert!(integrate(|_| Ok(vec![1.0]), 1.0, 0.0, 1, QuadOptions::default()).is_err());
    }
}
