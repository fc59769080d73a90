//! Adaptive Gauss–Kronrod quadrature and bracketing bisection.

use serde::{Deserialize, Serialize};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_depth: 40,
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = hw * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * hw, ((kronrod - gauss) * hw).abs())
}

/// Integrate `f` over `[a, b]` (either orientation) by globally adaptive
/// bisection of 15-point Kronrod panels: the panel with the largest error
/// estimate is split until the summed estimate meets the tolerance.
/// Endpoints are never evaluated.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (val, err) = gk15(f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        val,
        err,
        depth: 0,
    }];
    loop {
        let total: f64 = panels.iter().map(|p| p.val).sum();
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if !total.is_finite() || !total_err.is_finite() {
            let worst = panels
                .iter()
                .find(|p| !p.val.is_finite() || !p.err.is_finite())
                .unwrap_or(&panels[0]);
            return Err(Error::QuadratureDidNotConverge {
                a: worst.a,
                b: worst.b,
            });
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(total);
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("at least one panel");
        let worst = panels.swap_remove(i);
        if worst.depth >= opts.max_depth || panels.len() > MAX_PANELS {
            return Err(Error::QuadratureDidNotConverge {
                a: worst.a,
                b: worst.b,
            });
        }
        let m = 0.5 * (worst.a + worst.b);
        for (lo, hi) in [(worst.a, m), (m, worst.b)] {
            let (val, err) = gk15(f, lo, hi);
            panels.push(Panel {
                a: lo,
                b: hi,
                val,
                err,
                depth: worst.depth + 1,
            });
        }
    }
}

const MAX_PANELS: usize = 4096;

struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    depth: u32,
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign.
/// Stops when the bracket is narrower than `x_tol` or after `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketingFailed(format!(
            "f({a}) = {fa} and f({b}) = {fb} share a sign"
        )));
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= x_tol || m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(&|x: f64| x.powi(5) - 3.0 * x, 0.0, 2.0, &Default::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_sqrt_singularity() {
        let opts = QuadratureOptions {
            max_depth: 80,
            ..Default::default()
        };
        let v = integrate(&|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &opts).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let v = integrate(&|x: f64| x.ln(), 0.0, 1.0, &Default::default()).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_orientation() {
        let f = |x: f64| x.exp();
        let a = integrate(&f, 0.0, 1.0, &Default::default()).unwrap();
        let b = integrate(&f, 1.0, 0.0, &Default::default()).unwrap();
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn nonintegrable_fails() {
        let opts = QuadratureOptions {
            max_depth: 12,
            ..Default::default()
        };
        let r = integrate(&|x: f64| 1.0 / x, 0.0, 1.0, &opts);
        assert!(matches!(r, Err(Error::QuadratureDidNotConverge { .. })));
    }

    #[test]
    fn bisection() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14, 200).is_err());
    }
}
