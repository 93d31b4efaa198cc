//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands, on finite intervals and on the whole real line.

use std::collections::BinaryHeap;

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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Vec<f64>,
    /// Sum over intervals of the max-norm Kronrod/Gauss difference.
    pub error: f64,
    pub intervals: usize,
}

struct Interval {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64, &mut [f64])>(f: &F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Interval {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let nodes: &[f64] = if j == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in nodes {
            f(c + s * h * x, buf);
            for k in 0..dim {
                kron[k] += wk * buf[k];
                if j % 2 == 1 {
                    gauss[k] += WG[j / 2] * buf[k];
                }
            }
        }
    }
    let mut error: f64 = 0.0;
    for k in 0..dim {
        kron[k] *= h;
        gauss[k] *= h;
        error = error.max((kron[k] - gauss[k]).abs());
    }
    if !error.is_finite() || kron.iter().any(|v| !v.is_finite()) {
        error = f64::INFINITY;
    }
    Interval {
        a,
        b,
        value: kron,
        error,
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// partition given by `points` (sorted, at least two entries).
pub fn integrate<F>(f: F, dim: usize, points: &[f64], tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64, &mut [f64]),
{
    if points.len() < 2 {
        return Err(Error::Numerical("quadrature needs at least one interval"));
    }
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1], dim, &mut buf));
        }
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for iv in heap.iter() {
            for k in 0..dim {
                total[k] += iv.value[k];
            }
            err += iv.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = tol.abs.max(tol.rel * scale);
        if err <= target {
            return Ok(Estimate {
                value: total,
                error: err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > tol.max_intervals || mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureNotConverged {
                achieved: err,
                requested: target,
            });
        }
        heap.push(gk15(&f, worst.a, mid, dim, &mut buf));
        heap.push(gk15(&f, mid, worst.b, dim, &mut buf));
    }
}

/// Integrates over the whole real line through `nu = scale * tan(u)`.
/// `breaks` are interior points (typically resonance positions and their
/// flanks) added to the initial partition.
pub fn integrate_real_line<F>(
    f: F,
    dim: usize,
    scale: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate>
where
    F: Fn(f64, &mut [f64]),
{
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut pts: Vec<f64> = breaks.iter().map(|&x| (x / scale).atan()).collect();
    pts.push(-half_pi);
    pts.push(half_pi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let g = |u: f64, out: &mut [f64]| {
        let c = u.cos();
        let jac = scale / (c * c);
        f(scale * u.tan(), out);
        for v in out.iter_mut() {
            *v *= jac;
        }
    };
    integrate(g, dim, &pts, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let est = integrate(
            |x, out| out[0] = x.powi(6) - 2.0 * x,
            1,
            &[0.0, 2.0],
            Tolerance::default(),
        )
        .unwrap();
        assert!((est.value[0] - (128.0 / 7.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_on_real_line() {
        let g = 1e-3;
        let est = integrate_real_line(
            |x, out| {
                out[0] = g / ((x - 3.0).powi(2) + g * g);
                out[1] = 1.0 / (1.0 + x * x);
            },
            2,
            1.0,
            &[3.0 - 10.0 * g, 3.0, 3.0 + 10.0 * g],
            Tolerance::default(),
        )
        .unwrap();
        let pi = std::f64::consts::PI;
        assert!((est.value[0] - pi).abs() < 1e-8, "{}", est.value[0]);
        assert!((est.value[1] - pi).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 0.0,
            max_intervals: 4,
        };
        let r = integrate(|x, out| out[0] = x.abs().sqrt().recip(), 1, &[-1.0, 1.0], tol);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }
}
