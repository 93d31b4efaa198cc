//! Stochastic oracle: Wigner-picture Langevin trajectories of the linear
//! fluctuation system, integrated with the stochastic Heun scheme, and
//! Hann-windowed periodograms of the cavity output.

use dicke_core::fluctuations::build_system;
use dicke_core::linalg::CMatrix4;
use dicke_core::{covariance_lyapunov, Complex64, DickeParams};
use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

pub struct Oracle {
    pub dt: f64,
    pub steps: usize,
    pub segments: usize,
    pub seed: u64,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            dt: 0.01,
            steps: 40_000,
            segments: 400,
            seed: 0x5eed,
        }
    }
}

/// Periodogram estimate: segment mean and its standard error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

pub enum Probe {
    /// `|a_out|` periodogram (vacuum level 1/2).
    Intensity,
    /// `Re(a_out e^{-i theta})` periodogram (vacuum level 1/4).
    Quadrature(f64),
}

fn stationary_sampler(sigma: &CMatrix4) -> Matrix4<f64> {
    // Real coordinates x = (Re c, Im c, Re d, Im d); v = T x with
    // c = x0 + i x1, c+ = x0 - i x1.
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let tinv = CMatrix4::new(
        0.5 * one, 0.5 * one, z, z, //
        -0.5 * i, 0.5 * i, z, z, //
        z, z, 0.5 * one, 0.5 * one, //
        z, z, -0.5 * i, 0.5 * i,
    );
    let sym = (sigma + sigma.transpose()) * Complex64::new(0.5, 0.0);
    let cov = tinv * sym * tinv.transpose();
    let real = cov.map(|z| z.re);
    real.cholesky().expect("positive stationary covariance").l()
}

pub fn estimate(p: &DickeParams, lambda: f64, nu: f64, probe: &Probe, o: &Oracle) -> Estimate {
    let sys = build_system(p, lambda, p.phase_at(lambda)).unwrap();
    let m = sys.drift;
    let chol = stationary_sampler(&covariance_lyapunov(&sys).unwrap().second_moments);
    let kappa = p.kappa;
    let sk = (2.0 * kappa).sqrt();
    let dt = o.dt;
    let n = o.steps;
    let window: Vec<f64> = (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (n - 1) as f64).sin();
            s * s
        })
        .collect();
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let rot: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, nu * k as f64 * dt)).collect();

    let drift = |c: Complex64, d: Complex64| {
        let v = [c, c.conj(), d, d.conj()];
        let mut dc = Complex64::new(0.0, 0.0);
        let mut dd = Complex64::new(0.0, 0.0);
        for k in 0..4 {
            dc += m[(0, k)] * v[k];
            dd += m[(2, k)] * v[k];
        }
        (dc, dd)
    };

    let samples: Vec<f64> = (0..o.segments)
        .into_par_iter()
        .map(|seg| {
            let mut rng = ChaCha8Rng::seed_from_u64(o.seed.wrapping_mul(1_000_003).wrapping_add(seg as u64));
            let unit = Normal::new(0.0, 1.0).unwrap();
            let g = Vector4::from_fn(|_, _| unit.sample(&mut rng));
            let x = chol * g;
            let mut c = Complex64::new(x[0], x[1]);
            let mut d = Complex64::new(x[2], x[3]);
            let noise = Normal::new(0.0, (dt / 4.0).sqrt()).unwrap();
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let dw = Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
                let (fc, fd) = drift(c, d);
                let (cp, dp) = (c + fc * dt + sk * dw, d + fd * dt);
                let (gc, gd) = drift(cp, dp);
                let c_new = c + 0.5 * (fc + gc) * dt + sk * dw;
                let d_new = d + 0.5 * (fd + gd) * dt;
                let out = sk * 0.5 * (c + c_new) - dw / dt;
                let y = match probe {
                    Probe::Intensity => out,
                    Probe::Quadrature(theta) => Complex64::new((out * Complex64::from_polar(1.0, -theta)).re, 0.0),
                };
                acc += window[k] * y * rot[k];
                c = c_new;
                d = d_new;
            }
            dt * acc.norm_sqr() / w2
        })
        .collect();
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Estimate {
        mean,
        std_err: (var / k).sqrt(),
    }
}

/// `(lambda, nu, theta)`; `None` selects the fluorescence probe.
pub const ORACLE_POINTS: [(f64, f64, Option<f64>); 10] = [
    (0.3, 0.8, None),
    (0.4, 0.5, None),
    (0.6, 1.0, None),
    (0.45, 0.3, None),
    (0.4, 0.0, Some(std::f64::consts::FRAC_PI_2)),
    (0.49, 0.0, Some(1.7)),
    (0.3, 0.9, Some(std::f64::consts::FRAC_PI_2)),
    (0.49, 1.4, Some(0.0)),
    (0.6, 0.5, Some(0.0)),
    (0.8, 0.0, Some(std::f64::consts::FRAC_PI_4)),
];

pub struct Comparison {
    pub exact: f64,
    pub simulated: f64,
    pub std_err: f64,
}

impl Comparison {
    pub fn z(&self) -> f64 {
        (self.simulated - self.exact) / self.std_err
    }
}

/// Runs the oracle at one point against the analytic spectrum, which is
/// taken at `theta + theta_offset` (non-zero only for negative controls).
pub fn compare(p: &DickeParams, point: (f64, f64, Option<f64>), theta_offset: f64, o: &Oracle) -> Comparison {
    let (l, nu, th) = point;
    let tf = dicke_core::transfer_functions(p, l, p.phase_at(l)).unwrap();
    let (probe, vac, exact) = match th {
        None => (Probe::Intensity, 0.5, tf.fluorescence(nu).unwrap()),
        Some(t) => (Probe::Quadrature(t), 0.25, tf.homodyne(t + theta_offset, nu).unwrap()),
    };
    let e = estimate(p, l, nu, &probe, o);
    Comparison {
        exact,
        simulated: e.mean - vac,
        std_err: e.std_err,
    }
}
