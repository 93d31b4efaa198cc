//! Mean-field (semiclassical) equations for the field amplitude, the
//! collective polarisation and the inversion, their fixed points and a
//! conservation-monitored integrator.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::linalg;
use crate::model::{critical_coupling, DickeParams, PhaseTag};

/// `alpha = <a>`, `beta = <J->`, `w = <Jz>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub w: f64,
}

impl SemiclassicalState {
    pub fn new(alpha: Complex64, beta: Complex64, w: f64) -> Self {
        SemiclassicalState { alpha, beta, w }
    }

    /// `w^2 + |beta|^2`, conserved by the dynamics.
    pub fn spin_length_sq(&self) -> f64 {
        self.w * self.w + self.beta.norm_sqr()
    }

    fn to_vec(self) -> SVector<f64, 5> {
        SVector::<f64, 5>::new(self.alpha.re, self.alpha.im, self.beta.re, self.beta.im, self.w)
    }

    fn from_vec(x: &SVector<f64, 5>) -> Self {
        SemiclassicalState {
            alpha: Complex64::new(x[0], x[1]),
            beta: Complex64::new(x[2], x[3]),
            w: x[4],
        }
    }

    fn max_abs(&self) -> f64 {
        self.alpha.norm().max(self.beta.norm()).max(self.w.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// A fixed point. For the trivial branches `sign` is the sign of the
/// inversion (`Minus`: `w = -N/2`); above threshold it is the sign in front
/// of `alpha_ss`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyBranch {
    pub state: SemiclassicalState,
    pub phase: PhaseTag,
    pub sign: Sign,
    pub stability: Stability,
}

impl SteadyBranch {
    pub fn stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

fn coupling(p: &DickeParams, lambda: f64) -> f64 {
    lambda / p.n_atoms.sqrt()
}

/// Time derivative `(d alpha/dt, d beta/dt, dw/dt)` at coupling `lambda`.
pub fn rhs(p: &DickeParams, lambda: f64, s: &SemiclassicalState) -> SemiclassicalState {
    let g = coupling(p, lambda);
    let i = Complex64::new(0.0, 1.0);
    let two_re_alpha = 2.0 * s.alpha.re;
    let two_re_beta = 2.0 * s.beta.re;
    SemiclassicalState {
        alpha: -(p.kappa + i * p.omega) * s.alpha - i * g * two_re_beta,
        beta: -i * p.omega0 * s.beta + 2.0 * i * g * two_re_alpha * s.w,
        // i g (alpha + alpha*)(beta - beta*) = -2 g (2 Re alpha) Im beta
        w: -2.0 * g * two_re_alpha * s.beta.im,
    }
}

fn rhs_vec(p: &DickeParams, lambda: f64, x: &SVector<f64, 5>) -> SVector<f64, 5> {
    rhs(p, lambda, &SemiclassicalState::from_vec(x)).to_vec()
}

fn jacobian(p: &DickeParams, lambda: f64, s: &SemiclassicalState) -> SMatrix<f64, 5, 5> {
    let g = coupling(p, lambda);
    let (x1, x4, x5) = (s.alpha.re, s.beta.im, s.w);
    let (k, w, w0) = (p.kappa, p.omega, p.omega0);
    SMatrix::<f64, 5, 5>::from_row_slice(&[
        -k, w, 0.0, 0.0, 0.0, //
        -w, -k, -2.0 * g, 0.0, 0.0, //
        0.0, 0.0, 0.0, w0, 0.0, //
        4.0 * g * x5, 0.0, -w0, 0.0, 4.0 * g * x1, //
        -4.0 * g * x4, 0.0, 0.0, -4.0 * g * x1, 0.0,
    ])
}

/// Growth rates of small deviations that stay on the conserved sphere:
/// the Jacobian projected onto the tangent space at `s`.
pub fn growth_rates(p: &DickeParams, lambda: f64, s: &SemiclassicalState) -> [Complex64; 4] {
    let jac = jacobian(p, lambda, s);
    let n = SVector::<f64, 5>::new(0.0, 0.0, s.beta.re, s.beta.im, s.w);
    let norm = n.norm();
    let n = if norm > 0.0 {
        n / norm
    } else {
        SVector::<f64, 5>::new(0.0, 0.0, 0.0, 0.0, 1.0)
    };
    // Orthonormal complement of n by Gram-Schmidt over the unit vectors.
    let mut basis: Vec<SVector<f64, 5>> = vec![n];
    for e in 0..5 {
        let mut v = SVector::<f64, 5>::zeros();
        v[e] = 1.0;
        for b in &basis {
            v -= *b * b.dot(&v);
        }
        let len = v.norm();
        if len > 1e-8 && basis.len() < 5 {
            basis.push(v / len);
        }
    }
    let q = SMatrix::<f64, 5, 4>::from_columns(&basis[1..5]);
    let m: Matrix4<f64> = q.transpose() * jac * q;
    linalg::real_eigenvalues(&m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stability: Stability,
    pub growth_rates: [Complex64; 4],
    pub max_growth: f64,
}

fn classify(max_growth: f64, scale: f64) -> Stability {
    let tol = 1e-12 * scale.max(1.0);
    if max_growth < -tol {
        Stability::Stable
    } else if max_growth > tol {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

fn jacobian_scale(p: &DickeParams, lambda: f64) -> f64 {
    p.kappa + p.omega + p.omega0 + 4.0 * lambda * p.n_atoms.sqrt()
}

/// Linear stability of a fixed point at coupling `lambda`.
pub fn stability(p: &DickeParams, lambda: f64, state: &SemiclassicalState) -> Result<StabilityReport> {
    p.validate()?;
    let d = rhs(p, lambda, state);
    let residual = d.max_abs();
    if residual > 1e-9 * p.n_atoms.max(1.0) {
        return Err(Error::NotFixedPoint { residual });
    }
    let rates = growth_rates(p, lambda, state);
    let max_growth = rates.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    Ok(StabilityReport {
        stability: classify(max_growth, jacobian_scale(p, lambda)),
        growth_rates: rates,
        max_growth,
    })
}

/// Superradiant fixed point with the given sign; requires `lambda >= lambda_c`.
pub fn superradiant_state(p: &DickeParams, lambda: f64, sign: Sign) -> SemiclassicalState {
    let n = p.n_atoms;
    let lc = critical_coupling(p);
    let mu = lc * lc / (lambda * lambda);
    let root = (1.0 - mu * mu).max(0.0).sqrt();
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    SemiclassicalState {
        alpha: s * n.sqrt() * lambda / Complex64::new(p.omega, -p.kappa) * root,
        beta: Complex64::new(-s * 0.5 * n * root, 0.0),
        w: -0.5 * n * mu,
    }
}

/// All fixed points on the sphere `w^2 + |beta|^2 = N^2/4`.
pub fn steady_states(p: &DickeParams, lambda: f64) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    check_finite("lambda", lambda)?;
    let n = p.n_atoms;
    let lc = critical_coupling(p);
    let zero = Complex64::new(0.0, 0.0);
    let classify_at = |s: &SemiclassicalState| -> Result<Stability> {
        Ok(stability(p, lambda, s)?.stability)
    };

    let mut out = Vec::with_capacity(4);
    for (sign, w) in [(Sign::Minus, -0.5 * n), (Sign::Plus, 0.5 * n)] {
        let state = SemiclassicalState::new(zero, zero, w);
        let stability = if lambda == lc && sign == Sign::Minus {
            Stability::Marginal
        } else {
            classify_at(&state)?
        };
        out.push(SteadyBranch {
            state,
            phase: PhaseTag::Normal,
            sign,
            stability,
        });
    }
    if lambda > lc {
        for sign in [Sign::Plus, Sign::Minus] {
            let state = superradiant_state(p, lambda, sign);
            out.push(SteadyBranch {
                state,
                phase: PhaseTag::Superradiant,
                sign,
                stability: classify_at(&state)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SemiclassicalState>,
    /// Largest relative deviation of `w^2 + |beta|^2` from its initial value.
    pub max_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &SemiclassicalState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Relative conservation tolerance enforced step by step.
pub const CONSERVATION_TOLERANCE: f64 = 1e-6;

// Dormand-Prince 5(4) tableau (the system is autonomous, so no nodes).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(
    p: &DickeParams,
    lambda: f64,
    x: &SVector<f64, 5>,
    h: f64,
) -> (SVector<f64, 5>, SVector<f64, 5>) {
    let mut k = [SVector::<f64, 5>::zeros(); 7];
    for s in 0..7 {
        let mut xs = *x;
        for j in 0..s {
            xs += k[j] * (h * A[s][j]);
        }
        k[s] = rhs_vec(p, lambda, &xs);
    }
    let mut x5 = *x;
    let mut x4 = *x;
    for s in 0..7 {
        x5 += k[s] * (h * B5[s]);
        x4 += k[s] * (h * B4[s]);
    }
    (x5, x5 - x4)
}

/// Integrates the mean-field equations from `s0` to `t_final`, sampling
/// every `dt`. Steps are adapted to a local error of 1e-11 and rejected
/// whenever the conserved spin length drifts by more than 1e-6 (relative).
pub fn integrate(
    p: &DickeParams,
    lambda: f64,
    s0: &SemiclassicalState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    p.validate()?;
    check_finite("t_final", t_final)?;
    check_finite("dt", dt)?;
    if dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be positive".into(),
        });
    }
    if t_final <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "t_final",
            reason: "must be positive".into(),
        });
    }
    let tol = 1e-11;
    let c0 = s0.spin_length_sq();
    let c_scale = if c0 > 0.0 { c0 } else { 0.25 * p.n_atoms * p.n_atoms };
    let samples = (t_final / dt).round().max(1.0) as usize;

    let mut x = s0.to_vec();
    let mut t = 0.0;
    let mut h = dt.min(0.01);
    let h_min = 1e-12 * t_final.max(1.0);
    let mut times = vec![0.0];
    let mut states = vec![*s0];
    let mut max_drift: f64 = 0.0;

    for k in 1..=samples {
        let t_next = if k == samples { t_final } else { k as f64 * dt };
        while t < t_next {
            let step = h.min(t_next - t);
            let (trial, err_vec) = dp_step(p, lambda, &x, step);
            let mut err: f64 = 0.0;
            for i in 0..5 {
                let sc = tol + tol * x[i].abs().max(trial[i].abs());
                err = err.max(err_vec[i].abs() / sc);
            }
            let drift = (SemiclassicalState::from_vec(&trial).spin_length_sq() - c0).abs() / c_scale;
            if err <= 1.0 && drift <= CONSERVATION_TOLERANCE {
                x = trial;
                t += step;
                max_drift = max_drift.max(drift);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (step * factor).max(h_min);
            } else {
                let factor = if err > 1.0 { (0.9 * err.powf(-0.25)).clamp(0.1, 0.5) } else { 0.5 };
                h = step * factor;
                if h < h_min {
                    return Err(Error::ConservationDrift { drift, time: t });
                }
            }
        }
        times.push(t_next);
        states.push(SemiclassicalState::from_vec(&x));
    }
    Ok(Trajectory {
        times,
        states,
        max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon() -> DickeParams {
        DickeParams::canonical()
    }

    #[test]
    fn trivial_points_are_fixed() {
        let p = canon();
        let z = Complex64::new(0.0, 0.0);
        for w in [-0.5, 0.5] {
            let d = rhs(&p, 0.4, &SemiclassicalState::new(z, z, w));
            assert_eq!(d.max_abs(), 0.0);
        }
    }

    #[test]
    fn superradiant_point_is_fixed() {
        let p = canon();
        for sign in [Sign::Plus, Sign::Minus] {
            let s = superradiant_state(&p, 0.6, sign);
            assert!(rhs(&p, 0.6, &s).max_abs() < 1e-12);
        }
    }

    #[test]
    fn double_threshold_values() {
        let p = canon();
        let l = 2.0 * p.lambda_c();
        let s = superradiant_state(&p, l, Sign::Plus);
        assert!((s.w + 0.125).abs() < 1e-15);
        assert!((s.beta.norm() - 0.484_123).abs() < 1e-6);
        assert!((s.alpha.norm() - 0.968_246).abs() < 1e-6);
        assert!((s.spin_length_sq() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn branch_counts_and_flags() {
        let p = canon();
        let below = steady_states(&p, 0.4).unwrap();
        assert_eq!(below.len(), 2);
        assert!(below[0].stable() && below[0].state.w == -0.5);
        assert_eq!(below[1].stability, Stability::Unstable);

        let above = steady_states(&p, 0.7).unwrap();
        assert_eq!(above.len(), 4);
        assert_eq!(above[0].stability, Stability::Unstable);
        assert_eq!(above[1].stability, Stability::Unstable);
        assert!(above[2].stable() && above[3].stable());

        let at = steady_states(&p, p.lambda_c()).unwrap();
        assert_eq!(at.len(), 2);
        assert_eq!(at[0].stability, Stability::Marginal);
    }

    #[test]
    fn stability_examples() {
        let p = canon();
        let z = Complex64::new(0.0, 0.0);
        let down = SemiclassicalState::new(z, z, -0.5);
        let up = SemiclassicalState::new(z, z, 0.5);
        assert_eq!(stability(&p, 0.4, &down).unwrap().stability, Stability::Stable);
        assert_eq!(stability(&p, 0.6, &down).unwrap().stability, Stability::Unstable);
        assert_eq!(stability(&p, 0.1, &up).unwrap().stability, Stability::Unstable);
        let off = SemiclassicalState::new(Complex64::new(0.1, 0.0), z, -0.5);
        assert!(matches!(stability(&p, 0.4, &off), Err(Error::NotFixedPoint { .. })));
    }

    #[test]
    fn fixed_point_trajectory_is_constant() {
        let p = canon();
        let s = superradiant_state(&p, 0.8, Sign::Plus);
        let tr = integrate(&p, 0.8, &s, 20.0, 0.5).unwrap();
        for x in &tr.states {
            assert!((x.alpha - s.alpha).norm() < 1e-9);
            assert!((x.w - s.w).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let p = canon();
        let s = superradiant_state(&p, 0.8, Sign::Plus);
        assert!(integrate(&p, 0.8, &s, 1.0, 0.0).is_err());
        assert!(integrate(&p, 0.8, &s, -1.0, 0.1).is_err());
    }
}
