//! Steady-state second moments of the fluctuations (Lyapunov solve and
//! frequency integral), output photon flux, EPR-type variances, the
//! output-field estimator `V_est`, and the superradiant `V1`/`V2` measures.
//!
//! Quadratures are `X^theta = (e^{-i theta} c + e^{i theta} c+)/2`, so the
//! vacuum variance is 1/4. Above threshold everything is computed about the
//! `+` branch; the fluctuation Hamiltonian is invariant under
//! `(c, d) -> (-c, -d)`, so the `-` branch gives identical second moments.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::fluctuations::{build_system, eigenvalues, mixing_angle, FluctuationSystem};
use crate::linalg::{self, CMatrix4};
use crate::model::{DickeParams, PhaseTag};
use crate::quadrature::{self, Tolerance};
use crate::spectra::{self, transfer_functions, TransferFunctions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMethod {
    Lyapunov,
    FrequencyIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cavity,
    Atom,
}

/// Quadrature weights over the basis `(c, c+, d, d+)`.
pub type Weights = [Complex64; 4];

pub fn quadrature_weights(mode: Mode, theta: f64) -> Weights {
    let z = Complex64::new(0.0, 0.0);
    let e = Complex64::from_polar(0.5, -theta);
    match mode {
        Mode::Cavity => [e, e.conj(), z, z],
        Mode::Atom => [z, z, e, e.conj()],
    }
}

fn combine(terms: &[(f64, Weights)]) -> Weights {
    let mut w = [Complex64::new(0.0, 0.0); 4];
    for (a, t) in terms {
        for k in 0..4 {
            w[k] += *a * t[k];
        }
    }
    w
}

/// Steady second moments `S_ij = <v_i v_j>` (operator order as written) of
/// the fluctuation vector `v = (c, c+, d, d+)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub lambda: f64,
    pub phase: PhaseTag,
    pub method: CovarianceMethod,
    pub second_moments: CMatrix4,
    /// Quadrature error estimate (frequency integral only).
    pub error_bound: Option<f64>,
}

impl CovarianceReport {
    /// Normally ordered moments: `<c c+>` and `<d d+>` lose their commutator.
    pub fn normal_ordered(&self) -> CMatrix4 {
        let mut n = self.second_moments;
        n[(0, 1)] -= 1.0;
        n[(2, 3)] -= 1.0;
        n
    }

    /// `<c+ c>`.
    pub fn photon_number(&self) -> f64 {
        self.second_moments[(1, 0)].re
    }

    /// `<d+ d>`.
    pub fn atom_excitation(&self) -> f64 {
        self.second_moments[(3, 2)].re
    }

    /// `<X^2>` for the Hermitian combination `X = sum_i w_i v_i`.
    pub fn variance(&self, w: &Weights) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += w[i] * w[j] * self.second_moments[(i, j)];
            }
        }
        acc.re
    }

    pub fn quadrature_variance(&self, mode: Mode, theta: f64) -> f64 {
        self.variance(&quadrature_weights(mode, theta))
    }
}

/// At `lambda = 0` the undamped atoms decouple and stay in vacuum; their
/// block is replaced by a damped placeholder (it receives no noise, so the
/// cavity moments are unchanged) and `<d d+> = 1` restored afterwards.
fn decoupled_drift(sys: &FluctuationSystem) -> Option<CMatrix4> {
    if sys.lambda != 0.0 {
        return None;
    }
    let mut m = sys.drift;
    for i in 2..4 {
        for j in 2..4 {
            m[(i, j)] = if i == j { Complex64::new(-1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        }
    }
    Some(m)
}

/// The exact moments satisfy `conj(<v_i v_j>) = <v_j+ v_i+>`; near-marginal
/// damping makes the linear solves ill-conditioned, so the computed matrix
/// is projected back onto that symmetry.
fn enforce_conjugation(s: &mut CMatrix4) {
    const DAGGER: [usize; 4] = [1, 0, 3, 2];
    let orig = *s;
    for i in 0..4 {
        for j in 0..4 {
            s[(i, j)] = 0.5 * (orig[(i, j)] + orig[(DAGGER[j], DAGGER[i])].conj());
        }
    }
}

fn stability_guard(sys: &FluctuationSystem) -> Result<()> {
    if sys.lambda == 0.0 {
        return Ok(());
    }
    let p = &sys.params;
    let scale = p.omega + p.omega0 + p.kappa + sys.lambda;
    let max_re = sys.max_real_part();
    if max_re >= -1e-12 * scale {
        return Err(Error::NoSteadyState { max_re });
    }
    Ok(())
}

pub fn covariance_lyapunov(sys: &FluctuationSystem) -> Result<CovarianceReport> {
    stability_guard(sys)?;
    let decoupled = decoupled_drift(sys);
    let m = decoupled.unwrap_or(sys.drift);
    let mut s = linalg::lyapunov(&m, &sys.diffusion)?;
    if decoupled.is_some() {
        s[(2, 3)] += 1.0;
    }
    enforce_conjugation(&mut s);
    Ok(CovarianceReport {
        lambda: sys.lambda,
        phase: sys.phase,
        method: CovarianceMethod::Lyapunov,
        second_moments: s,
        error_bound: None,
    })
}

fn resonance_breaks(sys: &FluctuationSystem) -> Vec<f64> {
    let mut out = Vec::new();
    let evs = linalg::real_eigenvalues(&linalg::real_form(&sys.drift));
    for e in evs {
        let c = -e.im;
        let w = e.re.abs().max(1e-12);
        for k in [-10.0, -1.0, 0.0, 1.0, 10.0] {
            out.push(c + k * w);
        }
    }
    out
}

/// `(1/2 pi) int R(nu) D R(-nu)^T d nu` with `R = (M + i nu)^{-1}`; only
/// `D_01 = 2 kappa` is nonzero, so the integrand is `2 kappa R_i0(nu) R_j1(-nu)`.
pub fn covariance_integral(p: &DickeParams, lambda: f64, phase: PhaseTag) -> Result<CovarianceReport> {
    let sys = build_system(p, lambda, phase)?;
    stability_guard(&sys)?;
    let decoupled = decoupled_drift(&sys);
    let m = decoupled.unwrap_or(sys.drift);
    let two_kappa = 2.0 * p.kappa;
    let i = Complex64::new(0.0, 1.0);
    let resolvent = |nu: f64| linalg::inverse(&(m + CMatrix4::identity() * (i * nu)));
    let integrand = |nu: f64, out: &mut [f64]| {
        match (resolvent(nu), resolvent(-nu)) {
            (Some(rp), Some(rm)) => {
                for a in 0..4 {
                    for b in 0..4 {
                        let v = two_kappa * rp[(a, 0)] * rm[(b, 1)] / (2.0 * PI);
                        out[2 * (4 * a + b)] = v.re;
                        out[2 * (4 * a + b) + 1] = v.im;
                    }
                }
            }
            _ => out.iter_mut().for_each(|x| *x = f64::NAN),
        }
    };
    let scale = p.omega.max(p.omega0).max(p.kappa);
    let tol = Tolerance {
        abs: 1e-8,
        rel: 1e-10,
        max_intervals: 20000,
    };
    let est = quadrature::integrate_real_line(integrand, 32, scale, &resonance_breaks(&sys), tol)?;
    let mut s = CMatrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            s[(a, b)] = Complex64::new(est.value[2 * (4 * a + b)], est.value[2 * (4 * a + b) + 1]);
        }
    }
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("covariance integrand hit a pole"));
    }
    if decoupled.is_some() {
        s[(2, 3)] += 1.0;
    }
    enforce_conjugation(&mut s);
    Ok(CovarianceReport {
        lambda,
        phase,
        method: CovarianceMethod::FrequencyIntegral,
        second_moments: s,
        error_bound: Some(est.error),
    })
}

fn stable_covariance(p: &DickeParams, lambda: f64) -> Result<CovarianceReport> {
    covariance_lyapunov(&build_system(p, lambda, p.phase_at(lambda))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonFlux {
    /// `2 kappa <c+ c>`.
    pub fluctuation: f64,
    /// `2 kappa |alpha_ss|^2`, zero below threshold.
    pub coherent: f64,
}

impl PhotonFlux {
    pub fn total(&self) -> f64 {
        self.fluctuation + self.coherent
    }
}

pub fn photon_flux(p: &DickeParams, lambda: f64) -> Result<PhotonFlux> {
    let cov = stable_covariance(p, lambda)?;
    Ok(PhotonFlux {
        fluctuation: 2.0 * p.kappa * cov.photon_number(),
        coherent: spectra::coherent_flux(p, lambda),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementScalars {
    pub epr_sum: f64,
    pub epr_product: f64,
    pub v_est: Option<f64>,
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    pub theta: f64,
    pub phi: f64,
}

/// Variances of `u = X_c^theta + X_d^phi` and `v = X_c^{theta+pi/2} - X_d^{phi+pi/2}`.
pub fn epr_pair(cov: &CovarianceReport, theta: f64, phi: f64) -> (f64, f64) {
    let h = 0.5 * PI;
    let u = combine(&[
        (1.0, quadrature_weights(Mode::Cavity, theta)),
        (1.0, quadrature_weights(Mode::Atom, phi)),
    ]);
    let v = combine(&[
        (1.0, quadrature_weights(Mode::Cavity, theta + h)),
        (-1.0, quadrature_weights(Mode::Atom, phi + h)),
    ]);
    (cov.variance(&u), cov.variance(&v))
}

/// Duan sum and product criterion values (entangled when `< 1` / `< 1/4`).
pub fn epr_variance(p: &DickeParams, lambda: f64, theta: f64, phi: f64) -> Result<EntanglementScalars> {
    check_finite("theta", theta)?;
    check_finite("phi", phi)?;
    let cov = stable_covariance(p, lambda)?;
    let (du, dv) = epr_pair(&cov, theta, phi);
    Ok(EntanglementScalars {
        epr_sum: du + dv,
        epr_product: du * dv,
        v_est: None,
        v1: None,
        v2: None,
        theta,
        phi,
    })
}

/// Every scalar available at this point: `V_est` always, `V1`/`V2` above
/// threshold on resonance.
pub fn entanglement_scalars(p: &DickeParams, lambda: f64, theta: f64, phi: f64) -> Result<EntanglementScalars> {
    let mut s = epr_variance(p, lambda, theta, phi)?;
    s.v_est = Some(v_est(p, lambda, theta)?);
    if p.phase_at(lambda) == PhaseTag::Superradiant && p.is_resonant() {
        let v = v1_v2(p, lambda, theta)?;
        s.v1 = Some(v.v1);
        s.v2 = Some(v.v2);
    }
    Ok(s)
}

fn spectrum_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-10,
        rel: 1e-9,
        max_intervals: 20000,
    }
}

fn homodyne_breaks(tf: &TransferFunctions) -> Vec<f64> {
    let mut b = resonance_breaks(&tf.system);
    b.extend(b.clone().iter().map(|x| -x));
    b.retain(|x| !tf.near_pole(*x));
    b
}

/// `(2/kappa)(1/2 pi)[int_{S<0} S_theta + int_{S<0} S_{theta+pi/2}] + 1`.
pub fn v_est(p: &DickeParams, lambda: f64, theta: f64) -> Result<f64> {
    check_finite("theta", theta)?;
    if p.kappa <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: "V_est needs a damped cavity".into(),
        });
    }
    let tf = transfer_functions(p, lambda, p.phase_at(lambda))?;
    let h = 0.5 * PI;
    let f = |nu: f64, out: &mut [f64]| {
        let a = tf.homodyne(theta, nu).unwrap_or(f64::NAN);
        let b = tf.homodyne(theta + h, nu).unwrap_or(f64::NAN);
        out[0] = a.min(0.0);
        out[1] = b.min(0.0);
    };
    let scale = p.omega.max(p.omega0);
    let est = quadrature::integrate_real_line(f, 2, scale, &homodyne_breaks(&tf), spectrum_tolerance())?;
    let total = est.value[0] + est.value[1];
    if !total.is_finite() {
        return Err(Error::Pole { nu: 0.0 });
    }
    Ok(2.0 / p.kappa * total / (2.0 * PI) + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V1V2Route {
    pub v1: f64,
    pub v2: f64,
    /// `<(Delta X_cd^{theta+pi/2})^2>`.
    pub var_x: f64,
    /// `<(Delta Y_cd^theta)^2>`.
    pub var_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V1V2 {
    pub v1: f64,
    pub v2: f64,
    pub theta: f64,
    pub gamma2: f64,
    pub omega0_tilde: f64,
    /// `<(Delta X_cd^{theta+pi/2})^2>`.
    pub var_x: f64,
    /// `<(Delta Y_cd^theta)^2>`.
    pub var_y: f64,
}

/// The same measures recovered from branch-resolved output quadrature
/// variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V1V2Output {
    pub route: V1V2Route,
    /// Photonic and atomic windows overlapped, so the sign-region split
    /// was used instead of `5 |Re eps|` windows.
    pub windows_overlap: bool,
}

struct SuperradiantFrame {
    sys: FluctuationSystem,
    gamma: f64,
    omega0_tilde: f64,
}

fn route(var_x: f64, var_y: f64, gamma: f64) -> V1V2Route {
    let cs2 = (gamma.cos() * gamma.sin()).powi(2);
    V1V2Route {
        v1: (var_x + var_y) / cs2,
        v2: var_x * var_y / (0.25 * cs2 * cs2),
        var_x,
        var_y,
    }
}

/// Superradiant inseparability measures built from
/// `X_cd^theta = cos^2 g X_c^theta - cos g sin g [cos theta sqrt(w0/wt) X_d^0 + sin theta sqrt(wt/w0) X_d^{pi/2}]`
/// and `Y_cd^theta` (same with `sin^2 g` and `+`), on resonance.
pub fn v1_v2(p: &DickeParams, lambda: f64, theta: f64) -> Result<V1V2> {
    let frame = superradiant_frame(p, lambda, theta)?;
    let cov = covariance_lyapunov(&frame.sys)?;
    let (gamma, wt) = (frame.gamma, frame.omega0_tilde);
    let w0 = p.omega0;
    let (c, s) = (gamma.cos(), gamma.sin());
    let h = 0.5 * PI;
    let atom_part = |th: f64| {
        combine(&[
            (th.cos() * (w0 / wt).sqrt(), quadrature_weights(Mode::Atom, 0.0)),
            (th.sin() * (wt / w0).sqrt(), quadrature_weights(Mode::Atom, h)),
        ])
    };
    let x_cd = |th: f64| combine(&[(c * c, quadrature_weights(Mode::Cavity, th)), (-c * s, atom_part(th))]);
    let y_cd = |th: f64| combine(&[(s * s, quadrature_weights(Mode::Cavity, th)), (c * s, atom_part(th))]);
    let r = route(cov.variance(&x_cd(theta + h)), cov.variance(&y_cd(theta)), gamma);
    Ok(V1V2 {
        v1: r.v1,
        v2: r.v2,
        theta,
        gamma2: gamma,
        omega0_tilde: wt,
        var_x: r.var_x,
        var_y: r.var_y,
    })
}

fn superradiant_frame(p: &DickeParams, lambda: f64, theta: f64) -> Result<SuperradiantFrame> {
    check_finite("theta", theta)?;
    if !(lambda > p.lambda_c()) {
        return Err(Error::PhaseMismatch {
            phase: PhaseTag::Superradiant,
            lambda,
            lambda_c: p.lambda_c(),
        });
    }
    if !p.is_resonant() {
        return Err(Error::OutsideClosedForm {
            requirement: "omega = omega0".into(),
        });
    }
    let sys = build_system(p, lambda, PhaseTag::Superradiant)?;
    let mu = sys.mu;
    Ok(SuperradiantFrame {
        sys,
        gamma: mixing_angle(mu),
        omega0_tilde: p.omega0 * (1.0 + 1.0 / mu) / 2.0,
    })
}

/// Inverts the output relations: `<:X_out:>` integrated over each branch
/// window, divided by `2 kappa`, plus the vacuum contribution of the
/// corresponding internal combination.
pub fn v1_v2_from_output(p: &DickeParams, lambda: f64, theta: f64) -> Result<V1V2Output> {
    let frame = superradiant_frame(p, lambda, theta)?;
    if p.kappa <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: "output-field route needs a damped cavity".into(),
        });
    }
    let (gamma, wt) = (frame.gamma, frame.omega0_tilde);
    let w0 = p.omega0;
    let (c, s) = (gamma.cos(), gamma.sin());
    let h = 0.5 * PI;
    let tf = transfer_functions(p, lambda, PhaseTag::Superradiant)?;
    let ev = eigenvalues(&frame.sys);
    let centre = |pair: [Complex64; 2]| pair[0].im.abs().max(pair[1].im.abs());
    let width = |pair: [Complex64; 2]| 5.0 * pair[0].re.abs().min(pair[1].re.abs());
    let (c_ph, h_ph) = (centre(ev.photonic), width(ev.photonic));
    let (c_at, h_at) = (centre(ev.atomic), width(ev.atomic));
    let (lo_c, lo_h, hi_c, hi_h) = if c_ph <= c_at {
        (c_ph, h_ph, c_at, h_at)
    } else {
        (c_at, h_at, c_ph, h_ph)
    };
    let overlap = lo_c + lo_h >= hi_c - hi_h;

    let ph_theta = theta + h;
    let spectrum = |th: f64, nu: f64, negative_only: bool| {
        let v = tf.homodyne(th, nu).unwrap_or(f64::NAN);
        if negative_only {
            v.min(0.0)
        } else {
            v
        }
    };
    let tol = spectrum_tolerance();
    let (n_ph, n_at) = if !overlap {
        let window = |th: f64, c0: f64, hw: f64| -> Result<f64> {
            let f = |nu: f64, out: &mut [f64]| out[0] = spectrum(th, nu, false);
            let total = if c0 <= hw {
                quadrature::integrate(f, 1, &[-c0 - hw, -c0, 0.0, c0, c0 + hw], tol)?.value[0]
            } else {
                let a = quadrature::integrate(&f, 1, &[c0 - hw, c0, c0 + hw], tol)?.value[0];
                let b = quadrature::integrate(&f, 1, &[-c0 - hw, -c0, -c0 + hw], tol)?.value[0];
                a + b
            };
            Ok(total / (2.0 * PI))
        };
        (window(ph_theta, c_ph, h_ph)?, window(theta, c_at, h_at)?)
    } else {
        // Sign-region rule, split halfway between the branch resonances.
        let mid = 0.5 * (c_ph + c_at);
        let inner = |th: f64| -> Result<f64> {
            let f = |nu: f64, out: &mut [f64]| out[0] = spectrum(th, nu, true);
            let mut pts = vec![-mid, mid];
            pts.extend(homodyne_breaks(&tf).into_iter().filter(|x| x.abs() < mid));
            pts.sort_by(f64::total_cmp);
            Ok(quadrature::integrate(f, 1, &pts, tol)?.value[0] / (2.0 * PI))
        };
        let outer = |th: f64| -> Result<f64> {
            let f = |nu: f64, out: &mut [f64]| {
                out[0] = if nu.abs() >= mid { spectrum(th, nu, true) } else { 0.0 };
            };
            let mut pts: Vec<f64> = homodyne_breaks(&tf).into_iter().filter(|x| x.abs() > mid).collect();
            pts.push(mid);
            pts.push(-mid);
            let scale = p.omega.max(p.omega0);
            Ok(quadrature::integrate_real_line(f, 1, scale, &pts, tol)?.value[0] / (2.0 * PI))
        };
        if c_ph <= c_at {
            (inner(ph_theta)?, outer(theta)?)
        } else {
            (outer(ph_theta)?, inner(theta)?)
        }
    };
    if !(n_ph.is_finite() && n_at.is_finite()) {
        return Err(Error::Numerical("branch window contains a pole"));
    }
    let (c2, s2) = (c * c, s * s);
    let (cos2, sin2) = (theta.cos().powi(2), theta.sin().powi(2));
    let vac_x = 0.25 * (c2 * c2 + c2 * s2 * (w0 / wt * sin2 + wt / w0 * cos2));
    let vac_y = 0.25 * (s2 * s2 + c2 * s2 * (w0 / wt * cos2 + wt / w0 * sin2));
    let two_kappa = 2.0 * p.kappa;
    Ok(V1V2Output {
        route: route(n_ph / two_kappa + vac_x, n_at / two_kappa + vac_y, gamma),
        windows_overlap: overlap,
    })
}
