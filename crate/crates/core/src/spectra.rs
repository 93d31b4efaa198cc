//! Frequency-domain Langevin solution and the cavity output spectra:
//! incoherent fluorescence, weak-probe transmission and normally ordered
//! homodyne (squeezing) spectra.
//!
//! Fourier convention `f(nu) = int e^{i nu t} f(t) dt`. The intracavity
//! fluctuation obeys `c(nu) = A(nu) a_in(nu) + B(nu) a_in+(-nu)`, and the
//! output `a_out = sqrt(2 kappa) c - a_in` has transfer functions
//! `F = sqrt(2 kappa) A - 1`, `G = sqrt(2 kappa) B`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::fluctuations::{build_system, FluctuationSystem};
use crate::linalg::{self, CMatrix4};
use crate::model::{DickeParams, PhaseTag};
use crate::semiclassical::{superradiant_state, Sign};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Grid points closer than this to a real pole are flagged, not evaluated.
pub const POLE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferRoute {
    /// The displayed resonant (`omega = omega0`) rational expressions.
    ClosedForm,
    /// Direct solve of `(M + i nu) v = -n`.
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunctions {
    pub system: FluctuationSystem,
    pub route: TransferRoute,
    /// Frequencies at which `M + i nu` is singular (purely imaginary
    /// eigenvalues of the drift matrix).
    pub real_poles: Vec<f64>,
}

pub fn transfer_functions(p: &DickeParams, lambda: f64, phase: PhaseTag) -> Result<TransferFunctions> {
    let system = build_system(p, lambda, phase)?;
    let route = if p.is_resonant() {
        TransferRoute::ClosedForm
    } else {
        TransferRoute::General
    };
    let scale = p.omega + p.omega0 + p.kappa + lambda;
    let real_poles = linalg::real_eigenvalues(&linalg::real_form(&system.drift))
        .iter()
        .filter(|e| e.re.abs() <= 1e-12 * scale)
        .map(|e| -e.im)
        .collect();
    Ok(TransferFunctions {
        system,
        route,
        real_poles,
    })
}

impl TransferFunctions {
    pub fn with_route(mut self, route: TransferRoute) -> Result<Self> {
        if route == TransferRoute::ClosedForm && !self.system.params.is_resonant() {
            return Err(Error::OutsideClosedForm {
                requirement: "omega = omega0".into(),
            });
        }
        self.route = route;
        Ok(self)
    }

    pub fn near_pole(&self, nu: f64) -> bool {
        self.real_poles.iter().any(|&p| (nu - p).abs() < POLE_GUARD)
    }

    fn kappa(&self) -> f64 {
        self.system.params.kappa
    }

    /// `(A(nu), B(nu))` by the selected route.
    pub fn at(&self, nu: f64) -> Result<(Complex64, Complex64)> {
        if self.near_pole(nu) {
            return Err(Error::Pole { nu });
        }
        match self.route {
            TransferRoute::ClosedForm => self.closed_form(nu),
            TransferRoute::General => self.general(nu),
        }
    }

    pub fn general(&self, nu: f64) -> Result<(Complex64, Complex64)> {
        let r = self.resolvent(nu)?;
        let s = (2.0 * self.kappa()).sqrt();
        Ok((-s * r[(0, 0)], -s * r[(0, 1)]))
    }

    /// `(M + i nu)^{-1}`.
    pub fn resolvent(&self, nu: f64) -> Result<CMatrix4> {
        let m = self.system.drift + CMatrix4::identity() * (I * nu);
        linalg::inverse(&m).ok_or(Error::Pole { nu })
    }

    pub fn closed_form(&self, nu: f64) -> Result<(Complex64, Complex64)> {
        let sys = &self.system;
        let p = &sys.params;
        if !p.is_resonant() {
            return Err(Error::OutsideClosedForm {
                requirement: "omega = omega0".into(),
            });
        }
        let (k, w0, l, mu) = (p.kappa, p.omega0, sys.lambda, sys.mu);
        let minus = Complex64::new(k, -(nu - w0));
        let plus = Complex64::new(k, -(nu + w0));
        let atom = Complex64::new(nu * nu - w0 * w0 / (mu * mu), 0.0);
        let cross = 2.0 * w0 * l * l * mu;
        let den = minus * plus * atom + 2.0 * w0 * cross;
        if den.norm() == 0.0 {
            return Err(Error::Pole { nu });
        }
        let s = (2.0 * k).sqrt();
        Ok((s * (plus * atom - I * cross) / den, -s * I * cross / den))
    }

    /// Output transfer functions `(F, G)`.
    pub fn output(&self, nu: f64) -> Result<(Complex64, Complex64)> {
        let (a, b) = self.at(nu)?;
        let s = (2.0 * self.kappa()).sqrt();
        Ok((s * a - 1.0, s * b))
    }

    /// Normally ordered quadrature spectrum
    /// `1/4 (|F(nu) e^{-i theta} + conj(G(-nu)) e^{i theta}|^2 - 1)`.
    pub fn homodyne(&self, theta: f64, nu: f64) -> Result<f64> {
        let (f, _) = self.output(nu)?;
        let (_, g_neg) = self.output(-nu)?;
        let e = Complex64::from_polar(1.0, theta);
        Ok(0.25 * ((f * e.conj() + g_neg.conj() * e).norm_sqr() - 1.0))
    }

    /// Incoherent fluorescence `|G(nu)|^2`.
    pub fn fluorescence(&self, nu: f64) -> Result<f64> {
        let (_, b) = self.at(nu)?;
        Ok(2.0 * self.kappa() * b.norm_sqr())
    }

    /// Probe transmission `(kappa/2)|A(nu)|^2`, unit height at resonance
    /// for the bare cavity.
    pub fn transmission(&self, nu: f64) -> Result<f64> {
        let (a, _) = self.at(nu)?;
        Ok(0.5 * self.kappa() * a.norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Fluorescence,
    Transmission,
    Homodyne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub kind: SpectrumKind,
    pub lambda: f64,
    pub phase: PhaseTag,
    /// Homodyne quadrature phase in radians.
    pub theta: Option<f64>,
    pub grid: Vec<f64>,
    /// `NaN` where `pole` is set.
    pub values: Vec<f64>,
    pub pole: Vec<bool>,
    /// Fluorescence only: coherent output flux `2 kappa |alpha_ss|^2`; the
    /// coherent spectrum is `2 pi` times this at `nu = 0` as a delta weight.
    pub coherent_flux: Option<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "nu_grid",
            reason: "must be non-empty".into(),
        });
    }
    for &x in grid {
        check_finite("nu_grid", x)?;
    }
    Ok(())
}

fn sample<F>(tf: &TransferFunctions, grid: &[f64], f: F) -> Result<(Vec<f64>, Vec<bool>)>
where
    F: Fn(&TransferFunctions, f64) -> Result<f64> + Sync,
{
    let out: Vec<Result<(f64, bool)>> = grid
        .par_iter()
        .map(|&nu| match f(tf, nu) {
            Ok(v) => Ok((v, false)),
            Err(Error::Pole { .. }) => Ok((f64::NAN, true)),
            Err(e) => Err(e),
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut pole = Vec::with_capacity(grid.len());
    for r in out {
        let (v, p) = r?;
        values.push(v);
        pole.push(p);
    }
    Ok((values, pole))
}

fn stable_transfer(p: &DickeParams, lambda: f64) -> Result<TransferFunctions> {
    transfer_functions(p, lambda, p.phase_at(lambda))
}

/// `2 kappa |alpha_ss|^2` on the stable branch (zero below threshold).
pub fn coherent_flux(p: &DickeParams, lambda: f64) -> f64 {
    match p.phase_at(lambda) {
        PhaseTag::Normal => 0.0,
        PhaseTag::Superradiant => {
            2.0 * p.kappa * superradiant_state(p, lambda, Sign::Plus).alpha.norm_sqr()
        }
    }
}

pub fn fluorescence(p: &DickeParams, lambda: f64, nu_grid: &[f64]) -> Result<SpectrumSeries> {
    check_grid(nu_grid)?;
    let tf = stable_transfer(p, lambda)?;
    let (values, pole) = sample(&tf, nu_grid, |t, nu| t.fluorescence(nu))?;
    Ok(SpectrumSeries {
        kind: SpectrumKind::Fluorescence,
        lambda,
        phase: tf.system.phase,
        theta: None,
        grid: nu_grid.to_vec(),
        values,
        pole,
        coherent_flux: Some(coherent_flux(p, lambda)),
    })
}

pub fn transmission(p: &DickeParams, lambda: f64, nup_grid: &[f64]) -> Result<SpectrumSeries> {
    check_grid(nup_grid)?;
    let tf = stable_transfer(p, lambda)?;
    let (values, pole) = sample(&tf, nup_grid, |t, nu| t.transmission(nu))?;
    Ok(SpectrumSeries {
        kind: SpectrumKind::Transmission,
        lambda,
        phase: tf.system.phase,
        theta: None,
        grid: nup_grid.to_vec(),
        values,
        pole,
        coherent_flux: None,
    })
}

pub fn homodyne(p: &DickeParams, lambda: f64, theta: f64, nu_grid: &[f64]) -> Result<SpectrumSeries> {
    check_grid(nu_grid)?;
    check_finite("theta", theta)?;
    let tf = stable_transfer(p, lambda)?;
    let (values, pole) = sample(&tf, nu_grid, |t, nu| t.homodyne(theta, nu))?;
    Ok(SpectrumSeries {
        kind: SpectrumKind::Homodyne,
        lambda,
        phase: tf.system.phase,
        theta: Some(theta),
        grid: nu_grid.to_vec(),
        values,
        pole,
        coherent_flux: None,
    })
}

/// Displayed resonant fluorescence formula, `|4 kappa omega0 lambda^2 mu / D|^2`.
pub fn fluorescence_closed_form(p: &DickeParams, lambda: f64, nu: f64) -> Result<f64> {
    let (den, _, mu) = resonant_denominator(p, lambda, nu)?;
    let num = 4.0 * p.kappa * p.omega0 * lambda * lambda * mu;
    Ok((num / den).norm_sqr())
}

/// Displayed resonant transmission formula.
pub fn transmission_closed_form(p: &DickeParams, lambda: f64, nu_p: f64) -> Result<f64> {
    let (den, plus_atom, mu) = resonant_denominator(p, lambda, nu_p)?;
    let num = plus_atom - I * (2.0 * p.omega0 * lambda * lambda * mu);
    Ok(p.kappa * p.kappa * (num / den).norm_sqr())
}

fn resonant_denominator(p: &DickeParams, lambda: f64, nu: f64) -> Result<(Complex64, Complex64, f64)> {
    if !p.is_resonant() {
        return Err(Error::OutsideClosedForm {
            requirement: "omega = omega0".into(),
        });
    }
    let phase = p.phase_at(lambda);
    let mu = crate::model::mu_tilde(p, lambda, phase)?;
    let (k, w0) = (p.kappa, p.omega0);
    let plus = Complex64::new(k, -(nu + w0));
    let minus = Complex64::new(k, -(nu - w0));
    let atom = nu * nu - w0 * w0 / (mu * mu);
    let den = minus * plus * atom + 4.0 * w0 * w0 * lambda * lambda * mu;
    if den.norm() == 0.0 {
        return Err(Error::Pole { nu });
    }
    Ok((den, plus * atom, mu))
}

/// 2001 points over `[-3 omega0/mu, 3 omega0/mu]`.
pub fn default_nu_grid(p: &DickeParams, lambda: f64) -> Vec<f64> {
    let mu = crate::model::mu_tilde(p, lambda, p.phase_at(lambda)).unwrap_or(1.0);
    let half = 3.0 * p.omega0 / mu;
    let n = 2001;
    (0..n)
        .map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSqueezing {
    /// Minimising phase in `[0, pi)`; `None` when the objective is flat.
    pub theta_min: Option<f64>,
    pub s_min: f64,
}

/// Minimises `S_out,theta(0)` over `theta`. At `nu = 0`,
/// `S = 1/4 (|F|^2 + |G|^2 + 2 Re(F G e^{-2i theta}) - 1)`, so the minimum
/// `1/4 ((|F| - |G|)^2 - 1)` sits at `2 theta = arg(F G) - pi`.
pub fn optimal_squeezing(p: &DickeParams, lambda: f64) -> Result<OptimalSqueezing> {
    let tf = stable_transfer(p, lambda)?;
    let (f, g) = tf.output(0.0)?;
    let fg = f * g;
    if fg.norm() <= 1e-14 {
        return Ok(OptimalSqueezing {
            theta_min: None,
            s_min: tf.homodyne(0.0, 0.0)?,
        });
    }
    let pi = std::f64::consts::PI;
    let theta = (0.5 * (fg.arg() - pi)).rem_euclid(pi);
    Ok(OptimalSqueezing {
        theta_min: Some(theta),
        s_min: 0.25 * ((f.norm() - g.norm()).powi(2) - 1.0),
    })
}
