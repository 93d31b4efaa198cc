//! Parameter records, the Raman-to-Dicke mapping and the critical couplings.
//!
//! Physical numbers live in [`RamanPhysicalParams`] and are converted once;
//! everything downstream works with [`DickeParams`], usually in units of
//! `omega0` (the canonical point is `omega = omega0 = 1`, `kappa = 0.2`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::fluctuations;

/// Default relative tolerance for the Raman balance conditions.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// Default ratio required by the large-detuning check.
pub const ADIABATIC_MARGIN: f64 = 100.0;

/// Unit shared by every frequency in a [`RamanPhysicalParams`] record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    /// Angular frequency in rad/s.
    RadPerSecond,
    /// Angular frequency quoted as `value / 2pi` in kHz.
    TwoPiKilohertz,
    /// Angular frequency quoted as `value / 2pi` in MHz.
    TwoPiMegahertz,
    /// Already normalised (e.g. to `omega0`).
    Dimensionless,
}

impl FrequencyUnit {
    /// Factor converting a value in this unit to `value / 2pi` in Hz.
    pub fn to_hertz(self) -> Option<f64> {
        match self {
            FrequencyUnit::RadPerSecond => Some(1.0 / (2.0 * std::f64::consts::PI)),
            FrequencyUnit::TwoPiKilohertz => Some(1e3),
            FrequencyUnit::TwoPiMegahertz => Some(1e6),
            FrequencyUnit::Dimensionless => None,
        }
    }
}

/// Raw hardware numbers for the two-channel Raman scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanPhysicalParams {
    pub unit: FrequencyUnit,
    /// Cavity dipole coupling on the r and s channels.
    pub g_r: f64,
    pub g_s: f64,
    /// Laser Rabi frequencies.
    pub rabi_r: f64,
    pub rabi_s: f64,
    /// Detunings from the excited states.
    pub detuning_r: f64,
    pub detuning_s: f64,
    /// Cavity field (amplitude) decay rate.
    pub kappa: f64,
    pub n_atoms: f64,
    /// Excited-state linewidth.
    pub gamma: f64,
    pub cavity_detuning: f64,
    /// Ground-state splitting and the reference frequency close to it.
    pub ground_splitting: f64,
    pub ground_splitting_ref: f64,
}

impl RamanPhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g_r", self.g_r),
            ("g_s", self.g_s),
            ("rabi_r", self.rabi_r),
            ("rabi_s", self.rabi_s),
            ("detuning_r", self.detuning_r),
            ("detuning_s", self.detuning_s),
            ("kappa", self.kappa),
            ("n_atoms", self.n_atoms),
            ("gamma", self.gamma),
            ("cavity_detuning", self.cavity_detuning),
            ("ground_splitting", self.ground_splitting),
            ("ground_splitting_ref", self.ground_splitting_ref),
        ] {
            check_finite(name, v)?;
        }
        if self.detuning_r == 0.0 {
            return Err(invalid("detuning_r", "must be non-zero"));
        }
        if self.detuning_s == 0.0 {
            return Err(invalid("detuning_s", "must be non-zero"));
        }
        if self.n_atoms < 1.0 {
            return Err(invalid("n_atoms", "must be at least 1"));
        }
        if self.kappa < 0.0 {
            return Err(invalid("kappa", "must be non-negative"));
        }
        if self.gamma < 0.0 {
            return Err(invalid("gamma", "must be non-negative"));
        }
        Ok(())
    }

    /// Builds a record whose channels satisfy the balance conditions exactly
    /// and which maps onto `target` under [`to_dicke`].
    ///
    /// `g_r`, both detunings and `n_atoms` are free choices; the remaining
    /// couplings, the cavity detuning and the ground splitting are solved for.
    /// The detunings must share a sign so that `g_s` is real.
    pub fn balanced_for(
        target: &DickeParams,
        lambda: f64,
        g_r: f64,
        detuning_r: f64,
        detuning_s: f64,
        gamma: f64,
        unit: FrequencyUnit,
    ) -> Result<Self> {
        if detuning_r * detuning_s <= 0.0 {
            return Err(invalid(
                "detuning_s",
                "balanced channels need detunings of the same sign",
            ));
        }
        let n = target.n_atoms;
        let g_s = g_r * (detuning_s / detuning_r).sqrt();
        let rabi_r = 2.0 * lambda * detuning_r / (n.sqrt() * g_r);
        let rabi_s = rabi_r * g_r * detuning_s / (g_s * detuning_r);
        let raman = RamanPhysicalParams {
            unit,
            g_r,
            g_s,
            rabi_r,
            rabi_s,
            detuning_r,
            detuning_s,
            kappa: target.kappa,
            n_atoms: n,
            gamma,
            cavity_detuning: target.omega - n * g_r * g_r / detuning_r,
            ground_splitting: target.omega0,
            ground_splitting_ref: 0.0,
        };
        raman.validate()?;
        Ok(raman)
    }
}

/// Coefficients of the effective Hamiltonian before the balance conditions
/// are imposed (dispersive `delta a+a Jz` term and separate rotating /
/// counter-rotating couplings).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonianParams {
    pub omega: f64,
    pub omega0: f64,
    pub delta: f64,
    pub lambda_r: f64,
    pub lambda_s: f64,
}

/// Effective Dicke-model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeParams {
    /// Field-mode frequency.
    pub omega: f64,
    /// Atomic splitting.
    pub omega0: f64,
    /// Coupling strength carried with the record; most operations take the
    /// coupling as an explicit argument so that it can be swept.
    pub lambda: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    pub n_atoms: f64,
}

impl DickeParams {
    pub fn new(omega: f64, omega0: f64, kappa: f64) -> Result<Self> {
        let p = DickeParams {
            omega,
            omega0,
            lambda: 0.0,
            kappa,
            n_atoms: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// `omega = omega0 = 1`, `kappa = 0.2`, `N = 1`.
    pub fn canonical() -> Self {
        DickeParams {
            omega: 1.0,
            omega0: 1.0,
            lambda: 0.0,
            kappa: 0.2,
            n_atoms: 1.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_atoms(mut self, n_atoms: f64) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("omega", self.omega)?;
        check_finite("omega0", self.omega0)?;
        check_finite("lambda", self.lambda)?;
        check_finite("kappa", self.kappa)?;
        check_finite("n_atoms", self.n_atoms)?;
        if self.omega <= 0.0 {
            return Err(invalid("omega", "must be positive"));
        }
        if self.omega0 <= 0.0 {
            return Err(invalid("omega0", "must be positive"));
        }
        if self.kappa < 0.0 {
            return Err(invalid("kappa", "must be non-negative"));
        }
        if self.lambda < 0.0 {
            return Err(invalid("lambda", "must be non-negative"));
        }
        if self.n_atoms < 1.0 {
            return Err(invalid("n_atoms", "must be at least 1"));
        }
        Ok(())
    }

    /// Same physics expressed in units of `omega0`.
    pub fn normalized(&self) -> Self {
        let s = self.omega0;
        DickeParams {
            omega: self.omega / s,
            omega0: 1.0,
            lambda: self.lambda / s,
            kappa: self.kappa / s,
            n_atoms: self.n_atoms,
        }
    }

    /// True when `omega` and `omega0` agree to rounding, i.e. when the
    /// resonant closed forms apply.
    pub fn is_resonant(&self) -> bool {
        (self.omega - self.omega0).abs() <= 1e-12 * self.omega0.abs().max(self.omega.abs())
    }

    pub fn lambda_c(&self) -> f64 {
        critical_coupling(self)
    }

    /// Phase whose fluctuation Hamiltonian describes the stable branch at
    /// `lambda` (normal up to and including `lambda_c`).
    pub fn phase_at(&self, lambda: f64) -> PhaseTag {
        if lambda <= self.lambda_c() {
            PhaseTag::Normal
        } else {
            PhaseTag::Superradiant
        }
    }
}

fn invalid(name: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    Normal,
    Superradiant,
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTag::Normal => f.write_str("normal"),
            PhaseTag::Superradiant => f.write_str("superradiant"),
        }
    }
}

/// Checks that `phase` can describe the stable branch at `lambda`. Both
/// phases are admitted at `lambda = lambda_c`, where they coincide.
pub(crate) fn check_phase(p: &DickeParams, lambda: f64, phase: PhaseTag) -> Result<()> {
    check_finite("lambda", lambda)?;
    if lambda < 0.0 {
        return Err(invalid("lambda", "must be non-negative"));
    }
    let lambda_c = critical_coupling(p);
    let ok = match phase {
        PhaseTag::Normal => lambda <= lambda_c,
        PhaseTag::Superradiant => lambda >= lambda_c,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::PhaseMismatch {
            phase,
            lambda,
            lambda_c,
        })
    }
}

/// Evaluates the pre-balance effective Hamiltonian coefficients.
pub fn effective_params(raman: &RamanPhysicalParams) -> Result<EffectiveHamiltonianParams> {
    raman.validate()?;
    let r = raman;
    let shift_r = r.g_r * r.g_r / r.detuning_r;
    let shift_s = r.g_s * r.g_s / r.detuning_s;
    let sqrt_n = r.n_atoms.sqrt();
    Ok(EffectiveHamiltonianParams {
        omega: 0.5 * r.n_atoms * (shift_r + shift_s) + r.cavity_detuning,
        omega0: 0.25 * (r.rabi_r * r.rabi_r / r.detuning_r - r.rabi_s * r.rabi_s / r.detuning_s)
            + (r.ground_splitting - r.ground_splitting_ref),
        delta: shift_r - shift_s,
        lambda_r: 0.5 * sqrt_n * r.g_r * r.rabi_r / r.detuning_r,
        lambda_s: 0.5 * sqrt_n * r.g_s * r.rabi_s / r.detuning_s,
    })
}

/// Maps balanced Raman parameters onto the Dicke form, using the default
/// balance tolerance.
pub fn to_dicke(raman: &RamanPhysicalParams) -> Result<DickeParams> {
    to_dicke_with_tolerance(raman, BALANCE_TOLERANCE)
}

pub fn to_dicke_with_tolerance(raman: &RamanPhysicalParams, tolerance: f64) -> Result<DickeParams> {
    raman.validate()?;
    let r = raman;
    let shift_r = r.g_r * r.g_r / r.detuning_r;
    let shift_s = r.g_s * r.g_s / r.detuning_s;
    let coupling_r = r.g_r * r.rabi_r / r.detuning_r;
    let coupling_s = r.g_s * r.rabi_s / r.detuning_s;

    let light_shift_residual = shift_r - shift_s;
    let coupling_residual = coupling_r - coupling_s;
    let rel = |res: f64, a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            res.abs() / scale
        }
    };
    if rel(light_shift_residual, shift_r, shift_s) > tolerance
        || rel(coupling_residual, coupling_r, coupling_s) > tolerance
    {
        return Err(Error::Unbalanced {
            light_shift_residual,
            coupling_residual,
            tolerance,
        });
    }

    let p = DickeParams {
        omega: r.n_atoms * shift_r + r.cavity_detuning,
        omega0: r.ground_splitting - r.ground_splitting_ref,
        lambda: 0.5 * r.n_atoms.sqrt() * coupling_r,
        kappa: r.kappa,
        n_atoms: r.n_atoms,
    };
    p.validate()?;
    Ok(p)
}

/// One `|Delta| / X` ratio of the large-detuning condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub detuning: &'static str,
    pub against: &'static str,
    pub ratio: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub margin: f64,
    pub checks: Vec<RegimeCheck>,
    /// Off-resonant excitation rate `gamma/4 (Omega_r/Delta_r)^2`, in the
    /// record's unit.
    pub spontaneous_rate: f64,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passes)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RegimeCheck> {
        self.checks.iter().filter(|c| !c.passes)
    }

    pub fn check(&self, detuning: &str, against: &str) -> Option<&RegimeCheck> {
        self.checks
            .iter()
            .find(|c| c.detuning == detuning && c.against == against)
    }
}

/// Reports how far each detuning exceeds the other rates of the scheme and
/// the off-resonant spontaneous-emission estimate. Never fails.
pub fn validate_regime(raman: &RamanPhysicalParams, margin: f64) -> RegimeReport {
    let r = raman;
    let others = [
        ("rabi_r", r.rabi_r),
        ("rabi_s", r.rabi_s),
        ("g_r", r.g_r),
        ("g_s", r.g_s),
        ("kappa", r.kappa),
        ("cavity_detuning", r.cavity_detuning),
        ("gamma", r.gamma),
    ];
    let mut checks = Vec::with_capacity(2 * others.len());
    for (detuning, d) in [("detuning_r", r.detuning_r), ("detuning_s", r.detuning_s)] {
        for (against, x) in others {
            let ratio = if x == 0.0 {
                f64::INFINITY
            } else {
                d.abs() / x.abs()
            };
            checks.push(RegimeCheck {
                detuning,
                against,
                ratio,
                passes: ratio >= margin,
            });
        }
    }
    let ratio = r.rabi_r / r.detuning_r;
    RegimeReport {
        margin,
        checks,
        spontaneous_rate: 0.25 * r.gamma * ratio * ratio,
    }
}

/// `lambda_c = 1/2 sqrt((omega0/omega)(kappa^2 + omega^2))`.
pub fn critical_coupling(p: &DickeParams) -> f64 {
    0.5 * (p.omega0 / p.omega * (p.kappa * p.kappa + p.omega * p.omega)).sqrt()
}

/// Order-parameter ratio: 1 in the normal phase, `lambda_c^2 / lambda^2`
/// in the superradiant phase.
pub fn mu_tilde(p: &DickeParams, lambda: f64, phase: PhaseTag) -> Result<f64> {
    check_phase(p, lambda, phase)?;
    Ok(match phase {
        PhaseTag::Normal => 1.0,
        PhaseTag::Superradiant => {
            let lc = critical_coupling(p);
            lc * lc / (lambda * lambda)
        }
    })
}

/// A window edge: the closed-form approximation (resonant case only) and
/// the numerically located value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEdge {
    pub approx: Option<f64>,
    pub numeric: Option<f64>,
}

/// `lambda_c` together with the couplings `lambda' < lambda_c < lambda''`
/// between which the photonic pair of eigenvalues is purely real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    pub lambda_c: f64,
    pub lambda_prime: WindowEdge,
    pub lambda_double_prime: WindowEdge,
}

pub fn critical_window(p: &DickeParams) -> CriticalPoints {
    let lambda_c = critical_coupling(p);
    let (approx_lo, approx_hi) = if p.is_resonant() {
        let k2 = p.kappa * p.kappa;
        (
            Some(lambda_c - k2 / (8.0 * p.omega0 * p.omega0)),
            Some(lambda_c + k2 / (16.0 * p.omega0)),
        )
    } else {
        (None, None)
    };
    let (numeric_lo, numeric_hi) = if p.kappa == 0.0 {
        (Some(lambda_c), Some(lambda_c))
    } else {
        fluctuations::locate_window_edges(p)
    };
    CriticalPoints {
        lambda_c,
        lambda_prime: WindowEdge {
            approx: approx_lo,
            numeric: numeric_lo,
        },
        lambda_double_prime: WindowEdge {
            approx: approx_hi,
            numeric: numeric_hi,
        },
    }
}
