//! Linearised fluctuations about the stable mean field: the quadratic
//! Hamiltonians of both phases, the drift matrix, branch-labelled
//! eigenvalues and the undamped normal modes.
//!
//! Basis ordering is `v = (c, c+, d, d+)` throughout. Below threshold
//! `c = a` and `d = b` (the Holstein-Primakoff boson); above threshold both
//! are displaced about the `+` superradiant branch.

use nalgebra::{Matrix4, Matrix4x2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix4};
use crate::model::{check_phase, critical_coupling, DickeParams, PhaseTag};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients of the quadratic Hamiltonian
/// `omega c+c + od d+d + g2 (d + d+)^2 + g (c + c+)(d + d+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoefficients {
    pub omega: f64,
    pub od: f64,
    pub g2: f64,
    pub g: f64,
}

pub fn quadratic_coefficients(p: &DickeParams, lambda: f64, phase: PhaseTag) -> QuadraticCoefficients {
    match phase {
        PhaseTag::Normal => QuadraticCoefficients {
            omega: p.omega,
            od: p.omega0,
            g2: 0.0,
            g: lambda,
        },
        PhaseTag::Superradiant => {
            let lc = critical_coupling(p);
            let mu = if lambda > 0.0 { (lc * lc / (lambda * lambda)).min(1.0) } else { 1.0 };
            QuadraticCoefficients {
                omega: p.omega,
                od: p.omega0 * (1.0 + mu) / (2.0 * mu),
                g2: p.omega0 * (1.0 - mu) * (3.0 + mu) / (8.0 * mu * (1.0 + mu)),
                g: lambda * mu * (2.0 / (1.0 + mu)).sqrt(),
            }
        }
    }
}

fn drift(p: &DickeParams, lambda: f64, phase: PhaseTag) -> CMatrix4 {
    let q = quadratic_coefficients(p, lambda, phase);
    let k = p.kappa;
    let ig = I * q.g;
    let z = Complex64::new(0.0, 0.0);
    let diag = I * (q.od + 2.0 * q.g2);
    let off = I * (2.0 * q.g2);
    CMatrix4::new(
        -(k + I * q.omega), z, -ig, -ig, //
        z, -(k - I * q.omega), ig, ig, //
        -ig, -ig, -diag, -off, //
        ig, ig, off, diag,
    )
}

/// Linear system `dv/dt = M v + noise` with diffusion `D`
/// (`<n_i(t) n_j(t')> = D_ij delta(t - t')`).
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSystem {
    pub params: DickeParams,
    pub lambda: f64,
    pub phase: PhaseTag,
    pub mu: f64,
    pub drift: CMatrix4,
    pub diffusion: CMatrix4,
}

impl FluctuationSystem {
    pub fn max_real_part(&self) -> f64 {
        linalg::real_eigenvalues(&linalg::real_form(&self.drift))
            .iter()
            .fold(f64::NEG_INFINITY, |m, e| m.max(e.re))
    }
}

/// Builds the drift and diffusion matrices. Both phases are admitted at
/// `lambda = lambda_c`, where they coincide.
pub fn build_system(p: &DickeParams, lambda: f64, phase: PhaseTag) -> Result<FluctuationSystem> {
    p.validate()?;
    check_phase(p, lambda, phase)?;
    let lc = critical_coupling(p);
    let mu = match phase {
        PhaseTag::Normal => 1.0,
        PhaseTag::Superradiant => lc * lc / (lambda * lambda),
    };
    let mut diffusion = CMatrix4::zeros();
    // Only <a_in(t) a_in+(t')> = delta(t - t') survives for vacuum input.
    diffusion[(0, 1)] = Complex64::new(2.0 * p.kappa, 0.0);
    Ok(FluctuationSystem {
        params: *p,
        lambda,
        phase,
        mu,
        drift: drift(p, lambda, phase),
        diffusion,
    })
}

/// Eigenvalues grouped into the photonic and atomic conjugate pairs. Within
/// a pair, index 0 (`+`) has positive imaginary part, or for a real pair the
/// more negative real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedEigenvalues {
    pub lambda: f64,
    pub phase: PhaseTag,
    pub photonic: [Complex64; 2],
    pub atomic: [Complex64; 2],
}

impl BranchedEigenvalues {
    pub fn all(&self) -> [Complex64; 4] {
        [self.photonic[0], self.photonic[1], self.atomic[0], self.atomic[1]]
    }

    pub fn max_real_part(&self) -> f64 {
        self.all().iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re))
    }
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    vals: [Complex64; 2],
    basis: Matrix4x2<f64>,
}

fn ordered(a: Complex64, b: Complex64) -> [Complex64; 2] {
    let swap = if a.im == 0.0 && b.im == 0.0 {
        b.re < a.re
    } else {
        b.im > a.im
    };
    if swap {
        [b, a]
    } else {
        [a, b]
    }
}

fn make_pair(m: &Matrix4<f64>, a: Complex64, b: Complex64) -> Pair {
    Pair {
        vals: ordered(a, b),
        basis: linalg::pair_subspace(m, a, b),
    }
}

/// All ways of splitting the spectrum into two conjugation-closed pairs.
fn groupings(m: &Matrix4<f64>) -> Vec<[Pair; 2]> {
    let ev = linalg::real_eigenvalues(m);
    let reals: Vec<Complex64> = ev.iter().copied().filter(|e| e.im == 0.0).collect();
    let uppers: Vec<Complex64> = ev.iter().copied().filter(|e| e.im > 0.0).collect();
    match (uppers.len(), reals.len()) {
        (2, _) => vec![[
            make_pair(m, uppers[0], uppers[0].conj()),
            make_pair(m, uppers[1], uppers[1].conj()),
        ]],
        (1, _) => vec![[
            make_pair(m, uppers[0], uppers[0].conj()),
            make_pair(m, reals[0], reals[1]),
        ]],
        _ => {
            let r = &reals;
            [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)]
                .iter()
                .map(|&(i, j, k, l)| [make_pair(m, r[i], r[j]), make_pair(m, r[k], r[l])])
                .collect()
        }
    }
}

fn overlap(a: &Matrix4x2<f64>, b: &Matrix4x2<f64>) -> f64 {
    (a.transpose() * b).norm_squared()
}

fn cavity_weight(p: &Pair) -> f64 {
    (0..2).map(|j| p.basis[(0, j)].powi(2) + p.basis[(1, j)].powi(2)).sum()
}

/// Fallback identification where subspace overlap cannot decide (at an
/// exceptional point the two pairs share one eigenvector): the pair with
/// the lower frequency is photonic, and for equal frequencies the more
/// strongly damped one.
fn photonic_first_by_rule(x: Pair, y: Pair) -> [Pair; 2] {
    let fx = x.vals[0].im.abs();
    let fy = y.vals[0].im.abs();
    let tol = 1e-9 * (1.0 + fx.max(fy));
    let x_first = if (fx - fy).abs() > tol {
        fx < fy
    } else {
        x.vals[0].re + x.vals[1].re <= y.vals[0].re + y.vals[1].re
    };
    if x_first {
        [x, y]
    } else {
        [y, x]
    }
}

/// Picks the grouping and assignment of `m`'s pairs that best continues
/// `prev` (photonic, atomic).
fn continue_labels(prev: &[Pair; 2], m: &Matrix4<f64>) -> [Pair; 2] {
    let mut best: Option<([Pair; 2], f64, f64)> = None;
    for [x, y] in groupings(m) {
        let d_id = 4.0 - overlap(&prev[0].basis, &x.basis) - overlap(&prev[1].basis, &y.basis);
        let d_sw = 4.0 - overlap(&prev[0].basis, &y.basis) - overlap(&prev[1].basis, &x.basis);
        let (lo, hi) = (d_id.min(d_sw), d_id.max(d_sw));
        let ambiguous = hi < 1e-12 || lo > 0.25 * hi;
        let labelled = if ambiguous {
            photonic_first_by_rule(x, y)
        } else if d_id <= d_sw {
            [x, y]
        } else {
            [y, x]
        };
        if best.as_ref().is_none_or(|b| lo < b.1) {
            best = Some((labelled, lo, hi));
        }
    }
    best.expect("at least one grouping").0
}

fn seed_by_cavity_weight(m: &Matrix4<f64>) -> [Pair; 2] {
    let [x, y] = groupings(m)[0];
    let (wx, wy) = (cavity_weight(&x), cavity_weight(&y));
    if (wx - wy).abs() < 1e-6 {
        photonic_first_by_rule(x, y)
    } else if wx > wy {
        [x, y]
    } else {
        [y, x]
    }
}

fn decoupled_seed(p: &DickeParams) -> [Pair; 2] {
    let mut cav = Matrix4x2::zeros();
    cav[(0, 0)] = 1.0;
    cav[(1, 1)] = 1.0;
    let mut at = Matrix4x2::zeros();
    at[(2, 0)] = 1.0;
    at[(3, 1)] = 1.0;
    let w = Complex64::new(0.0, p.omega);
    let w0 = Complex64::new(0.0, p.omega0);
    [
        Pair {
            vals: [w - p.kappa, -w - p.kappa],
            basis: cav,
        },
        Pair {
            vals: [w0, -w0],
            basis: at,
        },
    ]
}

/// Normal phase: continue from the decoupled point `lambda = 0`.
/// Superradiant phase: continue downward from deep in the phase, where the
/// cavity and the (fast) atomic mode decouple again.
fn labelled_pairs(sys: &FluctuationSystem) -> [Pair; 2] {
    let p = &sys.params;
    let lambda = sys.lambda;
    let lc = critical_coupling(p);
    let path: Vec<f64> = match sys.phase {
        PhaseTag::Normal => {
            let n = ((lambda / (lc / 400.0)).ceil() as usize).max(1);
            (0..=n).map(|k| lambda * k as f64 / n as f64).collect()
        }
        PhaseTag::Superradiant => {
            let start = lambda.max(50.0 * lc);
            let n = ((start / lambda).ln() / 1.01f64.ln()).ceil() as usize;
            let mut v: Vec<f64> = (0..=n)
                .map(|k| start * (lambda / start).powf(k as f64 / n.max(1) as f64))
                .collect();
            if let Some(last) = v.last_mut() {
                *last = lambda;
            }
            v
        }
    };
    let mut current: Option<[Pair; 2]> = None;
    for &l in &path {
        let m = linalg::real_form(&drift(p, l, sys.phase));
        current = Some(match (current, sys.phase) {
            (None, PhaseTag::Normal) => continue_labels(&decoupled_seed(p), &m),
            (None, PhaseTag::Superradiant) => seed_by_cavity_weight(&m),
            (Some(prev), _) => continue_labels(&prev, &m),
        });
    }
    current.expect("non-empty continuation path")
}

/// Branch-labelled eigenvalues of the drift matrix.
pub fn eigenvalues(sys: &FluctuationSystem) -> BranchedEigenvalues {
    let [ph, at] = labelled_pairs(sys);
    BranchedEigenvalues {
        lambda: sys.lambda,
        phase: sys.phase,
        photonic: ph.vals,
        atomic: at.vals,
    }
}

/// Eigenvalues along a coupling grid, each point on its stable branch.
pub fn eigenvalue_sweep(p: &DickeParams, lambdas: &[f64]) -> Vec<Result<BranchedEigenvalues>> {
    lambdas
        .par_iter()
        .map(|&l| build_system(p, l, p.phase_at(l)).map(|s| eigenvalues(&s)))
        .collect()
}

/// Closed-form normal-phase eigenvalues for `omega = omega0`.
pub fn closed_form_eigenvalues(p: &DickeParams, lambda: f64) -> Result<BranchedEigenvalues> {
    p.validate()?;
    if !p.is_resonant() {
        return Err(Error::OutsideClosedForm {
            requirement: "omega = omega0".into(),
        });
    }
    let lc = critical_coupling(p);
    if !(0.0..=lc).contains(&lambda) {
        return Err(Error::OutsideClosedForm {
            requirement: format!("0 <= lambda <= lambda_c = {lc}"),
        });
    }
    let k = p.kappa;
    let w0 = p.omega0;
    let c = Complex64::new(w0 * w0 - 0.25 * k * k, 0.0);
    let big = Complex64::new(w0 * w0 * (4.0 * lambda * lambda - k * k), 0.0).sqrt();
    let half = Complex64::new(-0.5 * k, 0.0);
    let (ph, at) = if 2.0 * lambda <= k {
        (
            [half + I * (c + big).sqrt(), half - I * (c - big).sqrt()],
            [half + I * (c - big).sqrt(), half - I * (c + big).sqrt()],
        )
    } else {
        (
            [half + I * (c - big).sqrt(), half - I * (c - big).sqrt()],
            [half + I * (c + big).sqrt(), half - I * (c + big).sqrt()],
        )
    };
    Ok(BranchedEigenvalues {
        lambda,
        phase: PhaseTag::Normal,
        photonic: ph,
        atomic: at,
    })
}

fn real_eigen_count(p: &DickeParams, lambda: f64) -> usize {
    let m = linalg::real_form(&drift(p, lambda, p.phase_at(lambda)));
    linalg::real_eigenvalues(&m).iter().filter(|e| e.im == 0.0).count()
}

/// Numerically locates the couplings bounding the interval around
/// `lambda_c` in which a pair of eigenvalues is purely real.
pub fn locate_window_edges(p: &DickeParams) -> (Option<f64>, Option<f64>) {
    if p.validate().is_err() {
        return (None, None);
    }
    let lc = critical_coupling(p);
    let inside = |l: f64| real_eigen_count(p, l) >= 2;
    if !inside(lc) {
        return (None, None);
    }
    let edge = |dir: f64| -> Option<f64> {
        let mut h = 1e-4 * lc;
        let mut out = lc + dir * h;
        let mut tries = 0;
        while inside(out) {
            h *= 2.0;
            out = lc + dir * h;
            tries += 1;
            if out <= 0.0 || tries > 60 {
                return None;
            }
        }
        let (mut a, mut b) = (lc, out);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if inside(mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    };
    (edge(-1.0), edge(1.0))
}

/// Bogoliubov weights of one normal mode:
/// `mode = cavity_plus c + cavity_minus c+ + atom_plus d + atom_minus d+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeWeights {
    pub cavity_plus: f64,
    pub cavity_minus: f64,
    pub atom_plus: f64,
    pub atom_minus: f64,
}

impl ModeWeights {
    /// `[M, M+]` for the mode; 1 for a canonical transformation.
    pub fn commutator(&self) -> f64 {
        self.cavity_plus.powi(2) - self.cavity_minus.powi(2) + self.atom_plus.powi(2)
            - self.atom_minus.powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModes {
    pub phase: PhaseTag,
    pub omega_ph: f64,
    pub omega_at: f64,
    pub photonic: ModeWeights,
    pub atomic: ModeWeights,
    /// Mixing angle, `tan(2 gamma) = 2 mu^2 / (1 - mu^2)` (superradiant only).
    pub gamma2: Option<f64>,
    /// `omega0 (1 + 1/mu) / 2` (superradiant only).
    pub omega0_tilde: Option<f64>,
}

/// Superradiant mixing angle in `[0, pi/4]`.
pub fn mixing_angle(mu: f64) -> f64 {
    0.5 * (2.0 * mu * mu).atan2(1.0 - mu * mu)
}

/// Diagonalises the undamped quadratic Hamiltonian for `omega = omega0`.
pub fn normal_modes(p: &DickeParams, lambda: f64, phase: PhaseTag) -> Result<NormalModes> {
    p.validate()?;
    check_phase(p, lambda, phase)?;
    if !p.is_resonant() {
        return Err(Error::OutsideClosedForm {
            requirement: "omega = omega0".into(),
        });
    }
    let q = quadratic_coefficients(p, lambda, phase);
    let w = p.omega;
    let w0 = p.omega0;
    // Atomic oscillator: (od/2) P^2 + (od/2 + 2 g2) X^2, frequency sqrt(od (od + 4 g2)).
    let wd = (q.od * (q.od + 4.0 * q.g2)).sqrt();
    // Coupling 2 g X_c X_d in mass-weighted coordinates.
    let v12_sq = 4.0 * q.g * q.g * q.od * w;
    let mean = 0.5 * (w * w + wd * wd);
    let split = (0.25 * (wd * wd - w * w).powi(2) + v12_sq).sqrt();
    let ph_sq = mean - split;
    let at_sq = mean + split;
    if ph_sq <= 0.0 {
        return Err(Error::ModeSoftened {
            mode: "photonic",
            omega_sq: ph_sq,
        });
    }
    let w_ph = ph_sq.sqrt();
    let w_at = at_sq.sqrt();

    Ok(match phase {
        PhaseTag::Normal => {
            let weights = |wx: f64, sign: f64| {
                let n = 0.5 / (2.0 * w0 * wx).sqrt();
                ModeWeights {
                    cavity_plus: n * (wx + w0),
                    cavity_minus: n * (wx - w0),
                    atom_plus: sign * n * (wx + w0),
                    atom_minus: sign * n * (wx - w0),
                }
            };
            NormalModes {
                phase,
                omega_ph: w_ph,
                omega_at: w_at,
                photonic: weights(w_ph, -1.0),
                atomic: weights(w_at, 1.0),
                gamma2: None,
                omega0_tilde: None,
            }
        }
        PhaseTag::Superradiant => {
            let mu = critical_coupling(p).powi(2) / (lambda * lambda);
            let gamma = mixing_angle(mu);
            let wt = w0 * (1.0 + 1.0 / mu) / 2.0;
            let weights = |wx: f64, cav: f64, atom: f64| {
                let nc = 0.5 * cav / (w0 * wx).sqrt();
                let na = 0.5 * atom / (wt * wx).sqrt();
                ModeWeights {
                    cavity_plus: nc * (wx + w0),
                    cavity_minus: nc * (wx - w0),
                    atom_plus: na * (wx + wt),
                    atom_minus: na * (wx - wt),
                }
            };
            NormalModes {
                phase,
                omega_ph: w_ph,
                omega_at: w_at,
                photonic: weights(w_ph, gamma.cos(), -gamma.sin()),
                atomic: weights(w_at, gamma.sin(), gamma.cos()),
                gamma2: Some(gamma),
                omega0_tilde: Some(wt),
            }
        }
    })
}
