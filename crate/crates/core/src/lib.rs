//! Thermodynamic-limit phenomenology of the dissipative Dicke model realised
//! with Raman transitions in a cavity: parameter mapping, mean-field steady
//! states, linearised fluctuations, output spectra and entanglement measures.

pub mod entanglement;
pub mod error;
pub mod fluctuations;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod semiclassical;
pub mod spectra;

pub use error::{Error, Result};
pub use fluctuations::{
    build_system, closed_form_eigenvalues, eigenvalue_sweep, eigenvalues, normal_modes,
    BranchedEigenvalues, FluctuationSystem, ModeWeights, NormalModes,
};
pub use model::{
    critical_coupling, critical_window, effective_params, mu_tilde, to_dicke, validate_regime,
    CriticalPoints, DickeParams, EffectiveHamiltonianParams, FrequencyUnit, PhaseTag,
    RamanPhysicalParams, RegimeCheck, RegimeReport, WindowEdge,
};
pub use num_complex::Complex64;
pub use semiclassical::{
    integrate, rhs, stability, steady_states, SemiclassicalState, Sign, Stability, SteadyBranch,
    Trajectory,
};
pub use spectra::{
    default_nu_grid, fluorescence, homodyne, optimal_squeezing, transfer_functions, transmission,
    OptimalSqueezing, SpectrumKind, SpectrumSeries, TransferFunctions, TransferRoute,
};
pub use entanglement::{
    covariance_integral, covariance_lyapunov, entanglement_scalars, epr_variance, photon_flux,
    v1_v2, v1_v2_from_output, v_est, CovarianceMethod, CovarianceReport, EntanglementScalars, PhotonFlux, V1V2,
};
