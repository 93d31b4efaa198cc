use thiserror::Error;

use crate::model::PhaseTag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The Raman channels are not balanced closely enough to yield the Dicke form.
    #[error(
        "Raman channels unbalanced: g_r^2/D_r - g_s^2/D_s = {light_shift_residual:e}, \
         g_r W_r/D_r - g_s W_s/D_s = {coupling_residual:e} (relative tolerance {tolerance:e})"
    )]
    Unbalanced {
        light_shift_residual: f64,
        coupling_residual: f64,
        tolerance: f64,
    },

    #[error("{phase} phase requested at lambda = {lambda} with lambda_c = {lambda_c}")]
    PhaseMismatch {
        phase: PhaseTag,
        lambda: f64,
        lambda_c: f64,
    },

    #[error("closed form requires {requirement}")]
    OutsideClosedForm { requirement: String },

    #[error("state is not a fixed point (|rhs| = {residual:e})")]
    NotFixedPoint { residual: f64 },

    #[error("conservation drift {drift:e} exceeds 1e-6 at t = {time} even at minimum step")]
    ConservationDrift { drift: f64, time: f64 },

    #[error("{mode} normal mode has imaginary frequency (omega^2 = {omega_sq:e})")]
    ModeSoftened { mode: &'static str, omega_sq: f64 },

    #[error("real pole at nu = {nu}")]
    Pole { nu: f64 },

    #[error("no steady state: max Re(eigenvalue) = {max_re:e}")]
    NoSteadyState { max_re: f64 },

    #[error("quadrature did not converge: error estimate {achieved:e} > tolerance {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("linear algebra failure: {0}")]
    Numerical(&'static str),
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}
