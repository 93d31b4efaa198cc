//! Sweep requests, tabulated results and deterministic CSV/JSON emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dicke_core::entanglement::v1_v2_from_output;
use dicke_core::fluctuations::build_system;
use dicke_core::semiclassical::steady_states;
use dicke_core::spectra::{self, transfer_functions};
use dicke_core::{
    eigenvalues, entanglement_scalars, epr_variance, optimal_squeezing, photon_flux, to_dicke, v1_v2,
    v_est, DickeParams, RamanPhysicalParams, Sign, Stability,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Row flag values.
pub const FLAG_OK: f64 = 0.0;
pub const FLAG_POLE: f64 = 1.0;
pub const FLAG_ERROR: f64 = 2.0;
pub const FLAG_UNDEFINED: f64 = 3.0;

const FLAG_LEGEND: &str = "0 ok, 1 real pole (values nan), 2 point rejected (values nan, see point_errors), 3 undefined phase (flat objective)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] dicke_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for input errors, 2 for I/O errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Read { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    SteadyState,
    Eigenvalues,
    Fluorescence,
    Transmission,
    Homodyne,
    PhotonFlux,
    Epr,
    VEst,
    V1v2,
    OptimalSqueezing,
    /// EPR sum/product, V_est and (above threshold) V1/V2 in one row.
    Entanglement,
}

impl Quantity {
    fn uses_nu(self) -> bool {
        matches!(self, Quantity::Fluorescence | Quantity::Transmission | Quantity::Homodyne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSource {
    Dicke(DickeParams),
    Raman(RamanPhysicalParams),
}

impl ParamSource {
    pub fn resolve(&self) -> Result<DickeParams, CliError> {
        match self {
            ParamSource::Dicke(p) => {
                p.validate()?;
                Ok(*p)
            }
            ParamSource::Raman(r) => Ok(to_dicke(r)?.normalized()),
        }
    }
}

/// `steps` points from `min` to `max` inclusive; a single point needs
/// `min == max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn point(x: f64) -> Self {
        Grid { min: x, max: x, steps: 1 }
    }

    pub fn validate(&self, name: &str) -> Result<(), CliError> {
        if self.steps == 0 {
            return Err(CliError::Input(format!("{name} grid is empty")));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::Input(format!("{name} grid bounds must be finite")));
        }
        if self.steps == 1 && self.min != self.max {
            return Err(CliError::Input(format!("{name} grid with one step needs min == max")));
        }
        if self.steps > 1 && self.max <= self.min {
            return Err(CliError::Input(format!("{name} grid must be strictly increasing")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.min + (self.max - self.min) * k as f64 / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub quantity: Quantity,
    pub params: ParamSource,
    pub lambda: Grid,
    /// Spectra only; `None` selects the default grid of each coupling.
    #[serde(default)]
    pub nu: Option<Grid>,
    /// Quadrature phase; defaults to 0 for spectra and `atan(kappa/omega)`
    /// for entanglement measures.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Atomic quadrature phase for the EPR operators (default 0).
    #[serde(default)]
    pub phi: Option<f64>,
    pub format: Format,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepRequest {
    pub fn validate(&self) -> Result<DickeParams, CliError> {
        self.lambda.validate("lambda")?;
        if let Some(nu) = &self.nu {
            nu.validate("nu")?;
            if !self.quantity.uses_nu() {
                return Err(CliError::Input(format!("{:?} takes no nu grid", self.quantity)));
            }
        }
        for (name, v) in [("theta", self.theta), ("phi", self.phi)] {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(CliError::Input(format!("{name} must be finite")));
                }
            }
        }
        let p = self.params.resolve()?;
        if self.lambda.min < 0.0 {
            return Err(CliError::Input("lambda must be non-negative".into()));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub request: SweepRequest,
    /// Effective Dicke parameters after any Raman mapping.
    pub resolved: DickeParams,
    pub flags: String,
    /// Meaning of coded columns other than `flag`.
    #[serde(default)]
    pub notes: Vec<String>,
    pub point_errors: Vec<PointError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    /// Row-major; every row has `columns.len()` entries.
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

type Row = Vec<f64>;

fn nan_row(width: usize, prefix: &[f64], flag: f64) -> Row {
    let mut r = prefix.to_vec();
    r.resize(width - 1, f64::NAN);
    r.push(flag);
    r
}

fn columns(q: Quantity) -> Vec<&'static str> {
    match q {
        Quantity::SteadyState => vec![
            "lambda", "branch", "alpha_re", "alpha_im", "beta_re", "beta_im", "w", "stability", "flag",
        ],
        Quantity::Eigenvalues => vec![
            "lambda", "ph_plus_re", "ph_plus_im", "ph_minus_re", "ph_minus_im", "at_plus_re", "at_plus_im",
            "at_minus_re", "at_minus_im", "flag",
        ],
        Quantity::Fluorescence => vec!["lambda", "nu", "fluorescence", "coherent_flux", "flag"],
        Quantity::Transmission => vec!["lambda", "nu_p", "transmission", "flag"],
        Quantity::Homodyne => vec!["lambda", "nu", "theta", "homodyne", "flag"],
        Quantity::PhotonFlux => vec!["lambda", "fluctuation_flux", "coherent_flux", "total_flux", "flag"],
        Quantity::Epr => vec!["lambda", "theta", "phi", "epr_sum", "epr_product", "flag"],
        Quantity::VEst => vec!["lambda", "theta", "v_est", "flag"],
        Quantity::V1v2 => vec!["lambda", "theta", "gamma2", "v1", "v2", "v1_output", "v2_output", "flag"],
        Quantity::OptimalSqueezing => vec!["lambda", "theta_min", "s_min", "flag"],
        Quantity::Entanglement => vec!["lambda", "theta", "phi", "epr_sum", "epr_product", "v_est", "v1", "v2", "flag"],
    }
}

/// Columns holding small integers, rendered without an exponent.
fn is_integer_column(name: &str) -> bool {
    matches!(name, "flag" | "branch" | "stability")
}

fn notes(q: Quantity) -> Vec<String> {
    match q {
        Quantity::SteadyState => vec![
            "branch: 0 normal w=-N/2, 1 normal w=+N/2, 2 superradiant +alpha, 3 superradiant -alpha".into(),
            "stability: 1 stable, 0 marginal, -1 unstable".into(),
        ],
        Quantity::Fluorescence => vec!["coherent_flux: weight of the delta peak at nu = 0".into()],
        Quantity::V1v2 => vec!["v1, v2: covariance route; v1_output, v2_output: output-spectrum route".into()],
        _ => Vec::new(),
    }
}

/// Branch codes for steady-state rows.
fn branch_code(phase: dicke_core::PhaseTag, sign: Sign) -> f64 {
    use dicke_core::PhaseTag::*;
    match (phase, sign) {
        (Normal, Sign::Minus) => 0.0,
        (Normal, Sign::Plus) => 1.0,
        (Superradiant, Sign::Plus) => 2.0,
        (Superradiant, Sign::Minus) => 3.0,
    }
}

fn stability_code(s: Stability) -> f64 {
    match s {
        Stability::Stable => 1.0,
        Stability::Marginal => 0.0,
        Stability::Unstable => -1.0,
    }
}

/// Rows produced by one coupling value; errors are per point.
fn rows_for(
    req: &SweepRequest,
    p: &DickeParams,
    lambda: f64,
    width: usize,
) -> Vec<(Row, Option<String>)> {
    let theta_ent = req.theta.unwrap_or((p.kappa / p.omega).atan());
    let phi = req.phi.unwrap_or(0.0);
    let fail = |prefix: &[f64], e: &dyn std::fmt::Display| vec![(nan_row(width, prefix, FLAG_ERROR), Some(e.to_string()))];
    let ok = |r: Row| vec![(r, None)];
    match req.quantity {
        Quantity::SteadyState => match steady_states(p, lambda) {
            Ok(branches) => branches
                .iter()
                .map(|b| {
                    let s = b.state;
                    (
                        vec![
                            lambda,
                            branch_code(b.phase, b.sign),
                            s.alpha.re,
                            s.alpha.im,
                            s.beta.re,
                            s.beta.im,
                            s.w,
                            stability_code(b.stability),
                            FLAG_OK,
                        ],
                        None,
                    )
                })
                .collect(),
            Err(e) => fail(&[lambda], &e),
        },
        Quantity::Eigenvalues => match build_system(p, lambda, p.phase_at(lambda)) {
            Ok(sys) => {
                let ev = eigenvalues(&sys);
                let mut r = vec![lambda];
                for e in ev.photonic.iter().chain(ev.atomic.iter()) {
                    r.push(e.re);
                    r.push(e.im);
                }
                r.push(FLAG_OK);
                ok(r)
            }
            Err(e) => fail(&[lambda], &e),
        },
        Quantity::Fluorescence | Quantity::Transmission | Quantity::Homodyne => {
            let nus = match &req.nu {
                Some(g) => g.points(),
                None => spectra::default_nu_grid(p, lambda),
            };
            let theta = req.theta.unwrap_or(0.0);
            let tf = match transfer_functions(p, lambda, p.phase_at(lambda)) {
                Ok(tf) => tf,
                Err(e) => {
                    return nus
                        .iter()
                        .map(|&nu| {
                            let prefix: Vec<f64> = match req.quantity {
                                Quantity::Homodyne => vec![lambda, nu, theta],
                                _ => vec![lambda, nu],
                            };
                            (nan_row(width, &prefix, FLAG_ERROR), Some(e.to_string()))
                        })
                        .collect()
                }
            };
            let coherent = spectra::coherent_flux(p, lambda);
            nus.iter()
                .map(|&nu| {
                    let (prefix, value) = match req.quantity {
                        Quantity::Fluorescence => (vec![lambda, nu], tf.fluorescence(nu)),
                        Quantity::Transmission => (vec![lambda, nu], tf.transmission(nu)),
                        _ => (vec![lambda, nu, theta], tf.homodyne(theta, nu)),
                    };
                    match value {
                        Ok(v) => {
                            let mut r = prefix;
                            r.push(v);
                            if req.quantity == Quantity::Fluorescence {
                                r.push(coherent);
                            }
                            r.push(FLAG_OK);
                            (r, None)
                        }
                        Err(dicke_core::Error::Pole { .. }) => (nan_row(width, &prefix, FLAG_POLE), None),
                        Err(e) => (nan_row(width, &prefix, FLAG_ERROR), Some(e.to_string())),
                    }
                })
                .collect()
        }
        Quantity::PhotonFlux => match photon_flux(p, lambda) {
            Ok(f) => ok(vec![lambda, f.fluctuation, f.coherent, f.total(), FLAG_OK]),
            Err(e) => fail(&[lambda], &e),
        },
        Quantity::Epr => match epr_variance(p, lambda, theta_ent, phi) {
            Ok(s) => ok(vec![lambda, theta_ent, phi, s.epr_sum, s.epr_product, FLAG_OK]),
            Err(e) => fail(&[lambda, theta_ent, phi], &e),
        },
        Quantity::VEst => match v_est(p, lambda, theta_ent) {
            Ok(v) => ok(vec![lambda, theta_ent, v, FLAG_OK]),
            Err(e) => fail(&[lambda, theta_ent], &e),
        },
        Quantity::V1v2 => {
            match v1_v2(p, lambda, theta_ent).and_then(|a| Ok((a, v1_v2_from_output(p, lambda, theta_ent)?))) {
                Ok((a, b)) => ok(vec![lambda, theta_ent, a.gamma2, a.v1, a.v2, b.route.v1, b.route.v2, FLAG_OK]),
                Err(e) => fail(&[lambda, theta_ent], &e),
            }
        }
        Quantity::OptimalSqueezing => match optimal_squeezing(p, lambda) {
            Ok(o) => match o.theta_min {
                Some(t) => ok(vec![lambda, t, o.s_min, FLAG_OK]),
                None => ok(vec![lambda, f64::NAN, o.s_min, FLAG_UNDEFINED]),
            },
            Err(dicke_core::Error::Pole { .. }) => ok(nan_row(width, &[lambda], FLAG_POLE)),
            Err(e) => fail(&[lambda], &e),
        },
        Quantity::Entanglement => match entanglement_scalars(p, lambda, theta_ent, phi) {
            Ok(s) => ok(vec![
                lambda,
                theta_ent,
                phi,
                s.epr_sum,
                s.epr_product,
                s.v_est.unwrap_or(f64::NAN),
                s.v1.unwrap_or(f64::NAN),
                s.v2.unwrap_or(f64::NAN),
                FLAG_OK,
            ]),
            Err(e) => fail(&[lambda, theta_ent, phi], &e),
        },
    }
}

/// Evaluates every grid point (concurrently) and assembles rows in grid
/// order. Invalid requests are rejected before any computation.
pub fn run_sweep(req: &SweepRequest) -> Result<ResultTable, CliError> {
    let p = req.validate()?;
    let cols = columns(req.quantity);
    let width = cols.len();
    let per_lambda: Vec<Vec<(Row, Option<String>)>> = req
        .lambda
        .points()
        .par_iter()
        .map(|&l| rows_for(req, &p, l, width))
        .collect();
    let mut rows = Vec::new();
    let mut point_errors = Vec::new();
    for (row, err) in per_lambda.into_iter().flatten() {
        debug_assert_eq!(row.len(), width);
        if let Some(message) = err {
            point_errors.push(PointError { row: rows.len(), message });
        }
        rows.push(row);
    }
    Ok(ResultTable {
        columns: cols.into_iter().map(String::from).collect(),
        rows,
        metadata: Metadata {
            tool: "dicke".into(),
            version: VERSION.into(),
            request: req.clone(),
            resolved: p,
            flags: FLAG_LEGEND.into(),
            notes: notes(req.quantity),
            point_errors,
        },
    })
}

fn render_value(name: &str, v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if is_integer_column(name) {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// CSV: `#` metadata lines (the last carries the full metadata as JSON),
/// header, then one line per row with 17 significant digits.
pub fn to_csv(table: &ResultTable) -> Result<String, CliError> {
    let mut out = String::new();
    let meta = serde_json::to_string(&table.metadata).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(out, "# {} {}", table.metadata.tool, table.metadata.version).unwrap();
    writeln!(out, "# flags: {}", table.metadata.flags).unwrap();
    writeln!(out, "# metadata: {meta}").unwrap();
    writeln!(out, "{}", table.columns.join(",")).unwrap();
    for row in &table.rows {
        let cells: Vec<String> = table
            .columns
            .iter()
            .zip(row)
            .map(|(c, v)| render_value(c, *v))
            .collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    Ok(out)
}

/// JSON: `{metadata, columns, rows}`; NaN becomes `null`.
pub fn to_json(table: &ResultTable) -> Result<String, CliError> {
    let rows: Vec<Vec<serde_json::Value>> = table
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&table.columns)
                .map(|(&v, c)| {
                    if v.is_nan() {
                        serde_json::Value::Null
                    } else if is_integer_column(c) {
                        serde_json::Value::from(v as i64)
                    } else {
                        serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
                    }
                })
                .collect()
        })
        .collect();
    let doc = serde_json::json!({
        "metadata": table.metadata,
        "columns": table.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render(table: &ResultTable, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => to_csv(table),
        Format::Json => to_json(table),
    }
}

/// Writes the rendered table to `path`, or to stdout when `path` is `None`.
pub fn emit(table: &ResultTable, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let text = render(table, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Recovers the request from an emitted CSV or JSON file, or from a bare
/// request JSON document.
pub fn parse_request(text: &str) -> Result<SweepRequest, CliError> {
    for line in text.lines() {
        if let Some(meta) = line.strip_prefix("# metadata: ") {
            let m: Metadata = serde_json::from_str(meta).map_err(|e| CliError::Input(format!("bad metadata line: {e}")))?;
            return Ok(m.request);
        }
    }
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("not a request, CSV or JSON table: {e}")))?;
    let req = match v.get("metadata") {
        Some(m) => m.get("request").cloned().unwrap_or(serde_json::Value::Null),
        None => v,
    };
    serde_json::from_value(req).map_err(|e| CliError::Input(format!("bad request: {e}")))
}

/// The data section (everything after the metadata comments / the rows).
pub fn data_section(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
