use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dicke_cli::{emit, parse_request, run_sweep, CliError, Format, Grid, ParamSource, Quantity, SweepRequest};
use dicke_core::{critical_window, effective_params, to_dicke, validate_regime, DickeParams, RamanPhysicalParams};

#[derive(Parser)]
#[command(name = "dicke", version, about = "Phenomenology of the open Dicke model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map a Raman hardware record (JSON) to Dicke parameters and check the regime.
    MapParams {
        /// JSON file holding the hardware record.
        input: PathBuf,
        /// Required separation for the "much less than" checks.
        #[arg(long, default_value_t = 10.0)]
        margin: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fixed points of the mean-field equations, one row per branch.
    SteadyState(Common),
    /// Fluctuation eigenvalues on the stable branch.
    Eigenvalues(Common),
    Spectrum {
        #[arg(value_enum)]
        kind: SpectrumArg,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        nu: NuArgs,
    },
    Entanglement {
        #[arg(value_enum)]
        measure: MeasureArg,
        #[command(flatten)]
        common: Common,
    },
    /// Rerun a request: a request JSON, or a file previously written by this tool.
    Sweep {
        #[arg(long)]
        request: PathBuf,
        /// Override the output path stored in the request.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumArg {
    Fluorescence,
    Transmission,
    Homodyne,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Epr,
    VEst,
    V1v2,
    Flux,
    OptimalSqueezing,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
    #[arg(long, default_value_t = 0.2)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    atoms: f64,
    /// Take parameters from a Raman hardware record (JSON) instead; coupling
    /// grids are then in units of the mapped omega0.
    #[arg(long, conflicts_with_all = ["omega", "omega0", "kappa", "atoms"])]
    raman: Option<PathBuf>,
    /// Single coupling value (shorthand for a one-point grid).
    #[arg(long, conflicts_with_all = ["lambda_min", "lambda_max", "lambda_steps"])]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    lambda_steps: Option<usize>,
    /// Quadrature phase of the cavity output.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Atomic quadrature phase (EPR operators).
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NuArgs {
    #[arg(long, allow_hyphen_values = true)]
    nu_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu_max: Option<f64>,
    #[arg(long)]
    nu_steps: Option<usize>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn read_raman(path: &Path) -> Result<RamanPhysicalParams, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn lambda_grid(c: &Common) -> Result<Grid, CliError> {
    if let Some(l) = c.lambda {
        return Ok(Grid::point(l));
    }
    match (c.lambda_min, c.lambda_max, c.lambda_steps) {
        (Some(min), Some(max), Some(steps)) => Ok(Grid { min, max, steps }),
        _ => Err(CliError::Input(
            "give --lambda or all of --lambda-min, --lambda-max, --lambda-steps".into(),
        )),
    }
}

fn nu_grid(n: &NuArgs) -> Result<Option<Grid>, CliError> {
    match (n.nu_min, n.nu_max, n.nu_steps) {
        (None, None, None) => Ok(None),
        (Some(min), Some(max), Some(steps)) => Ok(Some(Grid { min, max, steps })),
        _ => Err(CliError::Input("give all of --nu-min, --nu-max, --nu-steps or none".into())),
    }
}

fn request(quantity: Quantity, c: &Common, nu: Option<Grid>) -> Result<SweepRequest, CliError> {
    let params = match &c.raman {
        Some(path) => ParamSource::Raman(read_raman(path)?),
        None => ParamSource::Dicke(DickeParams {
            omega: c.omega,
            omega0: c.omega0,
            lambda: 0.0,
            kappa: c.kappa,
            n_atoms: c.atoms,
        }),
    };
    Ok(SweepRequest {
        quantity,
        params,
        lambda: lambda_grid(c)?,
        nu,
        theta: c.theta,
        phi: c.phi,
        format: match c.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        output: c.output.clone(),
    })
}

fn execute(req: &SweepRequest) -> Result<(), CliError> {
    let table = run_sweep(req)?;
    emit(&table, req.format, req.output.as_deref())
}

fn map_params(input: &Path, margin: f64, output: Option<&Path>) -> Result<(), CliError> {
    let raman = read_raman(input)?;
    let effective = effective_params(&raman)?;
    let dicke = to_dicke(&raman)?;
    let normalized = dicke.normalized();
    let doc = serde_json::json!({
        "effective": effective,
        "dicke": dicke,
        "normalized": normalized,
        "lambda_c": normalized.lambda_c(),
        "lambda_over_lambda_c": normalized.lambda / normalized.lambda_c(),
        "critical_window": critical_window(&normalized),
        "regime": validate_regime(&raman, margin),
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    match output {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::MapParams { input, margin, output } => map_params(&input, margin, output.as_deref()),
        Command::SteadyState(c) => execute(&request(Quantity::SteadyState, &c, None)?),
        Command::Eigenvalues(c) => execute(&request(Quantity::Eigenvalues, &c, None)?),
        Command::Spectrum { kind, common, nu } => {
            let q = match kind {
                SpectrumArg::Fluorescence => Quantity::Fluorescence,
                SpectrumArg::Transmission => Quantity::Transmission,
                SpectrumArg::Homodyne => Quantity::Homodyne,
            };
            execute(&request(q, &common, nu_grid(&nu)?)?)
        }
        Command::Entanglement { measure, common } => {
            let q = match measure {
                MeasureArg::Epr => Quantity::Epr,
                MeasureArg::VEst => Quantity::VEst,
                MeasureArg::V1v2 => Quantity::V1v2,
                MeasureArg::Flux => Quantity::PhotonFlux,
                MeasureArg::OptimalSqueezing => Quantity::OptimalSqueezing,
                MeasureArg::All => Quantity::Entanglement,
            };
            execute(&request(q, &common, None)?)
        }
        Command::Sweep { request, output } => {
            let mut req = parse_request(&read(&request)?)?;
            if output.is_some() {
                req.output = output;
            }
            execute(&req)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dicke: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
