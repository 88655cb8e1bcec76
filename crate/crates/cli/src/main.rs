use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jm_core::dataset::{
    builtin_catalog, builtin_dataset, load_dataset, DataFormat, FailureDataset, BUILTIN_NAMES,
};
use jm_core::estimators::{estimate, EstimationResult, EstimatorConfig, Method, PhiRecovery};
use jm_core::evaluation::{run_plan, ExperimentId, ExperimentPlan};
use jm_core::heteroscedasticity::{goldfeld_quandt, residuals};
use jm_core::report::{
    compare_with_reference, format_deviations, format_table, to_csv, to_json, DEFAULT_TOLERANCE,
};
use jm_core::solver::{numeric_derivative, SolutionMode};
use jm_core::JmError;

/// Jelinski-Moranda parameter estimation by MLE, LSE and weighted
/// nonlinear least squares.
#[derive(Debug, Parser)]
#[command(name = "jm-estimate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the bundled failure datasets.
    Datasets {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Fit (N0, Phi) to a dataset prefix.
    Estimate(EstimateArgs),
    /// Goldfeld-Quandt test on the residuals of an LSE fit.
    Gq(GqArgs),
    /// Reproduce one of the comparison experiments.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Reasonable,
    Asymptotic,
}

impl From<Mode> for SolutionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Reasonable => SolutionMode::Reasonable,
            Mode::Asymptotic => SolutionMode::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Phi {
    /// Unweighted least-squares formula for every method.
    Lse,
    /// Weighted formula matching the fit's weights.
    Weighted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    Exp1,
    Exp2,
    Exp3,
}

/// Settings shared by every estimating subcommand.
#[derive(Debug, Args)]
struct Tuning {
    /// Exponent of the i^beta and i^-beta weight schemes.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Significance level of the Goldfeld-Quandt test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Fraction of middle observations omitted by the Goldfeld-Quandt test.
    #[arg(long, default_value_t = 0.25)]
    omit_fraction: f64,
    /// Largest N0 considered by the root search.
    #[arg(long, default_value_t = 1e12)]
    cap: f64,
    /// Points on the sign-change scan grid.
    #[arg(long, default_value_t = 4096)]
    scan_points: usize,
    /// How Phi is recovered from N0 for least-squares methods.
    #[arg(long, value_enum, default_value_t = Phi::Lse)]
    phi: Phi,
}

impl Tuning {
    fn config(&self) -> EstimatorConfig {
        let mut cfg = EstimatorConfig {
            beta: self.beta,
            alpha: self.alpha,
            omit_fraction: self.omit_fraction,
            phi_recovery: match self.phi {
                Phi::Lse => PhiRecovery::LeastSquares,
                Phi::Weighted => PhiRecovery::Weighted,
            },
            ..EstimatorConfig::default()
        };
        cfg.root.n0_cap = self.cap;
        cfg.root.scan_points = self.scan_points;
        cfg
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Bundled dataset name or path to a data file.
    #[arg(long)]
    data: String,
    /// Segment length; defaults to the whole dataset.
    #[arg(long)]
    k: Option<usize>,
    /// mle, lse, wnls-1..wnls-8, wnls2-1..wnls2-8, wnls-opt, wnls-h1, wnls-h2.
    #[arg(long, default_value = "mle")]
    method: String,
    #[arg(long, value_enum, default_value_t = Mode::Reasonable)]
    mode: Mode,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write f(N0), f'(N0) and f''(N0) samples as CSV.
    #[arg(long)]
    dump_curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GqArgs {
    #[arg(long)]
    data: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Reasonable)]
    mode: Mode,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    id: Experiment,
    /// Also run the squared empirical weight schemes.
    #[arg(long)]
    squared: bool,
    /// Relative tolerance of the reference comparison.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Skip the reference comparison.
    #[arg(long)]
    no_diff: bool,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status for library errors: 1 for numerical failures, 2 for bad
/// input or configuration.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<JmError>() {
        Some(JmError::Solver { .. } | JmError::Domain(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn usage(msg: String) -> anyhow::Error {
    JmError::Config(msg).into()
}

fn resolve_data(spec: &str) -> Result<FailureDataset> {
    if BUILTIN_NAMES.contains(&spec.trim().to_ascii_lowercase().as_str()) {
        return Ok(builtin_dataset(spec)?);
    }
    let path = Path::new(spec);
    if path.exists() {
        return Ok(load_dataset(path, DataFormat::from_path(path))?);
    }
    Err(JmError::UnknownDataset {
        name: spec.to_string(),
        valid: format!("{} or an existing file", BUILTIN_NAMES.join(", ")),
    }
    .into())
}

fn segment(data: &FailureDataset, k: Option<usize>) -> Result<FailureDataset> {
    let k = k.unwrap_or(data.len());
    if k < 3 || k > data.len() {
        return Err(usage(format!(
            "--k must lie in 3..={} for {}, got {k}",
            data.len(),
            data.name()
        )));
    }
    Ok(data.prefix(k)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn csv_text<I, R>(rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Six decimals, or scientific notation when that would print zero.
fn fmt_phi(phi: f64) -> String {
    if phi >= 5e-5 {
        format!("{phi:.6}")
    } else {
        format!("{phi:.4e}")
    }
}

fn cmd_datasets(format: Format) -> Result<()> {
    let catalog = builtin_catalog();
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&catalog)? + "\n",
        Format::Csv => {
            let header = ["name", "length", "unit", "source"].map(String::from);
            let rows = catalog.iter().map(|d| {
                [
                    d.name.to_string(),
                    d.len.to_string(),
                    d.unit.to_string(),
                    d.source.to_string(),
                ]
            });
            csv_text(std::iter::once(header).chain(rows))?
        }
        Format::Table => catalog
            .iter()
            .map(|d| format!("{:<6}  {:>4}  {:<6}  {}\n", d.name, d.len, d.unit, d.source))
            .collect(),
    };
    emit(&text, None)
}

fn dump_curve(data: &FailureDataset, fit: &EstimationResult, path: &Path) -> Result<()> {
    let func = fit.estimating_function(data)?;
    let k = data.len() as f64;
    let lo = k + 0.5;
    let hi = (4.0 * fit.params.n0()).max(k + 100.0);
    let points = 400;
    let rows = (0..points).map(|j| {
        let n0 = lo * ((hi / lo).ln() * j as f64 / (points - 1) as f64).exp();
        let d2 = numeric_derivative(|x| func.derivative(x), n0).unwrap_or(f64::NAN);
        [n0, func.value(n0), func.derivative(n0), d2].map(|v| format!("{v:e}"))
    });
    let header = ["n0", "f", "df", "d2f"].map(String::from);
    let s = csv_text(std::iter::once(header).chain(rows))?;
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let method: Method = args.method.parse()?;
    let cfg = args.tuning.config();
    cfg.validate()?;
    let data = segment(&resolve_data(&args.data)?, args.k)?;
    let fit = estimate(&data, &method, args.mode.into(), &cfg)?;

    if let Some(path) = &args.dump_curve {
        dump_curve(&data, &fit, path)?;
    }

    let weights = match (&fit.method, &fit.weights) {
        (Method::Mle, _) => "none".to_string(),
        (_, None) => "unit".to_string(),
        (m, Some(_)) => m.cli_name(),
    };
    let text = match args.format {
        Format::Json => {
            let value = serde_json::json!({ "dataset": data.name(), "result": fit });
            serde_json::to_string_pretty(&value)? + "\n"
        }
        Format::Csv => {
            let header = [
                "dataset",
                "method",
                "mode",
                "n0",
                "phi",
                "root_kind",
                "iterations",
                "residual",
                "weights",
            ]
            .map(String::from);
            csv_text([
                header,
                [
                    data.name().into(),
                    method.label(),
                    fit.mode.to_string(),
                    format!("{:.4}", fit.params.n0()),
                    fmt_phi(fit.params.phi()),
                    fit.root.kind.to_string(),
                    fit.root.iterations.to_string(),
                    format!("{:e}", fit.root.residual),
                    weights,
                ],
            ])?
        }
        Format::Table => {
            let mut s = format!(
                "dataset     {}\nmethod      {}\nmode        {}\nN0          {:.4}\nPhi         {}\nroot        {}\niterations  {}\nresidual    {:e}\nweights     {}\n",
                data.name(),
                method.label(),
                fit.mode,
                fit.params.n0(),
                fmt_phi(fit.params.phi()),
                fit.root.kind,
                fit.root.iterations,
                fit.root.residual,
                weights,
            );
            if let Some((a, b)) = fit.root.bracket {
                s += &format!("bracket     [{a}, {b}]\n");
            }
            if let Some(gq) = &fit.gq {
                s += &if gq.applicable {
                    format!(
                        "gq          lambda {:.4}, critical {:.4}, {}\n",
                        gq.statistic,
                        gq.critical_value,
                        if gq.heteroscedastic {
                            "heteroscedastic, refitted"
                        } else {
                            "no heteroscedasticity, LSE kept"
                        }
                    )
                } else {
                    "gq          inapplicable, LSE kept\n".to_string()
                };
            }
            if fit.reweights > 0 {
                s += &format!("refits      {}\n", fit.reweights);
            }
            s
        }
    };
    emit(&text, args.out.as_deref())
}

fn cmd_gq(args: &GqArgs) -> Result<()> {
    let cfg = args.tuning.config();
    cfg.validate()?;
    let data = segment(&resolve_data(&args.data)?, args.k)?;
    let fit = estimate(&data, &Method::Lse, args.mode.into(), &cfg)?;
    let res = residuals(&data, &fit.params)?;
    let gq = goldfeld_quandt(&res, cfg.alpha, cfg.omit_fraction)?;
    let verdict = match (gq.applicable, gq.heteroscedastic) {
        (false, _) => "inapplicable",
        (true, true) => "heteroscedastic",
        (true, false) => "no heteroscedasticity",
    };
    let text = match args.format {
        Format::Json => {
            let value = serde_json::json!({
                "dataset": data.name(),
                "lse": fit.params,
                "root_kind": fit.root.kind,
                "test": gq,
                "verdict": verdict,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
        Format::Csv => {
            let header = [
                "dataset",
                "n0",
                "phi",
                "lambda",
                "d1",
                "d2",
                "critical_value",
                "alpha",
                "omitted",
                "verdict",
            ]
            .map(String::from);
            csv_text([
                header,
                [
                    data.name().into(),
                    format!("{:.4}", fit.params.n0()),
                    fmt_phi(fit.params.phi()),
                    format!("{:.4}", gq.statistic),
                    gq.dof.0.to_string(),
                    gq.dof.1.to_string(),
                    format!("{:.4}", gq.critical_value),
                    gq.alpha.to_string(),
                    gq.omitted.to_string(),
                    verdict.into(),
                ],
            ])?
        }
        Format::Table => {
            let mut s = format!(
                "dataset     {}\nLSE N0      {:.4}\nLSE Phi     {}\nomitted     {}\n",
                data.name(),
                fit.params.n0(),
                fmt_phi(fit.params.phi()),
                gq.omitted
            );
            if gq.applicable {
                s += &format!(
                    "lambda      {:.4}\ndof         ({}, {})\ncritical    {:.4} (alpha {})\n",
                    gq.statistic, gq.dof.0, gq.dof.1, gq.critical_value, gq.alpha
                );
            }
            s + &format!("verdict     {verdict}\n")
        }
    };
    emit(&text, args.out.as_deref())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<bool> {
    let cfg = args.tuning.config();
    cfg.validate()?;
    if args.tolerance.is_nan() || args.tolerance <= 0.0 {
        return Err(usage(format!(
            "--tolerance must be positive, got {}",
            args.tolerance
        )));
    }
    let id = match args.id {
        Experiment::Exp1 => ExperimentId::Exp1,
        Experiment::Exp2 => ExperimentId::Exp2,
        Experiment::Exp3 => ExperimentId::Exp3,
    };
    let mut plan = ExperimentPlan::standard(id);
    if args.squared {
        plan = plan.with_squared();
    }
    let report = run_plan(&plan, &cfg)?;
    let text = match args.format {
        Format::Table => format_table(&report),
        Format::Csv => to_csv(&report)?,
        Format::Json => to_json(&report)? + "\n",
    };
    emit(&text, args.out.as_deref())?;
    if !args.no_diff {
        let devs = compare_with_reference(&report, args.tolerance);
        eprint!("{}", format_deviations(&devs, args.tolerance));
    }
    let failed = report.failures().count();
    if failed > 0 {
        eprintln!("{failed} method/dataset cells failed");
    }
    Ok(failed == 0)
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("JM_ESTIMATE_THREADS") {
        let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            usage(format!(
                "JM_ESTIMATE_THREADS must be a positive integer, got '{raw}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Datasets { format } => cmd_datasets(format).map(|_| true),
        Command::Estimate(args) => cmd_estimate(&args).map(|_| true),
        Command::Gq(args) => cmd_gq(&args).map(|_| true),
        Command::Experiment(args) => cmd_experiment(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
