//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a hard error, 2 on a usage error and 3
//! when a fit did not converge (its report is still written).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::data_model::{load_csv, Dataset, Family, ModelSpec, Schema};
use crate::diagnostics::{chi_square_independence, dispersion_summary, histogram_csv, zero_summary};
use crate::fitter::{compare_models, fit_model, FitOptions, FitResult};
use crate::likelihood::ModelData;
use crate::report::{
    render_compare_csv, render_compare_text, render_diagnose_text, render_fit_csv, render_fit_text,
    render_screen_csv, render_screen_text, CompareReport, DiagnoseReport, FitReport, ScreenReport,
};
use crate::simulation::{paper_like_preset, simulate, write_simulation, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "countreg", version, about = "Poisson, NB and ZINB count regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a Poisson, NB or ZINB regression and print an IRR table.
    Fit(FitArgs),
    /// Chi-square screening of each covariate against the response.
    Screen(ScreenArgs),
    /// Dispersion and zero-inflation summaries with a histogram.
    Diagnose(DiagnoseArgs),
    /// Write a simulated dataset and its truth sidecar.
    Simulate(SimulateArgs),
    /// Rank several families by AIC on the same data.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Preset {
    #[value(name = "paper-like")]
    #[serde(rename = "paper-like")]
    PaperLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Poisson,
    Nb,
    Zinb,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Poisson => Family::Poisson,
            FamilyArg::Nb => Family::Nb,
            FamilyArg::Zinb => Family::Zinb,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "preset")]
    pub input: Option<PathBuf>,
    /// Column declarations (`name:type,...`) or a file containing them.
    #[arg(long, requires = "input")]
    pub schema: Option<String>,
    /// Use a simulated dataset instead of --input.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Rows to simulate for --preset.
    #[arg(long, requires = "preset")]
    pub n: Option<usize>,
    /// Seed for --preset.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Count response column (defaults to the preset's response).
    #[arg(long)]
    pub response: Option<String>,
    /// Count-part covariates, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Zero-part covariates, comma separated (zinb only; default intercept only).
    #[arg(long, value_delimiter = ',')]
    pub zero_covariates: Vec<String>,
    /// Reference level, `column=level`; repeatable.
    #[arg(long = "ref", value_name = "COL=LEVEL")]
    pub refs: Vec<String>,
    /// Optimizer iteration cap.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Path for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub response: Option<String>,
    /// Covariates to screen, comma separated (categorical or count columns).
    #[arg(long, value_delimiter = ',', required = true)]
    pub covariates: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fit this family to report its expected zero fraction.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<Preset>,
    /// JSON simulation configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; the truth sidecar goes to `<out>.truth.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Families to compare, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![FamilyArg::Poisson, FamilyArg::Nb, FamilyArg::Zinb])]
    pub families: Vec<FamilyArg>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Fit(a) => cmd_fit(a, stdout),
        Command::Screen(a) => cmd_screen(a, stdout),
        Command::Diagnose(a) => cmd_diagnose(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
    }
}

/// Loaded data plus what the echo needs to reproduce it.
struct Loaded {
    ds: Dataset,
    default_response: Option<String>,
    echo: Value,
}

fn read_schema(arg: &str) -> anyhow::Result<Schema> {
    let path = Path::new(arg);
    let text = if !arg.contains(':') && path.is_file() {
        std::fs::read_to_string(path).with_context(|| format!("reading schema file {}", path.display()))?
    } else {
        arg.to_string()
    };
    Ok(text.parse()?)
}

fn load_data(args: &DataArgs) -> anyhow::Result<Loaded> {
    match (&args.input, args.preset) {
        (Some(input), None) => {
            let schema_arg = args
                .schema
                .as_deref()
                .ok_or_else(|| anyhow!("--schema is required with --input"))?;
            let schema = read_schema(schema_arg)?;
            let ds = load_csv(input, &schema).with_context(|| format!("loading {}", input.display()))?;
            let echo = serde_json::json!({
                "input": input.display().to_string(),
                "schema": schema.to_string(),
            });
            Ok(Loaded {
                ds,
                default_response: None,
                echo,
            })
        }
        (None, Some(Preset::PaperLike)) => {
            let mut cfg = paper_like_preset();
            if let Some(n) = args.n {
                cfg.n_rows = n;
            }
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let ds = simulate(&cfg)?;
            let echo = serde_json::json!({
                "preset": "paper-like",
                "n": cfg.n_rows,
                "seed": cfg.seed,
            });
            Ok(Loaded {
                ds,
                default_response: Some(cfg.response),
                echo,
            })
        }
        (None, None) => bail!("give either --input with --schema, or --preset"),
        (Some(_), Some(_)) => bail!("--input and --preset are mutually exclusive"),
    }
}

fn parse_refs(refs: &[String]) -> anyhow::Result<BTreeMap<String, String>> {
    refs.iter()
        .map(|r| {
            r.split_once('=')
                .map(|(c, l)| (c.trim().to_string(), l.trim().to_string()))
                .filter(|(c, l)| !c.is_empty() && !l.is_empty())
                .ok_or_else(|| anyhow!("--ref expects column=level, got `{r}`"))
        })
        .collect()
}

fn resolve_response(given: &Option<String>, loaded: &Loaded) -> anyhow::Result<String> {
    given
        .clone()
        .or_else(|| loaded.default_response.clone())
        .ok_or_else(|| anyhow!("--response is required"))
}

fn build_spec(family: Family, response: String, model: &ModelArgs) -> anyhow::Result<ModelSpec> {
    if family != Family::Zinb && !model.zero_covariates.is_empty() {
        bail!("--zero-covariates is only valid with --family zinb");
    }
    Ok(ModelSpec {
        family,
        response,
        count_covariates: model.covariates.clone(),
        zero_covariates: model.zero_covariates.clone(),
        reference_levels: parse_refs(&model.refs)?,
    })
}

fn fit_options(model: &ModelArgs) -> FitOptions {
    let mut opts = FitOptions::default();
    opts.optim.max_iterations = model.max_iter;
    opts
}

fn merge_echo(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn write_json_file(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(
    stdout: &mut dyn Write,
    output: &OutputArgs,
    report: &impl Serialize,
    text: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> anyhow::Result<()> {
    match output.format {
        Format::Text => stdout.write_all(text().as_bytes())?,
        Format::Json => {
            stdout.write_all((serde_json::to_string_pretty(report)? + "\n").as_bytes())?;
        }
        Format::Csv => stdout.write_all(csv().as_bytes())?,
    }
    if let Some(path) = &output.out {
        write_json_file(path, report)?;
    }
    Ok(())
}

fn cmd_fit(args: FitArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let loaded = load_data(&args.data)?;
    let family: Family = args.family.into();
    let response = resolve_response(&args.model.response, &loaded)?;
    let spec = build_spec(family, response, &args.model)?;
    let data = ModelData::from_spec(&spec, &loaded.ds)?;
    let fit = fit_model(&data, &fit_options(&args.model))?;
    let echo = merge_echo(
        loaded.echo.clone(),
        serde_json::json!({
            "subcommand": "fit",
            "family": family,
            "response": spec.response,
            "covariates": spec.count_covariates,
            "zero_covariates": spec.zero_covariates,
            "reference_levels": spec.reference_levels,
            "max_iter": args.model.max_iter,
            "format": args.output.format,
        }),
    );
    let report = FitReport::new(&fit, loaded.ds.dropped_rows(), echo);
    emit(stdout, &args.output, &report, || render_fit_text(&report), || render_fit_csv(&report))?;
    Ok(if fit.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_screen(args: ScreenArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let loaded = load_data(&args.data)?;
    let response = resolve_response(&args.response, &loaded)?;
    let results = args
        .covariates
        .iter()
        .map(|c| chi_square_independence(&loaded.ds, c, &response).with_context(|| format!("screening `{c}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let echo = merge_echo(
        loaded.echo.clone(),
        serde_json::json!({
            "subcommand": "screen",
            "response": response,
            "covariates": args.covariates,
            "continuity_correction": false,
            "format": args.output.format,
        }),
    );
    let report = ScreenReport {
        config: echo,
        n_obs: loaded.ds.n_rows(),
        dropped_rows: loaded.ds.dropped_rows(),
        results,
    };
    emit(stdout, &args.output, &report, || render_screen_text(&report), || render_screen_csv(&report))?;
    Ok(EXIT_OK)
}

fn cmd_diagnose(args: DiagnoseArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let loaded = load_data(&args.data)?;
    let response = resolve_response(&args.model.response, &loaded)?;
    let y = loaded.ds.counts(&response)?.to_vec();
    let dispersion = dispersion_summary(&y)?;
    let mut status = EXIT_OK;
    let zeros = match args.family {
        Some(f) => {
            let spec = build_spec(f.into(), response.clone(), &args.model)?;
            let data = ModelData::from_spec(&spec, &loaded.ds)?;
            let fit: FitResult = fit_model(&data, &fit_options(&args.model))?;
            if !fit.converged {
                status = EXIT_NOT_CONVERGED;
            }
            zero_summary(&y, Some((&fit, &data)))?
        }
        None => zero_summary(&y, None)?,
    };
    let echo = merge_echo(
        loaded.echo.clone(),
        serde_json::json!({
            "subcommand": "diagnose",
            "response": response,
            "family": args.family.map(Family::from),
            "covariates": args.model.covariates,
            "zero_covariates": args.model.zero_covariates,
            "reference_levels": parse_refs(&args.model.refs)?,
            "format": args.output.format,
        }),
    );
    let report = DiagnoseReport {
        config: echo,
        dropped_rows: loaded.ds.dropped_rows(),
        dispersion,
        zeros,
    };
    emit(
        stdout,
        &args.output,
        &report,
        || render_diagnose_text(&report),
        || histogram_csv(&report.zeros),
    )?;
    Ok(status)
}

fn cmd_simulate(args: SimulateArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let mut cfg: SimConfig = match (&args.config, args.preset) {
        (Some(path), _) => serde_json::from_str(
            &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )
        .with_context(|| format!("parsing simulation config {}", path.display()))?,
        (None, Some(Preset::PaperLike)) => paper_like_preset(),
        (None, None) => bail!("give --preset or --config"),
    };
    if let Some(n) = args.n {
        cfg.n_rows = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let ds = simulate(&cfg)?;
    let sidecar = write_simulation(&args.out, &cfg, &ds)?;
    let summary = serde_json::json!({
        "config": {
            "subcommand": "simulate",
            "preset": args.preset,
            "config": args.config.as_ref().map(|p| p.display().to_string()),
            "n": cfg.n_rows,
            "seed": cfg.seed,
            "out": args.out.display().to_string(),
        },
        "rows": ds.n_rows(),
        "csv": args.out.display().to_string(),
        "truth": sidecar.display().to_string(),
        "schema": ds.schema().to_string(),
    });
    match args.format {
        Format::Json => stdout.write_all((serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?,
        Format::Text | Format::Csv => {
            writeln!(stdout, "configuration: {}", summary["config"])?;
            writeln!(stdout, "wrote {} rows to {}", ds.n_rows(), args.out.display())?;
            writeln!(stdout, "truth: {}", sidecar.display())?;
            writeln!(stdout, "schema: {}", ds.schema())?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_compare(args: CompareArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let loaded = load_data(&args.data)?;
    let response = resolve_response(&args.model.response, &loaded)?;
    let mut fits = Vec::new();
    let mut families = Vec::new();
    for &f in &args.families {
        let family: Family = f.into();
        // Zero-part covariates only apply to the zinb member.
        let mut model = args.model.clone();
        if family != Family::Zinb {
            model.zero_covariates.clear();
        }
        let spec = build_spec(family, response.clone(), &model)?;
        let data = ModelData::from_spec(&spec, &loaded.ds)?;
        fits.push(fit_model(&data, &fit_options(&model)).with_context(|| format!("fitting {family}"))?);
        families.push(family);
    }
    let ranking = compare_models(&fits)?;
    let echo = merge_echo(
        loaded.echo.clone(),
        serde_json::json!({
            "subcommand": "compare",
            "families": families,
            "response": response,
            "covariates": args.model.covariates,
            "zero_covariates": args.model.zero_covariates,
            "reference_levels": parse_refs(&args.model.refs)?,
            "max_iter": args.model.max_iter,
            "format": args.output.format,
        }),
    );
    let report = CompareReport {
        config: echo,
        n_obs: fits[0].n_obs,
        ranking,
    };
    emit(stdout, &args.output, &report, || render_compare_text(&report), || render_compare_csv(&report))?;
    Ok(if fits.iter().all(|f| f.converged) { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
