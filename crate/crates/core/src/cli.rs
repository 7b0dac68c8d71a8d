//! Command-line front end.
//!
//! Every artifact starts with provenance: `# key=value` comment lines for
//! CSV, a `provenance` object for JSON. Provenance lists every input needed
//! to regenerate the artifact. Output is a pure function of argv.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::{fmt_sig, DEFAULT_PRECISION};
use crate::model::{self, ModelParams, TimeGrid};
use crate::ode::{self, OdeForm};
use crate::payoff::DiscountSign;
use crate::spectrum::{self, ModeSpec, NormalizationMethod};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bachelier-lab",
    version,
    about = "Bachelier paths, drift checks and quantized at-the-money rates"
)]
struct Cli {
    #[command(flatten)]
    output: OutputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Significant digits in CSV output.
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION)]
    precision: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignArg {
    /// Y = V·e^{+rt}
    Plus,
    /// Y = V·e^{-rt}
    Minus,
}

impl From<SignArg> for DiscountSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => DiscountSign::PaperLiteralPlus,
            SignArg::Minus => DiscountSign::StandardMinus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolutionKind {
    /// Exponential solution of the full ODE, coefficients --coef-a/--coef-b.
    Full,
    /// Sine solution of the hedged ODE at quantized mode --mode.
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate price paths and export them as a table.
    Simulate(SimulateArgs),
    /// Compare the closed-form first-passage probability with Monte Carlo.
    Hit(HitArgs),
    /// Tabulate quantized rates r_n for n = 1..n_max.
    Spectrum(SpectrumArgs),
    /// Characteristic roots of the full or hedged ODE.
    Solve(SolveArgs),
    /// Normalization constant of the sine solution on [0, K].
    Normalize(NormalizeArgs),
    /// Discounted payoff surface Y(x, t) of a quantized mode.
    Surface(SurfaceArgs),
    /// Monte Carlo drift estimate and martingale classification.
    DriftCheck(DriftArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    sigma: f64,
    /// Price drift; defaults to the rate (no-arbitrage).
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    paths: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct HitArgs {
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SpectrumArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    strike: f64,
    #[arg(long, default_value_t = 10)]
    n_max: u64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    sigma: f64,
    /// Solve the delta-hedged form rV + DΓ = 0.
    #[arg(long, conflicts_with = "full")]
    hedged: bool,
    /// Solve the full form rV + rΔ + DΓ = 0 (default).
    #[arg(long)]
    full: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct NormalizeArgs {
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    strike: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
    method: MethodArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SurfaceArgs {
    #[arg(long, default_value_t = 1)]
    mode: u64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    strike: f64,
    /// Amplitude; defaults to the normalization constant.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, default_value_t = 11)]
    x_points: usize,
    /// Upper end of the price grid; defaults to the strike.
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 5)]
    t_points: usize,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    sign: SignArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct DriftArgs {
    #[arg(long, value_enum, default_value_t = SolutionKind::Full)]
    solution: SolutionKind,
    /// Rate for the full solution (the sine solution uses the mode's rate).
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    strike: f64,
    #[arg(long, default_value_t = 1)]
    mode: u64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.5)]
    coef_a: f64,
    #[arg(long, default_value_t = 0.5)]
    coef_b: f64,
    /// Probe states, comma separated.
    #[arg(long = "x0", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    x0: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = verify::DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = verify::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = verify::DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    sign: SignArg,
}

/// Ordered `key=value` record of every input behind an artifact.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Provenance(Vec<(String, String)>);

impl Provenance {
    fn new(command: &str, out: &OutputArgs) -> Self {
        let mut p = Self::default();
        p.push("tool", env!("CARGO_PKG_NAME"));
        p.push("version", env!("CARGO_PKG_VERSION"));
        p.push("command", command);
        p.push("seed", out.seed);
        p.push("precision", out.precision);
        p
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn num(&mut self, key: &str, v: f64) {
        // shortest representation that parses back to the same f64
        self.push(key, format!("{v:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    fn to_json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

/// Recovers the provenance record from a CSV or JSON artifact.
pub fn parse_provenance(text: &str) -> Option<Provenance> {
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).ok()?;
        let obj = v.get("provenance")?.as_object()?;
        let entries = obj
            .iter()
            .map(|(k, v)| Some((k.clone(), v.as_str()?.to_string())))
            .collect::<Option<Vec<_>>>()?;
        return Some(Provenance(entries));
    }
    let entries: Vec<_> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    (!entries.is_empty()).then_some(Provenance(entries))
}

/// Parsed view of a CSV artifact: provenance, header and rows.
pub fn parse_csv(text: &str) -> (Option<Provenance>, Vec<String>, Vec<Vec<String>>) {
    let prov = parse_provenance(text);
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (prov, header, rows)
}

/// Rendered output of one subcommand.
struct Artifact {
    provenance: Provenance,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    json: Value,
}

impl Artifact {
    fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut s = String::new();
                for (k, v) in self.provenance.entries() {
                    s.push_str(&format!("# {k}={v}\n"));
                }
                s.push_str(&self.header.join(","));
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
                Ok(s)
            }
            Format::Json => {
                let mut body = self.json.clone();
                if let Value::Object(map) = &mut body {
                    map.insert("provenance".into(), self.provenance.to_json());
                }
                let mut s = serde_json::to_string_pretty(&body)?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli).and_then(|text| emit(&cli.output, &text, stdout)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn emit(out: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<String> {
    let out = &cli.output;
    if out.precision == 0 || out.precision > 17 {
        return Err(Error::invalid("precision", "must lie in 1..=17"));
    }
    let artifact = match &cli.command {
        Command::Simulate(a) => simulate(a, out)?,
        Command::Hit(a) => hit(a, out)?,
        Command::Spectrum(a) => spectrum_table(a, out)?,
        Command::Solve(a) => solve(a, out)?,
        Command::Normalize(a) => normalize(a, out)?,
        Command::Surface(a) => surface(a, out)?,
        Command::DriftCheck(a) => drift_check(a, out)?,
    };
    artifact.render(out.format)
}

fn simulate(a: &SimulateArgs, out: &OutputArgs) -> Result<Artifact> {
    let params = match a.drift {
        Some(mu) => ModelParams::with_drift(a.x0, mu, a.rate, a.sigma)?,
        None => ModelParams::risk_neutral(a.x0, a.rate, a.sigma)?,
    };
    let grid = TimeGrid::uniform(a.horizon, a.steps)?;
    let paths = model::simulate_paths(&params, &grid, a.paths, out.seed)?;

    let mut prov = Provenance::new("simulate", out);
    prov.num("x0", a.x0);
    prov.num("rate", a.rate);
    prov.num("drift", params.drift);
    prov.push("no_arbitrage", params.no_arbitrage);
    prov.num("sigma", a.sigma);
    prov.num("horizon", a.horizon);
    prov.push("steps", a.steps);
    prov.push("paths", a.paths);

    let mut buf = Vec::new();
    paths.write_csv(&mut buf, out.precision)?;
    let (_, header, rows) = parse_csv(&String::from_utf8(buf).expect("utf-8 csv"));
    let json = json!({
        "t": grid.times(),
        "paths": paths.paths().map(|p| p.to_vec()).collect::<Vec<_>>(),
    });
    Ok(Artifact {
        provenance: prov,
        header,
        rows,
        json,
    })
}

fn hit(a: &HitArgs, out: &OutputArgs) -> Result<Artifact> {
    let params = ModelParams::risk_neutral(a.x0, a.rate, a.sigma)?;
    let grid = TimeGrid::uniform(a.horizon, a.steps)?;
    let exact = model::hitting_probability(&params, a.strike, a.horizon)?;
    let mc = model::hitting_frequency(&params, &grid, a.strike, a.paths, out.seed)?;
    let deviation = (mc.frequency - exact).abs();

    let mut prov = Provenance::new("hit", out);
    prov.num("x0", a.x0);
    prov.num("strike", a.strike);
    prov.num("rate", a.rate);
    prov.num("sigma", a.sigma);
    prov.num("horizon", a.horizon);
    prov.push("steps", a.steps);
    prov.push("paths", a.paths);

    let p = out.precision;
    let header = headers(&["closed_form", "mc_frequency", "std_error", "hits", "n_paths", "deviation"]);
    let rows = vec![vec![
        fmt_sig(exact, p),
        fmt_sig(mc.frequency, p),
        fmt_sig(mc.std_error, p),
        mc.hits.to_string(),
        mc.n_paths.to_string(),
        fmt_sig(deviation, p),
    ]];
    let json = json!({
        "closed_form": exact,
        "mc_frequency": mc.frequency,
        "std_error": mc.std_error,
        "hits": mc.hits,
        "n_paths": mc.n_paths,
        "deviation": deviation,
    });
    Ok(Artifact {
        provenance: prov,
        header,
        rows,
        json,
    })
}

fn spectrum_table(a: &SpectrumArgs, out: &OutputArgs) -> Result<Artifact> {
    let spec = spectrum::rate_spectrum(a.n_max, a.sigma, a.strike)?;
    let mut prov = Provenance::new("spectrum", out);
    prov.num("sigma", a.sigma);
    prov.num("strike", a.strike);
    prov.push("n_max", a.n_max);

    let p = out.precision;
    let mut rows = Vec::with_capacity(spec.modes.len());
    let mut modes = Vec::with_capacity(spec.modes.len());
    for m in &spec.modes {
        let norm = spectrum::normalization_constant(m.rate, m.sigma, m.strike)?;
        rows.push(vec![
            m.n.to_string(),
            fmt_sig(m.rate, p),
            fmt_sig(m.wavenumber, p),
            fmt_sig(norm.amplitude, p),
        ]);
        modes.push(json!({
            "n": m.n,
            "r_n": m.rate,
            "wavenumber": m.wavenumber,
            "A": norm.amplitude,
        }));
    }
    Ok(Artifact {
        provenance: prov,
        header: headers(&["n", "r_n", "wavenumber", "A"]),
        rows,
        json: json!({ "modes": modes }),
    })
}

fn solve(a: &SolveArgs, out: &OutputArgs) -> Result<Artifact> {
    let form = if a.hedged { OdeForm::Hedged } else { OdeForm::Full };
    let problem = ode::OdeProblem::new(a.rate, a.sigma, form)?;
    let roots = problem.roots()?;
    let form_name = match form {
        OdeForm::Full => "full",
        OdeForm::Hedged => "hedged",
    };
    let mut prov = Provenance::new("solve", out);
    prov.num("rate", a.rate);
    prov.num("sigma", a.sigma);
    prov.push("form", form_name);

    let p = out.precision;
    let case = serde_json::to_value(roots.case)?;
    let case_name = case.as_str().unwrap_or_default().to_string();
    let header = headers(&["form", "case", "root1_re", "root1_im", "root2_re", "root2_im", "D"]);
    let rows = vec![vec![
        form_name.to_string(),
        case_name,
        fmt_sig(roots.root1.re, p),
        fmt_sig(roots.root1.im, p),
        fmt_sig(roots.root2.re, p),
        fmt_sig(roots.root2.im, p),
        fmt_sig(problem.diffusion(), p),
    ]];
    let json = json!({
        "form": form_name,
        "case": case,
        "root1": { "re": roots.root1.re, "im": roots.root1.im },
        "root2": { "re": roots.root2.re, "im": roots.root2.im },
        "D": problem.diffusion(),
    });
    Ok(Artifact {
        provenance: prov,
        header,
        rows,
        json,
    })
}

fn normalize(a: &NormalizeArgs, out: &OutputArgs) -> Result<Artifact> {
    let method = match a.method {
        MethodArg::ClosedForm => NormalizationMethod::ClosedForm,
        MethodArg::Quadrature => NormalizationMethod::Quadrature,
    };
    let res = spectrum::normalization_with(a.rate, a.sigma, a.strike, method)?;
    let idx = spectrum::mode_index(a.rate, a.sigma, a.strike, 1e-9)?;
    let method_name = serde_json::to_value(method)?;
    let method_name = method_name.as_str().unwrap_or_default().to_string();

    let mut prov = Provenance::new("normalize", out);
    prov.num("rate", a.rate);
    prov.num("sigma", a.sigma);
    prov.num("strike", a.strike);
    prov.push("method", &method_name);

    let p = out.precision;
    let header = headers(&[
        "A",
        "integral",
        "method",
        "estimated_error",
        "cross_check",
        "nearest_mode",
        "quantized",
    ]);
    let rows = vec![vec![
        fmt_sig(res.amplitude, p),
        fmt_sig(res.integral, p),
        method_name.clone(),
        fmt_sig(res.estimated_error, p),
        fmt_sig(res.cross_check, p),
        idx.n.to_string(),
        idx.admissible.to_string(),
    ]];
    let json = json!({
        "A": res.amplitude,
        "integral": res.integral,
        "method": method_name,
        "estimated_error": res.estimated_error,
        "cross_check": res.cross_check,
        "nearest_mode": idx.n,
        "quantized": idx.admissible,
    });
    Ok(Artifact {
        provenance: prov,
        header,
        rows,
        json,
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn surface(a: &SurfaceArgs, out: &OutputArgs) -> Result<Artifact> {
    let mode = ModeSpec::new(a.mode, a.sigma, a.strike)?;
    let amplitude = match a.amplitude {
        Some(v) => v,
        None => spectrum::normalization_constant(mode.rate, a.sigma, a.strike)?.amplitude,
    };
    if a.x_points < 2 || a.t_points < 1 {
        return Err(Error::invalid("grid", "need x_points >= 2 and t_points >= 1"));
    }
    let x_max = a.x_max.unwrap_or(a.strike);
    let xs = linspace(0.0, x_max, a.x_points);
    let ts = linspace(0.0, a.t_max, a.t_points);
    let sign: DiscountSign = a.sign.into();
    let surf = spectrum::payoff_surface(&mode, amplitude, &xs, &ts, sign)?;
    let flagged = surf.out_of_domain.iter().filter(|f| **f).count();

    let mut prov = Provenance::new("surface", out);
    prov.push("mode", a.mode);
    prov.num("sigma", a.sigma);
    prov.num("strike", a.strike);
    prov.num("rate", mode.rate);
    prov.num("amplitude", amplitude);
    prov.push("x_points", a.x_points);
    prov.num("x_max", x_max);
    prov.num("t_max", a.t_max);
    prov.push("t_points", a.t_points);
    prov.push("sign_convention", sign.as_str());
    prov.push("out_of_domain_points", flagged);

    let p = out.precision;
    let mut header = vec!["x".to_string()];
    header.extend(ts.iter().map(|t| format!("t={}", fmt_sig(*t, p))));
    let rows = surf
        .x
        .iter()
        .zip(&surf.values)
        .map(|(x, row)| {
            std::iter::once(fmt_sig(*x, p))
                .chain(row.iter().map(|y| fmt_sig(*y, p)))
                .collect()
        })
        .collect();
    let json = json!({
        "x": surf.x,
        "t": surf.t,
        "Y": surf.values,
        "out_of_domain": surf.out_of_domain,
    });
    Ok(Artifact {
        provenance: prov,
        header,
        rows,
        json,
    })
}

fn drift_check(a: &DriftArgs, out: &OutputArgs) -> Result<Artifact> {
    let sign: DiscountSign = a.sign.into();
    let mut prov = Provenance::new("drift-check", out);
    let (solution, rate) = match a.solution {
        SolutionKind::Full => {
            let rate = a.rate.ok_or_else(|| Error::invalid("rate", "required for --solution full"))?;
            let roots = ode::characteristic_roots_full(rate, a.sigma)?;
            let s = ode::general_solution(
                roots,
                Complex::new(a.coef_a, 0.0),
                Complex::new(a.coef_b, 0.0),
            );
            prov.push("solution", "full");
            prov.num("coef_a", a.coef_a);
            prov.num("coef_b", a.coef_b);
            (s, rate)
        }
        SolutionKind::Sine => {
            let mode = ModeSpec::new(a.mode, a.sigma, a.strike)?;
            if let Some(r) = a.rate {
                if r != mode.rate {
                    return Err(Error::invalid(
                        "rate",
                        format!("sine solution uses the mode rate {}, got {r}", mode.rate),
                    ));
                }
            }
            prov.push("solution", "sine");
            prov.push("mode", a.mode);
            prov.num("strike", a.strike);
            prov.num("amplitude", a.amplitude);
            (mode.solution(a.amplitude), mode.rate)
        }
    };
    prov.num("rate", rate);
    prov.num("sigma", a.sigma);
    prov.push(
        "x0",
        a.x0.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";"),
    );
    prov.num("t", a.t);
    prov.num("dt", a.dt);
    prov.push("samples", a.samples);
    prov.num("z_threshold", a.z_threshold);
    prov.push("sign_convention", sign.as_str());

    let p = out.precision;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &x0 in &a.x0 {
        // The probe state is the starting price of a one-step simulation.
        let params = ModelParams::risk_neutral(x0, rate, a.sigma)?;
        let report = verify::drift_estimate(&solution, &params, x0, a.t, a.dt, a.samples, out.seed, sign)?;
        let verdict = verify::classify(&report, a.z_threshold)?;
        let gap = verify::hedging_gap(&solution, &params, x0, a.t, sign)?;
        let class = serde_json::to_value(verdict.classification)?;
        let class_name = class.as_str().unwrap_or_default().to_string();
        rows.push(vec![
            fmt_sig(report.x0, p),
            fmt_sig(report.t, p),
            fmt_sig(report.dt, p),
            report.n_samples.to_string(),
            fmt_sig(report.estimated_drift, p),
            fmt_sig(report.standard_error, p),
            fmt_sig(report.analytic_drift, p),
            report.z_score.map(|z| fmt_sig(z, p)).unwrap_or_default(),
            fmt_sig(gap, p),
            sign.as_str().to_string(),
            class_name,
        ]);
        let mut rec = serde_json::to_value(report)?;
        if let Value::Object(m) = &mut rec {
            m.insert("hedging_gap".into(), json!(gap));
            m.insert("verdict".into(), serde_json::to_value(verdict)?);
        }
        records.push(rec);
    }
    let header = headers(&[
        "x0",
        "t",
        "dt",
        "n_samples",
        "estimated_drift",
        "standard_error",
        "analytic_drift",
        "z_score",
        "hedging_gap",
        "sign_convention",
        "classification",
    ]);
    Ok(Artifact {
        provenance: prov,
        header,
        rows,
        json: json!({ "reports": records }),
    })
}

/// Convenience for callers that want captured output.
pub fn run_captured<I, S>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(args, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

/// Provenance as a plain map, for consumers that do not care about order.
pub fn provenance_map(p: &Provenance) -> BTreeMap<String, String> {
    p.entries().iter().cloned().collect()
}
