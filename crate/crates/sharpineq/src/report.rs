//! Command-line front end: run configurations, versioned report files and
//! the `verify`, `constant`, `sweep` and `region` subcommands.

use crate::error::Error;
use crate::inequalities::{
    param_region, region_boundary, sharp_constant, theta_residual, verify, Case, ExtremalKind, InequalityId,
    ParamSet, RegionVerdict, Resolution, SharpConstant, TestInput, ThetaKind, Verdict,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SHARPINEQ_OUT_DIR";

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VIOLATED: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const INADMISSIBLE: i32 = 65;
}

/// Exit status for a verdict.
pub fn verdict_status(v: Verdict) -> i32 {
    match v {
        Verdict::Violated => exit::VIOLATED,
        _ => exit::OK,
    }
}

/// Exit status for a failed run: malformed requests are usage errors,
/// everything else is a data error.
pub fn error_status(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::InvalidGrid(_) => exit::USAGE,
        _ => exit::INADMISSIBLE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sharpineq", version, about = "Numerical verification of sharp functional inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate both sides of an inequality and classify the gap.
    Verify(VerifyArgs),
    /// Compute a sharp constant and its cross-checks.
    Constant(ConstantArgs),
    /// Tabulate region, constants or verdicts along one parameter.
    Sweep(SweepArgs),
    /// Classify (a, p) and list boundary points of the convex region.
    Region(RegionArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Params {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, conflicts_with = "q")]
    pub p: Option<f64>,
    /// Conjugate exponent; an alternative to `--p`.
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; defaults to standard output, or to a file in
    /// `$SHARPINEQ_OUT_DIR` when that is set.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long = "ineq")]
    pub ineq: InequalityId,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    /// Semigroup time of the dynamic forms.
    #[arg(long)]
    pub h: Option<f64>,
    /// Exponent of `Φ(x) = x^β`.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturbation amplitude of the random input.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Use the designated extremal configuration instead of a random input.
    #[arg(long)]
    pub equality_case: bool,
    /// Grid nodes per axis at the fine level (odd, at least 9).
    #[arg(long, conflicts_with = "tol")]
    pub resolution: Option<usize>,
    /// Adaptive quadrature tolerance at the coarse level.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantArgs {
    #[arg(long)]
    pub kind: ExtremalKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    A,
    P,
    H,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// The ranged parameter.
    #[arg(long, value_enum)]
    pub vary: SweepParam,
    #[arg(long, requires = "to", conflicts_with = "values")]
    pub from: Option<f64>,
    #[arg(long, requires = "from")]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// Explicit comma-separated sample values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Verify this inequality at every sample.
    #[arg(long = "ineq", conflicts_with = "kind")]
    pub ineq: Option<InequalityId>,
    /// Compute this constant and its θ at every sample.
    #[arg(long)]
    pub kind: Option<ExtremalKind>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long)]
    pub equality_case: bool,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: SweepOutput,
}

#[derive(Debug, Clone, Args)]
pub struct SweepOutput {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegionArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, requires = "p")]
    pub a: Option<f64>,
    #[arg(long, requires = "a")]
    pub p: Option<f64>,
    /// Boundary points listed for `a ∈ [n, n+1)`.
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

/// Echo of the request, stored in every report.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Verify(VerifyArgs),
    Constant(ConstantArgs),
    Sweep(SweepArgs),
    Region(RegionArgs),
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportFile<T: Serialize> {
    pub schema_version: &'static str,
    pub config: RunConfig,
    pub payload: T,
    pub duration_seconds: f64,
}

/// Sharp constant with the residual of its θ.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantPayload {
    #[serde(flatten)]
    pub constant: SharpConstant,
    pub theta_residual: Option<f64>,
}

/// One boundary point `(a, n/(n+1−a))`; exact, so its error is zero.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryPoint {
    pub a: f64,
    pub p_bound: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionPayload {
    pub n: usize,
    pub query: Option<RegionVerdict>,
    pub boundary: Vec<BoundaryPoint>,
}

/// One sample of a sweep.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub h: Option<f64>,
    /// `None` means unbounded.
    pub p_bound: Option<f64>,
    pub admissible: bool,
    pub theta: Option<f64>,
    pub theta_residual: Option<f64>,
    pub constant: Option<f64>,
    pub constant_error: Option<f64>,
    pub verdict: Option<Verdict>,
    pub gap: Option<f64>,
    pub budget: Option<f64>,
    pub note: String,
}

pub const SWEEP_HEADER: &str =
    "param,value,n,a,p,h,p_bound,admissible,theta,theta_residual,constant,constant_error,verdict,gap,budget,note";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl SweepRow {
    pub fn csv(&self, param: SweepParam) -> String {
        let name = match param {
            SweepParam::A => "a",
            SweepParam::P => "p",
            SweepParam::H => "h",
        };
        let bound = match self.p_bound {
            Some(b) => format!("{b:e}"),
            None => "inf".into(),
        };
        [
            name.to_string(),
            format!("{:e}", self.value),
            self.n.to_string(),
            format!("{:e}", self.a),
            format!("{:e}", self.p),
            opt(self.h),
            bound,
            self.admissible.to_string(),
            opt(self.theta),
            opt(self.theta_residual),
            opt(self.constant),
            opt(self.constant_error),
            self.verdict.map(|v| v.name().to_string()).unwrap_or_default(),
            opt(self.gap),
            opt(self.budget),
            self.note.replace([',', '\n'], ";"),
        ]
        .join(",")
    }
}

/// Outcome of a subcommand: serialized document, file label and status.
pub struct Outcome {
    pub body: String,
    pub label: String,
    pub status: i32,
}

fn resolve_params(p: &Params, fallback: Option<Case>) -> ParamSet {
    let (dn, da, dp) = match fallback {
        Some(c) => (c.params.n, c.params.a, c.params.p),
        None => (p.n.unwrap_or(2), p.n.unwrap_or(2) as f64, 2.0),
    };
    let n = p.n.unwrap_or(dn);
    let a = p.a.unwrap_or(da + n as f64 - dn as f64);
    match (p.p, p.q) {
        (Some(pp), _) => ParamSet::new(n, a, pp),
        (None, Some(q)) => ParamSet::from_q(n, a, q),
        (None, None) => ParamSet::new(n, a, dp),
    }
}

fn build_case(id: InequalityId, params: &Params, h: Option<f64>, beta: Option<f64>) -> Case {
    let base = Case::designated(id);
    let mut case = Case::new(id, resolve_params(params, Some(base)));
    if let Some(h) = h {
        case = case.with_h(h);
    }
    if let Some(b) = beta {
        case = case.with_beta(b);
    }
    case
}

fn resolution(n: usize, nodes: Option<usize>, tol: Option<f64>) -> crate::Result<Resolution> {
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidInput(format!("tolerance {t} must lie in (0, 1)")));
        }
        return Ok(Resolution::Adaptive { tol: t });
    }
    match nodes {
        Some(k) if k < 9 || k % 2 == 0 => {
            Err(Error::InvalidInput(format!("resolution {k} must be odd and at least 9")))
        }
        Some(k) => Ok(Resolution::Grid { nodes: k }),
        None => Ok(Resolution::baseline(n)),
    }
}

fn input(equality: bool, seed: u64, eps: f64) -> TestInput {
    if equality {
        TestInput::Equality
    } else {
        TestInput::Perturbed { seed, eps }
    }
}

fn to_json<T: Serialize>(file: &ReportFile<T>) -> String {
    serde_json::to_string_pretty(file).expect("report serializes") + "\n"
}

fn json_only(f: Format) -> crate::Result<()> {
    match f {
        Format::Json => Ok(()),
        Format::Csv => Err(Error::InvalidInput("CSV output is available for sweeps only".into())),
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> crate::Result<Outcome> {
    let start = Instant::now();
    json_only(args.output.format)?;
    let case = build_case(args.ineq, &args.params, args.h, args.beta);
    let res = resolution(case.params.n, args.resolution, args.tol)?;
    let report = verify(&case, input(args.equality_case, args.seed, args.eps), res)?;
    let status = verdict_status(report.verdict);
    let label = format!("verify-{}-n{}-seed{}", args.ineq, case.params.n, args.seed);
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Verify(args.clone()),
        payload: report,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome { body: to_json(&file), label, status })
}

fn theta_kind(k: ExtremalKind) -> Option<ThetaKind> {
    match k {
        ExtremalKind::GnPlus => Some(ThetaKind::GnPlus),
        ExtremalKind::GnMinus => Some(ThetaKind::GnMinus),
        ExtremalKind::GnConcave => Some(ThetaKind::GnConcave),
        ExtremalKind::GnTrace => Some(ThetaKind::GnTrace),
        _ => None,
    }
}

fn constant_payload(kind: ExtremalKind, s: &ParamSet) -> crate::Result<ConstantPayload> {
    let c = sharp_constant(kind, s)?;
    let theta_residual = match (theta_kind(kind), c.theta) {
        (Some(t), Some(th)) => Some(theta_residual(t, s.n, s.p, s.a, th)),
        _ => None,
    };
    Ok(ConstantPayload { constant: c, theta_residual })
}

pub fn cmd_constant(args: &ConstantArgs) -> crate::Result<Outcome> {
    let start = Instant::now();
    json_only(args.output.format)?;
    let s = resolve_params(&args.params, None);
    let payload = constant_payload(args.kind, &s)?;
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Constant(args.clone()),
        payload,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome { body: to_json(&file), label: format!("constant-{}-n{}", args.kind, s.n), status: exit::OK })
}

fn sweep_values(args: &SweepArgs) -> crate::Result<Vec<f64>> {
    if let Some(v) = &args.values {
        if v.is_empty() {
            return Err(Error::InvalidInput("empty value list".into()));
        }
        return Ok(v.clone());
    }
    match (args.from, args.to) {
        (Some(lo), Some(hi)) => {
            if args.steps < 2 {
                return Err(Error::InvalidInput("a ranged sweep needs at least 2 steps".into()));
            }
            Ok((0..args.steps).map(|k| lo + (hi - lo) * k as f64 / (args.steps - 1) as f64).collect())
        }
        _ => Err(Error::InvalidInput("give --from/--to or --values".into())),
    }
}

fn sweep_row(args: &SweepArgs, value: f64) -> SweepRow {
    let fallback = args.ineq.map(Case::designated);
    let mut params = args.params.clone();
    let mut h = args.h;
    match args.vary {
        SweepParam::A => params.a = Some(value),
        SweepParam::P => {
            params.p = Some(value);
            params.q = None;
        }
        SweepParam::H => h = Some(value),
    }
    let s = resolve_params(&params, fallback);
    let region = param_region(s.n, s.a, s.p);
    let mut row = SweepRow {
        value,
        n: s.n,
        a: s.a,
        p: s.p,
        h,
        p_bound: region.p_bound,
        admissible: region.admissible,
        note: region.reason,
        ..Default::default()
    };
    if let Some(kind) = args.kind {
        match constant_payload(kind, &s) {
            Ok(c) => {
                row.theta = c.constant.theta;
                row.theta_residual = c.theta_residual;
                row.constant = Some(c.constant.value);
                row.constant_error = Some(c.constant.error);
            }
            Err(e) => row.note = e.to_string(),
        }
    }
    if let Some(id) = args.ineq {
        let mut case = Case::new(id, s);
        if let Some(h) = h {
            case = case.with_h(h);
        }
        if let Some(b) = args.beta {
            case = case.with_beta(b);
        }
        let run = resolution(s.n, args.resolution, None)
            .and_then(|res| verify(&case, input(args.equality_case, args.seed, args.eps), res));
        match run {
            Ok(r) => {
                row.verdict = Some(r.verdict);
                row.gap = Some(r.gap);
                row.budget = Some(r.budget);
            }
            Err(e) => row.note = e.to_string(),
        }
    }
    row
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPayload {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_sweep(args: &SweepArgs) -> crate::Result<Outcome> {
    let start = Instant::now();
    let values = sweep_values(args)?;
    let rows: Vec<SweepRow> = values.par_iter().map(|&v| sweep_row(args, v)).collect();
    let status = if rows.iter().any(|r| r.verdict == Some(Verdict::Violated)) { exit::VIOLATED } else { exit::OK };
    let label = format!("sweep-{}", serde_json::to_value(args.vary).unwrap().as_str().unwrap_or("param"));
    let body = match args.output.format {
        Format::Csv => {
            let mut s = String::from(SWEEP_HEADER);
            s.push('\n');
            for r in &rows {
                s.push_str(&r.csv(args.vary));
                s.push('\n');
            }
            s
        }
        Format::Json => to_json(&ReportFile {
            schema_version: SCHEMA_VERSION,
            config: RunConfig::Sweep(args.clone()),
            payload: SweepPayload { param: args.vary, rows },
            duration_seconds: start.elapsed().as_secs_f64(),
        }),
    };
    Ok(Outcome { body, label, status })
}

pub fn cmd_region(args: &RegionArgs) -> crate::Result<Outcome> {
    let start = Instant::now();
    json_only(args.output.format)?;
    if args.n == 0 {
        return Err(Error::Inadmissible("n must be at least 1".into()));
    }
    let nf = args.n as f64;
    let a_max = nf + 1.0 - 1.0 / args.samples.max(2) as f64;
    let boundary = region_boundary(args.n, a_max, args.samples)
        .into_iter()
        .map(|(a, p_bound)| BoundaryPoint { a, p_bound, error: 0.0 })
        .collect();
    let query = match (args.a, args.p) {
        (Some(a), Some(p)) => Some(param_region(args.n, a, p)),
        _ => None,
    };
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Region(args.clone()),
        payload: RegionPayload { n: args.n, query, boundary },
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome { body: to_json(&file), label: format!("region-n{}", args.n), status: exit::OK })
}

fn extension(body: &str) -> &'static str {
    if body.starts_with('{') {
        "json"
    } else {
        "csv"
    }
}

fn emit(outcome: &Outcome, out: Option<&PathBuf>) -> std::io::Result<()> {
    let target = match out {
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(|d| PathBuf::from(d).join(format!("{}.{}", outcome.label, extension(&outcome.body)))),
    };
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, &outcome.body)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout().lock().write_all(outcome.body.as_bytes()),
    }
}

/// Parses `argv`, runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    let (result, out) = match &cli.command {
        Command::Verify(a) => (cmd_verify(a), a.output.out.as_ref()),
        Command::Constant(a) => (cmd_constant(a), a.output.out.as_ref()),
        Command::Sweep(a) => (cmd_sweep(a), a.output.out.as_ref()),
        Command::Region(a) => (cmd_region(a), a.output.out.as_ref()),
    };
    match result {
        Ok(outcome) => match emit(&outcome, out) {
            Ok(()) => outcome.status,
            Err(e) => {
                eprintln!("error: cannot write report: {e}");
                exit::USAGE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(verdict_status(Verdict::Holds), exit::OK);
        assert_eq!(verdict_status(Verdict::Equality), exit::OK);
        assert_eq!(verdict_status(Verdict::ViolatedWithinTolerance), exit::OK);
        assert_eq!(verdict_status(Verdict::Violated), exit::VIOLATED);
        assert_eq!(error_status(&Error::Inadmissible("x".into())), exit::INADMISSIBLE);
        assert_eq!(error_status(&Error::InvalidInput("x".into())), exit::USAGE);
    }

    #[test]
    fn defaults_follow_the_designated_case() {
        let p = Params { n: Some(3), a: None, p: None, q: None };
        let s = resolve_params(&p, Some(Case::designated(InequalityId::Case1)));
        assert_eq!((s.n, s.a, s.p), (3, 4.0, 2.0));
        let p = Params { n: None, a: None, p: None, q: Some(3.0) };
        let s = resolve_params(&p, Some(Case::designated(InequalityId::Sobolev)));
        assert!((s.p - 1.5).abs() < 1e-15);
    }

    #[test]
    fn region_sweep_marks_unbounded_p() {
        let cli = Cli::try_parse_from(["sharpineq", "sweep", "--vary", "a", "--from", "4", "--to", "6", "--steps", "5", "--n", "4"])
            .unwrap();
        let Command::Sweep(args) = cli.command else { panic!() };
        let out = cmd_sweep(&args).unwrap();
        let lines: Vec<&str> = out.body.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1].split(',').nth(6).unwrap().starts_with("4e0"));
        assert_eq!(lines[3].split(',').nth(6).unwrap(), "inf");
        assert_eq!(lines[5].split(',').nth(6).unwrap(), "inf");
    }
}
