#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod doc;
mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spiderweb_core::analysis::AnalysisError;
use spiderweb_core::{
    build_configuration, certify, h_ell_check, mass_profile, scan, spacing_profile, CertifyError,
    ContinuationSettings, MassSpec, ScanConfig,
};

use doc::{DocError, Provenance, SolutionDocument};

#[derive(Parser)]
#[command(name = "spiderweb", version, about = "Build and certify spiderweb central configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a configuration by ring insertion and mass continuation
    Solve(SolveArgs),
    /// Attach a rigorous existence certificate to a solution document
    Certify(CertifyArgs),
    /// Build, certify and profile every (n, ell) up to n-max
    Scan(ScanArgs),
    /// Spacing and mass profiles of a solution document
    Analyze(AnalyzeArgs),
    /// Check positivity of h_ell on [0, 1]
    Hcheck(HcheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Number of rings
    #[arg(long)]
    n: usize,
    /// Bodies per ring
    #[arg(long)]
    ell: usize,
    #[arg(long, default_value_t = 0.0)]
    m0: f64,
    /// v1,v2,... or equal:v, inv, kappa
    #[arg(long)]
    masses: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lambda: f64,
    /// Residual sup-norm to reach
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// auto or a positive number
    #[arg(long, default_value = "auto")]
    rho_star: String,
    /// Output path (defaults to rewriting the input)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    n_max: usize,
    /// Comma list or inclusive range a..b
    #[arg(long)]
    ells: String,
    #[arg(long, default_value = "equal:1")]
    masses: String,
    #[arg(long, default_value_t = 0.0)]
    m0: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value = "auto")]
    rho_star: String,
    /// Worker threads (SPIDERWEB_JOBS takes precedence)
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    /// CSV output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Points of the eta grid on [0, 1.25 r_n]
    #[arg(long, default_value_t = 101)]
    eta_points: usize,
    #[arg(long, default_value_t = spiderweb_core::analysis::DEFAULT_CONVEXITY_TOL)]
    convexity_tol: f64,
}

#[derive(Args)]
struct HcheckArgs {
    #[arg(long)]
    ell: usize,
    /// Grid count (derived from the derivative bound if omitted)
    #[arg(long)]
    p: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Validation,
    Solver,
    Certification,
}

impl Kind {
    fn code(self) -> u8 {
        match self {
            Kind::Validation => 2,
            Kind::Solver => 3,
            Kind::Certification => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Validation => "validation",
            Kind::Solver => "solver",
            Kind::Certification => "certification",
        }
    }
}

#[derive(Debug)]
struct Failure {
    kind: Kind,
    message: String,
    detail: Option<serde_json::Value>,
}

impl Failure {
    fn new(kind: Kind, message: impl ToString) -> Self {
        Failure {
            kind,
            message: message.to_string(),
            detail: None,
        }
    }

    fn validation(message: impl ToString) -> Self {
        Failure::new(Kind::Validation, message)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::validation(e)
    }
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        Failure::validation(e)
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::validation(e)
    }
}

impl From<CertifyError> for Failure {
    fn from(e: CertifyError) -> Self {
        match &e {
            CertifyError::Model(_) | CertifyError::Params(_) | CertifyError::InvalidRhoStar(_) => {
                Failure::validation(e)
            }
            CertifyError::CertificationFailed(f) => Failure {
                kind: Kind::Certification,
                message: e.to_string(),
                detail: Some(failure_report(f)),
            },
            _ => Failure::new(Kind::Certification, e),
        }
    }
}

fn failure_report(f: &spiderweb_core::certify::Failure) -> serde_json::Value {
    use spiderweb_core::certify::Failure as F;
    match f {
        F::Z0TooLarge { z0 } => json!({ "bound": "Z0", "Z0": z0 }),
        F::NoNegativeValue { y0, z0, z2, rho_star } => json!({
            "bound": "radii_polynomial",
            "Y0": y0, "Z0": z0, "Z2": z2, "rho_star": rho_star,
            "advice": "increase rho_star",
        }),
        F::NonFinite => json!({ "bound": "non_finite" }),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn read_document(path: &Path) -> Result<SolutionDocument, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    Ok(SolutionDocument::parse(&text)?)
}

fn parse_rho_star(s: &str) -> Result<Option<f64>, Failure> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(Some(v)),
        _ => Err(Failure::validation(format!(
            "--rho-star must be auto or a positive number, got {s:?}"
        ))),
    }
}

fn parse_ells(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::validation(format!("bad --ells {s:?}: expected a,b,c or a..b"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn settings_map(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    if !(a.tol > 0.0) {
        return Err(Failure::validation("--tol must be positive"));
    }
    let spec: MassSpec = a.masses.parse()?;
    if let MassSpec::List(v) = &spec {
        if v.len() != a.n {
            return Err(Failure::validation(format!(
                "--masses lists {} values for --n {}",
                v.len(),
                a.n
            )));
        }
    }
    let params = spec.params(a.ell, a.n, a.m0, a.lambda)?;
    let settings = ContinuationSettings {
        newton_tol: a.tol,
        ..ContinuationSettings::default()
    };
    let cfg = build_configuration(&params, &settings).map_err(|e| Failure::new(Kind::Solver, e))?;
    if !(cfg.residual_norm <= a.tol) {
        return Err(Failure::new(
            Kind::Solver,
            format!(
                "residual {:e} exceeds tolerance {:e}; the float64 floor of this \
                 configuration may lie above it, see --tol",
                cfg.residual_norm, a.tol
            ),
        ));
    }
    let provenance = Provenance::new(settings_map(&[
        ("command", "solve".into()),
        ("masses", spec.to_string()),
        ("tol", format!("{:e}", a.tol)),
    ]));
    let doc = SolutionDocument::from_configuration(&cfg, provenance);
    write_output(a.out.as_deref(), &doc.emit())?;
    Ok(())
}

fn cmd_certify(a: CertifyArgs) -> Result<(), Failure> {
    let rho_star = parse_rho_star(&a.rho_star)?;
    let mut doc = read_document(&a.input)?;
    let cfg = doc.configuration()?;
    let cert = certify(&cfg, rho_star)?;
    doc.set_certificate(&cert);
    doc.residual_norm = doc::Dec(cfg.residual_norm);
    doc.provenance
        .settings
        .insert("rho_star".into(), a.rho_star.clone());
    let out = a.out.as_deref().unwrap_or(&a.input);
    fs::write(out, doc.emit())?;
    Ok(())
}

fn jobs(flag: Option<usize>) -> Result<usize, Failure> {
    if let Ok(v) = std::env::var("SPIDERWEB_JOBS") {
        return v
            .trim()
            .parse()
            .map_err(|_| Failure::validation(format!("SPIDERWEB_JOBS is not a count: {v:?}")));
    }
    Ok(flag.unwrap_or(0))
}

fn cmd_scan(a: ScanArgs) -> Result<(), Failure> {
    if a.n_max == 0 {
        return Err(Failure::validation("--n-max must be at least 1"));
    }
    let mut cfg = ScanConfig::new(a.n_max, parse_ells(&a.ells)?, a.masses.parse()?);
    cfg.m0 = a.m0;
    cfg.lambda = a.lambda;
    cfg.rho_star = parse_rho_star(&a.rho_star)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs(a.jobs)?)
        .build()
        .map_err(Failure::validation)?;
    let rows = pool.install(|| scan(&cfg));
    let mut buf = Vec::new();
    spiderweb_core::analysis::write_csv(&rows, a.n_max, &mut buf)?;
    write_output(a.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    use spiderweb_core::analysis::fmt_float;

    if a.eta_points < 2 {
        return Err(Failure::validation("--eta-points must be at least 2"));
    }
    let cfg = read_document(&a.input)?.configuration()?;
    let profile = spacing_profile(&cfg, a.convexity_tol);
    let r = cfg.radii.as_slice();
    let top = 1.25 * r[r.len() - 1];
    let eta: Vec<f64> = (0..a.eta_points)
        .map(|k| top * k as f64 / (a.eta_points - 1) as f64)
        .collect();
    let mass = mass_profile(&cfg, &eta);

    let err = |e: csv::Error| Failure::validation(e);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "index", "eta", "value"]).map_err(err)?;
    for (i, x) in profile.a.iter().enumerate() {
        w.write_record(["a", &(i + 1).to_string(), "", &fmt_float(*x)])
            .map_err(err)?;
    }
    for (i, x) in profile.second_differences.iter().enumerate() {
        w.write_record(["d2", &(i + 2).to_string(), "", &fmt_float(*x)])
            .map_err(err)?;
    }
    w.write_record(["b", "", "", &fmt_float(profile.b)]).map_err(err)?;
    let i_star = profile.i_star.map(|i| i.to_string()).unwrap_or_default();
    w.write_record(["i_star", "", "", &i_star]).map_err(err)?;
    w.write_record(["convex", "", "", &profile.convex.to_string()])
        .map_err(err)?;
    for (k, (e, m)) in mass.eta_grid.iter().zip(mass.mass.iter()).enumerate() {
        w.write_record(["M", &mass.chi[k].to_string(), &fmt_float(*e), &m.to_string()])
            .map_err(err)?;
    }
    let buf = w.into_inner().map_err(Failure::validation)?;
    write_output(a.out.as_deref(), &String::from_utf8_lossy(&buf))?;

    if let Some(path) = a.svg {
        fs::write(path, svg::web_svg(&cfg))?;
    }
    Ok(())
}

fn cmd_hcheck(a: HcheckArgs) -> Result<(), Failure> {
    if a.p == Some(0) {
        return Err(Failure::validation("--p must be positive"));
    }
    let rep = h_ell_check(a.ell, a.p).map_err(Failure::validation)?;
    let report = json!({
        "ell": rep.ell,
        "method": format!("{:?}", rep.method).to_lowercase(),
        "p": rep.p,
        "deriv_bound": rep.deriv_bound,
        "lower_bound": rep.lower_bound,
        "min_lower": rep.min_lower,
        "verified": rep.verified,
        "negative_witness": rep.negative_witness.map(|(x, v)| json!({
            "x": x, "h_lo": v.lo(), "h_hi": v.hi(),
        })),
        "zeta": [rep.zeta.lo(), rep.zeta.hi()],
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_output(None, &text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Hcheck(a) => cmd_hcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut err = json!({ "kind": f.kind.name(), "message": f.message });
            if let Some(d) = f.detail {
                err["report"] = d;
            }
            eprintln!("{}", json!({ "error": err }));
            ExitCode::from(f.kind.code())
        }
    }
}
