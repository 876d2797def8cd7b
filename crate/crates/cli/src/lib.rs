//! Command-line front end: problem files in, check reports out.

pub mod problem;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::result::Result;

use clap::{Parser, ValueEnum};
use coupling_core::algebroid::change_connection;
use coupling_core::holonomy::holonomy_run;
use coupling_core::moser::{default_t_samples, verify_lemma31};
use coupling_core::multivec::jacobiator;
use coupling_core::report::Residual;
use coupling_core::*;
use serde::Serialize;

use problem::{read_points, Problem};

const FLOW_STEPS: usize = 100;
const FLOW_TOLERANCE: f64 = 1e-6;
const HOLONOMY_STEPS: usize = 1000;
const HOLONOMY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] coupling_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(coupling_core::Error::Invariant(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckJacobi,
    VerifyData,
    Assemble,
    Decompose,
    AlgebroidCheck,
    AlgebroidBuild,
    ConnectionChange,
    Cocycle,
    MoserVerify,
    MoserFlow,
    Linearize,
    ExtractAlgebroid,
    Holonomy,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Parser)]
#[command(name = "coupling", version, about = "Verify coupling Poisson structures on fibered charts")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    pub problem: PathBuf,
    /// Override the chart's truncation order.
    #[arg(long)]
    pub order: Option<u32>,
    /// Rational t-samples, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_samples: Option<Vec<String>>,
    /// RK4 steps for numeric commands.
    #[arg(long)]
    pub steps: Option<usize>,
    /// File of numeric sample points, one per line.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Write the structured report (JSON) here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}

/// A computed object shown before the reports.
#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub title: String,
    pub body: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub command: String,
    pub passed: bool,
    pub sections: Vec<Section>,
    pub reports: Vec<CheckReport>,
}

impl Outcome {
    fn new(command: Command) -> Self {
        Self { command: command.name(), passed: true, sections: Vec::new(), reports: Vec::new() }
    }

    fn section(&mut self, title: impl Into<String>, body: String) {
        self.sections.push(Section { title: title.into(), body });
    }

    fn report(&mut self, r: CheckReport) {
        self.passed &= r.passed();
        self.reports.push(r);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            let _ = writeln!(out, "-- {} --\n{}", s.title, s.body.trim_end());
        }
        for r in &self.reports {
            out.push_str(&r.to_string());
        }
        let _ = writeln!(out, "{}: {}", self.command, if self.passed { "PASS" } else { "FAIL" });
        out
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn bracket_table(pi: &Multivector) -> String {
    let c = pi.chart();
    let mut out = String::new();
    for (k, v) in pi.components() {
        let _ = writeln!(out, "{{{},{}}} = {v}", c.var_name(k[0]), c.var_name(k[1]));
    }
    if out.is_empty() {
        out.push_str("all brackets vanish\n");
    }
    out
}

fn data_text(d: &GeometricData) -> String {
    let c = d.chart();
    let mut out = String::new();
    for (i, row) in d.connection.coefficients().iter().enumerate() {
        for (s, g) in row.iter().enumerate() {
            if !g.is_zero() {
                let _ = writeln!(out, "Gamma[{},{}] = {g}", i + 1, s + 1);
            }
        }
    }
    for (k, v) in d.vertical.components() {
        let _ = writeln!(out, "V[{},{}] = {v}", k[0] - c.base_dim + 1, k[1] - c.base_dim + 1);
    }
    for (k, v) in d.fform.values() {
        let _ = writeln!(out, "F[{},{}] = {v}", k[0] + 1, k[1] + 1);
    }
    out
}

fn algebroid_text(a: &AlgebroidData) -> String {
    let (n, r) = (a.chart.base_dim, a.chart.fiber_dim);
    let mut out = String::new();
    for al in 0..r {
        for be in al + 1..r {
            for nu in 0..r {
                let v = &a.lambda[al][be][nu];
                if !v.is_zero() {
                    let _ = writeln!(out, "lambda[{},{},{}] = {v}", al + 1, be + 1, nu + 1);
                }
            }
        }
    }
    for i in 0..n {
        for s in 0..r {
            for nu in 0..r {
                let v = &a.theta[i][s][nu];
                if !v.is_zero() {
                    let _ = writeln!(out, "theta[{},{},{}] = {v}", i + 1, s + 1, nu + 1);
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for s in 0..r {
                let v = &a.r[i][j][s];
                if !v.is_zero() {
                    let _ = writeln!(out, "R[{},{},{}] = {v}", i + 1, j + 1, s + 1);
                }
            }
        }
    }
    out
}

fn matrix_text(m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{:>16.10e}", if *x == 0.0 { 0.0 } else { *x })).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

fn t_samples(cli: &Cli, p: &Problem) -> Result<Vec<Rational>, CliError> {
    if let Some(ts) = &cli.t_samples {
        return ts
            .iter()
            .map(|s| {
                problem::parse_rational(s).ok_or_else(|| CliError::Input(format!("--t-samples: `{s}` is not rational")))
            })
            .collect();
    }
    Ok(p.t_samples()?.unwrap_or_else(default_t_samples))
}

/// Run one command on a loaded problem.
pub fn run(cli: &Cli, p: &Problem) -> Result<Outcome, CliError> {
    let mut out = Outcome::new(cli.command);
    match cli.command {
        Command::CheckJacobi => {
            let pi = p.bivector()?;
            let mut rep = CheckReport::new("Jacobi identity");
            rep.exact("jacobi", "[[Pi,Pi]] = 0", Residual::multivector(&jacobiator(&pi)?));
            out.report(rep);
        }
        Command::VerifyData => {
            out.report(verify_theorem21(&p.geometric_data()?)?);
        }
        Command::Assemble => {
            let data = p.geometric_data()?;
            let t = assemble(&data)?;
            out.section(format!("coupling tensor (certified order {})", t.certified_order), bracket_table(&t.pi));
            out.report(theorem21_equivalence_test(&data)?);
        }
        Command::Decompose => {
            let pi = p.bivector()?;
            let data = decompose(&pi, None)?;
            out.section("geometric data", data_text(&data));
            let back = assemble(&data)?.pi;
            let mut rep = CheckReport::new("decomposition");
            rep.exact("round-trip", "assemble(decompose(Pi)) = Pi", Residual::multivector(&back.try_sub(&pi)?));
            out.report(rep);
            out.report(verify_theorem21(&data)?);
        }
        Command::AlgebroidCheck => {
            let a = p.algebroid(false)?;
            out.report(check_admissible(&a)?);
            if let Some(pts) = p.base_points()? {
                out.report(coisotropy_check(&a, &pts)?);
            }
        }
        Command::AlgebroidBuild => {
            let a = p.algebroid(false)?;
            let adm = check_admissible(&a)?;
            let admissible = adm.passed();
            out.report(adm);
            if admissible {
                let t = build_coupling(&a)?;
                out.section("geometric data", data_text(&t.data));
                out.section(format!("brackets (certified order {})", t.certified_order), bracket_table(&t.pi));
                out.report(verify_theorem21(&t.data)?);
            }
        }
        Command::ConnectionChange => {
            let a = p.algebroid(false)?;
            let m = p.mu()?;
            let moved = change_connection(&a, &m)?;
            out.section("changed algebroid data", algebroid_text(&moved));
            out.report(verify_connection_equivalence(&a, &m)?);
        }
        Command::Cocycle => {
            let a = p.algebroid(false)?;
            let a2 = p.algebroid(true)?;
            let (form, rep) = relative_cocycle(&a, &a2, &p.mu()?)?;
            out.section("relative cocycle", format!("{form}\n"));
            out.report(rep);
        }
        Command::MoserVerify => {
            let data = p.geometric_data()?;
            let ts = t_samples(cli, p)?;
            let (fam, rep) = build_family(&data, &p.phi()?, &ts)?;
            out.report(rep);
            out.report(verify_lemma31(&fam, &ts)?);
        }
        Command::MoserFlow => {
            let data = p.geometric_data()?;
            let ts = t_samples(cli, p)?;
            let (fam, rep) = build_family(&data, &p.phi()?, &ts)?;
            out.report(rep);
            let points = match &cli.points {
                Some(path) => read_points(path)?,
                None => {
                    p.file.settings.points.clone().ok_or_else(|| CliError::Input("no sample points given".into()))?
                }
            };
            let steps = cli.steps.or(p.file.settings.steps).unwrap_or(FLOW_STEPS);
            let tol = p.file.settings.tolerance.unwrap_or(FLOW_TOLERANCE);
            out.report(numeric_pullback_check(&fam, &points, steps, tol)?);
        }
        Command::Linearize => {
            let data = p.geometric_data()?;
            let lin = linearize_data(&data)?;
            out.section("first approximation", data_text(&lin));
            out.report(first_approx_check(&data, &lin)?);
        }
        Command::ExtractAlgebroid => {
            let a = extract_algebroid(&p.geometric_data()?)?;
            out.section("algebroid data", algebroid_text(&a));
            out.report(check_admissible(&a)?);
        }
        Command::Holonomy => {
            let a = p.algebroid(false)?;
            let m = p.mu()?;
            let steps = cli.steps.or(p.file.settings.steps).unwrap_or(HOLONOMY_STEPS);
            let tol = p.file.settings.tolerance.unwrap_or(HOLONOMY_TOLERANCE);
            let mut all = CheckReport::new("holonomy comparison");
            for (k, path) in p.paths()?.iter().enumerate() {
                let rep = holonomy_compare(&a, &m, path, steps, tol)?;
                let run = holonomy_run(&a, &m, path, steps)?;
                out.section(format!("transport along path {}", k + 1), matrix_text(&run.transport));
                all.absorb(&format!("path-{}/", k + 1), rep);
            }
            out.report(all);
        }
    }
    Ok(out)
}

fn write_report(path: &PathBuf, out: &Outcome) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(out).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parse arguments, run, print, and map the result to an exit code.
pub fn execute<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = Problem::load(&cli.problem, cli.order).and_then(|p| run(&cli, &p));
    match result {
        Ok(out) => {
            if !cli.quiet {
                print!("{}", out.to_text());
            }
            if let Some(path) = &cli.report {
                if let Err(e) = write_report(path, &out) {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code());
                }
            }
            ExitCode::from(out.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
