//! The `hypcurv` command-line tool.
//!
//! Every subcommand prints its report as JSON on stdout. With `--out <dir>`
//! the report and any emitted artifacts are also written into that directory.
//! Exit codes: 0 success, 2 validation failure, 3 non-convergence, 4 I/O.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use hypcurv::io::{
    obj_m2, read_body, read_measure, svg_m1, write_json, write_text, BodyFile, ForwardReport,
    IoError, MeasureFile, SolveReportFile,
};
use hypcurv::measures::EXHAUSTIVE_LIMIT;
use hypcurv::{
    build_grid, check_conditions, crofton_compare, solve, CheckMode, CroftonConfig, Direction,
    Error, Measure, Polytope, SolverConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hypcurv",
    version,
    about = "Gauss curvature measures of hyperbolic polytopes"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Quadrature grid level (4096 nodes on S^1 and 40962 on S^2 at level 6).
    #[arg(long, global = true, default_value_t = hypcurv::quadrature::DEFAULT_LEVEL)]
    pub grid_level: u32,
    /// Absolute gradient tolerance of the solver (default 1e-8 μ(S^m)); for
    /// `crofton` the allowance for the quadrature error.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the report and emitted files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write an SVG picture of each m = 1 body.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Write an OBJ mesh of each m = 2 body.
    #[arg(long, global = true)]
    pub obj: bool,
    /// Solve even if the necessary conditions fail.
    #[arg(long, global = true)]
    pub force: bool,
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the necessary conditions on a measure.
    Check { measure: PathBuf },
    /// Curvature measure of a body by quadrature and by exterior angles.
    Forward { body: PathBuf },
    /// Recover a body from a measure.
    Solve { measure: PathBuf },
    /// Forward, then solve, then compare the radii.
    Roundtrip { body: PathBuf },
    /// Crofton comparison of two nested bodies.
    Crofton {
        inner: PathBuf,
        outer: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Allow m = 2.
        #[arg(long)]
        experimental: bool,
    },
    /// Write the fixture files used by the acceptance suite.
    Demo,
}

/// A failure with its exit code and, for validation failures, the report.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub report: Option<serde_json::Value>,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            kind: "validation",
            message: message.into(),
            report: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let report = match &e {
            Error::PreconditionFailed(r) => serde_json::to_value(r.as_ref()).ok(),
            _ => None,
        };
        Self {
            report,
            ..Self::validation(e.to_string())
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invalid(inner) => inner.into(),
            // A well-formed file that does not match the schema is bad data,
            // not an I/O problem.
            IoError::Json { ref source, .. } if source.is_data() => Self::validation(e.to_string()),
            _ => Self {
                code: EXIT_IO,
                kind: "io",
                message: e.to_string(),
                report: None,
            },
        }
    }
}

/// Outcome of a subcommand: the report and the exit code it implies.
struct Outcome {
    code: i32,
    report: serde_json::Value,
}

type CmdResult = Result<Outcome, Failure>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    let json_errors = cli.opts.json_errors;
    match execute(&cli) {
        Ok(out) => {
            println!("{}", pretty(&out.report));
            if out.code == EXIT_NOT_CONVERGED {
                report_failure(
                    &Failure {
                        code: out.code,
                        kind: "not_converged",
                        message: "the solver did not converge".into(),
                        report: None,
                    },
                    json_errors,
                );
            }
            out.code
        }
        Err(f) => {
            report_failure(&f, json_errors);
            f.code
        }
    }
}

fn report_failure(f: &Failure, json_errors: bool) {
    if json_errors {
        let v = json!({
            "error": f.kind,
            "exit_code": f.code,
            "message": f.message,
            "report": f.report,
        });
        eprintln!("{}", serde_json::to_string(&v).unwrap_or_default());
    } else {
        eprintln!("hypcurv: {}", f.message);
        if let Some(r) = &f.report {
            eprintln!("{}", pretty(r));
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure {
        code: EXIT_IO,
        kind: "io",
        message: e.to_string(),
        report: None,
    })
}

fn execute(cli: &Cli) -> CmdResult {
    let o = &cli.opts;
    if let Some(t) = o.tol {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Failure::validation("--tol must be positive"));
        }
    }
    if let Some(dir) = &o.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure {
            code: EXIT_IO,
            kind: "io",
            message: format!("{}: {e}", dir.display()),
            report: None,
        })?;
    }
    match &cli.command {
        Command::Check { measure } => check(o, &read_measure(measure)?),
        Command::Forward { body } => forward(o, &read_body(body)?),
        Command::Solve { measure } => solve_cmd(o, &read_measure(measure)?),
        Command::Roundtrip { body } => roundtrip(o, &read_body(body)?),
        Command::Crofton {
            inner,
            outer,
            samples,
            experimental,
        } => crofton(
            o,
            &read_body(inner)?,
            &read_body(outer)?,
            *samples,
            *experimental,
        ),
        Command::Demo => demo(o),
    }
}

fn out_path(o: &Options, name: &str) -> Option<PathBuf> {
    o.out.as_ref().map(|d| d.join(name))
}

fn save<T: Serialize>(o: &Options, name: &str, value: &T) -> Result<(), Failure> {
    if let Some(p) = out_path(o, name) {
        write_json(&p, value)?;
    }
    Ok(())
}

/// Writes the SVG/OBJ pictures requested for `body`.
fn emit_pictures(o: &Options, stem: &str, body: &Polytope) -> Result<(), Failure> {
    let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if o.svg && body.dim() == 1 {
        write_text(&dir.join(format!("{stem}.svg")), &svg_m1(body)?)?;
    }
    if o.obj && body.dim() == 2 {
        write_text(&dir.join(format!("{stem}.obj")), &obj_m2(body)?)?;
    }
    if o.svg && body.dim() == 2 {
        log::warn!("--svg only applies to m = 1 bodies");
    }
    if o.obj && body.dim() == 1 {
        log::warn!("--obj only applies to m = 2 bodies");
    }
    Ok(())
}

fn check_mode(mu: &Measure, seed: u64) -> CheckMode {
    if mu.dim() == 1 || mu.len() <= EXHAUSTIVE_LIMIT {
        CheckMode::Exhaustive
    } else {
        CheckMode::Sampled {
            subsets: 20_000,
            seed,
        }
    }
}

fn check(o: &Options, mu: &Measure) -> CmdResult {
    let report = check_conditions(mu, check_mode(mu, o.seed))?;
    save(o, "check.json", &report)?;
    let value = to_value(&report)?;
    if report.all_ok() {
        Ok(Outcome {
            code: EXIT_OK,
            report: value,
        })
    } else {
        Err(Failure {
            report: Some(value),
            ..Failure::validation("measure fails the necessary conditions")
        })
    }
}

fn forward(o: &Options, body: &Polytope) -> CmdResult {
    let report = ForwardReport::compute(body, o.grid_level)?;
    save(o, "forward.json", &report)?;
    save(
        o,
        "measure.json",
        &MeasureFile {
            dim: report.dim,
            points: report.directions.clone(),
            weights: report.integral.clone(),
        },
    )?;
    emit_pictures(o, "body", body)?;
    Ok(Outcome {
        code: EXIT_OK,
        report: to_value(&report)?,
    })
}

fn solver_config(o: &Options) -> SolverConfig {
    let mut cfg = SolverConfig {
        grid_level: o.grid_level,
        tol_grad: o.tol,
        seed: o.seed,
        force: o.force,
        ..Default::default()
    };
    if let Some(n) = o.max_iter {
        cfg.max_iter = n;
    }
    cfg
}

fn run_solver(o: &Options, mu: &Measure) -> Result<SolveReportFile, Failure> {
    if o.force {
        let pre = check_conditions(mu, check_mode(mu, o.seed))?;
        if !pre.all_ok() {
            log::warn!("necessary conditions fail; solving anyway because of --force");
        }
    }
    let report = solve(mu, &solver_config(o))?;
    if let Some(body) = &report.body {
        let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("."));
        write_json(&dir.join("body.json"), &BodyFile::from_body(body))?;
        emit_pictures(o, "body", body)?;
    }
    Ok(SolveReportFile::from_report(&report))
}

fn exit_for(file: &SolveReportFile) -> i32 {
    if file.converged && file.radii.is_some() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn solve_cmd(o: &Options, mu: &Measure) -> CmdResult {
    let file = run_solver(o, mu)?;
    save(o, "solve.json", &file)?;
    Ok(Outcome {
        code: exit_for(&file),
        report: to_value(&file)?,
    })
}

#[derive(Debug, Serialize)]
struct RoundtripReport {
    dim: usize,
    converged: bool,
    iterations: usize,
    original: Vec<f64>,
    recovered: Option<Vec<f64>>,
    max_abs_diff: Option<f64>,
    max_rel_diff: Option<f64>,
    table: String,
}

fn roundtrip(o: &Options, body: &Polytope) -> CmdResult {
    let grid = build_grid::<f64>(body.dim(), o.grid_level)?;
    let mu = body.curvature_measure_integral(&grid)?;
    let file = run_solver(o, &mu)?;
    let original = body.radii().to_vec();
    let mut table = String::from("  i      original     recovered          diff\n");
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    if let Some(rec) = &file.radii {
        for (i, (a, b)) in original.iter().zip(rec).enumerate() {
            let d = b - a;
            max_abs = max_abs.max(d.abs());
            max_rel = max_rel.max(d.abs() / a);
            let _ = writeln!(table, "{i:>3} {a:>13.9} {b:>13.9} {d:>13.3e}");
        }
    }
    eprint!("{table}");
    let report = RoundtripReport {
        dim: body.dim(),
        converged: file.converged,
        iterations: file.iterations,
        original,
        max_abs_diff: file.radii.as_ref().map(|_| max_abs),
        max_rel_diff: file.radii.as_ref().map(|_| max_rel),
        recovered: file.radii.clone(),
        table,
    };
    save(o, "solve.json", &file)?;
    save(o, "roundtrip.json", &report)?;
    Ok(Outcome {
        code: exit_for(&file),
        report: to_value(&report)?,
    })
}

fn crofton(
    o: &Options,
    inner: &Polytope,
    outer: &Polytope,
    samples: usize,
    experimental: bool,
) -> CmdResult {
    let mut cfg = CroftonConfig {
        samples,
        seed: o.seed,
        grid_level: o.grid_level,
        experimental,
        ..Default::default()
    };
    if let Some(t) = o.tol {
        cfg.quadrature_tol = t;
    }
    let report = crofton_compare(inner, outer, &cfg)?;
    save(o, "crofton.json", &report)?;
    Ok(Outcome {
        code: EXIT_OK,
        report: to_value(&report)?,
    })
}

/// The fixtures written by `demo`, as `(file name, JSON)`.
pub fn fixtures() -> Result<Vec<(String, serde_json::Value)>, Error> {
    use std::f64::consts::PI;
    let angles = |ts: &[f64]| -> Vec<Vec<f64>> {
        ts.iter()
            .map(|&t| Direction::from_angle(t).to_f64())
            .collect()
    };
    let measure = |points: Vec<Vec<f64>>, weights: Vec<f64>| {
        serde_json::to_value(MeasureFile {
            dim: 1,
            points,
            weights,
        })
        .expect("plain data")
    };
    let body = |p: &Polytope| serde_json::to_value(BodyFile::from_body(p)).expect("plain data");

    let w3 = (2.0 * PI + 0.3) / 3.0;
    let mut out = vec![
        (
            "valid_three_point.json".to_string(),
            measure(angles(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]), vec![w3; 3]),
        ),
        (
            "clustered_four.json".to_string(),
            measure(angles(&[0.0, 0.1 / 3.0, 0.2 / 3.0, 0.1]), vec![1.6; 4]),
        ),
        (
            "vertex_violating.json".to_string(),
            measure(
                angles(&[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]),
                vec![3.2, 1.5, 1.5, 1.5],
            ),
        ),
    ];
    out.push((
        "square.json".into(),
        body(&Polytope::regular_polygon(4, 1.0)?),
    ));
    out.push((
        "ball_inner.json".into(),
        body(&Polytope::regular_polygon(256, 0.5)?),
    ));
    out.push((
        "ball_outer.json".into(),
        body(&Polytope::regular_polygon(256, 1.0)?),
    ));
    out.push((
        "ball_256.json".into(),
        body(&Polytope::regular_polygon(256, 1.0)?),
    ));
    let octa: Vec<Direction> = (0..6)
        .map(|k| {
            let mut v = Direction::basis(2, k / 2);
            if k % 2 == 1 {
                v = v.neg();
            }
            v
        })
        .collect();
    out.push((
        "octahedron.json".into(),
        body(&Polytope::from_vertices(2, octa, vec![1.0; 6])?),
    ));
    Ok(out)
}

fn demo(o: &Options) -> CmdResult {
    let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut written = Vec::new();
    for (name, value) in fixtures()? {
        let path = dir.join(&name);
        write_json(&path, &value)?;
        written.push(path_string(&path));
    }
    Ok(Outcome {
        code: EXIT_OK,
        report: json!({ "written": written }),
    })
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}
