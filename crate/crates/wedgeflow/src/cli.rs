//! `wedgeflow` commands. Every command writes `summary.json` next to its
//! other outputs; exit codes follow [`CliError::exit_code`].

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wedgeflow_core::analysis::{blowup_sequence, improvement_report, monotonicity_profile, ExperimentParams, Surface};
use wedgeflow_core::barriers::CALIBRATED_C0;
use wedgeflow_core::families::{u32, Family};
use wedgeflow_core::flatland::{cone_check, degiorgi_perimeter, taut_path, PlanarConfig, PlanarSet, Side};
use wedgeflow_core::minimal_graph::{solve_min_graph_detailed, viscosity_check, viscosity_passes, wedge_instance, GraphProblem};
use wedgeflow_core::signorini::{complementarity_report, exponent_fit, solve_signorini_from, SignoriniProblem};
use wedgeflow_core::{Field, GridSpec};

use crate::error::{CliError, CliResult};
use crate::io::{atomic_write, field_csv, improvement_csv, polyline_csv, profile_csv, read_field_csv, read_json, resolve_out, write_json};
use crate::problem::{GridDesc, ProblemFile, ProblemKind};
use crate::report::{merge, write_report, Status, Summary, SUMMARY_FILE};
use crate::suite;

#[derive(Debug, Parser)]
#[command(name = "wedgeflow", version, about = "Thin-obstacle minimal surface experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem instance.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Run a certificate or oracle comparison.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Post-process a run directory or run a built-in experiment.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Merge run summaries into report.json and report.csv.
    Report {
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum SolveCmd {
    Signorini(FieldArgs),
    Graph(GraphArgs),
    Flatland(FlatlandArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    #[value(name = "homogeneous_3_2")]
    Homogeneous32,
    #[value(name = "harmonic_quadratic")]
    HarmonicQuadratic,
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// JSON problem file; overrides the builtin flags.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "homogeneous_3_2")]
    builtin: Builtin,
    /// Amplitude of the builtin boundary data (default 1, or 0.05 for graphs).
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0.03125)]
    h: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Wedge trace `γ,θ`; replaces the builtin data.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    wedge: Option<Vec<f64>>,
    /// Bend `ε x_{n-1}²` added to the wedge trace.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Ccw,
    Cw,
}

#[derive(Debug, Args)]
struct FlatlandArgs {
    /// JSON planar configuration; overrides the angle flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true, default_value_t = -30.0)]
    a_deg: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = -150.0)]
    b_deg: f64,
    #[arg(long, value_enum, default_value = "cw")]
    side: SideArg,
    #[arg(long, allow_negative_numbers = true, default_value_t = -90.0)]
    obstacle_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum VerifyCmd {
    /// Supersolution certificate for the barrier φ_β.
    Barrier {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.0078125)]
        h: f64,
        /// Accept β outside the admissible range.
        #[arg(long)]
        allow_inadmissible: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PSOR against exhaustive active-set enumeration on a 9×9 grid.
    BruteForce {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Thickened-obstacle limits against the taut path on random configurations.
    Flatland {
        #[arg(long, default_value_t = suite::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run directory written by `solve`; the built-in experiment when absent.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Grid spacing of the built-in experiment.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCmd {
    /// Density-ratio profiles `A(r)`.
    Monotonicity {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        center: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Wedge fits of the rescalings at a contact point.
    Blowup {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Closeness decay over dyadic scales.
    Improvement {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
    },
    /// Oscillation exponent at a free boundary node.
    Exponent {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
    },
    /// Flat / full-contact classification over the wedge grid.
    Dichotomy {
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
        #[arg(long, default_value_t = CALIBRATED_C0)]
        c0: f64,
        /// Also search for the least admissible C0.
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PSOR error against u_{3/2} over several spacings.
    Convergence {
        #[arg(long, value_delimiter = ',', default_value = "0.03125,0.015625,0.0078125")]
        h: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal graphs over exact wedge traces.
    Wedges {
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wedgeflow: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(c: Command) -> CliResult<()> {
    match c {
        Command::Solve(SolveCmd::Signorini(a)) => solve_signorini(a),
        Command::Solve(SolveCmd::Graph(a)) => solve_graph(a),
        Command::Solve(SolveCmd::Flatland(a)) => solve_flatland(a),
        Command::Verify(v) => verify(v),
        Command::Analyze(a) => analyze(a),
        Command::Report { dirs, out } => {
            let report = merge(&dirs)?;
            write_report(&report, &resolve_out(out.as_deref(), "report"))
        }
    }
}

/// Inverse spacing after the grid constructor has validated `h`.
fn inv_h(h: f64) -> CliResult<usize> {
    GridSpec::new(3, h)?;
    Ok((1.0 / h).round() as usize)
}

fn finish(dir: &Path, summary: Summary) -> CliResult<()> {
    summary.write(dir)?;
    match summary.status {
        Status::Fail => Err(CliError::Failed(format!("{} (see {})", summary.command, dir.display()))),
        _ => Ok(()),
    }
}

fn builtin_fields(a: &FieldArgs, default_amplitude: f64) -> CliResult<(Field, Field)> {
    let g = GridSpec::new(a.n, a.h)?;
    let amplitude = a.amplitude.unwrap_or(default_amplitude);
    let data = match a.builtin {
        Builtin::Homogeneous32 => Family::Homogeneous32 { amplitude },
        Builtin::HarmonicQuadratic => Family::HarmonicQuadratic { amplitude },
    };
    Ok((Field::zeros(g), data.field(g)?))
}

fn load_problem(path: &Path, kind: ProblemKind) -> CliResult<ProblemFile> {
    let p: ProblemFile = read_json(path)?;
    p.check_schema(path)?;
    if p.kind != kind {
        return Err(CliError::Schema {
            path: path.to_path_buf(),
            message: format!("problem kind {:?}, expected {kind:?}", p.kind),
        });
    }
    Ok(p)
}

#[derive(Serialize)]
struct SignoriniMetrics {
    sweeps: usize,
    last_update: f64,
    contact_nodes: usize,
    /// Against `amplitude · u_{3/2}` for that builtin on the unit ball.
    max_error_vs_closed_form: Option<f64>,
}

fn solve_signorini(a: FieldArgs) -> CliResult<()> {
    let out = resolve_out(a.out.as_deref(), "signorini");
    let (p, closed_form) = match &a.problem {
        Some(path) => (load_problem(path, ProblemKind::Signorini)?.signorini()?, None),
        None => {
            let (psi, g) = builtin_fields(&a, 1.0)?;
            let amp = a.amplitude.unwrap_or(1.0);
            let cf = (a.builtin == Builtin::Homogeneous32 && a.n == 3).then_some(amp);
            let p = SignoriniProblem::new(
                psi,
                g,
                a.tol.unwrap_or(suite::SIGNORINI_TOL),
                a.max_iters.unwrap_or(suite::SIGNORINI_MAX_SWEEPS),
            )?;
            (p, cf)
        }
    };
    let sol = solve_signorini_from(&p, None)?;
    let grid = *p.grid();
    let comp = complementarity_report(&sol.field, p.psi())?;
    let max_error_vs_closed_form = match closed_form {
        Some(amp) => {
            let exact = Field::from_fn(grid, |x| amp * u32(x[0], x[1]));
            Some(sol.field.max_abs_diff(&exact, Some(&grid.unknowns()))?)
        }
        None => None,
    };
    atomic_write(&out.join("field.csv"), field_csv(&sol.field).as_bytes())?;
    atomic_write(&out.join("obstacle.csv"), field_csv(p.psi()).as_bytes())?;
    write_json(&out.join("complementarity.json"), &comp)?;
    let metrics = SignoriniMetrics {
        sweeps: sol.sweeps,
        last_update: sol.last_update,
        contact_nodes: comp.contact_nodes,
        max_error_vs_closed_form,
    };
    finish(&out, Summary::new("solve signorini", Status::Ok, Some(GridDesc::of(&grid)), &metrics))
}

#[derive(Serialize)]
struct GraphMetrics {
    iterations: usize,
    viscosity_pass: bool,
    contact_nodes: usize,
}

fn solve_graph(a: GraphArgs) -> CliResult<()> {
    let f = &a.field;
    let out = resolve_out(f.out.as_deref(), "graph");
    let p = match (&f.problem, &a.wedge) {
        (Some(path), _) => load_problem(path, ProblemKind::Graph)?.graph()?,
        (None, Some(w)) => {
            if w.len() != 2 {
                return Err(CliError::Usage(format!("--wedge takes gamma,theta, got {} values", w.len())));
            }
            let g = GridSpec::new(f.n, f.h)?;
            let base = wedge_instance(g, w[0], w[1], a.epsilon)?;
            override_controls(base, f)?
        }
        (None, None) => {
            let (psi, g) = builtin_fields(f, suite::U32_AMPLITUDE)?;
            GraphProblem::new(psi, g, f.tol.unwrap_or(1e-10), f.max_iters.unwrap_or(200_000))?
        }
    };
    let sol = solve_min_graph_detailed(&p)?;
    let grid = *p.grid();
    let visc = viscosity_check(&sol.field, p.psi())?;
    let pass = viscosity_passes(&visc, grid.spacing());
    atomic_write(&out.join("field.csv"), field_csv(&sol.field).as_bytes())?;
    atomic_write(&out.join("obstacle.csv"), field_csv(p.psi()).as_bytes())?;
    write_json(&out.join("viscosity.json"), &visc)?;
    let metrics = GraphMetrics {
        iterations: sol.iterations,
        viscosity_pass: pass,
        contact_nodes: visc.contact_nodes,
    };
    finish(&out, Summary::new("solve graph", Status::Ok, Some(GridDesc::of(&grid)), &metrics))
}

fn override_controls(p: GraphProblem, f: &FieldArgs) -> CliResult<GraphProblem> {
    if f.tol.is_none() && f.max_iters.is_none() {
        return Ok(p);
    }
    Ok(GraphProblem::new(
        p.psi().clone(),
        p.g().clone(),
        f.tol.unwrap_or(p.tol()),
        f.max_iters.unwrap_or(p.max_iters()),
    )?)
}

#[derive(Serialize)]
struct FlatlandMetrics {
    config: PlanarConfig,
    length: f64,
    degiorgi_perimeter: f64,
    area: f64,
    cone: bool,
    tied: bool,
    labels: Vec<wedgeflow_core::flatland::Vertex>,
}

fn solve_flatland(a: FlatlandArgs) -> CliResult<()> {
    let out = resolve_out(a.out.as_deref(), "flatland");
    let c = match &a.config {
        Some(path) => read_json::<PlanarConfig>(path)?,
        None => {
            let side = match a.side {
                SideArg::Ccw => Side::Ccw,
                SideArg::Cw => Side::Cw,
            };
            PlanarConfig::new(a.a_deg, a.b_deg, side).with_obstacle(a.obstacle_deg).with_delta(a.delta)
        }
    };
    let t = taut_path(&c)?;
    atomic_write(&out.join("polyline.csv"), polyline_csv(&t.set).as_bytes())?;
    write_json(&out.join("set.json"), &t.set)?;
    let metrics = FlatlandMetrics {
        config: c,
        length: t.length,
        degiorgi_perimeter: degiorgi_perimeter(&t.set, &c.slit()),
        area: t.set.area(),
        cone: cone_check(&t.set, 1e-12),
        tied: t.tied,
        labels: t.labels.clone(),
    };
    finish(&out, Summary::new("solve flatland", Status::Ok, None, &metrics))
}

fn verify(v: VerifyCmd) -> CliResult<()> {
    match v {
        VerifyCmd::Barrier {
            n,
            beta,
            h,
            allow_inadmissible,
            out,
        } => {
            let out = resolve_out(out.as_deref(), "barrier");
            let g = GridSpec::new(n, h)?;
            let b = suite::barrier(n, beta, (1.0 / g.spacing()).round() as usize, allow_inadmissible)?;
            let c = &b.certificate;
            let csv = format!(
                "n,beta,h,max_h,threshold,pass,nodes\n{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                n, beta, b.h, c.max_h, c.threshold, c.pass, c.nodes
            );
            atomic_write(&out.join("certificate.csv"), csv.as_bytes())?;
            finish(&out, Summary::new("verify barrier", Status::of(c.pass), Some(GridDesc::of(&g)), &b))
        }
        VerifyCmd::BruteForce { out } => {
            let out = resolve_out(out.as_deref(), "brute-force");
            let rows = suite::brute_force_suite()?;
            let pass = rows.iter().all(|r| r.pass);
            let g = suite::brute_force_grid()?;
            finish(&out, Summary::new("verify brute-force", Status::of(pass), Some(GridDesc::of(&g)), &rows))
        }
        VerifyCmd::Flatland { seed, count, out } => {
            let out = resolve_out(out.as_deref(), "flatland-suite");
            if count == 0 {
                return Err(CliError::Usage("--count must be positive".into()));
            }
            let rows = suite::flatland_suite(seed, count)?;
            let pass = rows.iter().all(|r| r.pass);
            finish(&out, Summary::new("verify flatland", Status::of(pass), None, &serde_json::json!({"seed": seed, "rows": rows})))
        }
    }
}

/// A solved surface loaded from a run directory.
enum Loaded {
    Graph(Field, Field),
    Planar(PlanarSet),
}

impl Loaded {
    fn surface(&self) -> Surface<'_> {
        match self {
            Loaded::Graph(u, _) => Surface::Graph(u),
            Loaded::Planar(s) => Surface::Planar(s),
        }
    }
}

fn load_run(dir: &Path) -> CliResult<Loaded> {
    let summary: Summary = read_json(&dir.join(SUMMARY_FILE))?;
    if summary.command == "solve flatland" {
        return Ok(Loaded::Planar(read_json(&dir.join("set.json"))?));
    }
    let grid = summary
        .grid
        .ok_or_else(|| CliError::Schema {
            path: dir.join(SUMMARY_FILE),
            message: "run has no grid".into(),
        })?
        .build()?;
    let u = read_field_csv(&dir.join("field.csv"), grid)?;
    let psi = read_field_csv(&dir.join("obstacle.csv"), grid)?;
    Ok(Loaded::Graph(u, psi))
}

fn default_point(l: &Loaded, given: Option<Vec<f64>>) -> Vec<f64> {
    given.unwrap_or_else(|| match l {
        Loaded::Graph(u, _) => vec![0.0; u.grid().dim()],
        Loaded::Planar(_) => vec![0.0, 0.0],
    })
}

fn analyze(a: AnalyzeCmd) -> CliResult<()> {
    match a {
        AnalyzeCmd::Monotonicity { run, center, radii } => {
            let out = resolve_out(run.out.as_deref(), "monotonicity");
            match &run.run {
                Some(dir) => {
                    let l = load_run(dir)?;
                    let center = default_point(&l, center);
                    let radii = radii.unwrap_or_else(|| suite::GRAPH_RADII.to_vec());
                    let p = monotonicity_profile(l.surface(), &center, &radii)?;
                    atomic_write(&out.join("profile.csv"), profile_csv(&p).as_bytes())?;
                    finish(&out, Summary::new("analyze monotonicity", Status::of(p.is_monotone()), None, &p))
                }
                None => {
                    let rows = suite::monotonicity_suite(inv_h(run.h.unwrap_or(0.03125))?)?;
                    let pass = rows.iter().all(|r| r.pass);
                    finish(&out, Summary::new("analyze monotonicity", Status::of(pass), None, &rows))
                }
            }
        }
        AnalyzeCmd::Blowup { run, point, scales } => {
            let out = resolve_out(run.out.as_deref(), "blowup");
            let scales = scales.unwrap_or_else(|| ExperimentParams::default().scale_list());
            let steps = match &run.run {
                Some(dir) => {
                    let l = load_run(dir)?;
                    let point = default_point(&l, point);
                    blowup_sequence(l.surface(), &point, &scales)?
                }
                None => {
                    let u = wedgeflow_core::minimal_graph::solve_min_graph(&suite::u32_graph(inv_h(run.h.unwrap_or(0.015625))?)?)?;
                    let point = point.unwrap_or_else(|| vec![0.0, 0.0]);
                    blowup_sequence(Surface::Graph(&u), &point, &scales)?
                }
            };
            write_json(&out.join("blowup.json"), &steps)?;
            finish(&out, Summary::new("analyze blowup", Status::Ok, None, &steps))
        }
        AnalyzeCmd::Improvement { run, point, alpha } => {
            let out = resolve_out(run.out.as_deref(), "improvement");
            let params = ExperimentParams {
                alpha,
                ..ExperimentParams::default()
            };
            params.validate()?;
            match &run.run {
                Some(dir) => {
                    let l = load_run(dir)?;
                    let point = default_point(&l, point);
                    let t = improvement_report(l.surface(), &point, &params)?;
                    atomic_write(&out.join("improvement.csv"), improvement_csv(&t).as_bytes())?;
                    finish(&out, Summary::new("analyze improvement", Status::of(t.pass), None, &t))
                }
                None => {
                    let r = suite::improvement(inv_h(run.h.unwrap_or(0.015625))?)?;
                    atomic_write(&out.join("improvement.csv"), improvement_csv(&r.u32_table).as_bytes())?;
                    finish(&out, Summary::new("analyze improvement", Status::of(r.pass), None, &r))
                }
            }
        }
        AnalyzeCmd::Exponent { run, point } => {
            let out = resolve_out(run.out.as_deref(), "exponent");
            match &run.run {
                Some(dir) => {
                    let Loaded::Graph(u, psi) = load_run(dir)? else {
                        return Err(CliError::Usage("exponent needs a graph or signorini run".into()));
                    };
                    let point = point.unwrap_or_else(|| vec![0.0; u.grid().dim()]);
                    let x0 = u
                        .grid()
                        .nearest(&point)
                        .ok_or_else(|| CliError::Usage(format!("point {point:?} is off the grid")))?;
                    let fit = exponent_fit(&u, &psi, x0)?;
                    finish(&out, Summary::new("analyze exponent", Status::Ok, Some(GridDesc::of(u.grid())), &fit))
                }
                None => {
                    let e = suite::free_boundary_exponent(inv_h(run.h.unwrap_or(0.0078125))?)?;
                    finish(&out, Summary::new("analyze exponent", Status::of(e.pass), None, &e))
                }
            }
        }
        AnalyzeCmd::Dichotomy { h, c0, calibrate, out } => {
            let out = resolve_out(out.as_deref(), "dichotomy");
            let d = suite::dichotomy_grid(inv_h(h)?, c0, calibrate)?;
            finish(&out, Summary::new("analyze dichotomy", Status::of(d.pass), None, &d))
        }
        AnalyzeCmd::Convergence { h, out } => {
            let out = resolve_out(out.as_deref(), "convergence");
            let inv: Vec<usize> = h.iter().map(|&v| inv_h(v)).collect::<CliResult<_>>()?;
            let c = suite::signorini_convergence(&inv)?;
            finish(&out, Summary::new("analyze convergence", Status::of(c.pass), None, &c))
        }
        AnalyzeCmd::Wedges { h, out } => {
            let out = resolve_out(out.as_deref(), "wedges");
            let rows = suite::wedge_exactness(inv_h(h)?)?;
            let pass = rows.iter().all(|r| r.pass);
            finish(&out, Summary::new("analyze wedges", Status::of(pass), None, &rows))
        }
    }
}
