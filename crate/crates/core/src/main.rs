use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use homfilt::conjugate::analyze_g;
use homfilt::error::Error;
use homfilt::geometry::GeometrySpec;
use homfilt::io;
use homfilt::layout::build_layout;
use homfilt::mesh::{generate_mesh, validate_mesh, UnitCellMesh};
use homfilt::permeability::{darcy_with_fields, permeability_with, sweep_with, Sampling, SweepOptions};
use homfilt::solver::{CellSolver, SolverOptions};
use homfilt::taylor::{gaps, taylor_tensors, TaylorTensors};
use homfilt::validation::{run_suite, Suite};
use homfilt::viscosity::ViscosityLaw;

const OUTPUT_DIR_VAR: &str = "HOMFILT_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "homfilt", version, about = "Filtration laws of quasi-Newtonian flow through periodic porous media")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sequential, bit-reproducible execution.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Print a human-readable summary.
    #[arg(long, global = true)]
    report: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a unit-cell mesh.
    Mesh(MeshArgs),
    /// Darcy tensor of a mesh.
    Darcy(DarcyArgs),
    /// Permeability function at one driving force.
    Solve(SolveArgs),
    /// Permeability function over a sampling of driving forces.
    Sweep(SweepArgs),
    /// Expansion tensors of a Carreau law.
    Taylor(TaylorArgs),
    /// Relative gaps between a sweep and the truncated expansions.
    Gaps(GapsArgs),
    /// Linear fit of the conjugate function over a sweep.
    AnalyzeG(AnalyzeArgs),
    /// Oracle and property suites.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeomKind {
    Circle,
    Square,
    Ellipse,
    Channels,
    Straight,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, value_enum)]
    geom: GeomKind,
    #[arg(long, default_value_t = 0.25)]
    radius: f64,
    #[arg(long, default_value_t = 0.3)]
    half_side: f64,
    #[arg(long, default_value_t = 0.35)]
    semi_x: f64,
    #[arg(long, default_value_t = 0.15)]
    semi_y: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    triangles: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawKind {
    Newtonian,
    Power,
    Carreau,
}

#[derive(Args)]
struct LawArgs {
    #[arg(long = "law", value_enum, default_value = "power")]
    kind: LawKind,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.5)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    eta0: f64,
    #[arg(long, default_value_t = 0.0)]
    eta_inf: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

impl LawArgs {
    fn law(&self) -> ViscosityLaw {
        match self.kind {
            LawKind::Newtonian => ViscosityLaw::Newtonian { mu: self.mu },
            LawKind::Power => ViscosityLaw::PowerLaw { mu: self.mu, r: self.r },
            LawKind::Carreau => ViscosityLaw::Carreau { eta0: self.eta0, eta_inf: self.eta_inf, lambda: self.lambda, r: self.r },
        }
    }
}

#[derive(Args)]
struct DarcyArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[command(flatten)]
    law: LawArgs,
    /// Driving force as `x,y`.
    #[arg(long, value_parser = parse_pair, default_value = "1,0")]
    xi: [f64; 2],
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[command(flatten)]
    law: LawArgs,
    /// Radii `i/n` times angles `jπ/4m`, given as `NxM`.
    #[arg(long, value_parser = parse_grid, conflicts_with = "circle")]
    grid: Option<(usize, usize)>,
    /// Unit vectors at angles `jπ/4m`.
    #[arg(long)]
    circle: Option<usize>,
    /// Extend the angles to `[0, π)`.
    #[arg(long)]
    extend: bool,
    /// Fraction of mirrored samples re-solved as a symmetry check.
    #[arg(long)]
    verify: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TaylorArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, default_value_t = 5)]
    order: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GapsArgs {
    #[arg(long)]
    sweep: PathBuf,
    #[arg(long)]
    tensors: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    sweep: PathBuf,
    /// One-based component of `G`.
    #[arg(long, default_value_t = 1)]
    component: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot data (angle, G, fit, gap) as CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `x,y`, got `{s}`"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s.split_once('x').ok_or_else(|| format!("expected `NxM`, got `{s}`"))?;
    Ok((n.parse().map_err(|e: std::num::ParseIntError| e.to_string())?, m.parse().map_err(|e: std::num::ParseIntError| e.to_string())?))
}

enum Failure {
    Library(Error),
    Usage(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Library(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Violation(_) => 4,
            Failure::Library(e) => match e {
                Error::MeshingFailed(_)
                | Error::InconsistentMesh(_)
                | Error::SingularViscosity(_)
                | Error::LinearSolveFailed(_)
                | Error::NonConvergence(_)
                | Error::DegenerateBase(_) => 3,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Violation(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn output_path(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.clone(),
        None => std::env::var_os(OUTPUT_DIR_VAR).map_or_else(|| PathBuf::from(default_name), |d| Path::new(&d).join(default_name)),
    }
}

fn solver_options(g: &Global) -> SolverOptions {
    SolverOptions { deterministic: g.deterministic, ..SolverOptions::default() }
}

fn load_mesh(path: &Path) -> Result<UnitCellMesh, Failure> {
    let mesh = UnitCellMesh::read(path)?;
    let report = validate_mesh(&mesh);
    if !report.is_valid() {
        return Err(Failure::Library(Error::InconsistentMesh(report.violations.join("; "))));
    }
    Ok(mesh)
}

fn cmd_mesh(a: &MeshArgs, g: &Global) -> CmdResult {
    let spec = match a.geom {
        GeomKind::Circle => GeometrySpec::Circle { radius: a.radius },
        GeomKind::Square => GeometrySpec::Square { half_side: a.half_side },
        GeomKind::Ellipse => GeometrySpec::Ellipse { semi_x: a.semi_x, semi_y: a.semi_y },
        GeomKind::Channels => GeometrySpec::ChannelNetwork { delta: a.delta },
        GeomKind::Straight => GeometrySpec::StraightChannel { delta: a.delta },
    };
    let mesh = generate_mesh(&spec, a.triangles)?;
    let report = validate_mesh(&mesh);
    let path = output_path(&a.out, "mesh.json");
    mesh.write(&path)?;
    let verdict = if report.is_valid() { "valid" } else { "invalid" };
    println!(
        "{verdict}: {} nodes, {} triangles, min angle {:.1} deg, area {:.6}, hash {}",
        report.n_nodes,
        report.n_triangles,
        report.min_angle_deg,
        report.area_sum,
        mesh.provenance_hash()
    );
    if g.report {
        println!("geometry {}, fluid area {:.6}, written to {}", spec.label(), spec.fluid_area(), path.display());
    }
    if !report.is_valid() {
        return Err(Failure::Violation(report.violations.join("; ")));
    }
    Ok(())
}

fn cmd_darcy(a: &DarcyArgs, g: &Global) -> CmdResult {
    let mesh = load_mesh(&a.mesh)?;
    let layout = build_layout(&mesh)?;
    let solver = CellSolver::new(&mesh, &layout)?;
    let (k, _) = darcy_with_fields(&solver, a.mu, &solver_options(g))?;
    io::write_json(&output_path(&a.out, "darcy.json"), &k)?;
    if g.report {
        println!("K = [{:.10e} {:.10e}; {:.10e} {:.10e}]", k.k[0][0], k.k[0][1], k.k[1][0], k.k[1][1]);
        println!("formula consistency {:.3e}, asymmetry {:.3e}, eigenvalues {:?}", k.consistency(), k.asymmetry(), k.eigenvalues());
    }
    let v = k.violations();
    if !v.is_empty() {
        return Err(Failure::Violation(v.join("; ")));
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, g: &Global) -> CmdResult {
    let mesh = load_mesh(&a.mesh)?;
    let layout = build_layout(&mesh)?;
    let solver = CellSolver::new(&mesh, &layout)?;
    let sample = permeability_with(&solver, &a.law.law(), a.xi, &solver_options(g))?;
    io::write_json(&output_path(&a.out, "sample.json"), &sample)?;
    if g.report {
        println!(
            "U({:?}) = {:?}, {} Newton iterations, residual {:.3e}, div {:.3e}",
            sample.xi, sample.u, sample.diagnostics.newton_iterations, sample.diagnostics.residual, sample.diagnostics.div_norm
        );
    }
    let energy = sample.xi[0] * sample.u[0] + sample.xi[1] * sample.u[1];
    if sample.xi != [0.0, 0.0] && !(energy > 0.0) {
        return Err(Failure::Violation(format!("xi.U = {energy:e} is not positive")));
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, g: &Global) -> CmdResult {
    let sampling = match (a.grid, a.circle) {
        (Some((n, m)), None) => Sampling::Grid { n, m },
        (None, Some(m)) => Sampling::Circle { m },
        (None, None) => Sampling::Circle { m: 8 },
        (Some(_), Some(_)) => return Err(Failure::Usage("use either --grid or --circle".into())),
    };
    if let Some(f) = a.verify {
        if !(0.0..=1.0).contains(&f) {
            return Err(Failure::Usage(format!("--verify {f} must lie in [0, 1]")));
        }
    }
    let mesh = load_mesh(&a.mesh)?;
    let layout = build_layout(&mesh)?;
    let solver = CellSolver::new(&mesh, &layout)?;
    let sweep_opts = SweepOptions { extend: a.extend, verify_fraction: a.verify, seed: a.seed };
    let sweep = sweep_with(&solver, &a.law.law(), sampling, &sweep_opts, &solver_options(g))?;
    io::write_sweep_file(&output_path(&a.out, "sweep.csv"), &sweep)?;
    if g.report {
        println!("{} samples, {} failed", sweep.samples.len(), sweep.failures());
        if let Some(c) = &sweep.symmetry_check {
            println!("symmetry re-solves {}, largest relative deviation {:.3e}", c.resolved, c.max_relative_deviation);
        }
    }
    if sweep.failures() > 0 {
        return Err(Failure::Library(Error::NonConvergence(format!("{} samples failed", sweep.failures()))));
    }
    let bad = sweep.ok_samples().filter(|s| !(s.xi[0] * s.u[0] + s.xi[1] * s.u[1] > 0.0)).count();
    if bad > 0 {
        return Err(Failure::Violation(format!("{bad} samples with xi.U <= 0")));
    }
    Ok(())
}

fn cmd_taylor(a: &TaylorArgs, g: &Global) -> CmdResult {
    let mesh = load_mesh(&a.mesh)?;
    let layout = build_layout(&mesh)?;
    let solver = CellSolver::new(&mesh, &layout)?;
    let tensors = taylor_tensors(&solver, &a.law.law(), a.order, &solver_options(g))?;
    io::write_json(&output_path(&a.out, "tensors.json"), &tensors)?;
    if g.report {
        println!("K = {:?}", tensors.k.k);
        println!("H4 asymmetry {:.3e}, H4[0][0][0][0] = {:.6e}", tensors.h4_asymmetry(), tensors.h4[0][0][0][0]);
    }
    if tensors.h4_asymmetry() > 1e-8 {
        return Err(Failure::Violation(format!("H4 asymmetry {:.3e}", tensors.h4_asymmetry())));
    }
    Ok(())
}

fn cmd_gaps(a: &GapsArgs, g: &Global) -> CmdResult {
    let sweep = io::read_sweep_file(&a.sweep)?;
    let tensors: TaylorTensors = io::read_json(&a.tensors)?;
    let records = gaps(&sweep, &tensors)?;
    let path = output_path(&a.out, "gaps.csv");
    io::write_gaps_csv(std::fs::File::create(&path)?, &records, &sweep.mesh_hash, &sweep.law)?;
    if g.report {
        for r in &records {
            println!("{:>9.5} {:>9.5}  {:?} {:?} {:?}", r.xi[0], r.xi[1], r.delta1, r.delta3, r.delta5);
        }
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs, g: &Global) -> CmdResult {
    if !(1..=2).contains(&a.component) {
        return Err(Failure::Usage(format!("--component {} must be 1 or 2", a.component)));
    }
    let sweep = io::read_sweep_file(&a.sweep)?;
    let analysis = analyze_g(&sweep, a.component - 1)?;
    io::write_json(&output_path(&a.out, "analysis.json"), &analysis)?;
    if let Some(p) = &a.plot {
        io::write_analysis_csv(std::fs::File::create(p)?, &analysis)?;
    }
    if g.report {
        println!(
            "component {}: A = {:.6e}, Delta = {:.6e}, largest gap at angle {:.4}, Lipschitz estimate {:.4e}",
            analysis.component, analysis.a, analysis.delta, analysis.max_gap_angle, analysis.lipschitz
        );
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, g: &Global) -> CmdResult {
    let mesh = load_mesh(&a.mesh)?;
    let layout = build_layout(&mesh)?;
    let solver = CellSolver::new(&mesh, &layout)?;
    let report = run_suite(&solver, a.suite, &solver_options(g))?;
    if let Some(p) = &a.out {
        io::write_json(p, &report)?;
    }
    if g.report || !report.passed() {
        print!("{}", report.render());
    }
    if !report.passed() {
        let names: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(Failure::Violation(names.join(", ")));
    }
    println!("validation passed: {} checks", report.checks.len());
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    let threads = if cli.global.deterministic { Some(1) } else { cli.global.jobs };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Mesh(a) => cmd_mesh(a, g),
        Command::Darcy(a) => cmd_darcy(a, g),
        Command::Solve(a) => cmd_solve(a, g),
        Command::Sweep(a) => cmd_sweep(a, g),
        Command::Taylor(a) => cmd_taylor(a, g),
        Command::Gaps(a) => cmd_gaps(a, g),
        Command::AnalyzeG(a) => cmd_analyze(a, g),
        Command::Validate(a) => cmd_validate(a, g),
    }
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = writeln!(std::io::stderr(), "error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
