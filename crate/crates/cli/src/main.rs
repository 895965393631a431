//! `pwdg`: conditioning and solver experiments for the plane wave DG method.
//!
//! Exit status: 0 on success, 2 on configuration errors, 3 when a numerical
//! failure was recorded (the CSV produced so far is still written).

mod config;

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwdg::conditioning::SizeConvention;
use pwdg::experiments::{
    self, cond_shape, gmres_csv, gmres_table, model_problem, parse_f64_list, parse_usize_range, shape_csv, solve_csv,
    solve_sweep, FitCheck, ShapeFamily,
};
use pwdg::linalg::Precision;
use pwdg::mesh::{unit_square_mesh_seeded, Mesh, MeshKind, DEFAULT_SEED};
use pwdg::orthogonalization::Congruence;
use pwdg::solvers::BoundStatus;
use pwdg::Error;

use config::{parse_value, resolve, ConfigFile};

#[derive(Parser, Debug)]
#[command(name = "pwdg", version, about = "Plane wave DG conditioning and solver experiments")]
struct Cli {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mass matrix conditioning on regular polygons and rectangles.
    CondShape(CondShapeArgs),
    /// Compare mass matrix conditioning on squares with the fit law.
    FitCheck(FitArgs),
    /// Direct solves with the original and orthogonalized bases.
    Solve(SolveArgs),
    /// GMRES iteration counts and field-of-values bounds.
    GmresTable(SolveArgs),
    /// Write a mesh in the plain-text exchange format.
    MeshGen(MeshGenArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct CondShapeArgs {
    /// ngon, rect or both.
    #[arg(long)]
    shape: Option<String>,
    /// Side counts of the regular polygons, a:b[:s].
    #[arg(long)]
    n_range: Option<String>,
    /// Aspect ratios of the rectangles, a:b[:s].
    #[arg(long)]
    aspect_range: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    p_range: Option<String>,
    /// Element diameter.
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    /// Comma-separated sizes, or a:b:n geometric.
    #[arg(long)]
    h_range: Option<String>,
    /// Integer wavenumbers a:b[:s].
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long)]
    p_range: Option<String>,
    /// side or diameter.
    #[arg(long)]
    convention: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct MeshArgs {
    /// quad, tri or poly.
    #[arg(long)]
    mesh: Option<String>,
    /// Cells per side (seeds per side for poly).
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Read the mesh from a file written by `mesh-gen`.
    #[arg(long)]
    mesh_file: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    p_range: Option<String>,
    /// f32 or f64.
    #[arg(long)]
    precision: Option<String>,
    /// hermitian or transpose.
    #[arg(long)]
    congruence: Option<String>,
    /// Write each assembled system (binary64) to this file.
    #[arg(long)]
    dump_system: Option<String>,
    /// Directory for per-run GMRES residual histories.
    #[arg(long)]
    residuals: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct MeshGenArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    output: Output,
}

/// Result of a subcommand: the text to emit and whether a numerical
/// failure was recorded along the way.
struct Outcome {
    text: String,
    failed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, failed: false }
    }
}

const MESH_KEYS: [&str; 4] = ["mesh", "m", "seed", "mesh-file"];

fn get<T: std::str::FromStr>(flag: &Option<String>, cfg: &ConfigFile, key: &str, default: T) -> pwdg::Result<T> {
    match resolve(flag, cfg, key) {
        Some(raw) => parse_value(key, raw),
        None => Ok(default),
    }
}

fn positive(key: &str, v: f64) -> pwdg::Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("`{key}` must be positive, got {v}")))
    }
}

/// `--p` wins over `--p-range`; both fall back to the config file.
fn p_values(p: &Option<String>, range: &Option<String>, cfg: &ConfigFile, default: &str) -> pwdg::Result<Vec<usize>> {
    let ps = if let Some(single) = p {
        parse_usize_range(single)?
    } else if let Some(r) = range {
        parse_usize_range(r)?
    } else if let Some(single) = cfg.get("p") {
        parse_usize_range(single)?
    } else {
        parse_usize_range(cfg.get("p-range").unwrap_or(default))?
    };
    if ps.contains(&0) {
        return Err(Error::Config("p must be at least 1".into()));
    }
    Ok(ps)
}

fn load_mesh(args: &MeshArgs, cfg: &ConfigFile) -> pwdg::Result<Mesh> {
    if let Some(path) = resolve(&args.mesh_file, cfg, "mesh-file") {
        let file = fs::File::open(path).map_err(|e| Error::Config(format!("cannot open mesh file {path}: {e}")))?;
        return Mesh::read_text(BufReader::new(file)).map_err(|e| Error::Config(format!("mesh file {path}: {e}")));
    }
    let kind: MeshKind = match resolve(&args.mesh, cfg, "mesh") {
        Some(s) => s.parse()?,
        None => experiments::DEFAULT_MESH_KIND,
    };
    let m: usize = get(&args.m, cfg, "m", experiments::DEFAULT_M)?;
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let seed: u64 = get(&args.seed, cfg, "seed", DEFAULT_SEED)?;
    unit_square_mesh_seeded(kind, m, seed)
}

fn cmd_cond_shape(a: &CondShapeArgs, cfg: &ConfigFile) -> pwdg::Result<Outcome> {
    cfg.check_keys(&["shape", "n-range", "aspect-range", "p", "p-range", "h", "k", "out"])?;
    let shape = resolve(&a.shape, cfg, "shape").unwrap_or("both");
    let families: Vec<ShapeFamily> = match shape {
        "ngon" => vec![ShapeFamily::Ngon],
        "rect" => vec![ShapeFamily::Rect],
        "both" => vec![ShapeFamily::Ngon, ShapeFamily::Rect],
        other => return Err(Error::Config(format!("unknown shape `{other}` (ngon|rect|both)"))),
    };
    let ps = p_values(&a.p, &a.p_range, cfg, "15")?;
    let h = positive("h", get(&a.h, cfg, "h", 1.0)?)?;
    let k = positive("k", get(&a.k, cfg, "k", experiments::DEFAULT_K)?)?;
    let ns = parse_usize_range(resolve(&a.n_range, cfg, "n-range").unwrap_or("3:64"))?;
    let aspects = parse_usize_range(resolve(&a.aspect_range, cfg, "aspect-range").unwrap_or("1:16"))?;
    let mut rows = Vec::new();
    for family in families {
        let params: Vec<f64> = match family {
            ShapeFamily::Ngon => ns.iter().map(|&n| n as f64).collect(),
            ShapeFamily::Rect => aspects.iter().map(|&a| a as f64).collect(),
        };
        rows.extend(cond_shape(family, &params, &ps, h, k).map_err(|e| match e {
            Error::InvalidArgument(m) | Error::Geometry(m) => Error::Config(m),
            other => other,
        })?);
    }
    Ok(Outcome::ok(shape_csv(&rows)))
}

fn cmd_fit_check(a: &FitArgs, cfg: &ConfigFile) -> pwdg::Result<Outcome> {
    cfg.check_keys(&["h-range", "k-range", "p-range", "convention", "out"])?;
    let hs = parse_f64_list(resolve(&a.h_range, cfg, "h-range").unwrap_or("0.5,0.25,0.125,0.0625,0.03125"))?;
    let ks: Vec<f64> = parse_usize_range(resolve(&a.k_range, cfg, "k-range").unwrap_or("5:30"))?
        .into_iter()
        .map(|k| k as f64)
        .collect();
    if ks.contains(&0.0) {
        return Err(Error::Config("k must be positive".into()));
    }
    let ps = p_values(&None, &a.p_range, cfg, "5:23:2")?;
    let convention: SizeConvention = match resolve(&a.convention, cfg, "convention") {
        Some(s) => s.parse()?,
        None => SizeConvention::Side,
    };
    let check = FitCheck::run(&hs, &ks, &ps, convention)?;
    eprintln!(
        "fit-check: {} admissible points, ratio in [{}, {}], {:.4} inside [1, 10]",
        check.rows.len(),
        check.min_ratio(),
        check.max_ratio(),
        check.fraction_in_band()
    );
    Ok(Outcome::ok(check.csv()))
}

struct SolveSetup {
    mesh: Mesh,
    k: f64,
    ps: Vec<usize>,
    precision: Precision,
    congruence: Congruence,
}

fn solve_setup(a: &SolveArgs, cfg: &ConfigFile, default_ps: &str) -> pwdg::Result<SolveSetup> {
    let mut keys = vec!["k", "p", "p-range", "precision", "congruence", "dump-system", "residuals", "out"];
    keys.extend(MESH_KEYS);
    cfg.check_keys(&keys)?;
    Ok(SolveSetup {
        mesh: load_mesh(&a.mesh, cfg)?,
        k: positive("k", get(&a.k, cfg, "k", experiments::DEFAULT_K)?)?,
        ps: p_values(&a.p, &a.p_range, cfg, default_ps)?,
        precision: get(&a.precision, cfg, "precision", Precision::Binary64)?,
        congruence: get(&a.congruence, cfg, "congruence", Congruence::Hermitian)?,
    })
}

fn dump_systems(a: &SolveArgs, cfg: &ConfigFile, s: &SolveSetup) -> pwdg::Result<()> {
    let Some(path) = resolve(&a.dump_system, cfg, "dump-system") else {
        return Ok(());
    };
    for &p in &s.ps {
        let (_, system, _) = model_problem(&s.mesh, s.k, p)?;
        let target = if s.ps.len() == 1 {
            PathBuf::from(path)
        } else {
            PathBuf::from(format!("{path}.p{p}"))
        };
        let file = fs::File::create(&target)?;
        let mut w = io::BufWriter::new(file);
        system.write_text(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, cfg: &ConfigFile) -> pwdg::Result<Outcome> {
    let s = solve_setup(a, cfg, "1:21:2")?;
    dump_systems(a, cfg, &s)?;
    let rows = solve_sweep(&s.mesh, s.k, &s.ps, s.precision, s.congruence)?;
    let mut failed = false;
    for r in &rows {
        for f in &r.failures {
            eprintln!("solve: {f}");
            failed = true;
        }
        if let Some((element, step)) = r.breakdown {
            eprintln!("solve: p={} Gram-Schmidt breakdown in element {element} at step {step}", r.p);
        }
    }
    Ok(Outcome {
        text: solve_csv(&rows),
        failed,
    })
}

fn write_residuals(dir: &Path, label: &str, p: usize, history: &[f64]) -> pwdg::Result<()> {
    let mut out = String::from("iter,residual\n");
    for (j, r) in history.iter().enumerate() {
        out.push_str(&format!("{j},{r}\n"));
    }
    fs::write(dir.join(format!("residuals_{label}_p{p}.csv")), out)?;
    Ok(())
}

fn describe(status: BoundStatus) -> String {
    match status {
        BoundStatus::Inapplicable => "bound inapplicable".into(),
        BoundStatus::Checked { violations, min_margin } => {
            format!("bound violations {violations}, min margin {min_margin:e}")
        }
    }
}

fn cmd_gmres_table(a: &SolveArgs, cfg: &ConfigFile) -> pwdg::Result<Outcome> {
    let s = solve_setup(a, cfg, "5:15:2")?;
    dump_systems(a, cfg, &s)?;
    let rows = gmres_table(&s.mesh, s.k, &s.ps, s.precision, s.congruence)?;
    let residual_dir = resolve(&a.residuals, cfg, "residuals").map(PathBuf::from);
    if let Some(dir) = &residual_dir {
        fs::create_dir_all(dir)?;
    }
    let mut failed = false;
    for r in &rows {
        let runs = [("A", Some(&r.original)), ("At", r.orthogonalized.as_ref())];
        for (label, run) in runs {
            let Some(run) = run else {
                eprintln!("gmres-table: p={} {label}: Gram-Schmidt breakdown, no run", r.p);
                continue;
            };
            if !run.converged {
                eprintln!("gmres-table: p={} {label}: no convergence in {} iterations", r.p, run.iterations);
                failed = true;
            }
            eprintln!("gmres-table: p={} {label}: {}", r.p, describe(run.bound.status));
            if let Some(dir) = &residual_dir {
                write_residuals(dir, label, r.p, &run.residual_history)?;
            }
        }
    }
    Ok(Outcome {
        text: gmres_csv(&rows),
        failed,
    })
}

fn cmd_mesh_gen(a: &MeshGenArgs, cfg: &ConfigFile) -> pwdg::Result<Outcome> {
    let mut keys = vec!["out"];
    keys.extend(MESH_KEYS);
    cfg.check_keys(&keys)?;
    let mesh = load_mesh(&a.mesh, cfg)?;
    let mut buf = Vec::new();
    mesh.write_text(&mut buf)?;
    Ok(Outcome::ok(String::from_utf8(buf).expect("mesh text is ASCII")))
}

fn emit(text: &str, out: Option<&str>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("pwdg: {e}");
                return ExitCode::from(2);
            }
        },
        None => ConfigFile::default(),
    };
    let (result, out_flag) = match &cli.command {
        Command::CondShape(a) => (cmd_cond_shape(a, &cfg), &a.output.out),
        Command::FitCheck(a) => (cmd_fit_check(a, &cfg), &a.output.out),
        Command::Solve(a) => (cmd_solve(a, &cfg), &a.output.out),
        Command::GmresTable(a) => (cmd_gmres_table(a, &cfg), &a.output.out),
        Command::MeshGen(a) => (cmd_mesh_gen(a, &cfg), &a.output.out),
    };
    let out = resolve(out_flag, &cfg, "out");
    match result {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome.text, out) {
                eprintln!("pwdg: cannot write output: {e}");
                return ExitCode::from(2);
            }
            if outcome.failed {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("pwdg: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
