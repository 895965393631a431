//! Parameter sweeps behind the command line tool. Every sweep returns typed
//! rows and has a matching CSV writer; output order is the sweep order.

use std::fmt::Write as _;

use crate::analytic::{l2_error, l2_norm, HankelSolution};
use crate::assembly::{assemble, impedance_data_from_exact, GlobalSystem, PwdgSpace};
use crate::conditioning::{fit_scan, mass_cond, spectral_cond, FitRow, SizeConvention};
use crate::error::{Error, Result};
use crate::geometry::{aniso_rectangle, regular_polygon};
use crate::linalg::{cast_complex, Precision, Real, C64};
use crate::mesh::{unit_square_mesh_seeded, Mesh, MeshKind, DEFAULT_SEED};
use crate::orthogonalization::{global_transform, BlockTransform, Congruence};
use crate::solvers::{contraction_bound_check, gmres_solve, lu_solve, ContractionReport, GmresConfig};

pub const DEFAULT_K: f64 = 10.0;
pub const DEFAULT_MESH_KIND: MeshKind = MeshKind::Poly;
pub const DEFAULT_M: usize = 8;

/// Polygonal 8x8 mesh used by the solver sweeps unless told otherwise.
pub fn default_mesh() -> Result<Mesh> {
    unit_square_mesh_seeded(DEFAULT_MESH_KIND, DEFAULT_M, DEFAULT_SEED)
}

/// `a:b:s` inclusive range.
pub fn parse_usize_range(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::Config(format!("bad integer `{t}` in range `{s}`")))
    };
    let (a, b, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1),
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(Error::Config(format!("range `{s}` is not of the form a:b[:s]"))),
    };
    if step == 0 || a > b {
        return Err(Error::Config(format!("empty range `{s}`")));
    }
    Ok((a..=b).step_by(step).collect())
}

/// Comma-separated list of positive reals, or `a:b:n` for `n` points
/// geometrically spaced from `a` to `b`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad real list `{s}`"));
    let out: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        let a: f64 = a.parse().map_err(|_| bad())?;
        let b: f64 = b.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 || !(a > 0.0 && b > 0.0) {
            return Err(bad());
        }
        if n == 1 {
            vec![a]
        } else {
            (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
        }
    } else {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if out.is_empty() || out.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(bad());
    }
    Ok(out)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), |v| v.to_string())
}

// ---------------------------------------------------------------------------
// single-element shapes

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFamily {
    /// Regular `n`-gons.
    Ngon,
    /// Rectangles of aspect ratio `a`.
    Rect,
}

impl ShapeFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ShapeFamily::Ngon => "ngon",
            ShapeFamily::Rect => "rect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeRow {
    pub shape: ShapeFamily,
    pub param: f64,
    pub p: usize,
    pub cond2: f64,
}

/// Mass matrix conditioning over regular `n`-gons (`params` are `n`) or
/// rectangles (`params` are aspect ratios), all of diameter `h`.
pub fn cond_shape(shape: ShapeFamily, params: &[f64], ps: &[usize], h: f64, k: f64) -> Result<Vec<ShapeRow>> {
    let mut rows = Vec::with_capacity(params.len() * ps.len());
    for &param in params {
        let poly = match shape {
            ShapeFamily::Ngon => {
                if param.fract() != 0.0 || param < 3.0 {
                    return Err(Error::Config(format!("polygon side count must be an integer >= 3, got {param}")));
                }
                regular_polygon(param as usize, h)?
            }
            ShapeFamily::Rect => aniso_rectangle(param, h)?,
        };
        for &p in ps {
            rows.push(ShapeRow {
                shape,
                param,
                p,
                cond2: mass_cond(&poly, k, p, 0.0)?,
            });
        }
    }
    Ok(rows)
}

pub fn shape_csv(rows: &[ShapeRow]) -> String {
    let mut out = String::from("shape,param,p,cond2\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.shape.as_str(), r.param, r.p, r.cond2);
    }
    out
}

// ---------------------------------------------------------------------------
// fit law

#[derive(Debug, Clone)]
pub struct FitCheck {
    pub convention: SizeConvention,
    pub rows: Vec<FitRow>,
}

impl FitCheck {
    pub fn run(hs: &[f64], ks: &[f64], ps: &[usize], convention: SizeConvention) -> Result<Self> {
        Ok(Self {
            convention,
            rows: fit_scan(hs, ks, ps, convention)?,
        })
    }

    pub fn min_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn fraction_in_band(&self) -> f64 {
        crate::conditioning::fraction_in_band(&self.rows, 1.0, 10.0)
    }

    /// Rows, then a `#` summary line.
    pub fn csv(&self) -> String {
        let mut out = String::from("h,k,p,cond2,fit,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.h, r.k, r.p, r.cond2, r.fit, r.ratio);
        }
        let _ = writeln!(
            out,
            "# convention={} rows={} min_ratio={} max_ratio={} in_band={}",
            self.convention,
            self.rows.len(),
            self.min_ratio(),
            self.max_ratio(),
            self.fraction_in_band()
        );
        out
    }
}

// ---------------------------------------------------------------------------
// model problem

/// Space and system for the Hankel model problem.
pub fn model_problem(mesh: &Mesh, k: f64, p: usize) -> Result<(PwdgSpace, GlobalSystem<f64>, HankelSolution)> {
    let exact = HankelSolution::new(k)?;
    let space = PwdgSpace::new(mesh.clone(), k, p, 0.0)?;
    let system = assemble(&space, &impedance_data_from_exact(&exact))?;
    Ok((space, system, exact))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRow {
    pub p: usize,
    pub cond2_a: f64,
    pub cond2_at: Option<f64>,
    /// Relative L2 errors of the direct solves.
    pub l2_err_a: Option<f64>,
    pub l2_err_at: Option<f64>,
    /// `(element, step)` of the first MGS breakdown.
    pub breakdown: Option<(usize, usize)>,
    /// Largest `||H(A~_KK) - I||_max` over the elements.
    pub identity_defect: Option<f64>,
    /// Solver failures, one message each.
    pub failures: Vec<String>,
}

fn relative_l2<T: Real>(space: &PwdgSpace, u: &[num_complex::Complex<T>], exact: &HankelSolution, norm: f64) -> Result<f64> {
    let u: Vec<C64> = u.iter().map(|&z| cast_complex(z)).collect();
    Ok(l2_error(space, &u, exact)? / norm)
}

fn solve_row_in<T: Real>(p: usize, space: &PwdgSpace, system: &GlobalSystem<f64>, exact: &HankelSolution, congruence: Congruence) -> Result<SolveRow> {
    let norm = l2_norm(space, exact)?;
    let sys: GlobalSystem<T> = crate::solvers::precision_cast(system)?;
    let mut row = SolveRow {
        p,
        cond2_a: spectral_cond(&sys.matrix.cast())?,
        cond2_at: None,
        l2_err_a: None,
        l2_err_at: None,
        breakdown: None,
        identity_defect: None,
        failures: Vec::new(),
    };
    match lu_solve(&sys) {
        Ok(r) => row.l2_err_a = Some(relative_l2(space, &r.coefficients, exact, norm)?),
        Err(e) => row.failures.push(format!("p={p} original: {e}")),
    }
    let transform = BlockTransform::with_default_floor(&sys)?;
    row.breakdown = transform.first_breakdown();
    if row.breakdown.is_none() {
        let st = global_transform(&sys, &transform, congruence)?;
        row.cond2_at = Some(spectral_cond(&st.matrix.cast())?);
        let mut defect = 0.0f64;
        for e in 0..st.num_blocks() {
            let h = crate::conditioning::hermitian_part(&st.local_block(e)?.cast::<f64>());
            defect = defect.max(h.sub(&crate::linalg::CMatrix::identity(h.rows())).max_abs());
        }
        row.identity_defect = Some(defect);
        match lu_solve(&st).and_then(|r| transform.recover(&r.coefficients)) {
            Ok(u) => row.l2_err_at = Some(relative_l2(space, &u, exact, norm)?),
            Err(e) => row.failures.push(format!("p={p} orthogonalized: {e}")),
        }
    }
    Ok(row)
}

/// Direct solves of the model problem with the original and the
/// orthogonalized basis, one row per `p`, in the given precision.
pub fn solve_sweep(mesh: &Mesh, k: f64, ps: &[usize], precision: Precision, congruence: Congruence) -> Result<Vec<SolveRow>> {
    ps.iter()
        .map(|&p| {
            let (space, system, exact) = model_problem(mesh, k, p)?;
            match precision {
                Precision::Binary64 => solve_row_in::<f64>(p, &space, &system, &exact, congruence),
                Precision::Binary32 => solve_row_in::<f32>(p, &space, &system, &exact, congruence),
            }
        })
        .collect()
}

pub fn solve_csv(rows: &[SolveRow]) -> String {
    let mut out = String::from("p,cond2_A,cond2_At,l2_err_lu_A,l2_err_lu_At,breakdown_flag\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.p,
            r.cond2_a,
            fmt_opt(r.cond2_at),
            fmt_opt(r.l2_err_a),
            fmt_opt(r.l2_err_at),
            u8::from(r.breakdown.is_some())
        );
    }
    out
}

/// First `p` after which the error stops decreasing: the first row whose
/// error is missing, or not below the previous row's.
pub fn deterioration_onset(rows: &[SolveRow], errors: impl Fn(&SolveRow) -> Option<f64>) -> Option<usize> {
    let mut prev: Option<f64> = None;
    for r in rows {
        match (prev, errors(r)) {
            (_, None) => return Some(r.p),
            (Some(a), Some(b)) if !(b < a) => return Some(r.p),
            (_, Some(b)) => prev = Some(b),
        }
    }
    None
}

// ---------------------------------------------------------------------------
// GMRES table

#[derive(Debug, Clone, PartialEq)]
pub struct GmresRun {
    pub lambda_min_h: f64,
    pub lambda_min_h_inv: f64,
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
    pub bound: ContractionReport,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresRow {
    pub p: usize,
    pub original: GmresRun,
    /// `None` when MGS broke down.
    pub orthogonalized: Option<GmresRun>,
}

fn gmres_run<T: Real>(sys: &GlobalSystem<T>) -> Result<GmresRun> {
    let rep = gmres_solve(sys, &GmresConfig::default())?;
    let bound = contraction_bound_check(sys, &rep.residual_history)?;
    Ok(GmresRun {
        lambda_min_h: bound.lambda_min_h,
        lambda_min_h_inv: bound.lambda_min_h_inv,
        iterations: rep.iterations,
        converged: rep.converged,
        relative_residual: rep.relative_residual,
        bound,
        residual_history: rep.residual_history,
    })
}

fn gmres_row_in<T: Real>(p: usize, system: &GlobalSystem<f64>, congruence: Congruence) -> Result<GmresRow> {
    let sys: GlobalSystem<T> = crate::solvers::precision_cast(system)?;
    let original = gmres_run(&sys)?;
    let transform = BlockTransform::with_default_floor(&sys)?;
    let orthogonalized = if transform.is_ok() {
        Some(gmres_run(&global_transform(&sys, &transform, congruence)?)?)
    } else {
        None
    };
    Ok(GmresRow { p, original, orthogonalized })
}

/// Full GMRES on the model problem for both bases, with the eigenvalue
/// bounds and the contraction check of every run.
pub fn gmres_table(mesh: &Mesh, k: f64, ps: &[usize], precision: Precision, congruence: Congruence) -> Result<Vec<GmresRow>> {
    ps.iter()
        .map(|&p| {
            let (_, system, _) = model_problem(mesh, k, p)?;
            match precision {
                Precision::Binary64 => gmres_row_in::<f64>(p, &system, congruence),
                Precision::Binary32 => gmres_row_in::<f32>(p, &system, congruence),
            }
        })
        .collect()
}

pub fn gmres_csv(rows: &[GmresRow]) -> String {
    let mut out = String::from("p,lmin_HA,lmin_HAinv,iters_A,lmin_HAt,lmin_HAtinv,iters_At\n");
    for r in rows {
        let o = &r.original;
        let (a, b, c) = match &r.orthogonalized {
            Some(t) => (t.lambda_min_h.to_string(), t.lambda_min_h_inv.to_string(), t.iterations.to_string()),
            None => ("NaN".into(), "NaN".into(), "NaN".into()),
        };
        let _ = writeln!(out, "{},{},{},{},{},{},{}", r.p, o.lambda_min_h, o.lambda_min_h_inv, o.iterations, a, b, c);
    }
    out
}
