//! Dense LU, full GMRES and the GMRES residual contraction bound.

use std::fmt;

use num_complex::Complex;

use crate::assembly::GlobalSystem;
use crate::conditioning::{lambda_min_hermitian_part, lambda_min_hermitian_part_of_inverse};
use crate::error::{Error, Result};
use crate::linalg::{dot_conj, norm2, LuFactor, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Lu,
    Gmres,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Lu => "lu",
            SolveMethod::Gmres => "gmres",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<T: Real> {
    pub coefficients: Vec<Complex<T>>,
    pub method: SolveMethod,
    /// Arnoldi steps; zero for LU.
    pub iterations: usize,
    /// `||r_0||, ||r_1||, ...` as tracked by the least-squares update.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `||A u - b|| / ||b||` recomputed from the returned coefficients.
    pub relative_residual: f64,
}

impl<T: Real> SolveReport<T> {
    /// `iter,residual` rows.
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("iter,residual\n");
        for (j, r) in self.residual_history.iter().enumerate() {
            out.push_str(&format!("{j},{r}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    /// `None` means the system dimension.
    pub max_iter: Option<usize>,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("GMRES tolerance must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::Config("GMRES needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// Dense LU with partial pivoting in the precision of the system.
pub fn lu_solve<T: Real>(system: &GlobalSystem<T>) -> Result<SolveReport<T>> {
    let lu = LuFactor::new(&system.matrix)?;
    let u = lu.solve(&system.rhs);
    let relative_residual = system.relative_residual(&u);
    Ok(SolveReport {
        coefficients: u,
        method: SolveMethod::Lu,
        iterations: 0,
        residual_history: Vec::new(),
        converged: relative_residual.is_finite(),
        relative_residual,
    })
}

fn givens<T: Real>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    let na = a.norm();
    if na == T::zero() {
        return (T::zero(), Complex::new(T::one(), T::zero()));
    }
    let t = na.hypot(b.norm());
    (na / t, a / na * b.conj() / t)
}

#[inline]
fn rotate<T: Real>(c: T, s: Complex<T>, x: Complex<T>, y: Complex<T>) -> (Complex<T>, Complex<T>) {
    (x * c + s * y, -s.conj() * x + y * c)
}

/// Full GMRES from a zero initial guess, run in the precision of the system.
pub fn gmres_solve<T: Real>(system: &GlobalSystem<T>, cfg: &GmresConfig) -> Result<SolveReport<T>> {
    cfg.validate()?;
    let n = system.dim();
    let a = &system.matrix;
    let zero = Complex::new(T::zero(), T::zero());
    let beta = norm2(&system.rhs);
    if beta == T::zero() {
        return Ok(SolveReport {
            coefficients: vec![zero; n],
            method: SolveMethod::Gmres,
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
            relative_residual: 0.0,
        });
    }
    let max_iter = cfg.max_iter.unwrap_or(n).min(n).max(1);
    let tol = T::from_f64(cfg.tol) * beta;
    let inv_sqrt2 = T::from_f64(std::f64::consts::FRAC_1_SQRT_2);

    let mut basis: Vec<Vec<Complex<T>>> = vec![system.rhs.iter().map(|&z| z / beta).collect()];
    // columns of the rotated Hessenberg matrix
    let mut hcols: Vec<Vec<Complex<T>>> = Vec::new();
    let mut rotations: Vec<(T, Complex<T>)> = Vec::new();
    let mut g = vec![Complex::new(beta, T::zero())];
    let mut history = vec![beta.to_f64()];
    let mut converged = false;

    for j in 0..max_iter {
        let mut w = a.mul_vec(&basis[j]);
        let before = norm2(&w);
        let mut h = vec![zero; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot_conj(v, &w);
            h[i] = c;
            for (x, y) in w.iter_mut().zip(v) {
                *x = *x - c * y;
            }
        }
        if norm2(&w) < inv_sqrt2 * before {
            for (i, v) in basis.iter().enumerate() {
                let c = dot_conj(v, &w);
                h[i] = h[i] + c;
                for (x, y) in w.iter_mut().zip(v) {
                    *x = *x - c * y;
                }
            }
        }
        let hnext = norm2(&w);
        h[j + 1] = Complex::new(hnext, T::zero());

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (x, y) = rotate(c, s, h[i], h[i + 1]);
            h[i] = x;
            h[i + 1] = y;
        }
        let (c, s) = givens(h[j], h[j + 1]);
        let (x, _) = rotate(c, s, h[j], h[j + 1]);
        h[j] = x;
        h[j + 1] = zero;
        rotations.push((c, s));
        let (gj, gnext) = rotate(c, s, g[j], zero);
        g[j] = gj;
        g.push(gnext);
        hcols.push(h);

        let res = gnext.norm();
        history.push(res.to_f64());
        if !res.is_finite() {
            return Err(Error::Numerical(format!("GMRES residual became non-finite at step {}", j + 1)));
        }
        if res <= tol {
            converged = true;
            break;
        }
        if hnext == T::zero() {
            // invariant subspace reached; the least-squares residual is final
            break;
        }
        basis.push(w.iter().map(|&z| z / hnext).collect());
    }

    let m = hcols.len();
    let mut y = vec![zero; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for (l, yl) in y.iter().enumerate().skip(i + 1) {
            acc = acc - hcols[l][i] * yl;
        }
        y[i] = acc / hcols[i][i];
    }
    let mut u = vec![zero; n];
    for (v, yi) in basis.iter().zip(&y) {
        for (x, b) in u.iter_mut().zip(v) {
            *x = *x + *yi * b;
        }
    }
    let relative_residual = system.relative_residual(&u);
    Ok(SolveReport {
        coefficients: u,
        method: SolveMethod::Gmres,
        iterations: m,
        residual_history: history,
        converged,
        relative_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundStatus {
    /// `lambda_min(H(A)) <= 0`: nothing to check.
    Inapplicable,
    Checked { violations: usize, min_margin: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub lambda_min_h: f64,
    pub lambda_min_h_inv: f64,
    /// `1 - lambda_min(H(A)) lambda_min(H(A^-1))`
    pub factor: f64,
    pub status: BoundStatus,
}

impl ContractionReport {
    /// `factor^(j/2)`
    pub fn bound(&self, j: usize) -> f64 {
        self.factor.max(0.0).powf(j as f64 / 2.0)
    }

    pub fn holds(&self) -> bool {
        matches!(self.status, BoundStatus::Checked { violations: 0, .. })
    }
}

/// Absolute allowance for rounding in the residual ratios.
pub const BOUND_ROUNDING: f64 = 4.0 * f64::EPSILON;

/// Checks `||r_j|| / ||r_0|| <= (1 - lambda_min(H(A)) lambda_min(H(A^-1)))^(j/2)`
/// along `history`, with both eigenvalues computed from `system` in binary64.
pub fn contraction_bound_check<T: Real>(system: &GlobalSystem<T>, history: &[f64]) -> Result<ContractionReport> {
    let a = system.matrix.cast::<f64>();
    let lambda_min_h = lambda_min_hermitian_part(&a)?;
    if !(lambda_min_h > 0.0) {
        return Ok(ContractionReport {
            lambda_min_h,
            lambda_min_h_inv: f64::NAN,
            factor: f64::NAN,
            status: BoundStatus::Inapplicable,
        });
    }
    let lambda_min_h_inv = lambda_min_hermitian_part_of_inverse(&a)?;
    let mut report = ContractionReport {
        lambda_min_h,
        lambda_min_h_inv,
        factor: 1.0 - lambda_min_h * lambda_min_h_inv,
        status: BoundStatus::Inapplicable,
    };
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    if let Some(&r0) = history.first() {
        for (j, &r) in history.iter().enumerate() {
            let margin = report.bound(j) - r / r0;
            min_margin = min_margin.min(margin);
            if margin < -BOUND_ROUNDING {
                violations += 1;
            }
        }
    }
    report.status = BoundStatus::Checked { violations, min_margin };
    Ok(report)
}

/// Rounds matrix and right-hand side to `U`; fails if anything overflows.
pub fn precision_cast<T: Real, U: Real>(system: &GlobalSystem<T>) -> Result<GlobalSystem<U>> {
    let out = system.cast::<U>();
    let finite = out.matrix.is_finite() && out.rhs.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if !finite {
        return Err(Error::Numerical(format!("system overflows in {}", U::PRECISION)));
    }
    Ok(out)
}
