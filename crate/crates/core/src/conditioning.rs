//! Spectral condition numbers, Hermitian parts and the empirical
//! conditioning law for the plane wave mass matrix.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{square, ConvexPolygon};
use crate::linalg::{hermitian_eigenvalues, inverse, singular_values, CMatrix, Real};
use crate::planewave::{local_mass_matrix, make_directions, HermitianMatrix, PlaneWaveBasis};

/// Base of the empirical law `cond_2(M_K) ~ BASE^(p ln p) / (hk)^(p-1)`.
pub const FIT_BASE: f64 = 2.34;

/// Points with a mass matrix condition number at or above this are
/// dominated by rounding and left out of the fit check.
pub const COND_CUTOFF: f64 = 1e15;

/// Only resolved configurations `hk < HK_CUTOFF` enter the fit check.
pub const HK_CUTOFF: f64 = 10.0;

/// `(A + A^H) / 2`.
pub fn hermitian_part<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    assert!(a.is_square(), "Hermitian part of a non-square matrix");
    let half = T::from_f64(0.5);
    let n = a.rows();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            num_complex::Complex::new(a[(i, i)].re, T::zero())
        } else {
            (a[(i, j)] + a[(j, i)].conj()) * half
        }
    })
}

/// `(A - A^H) / 2`.
pub fn skew_hermitian_part<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    assert!(a.is_square(), "skew part of a non-square matrix");
    let half = T::from_f64(0.5);
    let n = a.rows();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            num_complex::Complex::new(T::zero(), a[(i, i)].im)
        } else {
            (a[(i, j)] - a[(j, i)].conj()) * half
        }
    })
}

/// [`hermitian_part`] wrapped as a [`HermitianMatrix`].
pub fn hermitian_part_checked(a: &CMatrix<f64>) -> HermitianMatrix {
    HermitianMatrix::new_unchecked(hermitian_part(a))
}

/// `sigma_max / sigma_min`; `+inf` if the smallest singular value vanishes.
pub fn spectral_cond(m: &CMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension("condition number of a non-square matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let s = singular_values(m)?;
    let (max, min) = (s[0], s[s.len() - 1]);
    if max == 0.0 {
        return Ok(f64::INFINITY);
    }
    if !(min > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Smallest and largest eigenvalue of the Hermitian part of `a`.
pub fn hermitian_part_extremes(a: &CMatrix<f64>) -> Result<(f64, f64)> {
    let ev = hermitian_eigenvalues(&hermitian_part(a))?;
    Ok((ev[0], ev[ev.len() - 1]))
}

/// `lambda_min(H(A))`.
pub fn lambda_min_hermitian_part(a: &CMatrix<f64>) -> Result<f64> {
    hermitian_part_extremes(a).map(|(lo, _)| lo)
}

/// `lambda_min(H(A^{-1}))` with `A^{-1}` formed explicitly.
pub fn lambda_min_hermitian_part_of_inverse(a: &CMatrix<f64>) -> Result<f64> {
    lambda_min_hermitian_part(&inverse(a)?)
}

/// Conditioning diagnostics of one matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondReport {
    pub cond2: f64,
    pub lambda_min_h: f64,
    pub lambda_min_h_inv: f64,
    /// `NaN` unless a fit was requested.
    pub fit_value: f64,
    pub fit_ratio: f64,
}

impl CondReport {
    pub fn new(a: &CMatrix<f64>) -> Result<Self> {
        Ok(Self {
            cond2: spectral_cond(a)?,
            lambda_min_h: lambda_min_hermitian_part(a)?,
            lambda_min_h_inv: lambda_min_hermitian_part_of_inverse(a)?,
            fit_value: f64::NAN,
            fit_ratio: f64::NAN,
        })
    }

    pub fn with_fit(mut self, h: f64, k: f64, p: usize) -> Self {
        self.fit_value = fit_value(h, k, p);
        self.fit_ratio = self.cond2 / self.fit_value;
        self
    }
}

/// `2.34^(p ln p) / (hk)^(p-1)`; may overflow to `+inf`.
pub fn fit_value(h: f64, k: f64, p: usize) -> f64 {
    let p = p as f64;
    (p * p.ln() * FIT_BASE.ln() - (p - 1.0) * (h * k).ln()).exp()
}

/// Which length of a square element is called its size `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SizeConvention {
    Side,
    Diameter,
}

impl SizeConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeConvention::Side => "side",
            SizeConvention::Diameter => "diameter",
        }
    }

    /// Square whose size under this convention is `h`.
    pub fn square(self, h: f64) -> Result<ConvexPolygon> {
        match self {
            SizeConvention::Side => square(h),
            SizeConvention::Diameter => square(h / std::f64::consts::SQRT_2),
        }
    }
}

impl fmt::Display for SizeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "side" => Ok(SizeConvention::Side),
            "diameter" => Ok(SizeConvention::Diameter),
            other => Err(Error::Config(format!("unknown size convention `{other}`"))),
        }
    }
}

/// Condition number of the local mass matrix of `poly` centered at its centroid.
pub fn mass_cond(poly: &ConvexPolygon, k: f64, p: usize, theta0: f64) -> Result<f64> {
    let basis = PlaneWaveBasis::for_element(k, poly, make_directions(p, theta0)?)?;
    spectral_cond(local_mass_matrix(poly, &basis).matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRow {
    pub h: f64,
    pub k: f64,
    pub p: usize,
    pub cond2: f64,
    pub fit: f64,
    pub ratio: f64,
}

/// Square-element scan over all `(h, k, p)` keeping only the points with
/// `hk < 10` and `cond_2 < 1e15`, ordered by `(h, k, p)` as given.
pub fn fit_scan(hs: &[f64], ks: &[f64], ps: &[usize], convention: SizeConvention) -> Result<Vec<FitRow>> {
    if hs.is_empty() || ks.is_empty() || ps.is_empty() {
        return Err(Error::InvalidArgument("fit scan ranges must be non-empty".into()));
    }
    let mut rows = Vec::new();
    for &h in hs {
        let poly = convention.square(h)?;
        for &k in ks {
            if !(h * k < HK_CUTOFF) {
                continue;
            }
            for &p in ps {
                let cond2 = mass_cond(&poly, k, p, 0.0)?;
                if !(cond2 < COND_CUTOFF) {
                    continue;
                }
                let fit = fit_value(h, k, p);
                rows.push(FitRow {
                    h,
                    k,
                    p,
                    cond2,
                    fit,
                    ratio: cond2 / fit,
                });
            }
        }
    }
    Ok(rows)
}

/// Fraction of rows whose ratio lies in `[lo, hi]`.
pub fn fraction_in_band(rows: &[FitRow], lo: f64, hi: f64) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.ratio >= lo && r.ratio <= hi).count() as f64 / rows.len() as f64
}
