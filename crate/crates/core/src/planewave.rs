//! Plane wave spaces on a single element.
//!
//! The local space on `K` is spanned by `exp(i k d_j . (x - x_K))` for `p`
//! equispaced unit directions `d_j`, where `x_K` is the centroid of `K`.
//! Products of two plane waves are again exponentials of a linear phase, so
//! every element or edge integral needed by the method reduces to
//! [`segment_exp_integral`].

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point2};
use crate::linalg::{CMatrix, C64};

/// Below this modulus of the edge phase increment the segment integral
/// switches to its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    theta0: f64,
    dirs: Vec<Point2>,
}

/// `p` unit directions at angles `2 pi (j - 1) / p + theta0`.
pub fn make_directions(p: usize, theta0: f64) -> Result<DirectionSet> {
    if p == 0 {
        return Err(Error::InvalidArgument("need at least one plane wave direction".into()));
    }
    if !theta0.is_finite() {
        return Err(Error::InvalidArgument(format!("direction offset must be finite, got {theta0}")));
    }
    let dirs = (0..p)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / p as f64 + theta0;
            Point2::new(t.cos(), t.sin())
        })
        .collect();
    Ok(DirectionSet { theta0, dirs })
}

impl DirectionSet {
    #[inline]
    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    #[inline]
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    #[inline]
    pub fn as_slice(&self) -> &[Point2] {
        &self.dirs
    }

    #[inline]
    pub fn get(&self, j: usize) -> Point2 {
        self.dirs[j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveBasis {
    k: f64,
    center: Point2,
    dirs: DirectionSet,
}

impl PlaneWaveBasis {
    pub fn new(k: f64, center: Point2, dirs: DirectionSet) -> Result<Self> {
        check_wavenumber(k)?;
        Ok(Self { k, center, dirs })
    }

    /// Basis centered at the centroid of `poly`.
    pub fn for_element(k: f64, poly: &ConvexPolygon, dirs: DirectionSet) -> Result<Self> {
        Self::new(k, poly.centroid(), dirs)
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn center(&self) -> Point2 {
        self.center
    }

    #[inline]
    pub fn directions(&self) -> &DirectionSet {
        &self.dirs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// `exp(i k d_j . (x - x_K))` for every direction.
    pub fn eval_basis(&self, x: Point2) -> Vec<C64> {
        let r = x - self.center;
        self.dirs.as_slice().iter().map(|d| C64::cis(self.k * d.dot(r))).collect()
    }

    /// `i k d_j phi_j(x)` for every direction, as `[d/dx, d/dy]`.
    pub fn eval_grad(&self, x: Point2) -> Vec<[C64; 2]> {
        let r = x - self.center;
        self.dirs
            .as_slice()
            .iter()
            .map(|d| {
                let ikphi = C64::new(0.0, self.k) * C64::cis(self.k * d.dot(r));
                [ikphi * d.x, ikphi * d.y]
            })
            .collect()
    }

    /// Value of the expansion `sum_j coeffs[j] phi_j(x)`.
    pub fn eval_expansion(&self, coeffs: &[C64], x: Point2) -> C64 {
        debug_assert_eq!(coeffs.len(), self.len());
        let r = x - self.center;
        self.dirs
            .as_slice()
            .iter()
            .zip(coeffs)
            .map(|(d, c)| c * C64::cis(self.k * d.dot(r)))
            .sum()
    }
}

pub(crate) fn check_wavenumber(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")))
    }
}

/// `(e^{i t} - 1) / (i t)` without cancellation for small `t`.
#[inline]
fn phase_factor(t: f64) -> C64 {
    if t.abs() < SERIES_THRESHOLD {
        let s = C64::new(0.0, t);
        1.0 + s * (0.5 + s * (1.0 / 6.0 + s / 24.0))
    } else {
        let half = 0.5 * t;
        let sh = half.sin();
        C64::new(t.sin() / t, 2.0 * sh * sh / t)
    }
}

/// `int_a^b exp(i k w . (x - center)) ds` along the straight segment.
pub fn segment_exp_integral(k: f64, w: Point2, a: Point2, b: Point2, center: Point2) -> Result<C64> {
    if a == b {
        return Err(Error::Geometry(format!("degenerate segment at {a}")));
    }
    Ok(segment_exp_integral_unchecked(k, w, a, b, center))
}

#[inline]
pub(crate) fn segment_exp_integral_unchecked(k: f64, w: Point2, a: Point2, b: Point2, center: Point2) -> C64 {
    let t = b - a;
    let start = C64::cis(k * w.dot(a - center));
    start * phase_factor(k * w.dot(t)) * t.norm()
}

/// Hermitian matrix with its symmetry verified at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix<f64>);

impl HermitianMatrix {
    /// Relative tolerance for the symmetry check.
    pub const TOLERANCE: f64 = 1e-13;

    pub fn new(m: CMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} matrix is not square", m.rows(), m.cols())));
        }
        let tol = Self::TOLERANCE * m.max_abs();
        for i in 0..m.rows() {
            for j in 0..=i {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                    return Err(Error::Numerical(format!("matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: CMatrix<f64>) -> Self {
        Self(m)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix<f64> {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// L2 Gram matrix `M[j][l] = int_K phi_j conj(phi_l)` of the plane waves on
/// `poly`: `|K|` on the diagonal, boundary integrals off it.
pub fn local_mass_matrix(poly: &ConvexPolygon, basis: &PlaneWaveBasis) -> HermitianMatrix {
    let p = basis.len();
    let k = basis.k();
    let c = basis.center();
    let area = poly.area();
    let dirs = basis.directions().as_slice();
    let mut m = CMatrix::zeros(p, p);
    for j in 0..p {
        m[(j, j)] = Complex::new(area, 0.0);
        for l in 0..j {
            let w = dirs[j] - dirs[l];
            let ww = w.dot(w);
            let mut acc = C64::new(0.0, 0.0);
            for (a, b, n) in poly.edges() {
                let factor = C64::new(0.0, -k * w.dot(n) / (k * k * ww));
                acc += factor * segment_exp_integral_unchecked(k, w, a, b, c);
            }
            m[(j, l)] = acc;
            m[(l, j)] = acc.conj();
        }
    }
    HermitianMatrix::new_unchecked(m)
}
