//! Reference solutions of the homogeneous Helmholtz equation and the L2 error
//! of a discrete plane wave field against them.

use crate::assembly::PwdgSpace;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::linalg::C64;
use crate::planewave::check_wavenumber;
use crate::quadrature::triangle_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J0,
    J1,
    Y0,
    Y1,
}

/// Bessel functions of integer order 0 and 1 for real arguments.
///
/// `J` accepts any `x >= 0`; `Y` requires `x > 0`.
pub fn bessel(kind: BesselKind, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("Bessel argument is NaN".into()));
    }
    match kind {
        BesselKind::J0 | BesselKind::J1 if x < 0.0 => {
            Err(Error::InvalidArgument(format!("Bessel J evaluated at negative argument {x}")))
        }
        BesselKind::Y0 | BesselKind::Y1 if !(x > 0.0) => {
            Err(Error::InvalidArgument(format!("Bessel Y needs a positive argument, got {x}")))
        }
        BesselKind::J0 => Ok(libm::j0(x)),
        BesselKind::J1 => Ok(libm::j1(x)),
        BesselKind::Y0 => Ok(libm::y0(x)),
        BesselKind::Y1 => Ok(libm::y1(x)),
    }
}

/// `H_0^(1)(x) = J_0(x) + i Y_0(x)`.
pub fn hankel1_0(x: f64) -> Result<C64> {
    Ok(C64::new(bessel(BesselKind::J0, x)?, bessel(BesselKind::Y0, x)?))
}

/// `H_1^(1)(x) = J_1(x) + i Y_1(x)`.
pub fn hankel1_1(x: f64) -> Result<C64> {
    Ok(C64::new(bessel(BesselKind::J1, x)?, bessel(BesselKind::Y1, x)?))
}

/// A smooth exact solution of `-Δu - k²u = 0` near the domain.
pub trait ExactField: Sync {
    fn wavenumber(&self) -> f64;
    fn value(&self, x: Point2) -> C64;
    fn gradient(&self, x: Point2) -> [C64; 2];
}

/// Cylindrical wave `H_0^(1)(k |x - x_s|)` radiating from a point source
/// outside the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelSolution {
    k: f64,
    source: Point2,
}

impl HankelSolution {
    /// Source position used for the unit-square model problem.
    pub const DEFAULT_SOURCE: Point2 = Point2::new(-0.25, 0.0);

    pub fn new(k: f64) -> Result<Self> {
        Self::with_source(k, Self::DEFAULT_SOURCE)
    }

    pub fn with_source(k: f64, source: Point2) -> Result<Self> {
        check_wavenumber(k)?;
        let inside = (0.0..=1.0).contains(&source.x) && (0.0..=1.0).contains(&source.y);
        if inside || !source.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "source point {source} must lie outside the closed unit square"
            )));
        }
        Ok(Self { k, source })
    }

    pub fn source(&self) -> Point2 {
        self.source
    }

    pub fn try_value(&self, x: Point2) -> Result<C64> {
        let r = x.distance(self.source);
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("exact solution evaluated at its source".into()));
        }
        hankel1_0(self.k * r)
    }

    /// `-k H_1^(1)(kr) (x - x_s) / r`.
    pub fn try_gradient(&self, x: Point2) -> Result<[C64; 2]> {
        let d = x - self.source;
        let r = d.norm();
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("exact gradient evaluated at its source".into()));
        }
        let f = -hankel1_1(self.k * r)? * (self.k / r);
        Ok([f * d.x, f * d.y])
    }
}

impl ExactField for HankelSolution {
    fn wavenumber(&self) -> f64 {
        self.k
    }

    /// Panics at the source point, which never lies in the domain.
    fn value(&self, x: Point2) -> C64 {
        self.try_value(x).expect("Hankel solution evaluated at its source")
    }

    fn gradient(&self, x: Point2) -> [C64; 2] {
        self.try_gradient(x).expect("Hankel solution evaluated at its source")
    }
}

/// `exp(i k d . x)` with a unit direction `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveSolution {
    k: f64,
    dir: Point2,
}

impl PlaneWaveSolution {
    pub fn new(k: f64, dir: Point2) -> Result<Self> {
        check_wavenumber(k)?;
        if (dir.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("plane wave direction {dir} is not a unit vector")));
        }
        Ok(Self { k, dir })
    }

    pub fn direction(&self) -> Point2 {
        self.dir
    }
}

impl ExactField for PlaneWaveSolution {
    fn wavenumber(&self) -> f64 {
        self.k
    }

    fn value(&self, x: Point2) -> C64 {
        C64::cis(self.k * self.dir.dot(x))
    }

    fn gradient(&self, x: Point2) -> [C64; 2] {
        let f = C64::new(0.0, self.k) * self.value(x);
        [f * self.dir.x, f * self.dir.y]
    }
}

/// Quadrature points per direction on each fan triangle before refinement.
pub fn base_quadrature_order(k: f64, h: f64) -> usize {
    (k * h).ceil() as usize + 6
}

const MAX_QUADRATURE_ORDER: usize = 512;

/// Error and `(int |u_hp|^2 + |u|^2)^(1/2)` at one Gauss order.
fn l2_error_at_order(space: &PwdgSpace, coefficients: &[C64], exact: &dyn ExactField, order: usize) -> (f64, f64) {
    let p = space.p();
    let mut total = 0.0;
    let mut size = 0.0;
    for (kk, poly) in space.mesh().elements().iter().enumerate() {
        let basis = space.basis(kk);
        let coeffs = &coefficients[kk * p..(kk + 1) * p];
        for tri in poly.fan_triangles() {
            for (x, w) in triangle_rule(&tri, order) {
                let uh = basis.eval_expansion(coeffs, x);
                let u = exact.value(x);
                total += w * (uh - u).norm_sqr();
                size += w * (uh.norm_sqr() + u.norm_sqr());
            }
        }
    }
    (total.sqrt(), size.sqrt())
}

/// Changes below this fraction of the field size are rounding noise.
const L2_NOISE_FLOOR: f64 = 1e-12;

/// `(sum_K int_K |u_hp - u|^2)^(1/2)` on the fan sub-triangulation, doubling
/// the Gauss order until two successive values agree to 0.1%, or differ by
/// less than `1e-12` of the fields' own L2 size.
pub fn l2_error(space: &PwdgSpace, coefficients: &[C64], exact: &dyn ExactField) -> Result<f64> {
    if coefficients.len() != space.dim() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a space of dimension {}",
            coefficients.len(),
            space.dim()
        )));
    }
    let mut order = base_quadrature_order(space.k(), space.mesh().h_max());
    let (mut prev, _) = l2_error_at_order(space, coefficients, exact, order);
    loop {
        order *= 2;
        let (next, size) = l2_error_at_order(space, coefficients, exact, order);
        let change = (next - prev).abs();
        if change <= 1e-3 * next.max(prev) || change <= L2_NOISE_FLOOR * size {
            return Ok(next);
        }
        if order >= MAX_QUADRATURE_ORDER {
            return Err(Error::Numerical(format!(
                "L2 error quadrature not settled at order {order}: {prev} vs {next}"
            )));
        }
        prev = next;
    }
}

/// `||u||_{L2(Omega)}` on the mesh, with the same quadrature as [`l2_error`].
pub fn l2_norm(space: &PwdgSpace, exact: &dyn ExactField) -> Result<f64> {
    l2_error(space, &vec![C64::new(0.0, 0.0); space.dim()], exact)
}
