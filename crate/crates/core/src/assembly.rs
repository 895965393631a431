//! Global PWDG system for the impedance problem.
//!
//! Unknowns are ordered element-major: the coefficient of direction `j` on
//! element `K` sits at `K * p + j`. Entry `A[row][col]` is the sesquilinear
//! form evaluated with the trial function of `col` and the (conjugated) test
//! function of `row`.
//!
//! With `{{v}} = (v_K + v_K')/2`, `[[v]] = v_K n_K + v_K' n_K'` and
//! `[[grad v]] = grad v_K . n_K + grad v_K' . n_K'`, every term of the form
//! collapses for a pair of plane waves to a real direction-dependent factor
//! times `int_F phi_j conj(phi_l) ds`. Writing `a = d_j . n`, `b = d_l . n`
//! with `n` the normal out of the edge's left element:
//!
//! * boundary edge, and interior edge with trial and test on the same side:
//!   `k/2 (1 - s a)(1 - s b)` with `s = +1` on the left, `-1` on the right;
//! * interior edge, trial on the left and test on the right:
//!   `-k/2 (1 - a)(1 - b)`;
//! * interior edge, trial on the right and test on the left:
//!   `-k/2 (1 + a)(1 + b)`.
//!
//! The load vector is `l(phi_l) = -i/2 int_{dOmega} g conj(phi_l) (1 + d_l . n) ds`.

use num_complex::Complex;

use crate::analytic::ExactField;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::linalg::{cast_complex, CMatrix, Precision, Real, C64};
use crate::mesh::{Edge, Mesh};
use crate::planewave::{check_wavenumber, make_directions, segment_exp_integral_unchecked, DirectionSet, PlaneWaveBasis};
use crate::quadrature::GaussLegendre;

/// Plane wave space on a mesh: the same `p` directions on every element,
/// each element's waves centered at its centroid.
#[derive(Debug, Clone)]
pub struct PwdgSpace {
    mesh: Mesh,
    k: f64,
    dirs: DirectionSet,
    bases: Vec<PlaneWaveBasis>,
}

impl PwdgSpace {
    pub fn new(mesh: Mesh, k: f64, p: usize, theta0: f64) -> Result<Self> {
        check_wavenumber(k)?;
        let dirs = make_directions(p, theta0)?;
        let bases = mesh
            .elements()
            .iter()
            .map(|poly| PlaneWaveBasis::for_element(k, poly, dirs.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mesh, k, dirs, bases })
    }

    #[inline]
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.dirs.len()
    }

    #[inline]
    pub fn directions(&self) -> &DirectionSet {
        &self.dirs
    }

    #[inline]
    pub fn basis(&self, element: usize) -> &PlaneWaveBasis {
        &self.bases[element]
    }

    /// Total number of unknowns `p * #elements`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.p() * self.mesh.num_elements()
    }

    /// Value of the discrete field with `coefficients` at `x` in `element`.
    pub fn eval(&self, coefficients: &[C64], element: usize, x: Point2) -> C64 {
        let p = self.p();
        self.bases[element].eval_expansion(&coefficients[element * p..(element + 1) * p], x)
    }
}

/// Impedance datum `g` on the domain boundary. It is evaluated per edge, so
/// corners take the value belonging to the edge being integrated.
pub trait BoundarySource: Sync {
    fn eval(&self, x: Point2, outward_normal: Point2) -> C64;
}

impl<F> BoundarySource for F
where
    F: Fn(Point2, Point2) -> C64 + Sync,
{
    fn eval(&self, x: Point2, outward_normal: Point2) -> C64 {
        self(x, outward_normal)
    }
}

/// `g = grad u . n + i k u` for an exact solution `u`.
#[derive(Debug, Clone, Copy)]
pub struct ImpedanceData<'a, U: ExactField + ?Sized> {
    exact: &'a U,
}

pub fn impedance_data_from_exact<U: ExactField + ?Sized>(exact: &U) -> ImpedanceData<'_, U> {
    ImpedanceData { exact }
}

impl<U: ExactField + ?Sized> BoundarySource for ImpedanceData<'_, U> {
    fn eval(&self, x: Point2, n: Point2) -> C64 {
        let g = self.exact.gradient(x);
        g[0] * n.x + g[1] * n.y + C64::new(0.0, self.exact.wavenumber()) * self.exact.value(x)
    }
}

/// `A u = b` with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSystem<T: Real> {
    pub matrix: CMatrix<T>,
    pub rhs: Vec<Complex<T>>,
    block_size: usize,
}

impl<T: Real> GlobalSystem<T> {
    pub fn new(matrix: CMatrix<T>, rhs: Vec<Complex<T>>, block_size: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != rhs.len() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix with {} right-hand side entries",
                matrix.rows(),
                matrix.cols(),
                rhs.len()
            )));
        }
        if block_size == 0 || matrix.rows() % block_size != 0 {
            return Err(Error::Dimension(format!(
                "block size {block_size} does not divide {}",
                matrix.rows()
            )));
        }
        Ok(Self {
            matrix,
            rhs,
            block_size,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    #[inline]
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.dim() / self.block_size
    }

    #[inline]
    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    /// Diagonal block `A_K` of element `k`.
    pub fn local_block(&self, element: usize) -> Result<CMatrix<T>> {
        if element >= self.num_blocks() {
            return Err(Error::InvalidArgument(format!(
                "element {element} out of range ({} elements)",
                self.num_blocks()
            )));
        }
        let p = self.block_size;
        Ok(self.matrix.block(element * p, element * p, p, p))
    }

    /// Block `(test element, trial element)`.
    pub fn block(&self, test: usize, trial: usize) -> CMatrix<T> {
        let p = self.block_size;
        self.matrix.block(test * p, trial * p, p, p)
    }

    /// `||A x - b|| / ||b||`.
    pub fn relative_residual(&self, x: &[Complex<T>]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<C64> = ax.iter().zip(&self.rhs).map(|(a, b)| cast_complex::<T, f64>(*a - *b)).collect();
        let b: Vec<C64> = self.rhs.iter().map(|&z| cast_complex(z)).collect();
        crate::linalg::norm2(&r) / crate::linalg::norm2(&b)
    }

    /// Entrywise rounding to another precision.
    pub fn cast<U: Real>(&self) -> GlobalSystem<U> {
        GlobalSystem {
            matrix: self.matrix.cast(),
            rhs: self.rhs.iter().map(|&z| cast_complex(z)).collect(),
            block_size: self.block_size,
        }
    }

    /// Writes `N` followed by the rows of `A` and then the entries of `b`,
    /// each complex number as `re im`.
    pub fn write_text<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let n = self.dim();
        writeln!(out, "{n}")?;
        for i in 0..n {
            let row: Vec<String> = self
                .matrix
                .row(i)
                .iter()
                .map(|z| format!("{} {}", z.re, z.im))
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        writeln!(out, "{n}")?;
        for z in &self.rhs {
            writeln!(out, "{} {}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// Gauss points per boundary edge for the load vector.
pub fn rhs_quadrature_points(k: f64, length: f64) -> usize {
    2 * (k * length).ceil() as usize + 20
}

/// Interior-edge coupling factor for trial on side `sa` and test on side `sb`
/// (`+1` left, `-1` right).
#[inline]
fn interior_factor(k: f64, sa: f64, sb: f64, a: f64, b: f64) -> f64 {
    0.5 * k * (sa * sb * (a * b + 1.0) - sb * (a + b))
}

#[inline]
fn boundary_factor(k: f64, a: f64, b: f64) -> f64 {
    0.5 * k * (1.0 - a) * (1.0 - b)
}

fn add_edge_block(
    matrix: &mut CMatrix<f64>,
    space: &PwdgSpace,
    edge: &Edge,
    trial: (usize, f64),
    test: (usize, f64),
    boundary: bool,
) {
    let p = space.p();
    let k = space.k();
    let dirs = space.directions().as_slice();
    let (ea, sa) = trial;
    let (eb, sb) = test;
    let ca = space.basis(ea).center();
    let cb = space.basis(eb).center();
    let n = edge.normal;
    for l in 0..p {
        let dl = dirs[l];
        let b = dl.dot(n);
        for j in 0..p {
            let dj = dirs[j];
            let a = dj.dot(n);
            let factor = if boundary {
                boundary_factor(k, a, b)
            } else {
                interior_factor(k, sa, sb, a, b)
            };
            if factor == 0.0 {
                continue;
            }
            let shift = C64::cis(k * dj.dot(cb - ca));
            let integral = segment_exp_integral_unchecked(k, dj - dl, edge.a, edge.b, cb);
            matrix[(eb * p + l, ea * p + j)] += shift * integral * factor;
        }
    }
}

/// Assembles `A` and `b` for impedance datum `g`.
pub fn assemble(space: &PwdgSpace, g: &dyn BoundarySource) -> Result<GlobalSystem<f64>> {
    let p = space.p();
    let n = space.dim();
    let k = space.k();
    let mut matrix = CMatrix::zeros(n, n);
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    let dirs = space.directions().as_slice();

    for edge in space.mesh().edges() {
        let left = edge.left;
        match edge.right {
            Some(right) => {
                for trial in [(left, 1.0), (right, -1.0)] {
                    for test in [(left, 1.0), (right, -1.0)] {
                        add_edge_block(&mut matrix, space, edge, trial, test, false);
                    }
                }
            }
            None => {
                add_edge_block(&mut matrix, space, edge, (left, 1.0), (left, 1.0), true);
                let basis = space.basis(left);
                let nq = rhs_quadrature_points(k, edge.length());
                let gl = GaussLegendre::new(nq);
                for (x, w) in gl.on_segment(edge.a, edge.b) {
                    let gx = g.eval(x, edge.normal) * w;
                    if !(gx.re.is_finite() && gx.im.is_finite()) {
                        return Err(Error::Numerical(format!("impedance datum is not finite at {x}")));
                    }
                    for (l, phi) in basis.eval_basis(x).into_iter().enumerate() {
                        let weight = 1.0 + dirs[l].dot(edge.normal);
                        rhs[left * p + l] += C64::new(0.0, -0.5) * gx * phi.conj() * weight;
                    }
                }
            }
        }
    }
    GlobalSystem::new(matrix, rhs, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::PlaneWaveSolution;
    use crate::linalg::LuFactor;
    use crate::mesh::{unit_square_mesh, MeshKind};

    #[test]
    fn plane_wave_impedance_data() {
        let d = Point2::new(0.6, 0.8);
        let sol = PlaneWaveSolution::new(3.0, d).unwrap();
        let g = impedance_data_from_exact(&sol);
        let x = Point2::new(1.0, 0.25);
        let n = Point2::new(1.0, 0.0);
        let expected = C64::new(0.0, 3.0) * (d.dot(n) + 1.0) * C64::cis(3.0 * d.dot(x));
        assert!((g.eval(x, n) - expected).norm() < 1e-14);
        // corner: the two sides see different normals
        let corner = Point2::new(1.0, 1.0);
        assert!((g.eval(corner, n) - g.eval(corner, Point2::new(0.0, 1.0))).norm() > 1e-3);
    }

    #[test]
    fn one_element_one_direction_is_exact() {
        let mesh = unit_square_mesh(MeshKind::Quad, 1).unwrap();
        let space = PwdgSpace::new(mesh, 6.0, 1, 0.0).unwrap();
        let d = space.directions().get(0);
        let sol = PlaneWaveSolution::new(6.0, d).unwrap();
        let sys = assemble(&space, &impedance_data_from_exact(&sol)).unwrap();
        let u = LuFactor::new(&sys.matrix).unwrap().solve(&sys.rhs);
        // u = exp(ikd.x) = exp(ikd.x_K) phi(x)
        let expected = C64::cis(6.0 * d.dot(space.basis(0).center()));
        assert!((u[0] - expected).norm() < 1e-12, "{} vs {expected}", u[0]);
        assert!(sys.relative_residual(&[expected]) < 1e-12);
        assert_eq!(sys.local_block(0).unwrap(), sys.matrix);
    }

    #[test]
    fn block_sparsity() {
        let mesh = unit_square_mesh(MeshKind::Poly, 3).unwrap();
        let space = PwdgSpace::new(mesh.clone(), 5.0, 3, 0.0).unwrap();
        let sys = assemble(&space, &|_: Point2, _: Point2| C64::new(1.0, 0.0)).unwrap();
        for a in 0..mesh.num_elements() {
            let nb = mesh.neighbors(a);
            for b in 0..mesh.num_elements() {
                let blk = sys.block(a, b);
                if a != b && !nb.contains(&b) {
                    assert_eq!(blk.max_abs(), 0.0);
                } else {
                    assert!(blk.max_abs() > 0.0);
                }
            }
        }
        assert!(sys.local_block(mesh.num_elements()).is_err());
    }

    #[test]
    fn assembly_does_not_depend_on_edge_orientation() {
        let mesh = unit_square_mesh(MeshKind::Tri, 3).unwrap();
        let flipped = mesh.with_flipped_interior_edges();
        let g = |x: Point2, n: Point2| C64::new(x.x + n.y, x.y);
        let a = assemble(&PwdgSpace::new(mesh, 7.0, 5, 0.1).unwrap(), &g).unwrap();
        let b = assemble(&PwdgSpace::new(flipped, 7.0, 5, 0.1).unwrap(), &g).unwrap();
        let scale = a.matrix.max_abs();
        assert!(a.matrix.sub(&b.matrix).max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn system_text_dump() {
        let mesh = unit_square_mesh(MeshKind::Quad, 1).unwrap();
        let space = PwdgSpace::new(mesh, 2.0, 2, 0.0).unwrap();
        let sys = assemble(&space, &|_: Point2, _: Point2| C64::new(1.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        sys.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "2");
        assert_eq!(lines[1].split_whitespace().count(), 4);
        assert_eq!(lines.len(), 1 + 2 + 1 + 2);
    }

    #[test]
    fn rejects_bad_wavenumber() {
        let mesh = unit_square_mesh(MeshKind::Quad, 1).unwrap();
        assert!(PwdgSpace::new(mesh, -1.0, 3, 0.0).is_err());
    }
}
