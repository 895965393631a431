//! Quadrature oracles shared by the integration tests. They evaluate the
//! jump/average form term by term, without the closed-form edge factors.

#![allow(dead_code)]

pub mod bessel_series;

use std::f64::consts::PI;

use pwdg::assembly::{BoundarySource, PwdgSpace};
use pwdg::geometry::{ConvexPolygon, Point2};
use pwdg::linalg::{CMatrix, C64};
use pwdg::mesh::{Mesh, MeshKind};
use pwdg::planewave::PlaneWaveBasis;
use pwdg::quadrature::{triangle_rule, GaussLegendre};
use rand::Rng;

const I: C64 = C64::new(0.0, 1.0);

/// Composite 40-point Gauss on `[a, b]` with panels short enough that a
/// phase changing at rate `rate` moves by at most 2 per panel.
pub fn composite_segment(a: Point2, b: Point2, rate: f64) -> Vec<(Point2, f64)> {
    let gl = GaussLegendre::new(40);
    let panels = (rate * a.distance(b) / 2.0).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(40 * panels);
    for i in 0..panels {
        let pa = a.lerp(b, i as f64 / panels as f64);
        let pb = a.lerp(b, (i + 1) as f64 / panels as f64);
        out.extend(gl.on_segment(pa, pb));
    }
    out
}

fn dot(g: [C64; 2], n: Point2) -> C64 {
    g[0] * n.x + g[1] * n.y
}

/// Traces of all `p` plane waves of `element` at `x`: value and normal derivative.
fn traces(space: &PwdgSpace, element: usize, x: Point2, n: Point2) -> Vec<(C64, C64)> {
    let basis = space.basis(element);
    basis.eval_basis(x).into_iter().zip(basis.eval_grad(x)).map(|(v, g)| (v, dot(g, n))).collect()
}

/// Entry-by-entry values of `A_h(phi_col, phi_row)` from the jump/average
/// definitions, each with the integral of the summed term magnitudes.
pub struct FormOracle {
    pub values: CMatrix<f64>,
    pub scales: CMatrix<f64>,
}

impl FormOracle {
    pub fn new(space: &PwdgSpace) -> Self {
        let k = space.k();
        let p = space.p();
        let n_dof = space.dim();
        let mut values = CMatrix::zeros(n_dof, n_dof);
        let mut scales = CMatrix::zeros(n_dof, n_dof);
        for edge in space.mesh().edges() {
            let n = edge.normal;
            for (x, w) in composite_segment(edge.a, edge.b, 2.0 * k) {
                match edge.right {
                    Some(right) => {
                        // (global index, side sign, value, normal derivative)
                        let mut fns = Vec::with_capacity(2 * p);
                        for (element, sign) in [(edge.left, 1.0), (right, -1.0)] {
                            for (j, (v, dn)) in traces(space, element, x, n).into_iter().enumerate() {
                                fns.push((element * p + j, sign, v, dn));
                            }
                        }
                        for &(row, sb, v, dv) in &fns {
                            // [[v]] = sb v n, [[grad v]] = sb dv
                            let jv = (v * sb).conj();
                            let jgv = (dv * sb).conj();
                            for &(col, sa, u, du) in &fns {
                                // {{u}} = u/2, {{grad u}}.n = du/2, [[u]] = sa u n, [[grad u]] = sa du
                                let terms = [
                                    -I * (u * 0.5) * jgv,
                                    I * (du * 0.5) * jv,
                                    (du * sa) * jgv / (2.0 * k),
                                    (u * sa) * jv * (k / 2.0),
                                ];
                                values[(row, col)] += terms.iter().sum::<C64>() * w;
                                scales[(row, col)].re += terms.iter().map(|z| z.norm()).sum::<f64>() * w;
                            }
                        }
                    }
                    None => {
                        let t = traces(space, edge.left, x, n);
                        let base = edge.left * p;
                        for (l, &(v, dv)) in t.iter().enumerate() {
                            for (j, &(u, du)) in t.iter().enumerate() {
                                let terms = [
                                    -I * 0.5 * u * dv.conj(),
                                    I * 0.5 * du * v.conj(),
                                    du * dv.conj() / (2.0 * k),
                                    u * v.conj() * (k / 2.0),
                                ];
                                values[(base + l, base + j)] += terms.iter().sum::<C64>() * w;
                                scales[(base + l, base + j)].re += terms.iter().map(|z| z.norm()).sum::<f64>() * w;
                            }
                        }
                    }
                }
            }
        }
        Self { values, scales }
    }

    /// Largest `|a - oracle| / scale` over all entries.
    pub fn worst_error(&self, a: &CMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                worst = worst.max(scaled_error(a[(i, j)], self.values[(i, j)], self.scales[(i, j)].re));
            }
        }
        worst
    }
}

/// `l_h(phi) = sum_F (1/2k) int g conj(grad phi . n) - i/2 int g conj(phi)`
/// for every test function, with the integrated term magnitudes.
pub fn load_oracle(space: &PwdgSpace, g: &dyn BoundarySource) -> (Vec<C64>, Vec<f64>) {
    let k = space.k();
    let p = space.p();
    let mut values = vec![C64::new(0.0, 0.0); space.dim()];
    let mut scales = vec![0.0; space.dim()];
    for edge in space.mesh().boundary_edges() {
        for (x, w) in composite_segment(edge.a, edge.b, 2.0 * k) {
            let gx = g.eval(x, edge.normal);
            for (l, (v, dv)) in traces(space, edge.left, x, edge.normal).into_iter().enumerate() {
                let terms = [gx * dv.conj() / (2.0 * k), -I * 0.5 * gx * v.conj()];
                values[edge.left * p + l] += terms.iter().sum::<C64>() * w;
                scales[edge.left * p + l] += terms.iter().map(|z| z.norm()).sum::<f64>() * w;
            }
        }
    }
    (values, scales)
}

/// Penalty part of `A_h(v, v)`: jumps of `v` and of its normal derivative,
/// plus the boundary traces.
pub fn penalty_oracle(space: &PwdgSpace, coeffs: &[C64]) -> f64 {
    let k = space.k();
    let p = space.p();
    let field = |e: usize, x: Point2| -> (C64, [C64; 2]) {
        let basis = space.basis(e);
        let c = &coeffs[e * p..(e + 1) * p];
        let vals = basis.eval_basis(x);
        let grads = basis.eval_grad(x);
        let mut u = C64::new(0.0, 0.0);
        let mut g = [u, u];
        for j in 0..p {
            u += c[j] * vals[j];
            g[0] += c[j] * grads[j][0];
            g[1] += c[j] * grads[j][1];
        }
        (u, g)
    };
    let mut total = 0.0;
    for edge in space.mesh().edges() {
        let n = edge.normal;
        for (x, w) in composite_segment(edge.a, edge.b, 2.0 * k) {
            let (ul, gl) = field(edge.left, x);
            match edge.right {
                Some(r) => {
                    let (ur, gr) = field(r, x);
                    let ju = (ul - ur).norm_sqr(); // |[[v]]|^2 = |v_K - v_K'|^2 |n|^2
                    let jg = (dot(gl, n) - dot(gr, n)).norm_sqr();
                    total += w * (jg / (2.0 * k) + 0.5 * k * ju);
                }
                None => {
                    total += w * (dot(gl, n).norm_sqr() / (2.0 * k) + 0.5 * k * ul.norm_sqr());
                }
            }
        }
    }
    total
}

/// Mass matrix by Gauss quadrature on the fan triangles.
pub fn mass_oracle(poly: &ConvexPolygon, basis: &PlaneWaveBasis) -> CMatrix<f64> {
    let p = basis.len();
    let order = (2.0 * basis.k() * poly.diameter()).ceil() as usize / 2 + 25;
    let mut m = CMatrix::zeros(p, p);
    for tri in poly.fan_triangles() {
        for (x, w) in triangle_rule(&tri, order) {
            let v = basis.eval_basis(x);
            for j in 0..p {
                for l in 0..p {
                    m[(j, l)] += v[j] * v[l].conj() * w;
                }
            }
        }
    }
    m
}

/// Random strictly convex polygon: points at sorted random angles on an
/// ellipse, scaled to diameter roughly `size`, randomly rotated and shifted.
pub fn random_convex_polygon<R: Rng>(rng: &mut R, size: f64) -> Vec<Point2> {
    let n = rng.random_range(3..=9);
    // one vertex per sector, kept apart by at least 0.4 of a sector
    let angles: Vec<f64> = (0..n)
        .map(|i| 2.0 * PI * (i as f64 + 0.6 * rng.random_range(0.0..1.0)) / n as f64)
        .collect();
    let ratio = rng.random_range(0.3..1.0);
    let rot = rng.random_range(0.0..2.0 * PI);
    let shift = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    angles
        .iter()
        .map(|&t| Point2::new(0.5 * size * t.cos(), 0.5 * size * ratio * t.sin()).rotated(rot) + shift)
        .collect()
}

/// Two-element mesh: `poly` and its mirror image across its first edge.
pub fn mirrored_pair(poly: &[Point2]) -> Mesh {
    let a = poly[0];
    let b = poly[1];
    let t = (b - a) * (1.0 / a.distance(b));
    let reflect = |x: Point2| {
        let r = x - a;
        let along = t * r.dot(t);
        a + along * 2.0 - r
    };
    let mut mirror: Vec<Point2> = poly.iter().map(|&x| reflect(x)).collect();
    mirror.reverse();
    Mesh::from_polygons(MeshKind::Poly, &[poly.to_vec(), mirror]).expect("mirrored pair is a valid mesh")
}

/// `|got - want| <= tol * scale`, reporting the worst ratio.
pub fn scaled_error(got: C64, want: C64, scale: f64) -> f64 {
    (got - want).norm() / scale.max(f64::MIN_POSITIVE)
}
