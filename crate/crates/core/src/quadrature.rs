//! Gauss-Legendre rules on segments and collapsed Gauss rules on triangles.

use std::f64::consts::PI;

use crate::geometry::Point2;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Points and weights mapped to the segment `[a, b]` (weights carry the length).
    pub fn on_segment(&self, a: Point2, b: Point2) -> impl Iterator<Item = (Point2, f64)> + '_ {
        let half = 0.5 * a.distance(b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (a.lerp(b, 0.5 * (t + 1.0)), w * half))
    }

    /// Points and weights on `[lo, hi]`.
    pub fn on_interval(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (lo + half * (t + 1.0), w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss rule collapsed onto a triangle (Duffy map); `n` points per
/// direction, exact for polynomials of degree `2n - 2` in the plane.
pub fn triangle_rule(tri: &[Point2; 3], n: usize) -> Vec<(Point2, f64)> {
    let gl = GaussLegendre::new(n);
    let [a, b, c] = *tri;
    let jac = (b - a).cross(c - a).abs();
    let mut out = Vec::with_capacity(n * n);
    for (u, wu) in gl.on_interval(0.0, 1.0) {
        for (v, wv) in gl.on_interval(0.0, 1.0) {
            // (u, v) in the unit square -> (u, (1-u) v) in the reference triangle
            let s = u;
            let t = (1.0 - u) * v;
            let p = a + (b - a) * s + (c - a) * t;
            out.push((p, wu * wv * (1.0 - u) * jac));
        }
    }
    out
}
