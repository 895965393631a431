//! Points and convex polygons in the plane.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Rotated by -90 degrees; for a counterclockwise boundary this is the outward side.
    #[inline]
    pub fn perp_cw(self) -> Self {
        Self::new(self.y, -self.x)
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonMetrics {
    pub area: f64,
    pub centroid: Point2,
    pub diameter: f64,
}

/// A strictly convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    id: usize,
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(id: usize, vertices: Vec<Point2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("polygon {id} has {n} vertices, need at least 3")));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::Geometry(format!("polygon {id} has non-finite vertex {v}")));
        }
        for i in 0..n {
            for j in i + 1..n {
                if vertices[i] == vertices[j] {
                    return Err(Error::Geometry(format!("polygon {id} repeats vertex {}", vertices[i])));
                }
            }
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(Error::Geometry(format!(
                    "polygon {id} is not strictly convex and counterclockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        // a star-shaped self-intersecting loop also has positive turns; reject total turning > 2pi
        let turning: f64 = (0..n)
            .map(|i| {
                let e0 = vertices[(i + 1) % n] - vertices[i];
                let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
                e0.cross(e1).atan2(e0.dot(e1))
            })
            .sum();
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::Geometry(format!("polygon {id} winds more than once")));
        }
        Ok(Self { id, vertices })
    }

    #[inline]
    pub fn id(&self) -> usize {
        self.id
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Boundary segments `(a, b, outward unit normal)` in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let t = b - a;
            (a, b, t.perp_cw() * (1.0 / t.norm()))
        })
    }

    pub fn area(&self) -> f64 {
        self.metrics().area
    }

    pub fn centroid(&self) -> Point2 {
        self.metrics().centroid
    }

    pub fn diameter(&self) -> f64 {
        self.metrics().diameter
    }

    /// Shoelace area, first-moment centroid and largest vertex-to-vertex distance.
    pub fn metrics(&self) -> PolygonMetrics {
        let v = &self.vertices;
        let origin = v[0];
        let mut twice_area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 1..v.len() - 1 {
            let a = v[i] - origin;
            let b = v[i + 1] - origin;
            let cr = a.cross(b);
            twice_area += cr;
            cx += (a.x + b.x) * cr;
            cy += (a.y + b.y) * cr;
        }
        let area = 0.5 * twice_area;
        let centroid = origin + Point2::new(cx, cy) * (1.0 / (3.0 * twice_area));
        let mut diameter: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                diameter = diameter.max(v[i].distance(v[j]));
            }
        }
        PolygonMetrics { area, centroid, diameter }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, _, n)| (p - a).dot(n) <= 1e-12)
    }

    pub fn translated(&self, shift: Point2) -> Self {
        Self {
            id: self.id,
            vertices: self.vertices.iter().map(|&v| v + shift).collect(),
        }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        Self {
            id: self.id,
            vertices: self.vertices.iter().map(|&v| v.rotated(angle)).collect(),
        }
    }

    /// Fan triangles `(centroid, v_i, v_{i+1})`.
    pub fn fan_triangles(&self) -> Vec<[Point2; 3]> {
        let c = self.centroid();
        self.edges().map(|(a, b, _)| [c, a, b]).collect()
    }
}

/// Regular `n`-gon centered at the origin whose diameter (largest
/// vertex-to-vertex distance) is `h`; the bottom side is horizontal.
pub fn regular_polygon(n: usize, h: f64) -> Result<ConvexPolygon> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("regular polygon needs n >= 3, got {n}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("diameter must be positive, got {h}")));
    }
    let nf = n as f64;
    // longest chord spans floor(n/2) sides
    let radius = h / (2.0 * (PI * (n / 2) as f64 / nf).sin());
    let start = -PI / 2.0 - PI / nf;
    let vertices = (0..n)
        .map(|j| {
            let t = start + 2.0 * PI * j as f64 / nf;
            Point2::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    ConvexPolygon::new(0, vertices)
}

/// Axis-aligned rectangle centered at the origin with side ratio `aspect`
/// (wide over tall) and diagonal `h`.
pub fn aniso_rectangle(aspect: f64, h: f64) -> Result<ConvexPolygon> {
    if !(aspect >= 1.0) || !aspect.is_finite() {
        return Err(Error::InvalidArgument(format!("aspect ratio must be >= 1, got {aspect}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("diameter must be positive, got {h}")));
    }
    let short = h / (aspect * aspect + 1.0).sqrt();
    let hx = 0.5 * aspect * short;
    let hy = 0.5 * short;
    ConvexPolygon::new(
        0,
        vec![
            Point2::new(-hx, -hy),
            Point2::new(hx, -hy),
            Point2::new(hx, hy),
            Point2::new(-hx, hy),
        ],
    )
}

/// Axis-aligned square of side `side` centered at the origin.
pub fn square(side: f64) -> Result<ConvexPolygon> {
    aniso_rectangle(1.0, side * std::f64::consts::SQRT_2)
}
